//! Sweep-level invariants at seed 7.

use epr_sim::montecarlo::{REFERENCE_PAIRS, REFERENCE_TRIALS};
use epr_sim::{sweep, ModelSpec, SweepOptions};

const SEED: u64 = 7;

#[test]
fn saturated_rates_do_not_depend_on_pair_count() {
    let report = sweep(
        &ModelSpec::Saturated,
        &[200, 400, 800],
        2000,
        SEED,
        SweepOptions { workers: 4 },
    )
    .unwrap();
    for row in &report.rows {
        let bell = row.bell_violation_rate() * 100.0;
        let chsh = row.chsh_violation_rate() * 100.0;
        assert!((bell - 50.0).abs() <= 4.0, "n={} Bell {bell:.2}%", row.n);
        assert!((chsh - 50.0).abs() <= 4.0, "n={} CHSH {chsh:.2}%", row.n);
        assert_eq!(row.anticorr_imperfect, 0);
        // CHSH and Bell violations are not nested in either direction.
        assert!(
            row.bell_only_violated > 0 && row.chsh_only_violated > 0,
            "{row:?}"
        );
    }
}

#[test]
fn quantum_non_violation_falls_as_pairs_double() {
    let report = sweep(
        &ModelSpec::Quantum,
        &REFERENCE_PAIRS,
        REFERENCE_TRIALS,
        SEED,
        SweepOptions { workers: 4 },
    )
    .unwrap();
    for w in report.rows.windows(2) {
        assert!(
            w[1].bell_obeyed < w[0].bell_obeyed,
            "{:?}",
            (w[0].n, w[1].n)
        );
        assert!(w[1].chsh_obeyed <= w[0].chsh_obeyed);
    }
}

#[test]
fn report_is_independent_of_workers() {
    let run = |workers| {
        sweep(
            &ModelSpec::Cheating,
            &[40, 160],
            300,
            SEED,
            SweepOptions { workers },
        )
        .unwrap()
    };
    let serial = run(1);
    assert_eq!(serial, run(3));
    assert_eq!(serial, run(8));
    assert_eq!(
        serde_json::to_string(&serial).unwrap(),
        serde_json::to_string(&run(8)).unwrap()
    );
}
