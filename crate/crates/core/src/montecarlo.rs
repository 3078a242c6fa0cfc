//! Single trials and repeated-trial sweeps.
//!
//! Trial `t` of the sweep point with `n` pairs is seeded with
//! [`trial_seed`]`(master, n, t)`, and every pair inside it draws from its own
//! substream, so a report is the same for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EprError, Result};
use crate::hv::HvModel;
use crate::model::ModelSpec;
use crate::quantum::{draw_setting, quantum_measure};
use crate::rng::{pair_stream, trial_seed, Channel};
use crate::setting::PairRecord;
use crate::stats::{
    anticorr_audit, bell_test, chsh, AntiCorrResult, BellResult, ChshResult, ClassConfigMatrix,
    Tally,
};

/// CHSH outcome of one trial; a trial with an empty configuration has no S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ChshOutcome {
    Computed(ChshResult),
    Indeterminate { empty_config: usize },
}

impl ChshOutcome {
    pub fn result(&self) -> Option<&ChshResult> {
        match self {
            ChshOutcome::Computed(r) => Some(r),
            ChshOutcome::Indeterminate { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub tally: Tally,
    pub bell: BellResult,
    pub chsh: ChshOutcome,
    /// `None` when no pair was measured at equal angles.
    pub anticorr: Option<AntiCorrResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_matrix: Option<ClassConfigMatrix>,
}

impl TrialResult {
    /// Evaluates every statistic from one tally.
    pub fn evaluate(tally: Tally, class_matrix: Option<ClassConfigMatrix>) -> Self {
        let chsh = match chsh(&tally) {
            Ok(r) => ChshOutcome::Computed(r),
            Err(EprError::InsufficientSamples { config }) => ChshOutcome::Indeterminate {
                empty_config: config,
            },
            Err(e) => unreachable!("chsh only fails on empty configurations: {e}"),
        };
        TrialResult {
            bell: bell_test(&tally),
            chsh,
            anticorr: anticorr_audit(&tally).ok(),
            tally,
            class_matrix,
        }
    }

    pub fn from_records(records: &[PairRecord]) -> Self {
        Self::evaluate(records.iter().collect(), None)
    }

    pub fn anticorr_perfect(&self) -> bool {
        self.anticorr.is_none_or(|a| a.is_perfect())
    }
}

/// Simulates pair `pair` of a trial. Returns the record and, for
/// hidden-variable models, the pair's class before any transformation.
pub fn simulate_pair(model: &ModelSpec, seed: u64, pair: u64) -> Result<(PairRecord, Option<u8>)> {
    let mut measure = pair_stream(seed, pair, Channel::Measure);
    let setting = draw_setting(&mut measure);
    let (alice, bob, class) = match model {
        ModelSpec::Quantum => {
            let (a, b) = quantum_measure(&mut measure, setting);
            (a, b, None)
        }
        other => {
            let hv = HvModel::try_from(other)?;
            let prepared = hv.prepare(&mut pair_stream(seed, pair, Channel::Prepare));
            (
                hv.measure_alice(&prepared, setting.a),
                hv.measure_bob(&prepared, setting.b),
                Some(prepared.original_class),
            )
        }
    };
    Ok((
        PairRecord {
            pair_id: pair,
            setting,
            alice,
            bob,
        },
        class,
    ))
}

/// All pair records of one trial.
pub fn simulate_trial(model: &ModelSpec, n: u64, seed: u64) -> Result<Vec<PairRecord>> {
    if n == 0 {
        return Err(EprError::ZeroPairs);
    }
    (0..n)
        .map(|p| simulate_pair(model, seed, p).map(|(r, _)| r))
        .collect()
}

/// Runs one `n`-pair experiment. For hidden-variable models the result
/// carries the class × configuration matrix.
pub fn run_trial(model: &ModelSpec, n: u64, seed: u64) -> Result<TrialResult> {
    if n == 0 {
        return Err(EprError::ZeroPairs);
    }
    let mut tally = Tally::new();
    let mut matrix = model.is_hidden_variable().then(ClassConfigMatrix::default);
    for pair in 0..n {
        let (record, class) = simulate_pair(model, seed, pair)?;
        tally.push(&record);
        if let (Some(m), Some(c)) = (matrix.as_mut(), class) {
            m.record(c, record.setting.config());
        }
    }
    Ok(TrialResult::evaluate(tally, matrix))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Worker threads; 1 runs serially. Results do not depend on it.
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { workers: 1 }
    }
}

/// Runs `trials` seeded trials of `n` pairs each, in trial order.
pub fn run_trials(
    model: &ModelSpec,
    n: u64,
    trials: u64,
    master_seed: u64,
    opts: SweepOptions,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(EprError::ZeroTrials);
    }
    let one = |t: u64| run_trial(model, n, trial_seed(master_seed, n, t));
    if opts.workers <= 1 {
        return (0..trials).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .expect("failed to build worker pool");
    pool.install(|| (0..trials).into_par_iter().map(one).collect())
}

/// Aggregate of R trials at one pair count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub trials: u64,
    pub bell_obeyed: u64,
    /// Trials with a computed S ≤ 2; indeterminate trials are counted separately.
    pub chsh_obeyed: u64,
    pub chsh_indeterminate: u64,
    pub bell_only_violated: u64,
    pub chsh_only_violated: u64,
    pub anticorr_imperfect: u64,
    /// Mean S over trials where S is defined.
    pub mean_s: Option<f64>,
    pub mean_anticorr_pct: Option<f64>,
}

impl SweepRow {
    pub fn from_trials(n: u64, results: &[TrialResult]) -> Self {
        let mut row = SweepRow {
            n,
            trials: results.len() as u64,
            bell_obeyed: 0,
            chsh_obeyed: 0,
            chsh_indeterminate: 0,
            bell_only_violated: 0,
            chsh_only_violated: 0,
            anticorr_imperfect: 0,
            mean_s: None,
            mean_anticorr_pct: None,
        };
        let (mut s_sum, mut s_count) = (0.0, 0u64);
        let (mut ac_sum, mut ac_count) = (0.0, 0u64);
        for r in results {
            if !r.bell.violated {
                row.bell_obeyed += 1;
            }
            match r.chsh.result() {
                Some(c) => {
                    s_sum += c.s;
                    s_count += 1;
                    if !c.violated {
                        row.chsh_obeyed += 1;
                    }
                    match (r.bell.violated, c.violated) {
                        (true, false) => row.bell_only_violated += 1,
                        (false, true) => row.chsh_only_violated += 1,
                        _ => {}
                    }
                }
                None => row.chsh_indeterminate += 1,
            }
            if let Some(a) = r.anticorr {
                ac_sum += a.percent;
                ac_count += 1;
            }
            if !r.anticorr_perfect() {
                row.anticorr_imperfect += 1;
            }
        }
        row.mean_s = (s_count > 0).then(|| s_sum / s_count as f64);
        row.mean_anticorr_pct = (ac_count > 0).then(|| ac_sum / ac_count as f64);
        row
    }

    pub fn bell_violation_rate(&self) -> f64 {
        (self.trials - self.bell_obeyed) as f64 / self.trials as f64
    }

    pub fn chsh_violation_rate(&self) -> f64 {
        (self.trials - self.chsh_obeyed - self.chsh_indeterminate) as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub model: ModelSpec,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<SweepRow>,
}

/// Runs `trials` trials for every pair count in `n_values`.
pub fn sweep(
    model: &ModelSpec,
    n_values: &[u64],
    trials: u64,
    master_seed: u64,
    opts: SweepOptions,
) -> Result<SweepReport> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(EprError::ZeroPairs);
    }
    let rows = n_values
        .iter()
        .map(|&n| {
            let results = run_trials(model, n, trials, master_seed, opts)?;
            Ok(SweepRow::from_trials(n, &results))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        model: model.clone(),
        trials,
        master_seed,
        rows,
    })
}

/// Pair counts and trial count of the standard `--fig1` sweep.
pub const REFERENCE_PAIRS: [u64; 6] = [40, 80, 160, 200, 400, 800];
pub const REFERENCE_TRIALS: u64 = 1000;
