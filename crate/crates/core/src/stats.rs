//! Outcome counters and the inequality statistics built on them.
//!
//! Counts stay exact integers; floating point appears only in the final
//! divisions of the CHSH correlations and the anti-correlation percentage.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{EprError, Result};
use crate::setting::PairRecord;

/// Equal/unequal outcome counts for one configuration d.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfigCounts {
    pub total: u64,
    pub equal: u64,
    pub unequal: u64,
}

/// The eight counters `N_d(E)`, `N_d(U)` with their totals `N_d`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tally {
    configs: [ConfigCounts; 4],
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, config: usize, equal: bool) {
        let c = &mut self.configs[config];
        c.total += 1;
        if equal {
            c.equal += 1;
        } else {
            c.unequal += 1;
        }
    }

    pub fn push(&mut self, record: &PairRecord) {
        self.record(record.setting.config(), record.is_equal());
    }

    /// Builds a tally from raw `(N_d(E), N_d(U))` counts.
    pub fn from_counts(counts: [(u64, u64); 4]) -> Self {
        let mut configs = [ConfigCounts::default(); 4];
        for (c, (equal, unequal)) in configs.iter_mut().zip(counts) {
            *c = ConfigCounts {
                total: equal + unequal,
                equal,
                unequal,
            };
        }
        Tally { configs }
    }

    pub fn config(&self, d: usize) -> ConfigCounts {
        self.configs[d]
    }

    pub fn configs(&self) -> &[ConfigCounts; 4] {
        &self.configs
    }

    pub fn total(&self) -> u64 {
        self.configs.iter().map(|c| c.total).sum()
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        for (l, r) in self.configs.iter_mut().zip(rhs.configs) {
            l.total += r.total;
            l.equal += r.equal;
            l.unequal += r.unequal;
        }
    }
}

impl Add for Tally {
    type Output = Tally;

    fn add(mut self, rhs: Tally) -> Tally {
        self += rhs;
        self
    }
}

impl<'a> FromIterator<&'a PairRecord> for Tally {
    fn from_iter<I: IntoIterator<Item = &'a PairRecord>>(iter: I) -> Self {
        let mut t = Tally::new();
        for r in iter {
            t.push(r);
        }
        t
    }
}

pub fn tally(records: &[PairRecord]) -> Tally {
    records.iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellResult {
    pub n1u: u64,
    pub n2e: u64,
    pub n3u: u64,
    pub violated: bool,
}

impl BellResult {
    /// Strict: `N₁(U) = N₂(E) + N₃(U)` is not a violation.
    pub fn from_counts(n1u: u64, n2e: u64, n3u: u64) -> Self {
        BellResult {
            n1u,
            n2e,
            n3u,
            violated: n1u > n2e + n3u,
        }
    }
}

/// Bell's inequality in counter form, `N₁(U) ≤ N₂(E) + N₃(U)`.
pub fn bell_test(t: &Tally) -> BellResult {
    BellResult::from_counts(t.config(1).unequal, t.config(2).equal, t.config(3).unequal)
}

/// The companion inequality `N₃(E) ≤ N₁(E) + N₂(U)`, reported as
/// `(N₃(E), N₁(E), N₂(U), violated)` with the same strict convention.
pub fn companion_bell_test(t: &Tally) -> (u64, u64, u64, bool) {
    let n3e = t.config(3).equal;
    let n1e = t.config(1).equal;
    let n2u = t.config(2).unequal;
    (n3e, n1e, n2u, n3e > n1e + n2u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    /// Correlations `E_d = P(equal) − P(unequal)` for d = 0..3.
    pub e: [f64; 4],
    pub s: f64,
    pub violated: bool,
}

impl ChshResult {
    pub fn from_correlations(e: [f64; 4]) -> Self {
        let [e0, e1, e2, e3] = e;
        let s = [
            e0 + e1 + e2 - e3,
            e0 + e1 - e2 + e3,
            e0 - e1 + e2 + e3,
            e1 + e2 + e3 - e0,
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
        ChshResult {
            e,
            s,
            violated: s > 2.0,
        }
    }
}

/// CHSH S-value over the four Bell configurations.
pub fn chsh(t: &Tally) -> Result<ChshResult> {
    let mut e = [0.0; 4];
    for (d, slot) in e.iter_mut().enumerate() {
        let c = t.config(d);
        if c.total == 0 {
            return Err(EprError::InsufficientSamples { config: d });
        }
        *slot = (2 * c.equal) as f64 / c.total as f64 - 1.0;
    }
    Ok(ChshResult::from_correlations(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiCorrResult {
    pub equal_angle_total: u64,
    pub misses: u64,
    pub percent: f64,
}

impl AntiCorrResult {
    pub fn is_perfect(&self) -> bool {
        self.misses == 0
    }
}

/// Fraction of aligned-analyzer pairs (d = 0) with unequal outcomes, in percent.
pub fn anticorr_audit(t: &Tally) -> Result<AntiCorrResult> {
    let c = t.config(0);
    if c.total == 0 {
        return Err(EprError::InsufficientSamples { config: 0 });
    }
    Ok(AntiCorrResult {
        equal_angle_total: c.total,
        misses: c.equal,
        percent: 100.0 - 100.0 * c.equal as f64 / c.total as f64,
    })
}

/// Pair counts `N^i_d` by hidden-variable class i and configuration d.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassConfigMatrix {
    pub counts: [[u64; 4]; 8],
}

impl ClassConfigMatrix {
    pub fn record(&mut self, class: u8, config: usize) {
        self.counts[class as usize][config] += 1;
    }

    pub fn class_total(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..8).map(|i| self.class_total(i)).sum()
    }
}

impl AddAssign for ClassConfigMatrix {
    fn add_assign(&mut self, rhs: Self) {
        for (l, r) in self.counts.iter_mut().zip(rhs.counts) {
            for (a, b) in l.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
}

/// Largest deviation of any `N^i_d` from `N^i/4`, in binomial standard
/// deviations `√(N^i·3/16)`. Empty classes are skipped.
pub fn class_config_check(m: &ClassConfigMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in m.counts.iter().enumerate() {
        let n = m.class_total(i) as f64;
        if n == 0.0 {
            continue;
        }
        let sigma = (n * 0.25 * 0.75).sqrt();
        for &c in row {
            worst = worst.max((c as f64 - n / 4.0).abs() / sigma);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tally() {
        let t = tally(&[]);
        assert_eq!(t.total(), 0);
        assert_eq!(t, Tally::default());
        assert_eq!(chsh(&t), Err(EprError::InsufficientSamples { config: 0 }));
        assert!(anticorr_audit(&t).is_err());
    }

    #[test]
    fn bell_reference_counts() {
        assert!(BellResult::from_counts(145, 104, 21).violated);
        assert!(!BellResult::from_counts(115, 106, 96).violated);
        assert!(!BellResult::from_counts(142, 102, 40).violated);
        assert!(BellResult::from_counts(143, 75, 48).violated);
    }

    #[test]
    fn bell_reads_the_right_cells() {
        let t = Tally::from_counts([(0, 200), (30, 145), (104, 96), (180, 21)]);
        let b = bell_test(&t);
        assert_eq!((b.n1u, b.n2e, b.n3u, b.violated), (145, 104, 21, true));
        assert_eq!(companion_bell_test(&t), (180, 30, 96, true));
    }

    #[test]
    fn chsh_ideal_quantum_correlations() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = ChshResult::from_correlations([-1.0, -h, 0.0, h]);
        assert!((r.s - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert!(r.violated);
    }

    #[test]
    fn chsh_boundary_is_not_violation() {
        let r = ChshResult::from_correlations([-1.0, -1.0, 0.0, 0.0]);
        assert_eq!(r.s, 2.0);
        assert!(!r.violated);
    }

    #[test]
    fn chsh_correlation_formula() {
        let t = Tally::from_counts([(0, 10), (5, 15), (10, 10), (15, 5)]);
        let r = chsh(&t).unwrap();
        assert_eq!(r.e, [-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(r.s, 2.0);
    }

    #[test]
    fn chsh_reports_the_empty_config() {
        let t = Tally::from_counts([(0, 10), (5, 15), (0, 0), (15, 5)]);
        assert_eq!(chsh(&t), Err(EprError::InsufficientSamples { config: 2 }));
    }

    #[test]
    fn anticorr_examples() {
        let perfect =
            anticorr_audit(&Tally::from_counts([(0, 200), (0, 0), (0, 0), (0, 0)])).unwrap();
        assert!(perfect.is_perfect());
        assert_eq!(perfect.percent, 100.0);

        let failed =
            anticorr_audit(&Tally::from_counts([(200, 0), (0, 0), (0, 0), (0, 0)])).unwrap();
        assert_eq!(failed.percent, 0.0);

        // 27 misses out of 205 aligned pairs prints as 86.8293 %
        let cheat =
            anticorr_audit(&Tally::from_counts([(27, 178), (0, 0), (0, 0), (0, 0)])).unwrap();
        assert_eq!(format!("{:.4}", cheat.percent), "86.8293");
        assert!(!cheat.is_perfect());
    }

    #[test]
    fn class_config_examples() {
        let mut m = ClassConfigMatrix::default();
        for i in 0..8 {
            m.counts[i] = [25, 25, 25, 25];
        }
        assert_eq!(class_config_check(&m), 0.0);

        let mut skewed = ClassConfigMatrix::default();
        skewed.counts[3] = [100, 0, 0, 0];
        // |100 − 25| / √(100·3/16) = 75 / 4.33
        assert!((class_config_check(&skewed) - 75.0 / 18.75f64.sqrt()).abs() < 1e-12);
        assert!(class_config_check(&skewed) > 5.0);

        assert_eq!(class_config_check(&ClassConfigMatrix::default()), 0.0);
    }

    #[test]
    fn reconstructed_cheating_run_output() {
        // the only tally with n = 800 consistent with the printed cheating run:
        // 86.8293 % anti-correlation, Bell counters {143, 75, 48}, S = 1.99165
        let t = Tally::from_counts([(27, 178), (48, 143), (75, 113), (168, 48)]);
        assert_eq!(t.total(), 800);
        let bell = bell_test(&t);
        assert_eq!((bell.n1u, bell.n2e, bell.n3u), (143, 75, 48));
        assert!(bell.violated);
        let s = chsh(&t).unwrap();
        assert_eq!(format!("{:.5}", s.s), "1.99165");
        assert!(!s.violated);
        assert_eq!(
            format!("{:.4}", anticorr_audit(&t).unwrap().percent),
            "86.8293"
        );
    }

    #[test]
    fn reconstructed_bell_random_run_output() {
        // one tally consistent with the printed Bell-random run {115, 106, 96}, S = 1.06351
        let t = Tally::from_counts([(0, 178), (102, 115), (106, 94), (109, 96)]);
        assert_eq!(t.total(), 800);
        assert!(!bell_test(&t).violated);
        let s = chsh(&t).unwrap();
        assert_eq!(format!("{:.5}", s.s), "1.06351");
        assert!(anticorr_audit(&t).unwrap().is_perfect());
    }

    #[test]
    fn tally_merge_adds_cells() {
        let a = Tally::from_counts([(1, 2), (3, 4), (5, 6), (7, 8)]);
        let b = Tally::from_counts([(8, 7), (6, 5), (4, 3), (2, 1)]);
        let m = a + b;
        assert_eq!(m, Tally::from_counts([(9, 9), (9, 9), (9, 9), (9, 9)]));
        assert_eq!(m.total(), 72);
    }
}
