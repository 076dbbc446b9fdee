//! Simulated annealing for small nearly orthogonal Latin hypercubes.
//!
//! The chain starts from a random centered Latin hypercube and proposes
//! swaps of two entries inside one column, so every state is a Latin
//! hypercube. Because all columns are permutations of the same centered
//! levels, the Gram matrix of the raw columns is `n` times the covariance
//! and a swap in column `c` only touches row `c` of it.

use rand::Rng;
use serde::Serialize;

use crate::construct::random::random_centered_lh;
use crate::criteria::{compute_criteria, validate_thresholds, CorrelationSummary, DEFAULT_THRESHOLDS};
use crate::design::{centered_levels, DesignKind, DesignMatrix};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum AnnealObjective {
    RhoAve,
    /// Maximum correlation plus `0.01 * rho_ave`; the small term breaks the
    /// large plateaus of the bare maximum.
    RhoMax,
    /// `sum_k w_k (1 - delta_k) + max_weight * rho_max + 0.01 * rho_ave`.
    /// Without the `rho_max` term the proportions alone tolerate duplicated
    /// columns.
    WeightedDelta { thresholds: Vec<f64>, weights: Vec<f64>, max_weight: f64 },
}

impl AnnealObjective {
    pub fn weighted_delta_default() -> Self {
        AnnealObjective::WeightedDelta {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            weights: vec![1.0; DEFAULT_THRESHOLDS.len()],
            max_weight: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnealConfig {
    pub objective: AnnealObjective,
    /// `None` picks the temperature at which an average uphill move from the
    /// start design is accepted with probability one half.
    pub initial_temperature: Option<f64>,
    pub cooling: f64,
    /// `None` means `100 * p`.
    pub moves_per_temperature: Option<usize>,
    /// Annealing stops once the temperature falls below this fraction of the start.
    pub stop_ratio: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            objective: AnnealObjective::RhoAve,
            initial_temperature: None,
            cooling: 0.95,
            moves_per_temperature: None,
            stop_ratio: 1e-4,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::domain(format!("cooling factor {} not in (0, 1)", self.cooling)));
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio < 1.0) {
            return Err(Error::domain(format!("stop ratio {} not in (0, 1)", self.stop_ratio)));
        }
        if let Some(t) = self.initial_temperature {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain(format!("initial temperature {t} must be positive")));
            }
        }
        if self.moves_per_temperature == Some(0) {
            return Err(Error::domain("moves per temperature must be positive"));
        }
        if let AnnealObjective::WeightedDelta { thresholds, weights, max_weight } = &self.objective {
            validate_thresholds(thresholds)?;
            if weights.len() != thresholds.len() {
                return Err(Error::dimension(format!(
                    "{} weights for {} thresholds",
                    weights.len(),
                    thresholds.len()
                )));
            }
            if weights.iter().chain([max_weight]).any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::domain("weights must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnealOutcome {
    #[serde(skip)]
    pub design: DesignMatrix,
    pub energy: f64,
    pub initial_energy: f64,
    pub initial_temperature: f64,
    pub epochs: usize,
    pub accepted: usize,
    pub summary: Option<CorrelationSummary>,
}

struct State {
    n: usize,
    p: usize,
    x: Vec<f64>,
    gram: Vec<f64>,
    norm: f64,
    objective: AnnealObjective,
    sum_sq: f64,
    // counts of upper-triangle pairs with |rho| <= t_k, weighted-delta only
    within: Vec<usize>,
}

impl State {
    fn new(x: &DesignMatrix, objective: AnnealObjective) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let data = x.as_column_major().to_vec();
        let mut gram = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let g: f64 = (0..n).map(|r| data[i * n + r] * data[j * n + r]).sum();
                gram[i * p + j] = g;
                gram[j * p + i] = g;
            }
        }
        let norm = gram[0];
        let mut s = Self { n, p, x: data, gram, norm, objective, sum_sq: 0.0, within: Vec::new() };
        s.refresh_aggregates();
        s
    }

    fn thresholds(&self) -> &[f64] {
        match &self.objective {
            AnnealObjective::WeightedDelta { thresholds, .. } => thresholds,
            _ => &[],
        }
    }

    fn refresh_aggregates(&mut self) {
        let p = self.p;
        let mut sum_sq = 0.0;
        let mut within = vec![0; self.thresholds().len()];
        for i in 0..p {
            for j in i + 1..p {
                let r = self.gram[i * p + j] / self.norm;
                sum_sq += r * r;
                for (k, &t) in self.thresholds().iter().enumerate() {
                    if r.abs() <= t {
                        within[k] += 1;
                    }
                }
            }
        }
        self.sum_sq = sum_sq;
        self.within = within;
    }

    fn pairs(&self) -> f64 {
        (self.p * (self.p - 1) / 2) as f64
    }

    fn rho_ave(&self, sum_sq: f64) -> f64 {
        (sum_sq.max(0.0) / self.pairs()).sqrt()
    }

    fn rho_max(&self) -> f64 {
        let p = self.p;
        let mut m: f64 = 0.0;
        for i in 0..p {
            for j in i + 1..p {
                m = m.max(self.gram[i * p + j].abs());
            }
        }
        m / self.norm
    }

    fn energy_from(&self, sum_sq: f64, within: &[usize], rho_max: Option<f64>) -> f64 {
        let ave = self.rho_ave(sum_sq);
        match &self.objective {
            AnnealObjective::RhoAve => ave,
            AnnealObjective::RhoMax => rho_max.unwrap_or_else(|| self.rho_max()) + 0.01 * ave,
            AnnealObjective::WeightedDelta { weights, max_weight, .. } => {
                let pairs = self.pairs();
                let max_term = if *max_weight > 0.0 {
                    max_weight * rho_max.unwrap_or_else(|| self.rho_max())
                } else {
                    0.0
                };
                weights
                    .iter()
                    .zip(within)
                    .map(|(w, &c)| w * (1.0 - c as f64 / pairs))
                    .sum::<f64>()
                    + max_term
                    + 0.01 * ave
            }
        }
    }

    fn energy(&self) -> f64 {
        self.energy_from(self.sum_sq, &self.within, None)
    }

    /// Gram row changes for swapping rows `a` and `b` of column `c`.
    fn deltas(&self, c: usize, a: usize, b: usize, out: &mut [f64]) {
        let n = self.n;
        let diff = self.x[c * n + b] - self.x[c * n + a];
        for (k, o) in out.iter_mut().enumerate() {
            *o = if k == c { 0.0 } else { diff * (self.x[k * n + a] - self.x[k * n + b]) };
        }
    }

    /// Energy after the move described by `deltas` on column `c`, without applying it.
    fn trial_energy(&mut self, c: usize, deltas: &[f64]) -> f64 {
        let p = self.p;
        let mut sum_sq = self.sum_sq;
        let mut within = self.within.clone();
        for (k, &d) in deltas.iter().enumerate() {
            if k == c {
                continue;
            }
            let old = self.gram[c * p + k] / self.norm;
            let new = (self.gram[c * p + k] + d) / self.norm;
            sum_sq += new * new - old * old;
            for (slot, &t) in within.iter_mut().zip(self.thresholds()) {
                match (old.abs() <= t, new.abs() <= t) {
                    (true, false) => *slot -= 1,
                    (false, true) => *slot += 1,
                    _ => {}
                }
            }
        }
        let needs_max = match &self.objective {
            AnnealObjective::RhoMax => true,
            AnnealObjective::WeightedDelta { max_weight, .. } => *max_weight > 0.0,
            AnnealObjective::RhoAve => false,
        };
        let rho_max = if needs_max {
            self.apply_gram(c, deltas, 1.0);
            let m = self.rho_max();
            self.apply_gram(c, deltas, -1.0);
            Some(m)
        } else {
            None
        };
        self.energy_from(sum_sq, &within, rho_max)
    }

    fn apply_gram(&mut self, c: usize, deltas: &[f64], sign: f64) {
        let p = self.p;
        for (k, &d) in deltas.iter().enumerate() {
            if k != c {
                self.gram[c * p + k] += sign * d;
                self.gram[k * p + c] += sign * d;
            }
        }
    }

    fn apply(&mut self, c: usize, a: usize, b: usize, deltas: &[f64]) {
        let n = self.n;
        self.x.swap(c * n + a, c * n + b);
        self.apply_gram(c, deltas, 1.0);
        // O(p^2), but only on accepted moves, and it keeps the sums drift-free
        self.refresh_aggregates();
    }
}

fn propose<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> (usize, usize, usize) {
    let c = rng.random_range(0..p);
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (c, a, b)
}

/// Anneals an `n x p` Latin hypercube on the centered levels, returning the
/// best design seen along the chain.
pub fn anneal_nolhd(n: usize, p: usize, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2, got {n}")));
    }
    centered_levels(n)?;
    let mut rng = rng_from_seed(cfg.seed);
    let start = random_centered_lh(n, p, &mut rng)?;
    if p == 1 {
        return Ok(AnnealOutcome {
            design: start,
            energy: 0.0,
            initial_energy: 0.0,
            initial_temperature: 0.0,
            epochs: 0,
            accepted: 0,
            summary: None,
        });
    }

    let mut state = State::new(&start, cfg.objective.clone());
    let mut deltas = vec![0.0; p];
    let mut energy = state.energy();
    let initial_energy = energy;

    let t0 = match cfg.initial_temperature {
        Some(t) => t,
        None => {
            let (mut uphill, mut count) = (0.0, 0usize);
            for _ in 0..(20 * p).max(200) {
                let (c, a, b) = propose(n, p, &mut rng);
                state.deltas(c, a, b, &mut deltas);
                let d = state.trial_energy(c, &deltas) - energy;
                if d > 0.0 {
                    uphill += d;
                    count += 1;
                }
            }
            if count == 0 {
                1e-3
            } else {
                uphill / count as f64 / std::f64::consts::LN_2
            }
        }
    };

    let moves = cfg.moves_per_temperature.unwrap_or(100 * p);
    let mut best = (energy, state.x.clone());
    let (mut temp, mut epochs, mut accepted) = (t0, 0, 0);
    while temp > cfg.stop_ratio * t0 {
        for _ in 0..moves {
            let (c, a, b) = propose(n, p, &mut rng);
            state.deltas(c, a, b, &mut deltas);
            let trial = state.trial_energy(c, &deltas);
            let d = trial - energy;
            if d <= 0.0 || rng.random::<f64>() < (-d / temp).exp() {
                state.apply(c, a, b, &deltas);
                energy = state.energy();
                accepted += 1;
                if energy < best.0 {
                    best = (energy, state.x.clone());
                }
            }
        }
        temp *= cfg.cooling;
        epochs += 1;
    }

    let design = DesignMatrix::from_column_major(n, p, best.1)?.assume_kind(DesignKind::LatinHypercube);
    let summary = compute_criteria(&design, &DEFAULT_THRESHOLDS)?;
    Ok(AnnealOutcome {
        design,
        energy: best.0,
        initial_energy,
        initial_temperature: t0,
        epochs,
        accepted,
        summary: Some(summary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::is_latin_hypercube;

    #[test]
    fn single_column_returns_immediately() {
        let out = anneal_nolhd(6, 1, &AnnealConfig::with_seed(1)).unwrap();
        assert_eq!(out.energy, 0.0);
        assert_eq!(out.epochs, 0);
        assert!(is_latin_hypercube(&out.design).latin_hypercube);
    }

    #[test]
    fn reported_energy_matches_design() {
        let out = anneal_nolhd(7, 5, &AnnealConfig::with_seed(3)).unwrap();
        let s = out.summary.unwrap();
        assert!((out.energy - s.rho_ave).abs() < 1e-12);
        assert!(out.energy <= out.initial_energy);
        assert!(is_latin_hypercube(&out.design).latin_hypercube);
    }

    #[test]
    fn rho_max_objective_is_consistent() {
        let cfg = AnnealConfig { objective: AnnealObjective::RhoMax, ..AnnealConfig::with_seed(8) };
        let out = anneal_nolhd(6, 3, &cfg).unwrap();
        let s = out.summary.unwrap();
        assert!((out.energy - (s.rho_max + 0.01 * s.rho_ave)).abs() < 1e-12);
    }

    #[test]
    fn weighted_delta_objective_is_consistent() {
        let cfg = AnnealConfig {
            objective: AnnealObjective::weighted_delta_default(),
            moves_per_temperature: Some(50),
            ..AnnealConfig::with_seed(2)
        };
        let out = anneal_nolhd(8, 6, &cfg).unwrap();
        let s = out.summary.unwrap();
        let want: f64 =
            s.delta.iter().map(|d| 1.0 - d).sum::<f64>() + s.rho_max + 0.01 * s.rho_ave;
        assert!((out.energy - want).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_design() {
        let cfg = AnnealConfig { moves_per_temperature: Some(40), ..AnnealConfig::with_seed(5) };
        let a = anneal_nolhd(5, 4, &cfg).unwrap();
        let b = anneal_nolhd(5, 4, &cfg).unwrap();
        assert_eq!(a.design, b.design);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = AnnealConfig { cooling: 1.0, ..AnnealConfig::default() };
        assert!(matches!(anneal_nolhd(5, 2, &bad), Err(Error::Domain(_))));
        let bad = AnnealConfig { moves_per_temperature: Some(0), ..AnnealConfig::default() };
        assert!(anneal_nolhd(5, 2, &bad).is_err());
        assert!(anneal_nolhd(1, 2, &AnnealConfig::default()).is_err());
        let bad = AnnealConfig {
            objective: AnnealObjective::WeightedDelta {
                thresholds: vec![0.1],
                weights: vec![],
                max_weight: 0.0,
            },
            ..AnnealConfig::default()
        };
        assert!(matches!(anneal_nolhd(5, 2, &bad), Err(Error::Dimension(_))));
    }
}
