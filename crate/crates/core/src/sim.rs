//! Replicated variable-selection experiments comparing design types.
//!
//! Each replication draws one noise vector and one fold assignment from its
//! own seed; every method's design sees the same noise and the same folds.
//! Replication seeds are `child_seed(master_seed, rep)`, so the report does
//! not depend on how replications are scheduled across threads.

use std::path::PathBuf;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::pipelines::{example1_design, example3_design, lemma1_annealed, nolhd_64x192};
use crate::construct::random::{centered_range, iid_uniform_sample, random_latin_hypercube};
use crate::construct::two_level::two_level_design;
use crate::criteria::{correlation_matrix, summarize, DEFAULT_THRESHOLDS};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::gf::prime_power;
use crate::io::read_design;
use crate::lasso::{
    cross_validate_with_folds, false_selections, fold_assignment, lambda_grid, lambda_max, solve_lasso,
    LassoFit, LassoProblem, SolverOptions, TrueModel, DEFAULT_FOLDS, DEFAULT_GRID_LEN, DEFAULT_GRID_RATIO,
};
use crate::seed::{child_seed, derive_seed, rng_from_seed};

/// Stream index under the master seed reserved for design construction.
const CONSTRUCTION_STREAM: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    NolhdLemma1,
    NolhdKron,
    FdSsd,
    Rlhd,
    Iid,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refresh {
    Fixed,
    PerReplication,
}

impl MethodTag {
    pub fn default_refresh(self) -> Refresh {
        match self {
            MethodTag::Rlhd | MethodTag::Iid => Refresh::PerReplication,
            _ => Refresh::Fixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMethodSpec {
    pub name: String,
    pub method: MethodTag,
    #[serde(default)]
    pub refresh: Option<Refresh>,
    /// Design CSV for `file`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl DesignMethodSpec {
    pub fn new(name: &str, method: MethodTag) -> Self {
        Self { name: name.to_string(), method, refresh: None, path: None }
    }

    pub fn refresh(&self) -> Refresh {
        self.refresh.unwrap_or_else(|| self.method.default_refresh())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub folds: usize,
    pub grid_len: usize,
    pub grid_ratio: f64,
    pub solver: SolverOptions,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            grid_len: DEFAULT_GRID_LEN,
            grid_ratio: DEFAULT_GRID_RATIO,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub reps: usize,
    pub methods: Vec<DesignMethodSpec>,
    pub master_seed: u64,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::domain(format!("need n >= 2 and p >= 1, got {}x{}", self.n, self.p)));
        }
        if self.beta.len() != self.p {
            return Err(Error::dimension(format!("beta has {} entries, p = {}", self.beta.len(), self.p)));
        }
        if self.reps == 0 {
            return Err(Error::domain("reps must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::domain("no design methods"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::domain(format!("duplicate method name {}", m.name)));
            }
            if m.method == MethodTag::File && m.path.is_none() {
                return Err(Error::domain(format!("method {} needs a path", m.name)));
            }
        }
        self.truth()?;
        Ok(())
    }

    pub fn truth(&self) -> Result<TrueModel> {
        TrueModel::new(self.beta.clone(), self.sigma)
    }

    pub fn design_range(&self) -> (f64, f64) {
        centered_range(self.n)
    }
}

fn standard_methods(nolhd: MethodTag) -> Vec<DesignMethodSpec> {
    vec![
        DesignMethodSpec::new("NOLHD", nolhd),
        DesignMethodSpec::new("FD", MethodTag::FdSsd),
        DesignMethodSpec::new("RLHD", MethodTag::Rlhd),
        DesignMethodSpec::new("IID", MethodTag::Iid),
    ]
}

fn padded(nonzero: Vec<f64>, p: usize) -> Vec<f64> {
    let mut beta = nonzero;
    beta.resize(p, 0.0);
    beta
}

/// `ex4`, `ex5` or `ex6`.
pub fn builtin_scenario(id: &str) -> Result<SimScenario> {
    let step = |count: usize, start: f64, step: f64| (0..count).map(|i| start + step * i as f64).collect();
    let (n, p, nonzero, nolhd, notes): (usize, usize, Vec<f64>, _, Vec<String>) = match id {
        "ex4" => (50, 48, step(12, 0.8, 0.2), MethodTag::NolhdKron, vec![]),
        "ex5" => (49, 96, step(15, 0.2, 0.2), MethodTag::NolhdLemma1, vec![
            "two-level design at odd n = 49: columns balanced to within one run".into(),
        ]),
        "ex6" => (64, 192, step(20, 0.05, 2.95 / 19.0), MethodTag::NolhdLemma1, vec![
            "nonzero coefficients: 20 values equally spaced from 0.05 to 3.0".into(),
        ]),
        other => return Err(Error::domain(format!("unknown scenario {other:?}; expected ex4, ex5 or ex6"))),
    };
    Ok(SimScenario {
        name: id.to_string(),
        n,
        p,
        beta: padded(nonzero, p),
        sigma: 8.0,
        reps: 50,
        methods: standard_methods(nolhd),
        master_seed: 20_120_401,
        fit: FitSettings::default(),
        notes,
    })
}

/// A design together with a one-line account of how it was produced.
#[derive(Clone, Debug)]
pub struct BuiltDesign {
    pub design: DesignMatrix,
    pub route: String,
}

/// Builds the design for one method. Random designs use `seed` directly.
pub fn build_design(spec: &DesignMethodSpec, n: usize, p: usize, seed: u64) -> Result<BuiltDesign> {
    let range = centered_range(n);
    let built = match spec.method {
        MethodTag::NolhdLemma1 => lemma1_design_for(n, p, seed)?,
        MethodTag::NolhdKron => {
            if (n, p) != (50, 48) {
                return Err(Error::unsupported(format!(
                    "Kronecker route is only wired for 50x48, got {n}x{p}"
                )));
            }
            let out = example3_design(seed)?;
            BuiltDesign {
                design: out.design,
                route: format!(
                    "kronecker: OA(25,6,5) + annealed 5x4 seed via the OA construction, C2 by row automorphism {:?}, seed {seed}",
                    out.automorphism
                ),
            }
        }
        MethodTag::FdSsd => BuiltDesign {
            design: two_level_design(n, p, &mut rng_from_seed(seed))?,
            route: format!("two-level exchange design on +-{}, seed {seed}", range.1),
        },
        MethodTag::Rlhd => BuiltDesign {
            design: random_latin_hypercube(n, p, range, &mut rng_from_seed(seed))?,
            route: format!("random Latin hypercube, seed {seed}"),
        },
        MethodTag::Iid => BuiltDesign {
            design: iid_uniform_sample(n, p, range, &mut rng_from_seed(seed))?,
            route: format!("iid uniform sample, seed {seed}"),
        },
        MethodTag::File => {
            let path = spec.path.as_ref().ok_or_else(|| Error::domain("file method without a path"))?;
            BuiltDesign { design: read_design(path)?, route: format!("file {}", path.display()) }
        }
    };
    if (built.design.rows(), built.design.cols()) != (n, p) {
        return Err(Error::dimension(format!(
            "method {}: design is {}x{}, scenario needs {n}x{p}",
            spec.name,
            built.design.rows(),
            built.design.cols()
        )));
    }
    Ok(built)
}

fn lemma1_design_for(n: usize, p: usize, seed: u64) -> Result<BuiltDesign> {
    if (n, p) == (49, 96) {
        return Ok(BuiltDesign {
            design: example1_design()?,
            route: "lemma1: OA(49,8,7) with the shipped 7x12 seed".into(),
        });
    }
    if (n, p) == (64, 192) {
        let out = nolhd_64x192(seed)?;
        return Ok(BuiltDesign { design: out.design, route: out.route });
    }
    let s = (n as f64).sqrt().round() as usize;
    if s * s != n || prime_power(s as u32).is_none() {
        return Err(Error::unsupported(format!("the OA construction needs n = s^2 with s a prime power, got n = {n}")));
    }
    let f = (1..=(s + 1) / 2)
        .rev()
        .find(|f| p % (2 * f) == 0)
        .ok_or_else(|| Error::unsupported(format!("p = {p} is odd")))?;
    let out = lemma1_annealed(s as u32, f, p / (2 * f), seed)?;
    Ok(BuiltDesign { design: out.design, route: out.route })
}

/// How one replication turns a design and a response into a fit.
pub trait FitStrategy: Sync {
    fn fit(&self, x: &DesignMatrix, y: &[f64], folds: &[usize]) -> Result<LassoFit>;
}

/// Cross-validation over a log grid anchored at `lambda_max`, then a refit
/// on all runs at the selected penalty.
#[derive(Clone, Debug, Default)]
pub struct CvLasso {
    pub settings: FitSettings,
}

impl FitStrategy for CvLasso {
    fn fit(&self, x: &DesignMatrix, y: &[f64], folds: &[usize]) -> Result<LassoFit> {
        let s = &self.settings;
        let grid = lambda_grid(lambda_max(x, y)?, s.grid_len, s.grid_ratio)?;
        let cv = cross_validate_with_folds(x, y, folds, &grid, &s.solver)?;
        solve_lasso(&LassoProblem::new(x.clone(), y.to_vec(), cv.selected_lambda)?, &s.solver)
    }
}

/// Noise vector of replication `rep_seed`.
pub fn replication_noise(n: usize, sigma: f64, rep_seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(child_seed(rep_seed, 0));
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}

/// Fold labels of replication `rep_seed`.
pub fn replication_folds(n: usize, k: usize, rep_seed: u64) -> Result<Vec<usize>> {
    fold_assignment(n, k, &mut rng_from_seed(child_seed(rep_seed, 1)))
}

/// Seed for regenerating method `index`'s design in replication `rep_seed`.
pub fn replication_design_seed(rep_seed: u64, index: usize) -> u64 {
    child_seed(rep_seed, 2 + index as u64)
}

/// False-selection count of each `(name, design)` pair under one shared noise draw.
pub fn run_replication(
    scn: &SimScenario,
    designs: &[(String, DesignMatrix)],
    rep_seed: u64,
    strategy: &dyn FitStrategy,
) -> Result<Vec<(String, usize)>> {
    let truth = scn.truth()?;
    let eps = replication_noise(scn.n, scn.sigma, rep_seed);
    let folds = replication_folds(scn.n, scn.fit.folds, rep_seed)?;
    designs
        .iter()
        .map(|(name, x)| {
            if (x.rows(), x.cols()) != (scn.n, scn.p) {
                return Err(Error::dimension(format!(
                    "method {name}: design is {}x{}, scenario needs {}x{}",
                    x.rows(),
                    x.cols(),
                    scn.n,
                    scn.p
                )));
            }
            let y: Vec<f64> = x.mul_vec(&truth.beta)?.iter().zip(&eps).map(|(a, e)| a + e).collect();
            let fit = strategy.fit(x, &y, &folds)?;
            Ok((name.clone(), false_selections(&fit, &truth)?))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Quantile by linear interpolation between order statistics: position
/// `h = (len - 1) q` in the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(samples: &[usize]) -> Quartiles {
    let mut v: Vec<f64> = samples.iter().map(|&g| g as f64).collect();
    v.sort_by(f64::total_cmp);
    Quartiles { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75) }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodReport {
    pub name: String,
    pub method: MethodTag,
    pub refresh: Refresh,
    pub gamma: Vec<usize>,
    pub quartiles: Quartiles,
    /// Route of the fixed design, or of the first replication's design.
    pub route: String,
    pub construction_seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub p0: usize,
    pub rep_seeds: Vec<u64>,
    pub methods: Vec<MethodReport>,
}

impl SimReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.name == name)
    }
}

pub fn run_experiment(scn: &SimScenario) -> Result<SimReport> {
    run_experiment_with(scn, &CvLasso { settings: scn.fit.clone() })
}

/// Seed used to build the fixed design of method `index`.
pub fn construction_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, &[CONSTRUCTION_STREAM, index as u64])
}

pub fn run_experiment_with(scn: &SimScenario, strategy: &dyn FitStrategy) -> Result<SimReport> {
    scn.validate()?;
    let mut fixed: Vec<Option<BuiltDesign>> = Vec::with_capacity(scn.methods.len());
    let mut construction_seeds = Vec::with_capacity(scn.methods.len());
    for (i, spec) in scn.methods.iter().enumerate() {
        let seed = construction_seed(scn.master_seed, i);
        match spec.refresh() {
            Refresh::Fixed => {
                let built = build_design(spec, scn.n, scn.p, seed)
                    .map_err(|e| Error::RejectedInput(format!("method {}: {e}", spec.name)))?;
                fixed.push(Some(built));
                construction_seeds.push(Some(seed));
            }
            Refresh::PerReplication => {
                fixed.push(None);
                construction_seeds.push(None);
            }
        }
    }

    let rep_seeds: Vec<u64> = (0..scn.reps as u64).map(|r| child_seed(scn.master_seed, r)).collect();
    let per_rep: Vec<(Vec<(String, usize)>, Vec<String>)> = rep_seeds
        .par_iter()
        .map(|&rep_seed| {
            let mut designs = Vec::with_capacity(scn.methods.len());
            let mut routes = Vec::with_capacity(scn.methods.len());
            for (i, spec) in scn.methods.iter().enumerate() {
                let built = match &fixed[i] {
                    Some(b) => b.clone(),
                    None => build_design(spec, scn.n, scn.p, replication_design_seed(rep_seed, i))?,
                };
                routes.push(built.route);
                designs.push((spec.name.clone(), built.design));
            }
            Ok((run_replication(scn, &designs, rep_seed, strategy)?, routes))
        })
        .collect::<Result<_>>()?;

    let methods = scn
        .methods
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let gamma: Vec<usize> = per_rep.iter().map(|(g, _)| g[i].1).collect();
            MethodReport {
                name: spec.name.clone(),
                method: spec.method,
                refresh: spec.refresh(),
                quartiles: quartiles(&gamma),
                gamma,
                route: per_rep[0].1[i].clone(),
                construction_seed: construction_seeds[i],
            }
        })
        .collect();
    Ok(SimReport { p0: scn.truth()?.p0, scenario: scn.clone(), rep_seeds, methods })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationProfile {
    /// Share of column pairs with `|rho|` strictly above `threshold`.
    pub share_abs_above: f64,
    /// Share of column pairs with signed `rho` strictly above `threshold`.
    pub share_signed_above: f64,
    pub threshold: f64,
    pub rho_max: f64,
    pub rho_ave: f64,
    pub thresholds: Vec<f64>,
    pub delta: Vec<f64>,
}

pub fn correlation_profile(x: &DesignMatrix) -> Result<CorrelationProfile> {
    if x.cols() < 2 {
        return Err(Error::domain("need at least two columns"));
    }
    let rho = correlation_matrix(x)?;
    let threshold = 0.1;
    let pairs = x.cols() * (x.cols() - 1) / 2;
    let abs_above = rho.upper_triangle().filter(|r| r.abs() > threshold).count();
    let signed_above = rho.upper_triangle().filter(|&r| r > threshold).count();
    let s = summarize(rho, &DEFAULT_THRESHOLDS)?;
    Ok(CorrelationProfile {
        share_abs_above: abs_above as f64 / pairs as f64,
        share_signed_above: signed_above as f64 / pairs as f64,
        threshold,
        rho_max: s.rho_max,
        rho_ave: s.rho_ave,
        thresholds: s.thresholds,
        delta: s.delta,
    })
}

/// Long-format CSV `scenario,method,rep,gamma`.
pub fn gamma_csv(report: &SimReport) -> String {
    let mut out = String::from("scenario,method,rep,gamma\n");
    for m in &report.methods {
        for (rep, g) in m.gamma.iter().enumerate() {
            out.push_str(&format!("{},{},{rep},{g}\n", report.scenario.name, m.name));
        }
    }
    out
}
