use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use nolhd::construct::{
    anneal_nolhd, centered_range, es2_supersaturated, iid_uniform_sample, joint_row_permute, kronecker_base,
    kronecker_construct, lemma1_construct, random_latin_hypercube, two_level_design, AnnealConfig,
    AnnealObjective, KroneckerInputs, Lemma1Inputs,
};
use nolhd::criteria::{compute_criteria, DEFAULT_THRESHOLDS};
use nolhd::design::{check_oa_strength2, is_latin_hypercube, rao_hamming_oa, OrthogonalArray};
use nolhd::io::{read_design, read_rows, read_vector, write_design};
use nolhd::lasso::{
    cross_validate, lambda_grid, lambda_max, solve_lasso, LassoProblem, SolverOptions, DEFAULT_FOLDS,
    DEFAULT_GRID_LEN, DEFAULT_GRID_RATIO,
};
use nolhd::seed::rng_from_seed;
use nolhd::sim::{builtin_scenario, gamma_csv, run_experiment, SimScenario};
use nolhd::{DesignMatrix, Error, SignMatrix};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "nolhd", version, about = "Construct and evaluate nearly orthogonal Latin hypercube designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a design and write it as CSV.
    Construct(ConstructArgs),
    /// Correlation criteria of a design CSV.
    Criteria(CriteriaArgs),
    /// Latin hypercube (or orthogonal array) check of a CSV.
    Check(CheckArgs),
    /// Fit the Lasso to a design and response.
    Lasso(LassoArgs),
    /// Run a replicated false-selection experiment.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Rlhd,
    Iid,
    Lemma1,
    Kron,
    KronBase,
    Anneal,
    Ssd,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Objective {
    RhoAve,
    RhoMax,
    WeightedDelta,
}

#[derive(Args, Serialize)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Run size (rlhd, iid, anneal, ssd).
    #[arg(long)]
    n: Option<usize>,
    /// Number of factors (rlhd, iid, anneal, ssd); seed columns for lemma1 without --b.
    #[arg(long)]
    p: Option<usize>,
    /// Orthogonal array order for lemma1.
    #[arg(long)]
    s: Option<u32>,
    /// Column pairs of the orthogonal array used by lemma1 (default: all).
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Design region `a,b` for rlhd and iid (default: centered on zero).
    #[arg(long, value_parser = parse_range)]
    range: Option<(f64, f64)>,
    /// Annealing objective.
    #[arg(long, value_enum, default_value_t = Objective::RhoAve)]
    objective: Objective,
    /// Allow odd run sizes for ssd by relaxing column balance to within one run.
    #[arg(long)]
    unbalanced: bool,
    /// Sign matrix A (kron-base) or A_1, A_2, ... (kron; one file is row-permuted jointly with C).
    #[arg(long = "a")]
    a: Vec<PathBuf>,
    /// Outer design B (kron, kron-base) or seed Latin hypercube (lemma1).
    #[arg(long = "b")]
    b: Option<PathBuf>,
    /// Inner design C or C_1, C_2, ...
    #[arg(long = "c")]
    c: Vec<PathBuf>,
    /// Outer sign matrix D.
    #[arg(long = "d")]
    d: Option<PathBuf>,
    /// Scale on the C (x) D term (default: rows of B).
    #[arg(long)]
    r: Option<f64>,
    /// Write the design here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON record of parameters, seed and criteria here.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CriteriaArgs {
    #[arg(long)]
    input: PathBuf,
    /// Thresholds, non-increasing, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS.to_vec())]
    t: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as an orthogonal array with symbols 1..s and check strength two.
    #[arg(long)]
    oa: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LassoArgs {
    /// Design CSV.
    #[arg(long)]
    x: PathBuf,
    /// Response, one column or one row.
    #[arg(long)]
    y: PathBuf,
    /// Penalty; when absent it is chosen by cross-validation.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_LEN)]
    grid_len: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    grid_ratio: f64,
    #[arg(long)]
    standardize: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// ex4, ex5, ex6 or a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (default: the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Long-format samples `scenario,method,rep,gamma`.
    #[arg(long)]
    gamma_csv: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Failure of one invocation, mapped onto the exit status.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require<T: Copy>(v: Option<T>, flag: &str, method: Method) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required for --method {}", method_name(method))))
}

fn method_name(m: Method) -> String {
    m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn envelope(seed: Option<u64>, parameters: &impl Serialize, body: &impl Serialize) -> CliResult<Value> {
    let mut map = Map::new();
    map.insert("tool_version".into(), json!(TOOL_VERSION));
    map.insert("seed".into(), json!(seed));
    map.insert("parameters".into(), serde_json::to_value(parameters).map_err(|e| Failure::Runtime(e.to_string()))?);
    match serde_json::to_value(body).map_err(|e| Failure::Runtime(e.to_string()))? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Ok(Value::Object(map))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn read_signs(path: &Path) -> CliResult<SignMatrix> {
    Ok(SignMatrix::from_design(&read_design(path)?)?)
}

fn construct(args: &ConstructArgs) -> CliResult<()> {
    let mut rng = rng_from_seed(args.seed);
    let mut route = json!(null);
    let design: DesignMatrix = match args.method {
        Method::Rlhd | Method::Iid => {
            let n = require(args.n, "n", args.method)?;
            let p = require(args.p, "p", args.method)?;
            let range = args.range.unwrap_or_else(|| centered_range(n));
            if matches!(args.method, Method::Rlhd) {
                random_latin_hypercube(n, p, range, &mut rng)?
            } else {
                iid_uniform_sample(n, p, range, &mut rng)?
            }
        }
        Method::Anneal => {
            let n = require(args.n, "n", args.method)?;
            let p = require(args.p, "p", args.method)?;
            let objective = match args.objective {
                Objective::RhoAve => AnnealObjective::RhoAve,
                Objective::RhoMax => AnnealObjective::RhoMax,
                Objective::WeightedDelta => AnnealObjective::weighted_delta_default(),
            };
            let out = anneal_nolhd(n, p, &AnnealConfig { objective, ..AnnealConfig::with_seed(args.seed) })?;
            route = json!({ "energy": out.energy, "epochs": out.epochs, "accepted": out.accepted });
            out.design
        }
        Method::Ssd => {
            let n = require(args.n, "n", args.method)?;
            let p = require(args.p, "p", args.method)?;
            if args.unbalanced {
                two_level_design(n, p, &mut rng)?
            } else {
                es2_supersaturated(n, p, &mut rng)?
            }
        }
        Method::Lemma1 => {
            let b = match &args.b {
                Some(path) => read_design(path)?,
                None => {
                    let s = require(args.s, "s", args.method)?;
                    let p = require(args.p, "p", args.method)?;
                    let cfg = AnnealConfig {
                        objective: AnnealObjective::weighted_delta_default(),
                        ..AnnealConfig::with_seed(args.seed)
                    };
                    anneal_nolhd(s as usize, p, &cfg)?.design
                }
            };
            let s = u32::try_from(b.rows()).map_err(|_| usage("seed design is too large"))?;
            if let Some(given) = args.s.filter(|&given| given != s) {
                return Err(usage(format!("--s {given} does not match the {s}-row seed design")));
            }
            let oa = rao_hamming_oa(s)?;
            let f = args.f.unwrap_or(oa.cols() / 2);
            lemma1_construct(&Lemma1Inputs::new(&oa, b, f)?)?
        }
        Method::Kron | Method::KronBase => {
            let b = read_design(args.b.as_deref().ok_or_else(|| usage("--b is required"))?)?;
            let d = read_signs(args.d.as_deref().ok_or_else(|| usage("--d is required"))?)?;
            let r = args.r.unwrap_or(b.rows() as f64);
            if args.a.is_empty() || args.a.len() != args.c.len() {
                return Err(usage("give the same positive number of --a and --c files"));
            }
            let a_list = args.a.iter().map(|p| read_signs(p)).collect::<CliResult<Vec<_>>>()?;
            let c_list = args.c.iter().map(read_design).collect::<nolhd::Result<Vec<_>>>()?;
            if matches!(args.method, Method::KronBase) {
                if a_list.len() != 1 {
                    return Err(usage("kron-base takes exactly one --a and one --c"));
                }
                kronecker_base(&a_list[0], &b, &c_list[0], &d, r)?
            } else {
                let (a_list, c_list) = if a_list.len() == 1 && b.cols() > 1 {
                    // remaining blocks are joint row permutations of the first
                    let (mut al, mut cl) = (a_list.clone(), c_list.clone());
                    for _ in 1..b.cols() {
                        let (a, c) = joint_row_permute(&a_list[0], &c_list[0], &mut rng)?;
                        al.push(a);
                        cl.push(c);
                    }
                    (al, cl)
                } else {
                    (a_list, c_list)
                };
                let out = kronecker_construct(&KroneckerInputs::new(a_list, c_list, b, d, r)?)?;
                if !out.report.latin_hypercube {
                    eprintln!("warning: output is not a Latin hypercube: {}", out.report.lh_reason.clone().unwrap_or_default());
                }
                route = serde_json::to_value(&out.report).map_err(|e| Failure::Runtime(e.to_string()))?;
                out.design
            }
        }
    };

    let mut buf = Vec::new();
    write_design(&mut buf, &design)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    let lh = is_latin_hypercube(&design);
    eprintln!(
        "constructed {}x{} design ({}), latin hypercube: {}",
        design.rows(),
        design.cols(),
        method_name(args.method),
        lh.latin_hypercube
    );
    if let Some(meta) = &args.meta {
        let criteria = if design.cols() >= 2 { Some(compute_criteria(&design, &DEFAULT_THRESHOLDS)?) } else { None };
        let body = json!({
            "n": design.rows(),
            "p": design.cols(),
            "latin_hypercube": lh.latin_hypercube,
            "criteria": criteria,
            "details": route,
        });
        emit_json(Some(meta), &envelope(Some(args.seed), args, &body)?)?;
    }
    Ok(())
}

fn criteria(args: &CriteriaArgs) -> CliResult<()> {
    let x = read_design(&args.input)?;
    let s = compute_criteria(&x, &args.t)?;
    let body = json!({
        "n": x.rows(),
        "p": x.cols(),
        "rho_max": s.rho_max,
        "rho_ave": s.rho_ave,
        "t": s.thresholds,
        "delta": s.delta,
    });
    emit_json(args.out.as_deref(), &envelope(None, args, &body)?)
}

fn check(args: &CheckArgs) -> CliResult<()> {
    let body = if args.oa {
        let rows = read_rows(fs::File::open(&args.input)?)?;
        let mut symbols = 0u32;
        let mut int_rows = Vec::with_capacity(rows.len());
        for row in &rows {
            let mut r = Vec::with_capacity(row.len());
            for &v in row {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(usage(format!("orthogonal array entries must be integers >= 1, got {v}")));
                }
                symbols = symbols.max(v as u32);
                r.push(v as u32);
            }
            int_rows.push(r);
        }
        let oa = OrthogonalArray::from_rows(symbols, &int_rows)?;
        serde_json::to_value(check_oa_strength2(&oa)).map_err(|e| Failure::Runtime(e.to_string()))?
    } else {
        let x = read_design(&args.input)?;
        let mut v = serde_json::to_value(is_latin_hypercube(&x)).map_err(|e| Failure::Runtime(e.to_string()))?;
        v["n"] = json!(x.rows());
        v["p"] = json!(x.cols());
        v
    };
    emit_json(args.out.as_deref(), &envelope(None, args, &body)?)
}

fn lasso(args: &LassoArgs) -> CliResult<()> {
    let x = read_design(&args.x)?;
    let y = read_vector(&args.y)?;
    let opts = SolverOptions { standardize: args.standardize, ..SolverOptions::default() };
    let (lambda, cv) = match args.lambda {
        Some(l) => (l, None),
        None => {
            let grid = lambda_grid(lambda_max(&x, &y)?, args.grid_len, args.grid_ratio)?;
            let cv = cross_validate(&x, &y, args.folds, &grid, &opts, &mut rng_from_seed(args.seed))?;
            (cv.selected_lambda, Some(cv))
        }
    };
    let fit = solve_lasso(&LassoProblem::new(x, y, lambda)?, &opts)?;
    let body = json!({ "fit": fit, "cross_validation": cv });
    let seed = args.lambda.is_none().then_some(args.seed);
    emit_json(args.out.as_deref(), &envelope(seed, args, &body)?)
}

fn load_scenario(spec: &str) -> CliResult<SimScenario> {
    match builtin_scenario(spec) {
        Ok(s) => Ok(s),
        Err(_) if Path::new(spec).exists() => {
            let text = fs::read_to_string(spec)?;
            serde_json::from_str(&text).map_err(|e| usage(format!("scenario {spec}: {e}")))
        }
        Err(e) => Err(usage(format!("{e}; no scenario file at that path either"))),
    }
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut scn = load_scenario(&args.scenario)?;
    if let Some(reps) = args.reps {
        scn.reps = reps;
    }
    if let Some(seed) = args.seed {
        scn.master_seed = seed;
    }
    if args.standardize {
        scn.fit.solver.standardize = true;
    }
    scn.validate()?;
    eprintln!("running {} with {} replications, master seed {}", scn.name, scn.reps, scn.master_seed);
    let report = run_experiment(&scn)?;
    for m in &report.methods {
        eprintln!(
            "  {:<8} q1 {:>6.2}  median {:>6.2}  q3 {:>6.2}",
            m.name, m.quartiles.q1, m.quartiles.median, m.quartiles.q3
        );
    }
    if let Some(path) = &args.gamma_csv {
        fs::write(path, gamma_csv(&report))?;
    }
    emit_json(args.out.as_deref(), &envelope(Some(scn.master_seed), args, &report)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Construct(a) => construct(a),
        Command::Criteria(a) => criteria(a),
        Command::Check(a) => check(a),
        Command::Lasso(a) => lasso(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
