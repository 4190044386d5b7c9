use std::io::Write;

use extendicap::capacity::{bound_curve, capacity_bound, CapacityOptions, CapacityQuery, CSV_HEADER};
use extendicap::channels::{tensor_power, Channel, DEFAULT_DIM_CAP};
use extendicap::coding::{error_probabilities, pretty_good_measurement, verify_bound_chain, Code};
use extendicap::extendibility::{bell_noise_povm, bell_povm, is_k_extendible, is_k_ppt_extendible, ExtendOptions, Povm};
use extendicap::io::{channel_to_json, load_channel, load_code, load_povm, matrix_to_json, povm_to_json};
use extendicap::qlinalg::{CMat, Operator, SystemLayout, C64};
use extendicap::symmetry::{reduced_capacity_bound, ReducedQuery};
use extendicap::Error;
use extendicap_sdp::{SolveStatus, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::parse_grid;
use crate::{BoundArgs, CodingArgs, ExportArgs, ExtendArgs, NshotArgs, SolverArgs};

/// Largest reduced-vs-direct difference accepted by `nshot --cross-check`.
const CROSS_CHECK_TOL: f64 = 1e-5;
/// Largest residual accepted for the tester identities of a code.
const IDENTITY_TOL: f64 = 1e-10;

pub enum Failure {
    Validation(String),
    Solver(String),
    Infeasible(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Infeasible(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Solver(_) => "solver",
            Failure::Infeasible(_) => "infeasible",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Solver(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Sdp(_) => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn dim_cap() -> Result<usize, Failure> {
    match std::env::var("EXTENDICAP_DIM_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Failure::Validation(format!("EXTENDICAP_DIM_CAP=`{v}` is not a positive integer"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn solver_options(s: &SolverArgs) -> Result<SolverOptions, Failure> {
    for (name, v) in [("gap-tol", s.gap_tol), ("feas-tol", s.feas_tol)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Failure::Validation(format!("--{name} must lie in (0, 1), got {v}")));
        }
    }
    Ok(SolverOptions { gap_tol: s.gap_tol, feas_tol: s.feas_tol, ..Default::default() })
}

fn capacity_options(s: &SolverArgs) -> Result<CapacityOptions, Failure> {
    Ok(CapacityOptions { solver: solver_options(s)?, dim_cap: dim_cap()?, ..Default::default() })
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(out: &Option<String>, bytes: &[u8]) -> Outcome {
    let written = match out {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().write_all(bytes),
    };
    written.map_err(|e| Failure::Validation(format!("cannot write output: {e}")))
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Failure::Validation(e.to_string());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| Failure::Validation(e.to_string()))
}

pub fn bound(a: BoundArgs) -> Outcome {
    let opts = capacity_options(&a.solver)?;
    let grid = match (&a.eps_grid, a.eps.is_empty(), a.figure1) {
        (Some(spec), _, _) => parse_grid(spec).map_err(Failure::Validation)?,
        (None, false, _) => a.eps.clone(),
        (None, true, true) => parse_grid("0.02:0.3:0.02").map_err(Failure::Validation)?,
        (None, true, false) => return Err(Failure::Validation("give --eps or --eps-grid".into())),
    };
    let (channel, configs) = if a.figure1 {
        (load_channel("example29")?, vec![(1, true), (2, true)])
    } else {
        (load_channel(&a.channel)?, a.k.iter().map(|&k| (k, a.ppt.value())).collect())
    };
    // validate every cell before solving any of them
    for &eps in &grid {
        for &(k, ppt) in &configs {
            extendicap::capacity::build_capacity_sdp(&CapacityQuery { channel: channel.clone(), epsilon: eps, k, ppt }, &opts)?;
        }
    }
    let rows = bound_curve(&channel, &grid, &configs, &opts);
    let fields: Vec<Vec<String>> = rows.iter().map(|r| r.csv_fields(a.wall_times)).collect();
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    emit(&a.out, &csv_bytes(&header, &fields)?)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !matches!(&r.result, Ok(b) if b.reliable()))
        .map(|r| format!("eps {} k {}", r.epsilon, r.k))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("no reliable optimum for {}", bad.join(", "))))
    }
}

fn builtin_povm(spec: &str) -> Result<Option<Povm>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let dim = |s: &str| s.parse::<usize>().map_err(|_| Failure::Validation(format!("bad dimension `{s}`")));
    Ok(match parts.as_slice() {
        ["bell_noise", d] => Some(bell_noise_povm(dim(d)?)?.0),
        ["bell", d] => Some(bell_povm(dim(d)?)?),
        _ => None,
    })
}

fn resolve_povm(spec: &str) -> Result<Povm, Failure> {
    match builtin_povm(spec)? {
        Some(p) => Ok(p),
        None if std::path::Path::new(spec).exists() => Ok(load_povm(spec)?),
        None => Err(Failure::Validation(format!("`{spec}` is neither a built-in POVM nor a file"))),
    }
}

pub fn extend_check(a: ExtendArgs) -> Outcome {
    let povm = resolve_povm(&a.povm)?;
    let opts = ExtendOptions { solver: solver_options(&a.solver)?, dim_cap: dim_cap()?, ..Default::default() };
    let ppt = a.ppt.value();
    let r = if ppt { is_k_ppt_extendible(&povm, a.k, &opts)? } else { is_k_extendible(&povm, a.k, &opts)? };
    let summary = serde_json::json!({
        "povm": a.povm,
        "k": a.k,
        "ppt": ppt,
        "feasible": r.feasible,
        "slack": r.slack,
        "slack_upper": r.slack_upper,
        "status": r.status.as_str(),
        "iterations": r.iterations,
        "witness_residual": r.witness.residuals.max_violation(),
    });
    println!("{summary}");
    if let Some(path) = &a.out {
        let elements: Vec<_> = r
            .witness
            .elements
            .iter()
            .map(|(label, e)| serde_json::json!({ "label": label, "element": matrix_to_json(e.matrix()) }))
            .collect();
        let mut full = summary.clone();
        full["witness"] = serde_json::Value::Array(elements);
        emit(&Some(path.clone()), full.to_string().as_bytes())?;
    }
    match (r.feasible, r.status) {
        (true, _) => Ok(()),
        (false, SolveStatus::Optimal) => Err(Failure::Infeasible(format!(
            "not {}{}-extendible (slack at most {:.3e})",
            a.k,
            if ppt { "-PPT" } else { "" },
            r.slack_upper
        ))),
        (false, s) => Err(Failure::Solver(format!("undecided: solver stopped with status {}", s.as_str()))),
    }
}

pub fn nshot(a: NshotArgs) -> Outcome {
    let channel = load_channel(&a.channel)?;
    let solver = solver_options(&a.solver)?;
    let cap = dim_cap()?;
    let ppt = a.ppt.value();
    let rq = ReducedQuery { channel: channel.clone(), n: a.n, epsilon: a.eps, k: a.k, ppt };
    extendicap::symmetry::build_reduced_capacity_sdp(&rq, cap)?;
    let red = reduced_capacity_bound(&rq, &solver)?;
    let mut row = vec![
        a.n.to_string(),
        a.eps.to_string(),
        a.k.to_string(),
        ppt.to_string(),
        format!("{:.10}", red.bound_bits),
        red.status.as_str().to_string(),
        red.num_scalar_variables.to_string(),
    ];
    let mut mismatch = None;
    if a.cross_check {
        let opts = CapacityOptions { solver, dim_cap: cap, ..Default::default() };
        let q = CapacityQuery { channel: tensor_power(&channel, a.n, cap)?, epsilon: a.eps, k: a.k, ppt };
        let vars = extendicap::capacity::build_capacity_sdp(&q, &opts)?.num_scalar_variables;
        let direct = capacity_bound(&q, &opts)?;
        let diff = (direct.bound_bits - red.bound_bits).abs();
        row.extend([format!("{:.10}", direct.bound_bits), vars.to_string(), format!("{diff:.3e}")]);
        if !direct.reliable() || diff > CROSS_CHECK_TOL {
            mismatch = Some(format!("reduced and direct bounds differ by {diff:.3e} (direct status {})", direct.status.as_str()));
        }
    } else {
        row.extend([String::new(), String::new(), String::new()]);
    }
    let header = ["n", "eps", "k", "ppt", "bound_bits", "status", "variables", "direct_bits", "direct_variables", "difference"];
    emit(&a.out, &csv_bytes(&header, &[row])?)?;
    if red.status != SolveStatus::Optimal {
        return Err(Failure::Solver(format!("reduced program stopped with status {}", red.status.as_str())));
    }
    mismatch.map_or(Ok(()), |m| Err(Failure::Solver(m)))
}

fn random_pure_state(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let v = CMat::from_fn(d, 1, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let v = &v / C64::new(v.norm(), 0.0);
    &v * v.adjoint()
}

/// Random pure inputs decoded by the pretty-good measurement of the channel
/// outputs; a reject outcome, if any, is merged into message 0.
fn random_code(ch: &Channel, messages: usize, seed: u64) -> Result<Code, Failure> {
    if messages == 0 {
        return Err(Failure::Validation("--messages must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let states: Vec<Operator> = (0..messages)
        .map(|_| Operator::new(SystemLayout::single("A", da), random_pure_state(&mut rng, da)))
        .collect::<Result<_, _>>()?;
    let outputs: Vec<Operator> = states
        .iter()
        .map(|s| Operator::new(SystemLayout::single("B", db), ch.apply(s.matrix())?))
        .collect::<Result<_, _>>()?;
    let pgm = pretty_good_measurement(&outputs)?;
    let layout = SystemLayout::single("B", db);
    let mut elems: Vec<CMat> = (0..messages).map(|m| pgm.element(&[m]).expect("one outcome per message").matrix().transpose()).collect();
    if let Some(reject) = pgm.element(&[messages]) {
        elems[0] += reject.matrix().transpose();
    }
    let outcomes = elems
        .into_iter()
        .enumerate()
        .map(|(m, e)| Ok((vec![m], Operator::new(layout.clone(), e)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Code::new(states, Povm::new(layout, outcomes)?)?)
}

pub fn verify_coding(a: CodingArgs) -> Outcome {
    let channel = load_channel(&a.channel)?;
    let code = match &a.code {
        Some(path) => load_code(path)?,
        None => random_code(&channel, a.messages, a.seed)?,
    };
    let db = channel.dim_out();
    let sigma = Operator::new(SystemLayout::single("B", db), CMat::identity(db, db) / C64::new(db as f64, 0.0))?;
    let opts = capacity_options(&a.solver)?;
    let rep = verify_bound_chain(&code, &channel, &sigma, Some(&opts))?;
    let (worst, average) = error_probabilities(&code, &channel)?;
    let rate = (rep.messages as f64).log2();
    let report = serde_json::json!({
        "messages": rep.messages,
        "rate_bits": rate,
        "worst_error": worst,
        "average_error": average,
        "accept_channel": rep.accept_channel,
        "accept_replacer": rep.accept_replacer,
        "channel_identity_residual": rep.channel_identity_residual,
        "replacer_identity_residual": rep.replacer_identity_residual,
        "implied_bits": rep.implied_bits,
        "reject_rank": rep.reject_rank,
        "sdp_bound_bits": rep.sdp_bound_bits,
        "rate_within_bound": rep.rate_within_bound(1e-4),
    });
    emit(&a.out, format!("{report}\n").as_bytes())?;
    let worst_identity = rep.channel_identity_residual.max(rep.replacer_identity_residual);
    if worst_identity > IDENTITY_TOL {
        return Err(Failure::Solver(format!("tester identities hold only to {worst_identity:.3e}")));
    }
    if rep.rate_within_bound(1e-4) == Some(false) {
        return Err(Failure::Solver(format!(
            "rate {rate:.6} exceeds the bound {:.6}",
            rep.sdp_bound_bits.unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

pub fn export(a: ExportArgs) -> Outcome {
    let text = match (&a.channel, &a.povm) {
        (Some(c), _) => serde_json::to_string_pretty(&channel_to_json(&load_channel(c)?)),
        (None, Some(p)) => serde_json::to_string_pretty(&povm_to_json(&resolve_povm(p)?)),
        (None, None) => return Err(Failure::Validation("give --channel or --povm".into())),
    };
    let text = text.map_err(|e| Failure::Validation(e.to_string()))?;
    emit(&a.out, format!("{text}\n").as_bytes())
}
