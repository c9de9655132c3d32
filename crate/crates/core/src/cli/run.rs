//! Config to files: dispatch, provenance, exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{rect, ExperimentConfig, ExperimentKind};
use super::output::{cloud_csv, grid_csv, grid_pgm, write};
use super::Cli;
use crate::error::Error;
use crate::experiments::{self, Outcome};
use crate::measures::DiskSampler;
use crate::param::CubicSliceSpec;
use crate::poly::Poly;
use crate::roots::Square;

pub const DEFAULT_OUTPUT: &str = "derivdist-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    VerdictFailed = 1,
    Config = 2,
    Numeric = 3,
}

enum Failure {
    Config(String),
    Numeric(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Failure::Config(msg),
            other => Failure::Numeric(other),
        }
    }
}

fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T, Failure> {
    v.clone().ok_or_else(|| Failure::Config(format!("config field `{field}` is required")))
}

fn poly(cfg: &ExperimentConfig) -> Result<Poly, Failure> {
    Ok(Poly::new(need(&cfg.poly, "poly")?))
}

/// Runs one resolved config.
pub fn execute(kind: ExperimentKind, cfg: &ExperimentConfig) -> crate::Result<Outcome> {
    execute_inner(kind, cfg).map_err(|f| match f {
        Failure::Config(msg) | Failure::Io(msg) => Error::InvalidInput(msg),
        Failure::Numeric(e) => e,
    })
}

fn execute_inner(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    use ExperimentKind as K;
    let th = &cfg.thresholds;
    let report_only = |report| Outcome {
        report,
        clouds: Vec::new(),
        fields: Vec::new(),
    };
    let out = match kind {
        K::PhaseRoots => experiments::phase_roots(
            &poly(cfg)?,
            need(&cfg.n, "n")?,
            need(&cfg.k, "k")?,
            need(&cfg.lambda, "lambda")?,
            cfg.search.map(|s| Square::new(s.center, s.half_width)),
            th,
        )?,
        K::PhasePotential => experiments::potential_convergence(
            &poly(cfg)?,
            need(&cfg.k, "k")?,
            need(&cfg.lambda, "lambda")?,
            &need(&cfg.ns, "ns")?,
            &need(&cfg.grid, "grid")?.spec(),
            need(&cfg.mask_green, "mask_green")?,
            th,
        )?,
        K::PbAverage => experiments::pb_average_check(
            &poly(cfg)?,
            need(&cfg.n, "n")?,
            &DiskSampler {
                radius: need(&cfg.radius, "radius")?,
                count: need(&cfg.samples, "samples")?,
                seed: need(&cfg.seed, "seed")?,
            },
            &need(&cfg.grid, "grid")?.spec(),
            need(&cfg.mask_green, "mask_green")?,
            th,
        )?,
        K::Brolin => experiments::brolin_comparison(
            &poly(cfg)?,
            need(&cfg.n, "n")?,
            need(&cfg.k, "k")?,
            need(&cfg.lambda, "lambda")?,
            need(&cfg.depth, "depth")?,
            need(&cfg.count, "count")?,
            need(&cfg.seed, "seed")?,
            rect(need(&cfg.rect, "rect")?),
            th,
        )?,
        K::Classify => report_only(experiments::classify_experiment(&poly(cfg)?, need(&cfg.budget, "budget")?, th)?),
        K::ParamRoots => {
            experiments::param_roots(need(&cfg.n, "n")?, &Poly::new(need(&cfg.lambda_poly, "lambda_poly")?), th)?
        }
        K::ParamPotential => experiments::param_potential_check(
            need(&cfg.n, "n")?,
            &Poly::new(need(&cfg.lambda_poly, "lambda_poly")?),
            &need(&cfg.grid, "grid")?.spec(),
            need(&cfg.mask_green, "mask_green")?,
            th,
        )?,
        K::EscapeEstimate => report_only(experiments::escape_estimate(
            need(&cfg.samples, "samples")?,
            need(&cfg.seed, "seed")?,
            rect(need(&cfg.rect, "rect")?),
            &need(&cfg.ns, "ns")?,
            need(&cfg.mask_green, "mask_green")?,
            th,
        )?),
        K::CubicSlice => {
            let slice = need(&cfg.slice, "slice")?;
            let spec = CubicSliceSpec {
                base: slice.base,
                direction: slice.direction,
                critical_index: slice.critical_index,
                n: need(&cfg.n, "n")?,
                lambda: need(&cfg.lambda, "lambda")?,
            };
            experiments::cubic_slice(&spec, &need(&cfg.grid, "grid")?.spec(), need(&cfg.mask_green, "mask_green")?)?
        }
        K::Cohomology => report_only(experiments::cohomology_count(
            &poly(cfg)?,
            need(&cfg.n, "n")?,
            need(&cfg.u0, "u0")?,
            need(&cfg.z0, "z0")?,
            need(&cfg.u1, "u1")?,
            th,
        )?),
        K::PowerCheck => experiments::power_map_check(need(&cfg.d, "d")?, need(&cfg.n, "n")?, need(&cfg.lambda, "lambda")?, th)?,
        K::OrbitProfile => experiments::orbit_profile(
            &poly(cfg)?,
            need(&cfg.n, "n")?,
            need(&cfg.k, "k")?,
            need(&cfg.lambda, "lambda")?,
            need(&cfg.horizon, "horizon")?,
        )?,
    };
    Ok(out)
}

/// SHA-256 of the resolved config with the output directory removed.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hashed = cfg.clone();
    hashed.output = None;
    hex::encode(Sha256::digest(serde_json::to_vec(&hashed).expect("config serializes")))
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text).map_err(Failure::Config)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    cfg.resolve(cli.experiment).map_err(Failure::Config)
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, hash: &str, mut outcome: Outcome) -> Result<bool, Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("writing {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut artifacts = Vec::new();
    for (name, cloud) in &outcome.clouds {
        let file = format!("cloud_{name}.csv");
        write(dir, &file, cloud_csv(cloud, hash).as_bytes()).map_err(io)?;
        artifacts.push(file);
    }
    for (name, field) in &outcome.fields {
        let file = format!("field_{name}.csv");
        write(dir, &file, grid_csv(field, hash).as_bytes()).map_err(io)?;
        artifacts.push(file);
        if let Some((lo, hi)) = field.range() {
            let image = cfg.image.unwrap_or_default();
            let file = format!("field_{name}.pgm");
            let pgm = grid_pgm(field, image.min.unwrap_or(lo), image.max.unwrap_or(hi), hash);
            write(dir, &file, &pgm).map_err(io)?;
            artifacts.push(file);
        }
    }
    outcome.report.artifacts = artifacts;
    let passed = outcome.report.passed();
    let doc = json!({
        "provenance": provenance(cfg, hash),
        "config": cfg,
        "report": outcome.report,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    write(dir, "report.json", text.as_bytes()).map_err(io)?;
    Ok(passed)
}

fn provenance(cfg: &ExperimentConfig, hash: &str) -> serde_json::Value {
    json!({
        "config_hash": hash,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn write_error(dir: &Path, cfg: &ExperimentConfig, hash: &str, err: &Error) {
    let audit = match err {
        Error::CountMismatch { audit, .. } => json!(audit),
        _ => json!([]),
    };
    let doc = json!({
        "provenance": provenance(cfg, hash),
        "config": cfg,
        "error": err.to_string(),
        "audit": audit,
    });
    let text = serde_json::to_string_pretty(&doc).expect("error serializes") + "\n";
    if fs::create_dir_all(dir).and_then(|_| write(dir, "error.json", text.as_bytes())).is_err() {
        eprintln!("could not write error.json to {}", dir.display());
    }
}

/// Parses, runs and writes one experiment; the exit code follows
/// [`Exit`].
pub fn run(cli: &Cli) -> Exit {
    let cfg = match load(cli) {
        Ok(cfg) => cfg,
        Err(Failure::Config(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            return Exit::Config;
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            return Exit::Numeric;
        }
    };
    let dir: PathBuf = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let hash = config_hash(&cfg);
    let kind = cli.experiment;
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute_inner(kind, &cfg)),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return Exit::Config;
            }
        },
        None => execute_inner(kind, &cfg),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            return Exit::Config;
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            write_error(&dir, &cfg, &hash, &e);
            return Exit::Numeric;
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            return Exit::Numeric;
        }
    };
    let summary: Vec<String> = outcome
        .report
        .verdicts
        .iter()
        .map(|v| format!("{} {}", v.metric, if v.passed { "ok" } else { "FAILED" }))
        .collect();
    match write_outputs(&dir, &cfg, &hash, outcome) {
        Ok(passed) => {
            println!("{}: {} [{}] -> {}", kind.name(), if passed { "pass" } else { "FAIL" }, summary.join(", "), dir.display());
            if passed {
                Exit::Pass
            } else {
                Exit::VerdictFailed
            }
        }
        Err(Failure::Io(msg)) | Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            Exit::Numeric
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            Exit::Numeric
        }
    }
}
