//! The `intersective` command line: argument parsing, experiment configs and
//! JSON/CSV output. The binary is a thin wrapper around [`main`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result, anyhow, bail};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};
use sha2::{Digest, Sha256};

use crate::exp_sums::{CERTIFICATE_MARGIN, gauss_obstruction, weyl_certificate, weyl_sum};
use crate::hp::{HpReal, required_bits};
use crate::lattice::{
    AlternativeSearch, Lattice, ThetaConfig, alternative_check, f_avg, poisson_check, theta,
};
use crate::padic::{RootSystem, certify_intersective};
use crate::poly::IntPoly;
use crate::recurrence::{
    AlphaSpec, ExperimentKind, ScalingSpec, best_recurrence, kronecker_search, scaling_experiment,
    system_recurrence,
};

const CSV_HELP: &str = "\
Output of `recur` and `scaling`: CSV with columns
  N         search bound
  max_norm  min over 1 <= n <= N of max_j ||h_j(n) alpha_j||
  n_star    the smallest minimizing n
plus a JSON sidecar (<out>.json, or stderr without --out) holding the fit,
seed, precision and config hash.";

#[derive(Debug, Parser)]
#[command(name = "intersective", version, about = "Recurrence experiments for intersective polynomials", after_help = CSV_HELP)]
pub struct Cli {
    /// Absolute tolerance for truncated theta sums.
    #[arg(long, global = true, env = "INTERSECTIVE_TOL")]
    pub tol: Option<f64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "INTERSECTIVE_WORKERS")]
    pub workers: Option<usize>,
    /// Seed for random alpha vectors; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path; `recur` and `scaling` also write `<out>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify or refute that a polynomial has a root modulo every integer.
    /// Exit status 0: no obstruction or integer root; 1: refuted; 2: error.
    CheckIntersective {
        poly: String,
        #[arg(long, default_value_t = 100)]
        prime_bound: u64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
    /// The root r_q, the scale lambda(q) and the auxiliary polynomial h_q.
    AuxPoly { poly: String, q: u64 },
    /// Theta_L(t, x).
    Theta(ThetaArgs),
    /// Both sides of the Poisson summation identity for Theta_L(t, x).
    Poisson(ThetaArgs),
    /// The averaged quantity F_{h_q,L,alpha}(N).
    FAvg(AverageArgs),
    /// The F >= 1/2 or short-dual-vector dichotomy.
    Alternative {
        #[command(flatten)]
        avg: AverageArgs,
        #[arg(long)]
        xi_radius: f64,
        #[arg(long)]
        qprime_max: u64,
        #[arg(long)]
        norm_tol: f64,
    },
    /// Weyl sum of h at theta and, when it is at least delta, a near-rational certificate.
    Weyl {
        poly: String,
        theta: String,
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = CERTIFICATE_MARGIN)]
        margin: f64,
    },
    /// Gauss sums of x^2 a_1 + x^3 a_2 mod q with and without a shared factor g.
    GaussDemo {
        q: u64,
        g: u64,
        #[arg(long)]
        n: Option<u64>,
    },
    /// A single recurrence search from a TOML config.
    Recur { config: PathBuf },
    /// A grid of recurrence searches with a log-log fit, from a TOML config.
    Scaling { config: PathBuf },
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    /// `Z^d`, `R*Z^d`, a row-major matrix `[[a,b],[c,d]]` (columns are
    /// generators), or `{"dim":..,"basis":[..]}`.
    #[arg(long)]
    pub lattice: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    #[arg(long)]
    pub poly: String,
    #[arg(long)]
    pub lattice: String,
    /// Comma-separated reals: decimals, fractions, sqrtN, phi, pi, e, random(seed,stream).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long)]
    pub n: u64,
    /// Modulus for the auxiliary polynomial h_q (1 uses h itself).
    #[arg(long, default_value_t = 1)]
    pub q: u64,
}

/// A `recur` or `scaling` run. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub polys: Vec<String>,
    #[serde(default)]
    pub alpha: Option<Vec<String>>,
    #[serde(default)]
    pub random_alpha: Option<RandomAlpha>,
    /// Search bound for `recur`.
    #[serde(default)]
    pub n: Option<u64>,
    /// Search bounds for `scaling`.
    #[serde(default)]
    pub grid: Option<Vec<u64>>,
    #[serde(default)]
    pub require_nonzero: Option<bool>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomAlpha {
    pub d: usize,
    pub seed: u64,
}

/// A config with every default filled in and every string parsed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedExperiment {
    pub kind: ExperimentKind,
    pub polys: Vec<IntPoly>,
    pub alpha: AlphaSpec,
    pub require_nonzero: bool,
    pub grid: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid experiment config")
    }

    pub fn resolve(&self, seed_override: Option<u64>) -> Result<ResolvedExperiment> {
        let polys = self
            .polys
            .iter()
            .map(|p| IntPoly::parse(p).map_err(|e| anyhow!("polynomial {p:?}: {e}")))
            .collect::<Result<Vec<_>>>()?;
        let alpha = match (&self.alpha, &self.random_alpha) {
            (Some(list), None) => AlphaSpec::Fixed(
                list.iter()
                    .map(|a| a.parse::<HpReal>().map_err(|e| anyhow!("alpha {a:?}: {e}")))
                    .collect::<Result<_>>()?,
            ),
            (None, Some(r)) => AlphaSpec::Random {
                d: r.d,
                seed: seed_override.unwrap_or(r.seed),
            },
            _ => bail!("exactly one of `alpha` and `random_alpha` must be given"),
        };
        let d = match &alpha {
            AlphaSpec::Fixed(v) => v.len(),
            AlphaSpec::Random { d, .. } => *d,
        };
        if d == 0 {
            bail!("alpha must have at least one coordinate");
        }
        match self.kind {
            ExperimentKind::Kronecker if !polys.is_empty() => bail!("kronecker takes no polynomials"),
            ExperimentKind::Polynomial if polys.len() != 1 => bail!("polynomial takes exactly one polynomial"),
            ExperimentKind::System if polys.len() != d => {
                bail!("system needs one polynomial per alpha coordinate")
            }
            _ => {}
        }
        let grid = match (self.n, &self.grid) {
            (Some(n), None) => vec![n],
            (None, Some(g)) => g.clone(),
            _ => bail!("exactly one of `n` and `grid` must be given"),
        };
        Ok(ResolvedExperiment {
            kind: self.kind,
            polys,
            alpha,
            require_nonzero: self
                .require_nonzero
                .unwrap_or(self.kind == ExperimentKind::Polynomial),
            grid,
        })
    }
}

/// Hex SHA-256 of the canonical JSON of `v`.
pub fn config_hash<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Splits on commas outside parentheses and brackets.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts.into_iter().filter(|p| !p.is_empty()).collect()
}

pub fn parse_alpha(s: &str) -> Result<Vec<HpReal>> {
    split_top_level(s)
        .into_iter()
        .map(|a| a.parse::<HpReal>().map_err(|e| anyhow!("alpha {a:?}: {e}")))
        .collect()
}

pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    split_top_level(s)
        .into_iter()
        .map(|v| v.parse::<f64>().with_context(|| format!("coordinate {v:?}")))
        .collect()
}

pub fn parse_lattice(s: &str) -> Result<Lattice> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).context("lattice JSON");
    }
    if s.starts_with('[') {
        let rows: Vec<Vec<f64>> = serde_json::from_str(s).context("lattice matrix")?;
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            bail!("lattice matrix must be square");
        }
        return Ok(Lattice::from_row_major(dim, &rows.concat())?);
    }
    let (scale, body) = match s.split_once('*') {
        Some((r, body)) => (r.trim().parse::<f64>().context("lattice scale")?, body.trim()),
        None => (1.0, s),
    };
    let d = body
        .strip_prefix("Z^")
        .map(|d| d.parse::<usize>())
        .or_else(|| (body == "Z").then_some(Ok(1)))
        .ok_or_else(|| anyhow!("unrecognized lattice {s:?}"))?
        .context("lattice dimension")?;
    Ok(Lattice::scaled_integer(scale, d)?)
}

fn parse_poly(s: &str) -> Result<IntPoly> {
    IntPoly::parse(s).map_err(|e| anyhow!("polynomial {s:?}: {e}"))
}

fn envelope(config: &Value, seed: Option<u64>, precision_bits: Option<u32>, result: Value) -> Value {
    json!({
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "precision_bits": precision_bits,
        "result": result,
    })
}

fn theta_config(tol: Option<f64>) -> Result<ThetaConfig> {
    let mut cfg = ThetaConfig::default();
    if let Some(t) = tol {
        if !(t > 0.0) {
            bail!("--tol must be positive");
        }
        cfg.tol = t;
    }
    Ok(cfg)
}

fn auxiliary_poly(h: &IntPoly, q: u64) -> Result<IntPoly> {
    if q == 1 {
        return Ok(h.clone());
    }
    Ok(RootSystem::covering(h, q)?.auxiliary(q)?.h_q)
}

/// What a subcommand produced.
pub struct Outcome {
    pub json: Option<Value>,
    pub csv: Option<String>,
    pub exit: u8,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Outcome {
            json: Some(v),
            csv: None,
            exit: 0,
        }
    }
}

/// Runs a parsed command line without touching stdout.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = theta_config(cli.tol)?;
    match &cli.command {
        Command::CheckIntersective {
            poly,
            prime_bound,
            depth,
        } => {
            let h = parse_poly(poly)?;
            let verdict = certify_intersective(&h, *prime_bound, *depth)?;
            let config = json!({"command": "check-intersective", "poly": h.to_string(), "prime_bound": prime_bound, "depth": depth});
            Ok(Outcome {
                exit: if verdict.is_refuted() { 1 } else { 0 },
                ..Outcome::json(envelope(&config, None, None, serde_json::to_value(&verdict)?))
            })
        }
        Command::AuxPoly { poly, q } => {
            let h = parse_poly(poly)?;
            let aux = RootSystem::covering(&h, *q)?.auxiliary(*q)?;
            let config = json!({"command": "aux-poly", "poly": h.to_string(), "q": q});
            Ok(Outcome::json(envelope(&config, None, None, serde_json::to_value(&aux)?)))
        }
        Command::Theta(a) | Command::Poisson(a) => {
            let lattice = parse_lattice(&a.lattice)?;
            let x = parse_point(&a.x)?;
            let is_theta = matches!(cli.command, Command::Theta(_));
            let config = json!({
                "command": if is_theta { "theta" } else { "poisson" },
                "lattice": &lattice, "t": a.t, "x": &x, "tol": cfg.tol,
            });
            let result = if is_theta {
                serde_json::to_value(theta(&lattice, a.t, &x, &cfg)?)?
            } else {
                serde_json::to_value(poisson_check(&lattice, a.t, &x, &cfg)?)?
            };
            Ok(Outcome::json(envelope(&config, None, None, result)))
        }
        Command::FAvg(a) => {
            let (h_q, lattice, alpha) = average_inputs(a)?;
            let f = f_avg(&h_q, &lattice, &alpha, a.n, &cfg)?;
            let config = average_config("f-avg", a, &h_q, &lattice, &alpha, cfg.tol);
            Ok(Outcome::json(envelope(&config, None, Some(f.precision_bits), serde_json::to_value(&f)?)))
        }
        Command::Alternative {
            avg,
            xi_radius,
            qprime_max,
            norm_tol,
        } => {
            let (h_q, lattice, alpha) = average_inputs(avg)?;
            let search = AlternativeSearch {
                xi_radius: *xi_radius,
                qprime_max: *qprime_max,
                norm_tol: *norm_tol,
            };
            let report = alternative_check(&h_q, &lattice, &alpha, avg.q, avg.n, &search, &cfg)?;
            let mut config = average_config("alternative", avg, &h_q, &lattice, &alpha, cfg.tol);
            config["search"] = serde_json::to_value(&search)?;
            Ok(Outcome::json(envelope(
                &config,
                None,
                Some(report.f.precision_bits),
                serde_json::to_value(&report)?,
            )))
        }
        Command::Weyl {
            poly,
            theta,
            n,
            delta,
            margin,
        } => {
            let h = parse_poly(poly)?;
            let th: HpReal = theta.parse().map_err(|e| anyhow!("theta {theta:?}: {e}"))?;
            if !(*delta > 0.0 && *delta < 1.0) || *n == 0 {
                bail!("need 0 < delta < 1 and N >= 1");
            }
            let sum = weyl_sum(&h, &th, *n);
            let cert = weyl_certificate(&h, &th, *n, *delta, *margin);
            let config = json!({"command": "weyl", "poly": h.to_string(), "theta": th.to_string(), "N": n, "delta": delta, "margin": margin});
            let result = json!({
                "modulus": sum.norm(),
                "phase": sum.arg(),
                "sum": [sum.re, sum.im],
                "certificate": cert,
            });
            Ok(Outcome::json(envelope(&config, None, Some(required_bits(&h, *n)), result)))
        }
        Command::GaussDemo { q, g, n } => {
            if *q == 0 || *g == 0 || q % g != 0 {
                bail!("g must be a positive divisor of q");
            }
            let n = n.unwrap_or(*q);
            let row = gauss_obstruction(*q, *g, n);
            let config = json!({"command": "gauss-demo", "q": q, "g": g, "N": n});
            Ok(Outcome::json(envelope(&config, None, None, serde_json::to_value(&row)?)))
        }
        Command::Recur { config } | Command::Scaling { config } => {
            let is_scaling = matches!(cli.command, Command::Scaling { .. });
            run_experiment(config, is_scaling, cli.seed)
        }
    }
}

fn average_inputs(a: &AverageArgs) -> Result<(IntPoly, Lattice, Vec<HpReal>)> {
    let h = parse_poly(&a.poly)?;
    let h_q = auxiliary_poly(&h, a.q)?;
    Ok((h_q, parse_lattice(&a.lattice)?, parse_alpha(&a.alpha)?))
}

fn average_config(cmd: &str, a: &AverageArgs, h_q: &IntPoly, lattice: &Lattice, alpha: &[HpReal], tol: f64) -> Value {
    json!({
        "command": cmd,
        "poly": a.poly,
        "q": a.q,
        "h_q": h_q.to_string(),
        "lattice": lattice,
        "alpha": alpha.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "N": a.n,
        "tol": tol,
    })
}

fn run_experiment(path: &Path, is_scaling: bool, seed: Option<u64>) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw = ExperimentConfig::from_toml(&text)?;
    let plan = raw.resolve(seed)?;
    if let Some(w) = raw.workers {
        set_workers(w);
    }
    let config = json!({
        "command": if is_scaling { "scaling" } else { "recur" },
        "experiment": &plan,
    });
    let seed = plan.alpha.seed();
    if is_scaling {
        let spec = ScalingSpec {
            kind: plan.kind,
            polys: plan.polys.clone(),
            alpha: plan.alpha.clone(),
            require_nonzero: plan.require_nonzero,
        };
        let report = scaling_experiment(&spec, &plan.grid)?;
        Ok(Outcome {
            csv: Some(report.to_csv()),
            json: Some(envelope(&config, seed, Some(report.precision_bits), serde_json::to_value(&report)?)),
            exit: 0,
        })
    } else {
        let [n] = plan.grid[..] else {
            bail!("recur takes a single `n`");
        };
        let alpha = plan.alpha.resolve();
        let r = match plan.kind {
            ExperimentKind::Kronecker => kronecker_search(&alpha, n)?,
            ExperimentKind::Polynomial => best_recurrence(&plan.polys[0], &alpha, n, plan.require_nonzero)?,
            ExperimentKind::System => system_recurrence(&plan.polys, &alpha, n)?,
        };
        let csv = format!(
            "{}\n{},{:e},{}\n",
            crate::recurrence::ScalingReport::CSV_HEADER,
            r.n,
            r.max_norm,
            r.n_star
        );
        Ok(Outcome {
            csv: Some(csv),
            json: Some(envelope(&config, seed, Some(r.precision_bits), serde_json::to_value(&r)?)),
            exit: 0,
        })
    }
}

fn set_workers(n: usize) {
    // the global pool can be built once; later requests keep the first size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
}

fn write_outputs(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json") + "\n";
    match (&cli.out, &outcome.csv, &outcome.json) {
        (Some(path), Some(csv), json) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            if let Some(j) = json {
                let mut side = path.as_os_str().to_owned();
                side.push(".json");
                fs::write(PathBuf::from(side), pretty(j))?;
            }
        }
        (Some(path), None, Some(j)) => fs::write(path, pretty(j))?,
        (None, Some(csv), json) => {
            std::io::stdout().write_all(csv.as_bytes())?;
            if let Some(j) = json {
                std::io::stderr().write_all(pretty(j).as_bytes())?;
            }
        }
        (None, None, Some(j)) => std::io::stdout().write_all(pretty(j).as_bytes())?,
        (_, None, None) => {}
    }
    Ok(())
}

/// Parses `args`, runs the command and writes its output. Exit status 2
/// signals a usage or input error.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        set_workers(w);
    }
    match execute(&cli).and_then(|o| write_outputs(&cli, &o).map(|_| o.exit)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn main() -> ExitCode {
    main_with(std::env::args_os())
}
