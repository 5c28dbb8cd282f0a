//! Command line front end: hypothesis validation, pointwise evaluation,
//! norms, conjugate tables, the inequality suites and the solver, wired to
//! TOML configs with reproducible seeded runs.
//!
//! Exit codes: 0 all checks pass, 1 an assertion or convergence failure,
//! 2 usage or configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use logphase::energy::{lambda_sweep, solve_sublinear, InitialGuess, SolveOptions};
use logphase::inequality::{self, SumControlKind, YoungDenominator};
use logphase::mesh::{Mesh, MeshFunction};
use logphase::modular::{luxemburg_norm, NormKind};
use logphase::phi::{PhiEvaluator, PhiKind};
use logphase::problem::{pick_epsilon, validate_hypotheses};
use logphase::sobolev::{default_ell, SobolevConjugate};
use logphase::{config, DomainKind, Error, InequalityReport, Point};

#[derive(Parser)]
#[command(name = "logphase", version, about = "Logarithmic double phase toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Seed for all random sampling in this run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; reports print to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override: margin tolerance for checks, residual
    /// tolerance for solves.
    #[arg(long)]
    tol: Option<f64>,
    /// Sample count per inequality suite.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Scan every standing hypothesis and report margins.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a named density at a point.
    Eval {
        #[command(flatten)]
        common: Common,
        /// One of: s, ds, d2s, s-hat, s-star, s-star-sub, m-eps,
        /// m-eps-star, conjugate.
        #[arg(long)]
        kind: String,
        /// Sample point "x" or "x,y".
        #[arg(long, default_value = "0.5")]
        point: String,
        /// Argument t (or a grid "lo:hi:n" via --t-grid).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        t_grid: Option<String>,
        /// Splice parameter for s-hat / conjugate kinds.
        #[arg(long)]
        ell: Option<f64>,
        /// Perturbation for the m-eps kinds; defaults to the separation
        /// search.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Luxemburg norms of a mesh function read from CSV.
    Norm {
        #[command(flatten)]
        common: Common,
        /// CSV rows vertex_id,x[,y],value on the config mesh.
        #[arg(long)]
        input: PathBuf,
        /// value | gradient | sobolev | all
        #[arg(long, default_value = "all")]
        which: String,
    },
    /// Tabulate the Sobolev conjugate at a sample point.
    ConjugateTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0.5")]
        point: String,
        #[arg(long)]
        ell: Option<f64>,
        /// Upper end of the u-grid backing the table.
        #[arg(long, default_value_t = 1e4)]
        u_max: f64,
        #[arg(long, default_value_t = 200)]
        rows: usize,
    },
    /// Run the sampled inequality suites.
    CheckInequalities {
        #[command(flatten)]
        common: Common,
        /// Comma list of suites, or "all": log-product, young-log,
        /// matuszewska, vector-monotonicity, sum-control,
        /// submultiplicative, weaker-phi.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Solve the sublinear-regime problem at one parameter pair.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Subcritical reaction weight.
        #[arg(long)]
        lambda: f64,
        /// Critical reaction weight.
        #[arg(long, default_value_t = 1.0)]
        big_lambda: f64,
    },
    /// Solve along a decreasing lambda list with warm starts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated decreasing list, e.g. "0.1,0.05,0.02,0.01".
        #[arg(long)]
        lambdas: String,
        #[arg(long, default_value_t = 1.0)]
        big_lambda: f64,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MUSIELAK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

struct Loaded {
    cfg: config::Config,
    hash: String,
}

fn load(common: &Common) -> Result<Loaded, Error> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { cfg: config::parse_config(&text)?, hash })
}

fn parse_point(s: &str, dim: usize) -> Result<Point, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad coordinate `{t}`")))
    };
    match (parts.len(), dim) {
        (1, 1) => Ok([parse(parts[0])?, 0.0]),
        (2, 2) => Ok([parse(parts[0])?, parse(parts[1])?]),
        _ => Err(Error::Config(format!(
            "point `{s}` does not match the {dim}D domain"
        ))),
    }
}

fn emit(out: &Option<PathBuf>, name: &str, body: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), body)?;
            Ok(())
        }
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn build_mesh(cfg: &config::Config) -> std::sync::Arc<Mesh> {
    match cfg.data.domain {
        DomainKind::Interval => Mesh::unit_interval(cfg.mesh_resolution),
        DomainKind::UnitSquare => Mesh::unit_square(cfg.mesh_resolution),
    }
}

fn csv_header(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} seed={seed}")
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Validate { common } => {
            let loaded = load(&common)?;
            let report = validate_hypotheses(&loaded.cfg.data, loaded.cfg.grid_resolution)?;
            let body = serde_json::to_string_pretty(&json!({
                "config_hash": loaded.hash,
                "seed": common.seed,
                "report": report,
            }))
            .unwrap();
            emit(&common.out, "hypotheses.json", &body)?;
            Ok(report.all_pass)
        }
        Command::Eval { common, kind, point, t, t_grid, ell, eps } => {
            let loaded = load(&common)?;
            let data = &loaded.cfg.data;
            let x = parse_point(&point, data.dim())?;
            let eps = match eps {
                Some(e) => e,
                None => pick_epsilon(data)?,
            };
            let ell = ell
                .or(loaded.cfg.solver.ell)
                .unwrap_or_else(|| default_ell(data, eps));
            let phi_kind = match kind.as_str() {
                "s" => PhiKind::S,
                "s-hat" => PhiKind::SHat { ell },
                "s-star" => PhiKind::StarCritical,
                "s-star-sub" => PhiKind::StarSub,
                "m-eps" => PhiKind::MEps { eps },
                "m-eps-star" => PhiKind::MEpsStar { eps },
                "conjugate" => PhiKind::ConjugateOf(Box::new(PhiKind::S)),
                "ds" | "d2s" => PhiKind::S,
                other => return Err(Error::Config(format!("unknown eval kind `{other}`"))),
            };
            let ev = PhiEvaluator::new(data, phi_kind)?;
            let eval_one = |t: f64| -> Result<f64, Error> {
                match kind.as_str() {
                    "ds" => ev.derivative(x, t),
                    "d2s" => ev.second_derivative(x, t),
                    _ => ev.value(x, t),
                }
            };
            let ts: Vec<f64> = match (t, t_grid) {
                (Some(v), None) => vec![v],
                (None, Some(spec)) => {
                    let parts: Vec<&str> = spec.split(':').collect();
                    if parts.len() != 3 {
                        return Err(Error::Config(format!("bad t grid `{spec}`, want lo:hi:n")));
                    }
                    let lo: f64 = parts[0].parse().map_err(|_| Error::Config("bad lo".into()))?;
                    let hi: f64 = parts[1].parse().map_err(|_| Error::Config("bad hi".into()))?;
                    let n: usize = parts[2].parse().map_err(|_| Error::Config("bad n".into()))?;
                    if n < 2 || hi <= lo {
                        return Err(Error::Config("t grid needs hi > lo and n >= 2".into()));
                    }
                    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
                }
                _ => return Err(Error::Config("give exactly one of --t or --t-grid".into())),
            };
            let mut body = String::new();
            body.push_str(&csv_header(&loaded.hash, common.seed));
            body.push('\n');
            body.push_str("t,value\n");
            for tv in ts {
                body.push_str(&format!("{tv},{}\n", eval_one(tv)?));
            }
            emit(&common.out, "eval.csv", body.trim_end())?;
            Ok(true)
        }
        Command::Norm { common, input, which } => {
            let loaded = load(&common)?;
            let mesh = build_mesh(&loaded.cfg);
            let file = fs::File::open(&input)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", input.display())))?;
            let u = MeshFunction::read_csv(&mesh, std::io::BufReader::new(file))?;
            let mut values = serde_json::Map::new();
            let kinds: Vec<(&str, NormKind)> = match which.as_str() {
                "value" => vec![("value", NormKind::Value)],
                "gradient" => vec![("gradient", NormKind::Gradient)],
                "sobolev" => vec![("sobolev", NormKind::Sobolev)],
                "all" => vec![
                    ("value", NormKind::Value),
                    ("gradient", NormKind::Gradient),
                    ("sobolev", NormKind::Sobolev),
                ],
                other => return Err(Error::Config(format!("unknown norm kind `{other}`"))),
            };
            for (name, kind) in kinds {
                values.insert(name.into(), json!(luxemburg_norm(&loaded.cfg.data, &u, kind)?));
            }
            let body = serde_json::to_string_pretty(&json!({
                "config_hash": loaded.hash,
                "seed": common.seed,
                "norms": values,
            }))
            .unwrap();
            emit(&common.out, "norms.json", &body)?;
            Ok(true)
        }
        Command::ConjugateTable { common, point, ell, u_max, rows } => {
            let loaded = load(&common)?;
            let data = &loaded.cfg.data;
            let x = parse_point(&point, data.dim())?;
            let ell = match ell.or(loaded.cfg.solver.ell) {
                Some(l) => l,
                None => default_ell(data, pick_epsilon(data)?),
            };
            let sc = SobolevConjugate::new(data, x, ell)?;
            let table = sc.table(u_max.max(2.0 * ell), rows)?;
            let mut body = String::new();
            body.push_str(&csv_header(&loaded.hash, common.seed));
            body.push('\n');
            body.push_str("s,S_star_inv,t,S_star\n");
            for (s, t) in table.knots.iter().zip(&table.values) {
                // Each row is an exact (s, t) pair of the conjugate, so the
                // last two columns mirror the first two.
                body.push_str(&format!("{s},{t},{t},{s}\n"));
            }
            emit(&common.out, "conjugate_table.csv", body.trim_end())?;
            Ok(true)
        }
        Command::CheckInequalities { common, suite } => {
            let loaded = load(&common)?;
            let data = &loaded.cfg.data;
            let known = [
                "log-product",
                "young-log",
                "matuszewska",
                "vector-monotonicity",
                "sum-control",
                "submultiplicative",
                "weaker-phi",
            ];
            let suites: Vec<String> = if suite == "all" {
                known.iter().map(|s| s.to_string()).collect()
            } else {
                let list: Vec<String> = suite.split(',').map(|s| s.trim().to_string()).collect();
                for s in &list {
                    if !known.contains(&s.as_str()) {
                        return Err(Error::Config(format!("unknown suite `{s}`")));
                    }
                }
                list
            };
            let mut reports: Vec<InequalityReport> = Vec::new();
            let mut all_pass = true;
            let samples = common.samples;
            let seed = common.seed;
            let tol = common.tol.unwrap_or(1e-10);
            for name in &suites {
                match name.as_str() {
                    "log-product" => {
                        let rep = inequality::check_log_product(samples, seed);
                        all_pass &= rep.passes(tol.max(1e-12));
                        reports.push(rep);
                    }
                    "young-log" => {
                        let a = inequality::check_young_log(
                            data,
                            samples,
                            seed,
                            YoungDenominator::AsStated,
                        );
                        let b = inequality::check_young_log(
                            data,
                            samples,
                            seed,
                            YoungDenominator::OnePlusT,
                        );
                        // At least one denominator variant must pass.
                        all_pass &= a.passes(tol.max(1e-12))
                            || b.passes(tol.max(1e-12));
                        reports.push(a);
                        reports.push(b);
                    }
                    "matuszewska" => {
                        let rep = inequality::check_matuszewska(data, samples, seed);
                        all_pass &= rep.passes(tol);
                        reports.push(rep);
                    }
                    "vector-monotonicity" => {
                        for dim in [2usize, 3] {
                            let rep = inequality::check_vector_monotonicity(samples, seed, dim);
                            all_pass &= rep.passes(tol);
                            reports.push(rep);
                        }
                    }
                    "sum-control" => {
                        let x = match data.dim() {
                            1 => [0.5, 0.0],
                            _ => [0.5, 0.5],
                        };
                        for kind in [SumControlKind::S, SumControlKind::StarCritical] {
                            let rep = inequality::fit_sum_control_constant(
                                data, x, kind, 0.1, samples, seed,
                            )?;
                            let rep2 = inequality::fit_sum_control_constant(
                                data,
                                x,
                                kind,
                                0.1,
                                samples * 2,
                                seed,
                            )?;
                            let (c1, c2) =
                                (rep.constant("c_eps").unwrap(), rep2.constant("c_eps").unwrap());
                            let drift = (c1 - c2).abs() / c1.abs().max(1e-12);
                            let mut rep = rep;
                            rep.push_constant("c_eps_2x", c2);
                            rep.push_constant("refinement_drift", drift);
                            all_pass &= c1.is_finite() && drift <= 0.10;
                            reports.push(rep);
                        }
                    }
                    "submultiplicative" => {
                        let rep =
                            inequality::check_submultiplicative_lower(data, samples, seed)?;
                        all_pass &= rep.passes(tol);
                        reports.push(rep);
                    }
                    "weaker-phi" => {
                        // Defaults honoring the admissibility conditions:
                        // j = q on {s > 0}, strictly below q elsewhere;
                        // m = min{s, 0}.
                        let j = |x: Point| {
                            let q = data.q.eval(x);
                            if data.s.eval(x) > 0.0 {
                                q
                            } else {
                                q - 0.2 * (q - 1.0)
                            }
                        };
                        let m = |x: Point| data.s.eval(x).min(0.0);
                        let rep = inequality::check_weaker_phi(data, samples, seed, &j, &m)?;
                        all_pass &= rep.passes(tol)
                            && rep.constant("h_max").unwrap().is_finite();
                        reports.push(rep);
                    }
                    _ => unreachable!(),
                }
            }
            let body = serde_json::to_string_pretty(&json!({
                "config_hash": loaded.hash,
                "seed": seed,
                "samples": samples,
                "reports": reports,
                "all_pass": all_pass,
            }))
            .unwrap();
            emit(&common.out, "inequalities.json", &body)?;
            Ok(all_pass)
        }
        Command::Solve { common, lambda, big_lambda } => {
            let loaded = load(&common)?;
            let mesh = build_mesh(&loaded.cfg);
            let opts = SolveOptions {
                tol: common.tol.unwrap_or(loaded.cfg.solver.tol),
                max_iters: loaded.cfg.solver.max_iters,
                lambda_cap: loaded.cfg.solver.lambda_cap,
                ..SolveOptions::default()
            };
            let report = solve_sublinear(
                &loaded.cfg.data,
                &mesh,
                lambda,
                big_lambda,
                InitialGuess::Seeded(common.seed),
                &opts,
            )?;
            let mut csv = Vec::new();
            report
                .solution
                .write_csv(&mut csv, &format!("config_hash={} seed={}", loaded.hash, common.seed))?;
            emit(&common.out, "solution.csv", String::from_utf8(csv).unwrap().trim_end())?;
            let body = serde_json::to_string_pretty(&json!({
                "config_hash": loaded.hash,
                "seed": common.seed,
                "lambda": lambda,
                "big_lambda": big_lambda,
                "report": report,
            }))
            .unwrap();
            emit(&common.out, "solve.json", &body)?;
            Ok(report.converged)
        }
        Command::Sweep { common, lambdas, big_lambda } => {
            let loaded = load(&common)?;
            let mesh = build_mesh(&loaded.cfg);
            let list: Result<Vec<f64>, _> =
                lambdas.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let list = list.map_err(|_| Error::Config(format!("bad lambda list `{lambdas}`")))?;
            if list.is_empty() {
                return Err(Error::Config("lambda list is empty".into()));
            }
            let opts = SolveOptions {
                tol: common.tol.unwrap_or(loaded.cfg.solver.tol),
                max_iters: loaded.cfg.solver.max_iters,
                lambda_cap: loaded.cfg.solver.lambda_cap,
                ..SolveOptions::default()
            };
            let (rows, _) =
                lambda_sweep(&loaded.cfg.data, &mesh, &list, big_lambda, common.seed, &opts)?;
            let mut body = String::new();
            body.push_str(&csv_header(&loaded.hash, common.seed));
            body.push('\n');
            body.push_str("lambda,norm_1S,energy,residual,iterations,converged\n");
            for r in &rows {
                body.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.lambda, r.norm_1s, r.energy, r.residual, r.iterations, r.converged
                ));
            }
            emit(&common.out, "sweep.csv", body.trim_end())?;
            Ok(rows.iter().all(|r| r.converged))
        }
    }
}

