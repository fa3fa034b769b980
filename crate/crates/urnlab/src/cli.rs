//! Argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 invalid urn
//! configuration, 3 at least one statistical test below its level.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use urnlab_core::density::{circle_grid, estimate_charfn, grid_radii, kde, line_grid, log_radii, radial_sup};
use urnlab_core::exec::Executor;
use urnlab_core::fixpoint::Weights;
use urnlab_core::fixpoint::{
    gaussian_start, iterate_to_fixpoint, target_means, EmpiricalLaw, FixpointConfig, DEFAULT_POOL,
};
use urnlab_core::moments::{ct_joint_moments, dt_joint_moments, MomentTable};
use urnlab_core::rng::{key, lane, stream};
use urnlab_core::simulate::{atomic_w_samples, ring_time, run_dt_from, w_samples, Batch, Mode, WSampleSet};
use urnlab_core::spectral::{eigen_spectrum, BlockClass, JordanBlock, Spectrum};
use urnlab_core::urn::{atomic_basis, AtomicBasis, UrnSpec};
use urnlab_core::verify::{
    test_decomposition, test_dirichlet_limit, test_dislocation, test_forest_decomposition,
    test_martingale_atomic, test_small_clt, test_xi_gamma, TestReport, VerifyConfig, DEFAULT_LEVEL,
    DEFAULT_PERMUTATIONS,
};

use crate::config::{load_valid_spec, read_spec, ConfigError};
use crate::exec::{default_threads, Parallel};
use crate::output::{emit, render_json, render_table, Cell, Format, Table, SCHEMA};

#[derive(Debug, Parser)]
#[command(
    name = "urnlab",
    version,
    about = "Balanced Pólya urns: validation, spectra, simulation and limit laws"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it [default: machine parallelism]
    #[arg(long, global = true, env = "URNLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeMode {
    Dt,
    Ct,
}

impl From<TimeMode> for Mode {
    fn from(m: TimeMode) -> Self {
        match m {
            TimeMode::Dt => Mode::DT,
            TimeMode::Ct => Mode::CT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Gaussian,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Dislocation,
    Decomposition,
    Martingale,
    Dirichlet,
    Clt,
    Forest,
    All,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of standard output
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableOutput {
    /// Write here instead of standard output
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Table format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Sampling {
    /// Eigenvalue of the block to project on, e.g. `6` or `1.5-2i`
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub eigenvalue: Complex64,
    /// Draws per replica
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    /// Independent runs
    #[arg(long, default_value_t = 2_000)]
    pub replicas: usize,
    /// Base seed of every random stream
    #[arg(long)]
    pub seed: u64,
    /// Discrete or continuous (Poissonized) time
    #[arg(long, value_enum, default_value = "dt")]
    pub mode: TimeMode,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check balance, tenability and irreducibility of an urn
    Validate { config: PathBuf },
    /// Eigenvalues, Jordan blocks, their classes and dual vectors
    Spectrum {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Final compositions of independent runs (with the n-th ring time in continuous time)
    Simulate {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        /// Draws per replica
        #[arg(long)]
        steps: u64,
        /// Independent runs
        #[arg(long)]
        replicas: usize,
        /// Base seed of every random stream
        #[arg(long)]
        seed: u64,
        /// Discrete or continuous (Poissonized) time
        #[arg(long, value_enum, default_value = "dt")]
        mode: TimeMode,
        #[command(flatten)]
        out: TableOutput,
    },
    /// Estimates of the limit variable W for every atomic start (or the configured start)
    Wsample {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        /// Start from the configured composition instead of the atomic ones
        #[arg(long)]
        from_alpha: bool,
        #[command(flatten)]
        out: TableOutput,
    },
    /// Exact joint moments E[W^p conj(W)^q] of the atomic limit variables
    Moments {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        /// Eigenvalue of the block to project on, e.g. `6` or `1.5-2i`
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        eigenvalue: Complex64,
        /// Largest total degree p + q
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Particle iteration of the smoothing system towards its fixed point
    Fixpoint {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        /// Eigenvalue of the block to project on, e.g. `6` or `1.5-2i`
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        eigenvalue: Complex64,
        /// Particles per colour
        #[arg(long, default_value_t = DEFAULT_POOL)]
        pool: usize,
        /// Maximum number of map applications
        #[arg(long, default_value_t = 30)]
        iterations: usize,
        /// Base seed of every random stream
        #[arg(long)]
        seed: u64,
        /// Discrete or continuous (Poissonized) time
        #[arg(long, value_enum, default_value = "dt")]
        mode: TimeMode,
        /// Start from mean- and variance-matched Gaussians or from point masses at the means
        #[arg(long, value_enum, default_value = "gaussian")]
        init: Init,
        /// Also write the final pools here
        #[arg(long)]
        law: Option<PathBuf>,
        #[command(flatten)]
        out: TableOutput,
    },
    /// Kernel density estimate of W for one atomic colour
    Density {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        /// Atomic colour, counted from 1
        #[arg(long, default_value_t = 1)]
        colour: usize,
        /// Grid points per axis
        #[arg(long, default_value_t = 128)]
        points: usize,
        /// Bandwidth `h` or `hx,hy` [default: Silverman's rule]
        #[arg(long)]
        bandwidth: Option<String>,
        #[command(flatten)]
        out: TableOutput,
    },
    /// Empirical characteristic function of W for one atomic colour
    Charfn {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = 1)]
        colour: usize,
        /// Radii as `lo:hi:count`, spaced geometrically
        #[arg(long, default_value = "0.5:5:10")]
        radii: String,
        /// Points per circle when W is complex
        #[arg(long, default_value_t = 64)]
        angles: usize,
        /// Emit the radial supremum per radius instead of the grid
        #[arg(long)]
        radial: bool,
        #[command(flatten)]
        out: TableOutput,
    },
    /// Identities in law as two-sample tests: dislocation, decomposition, martingale
    /// connection, Dirichlet limit, small-block CLT and forest representation
    Verify {
        /// Urn configuration: {"R": [[...], ...], "alpha": [...]}
        config: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Significance level per family of tests (Bonferroni-split across colours)
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        /// Base seed of every random stream
        #[arg(long)]
        seed: u64,
        /// Large eigenvalue to test [default: the largest non-principal large one]
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        eigenvalue: Option<Complex64>,
        /// Small eigenvalue for the CLT suite [default: the first small one]
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        small_eigenvalue: Option<Complex64>,
        /// Draws per replica for estimates of W
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Replicas per sample
        #[arg(long, default_value_t = 2_000)]
        replicas: usize,
        /// Permutations per energy test (raised when too few to reach the level)
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        perms: usize,
        /// Draws per replica in the forest suite
        #[arg(long, default_value_t = 1_000)]
        forest_steps: u64,
        /// Draws per replica in the CLT suite
        #[arg(long, default_value_t = 100_000)]
        clt_steps: u64,
        /// Draws per replica of the Pólya–Eggenberger urn
        #[arg(long, default_value_t = 100_000)]
        dirichlet_steps: u64,
        /// Initial counts of the Pólya–Eggenberger urn
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        nu: Vec<i64>,
        /// Balls added per draw in the Pólya–Eggenberger urn
        #[arg(long, default_value_t = 1)]
        k: i64,
        /// Record wall-clock runtimes (makes output run-dependent)
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl From<urnlab_core::Error> for Failure {
    fn from(e: urnlab_core::Error) -> Self {
        match e {
            urnlab_core::Error::EigenvalueNotFound { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } | ConfigError::Parse { .. } => Failure::Usage(e.to_string()),
            ConfigError::Structure { .. } | ConfigError::Hypotheses { .. } => {
                Failure::Validation(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

enum Outcome {
    Done,
    TestsFailed,
}

/// Parses `6`, `-4`, `1.5+2i`, `-2i` and the like.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("cannot read {s:?} as a complex number (examples: 6, -4, 1.5+2i)");
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| err());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().map_err(|_| err())?,
    };
    Ok(Complex64::new(re.parse().map_err(|_| err())?, im))
}

fn cplx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn select(spectrum: &Spectrum, target: Complex64) -> Result<&JordanBlock, Failure> {
    Ok(spectrum.block(target)?)
}

struct Loaded {
    spec: UrnSpec,
    basis: AtomicBasis,
    spectrum: Spectrum,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let spec = load_valid_spec(path)?;
    let basis = atomic_basis(&spec)?;
    let spectrum = eigen_spectrum(&spec)?;
    Ok(Loaded { spec, basis, spectrum })
}

fn colour_index(colour: usize, d: usize) -> Result<usize, Failure> {
    if colour == 0 || colour > d {
        return Err(Failure::Usage(format!("--colour must lie in 1..={d}")));
    }
    Ok(colour - 1)
}

fn w_table(sets: &[WSampleSet]) -> Table {
    let ct = sets.first().is_some_and(|s| s.mode == Mode::CT);
    let mut cols = vec!["initial", "replica_id", "n", "re_w", "im_w"];
    if ct {
        cols.push("xi");
    }
    let mut table = Table::new(cols);
    for set in sets {
        for (r, w) in set.samples.iter().enumerate() {
            let mut row: Vec<Cell> =
                vec![set.tag.as_str().into(), r.into(), set.n.into(), w.re.into(), w.im.into()];
            if ct {
                row.push(set.xi[r].into());
            }
            table.push(row);
        }
    }
    table
}

fn moment_json(table: &MomentTable) -> Value {
    let mut by_colour = Map::new();
    for c in 0..table.colours() {
        let mut entries = Map::new();
        for (p, q) in table.indices() {
            entries.insert(format!("{p},{q}"), cplx(table.get(c, p, q)));
        }
        by_colour.insert(format!("e{}", c + 1), Value::Object(entries));
    }
    Value::Object(by_colour)
}

fn default_large(spectrum: &Spectrum) -> Result<&JordanBlock, Failure> {
    spectrum
        .blocks
        .iter()
        .filter(|b| b.class == BlockClass::Large)
        .max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re))
        .ok_or_else(|| {
            Failure::Usage("the urn has no large non-principal eigenvalue; pass --eigenvalue".into())
        })
}

fn run_command(cli: Cli) -> Result<Outcome, Failure> {
    let threads = cli.threads.unwrap_or_else(default_threads).max(1);
    let exec = Parallel::new(threads).map_err(|e| Failure::Runtime(e.to_string()))?;
    match cli.command {
        Command::Validate { config } => {
            let spec = read_spec(&config)?;
            let report = spec.report();
            let verdict = if report.is_valid() { "valid" } else { "invalid" };
            emit(&format!("{}\n{verdict}\n", report.summary()), None)?;
            if report.is_valid() {
                Ok(Outcome::Done)
            } else {
                Err(Failure::Validation(format!("{}: {}", config.display(), report.summary())))
            }
        }
        Command::Spectrum { config, out } => {
            let Loaded { spec, spectrum, .. } = load(&config)?;
            let s = spec.balance() as f64;
            let eigenvalues: Vec<Value> = spectrum
                .eigenvalues
                .iter()
                .map(|e| json!({ "re": e.value.re, "im": e.value.im, "multiplicity": e.multiplicity }))
                .collect();
            let blocks: Vec<Value> = spectrum
                .blocks
                .iter()
                .map(|b| {
                    json!({
                        "lambda": cplx(b.lambda),
                        "sigma": b.lambda.re / s,
                        "nu": b.nu,
                        "class": b.class.name(),
                        "v": b.v().iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
                        "u_dual": b.u_dual().iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({ "schema": SCHEMA, "balance": spec.balance(), "eigenvalues": eigenvalues, "blocks": blocks });
            emit(&render_json(&doc), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Simulate { config, steps, replicas, seed, mode, out } => {
            let spec = load_valid_spec(&config)?;
            let d = spec.d();
            let ct = mode == TimeMode::Ct;
            let start: i64 = spec.alpha().iter().sum();
            let runs = exec.map(replicas, |r| -> urnlab_core::Result<(Vec<i64>, f64)> {
                let mut rng = stream(seed, lane(key::CHAIN, 0), r as u64);
                let traj = run_dt_from(&spec, spec.alpha(), steps, &[], &mut rng)?;
                let tau = if ct {
                    ring_time(
                        start,
                        spec.balance(),
                        steps,
                        &mut stream(seed, lane(key::RING_TIMES, 0), r as u64),
                    )
                } else {
                    0.0
                };
                Ok((traj.composition, tau))
            });
            let mut cols: Vec<String> = vec!["replica_id".into(), "n".into()];
            cols.extend((1..=d).map(|c| format!("u{c}")));
            if ct {
                cols.push("tau".into());
            }
            let mut table = Table::new(cols);
            for (r, run) in runs.into_iter().enumerate() {
                let (comp, tau) = run?;
                let mut row: Vec<Cell> = vec![r.into(), steps.into()];
                row.extend(comp.into_iter().map(Cell::from));
                if ct {
                    row.push(tau.into());
                }
                table.push(row);
            }
            emit(&render_table(&table, out.format), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Wsample { config, sampling, from_alpha, out } => {
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let block = select(&spectrum, sampling.eigenvalue)?;
            let batch =
                Batch { n: sampling.steps, replicas: sampling.replicas, seed: sampling.seed, lane: 0 };
            let sets = if from_alpha {
                vec![w_samples(&spec, block, spec.alpha(), sampling.mode.into(), batch, &exec)?]
            } else {
                atomic_w_samples(&spec, &basis, block, sampling.mode.into(), batch, &exec)?
            };
            emit(&render_table(&w_table(&sets), out.format), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Moments { config, eigenvalue, order, out } => {
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let block = select(&spectrum, eigenvalue)?;
            let ct = ct_joint_moments(&spec, &basis, block, order)?;
            let dt = dt_joint_moments(&ct, &basis)?;
            let doc = json!({
                "schema": SCHEMA,
                "lambda": cplx(block.lambda),
                "order": order,
                "ct": moment_json(&ct),
                "dt": moment_json(&dt),
            });
            emit(&render_json(&doc), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Fixpoint { config, eigenvalue, pool, iterations, seed, mode, init, law, out } => {
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let block = select(&spectrum, eigenvalue)?;
            let mode: Mode = mode.into();
            let targets = target_means(mode, &basis, block)?;
            let initial = match init {
                Init::Gaussian => gaussian_start(mode, &spec, &basis, block, pool, seed)?,
                Init::Point => EmpiricalLaw::point_masses(&targets, pool)?,
            };
            let cfg = FixpointConfig { mode, max_iter: iterations, out_size: pool, seed };
            let run = iterate_to_fixpoint(initial, &targets, &basis, block, cfg, &exec)?;
            let d = spec.d();
            let mut cols: Vec<String> = vec!["iter".into()];
            cols.extend((1..=d).map(|c| format!("d_e{c}")));
            cols.extend(["max".into(), "noise_floor".into()]);
            let mut table = Table::new(cols);
            for row in &run.trace {
                let mut cells: Vec<Cell> = vec![row.iter.into()];
                cells.extend(row.distance.per_colour.iter().map(|&x| Cell::from(x)));
                cells.extend([row.distance.max.into(), row.noise_floor.into()]);
                table.push(cells);
            }
            match run.converged_at {
                Some(k) => eprintln!("reached the noise floor at iteration {k}"),
                None => eprintln!("noise floor not reached within {iterations} iterations"),
            }
            emit(&render_table(&table, out.format), out.output.as_deref())?;
            if let Some(path) = law {
                let mut pools = Table::new(["colour", "index", "re", "im"]);
                for (c, p) in run.law.pools().iter().enumerate() {
                    for (k, z) in p.iter().enumerate() {
                        pools.push(vec![(c + 1).into(), k.into(), z.re.into(), z.im.into()]);
                    }
                }
                emit(&render_table(&pools, out.format), Some(&path))?;
            }
            Ok(Outcome::Done)
        }
        Command::Density { config, sampling, colour, points, bandwidth, out } => {
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let block = select(&spectrum, sampling.eigenvalue)?;
            let c = colour_index(colour, spec.d())?;
            let set = colour_samples(&spec, &basis, block, &sampling, c, &exec)?;
            let h = bandwidth.as_deref().map(parse_bandwidth).transpose()?;
            let est = kde(&set.samples, h, points, &exec)?;
            let mut table;
            if est.dim == 1 {
                table = Table::new(["x", "value"]);
                for (x, v) in est.xs.iter().zip(&est.values) {
                    table.push(vec![(*x).into(), (*v).into()]);
                }
            } else {
                table = Table::new(["x", "y", "value"]);
                for (k, v) in est.values.iter().enumerate() {
                    let (i, j) = (k / est.ys.len(), k % est.ys.len());
                    table.push(vec![est.xs[i].into(), est.ys[j].into(), (*v).into()]);
                }
            }
            eprintln!("bandwidth {:?}, grid mass {}", est.bandwidth, est.mass());
            emit(&render_table(&table, out.format), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Charfn { config, sampling, colour, radii, angles, radial, out } => {
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let block = select(&spectrum, sampling.eigenvalue)?;
            let c = colour_index(colour, spec.d())?;
            let radii = parse_radii(&radii)?;
            let set = colour_samples(&spec, &basis, block, &sampling, c, &exec)?;
            let grid = if block.is_real() { line_grid(&radii) } else { circle_grid(&radii, angles) };
            let est = estimate_charfn(&set.samples, &grid, &exec);
            let table = if radial {
                let mut t = Table::new(["r", "psi", "se"]);
                for r in grid_radii(&est) {
                    t.push(vec![r.into(), radial_sup(&est, r)?.into(), est.se.into()]);
                }
                t
            } else {
                let mut t = Table::new(["t_re", "t_im", "phi_re", "phi_im", "abs", "se"]);
                for (t_k, v) in est.grid.iter().zip(&est.values) {
                    t.push(vec![
                        t_k.re.into(),
                        t_k.im.into(),
                        v.re.into(),
                        v.im.into(),
                        v.norm().into(),
                        est.se.into(),
                    ]);
                }
                t
            };
            emit(&render_table(&table, out.format), out.output.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Verify {
            config,
            suite,
            level,
            seed,
            eigenvalue,
            small_eigenvalue,
            steps,
            replicas,
            perms,
            forest_steps,
            clt_steps,
            dirichlet_steps,
            nu,
            k,
            timings,
            out,
        } => {
            if !(0.0..1.0).contains(&level) {
                return Err(Failure::Usage("--level must lie in [0, 1)".into()));
            }
            let Loaded { spec, basis, spectrum } = load(&config)?;
            let base = VerifyConfig { n: steps, replicas, seed, n_perm: perms, level };
            let wants = |s: Suite| suite == s || suite == Suite::All;
            let large = match eigenvalue {
                Some(z) => Some(select(&spectrum, z)?),
                None if wants(Suite::Dislocation)
                    || wants(Suite::Decomposition)
                    || wants(Suite::Martingale) =>
                {
                    Some(default_large(&spectrum)?)
                }
                None => None,
            };
            let mut entries: Vec<Value> = Vec::new();
            let mut all_pass = true;
            let mut record = |reports: Vec<TestReport>, started: Instant| {
                let secs = started.elapsed().as_secs_f64();
                for mut r in reports {
                    if timings {
                        r.runtime_secs = Some(secs);
                    }
                    eprintln!("{} {}: p = {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.p_value);
                    all_pass &= r.pass;
                    entries.push(serde_json::to_value(&r).expect("reports serialize"));
                }
            };
            if let Some(block) = large {
                if wants(Suite::Dislocation) {
                    for mode in [Mode::DT, Mode::CT] {
                        let t = Instant::now();
                        record(test_dislocation(mode, &spec, &basis, block, Weights::Exact, base, &exec)?, t);
                    }
                }
                if wants(Suite::Decomposition) {
                    for mode in [Mode::DT, Mode::CT] {
                        let t = Instant::now();
                        record(vec![test_decomposition(mode, &spec, &basis, block, base, &exec)?], t);
                    }
                }
                if wants(Suite::Martingale) {
                    let t = Instant::now();
                    record(test_martingale_atomic(&spec, &basis, block, None, base, &exec)?, t);
                }
            }
            if wants(Suite::Dirichlet) {
                let principal =
                    spectrum.principal().ok_or_else(|| Failure::Runtime("no principal block".into()))?;
                let t = Instant::now();
                record(vec![test_xi_gamma(&spec, principal, base, &exec)?], t);
                if nu.len() < 2 {
                    return Err(Failure::Usage("--nu needs at least two counts".into()));
                }
                let t = Instant::now();
                record(
                    vec![test_dirichlet_limit(&nu, k, VerifyConfig { n: dirichlet_steps, ..base }, &exec)?],
                    t,
                );
            }
            if wants(Suite::Forest) {
                let t = Instant::now();
                record(
                    test_forest_decomposition(
                        &spec,
                        &basis,
                        VerifyConfig { n: forest_steps, ..base },
                        &exec,
                    )?,
                    t,
                );
            }
            if wants(Suite::Clt) {
                let small = match small_eigenvalue {
                    Some(z) => Some(select(&spectrum, z)?),
                    None => spectrum.blocks.iter().find(|b| b.class == BlockClass::Small),
                };
                match small {
                    Some(block) => {
                        let t = Instant::now();
                        let report =
                            test_small_clt(&spec, block, VerifyConfig { n: clt_steps, ..base }, &exec)?;
                        let mut v = serde_json::to_value(&report).expect("reports serialize");
                        v["name"] = json!(format!("small clt lambda={}", block.lambda));
                        if timings {
                            v["runtime_secs"] = json!(t.elapsed().as_secs_f64());
                        }
                        eprintln!(
                            "{} small clt lambda={}",
                            if report.pass { "PASS" } else { "FAIL" },
                            block.lambda
                        );
                        all_pass &= report.pass;
                        entries.push(v);
                    }
                    None if suite == Suite::Clt => {
                        return Err(Failure::Usage("the urn has no small eigenvalue".into()));
                    }
                    None => {}
                }
            }
            let doc = json!({ "schema": SCHEMA, "reports": entries });
            emit(&render_json(&doc), out.output.as_deref())?;
            Ok(if all_pass { Outcome::Done } else { Outcome::TestsFailed })
        }
    }
}

fn colour_samples<E: Executor>(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    sampling: &Sampling,
    c: usize,
    exec: &E,
) -> Result<WSampleSet, Failure> {
    // same lane as colour c of an atomic batch, so samples match `wsample`
    let batch = Batch { n: sampling.steps, replicas: sampling.replicas, seed: sampling.seed, lane: c as u64 };
    let mut set = w_samples(spec, block, &basis.atom(c), sampling.mode.into(), batch, exec)?;
    set.tag = format!("e{}", c + 1);
    Ok(set)
}

fn parse_bandwidth(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("cannot read bandwidth {s:?}; use h or hx,hy"));
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [h] => Ok((*h, *h)),
        [hx, hy] => Ok((*hx, *hy)),
        _ => Err(bad()),
    }
}

fn parse_radii(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("cannot read radii {s:?}; use lo:hi:count"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(bad());
    }
    Ok(log_radii(lo, hi, count))
}

/// Runs the command line and maps the outcome to the exit-code contract.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run_command(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::TestsFailed) => ExitCode::from(3),
        Err(Failure::Usage(m)) | Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
