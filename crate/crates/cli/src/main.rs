use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sfft_uq::experiments::{
    error_study_for, expansion_study_for, moment_study_for, solve_model, write_err_csv, write_expansion_csv,
    write_moment_csv, write_res_csv, write_samples_json, write_solution, ExperimentConfig, Setting,
};
use sfft_uq::moments::{moment, Density};
use sfft_uq::reference_solver::{reference_draws, solve_draws, DEFAULT_TOL};
use sfft_uq::Backend;

/// Sparse FFT solver for elliptic ODEs with random coefficients.
#[derive(Parser, Debug)]
#[command(name = "sfft-uq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter setting: I, II or III.
    #[arg(long)]
    setting: Option<Setting>,
    /// Lattice backend: r1l or mr1l.
    #[arg(long)]
    backend: Option<Backend>,
    /// Number of random variables (even).
    #[arg(long)]
    dxi: Option<usize>,
    /// Number of reference draws.
    #[arg(long)]
    ntest: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use 20000 reference draws.
    #[arg(long)]
    paper_scale: bool,
    /// Repeat for more logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the solution representation and write `solution.coeffs`.
    Solve(Common),
    /// Compute one moment curve and write `moment<n>.csv`.
    Moment {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        order: u32,
    },
    /// Pointwise error against quadrature references, written to `err.csv`.
    ErrStudy(Common),
    /// First and second moments against Monte-Carlo references, written to
    /// `res1.csv` and `res2.csv`.
    ResStudy(Common),
    /// Directional expansion of the solution, written to `expansion.csv`.
    Expansion {
        #[command(flatten)]
        common: Common,
        /// Coefficients at or below this magnitude are ignored.
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.setting {
            cfg.setting = s;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(d) = self.dxi {
            cfg.model.d_xi = d;
        }
        if self.paper_scale {
            cfg.n_test = 20_000;
        }
        if let Some(n) = self.ntest {
            cfg.n_test = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.model.validate()?;
        Ok(cfg)
    }

    fn init_logging(&self) {
        let level = match self.verbose {
            0 => "warn",
            1 => "info",
            _ => "debug",
        };
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    }
}

fn run(cmd: Command) -> Result<()> {
    let common = match &cmd {
        Command::Solve(c) | Command::ErrStudy(c) | Command::ResStudy(c) => c,
        Command::Moment { common, .. } | Command::Expansion { common, .. } => common,
    };
    common.init_logging();
    let cfg = common.config()?;
    let out = cfg.out.clone();
    let t0 = Instant::now();
    let (problem, rep) = solve_model(&cfg)?;
    println!("solved in {:.1}s with {} samples", t0.elapsed().as_secs_f64(), rep.samples.total());
    let mut extra = Vec::new();
    match cmd {
        Command::Solve(_) => {
            write_solution(&out, &rep)?;
        }
        Command::Moment { order, .. } => {
            let m = moment(&rep, order, &Density::Uniform, &cfg.moment_config(order))?;
            println!("moment {order} at eta=0.5: {:.6e}", m.evaluate(0.5)?);
            extra.push(("moment", m.samples));
            write_moment_csv(&out, &m)?;
        }
        Command::ErrStudy(_) => {
            let e = error_study_for(&rep, &problem, cfg.n_test, cfg.reference_seed())?;
            println!("mean error {:.3e}", e.mean());
            write_err_csv(&out, &e)?;
        }
        Command::ResStudy(_) => {
            let draws = reference_draws(problem.xi_bounds(), cfg.n_test, cfg.reference_seed());
            let refs = solve_draws(&problem, &draws, DEFAULT_TOL)?;
            for (n, key) in [(1, "moment1"), (2, "moment2")] {
                let s = moment_study_for(&rep, &refs, n, &cfg.moment_config(n))?;
                let res2 = s.res.values.iter().map(|v| v * v).sum::<f64>() / s.res.values.len() as f64;
                println!(
                    "moment {n} at eta=0.5: {:.6e} (reference {:.6e}), mean squared residual {:.3e}",
                    s.moment.values[50], s.reference.values[50], res2
                );
                extra.push((key, s.samples));
                write_res_csv(&out, &s)?;
            }
        }
        Command::Expansion { floor, .. } => {
            let x = expansion_study_for(&rep, floor, &cfg.expansion_config())?;
            println!("expansion {:?}", x.expansions);
            extra.push(("expansion", x.samples));
            write_expansion_csv(&out, &x)?;
        }
    }
    write_samples_json(&out, &rep.samples, &extra)?;
    println!("wrote results to {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse().command)
}
