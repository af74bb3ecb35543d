//! Command-line runner for the time-fractional gradient flow solver.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fracflow::special::{g_alpha, mittag_leffler};
use fracflow::{aaa_fit, scalar_relaxation, sim, FractionalOrder, SimConfig};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Time-fractional gradient flows via kernel compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config-file plus flag overrides shared by `run` and `sweep`.
/// Flags win over the config file.
#[derive(Args, Clone)]
struct RunOpts {
    /// Flat key=value config file (# comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fractional order α ∈ (0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Time step Δt
    #[arg(long)]
    dt: Option<f64>,
    /// Final time T
    #[arg(long)]
    t_final: Option<f64>,
    /// Grid size n (n×n cells on the unit square)
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for the random initial data
    #[arg(long)]
    seed: Option<u64>,
    /// Flow: scalar, allen-cahn or cahn-hilliard
    #[arg(long)]
    flow: Option<String>,
    /// Output directory (trace.csv, soe.txt, field snapshots)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot cadence in steps (0 = only first and last)
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl RunOpts {
    fn build(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        if let Some(a) = self.alpha {
            cfg.apply("alpha", &a.to_string())?;
        }
        if let Some(dt) = self.dt {
            cfg.apply("dt", &dt.to_string())?;
        }
        if let Some(t) = self.t_final {
            cfg.apply("t_final", &t.to_string())?;
        }
        if let Some(n) = self.grid {
            cfg.apply("nx", &n.to_string())?;
        }
        if let Some(s) = self.seed {
            cfg.apply("seed", &s.to_string())?;
        }
        if let Some(f) = &self.flow {
            cfg.apply("flow", f)?;
        }
        if let Some(dir) = &self.out {
            cfg.output_dir = Some(dir.clone());
        }
        if let Some(k) = self.snapshot_every {
            cfg.snapshot_every = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and report the final energies
    Run(RunOpts),
    /// Run a set of fractional orders and stack the traces into one CSV
    Sweep {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated fractional orders, e.g. 0.1,0.5,0.9
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
    /// Fit the memory kernel and print the mode table with its accuracy
    FitKernel {
        /// Fractional order α ∈ (0, 1]
        #[arg(long)]
        alpha: f64,
        /// Lower end of the Laplace fit window
        #[arg(long, default_value_t = 0.2)]
        z_min: f64,
        /// Upper end of the Laplace fit window
        #[arg(long, default_value_t = 200.0)]
        z_max: f64,
        /// Fit tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the mode table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the scalar relaxation against its Mittag-Leffler solution
    Validate {
        /// Fractional order α ∈ (0, 1]
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Time step Δt
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Number of steps
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Fit tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(opts) => {
            let cfg = opts.build()?;
            let res = sim::run(&cfg)?;
            let tr = &res.trace;
            let last = tr.len() - 1;
            println!(
                "alpha={} steps={} modes={}",
                cfg.alpha.get(),
                cfg.n_steps(),
                res.soe.len()
            );
            println!(
                "E(0)={:.6e}  E(T)={:.6e}  H(T)={:.6e}  E_aug(T)={:.6e}",
                tr.e()[0],
                tr.e()[last],
                tr.h()[last],
                tr.e_aug()[last]
            );
            let report = tr.check_dissipation(1e-8);
            println!(
                "dissipation violations: {} (max increase {:.3e})",
                report.violations.len(),
                report.max_increase
            );
            if let Some(dir) = &cfg.output_dir {
                println!("outputs in {}", dir.display());
            }
        }
        Command::Sweep { opts, alphas } => {
            let mut configs = Vec::new();
            for &a in &alphas {
                let mut cfg = opts.build()?;
                cfg.apply("alpha", &a.to_string())?;
                // per-α subdirectory so snapshots don't collide
                if let Some(dir) = &cfg.output_dir {
                    cfg.output_dir = Some(dir.join(format!("alpha_{a}")));
                }
                cfg.validate()?;
                configs.push(cfg);
            }
            let (csv, results) = sim::sweep(&configs)?;
            if let Some(dir) = &opts.out {
                fs::create_dir_all(dir)?;
                let path = dir.join("sweep.csv");
                fs::write(&path, &csv)?;
                println!("combined trace in {}", path.display());
            } else {
                print!("{csv}");
            }
            for (cfg, res) in configs.iter().zip(&results) {
                let tr = &res.trace;
                let last = tr.len() - 1;
                eprintln!(
                    "alpha={}: E(T)={:.6e} H(T)={:.6e}",
                    cfg.alpha.get(),
                    tr.e()[last],
                    tr.h()[last]
                );
            }
        }
        Command::FitKernel {
            alpha,
            z_min,
            z_max,
            tol,
            out,
        } => {
            let alpha = FractionalOrder::new(alpha)?;
            let soe = aaa_fit(alpha, z_min, z_max, tol)?;
            // kernel accuracy on the matching time window [1/z_max, 1/z_min]
            let mut worst = 0.0f64;
            for i in 0..500 {
                let s = i as f64 / 499.0;
                let t = (1.0 / z_max) * (z_max / z_min).powf(s);
                let exact = g_alpha(alpha, t)?;
                worst = worst.max((soe.kernel_eval(t) - exact).abs() / exact);
            }
            eprintln!(
                "alpha={} modes={} kernel sup rel error {:.3e} on t in [{:.3e}, {:.3e}]",
                alpha.get(),
                soe.len(),
                worst,
                1.0 / z_max,
                1.0 / z_min
            );
            let table = soe.to_table();
            match out {
                Some(path) => {
                    fs::write(&path, table)?;
                    println!("mode table in {}", path.display());
                }
                None => print!("{table}"),
            }
        }
        Command::Validate {
            alpha,
            dt,
            steps,
            tol,
        } => {
            let alpha = FractionalOrder::new(alpha)?;
            let u = scalar_relaxation(alpha, 1.0, 1.0, dt, steps, tol)?;
            let mut worst = 0.0f64;
            for (n, &un) in u.iter().enumerate() {
                let t = (n + 1) as f64 * dt;
                let exact = mittag_leffler(alpha, -t.powf(alpha.get()))?;
                worst = worst.max((un - exact).abs());
            }
            println!(
                "scalar relaxation alpha={}: sup error {:.3e} over {} steps (dt={dt})",
                alpha.get(),
                worst,
                steps
            );
            anyhow::ensure!(worst <= 1e-3, "validation failed: sup error {worst:.3e} > 1e-3");
            println!("ok");
        }
    }
    Ok(())
}
