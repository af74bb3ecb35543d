//! Flat key=value run configuration with the experiment defaults:
//! Ω = (0,1)², Δx = 2⁻⁷, Δt = 0.005, T = 5, ε̃ = 0.05, β = 0.1, M = 1,
//! random initial data in [−10⁻³, 10⁻³].

use crate::flows::{FlowKind, GLParams};
use crate::special::FractionalOrder;
use crate::{Error, Result};
use std::path::PathBuf;

/// How the initial field is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// Uniform iid values in [lo, hi] from the seeded generator.
    RandomUniform { lo: f64, hi: f64, seed: u64 },
    Constant(f64),
    /// Snapshot file (little-endian doubles + `.meta` sidecar).
    File(PathBuf),
}

/// Which flow the run integrates; combined with [`GLParams`] via
/// [`SimConfig::flow_kind`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowTag {
    Scalar { lam: f64 },
    AllenCahn,
    CahnHilliard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: FractionalOrder,
    pub t_final: f64,
    pub dt: f64,
    pub nx: usize,
    pub eps_tilde: f64,
    pub beta: f64,
    pub mobility: f64,
    pub flow: FlowTag,
    pub init: InitKind,
    pub rational_tol: f64,
    pub newton_tol: f64,
    pub output_dir: Option<PathBuf>,
    /// Field snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            alpha: FractionalOrder::new(0.5).expect("valid default"),
            t_final: 5.0,
            dt: 0.005,
            nx: 128,
            eps_tilde: 0.05,
            beta: 0.1,
            mobility: 1.0,
            flow: FlowTag::CahnHilliard,
            init: InitKind::RandomUniform {
                lo: -1e-3,
                hi: 1e-3,
                seed: 42,
            },
            rational_tol: 1e-8,
            newton_tol: 1e-10,
            output_dir: None,
            snapshot_every: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_final > 0.0 && self.dt < self.t_final) {
            return Err(Error::Config(format!(
                "need 0 < dt < T, got dt={}, T={}",
                self.dt, self.t_final
            )));
        }
        if self.nx < 4 {
            return Err(Error::Config(format!("nx must be at least 4, got {}", self.nx)));
        }
        if !(self.rational_tol > 0.0 && self.newton_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if let FlowTag::Scalar { lam } = self.flow {
            if lam <= 0.0 {
                return Err(Error::Config(format!(
                    "scalar flow rate must be positive, got {lam}"
                )));
            }
        }
        if let InitKind::RandomUniform { lo, hi, .. } = self.init {
            if lo >= hi {
                return Err(Error::Config(format!("init range empty: [{lo}, {hi}]")));
            }
        }
        GLParams::new(self.eps_tilde, self.beta, self.mobility)?;
        Ok(())
    }

    pub fn gl_params(&self) -> GLParams {
        GLParams::new(self.eps_tilde, self.beta, self.mobility).expect("validated")
    }

    pub fn flow_kind(&self) -> FlowKind {
        match self.flow {
            FlowTag::Scalar { lam } => FlowKind::ScalarQuadratic(lam),
            FlowTag::AllenCahn => FlowKind::AllenCahn(self.gl_params()),
            FlowTag::CahnHilliard => FlowKind::CahnHilliard(self.gl_params()),
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Parses `key = value` lines (# comments, blank lines ignored) over the
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines to this config (later keys win).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {line:?}")))?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets a single field by key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number for {key}: {value:?} ({e})")))
        };
        let int = || -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("bad integer for {key}: {value:?} ({e})")))
        };
        match key {
            "alpha" => self.alpha = FractionalOrder::new(num()?)?,
            "t_final" => self.t_final = num()?,
            "dt" => self.dt = num()?,
            "nx" => self.nx = int()? as usize,
            "eps_tilde" => self.eps_tilde = num()?,
            "beta" => self.beta = num()?,
            "mobility" => self.mobility = num()?,
            "lam" => self.flow = FlowTag::Scalar { lam: num()? },
            "flow" => {
                self.flow = match value {
                    "cahn-hilliard" => FlowTag::CahnHilliard,
                    "allen-cahn" => FlowTag::AllenCahn,
                    "scalar" => match self.flow {
                        FlowTag::Scalar { lam } => FlowTag::Scalar { lam },
                        _ => FlowTag::Scalar { lam: 1.0 },
                    },
                    other => {
                        return Err(Error::Config(format!(
                            "unknown flow {other:?} (expected scalar, allen-cahn or cahn-hilliard)"
                        )))
                    }
                }
            }
            "init" => {
                self.init = match value {
                    "random" => match self.init {
                        InitKind::RandomUniform { .. } => self.init.clone(),
                        _ => SimConfig::default().init,
                    },
                    other if other.starts_with("constant:") => {
                        let c = other["constant:".len()..]
                            .parse::<f64>()
                            .map_err(|e| Error::Config(format!("bad constant init: {e}")))?;
                        InitKind::Constant(c)
                    }
                    other if other.starts_with("file:") => {
                        InitKind::File(PathBuf::from(&other["file:".len()..]))
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "unknown init {other:?} (expected random, constant:<c> or file:<path>)"
                        )))
                    }
                }
            }
            "init_lo" | "init_hi" | "seed" => {
                let (mut lo, mut hi, mut seed) = match self.init {
                    InitKind::RandomUniform { lo, hi, seed } => (lo, hi, seed),
                    _ => {
                        let InitKind::RandomUniform { lo, hi, seed } = SimConfig::default().init
                        else {
                            unreachable!()
                        };
                        (lo, hi, seed)
                    }
                };
                match key {
                    "init_lo" => lo = num()?,
                    "init_hi" => hi = num()?,
                    _ => seed = int()?,
                }
                self.init = InitKind::RandomUniform { lo, hi, seed };
            }
            "rational_tol" => self.rational_tol = num()?,
            "newton_tol" => self.newton_tol = num()?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "snapshot_every" => self.snapshot_every = int()? as usize,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_setup() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.t_final, 5.0);
        assert_eq!(cfg.dt, 0.005);
        assert_eq!(cfg.nx, 128);
        assert_eq!(cfg.dx(), 1.0 / 128.0);
        assert_eq!(cfg.n_steps(), 1000);
        assert!((cfg.gl_params().eps_sq() - 0.005).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_key_value_text() {
        let cfg = SimConfig::parse(
            "# a comment\n\
             alpha = 0.3\n\
             dt = 0.01   # trailing comment\n\
             nx = 64\n\
             flow = allen-cahn\n\
             seed = 7\n\
             init_hi = 2e-3\n",
        )
        .unwrap();
        assert_eq!(cfg.alpha.get(), 0.3);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.nx, 64);
        assert_eq!(cfg.flow, FlowTag::AllenCahn);
        assert_eq!(
            cfg.init,
            InitKind::RandomUniform {
                lo: -1e-3,
                hi: 2e-3,
                seed: 7
            }
        );
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(SimConfig::parse("alpha = 1.5").is_err());
        assert!(SimConfig::parse("dt = 10").is_err()); // dt >= T
        assert!(SimConfig::parse("nx = 2").is_err());
        assert!(SimConfig::parse("bogus = 1").is_err());
        assert!(SimConfig::parse("flow = pde").is_err());
    }

    #[test]
    fn constant_and_file_init() {
        let cfg = SimConfig::parse("init = constant:0.25").unwrap();
        assert_eq!(cfg.init, InitKind::Constant(0.25));
        let cfg = SimConfig::parse("init = file:/tmp/u.bin").unwrap();
        assert_eq!(cfg.init, InitKind::File(PathBuf::from("/tmp/u.bin")));
    }
}
