//! Energy traces (E, H, E^aug = E + H), dissipation monitoring, and the
//! asymptotic slope fit of the history energy.

use crate::{Error, Result};
use std::fmt::Write as _;

/// Recorded energies of one run. `e_aug[i] = e[i] + h[i]` by construction.
#[derive(Debug, Clone, Default)]
pub struct EnergyTrace {
    times: Vec<f64>,
    e: Vec<f64>,
    h: Vec<f64>,
    e_aug: Vec<f64>,
}

/// Outcome of [`EnergyTrace::check_dissipation`].
#[derive(Debug, Clone)]
pub struct DissipationReport {
    /// Indices i where E_aug[i+1] > E_aug[i] + tol·(1+|E_aug[i]|).
    pub violations: Vec<usize>,
    /// Largest observed increase E_aug[i+1] − E_aug[i] (0 if none).
    pub max_increase: f64,
}

impl EnergyTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn e_aug(&self) -> &[f64] {
        &self.e_aug
    }

    /// Appends (t, E, H, E+H); t must exceed the previous time.
    pub fn record(&mut self, t: f64, e: f64, h: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::NonMonotoneTime { t, last });
            }
        }
        self.times.push(t);
        self.e.push(e);
        self.h.push(h);
        self.e_aug.push(e + h);
        Ok(())
    }

    /// Scans the augmented energy for per-step increases beyond
    /// tol·(1+|E_aug|).
    pub fn check_dissipation(&self, tol: f64) -> DissipationReport {
        let mut violations = Vec::new();
        let mut max_increase = 0.0f64;
        for i in 0..self.e_aug.len().saturating_sub(1) {
            let increase = self.e_aug[i + 1] - self.e_aug[i];
            max_increase = max_increase.max(increase);
            if increase > tol * (1.0 + self.e_aug[i].abs()) {
                violations.push(i);
            }
        }
        DissipationReport {
            violations,
            max_increase,
        }
    }

    /// Fits H(t) ≈ c·t^{−β} on [t_lo, t_hi] by least squares on
    /// (log t, log H) and returns β.
    pub fn fit_slope(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            if t < t_lo || t > t_hi {
                continue;
            }
            if self.h[i] <= 0.0 {
                return Err(Error::Domain(format!(
                    "history energy must be positive for the slope fit, got {} at t = {t}",
                    self.h[i]
                )));
            }
            xs.push(t.ln());
            ys.push(self.h[i].ln());
        }
        if xs.len() < 10 {
            return Err(Error::InsufficientData(format!(
                "slope fit needs at least 10 samples in [{t_lo}, {t_hi}], got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        Ok(-(sxy / sxx))
    }

    /// CSV dump: header `t,E,H,E_aug`, one row per record, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E,H,E_aug\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[i], self.e[i], self.h[i], self.e_aug[i]
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> (f64, f64), n: usize, dt: f64) -> EnergyTrace {
        let mut tr = EnergyTrace::new();
        for i in 1..=n {
            let t = i as f64 * dt;
            let (e, h) = f(t);
            tr.record(t, e, h).unwrap();
        }
        tr
    }

    #[test]
    fn record_keeps_sum_column() {
        let mut tr = EnergyTrace::new();
        tr.record(0.0, 0.5, 0.0).unwrap();
        tr.record(0.1, 0.4, 0.02).unwrap();
        assert_eq!(tr.e_aug(), &[0.5, 0.4 + 0.02]);
        assert!(tr.record(0.1, 0.3, 0.0).is_err());
    }

    #[test]
    fn dissipation_flags_injected_bump() {
        let tol = 1e-8;
        let mut tr = synthetic(|t| ((-t).exp(), 0.0), 50, 0.1);
        let clean = tr.check_dissipation(tol);
        assert!(clean.violations.is_empty());
        assert!(clean.max_increase <= 0.0);

        tr.e_aug[20] = tr.e_aug[19] + 2.0 * tol * (1.0 + tr.e_aug[19].abs());
        let report = tr.check_dissipation(tol);
        assert_eq!(report.violations, vec![19]);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let tr = synthetic(|t| (0.0, 3.0 * t.powf(-0.36)), 1000, 0.005);
        let beta = tr.fit_slope(3.0, 5.0).unwrap();
        assert_relative_eq!(beta, 0.36, epsilon = 1e-10);
    }

    #[test]
    fn slope_fit_tolerates_perturbation() {
        let tr = synthetic(
            |t| (0.0, 3.0 * t.powf(-0.36) * (1.0 + 0.01 * t.sin())),
            1000,
            0.005,
        );
        let beta = tr.fit_slope(0.01, 5.0).unwrap();
        assert!((beta - 0.36).abs() <= 0.02, "beta = {beta}");
    }

    #[test]
    fn slope_fit_errors() {
        let tr = synthetic(|t| (0.0, t.powf(-0.2)), 5, 0.1);
        assert!(matches!(
            tr.fit_slope(0.0, 1.0),
            Err(Error::InsufficientData(_))
        ));
        let tr = synthetic(|_| (0.0, 0.0), 100, 0.1);
        assert!(tr.fit_slope(0.0, 10.0).is_err());
    }

    #[test]
    fn csv_format() {
        let mut tr = EnergyTrace::new();
        tr.record(0.0, 0.5, 0.0).unwrap();
        tr.record(0.005, 0.25, 0.125).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,E,H,E_aug"));
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.25);
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.375);
    }
}
