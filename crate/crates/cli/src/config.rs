//! Experiment configuration as flat `key = value` text with dotted keys.
//!
//! Floats are written with 17 significant digits, so a config survives
//! `to_text` / `parse` unchanged. Optional times accept `auto`, which
//! resolves from the model parameters at run time.

use crate::CliError;
use santafe_core::format::fmt_f64;
use santafe_core::{EstimatorConfig, ModelParams, RunConfig, SeedSpec};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// λ=1000, v=1, Δ=1e-4, L=1e4.
    Desk,
    /// λ=1e4, v=1, Δ=1e-6, L=1e6.
    Full,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Preset::Desk),
            "full" => Some(Preset::Full),
            _ => None,
        }
    }
}

/// Geometric grid of market-order rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub mu_min: f64,
    pub mu_max: f64,
    pub points: usize,
}

impl SweepGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.mu_min];
        }
        // interpolating decimal exponents keeps whole decades exact
        let (lo, hi) = (self.mu_min.log10(), self.mu_max.log10());
        (0..self.points)
            .map(|i| match i {
                0 => self.mu_min,
                i if i + 1 == self.points => self.mu_max,
                i => 10f64.powf(lo + (hi - lo) * i as f64 / (self.points - 1) as f64),
            })
            .collect()
    }
}

/// Estimator settings; `None` intervals resolve from the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    pub snapshot_interval: Option<f64>,
    pub msd_lag_min: usize,
    pub msd_lag_max: usize,
    pub l_max: usize,
    pub gap_k: usize,
    pub density_ticks_per_bin: u64,
    /// `None` resolves to half the window, at most 5000 bins.
    pub density_bins: Option<usize>,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            snapshot_interval: None,
            msd_lag_min: 10,
            msd_lag_max: 100,
            l_max: 20,
            gap_k: 30,
            density_ticks_per_bin: 1,
            density_bins: None,
        }
    }
}

/// Numerical settings of the theory commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheorySettings {
    /// Grid step as a fraction of ε: `h = ε / grid_divisions`.
    pub grid_divisions: f64,
    /// Domain length in decay lengths `√(D/v)`.
    pub domain_lengths: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub gap_k: usize,
    pub gap_tol: f64,
}

impl Default for TheorySettings {
    fn default() -> Self {
        Self {
            grid_divisions: 20.0,
            domain_lengths: 20.0,
            tol: 1e-8,
            max_iter: 200,
            gap_k: 400,
            gap_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub seed: SeedSpec,
    /// `None` means `max(50/v, 50/μ)`.
    pub warmup_time: Option<f64>,
    pub measure_time: f64,
    pub sweep: Option<SweepGrid>,
    pub estimators: EstimatorSettings,
    pub theory: TheorySettings,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (params, sweep, measure_time) = match preset {
            Preset::Desk => (
                ModelParams {
                    limit_rate: 1000.0,
                    cancel_rate: 1.0,
                    market_rate: 1.0,
                    tick_size: 1e-4,
                    cutoff: 10_000,
                },
                SweepGrid {
                    mu_min: 0.1,
                    mu_max: 100.0,
                    points: 4,
                },
                2e4,
            ),
            Preset::Full => (
                ModelParams {
                    limit_rate: 1e4,
                    cancel_rate: 1.0,
                    market_rate: 1.0,
                    tick_size: 1e-6,
                    cutoff: 1_000_000,
                },
                SweepGrid {
                    mu_min: 1e-2,
                    mu_max: 1e3,
                    points: 11,
                },
                1e4,
            ),
        };
        Self {
            params,
            seed: SeedSpec::new(1, 0),
            warmup_time: None,
            measure_time,
            sweep: Some(sweep),
            estimators: EstimatorSettings::default(),
            theory: TheorySettings::default(),
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn with_market_rate(&self, mu: f64) -> Self {
        let mut c = self.clone();
        c.params.market_rate = mu;
        c
    }

    pub fn run_config(&self) -> RunConfig {
        let mut rc = RunConfig::for_params(&self.params, self.measure_time);
        if let Some(w) = self.warmup_time {
            rc.warmup_time = w;
        }
        rc.snapshot_interval = self.estimator_config().snapshot_interval;
        rc
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let e = &self.estimators;
        let mut c = EstimatorConfig::for_params(&self.params);
        if let Some(dt) = e.snapshot_interval {
            c.snapshot_interval = dt;
        }
        c.msd_lag_min = e.msd_lag_min;
        c.msd_lag_max = e.msd_lag_max;
        c.l_max = e.l_max;
        c.gap_k = e.gap_k;
        c.density_ticks_per_bin = e.density_ticks_per_bin;
        if let Some(b) = e.density_bins {
            c.density_bins = b;
        }
        c
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if let Some(w) = self.warmup_time {
            if !(w.is_finite() && w > 0.0) {
                return bad("run.warmup_time must be positive");
            }
        }
        if !(self.measure_time.is_finite() && self.measure_time >= 0.0) {
            return bad("run.measure_time must be non-negative");
        }
        if let Some(dt) = self.estimators.snapshot_interval {
            if !(dt.is_finite() && dt > 0.0) {
                return bad("est.snapshot_interval must be positive");
            }
        }
        let e = &self.estimators;
        if !(1 <= e.msd_lag_min && e.msd_lag_min < e.msd_lag_max) {
            return bad("need 1 <= est.msd_lag_min < est.msd_lag_max");
        }
        if e.density_ticks_per_bin == 0 || e.density_bins == Some(0) {
            return bad("density bins must be non-empty");
        }
        if let Some(s) = &self.sweep {
            let ok = s.points >= 1
                && s.mu_min.is_finite()
                && s.mu_max.is_finite()
                && s.mu_min > 0.0
                && (s.mu_max > s.mu_min || (s.points == 1 && s.mu_max == s.mu_min));
            if !ok {
                return bad("sweep grid must satisfy 0 < sweep.mu_min < sweep.mu_max");
            }
        }
        let t = &self.theory;
        if !(t.grid_divisions >= 10.0 && t.domain_lengths >= 20.0 && t.tol > 0.0) {
            return bad("theory grid needs grid_divisions >= 10 and domain_lengths >= 20");
        }
        Ok(())
    }

    /// Sets one dotted key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let f = || -> Result<f64, CliError> { parse_num(key, value) };
        let u = || -> Result<u64, CliError> {
            value
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: expected an integer, got `{value}`")))
        };
        let auto = || -> Result<Option<f64>, CliError> {
            if value == "auto" {
                Ok(None)
            } else {
                f().map(Some)
            }
        };
        match key {
            "sim.lambda" => self.params.limit_rate = f()?,
            "sim.v" => self.params.cancel_rate = f()?,
            "sim.mu" => self.params.market_rate = f()?,
            "sim.tick" => self.params.tick_size = f()?,
            "sim.cutoff" => self.params.cutoff = u()?,
            "seed.master" => self.seed.master_seed = u()?,
            "seed.run_index" => self.seed.run_index = u()?,
            "run.warmup_time" => self.warmup_time = auto()?,
            "run.measure_time" => self.measure_time = f()?,
            "sweep.enabled" => match value {
                "true" => {
                    sweep(self);
                }
                "false" => self.sweep = None,
                _ => return Err(CliError::Config(format!("{key}: expected true or false"))),
            },
            "sweep.mu_min" => sweep(self).mu_min = f()?,
            "sweep.mu_max" => sweep(self).mu_max = f()?,
            "sweep.points" => sweep(self).points = u()? as usize,
            "est.snapshot_interval" => self.estimators.snapshot_interval = auto()?,
            "est.msd_lag_min" => self.estimators.msd_lag_min = u()? as usize,
            "est.msd_lag_max" => self.estimators.msd_lag_max = u()? as usize,
            "est.l_max" => self.estimators.l_max = u()? as usize,
            "est.gap_k" => self.estimators.gap_k = u()? as usize,
            "est.density_ticks_per_bin" => self.estimators.density_ticks_per_bin = u()?,
            "est.density_bins" => {
                self.estimators.density_bins = if value == "auto" { None } else { Some(u()? as usize) }
            }
            "theory.grid_divisions" => self.theory.grid_divisions = f()?,
            "theory.domain_lengths" => self.theory.domain_lengths = f()?,
            "theory.tol" => self.theory.tol = f()?,
            "theory.max_iter" => self.theory.max_iter = u()? as usize,
            "theory.gap_k" => self.theory.gap_k = u()? as usize,
            "theory.gap_tol" => self.theory.gap_tol = f()?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Parses a complete file on top of the desk preset.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = Self::preset(Preset::Desk);
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let e = &self.estimators;
        let t = &self.theory;
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "auto".to_string());
        let mut lines = vec![
            format!("sim.lambda = {}", fmt_f64(p.limit_rate)),
            format!("sim.v = {}", fmt_f64(p.cancel_rate)),
            format!("sim.mu = {}", fmt_f64(p.market_rate)),
            format!("sim.tick = {}", fmt_f64(p.tick_size)),
            format!("sim.cutoff = {}", p.cutoff),
            format!("seed.master = {}", self.seed.master_seed),
            format!("seed.run_index = {}", self.seed.run_index),
            format!("run.warmup_time = {}", opt(self.warmup_time)),
            format!("run.measure_time = {}", fmt_f64(self.measure_time)),
        ];
        match &self.sweep {
            Some(s) => {
                lines.push("sweep.enabled = true".into());
                lines.push(format!("sweep.mu_min = {}", fmt_f64(s.mu_min)));
                lines.push(format!("sweep.mu_max = {}", fmt_f64(s.mu_max)));
                lines.push(format!("sweep.points = {}", s.points));
            }
            None => lines.push("sweep.enabled = false".into()),
        }
        lines.extend([
            format!("est.snapshot_interval = {}", opt(e.snapshot_interval)),
            format!("est.msd_lag_min = {}", e.msd_lag_min),
            format!("est.msd_lag_max = {}", e.msd_lag_max),
            format!("est.l_max = {}", e.l_max),
            format!("est.gap_k = {}", e.gap_k),
            format!("est.density_ticks_per_bin = {}", e.density_ticks_per_bin),
            format!(
                "est.density_bins = {}",
                e.density_bins.map(|b| b.to_string()).unwrap_or_else(|| "auto".into())
            ),
            format!("theory.grid_divisions = {}", fmt_f64(t.grid_divisions)),
            format!("theory.domain_lengths = {}", fmt_f64(t.domain_lengths)),
            format!("theory.tol = {}", fmt_f64(t.tol)),
            format!("theory.max_iter = {}", t.max_iter),
            format!("theory.gap_k = {}", t.gap_k),
            format!("theory.gap_tol = {}", fmt_f64(t.gap_tol)),
            format!("output.dir = {}", self.out_dir.display()),
        ]);
        lines.join("\n") + "\n"
    }
}

fn sweep(c: &mut ExperimentConfig) -> &mut SweepGrid {
    c.sweep.get_or_insert(SweepGrid {
        mu_min: 0.1,
        mu_max: 100.0,
        points: 4,
    })
}

fn parse_num(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("{key}: expected a number, got `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for preset in [Preset::Desk, Preset::Full] {
            let c = ExperimentConfig::preset(preset);
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn awkward_values_round_trip() {
        let mut c = ExperimentConfig::preset(Preset::Desk);
        c.params.market_rate = 0.1 + 0.2;
        c.warmup_time = Some(1.0 / 3.0);
        c.estimators.snapshot_interval = Some(0.7);
        c.estimators.density_bins = Some(123);
        c.sweep = None;
        c.seed = SeedSpec::new(u64::MAX, 7);
        c.out_dir = PathBuf::from("some/dir");
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = ExperimentConfig::parse("sim.lambda = 10\nsim.bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(ExperimentConfig::parse("sim.v = fast").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        let c = ExperimentConfig::parse("# comment\n\nsim.mu = 3\n").unwrap();
        assert_eq!(c.params.market_rate, 3.0);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = ExperimentConfig::preset(Preset::Desk);
        c.sweep = Some(SweepGrid {
            mu_min: 10.0,
            mu_max: 1.0,
            points: 3,
        });
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::preset(Preset::Desk);
        c.warmup_time = Some(0.0);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::preset(Preset::Desk);
        c.params.cancel_rate = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_grid_is_geometric_and_hits_both_ends() {
        let g = SweepGrid {
            mu_min: 0.1,
            mu_max: 100.0,
            points: 4,
        };
        let v = g.values();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[3], 100.0);
        assert_eq!((v[1], v[2]), (1.0, 10.0));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn resolved_settings_follow_the_parameters() {
        let c = ExperimentConfig::preset(Preset::Desk).with_market_rate(9.0);
        let rc = c.run_config();
        assert_eq!(rc.snapshot_interval, 0.1);
        assert_eq!(rc.warmup_time, 50.0);
        assert_eq!(c.estimator_config().density_bins, 5000);
    }
}
