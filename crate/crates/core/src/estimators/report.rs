use super::{DensityProfile, DiffusionFit, Estimate, Estimators};
use crate::format::{fmt_f64, fmt_opt};
use crate::params::ModelParams;
use std::fmt::Write as _;

/// Column order of [`MetricsReport::csv_row`]. Units in brackets.
pub const METRICS_CSV_HEADER: &str = "measure_time[time],\
spread[price],spread_se[price],\
impact[price],impact_se[price],\
impact_buy[price],impact_buy_se[price],\
impact_sell[price],impact_sell_se[price],\
diffusion[price^2/time],diffusion_se[price^2/time],diffusion_intercept[price^2],\
diffusion_r2[1],diffusion_linear[bool],\
gap_skip_fraction[1],\
events[count],snapshots[count],market_orders[count],msd_pairs[count],\
gap_snapshots[count],gap_skipped[count]";

pub const DENSITY_CSV_HEADER: &str = "r[price],rho[1/price],rho_se[1/price]";
pub const GAPS_CSV_HEADER: &str = "k,gap_mean[ticks]";
pub const IMPACT_CSV_HEADER: &str = "lag[market_orders],impact[price],ratio[1]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleCounts {
    pub events: u64,
    pub snapshots: u64,
    pub market_orders: u64,
    pub msd_pairs: u64,
    pub gap_snapshots: u64,
    pub gap_skipped: u64,
}

/// Everything measured by one run (or a merge of runs). Metrics that could
/// not be estimated, e.g. for a zero-length run, are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub measure_time: f64,
    pub spread: Option<Estimate>,
    /// Lag-one impact `⟨ε dm⟩`.
    pub impact: Option<Estimate>,
    pub impact_buy: Option<Estimate>,
    pub impact_sell: Option<Estimate>,
    /// `⟨ε dm(l)⟩` for `l = 1..`, lag counted in market orders.
    pub impact_lag: Vec<f64>,
    /// Kept even when the MSD is not linear; check `linear`.
    pub diffusion: Option<DiffusionFit>,
    pub density: DensityProfile,
    pub gap_means: Vec<f64>,
    pub gap_skip_fraction: f64,
    pub counts: SampleCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ReportParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ReportParseError {
    ReportParseError {
        line,
        message: message.into(),
    }
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>, ReportParseError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| perr(line, format!("bad number `{s}`")))
    }
}

fn body_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>, ReportParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == header => Ok(lines.filter(|(_, l)| !l.is_empty())),
        _ => Err(perr(1, format!("expected header `{header}`"))),
    }
}

impl MetricsReport {
    pub(super) fn from_estimators(est: &Estimators, params: &ModelParams) -> Self {
        let dt = params.tick_size;
        let has_lags = est.impact.l_max() > 0;
        Self {
            measure_time: est.measure_time(),
            spread: est.spread.estimate(dt).ok(),
            impact: if has_lags { est.impact.lag(1, dt).ok() } else { None },
            impact_buy: est.impact.buy(dt).ok(),
            impact_sell: est.impact.sell(dt).ok(),
            impact_lag: est.impact.lag_means(dt),
            diffusion: est.diffusion.fit(dt).ok(),
            density: est.density.profile(dt),
            gap_means: est.gaps.means(),
            gap_skip_fraction: est.gaps.skip_fraction(),
            counts: SampleCounts {
                events: est.events(),
                snapshots: est.spread.samples(),
                market_orders: est.impact.market_orders(),
                msd_pairs: est.diffusion.pairs(),
                gap_snapshots: est.gaps.used(),
                gap_skipped: est.gaps.skipped(),
            },
        }
    }

    /// `R(l) = ⟨ε dm(l)⟩ / ⟨ε dm(1)⟩`.
    pub fn impact_ratio(&self) -> Vec<f64> {
        match self.impact_lag.first() {
            Some(&first) => self.impact_lag.iter().map(|x| x / first).collect(),
            None => Vec::new(),
        }
    }

    pub fn csv_row(&self) -> String {
        let est = |e: Option<Estimate>| {
            format!(
                "{},{}",
                fmt_opt(e.map(|e| e.value)),
                fmt_opt(e.map(|e| e.se))
            )
        };
        let d = self.diffusion;
        let c = &self.counts;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.measure_time),
            est(self.spread),
            est(self.impact),
            est(self.impact_buy),
            est(self.impact_sell),
            fmt_opt(d.map(|d| d.d)),
            fmt_opt(d.map(|d| d.se)),
            fmt_opt(d.map(|d| d.intercept)),
            fmt_opt(d.map(|d| d.r2)),
            d.map(|d| d.linear.to_string()).unwrap_or_default(),
            fmt_f64(self.gap_skip_fraction),
            c.events,
            c.snapshots,
            c.market_orders,
            c.msd_pairs,
            c.gap_snapshots,
            c.gap_skipped
        )
    }

    pub fn metrics_csv(&self) -> String {
        format!("{METRICS_CSV_HEADER}\n{}\n", self.csv_row())
    }

    pub fn density_csv(&self) -> String {
        let mut s = format!("{DENSITY_CSV_HEADER}\n");
        for (k, &v) in self.density.values.iter().enumerate() {
            let se = self.density.se.get(k).copied();
            let _ = writeln!(s, "{},{},{}", fmt_f64(self.density.r(k)), fmt_f64(v), fmt_opt(se));
        }
        s
    }

    pub fn gaps_csv(&self) -> String {
        let mut s = format!("{GAPS_CSV_HEADER}\n");
        for (k, &g) in self.gap_means.iter().enumerate() {
            let _ = writeln!(s, "{k},{}", fmt_f64(g));
        }
        s
    }

    pub fn impact_csv(&self) -> String {
        let mut s = format!("{IMPACT_CSV_HEADER}\n");
        for (l, (&x, r)) in self.impact_lag.iter().zip(self.impact_ratio()).enumerate() {
            let _ = writeln!(s, "{},{},{}", l + 1, fmt_f64(x), fmt_f64(r));
        }
        s
    }

    /// Rebuilds a report from the four CSV documents written above.
    pub fn from_csv(
        metrics: &str,
        density: &str,
        gaps: &str,
        impact: &str,
    ) -> Result<Self, ReportParseError> {
        let (line, row) = body_lines(metrics, METRICS_CSV_HEADER)?
            .next()
            .ok_or_else(|| perr(2, "missing metrics row"))?;
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 21 {
            return Err(perr(line, format!("expected 21 fields, got {}", f.len())));
        }
        let num = |i: usize| parse_opt(f[i], line);
        let est = |i: usize| -> Result<Option<Estimate>, ReportParseError> {
            Ok(match (num(i)?, num(i + 1)?) {
                (Some(value), Some(se)) => Some(Estimate { value, se }),
                _ => None,
            })
        };
        let int = |i: usize| -> Result<u64, ReportParseError> {
            f[i].parse().map_err(|_| perr(line, format!("bad count `{}`", f[i])))
        };
        let diffusion = match (num(9)?, num(10)?, num(11)?, num(12)?) {
            (Some(d), Some(se), Some(intercept), Some(r2)) => Some(DiffusionFit {
                d,
                se,
                intercept,
                r2,
                linear: f[13] == "true",
            }),
            _ => None,
        };

        let mut values = Vec::new();
        let mut se = Vec::new();
        let mut first_r = None;
        for (line, l) in body_lines(density, DENSITY_CSV_HEADER)? {
            let g: Vec<&str> = l.split(',').collect();
            if g.len() != 3 {
                return Err(perr(line, "expected 3 fields"));
            }
            if first_r.is_none() {
                first_r = parse_opt(g[0], line)?;
            }
            values.push(parse_opt(g[1], line)?.ok_or_else(|| perr(line, "missing rho"))?);
            if let Some(s) = parse_opt(g[2], line)? {
                se.push(s);
            }
        }
        let mut gap_means = Vec::new();
        for (line, l) in body_lines(gaps, GAPS_CSV_HEADER)? {
            let g = l.split(',').nth(1).ok_or_else(|| perr(line, "missing gap"))?;
            gap_means.push(parse_opt(g, line)?.ok_or_else(|| perr(line, "missing gap"))?);
        }
        let mut impact_lag = Vec::new();
        for (line, l) in body_lines(impact, IMPACT_CSV_HEADER)? {
            let g = l.split(',').nth(1).ok_or_else(|| perr(line, "missing impact"))?;
            impact_lag.push(parse_opt(g, line)?.ok_or_else(|| perr(line, "missing impact"))?);
        }

        Ok(Self {
            measure_time: num(0)?.ok_or_else(|| perr(line, "missing measure_time"))?,
            spread: est(1)?,
            impact: est(3)?,
            impact_buy: est(5)?,
            impact_sell: est(7)?,
            impact_lag,
            diffusion,
            density: DensityProfile {
                // the first bin centre is half a step
                grid_step: first_r.map(|r| 2.0 * r).unwrap_or(0.0),
                values,
                se,
            },
            gap_means,
            gap_skip_fraction: num(14)?.unwrap_or(0.0),
            counts: SampleCounts {
                events: int(15)?,
                snapshots: int(16)?,
                market_orders: int(17)?,
                msd_pairs: int(18)?,
                gap_snapshots: int(19)?,
                gap_skipped: int(20)?,
            },
        })
    }

    /// Structured text form of the scalar metrics and sequences.
    pub fn to_json(&self) -> String {
        let est = |e: Option<Estimate>| match e {
            Some(e) => format!("{{\"value\": {}, \"se\": {}}}", fmt_f64(e.value), fmt_f64(e.se)),
            None => "null".to_string(),
        };
        let list = |xs: &[f64]| {
            let items: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
            format!("[{}]", items.join(", "))
        };
        let diffusion = match self.diffusion {
            Some(d) => format!(
                "{{\"value\": {}, \"se\": {}, \"intercept\": {}, \"r2\": {}, \"linear\": {}}}",
                fmt_f64(d.d),
                fmt_f64(d.se),
                fmt_f64(d.intercept),
                fmt_f64(d.r2),
                d.linear
            ),
            None => "null".to_string(),
        };
        let c = &self.counts;
        format!(
            "{{\n  \"measure_time\": {},\n  \"spread\": {},\n  \"impact\": {},\n  \"impact_buy\": {},\n  \"impact_sell\": {},\n  \"impact_lag\": {},\n  \"diffusion\": {},\n  \"density\": {{\"grid_step\": {}, \"values\": {}}},\n  \"gap_means\": {},\n  \"gap_skip_fraction\": {},\n  \"counts\": {{\"events\": {}, \"snapshots\": {}, \"market_orders\": {}, \"msd_pairs\": {}, \"gap_snapshots\": {}, \"gap_skipped\": {}}}\n}}\n",
            fmt_f64(self.measure_time),
            est(self.spread),
            est(self.impact),
            est(self.impact_buy),
            est(self.impact_sell),
            list(&self.impact_lag),
            diffusion,
            fmt_f64(self.density.grid_step),
            list(&self.density.values),
            list(&self.gap_means),
            fmt_f64(self.gap_skip_fraction),
            c.events,
            c.snapshots,
            c.market_orders,
            c.msd_pairs,
            c.gap_snapshots,
            c.gap_skipped
        )
    }
}
