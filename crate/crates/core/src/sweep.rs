//! Parameter sweeps: metric tables over atom numbers, channels and `τ` grids.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{density_with, Cache, CACHE_SCHEMA};
use crate::channels::ChannelSpec;
use crate::metrics::{empirical_theta_b, evaluate_metric, Metric};
use crate::qnd::SystemConfig;
use crate::table::{Cell, Table};
use crate::{Error, Result};

/// `count` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TauGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        let g = TauGrid { start, stop, count };
        g.validate()?;
        Ok(g)
    }

    pub fn single(tau: f64) -> Self {
        TauGrid {
            start: tau,
            stop: tau,
            count: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() || self.start < 0.0
        {
            return Err(Error::invalid(format!("invalid tau grid {self}")));
        }
        if self.count > 1 && !(self.stop > self.start) {
            return Err(Error::invalid(format!(
                "tau grid {self} is not strictly increasing"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for TauGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.start, self.stop, self.count)
    }
}

/// Parses `start:stop:count`, or a single value. `pi` is accepted as a
/// number, optionally with a multiplier or divisor (`2pi`, `pi/2`).
impl FromStr for TauGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [one] => Ok(TauGrid::single(parse_number(one)?)),
            [a, b, n] => {
                let count = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad tau count '{n}'")))?;
                TauGrid::new(parse_number(a)?, parse_number(b)?, count)
            }
            _ => Err(Error::invalid(format!(
                "expected start:stop:count, got '{s}'"
            ))),
        }
    }
}

/// Parses a float, also accepting `pi`, `<k>pi` and `pi/<k>`.
pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = || Error::invalid(format!("not a number: '{s}'"));
    if let Some(pos) = t.find("pi") {
        let (pre, post) = (&t[..pos], &t[pos + 2..]);
        let mult = match pre.trim_end_matches('*') {
            "" => 1.0,
            m => m.parse::<f64>().map_err(|_| bad())?,
        };
        let div = match post {
            "" => 1.0,
            d => d
                .strip_prefix('/')
                .ok_or_else(bad)?
                .parse::<f64>()
                .map_err(|_| bad())?,
        };
        return Ok(mult * std::f64::consts::PI / div);
    }
    t.parse().map_err(|_| bad())
}

/// A full sweep: every combination of atom number, channel and `τ`, each
/// evaluated for every requested metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub n_atoms: Vec<usize>,
    pub alpha: f64,
    pub n_c: u32,
    pub n_d: u32,
    pub tau: TauGrid,
    pub channels: Vec<ChannelSpec>,
    pub metrics: Vec<Metric>,
    /// CHSH angle; the empirical optimum for each `N` when absent.
    pub theta_b: Option<f64>,
}

impl SweepRequest {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms.is_empty() || self.channels.is_empty() || self.metrics.is_empty() {
            return Err(Error::invalid(
                "sweep needs at least one N, channel and metric",
            ));
        }
        self.tau.validate()?;
        for &n in &self.n_atoms {
            SystemConfig::new(n, self.alpha, self.n_c, self.n_d, self.tau.start)?;
        }
        for ch in &self.channels {
            ch.validate()?;
        }
        Ok(())
    }
}

/// Column layout of sweep tables.
pub const SWEEP_COLUMNS: [&str; 14] = [
    "N",
    "alpha",
    "n_c",
    "n_d",
    "tau",
    "channel",
    "kappa",
    "gamma",
    "gain",
    "Gamma",
    "metric",
    "value",
    "outcome_weight",
    "status",
];

fn status_of(e: &Error) -> Option<&'static str> {
    match e {
        Error::ImpossibleOutcome { .. } => Some("impossible_outcome"),
        Error::UndefinedDirection(_) => Some("undefined"),
        _ => None,
    }
}

fn point_rows(
    req: &SweepRequest,
    n: usize,
    channel: &ChannelSpec,
    tau: f64,
    cache: Option<&Cache>,
) -> Result<Vec<Vec<Cell>>> {
    let cfg = SystemConfig::new(n, req.alpha, req.n_c, req.n_d, tau)?;
    let theta_b = req.theta_b.unwrap_or_else(|| empirical_theta_b(n));
    let [kappa, gamma, gain, dephase] = channel.rates();
    let prefix = |metric: Metric| -> Vec<Cell> {
        vec![
            n.into(),
            req.alpha.into(),
            req.n_c.into(),
            req.n_d.into(),
            tau.into(),
            channel.kind().into(),
            kappa.into(),
            gamma.into(),
            gain.into(),
            dephase.into(),
            metric.name().into(),
        ]
    };
    let rho = match density_with(cache, &cfg, channel) {
        Ok(r) => Some(r),
        Err(e) if status_of(&e).is_some() => None,
        Err(e) => return Err(e),
    };
    req.metrics
        .iter()
        .map(|&m| {
            let mut row = prefix(m);
            match &rho {
                None => row.extend([Cell::Empty, Cell::Empty, "impossible_outcome".into()]),
                Some(r) => match evaluate_metric(r, m, theta_b) {
                    Ok(v) => row.extend([v.into(), r.outcome_weight.into(), "ok".into()]),
                    Err(e) => match status_of(&e) {
                        Some(s) => row.extend([Cell::Empty, r.outcome_weight.into(), s.into()]),
                        None => return Err(e),
                    },
                },
            }
            Ok(row)
        })
        .collect()
}

fn compute_sweep(req: &SweepRequest, cache: Option<&Cache>) -> Result<Table> {
    let taus = req.tau.values();
    let mut points: Vec<(usize, ChannelSpec, f64)> = Vec::new();
    for &n in &req.n_atoms {
        for &ch in &req.channels {
            points.extend(taus.iter().map(|&t| (n, ch, t)));
        }
    }
    // rayon's indexed collect keeps point order regardless of scheduling
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|(n, ch, t)| point_rows(req, *n, ch, *t, cache))
        .collect::<Result<_>>()?;
    let mut table = Table::new(SWEEP_COLUMNS);
    for row in blocks.into_iter().flatten() {
        table.push(row)?;
    }
    Ok(table)
}

#[derive(Serialize)]
struct SweepKey<'a> {
    kind: &'static str,
    schema: u32,
    version: &'static str,
    request: &'a SweepRequest,
}

/// Runs a sweep. Rows are ordered by `N`, then channel (request order), then
/// `τ`, then metric (request order). With a cache, the finished table and
/// each density matrix are stored and reused.
pub fn run_sweep(req: &SweepRequest, cache: Option<&Cache>) -> Result<Table> {
    req.validate()?;
    let Some(cache) = cache else {
        return compute_sweep(req, None);
    };
    let key = SweepKey {
        kind: "sweep",
        schema: CACHE_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        request: req,
    };
    let (stored, _) =
        cache.get_or_compute(
            &key,
            || Ok(compute_sweep(req, Some(cache))?.to_json_value()),
        )?;
    Table::from_json_value(stored)
}
