use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{search_backends, FrameIndex, SearchBackend, DEFAULT_BACKEND};
use crate::miner::mine_with;
use crate::types::{MiningConfig, SeedRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Match threshold.
    Tau,
    /// Clip span. The NMS window stays at the base config's value.
    TSpan,
}

impl SweepAxis {
    fn apply(self, base: &MiningConfig, value: f64) -> MiningConfig {
        let mut config = base.clone();
        match self {
            SweepAxis::Tau => config.tau = value,
            SweepAxis::TSpan => config.t_span_s = value,
        }
        config
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Tau => "tau",
            SweepAxis::TSpan => "t-span",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(SweepAxis::Tau),
            "t-span" | "span" => Ok(SweepAxis::TSpan),
            other => Err(Error::invalid(
                "config.sweep.axis",
                format!("unknown axis `{other}` (expected tau or t-span)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub value: f64,
    pub n_pairs: u64,
    pub n_unique_clips: u64,
    pub n_unique_captions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Sorted by `value`, ascending.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Whether `n_pairs` never increases along the axis.
    pub fn is_non_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].n_pairs <= w[0].n_pairs)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].n_pairs < w[0].n_pairs)
    }
}

pub fn sweep(
    seeds: &[SeedRecord],
    index: &FrameIndex,
    base: &MiningConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepResult> {
    let backends = search_backends();
    sweep_with(seeds, index, base, axis, values, backends.get(DEFAULT_BACKEND)?)
}

/// One mining run per value, all other parameters held at `base`.
pub fn sweep_with(
    seeds: &[SeedRecord],
    index: &FrameIndex,
    base: &MiningConfig,
    axis: SweepAxis,
    values: &[f64],
    backend: &dyn SearchBackend,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("config.sweep.values", "no values given"));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let configs: Vec<_> = values.iter().map(|v| axis.apply(base, *v)).collect();
    for config in &configs {
        config.validate()?;
    }
    let points = values
        .iter()
        .zip(&configs)
        .map(|(value, config)| {
            let c = mine_with(seeds, index, config, backend)?.counters;
            Ok(SweepPoint {
                value: *value,
                n_pairs: c.n_pairs,
                n_unique_clips: c.n_unique_clips,
                n_unique_captions: c.n_unique_captions,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { axis, points })
}
