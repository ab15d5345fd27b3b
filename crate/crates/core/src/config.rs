//! Scenario configuration files.
//!
//! A config is one strict JSON document. Boxes are objects keyed by state
//! dimension name; a `_deg` suffix marks values given in degrees, which are
//! converted to radians. Dimensions missing from a box default to the grid
//! bounds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::Deserialize;

use crate::dynamics::{taxi_control_map, AffineDynamics, BrakeParams, Plant, TaxiParams};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interval::{Interval, IntervalBox};
use crate::network::Network;
use crate::propagation::DEFAULT_SPLIT_CAP;
use crate::reach::{EgressPolicy, Engine, Scenario};

type NamedBox = BTreeMap<String, [f64; 2]>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub plant: PlantConfig,
    /// Path to the network JSON, relative to the config file.
    pub network: PathBuf,
    #[serde(default)]
    pub control_map: Option<ControlMap>,
    pub grid: GridConfig,
    pub latent_box: Vec<[f64; 2]>,
    #[serde(default)]
    pub r0: Option<NamedBox>,
    #[serde(default, rename = "unsafe")]
    pub unsafe_boxes: Vec<NamedBox>,
    #[serde(default)]
    pub egress: BTreeMap<String, EgressPolicy>,
    pub engine: Engine,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_split_cap")]
    pub split_cap: usize,
    #[serde(default)]
    pub epsilon_shrink: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn default_k_max() -> usize {
    50
}

fn default_split_cap() -> usize {
    DEFAULT_SPLIT_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    Taxi {
        #[serde(flatten)]
        params: TaxiParams,
    },
    Brake {
        #[serde(flatten)]
        params: BrakeParams,
    },
    Affine {
        a_x: Vec<Vec<f64>>,
        a_u: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default = "one")]
        substeps: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ControlMap {
    /// A named built-in map, e.g. `"taxi_proportional"`.
    Named(String),
    Matrix { w: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub counts: Vec<usize>,
    pub bounds: NamedBox,
}

/// A config resolved into an analysis scenario.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub r0: Option<IntervalBox>,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Loaded> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text)?.resolve(base)
    }

    pub fn resolve(&self, base: &Path) -> Result<Loaded> {
        let plant = match &self.plant {
            PlantConfig::Taxi { params } => {
                params.validate()?;
                Plant::Taxi(*params)
            }
            PlantConfig::Brake { params } => {
                params.validate()?;
                Plant::Brake(*params)
            }
            PlantConfig::Affine { a_x, a_u, c, substeps } => Plant::Affine(AffineDynamics::new(
                matrix(a_x, "a_x")?,
                matrix(a_u, "a_u")?,
                Array1::from(c.clone()),
                *substeps,
            )?),
        };
        let names = plant.dim_names();

        let net_path = base.join(&self.network);
        let mut network = Network::load(&net_path)
            .map_err(|e| Error::Config(format!("network {}: {e}", net_path.display())))?;
        if let Some(map) = &self.control_map {
            let (w, b) = match map {
                ControlMap::Named(name) if name == "taxi_proportional" => taxi_control_map(),
                ControlMap::Named(name) => return Err(Error::Config(format!("unknown control map {name:?}"))),
                ControlMap::Matrix { w, b } => (matrix(w, "control_map.w")?, Array1::from(b.clone())),
            };
            network = network.append_affine(&w, &b)?;
        }

        let bounds = named_box(&self.grid.bounds, &names, None, "grid.bounds")?;
        let mut grid = Grid::new(bounds, self.grid.counts.clone())?;
        grid.epsilon_shrink = self.epsilon_shrink;

        let latent_box = IntervalBox::try_from(
            self.latent_box
                .iter()
                .map(|&[lo, hi]| Interval::try_new(lo, hi))
                .collect::<Result<Vec<_>>>()?,
        )
        .map_err(|_| Error::Config("latent_box needs at least one dimension".into()))?;

        let r0 = match &self.r0 {
            Some(b) => Some(named_box(b, &names, Some(grid.bounds()), "r0")?),
            None => None,
        };
        let unsafe_boxes = self
            .unsafe_boxes
            .iter()
            .map(|b| named_box(b, &names, Some(grid.bounds()), "unsafe"))
            .collect::<Result<Vec<_>>>()?;
        let egress = egress_rules(&self.egress, &names)?;

        let workers = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let scenario = Scenario {
            plant,
            network,
            grid,
            latent_box,
            unsafe_boxes,
            egress,
            engine: self.engine,
            m: self.m,
            k_max: self.k_max,
            split_cap: self.split_cap,
            seed: self.seed,
            workers: workers.max(1),
        };
        scenario.validate()?;
        Ok(Loaded { scenario, r0, output_dir: self.output_dir.as_ref().map(|d| base.join(d)) })
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!("{what} is ragged")));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.iter().flatten().copied().collect())
        .map_err(|e| Error::Config(format!("{what}: {e}")))
}

/// Resolves a dimension-keyed box; missing dimensions come from `fill`.
fn named_box(b: &NamedBox, names: &[String], fill: Option<&IntervalBox>, what: &str) -> Result<IntervalBox> {
    let mut dims: Vec<Option<Interval>> = vec![None; names.len()];
    for (key, &[lo, hi]) in b {
        let (name, scale) = match key.strip_suffix("_deg") {
            Some(n) => (n, std::f64::consts::PI / 180.0),
            None => (key.as_str(), 1.0),
        };
        let d = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("{what}: unknown dimension {key:?} (expected one of {names:?})")))?;
        if dims[d].is_some() {
            return Err(Error::Config(format!("{what}: dimension {name:?} given twice")));
        }
        dims[d] = Some(Interval::try_new(lo * scale, hi * scale).map_err(|e| Error::Config(format!("{what}.{key}: {e}")))?);
    }
    let dims = dims
        .into_iter()
        .enumerate()
        .map(|(d, iv)| match (iv, fill) {
            (Some(iv), _) => Ok(iv),
            (None, Some(f)) => Ok(f[d]),
            (None, None) => Err(Error::Config(format!("{what}: missing dimension {:?}", names[d]))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalBox::new(dims))
}

/// Keys are `dim` (both faces), `dim_lower` or `dim_upper`; unlisted faces
/// are unverifiable.
fn egress_rules(rules: &BTreeMap<String, EgressPolicy>, names: &[String]) -> Result<Vec<[EgressPolicy; 2]>> {
    let mut out = vec![[EgressPolicy::Unverifiable; 2]; names.len()];
    // whole-dimension keys first so face keys override them
    let mut keys: Vec<(&String, &EgressPolicy)> = rules.iter().collect();
    keys.sort_by_key(|(k, _)| k.ends_with("_lower") || k.ends_with("_upper"));
    for (key, &policy) in keys {
        let (name, faces): (&str, &[usize]) = if let Some(n) = key.strip_suffix("_lower") {
            (n, &[0])
        } else if let Some(n) = key.strip_suffix("_upper") {
            (n, &[1])
        } else {
            (key.as_str(), &[0, 1])
        };
        let d = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("egress: unknown dimension {key:?}")))?;
        for &f in faces {
            out[d][f] = policy;
        }
    }
    Ok(out)
}
