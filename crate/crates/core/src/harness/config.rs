//! Flat `key = value` experiment configuration.
//!
//! Every field has exactly one key. Files may contain blank lines and `#`
//! comments; command-line flags are applied afterwards through the same
//! [`ExperimentConfig::set`] so both paths report errors identically.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::assembly::MatrixKind;
use crate::blocks::{BlockMeasure, MeasureFamily};
use crate::error::{Error, Result};
use crate::graph::{GraphFamily, GraphSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SampleSpectrum,
    Moments,
    Theory,
    Universality,
    Words,
    Convergence,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::SampleSpectrum,
        Command::Moments,
        Command::Theory,
        Command::Universality,
        Command::Words,
        Command::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SampleSpectrum => "sample-spectrum",
            Command::Moments => "moments",
            Command::Theory => "theory",
            Command::Universality => "universality",
            Command::Words => "words",
            Command::Convergence => "convergence",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format `{other}`"))),
        }
    }
}

/// Documented keys, in the order they are written by [`ExperimentConfig::to_text`].
pub const KEYS: &[(&str, &str)] = &[
    (
        "command",
        "sample-spectrum | moments | theory | universality | words | convergence",
    ),
    ("graph", "erdos-renyi | regular"),
    ("n", "number of vertices N"),
    ("z", "mean degree (Erdős–Rényi) or exact degree (regular)"),
    (
        "measure",
        "block measure family, e.g. rank-one-sphere, full-gauss",
    ),
    ("d", "block dimension"),
    ("rank", "number of vectors for rank-r measures"),
    ("radius", "norm scale R"),
    (
        "radii",
        "comma-separated vector norms for rank-r-independent (overrides radius)",
    ),
    ("kind", "adjacency | laplacian"),
    ("realizations", "independent matrix samples"),
    (
        "p_max",
        "highest moment order; for `words`, the walk half-length",
    ),
    (
        "d_list",
        "comma-separated block dimensions for convergence and universality",
    ),
    ("t", "theory parameter t; defaults to rank * z / d"),
    ("samples", "Monte-Carlo samples per cell for universality"),
    ("bins", "histogram bins / theory grid points"),
    ("dense_limit", "largest N*d diagonalized"),
    ("ks_max", "largest acceptable KS distance in --check mode"),
    ("z_max", "largest acceptable |z-score| in --check mode"),
    ("seed", "master seed"),
    ("output", "output path prefix"),
    ("format", "csv | json"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub graph: GraphFamily,
    pub n_vertices: usize,
    pub mean_degree: f64,
    pub measure: MeasureFamily,
    pub d: usize,
    pub rank: usize,
    pub radius: f64,
    pub radii: Option<Vec<f64>>,
    pub kind: MatrixKind,
    pub realizations: usize,
    pub p_max: usize,
    pub d_list: Vec<usize>,
    pub t: Option<f64>,
    pub samples: usize,
    pub bins: usize,
    pub dense_limit: usize,
    pub ks_max: f64,
    pub z_max: f64,
    pub seed: u64,
    pub output: String,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::SampleSpectrum,
            graph: GraphFamily::ErdosRenyi,
            n_vertices: 400,
            mean_degree: 16.0,
            measure: MeasureFamily::RankOneSphere,
            d: 8,
            rank: 1,
            radius: 1.0,
            radii: None,
            kind: MatrixKind::Adjacency,
            realizations: 10,
            p_max: 8,
            d_list: vec![2, 4, 8],
            t: None,
            samples: 100_000,
            bins: 100,
            dense_limit: crate::spectral::DEFAULT_DENSE_LIMIT,
            ks_max: 0.05,
            z_max: 4.0,
            seed: 42,
            output: "out".into(),
            format: Format::Csv,
        }
    }
}

fn config_err(field: &str, message: impl fmt::Display) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn parse<T: FromStr>(field: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| config_err(field, format!("`{value}`: {e}")))
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(field, s))
        .collect()
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn graph_name(g: GraphFamily) -> &'static str {
    match g {
        GraphFamily::ErdosRenyi => "erdos-renyi",
        GraphFamily::Regular => "regular",
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "command" => self.command = parse(key, v)?,
            "graph" => {
                self.graph = match v {
                    "erdos-renyi" => GraphFamily::ErdosRenyi,
                    "regular" => GraphFamily::Regular,
                    other => {
                        return Err(config_err(key, format!("unknown graph family `{other}`")))
                    }
                }
            }
            "n" => self.n_vertices = parse(key, v)?,
            "z" => self.mean_degree = parse(key, v)?,
            "measure" => self.measure = parse(key, v)?,
            "d" => self.d = parse(key, v)?,
            "rank" => self.rank = parse(key, v)?,
            "radius" => self.radius = parse(key, v)?,
            "radii" => {
                self.radii = if v.is_empty() {
                    None
                } else {
                    Some(parse_list(key, v)?)
                }
            }
            "kind" => self.kind = parse(key, v)?,
            "realizations" => self.realizations = parse(key, v)?,
            "p_max" => self.p_max = parse(key, v)?,
            "d_list" => self.d_list = parse_list(key, v)?,
            "t" => {
                self.t = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "samples" => self.samples = parse(key, v)?,
            "bins" => self.bins = parse(key, v)?,
            "dense_limit" => self.dense_limit = parse(key, v)?,
            "ks_max" => self.ks_max = parse(key, v)?,
            "z_max" => self.z_max = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "output" => self.output = v.to_string(),
            "format" => self.format = parse(key, v)?,
            other => return Err(config_err(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key = value` document on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// `(key, value)` pairs for every documented key.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let value = |key: &str| -> String {
            match key {
                "command" => self.command.name().into(),
                "graph" => graph_name(self.graph).into(),
                "n" => self.n_vertices.to_string(),
                "z" => self.mean_degree.to_string(),
                "measure" => self.measure.name().into(),
                "d" => self.d.to_string(),
                "rank" => self.rank.to_string(),
                "radius" => self.radius.to_string(),
                "radii" => self.radii.as_deref().map(join).unwrap_or_default(),
                "kind" => self.kind.name().into(),
                "realizations" => self.realizations.to_string(),
                "p_max" => self.p_max.to_string(),
                "d_list" => join(&self.d_list),
                "t" => self.t.map(|t| t.to_string()).unwrap_or_default(),
                "samples" => self.samples.to_string(),
                "bins" => self.bins.to_string(),
                "dense_limit" => self.dense_limit.to_string(),
                "ks_max" => self.ks_max.to_string(),
                "z_max" => self.z_max.to_string(),
                "seed" => self.seed.to_string(),
                "output" => self.output.clone(),
                "format" => self.format.extension().into(),
                _ => unreachable!("undocumented key {key}"),
            }
        };
        KEYS.iter().map(|&(k, _)| (k, value(k))).collect()
    }

    /// Canonical text form; parsing it back reproduces `self`.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hex SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn graph_spec(&self) -> GraphSpec {
        GraphSpec {
            n_vertices: self.n_vertices,
            mean_degree: self.mean_degree,
            family: self.graph,
        }
    }

    pub fn block_measure(&self) -> Result<BlockMeasure> {
        self.block_measure_at(self.d)
    }

    pub fn block_measure_at(&self, d: usize) -> Result<BlockMeasure> {
        if let Some(radii) = &self.radii {
            if self.measure != MeasureFamily::RankRIndependent {
                return Err(config_err(
                    "radii",
                    "only valid with measure = rank-r-independent",
                ));
            }
            return BlockMeasure::with_radii(d, radii.clone());
        }
        let rank = if self.measure.is_full_rank() {
            d
        } else if self.measure.is_rank_one() {
            1
        } else {
            self.rank
        };
        BlockMeasure::with_rank(self.measure, d, rank, self.radius)
    }

    /// Effective rank: number of vectors per block (`d` for full-rank families).
    pub fn effective_rank(&self) -> usize {
        if self.measure.is_full_rank() {
            self.d
        } else if self.measure.is_rank_one() {
            1
        } else {
            self.radii.as_ref().map_or(self.rank, Vec::len)
        }
    }

    /// `t` as configured, or `rank * z / d`.
    pub fn theory_t(&self) -> f64 {
        self.t
            .unwrap_or(self.effective_rank() as f64 * self.mean_degree / self.d as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(config_err("realizations", "must be at least 1"));
        }
        if self.d == 0 {
            return Err(config_err("d", "must be at least 1"));
        }
        self.graph_spec()
            .validate()
            .map_err(|e| config_err("graph", e))?;
        self.block_measure().map_err(|e| config_err("measure", e))?;
        if let Some(t) = self.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config_err("t", "must be positive"));
            }
        }
        if self.bins == 0 {
            return Err(config_err("bins", "must be at least 1"));
        }
        match self.command {
            Command::Convergence | Command::Universality => {
                if self.d_list.is_empty() {
                    return Err(config_err("d_list", "must list at least one dimension"));
                }
                for &d in &self.d_list {
                    self.block_measure_at(d)
                        .map_err(|e| config_err("d_list", e))?;
                }
            }
            Command::Words => {
                if self.p_max == 0 || self.p_max as u32 > crate::walks::MAX_WALK_HALF_LENGTH {
                    return Err(config_err(
                        "p_max",
                        format!(
                            "walk half-length must lie in 1..={}",
                            crate::walks::MAX_WALK_HALF_LENGTH
                        ),
                    ));
                }
            }
            _ => {}
        }
        if self.command == Command::Universality && self.samples < 2 {
            return Err(config_err("samples", "must be at least 2"));
        }
        Ok(())
    }
}
