//! Case configuration files.
//!
//! The format is line based. `# ...` starts a comment, `[name]` opens a
//! section and every other non-blank line is `key = value`:
//!
//! ```text
//! [mesh]
//! fixture = cantilever_sensor     # or: file = path/to/mesh.txt
//! refine = 0
//!
//! [material]
//! young = 1.0
//! poisson = 0.3
//!
//! [loads]
//! body_force = 0 -1               # fx fy [gxx gxy gyx gyy]
//! group.1.traction = 0 -1         # tx ty [gxx gxy gyx gyy]
//! group.0.displacement = 0 0
//!
//! [estimator]
//! methods = eet, spet, eespt
//! costs = J0, J1, J2
//! k = 3
//! penalty = 1e5
//! reference_levels = 2
//! pinning = mean_value            # or: l2_rigid
//!
//! [output]
//! dir = out
//! repetitions = 3
//! ```
//!
//! Every key is optional except the mesh source. Material and loads default to
//! those of the fixture; for mesh files the material defaults to `E = 1`,
//! `nu = 0.3` and unlisted boundary groups are fixed and traction free.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crestim::{AffineField, BoundaryData, CostFunction, LoadCase, Material, Method, Pinning};
use nalgebra::{Matrix2, Vector2};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Fixture(String),
    File(PathBuf),
}

/// Loads given in a config file, applied on top of the mesh source defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadOverrides {
    pub body_force: Option<AffineField>,
    pub traction: BTreeMap<usize, AffineField>,
    pub displacement: BTreeMap<usize, AffineField>,
}

impl LoadOverrides {
    pub fn is_empty(&self) -> bool {
        self.body_force.is_none() && self.traction.is_empty() && self.displacement.is_empty()
    }

    /// `base` with the overrides applied, padded to `groups` boundary groups.
    pub fn apply(&self, base: &LoadCase, groups: usize) -> LoadCase {
        let mut out = base.clone();
        let n = groups
            .max(out.boundary.len())
            .max(self.traction.keys().chain(self.displacement.keys()).map(|g| g + 1).max().unwrap_or(0));
        out.boundary.resize(n, BoundaryData::fixed());
        if let Some(b) = self.body_force {
            out.body_force = b;
        }
        for (&g, &t) in &self.traction {
            out.boundary[g].traction = t;
        }
        for (&g, &d) in &self.displacement {
            out.boundary[g].displacement = d;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub mesh: MeshSource,
    pub refine: usize,
    pub material: Option<Material>,
    pub loads: LoadOverrides,
    pub methods: Vec<Method>,
    pub costs: Vec<CostFunction>,
    pub k: usize,
    pub penalty: f64,
    pub pinning: Pinning,
    pub reference_levels: usize,
    pub output_dir: PathBuf,
    pub repetitions: usize,
}

impl CaseConfig {
    pub fn new(mesh: MeshSource) -> Self {
        Self {
            mesh,
            refine: 0,
            material: None,
            loads: LoadOverrides::default(),
            methods: Method::ALL.to_vec(),
            costs: CostFunction::ALL.to_vec(),
            k: 3,
            penalty: crestim::eespt::DEFAULT_PENALTY,
            pinning: Pinning::MeanValue,
            reference_levels: crestim::reference::DEFAULT_LEVELS,
            output_dir: PathBuf::from("out"),
            repetitions: 3,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: &str| Err(CliError::Validation(m.to_string()));
        if self.methods.is_empty() {
            return fail("at least one method is required");
        }
        if self.costs.is_empty() && self.methods.iter().any(|m| m.uses_cost()) {
            return fail("at least one cost function is required");
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return fail("penalty must be positive");
        }
        if !(1..=3).contains(&self.k) {
            return fail("k must be 1, 2 or 3");
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1");
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // relative mesh paths are taken from the config's directory
        if let MeshSource::File(p) = &cfg.mesh {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.mesh = MeshSource::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = Entries::parse(text)?;
        let mesh = match (entries.take("mesh", "fixture"), entries.take("mesh", "file")) {
            (Some(f), None) => MeshSource::Fixture(f.value),
            (None, Some(f)) => MeshSource::File(PathBuf::from(f.value)),
            (Some(_), Some(_)) => return Err(invalid("[mesh] takes either 'fixture' or 'file', not both")),
            (None, None) => return Err(invalid("[mesh] needs 'fixture' or 'file'")),
        };
        let mut cfg = CaseConfig::new(mesh);
        if let Some(v) = entries.take("mesh", "refine") {
            cfg.refine = v.parse()?;
        }

        let young = entries.take("material", "young").map(|v| v.parse::<f64>()).transpose()?;
        let poisson = entries.take("material", "poisson").map(|v| v.parse::<f64>()).transpose()?;
        if young.is_some() || poisson.is_some() {
            let d = Material::default();
            cfg.material = Some(
                Material::new(young.unwrap_or(d.young), poisson.unwrap_or(d.poisson))
                    .map_err(|e| invalid(&e.to_string()))?,
            );
        }

        if let Some(v) = entries.take("loads", "body_force") {
            cfg.loads.body_force = Some(v.affine()?);
        }
        for v in entries.take_prefixed("loads", "group.") {
            let rest = &v.key["group.".len()..];
            let (g, what) = rest.split_once('.').ok_or_else(|| v.error("expected group.<n>.traction or group.<n>.displacement"))?;
            let g: usize = g.parse().map_err(|_| v.error("group index must be a non-negative integer"))?;
            let field = v.affine()?;
            match what {
                "traction" => cfg.loads.traction.insert(g, field),
                "displacement" => cfg.loads.displacement.insert(g, field),
                _ => return Err(v.error("expected 'traction' or 'displacement'")),
            };
        }

        if let Some(v) = entries.take("estimator", "methods") {
            cfg.methods = v.list()?;
        }
        if let Some(v) = entries.take("estimator", "costs") {
            cfg.costs = v.list()?;
        }
        if let Some(v) = entries.take("estimator", "k") {
            cfg.k = v.parse()?;
        }
        if let Some(v) = entries.take("estimator", "penalty") {
            cfg.penalty = v.parse()?;
        }
        if let Some(v) = entries.take("estimator", "reference_levels") {
            cfg.reference_levels = v.parse()?;
        }
        if let Some(v) = entries.take("estimator", "pinning") {
            cfg.pinning = match v.value.as_str() {
                "mean_value" => Pinning::MeanValue,
                "l2_rigid" => Pinning::L2Rigid,
                _ => return Err(v.error("expected 'mean_value' or 'l2_rigid'")),
            };
        }
        if let Some(v) = entries.take("output", "dir") {
            cfg.output_dir = PathBuf::from(v.value);
        }
        if let Some(v) = entries.take("output", "repetitions") {
            cfg.repetitions = v.parse()?;
        }
        entries.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn invalid(m: &str) -> CliError {
    CliError::Validation(m.to_string())
}

#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn error(&self, m: &str) -> CliError {
        CliError::Validation(format!("line {}: [{}] {}: {m}", self.line, self.section, self.key))
    }

    fn parse<T: std::str::FromStr>(&self) -> CliResult<T> {
        self.value.parse().map_err(|_| self.error(&format!("cannot parse '{}'", self.value)))
    }

    fn list<T: std::str::FromStr<Err = String>>(&self) -> CliResult<Vec<T>> {
        self.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e: String| self.error(&e)))
            .collect()
    }

    fn affine(&self) -> CliResult<AffineField> {
        let nums: Vec<f64> = self
            .value
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| self.error(&format!("cannot parse number '{s}'"))))
            .collect::<CliResult<_>>()?;
        match nums.as_slice() {
            [x, y] => Ok(AffineField::constant(*x, *y)),
            [x, y, a, b, c, d] => Ok(AffineField { constant: Vector2::new(*x, *y), gradient: Matrix2::new(*a, *b, *c, *d) }),
            _ => Err(self.error("expected 2 or 6 numbers")),
        }
    }
}

struct Entries(Vec<Entry>);

impl Entries {
    fn parse(text: &str) -> CliResult<Self> {
        let mut section = String::new();
        let mut out: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                section = name
                    .strip_suffix(']')
                    .ok_or_else(|| invalid(&format!("line {}: unterminated section header", i + 1)))?
                    .trim()
                    .to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| invalid(&format!("line {}: expected key = value", i + 1)))?;
            let key = k.trim().to_string();
            if section.is_empty() {
                return Err(invalid(&format!("line {}: '{key}' outside of a section", i + 1)));
            }
            if out.iter().any(|e| e.section == section && e.key == key) {
                return Err(invalid(&format!("line {}: duplicate key [{section}] {key}", i + 1)));
            }
            out.push(Entry { section: section.clone(), key, value: v.trim().to_string(), line: i + 1 });
        }
        Ok(Entries(out))
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        let pos = self.0.iter().position(|e| e.section == section && e.key == key)?;
        Some(self.0.remove(pos))
    }

    fn take_prefixed(&mut self, section: &str, prefix: &str) -> Vec<Entry> {
        let (hit, rest) = std::mem::take(&mut self.0).into_iter().partition(|e| e.section == section && e.key.starts_with(prefix));
        self.0 = rest;
        hit
    }

    fn finish(self) -> CliResult<()> {
        match self.0.first() {
            Some(e) => Err(e.error("unknown key")),
            None => Ok(()),
        }
    }
}
