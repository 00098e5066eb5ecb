//! JSON run configuration and the fail-fast preparation of the cheap objects
//! (dilation, node set, window) every pipeline stage starts from.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aniso::{ExpansiveDilation, Grid, SampledSignal};
use crate::compact::{Cutoff, EpsRule, MAX_MOMENT_ORDER};
use crate::error::{Error, Result};
use crate::frame::{DualOptions, FrameSystem};
use crate::nodes::{generate, read_nodes_csv, split, Generator, NodeSet, PeriodicBox};
use crate::norms::SpaceParams;
use crate::window::{build_h, lattice_parameter, PainlessConfig, Region, SpectralWindow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub v: Region,
    /// Plateau margin; `0.1 · diam(Q)` when omitted.
    #[serde(default)]
    pub delta_q: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub lo: Vec<f64>,
    pub size: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    /// Period cell of `Λ`.
    pub cell: CellSpec,
    #[serde(default)]
    pub generator: Option<Generator>,
    /// CSV of cell nodes, used instead of `generator`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalayageSpec {
    pub tol: f64,
    /// Defaults to `12 · max(1, ρ(Λ))`.
    #[serde(default)]
    pub r_trunc: Option<f64>,
    /// Number of lattice targets `k/b`, `k = 0, 1, ...`, solved by `balayage`.
    #[serde(default = "default_targets")]
    pub targets: usize,
}

fn default_targets() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    /// `b >= 2 · b_factor · max box half-width of supp ψ̂`, snapped to the node period.
    pub b_factor: f64,
    pub r_dual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactSpec {
    pub n_moments: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: EpsRule,
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub cutoff: Cutoff,
    /// Grid on which `ψ` is sampled for truncation.
    pub sample_grid: GridSpec,
    #[serde(default = "default_iter")]
    pub max_iter: usize,
    #[serde(default = "default_neumann_tol")]
    pub tol: f64,
}

fn default_iter() -> usize {
    50
}

fn default_neumann_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Random band signals for the reconstruction and norm criteria.
    #[serde(default = "default_signals")]
    pub signals: usize,
    #[serde(default = "default_trials")]
    pub bound_trials: usize,
    #[serde(default = "default_bound_iters")]
    pub bound_iters: usize,
    /// Test hook: relative perturbation added to every balayage coefficient.
    #[serde(default)]
    pub tamper_dual: Option<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { signals: 10, bound_trials: 2, bound_iters: 200, tamper_dual: None }
    }
}

fn default_signals() -> usize {
    10
}
fn default_trials() -> usize {
    2
}
fn default_bound_iters() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: Vec<Vec<f64>>,
    pub window: WindowSpec,
    pub nodes: NodeSpec,
    pub j_range: (i32, i32),
    pub grid: GridSpec,
    pub balayage: BalayageSpec,
    pub dual: DualSpec,
    pub compact: CompactSpec,
    #[serde(default)]
    pub norms: Vec<SpaceParams>,
    #[serde(default)]
    pub seed: u64,
    /// Input signal (CSV or binary); a seeded random band signal when omitted.
    #[serde(default)]
    pub signal: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// Objects every stage needs, built before any heavy numerics.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub a: ExpansiveDilation,
    pub nodes: NodeSet,
    pub psi: SpectralWindow,
    pub grid: Grid,
    pub b: f64,
    pub dual: DualOptions,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path)?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| schema(format!("{}: {e}", path.display())))
    }

    /// The desk-scale reference: `A = 2`, `V = (-1/2, 1/2)`, `δ_Q = 0.1`,
    /// jittered `Λ` of spacing 1/4, `j ∈ [-3, 3]`, `N = 4096`, `T = 32`.
    pub fn reference() -> Self {
        Self {
            matrix: vec![vec![2.0]],
            window: WindowSpec { v: Region::symmetric_box(&[0.5]), delta_q: Some(0.1) },
            nodes: NodeSpec {
                cell: CellSpec { lo: vec![-2.0], size: vec![4.0] },
                generator: Some(Generator::Jittered { delta: 0.16, spacing: 0.25 }),
                file: None,
            },
            j_range: (-3, 3),
            grid: GridSpec { n: 4096, t: 32.0 },
            balayage: BalayageSpec { tol: 1e-8, r_trunc: Some(12.0), targets: 50 },
            dual: DualSpec { b_factor: 1.1, r_dual: 12.0 },
            compact: CompactSpec {
                n_moments: 3,
                l: 6.0,
                m: 2,
                eps: EpsRule::Measured { factor: 2.0 },
                r_grid: vec![4.0, 8.0, 16.0],
                cutoff: Cutoff::Dilated,
                sample_grid: GridSpec { n: 32768, t: 256.0 },
                max_iter: 50,
                tol: 1e-10,
            },
            norms: vec![
                SpaceParams::new(crate::norms::Family::F, 0.0, 2.0, 2.0),
                SpaceParams::new(crate::norms::Family::F, 0.0, 1.0, 1.0),
            ],
            seed: 7,
            signal: None,
            out: None,
            verify: VerifySpec::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// Shape and range checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(schema("matrix is empty"));
        }
        if d > 2 {
            return Err(schema(format!("dimension {d} unsupported (1 or 2)")));
        }
        if self.matrix.iter().any(|r| r.len() != d) {
            return Err(schema("matrix must be square"));
        }
        if self.window.v.dim() != d {
            return Err(schema("window region dimension differs from the matrix"));
        }
        if let Some(dq) = self.window.delta_q {
            if !(dq > 0.0) {
                return Err(schema("delta_q must be positive"));
            }
        }
        let cell = &self.nodes.cell;
        if cell.lo.len() != d || cell.size.len() != d || cell.size.iter().any(|s| !(*s > 0.0)) {
            return Err(schema("node cell must have d positive sides"));
        }
        match (&self.nodes.generator, &self.nodes.file) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(schema("nodes need exactly one of generator or file")),
        }
        if self.j_range.0 > self.j_range.1 {
            return Err(schema("j_range is empty"));
        }
        if self.j_range.0.abs().max(self.j_range.1.abs()) > crate::aniso::DEFAULT_MAX_SCALE {
            return Err(schema("j_range exceeds the supported scale range"));
        }
        for (name, g) in [("grid", self.grid), ("compact.sample_grid", self.compact.sample_grid)] {
            if g.n < 8 || !g.n.is_power_of_two() || !(g.t > 0.0) {
                return Err(schema(format!("{name}: n must be a power of two >= 8 and t positive")));
            }
        }
        let bal = &self.balayage;
        if !(bal.tol > 0.0) || bal.r_trunc.is_some_and(|r| !(r > 0.0)) {
            return Err(schema("balayage tol and r_trunc must be positive"));
        }
        if !(self.dual.b_factor >= 1.0) || !(self.dual.r_dual > 0.0) {
            return Err(schema("dual b_factor must be >= 1 and r_dual positive"));
        }
        let c = &self.compact;
        if c.n_moments > MAX_MOMENT_ORDER || c.m > 4 || !(c.l >= 0.0) {
            return Err(schema("compact: need N <= 8, M <= 4, L >= 0"));
        }
        if c.r_grid.is_empty() || c.r_grid.iter().any(|r| !(*r >= 1.0)) || c.r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(schema("compact.r_grid must be increasing with R >= 1"));
        }
        let eps_ok = match c.eps {
            EpsRule::Absolute { value } => value > 0.0,
            EpsRule::FrameRelative { factor } | EpsRule::Measured { factor } => factor > 0.0,
        };
        if !eps_ok {
            return Err(schema("compact.eps must be positive"));
        }
        if c.max_iter == 0 || !(c.tol > 0.0) {
            return Err(schema("compact.max_iter and tol must be positive"));
        }
        for p in &self.norms {
            p.validate().map_err(|e| schema(format!("norm batch: {e}")))?;
        }
        if let Some(t) = self.verify.tamper_dual {
            if !t.is_finite() {
                return Err(schema("verify.tamper_dual must be finite"));
            }
        }
        Ok(())
    }

    pub fn node_set(&self) -> Result<NodeSet> {
        let cell = PeriodicBox::new(self.nodes.cell.lo.clone(), self.nodes.cell.size.clone())?;
        let raw = match (&self.nodes.generator, &self.nodes.file) {
            (Some(g), _) => generate(g, &cell, self.seed)?,
            (None, Some(path)) => read_nodes_csv(BufReader::new(File::open(path)?), self.dim())?,
            (None, None) => return Err(schema("no node source")),
        };
        split(&raw, &cell)
    }

    /// Validation, then the dilation, `Λ`, `ψ` with its admissibility check,
    /// and the lattice parameter `b`.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let a = ExpansiveDilation::from_rows(&self.matrix)?;
        let nodes = self.node_set()?;
        let delta = match self.window.delta_q {
            Some(v) => v,
            None => PainlessConfig::default_delta(&a, &self.window.v)?,
        };
        let psi = build_h(&PainlessConfig::new(a.clone(), self.window.v.clone(), delta).with_nodes(&nodes))?;
        let grid = Grid::new(self.dim(), self.grid.t, self.grid.n)?;
        for j in self.j_range.0..=self.j_range.1 {
            psi.check_on_grid(&a, j, grid)?;
        }
        let b = lattice_parameter(&psi, self.dual.b_factor, Some(nodes.period()))?;
        let r_trunc = self.balayage.r_trunc.unwrap_or(12.0 * nodes.gap().max(1.0));
        let dual = DualOptions { b, r_trunc, r_dual: self.dual.r_dual, tol: self.balayage.tol };
        Ok(Prepared { a, nodes, psi, grid, b, dual })
    }
}

impl Prepared {
    /// The configured input signal, or a seeded random signal on the band of `sys`.
    pub fn signal(&self, cfg: &RunConfig, sys: &FrameSystem) -> Result<SampledSignal> {
        let Some(path) = &cfg.signal else { return Ok(sys.random_band_signal(cfg.seed)) };
        let r = BufReader::new(File::open(path)?);
        let s = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            SampledSignal::read_csv(self.grid, r)?
        } else {
            SampledSignal::read_binary(r)?
        };
        if s.grid != self.grid {
            return Err(Error::InvalidInput(format!("{} is not on the configured grid", path.display())));
        }
        Ok(s)
    }

    pub fn frame_system(&self, j_range: (i32, i32)) -> Result<FrameSystem> {
        FrameSystem::build(&self.psi, &self.a, &self.nodes, j_range, self.grid, self.dual.clone())
    }

    /// `ρ(Λ)`, `r`, their product and the margin to `1/4`.
    pub fn admissibility(&self) -> serde_json::Value {
        let gap = self.nodes.gap();
        let r = self.psi.support().radius;
        serde_json::json!({
            "gap": gap,
            "radius": r,
            "center": self.psi.support().center,
            "product": gap * r,
            "margin": 0.25 - gap * r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_and_prepares() {
        let cfg = RunConfig::reference();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        let p = cfg.prepare().unwrap();
        assert_eq!(p.b, 2.5);
        assert!((p.psi.support().radius - 1.1).abs() < 1e-12);
        assert!(p.nodes.gap() * 1.1 < 0.25);
    }

    #[test]
    fn schema_errors() {
        let mut v = serde_json::to_value(RunConfig::reference()).unwrap();
        v.as_object_mut().unwrap().remove("matrix");
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Parse(_))));
        let mut cfg = RunConfig::reference();
        cfg.compact.r_grid = vec![8.0, 4.0];
        assert!(matches!(cfg.validate(), Err(Error::Parse(_))));
        let mut cfg = RunConfig::reference();
        cfg.nodes.generator = Some(Generator::Lattice { spacing: 1.0 });
        let e = cfg.prepare().unwrap_err();
        assert!(e.is_rejection(), "{e}");
    }
}
