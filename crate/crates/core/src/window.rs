//! Band-limited windows given by closed-form frequency profiles: painless
//! windows `h = ψ̂`, Calderón duals `τ̂`, Littlewood-Paley analyzers `φ̂`.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aniso::{mat_vec, spectral_norm, ExpansiveDilation, Grid, Spectrum};
use crate::bump::smoothstep;
use crate::error::{Error, Result};
use crate::nodes::NodeSet;

/// Consecutive out-of-support scales before the automatic Calderón range stops.
const RANGE_PAD: usize = 6;
const RANGE_MAX_STEPS: usize = 400;

/// Frequency profile `ĝ: R^d -> C`.
pub trait Profile: Send + Sync + Debug {
    fn eval(&self, w: &[f64]) -> Complex64;
}

/// Axis box or ball in frequency space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    /// Symmetric box `(-s_1, s_1) x ... x (-s_d, s_d)`.
    pub fn symmetric_box(half: &[f64]) -> Self {
        Region::Box { lo: half.iter().map(|h| -h).collect(), hi: half.to_vec() }
    }

    pub fn centered_ball(d: usize, radius: f64) -> Self {
        Region::Ball { center: vec![0.0; d], radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Region::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::InvalidInput("box needs lo < hi on every axis".into()));
                }
            }
            Region::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput("ball radius must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Distance from the origin to the complement, 0 if the origin is not interior.
    fn interior_radius(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (-l).min(*h))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            Region::Ball { center, radius } => {
                (radius - center.iter().map(|c| c * c).sum::<f64>().sqrt()).max(0.0)
            }
        }
    }

    /// Smooth indicator equal to 1 on the closed region and 0 outside its
    /// `delta`-inflation (per axis for boxes).
    fn outer(&self, u: &[f64], delta: f64) -> f64 {
        match self {
            Region::Box { lo, hi } => {
                let mut v = 1.0;
                for i in 0..lo.len() {
                    v *= smoothstep((u[i] - (lo[i] - delta)) / delta)
                        * smoothstep(((hi[i] + delta) - u[i]) / delta);
                    if v == 0.0 {
                        break;
                    }
                }
                v
            }
            Region::Ball { center, radius } => {
                let r = dist(u, center);
                smoothstep((radius + delta - r) / delta)
            }
        }
    }

    /// Smooth indicator equal to 1 on the `delta`-shrunk region and 0 off the open region.
    fn inner(&self, u: &[f64], delta: f64) -> f64 {
        match self {
            Region::Box { lo, hi } => {
                let mut v = 1.0;
                for i in 0..lo.len() {
                    v *= smoothstep((u[i] - lo[i]) / delta) * smoothstep((hi[i] - u[i]) / delta);
                    if v == 0.0 {
                        break;
                    }
                }
                v
            }
            Region::Ball { center, radius } => smoothstep((radius - dist(u, center)) / delta),
        }
    }

    fn contains_closed(&self, u: &[f64]) -> bool {
        match self {
            Region::Box { lo, hi } => (0..lo.len()).all(|i| u[i] >= lo[i] - 1e-12 && u[i] <= hi[i] + 1e-12),
            Region::Ball { center, radius } => dist(u, center) <= radius + 1e-12,
        }
    }

    fn contains_open(&self, u: &[f64]) -> bool {
        match self {
            Region::Box { lo, hi } => (0..lo.len()).all(|i| u[i] > lo[i] && u[i] < hi[i]),
            Region::Ball { center, radius } => dist(u, center) < *radius,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of the region inflated by `delta`.
    fn bounds(&self, delta: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (
                lo.iter().map(|v| v - delta).collect(),
                hi.iter().map(|v| v + delta).collect(),
            ),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius - delta).collect(),
                center.iter().map(|c| c + radius + delta).collect(),
            ),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Reported support geometry of a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportInfo {
    /// Center `w₀` of the enclosing ball.
    pub center: Vec<f64>,
    /// Radius `r` of the enclosing ball.
    pub radius: f64,
    /// Per-axis bound: the support lies in `Π [-box_half_i, box_half_i]`.
    pub box_half: Vec<f64>,
    /// Radius of a ball around 0 on which the profile vanishes (0 if none).
    pub zero_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl WindowMeta {
    pub fn kind(kind: &str) -> Self {
        Self { kind: kind.into(), v: None, delta_q: None, b: None }
    }
}

/// A window carried by its frequency profile plus support metadata.
#[derive(Clone, Debug)]
pub struct SpectralWindow {
    profile: Arc<dyn Profile>,
    d: usize,
    support: SupportInfo,
    meta: WindowMeta,
}

impl SpectralWindow {
    pub fn new(profile: Arc<dyn Profile>, d: usize, support: SupportInfo, meta: WindowMeta) -> Self {
        Self { profile, d, support, meta }
    }

    #[inline]
    pub fn eval(&self, w: &[f64]) -> Complex64 {
        self.profile.eval(w)
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &SupportInfo {
        &self.support
    }

    pub fn zero_excluded(&self) -> bool {
        self.support.zero_gap > 0.0
    }

    pub fn meta(&self) -> &WindowMeta {
        &self.meta
    }

    /// Whether `w` may lie in the support (cheap ball test).
    #[inline]
    pub fn may_support(&self, w: &[f64]) -> bool {
        let r = dist(w, &self.support.center);
        r <= self.support.radius && norm(w) >= self.support.zero_gap
    }

    /// Spectrum of `D_{A^j} T_λ g` on the grid: `|det A|^{j/2} e^{-2πiλ·u} ĝ(u)`, `u = (A^t)^j w`.
    pub fn dilate_translate(
        &self,
        a: &ExpansiveDilation,
        j: i32,
        lambda: &[f64],
        grid: Grid,
    ) -> Result<Spectrum> {
        self.check_on_grid(a, j, grid)?;
        let at = a.transpose_power_ref(j)?;
        let gain = a.det_abs().powf(j as f64 / 2.0);
        Ok(Spectrum::from_fn(grid, |w| {
            let u = mat_vec(at, w);
            let phase: f64 = lambda.iter().zip(&u).map(|(l, x)| l * x).sum();
            if !self.may_support(&u) {
                return Complex64::new(0.0, 0.0);
            }
            self.eval(&u) * Complex64::from_polar(gain, -2.0 * PI * phase)
        }))
    }

    /// Aliasing error if the scale-`j` dilate has support beyond the grid's Nyquist box.
    pub fn check_on_grid(&self, a: &ExpansiveDilation, j: i32, grid: Grid) -> Result<()> {
        let m = a.transpose_power_ref(-j)?;
        let c = mat_vec(m, &self.support.center);
        let ny = grid.nyquist();
        for i in 0..self.d {
            let row: f64 = (0..self.d).map(|k| m[(i, k)].powi(2)).sum::<f64>().sqrt();
            let ext = c[i].abs() + self.support.radius * row;
            if ext >= ny {
                let mut f = vec![0.0; self.d];
                f[i] = ext;
                return Err(Error::Aliasing { scale: j, frequency: f });
            }
        }
        Ok(())
    }

    /// Profile samples on the grid frequencies as CSV `w[,w2],re,im`.
    pub fn write_profile_csv(&self, grid: Grid, mut w: impl Write) -> Result<()> {
        let head = if grid.d == 1 { "w,re,im" } else { "w1,w2,re,im" };
        writeln!(w, "{head}")?;
        for idx in 0..grid.len() {
            let f = grid.freq(idx);
            let v = self.eval(&f[..grid.d]);
            if grid.d == 1 {
                writeln!(w, "{:e},{:e},{:e}", f[0], v.re, v.im)?;
            } else {
                writeln!(w, "{:e},{:e},{:e},{:e}", f[0], f[1], v.re, v.im)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
struct PainlessProfile {
    at_inv: DMatrix<f64>,
    v: Region,
    delta_in: f64,
    delta_out: f64,
}

impl Profile for PainlessProfile {
    fn eval(&self, w: &[f64]) -> Complex64 {
        let u = mat_vec(&self.at_inv, w);
        let outer = self.v.outer(&u, self.delta_out);
        if outer == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(outer * (1.0 - self.v.inner(w, self.delta_in)), 0.0)
    }
}

/// Inputs of the painless construction.
#[derive(Clone, Debug)]
pub struct PainlessConfig {
    pub dilation: ExpansiveDilation,
    pub v: Region,
    /// Plateau/support margin `δ_Q`.
    pub delta_q: f64,
    /// Gap `ρ(Λ)` of the node set, when admissibility should be checked.
    pub gap: Option<f64>,
}

impl PainlessConfig {
    pub fn new(dilation: ExpansiveDilation, v: Region, delta_q: f64) -> Self {
        Self { dilation, v, delta_q, gap: None }
    }

    pub fn with_nodes(mut self, nodes: &NodeSet) -> Self {
        self.gap = Some(nodes.gap());
        self
    }

    /// `0.1 · diam(Q)` with `Q = A^t V \ V`.
    pub fn default_delta(dilation: &ExpansiveDilation, v: &Region) -> Result<f64> {
        let (lo, hi) = v.bounds(0.0);
        let corners = box_corners(&lo, &hi);
        let at = dilation.transpose_power_ref(1)?;
        let imgs: Vec<Vec<f64>> = corners.iter().map(|c| mat_vec(at, c)).collect();
        let mut diam: f64 = 0.0;
        for a in &imgs {
            for b in &imgs {
                diam = diam.max(dist(a, b));
            }
        }
        Ok(0.1 * diam)
    }
}

fn box_corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..1usize << d)
        .map(|m| (0..d).map(|i| if (m >> i) & 1 == 1 { hi[i] } else { lo[i] }).collect())
        .collect()
}

/// Admissibility summary `ρ(Λ) · r < 1/4`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Admissibility {
    pub gap: f64,
    pub radius: f64,
    pub product: f64,
    pub margin: f64,
}

impl Admissibility {
    pub fn new(gap: f64, radius: f64) -> Self {
        let product = gap * radius;
        Self { gap, radius, product, margin: 0.25 - product }
    }

    pub fn check(&self) -> Result<()> {
        if self.product >= 0.25 {
            return Err(Error::Admissibility { gap: self.gap, radius: self.radius, product: self.product });
        }
        Ok(())
    }
}

/// Painless window `h`: 1 on `Q̄ = closure(A^t V \ V)`, supported in the
/// `δ_Q`-neighbourhood of `Q`, vanishing near 0.
pub fn build_h(cfg: &PainlessConfig) -> Result<SpectralWindow> {
    let d = cfg.dilation.dim();
    if cfg.v.dim() != d {
        return Err(Error::InvalidInput("V and A have different dimensions".into()));
    }
    cfg.v.validate()?;
    if !(cfg.delta_q > 0.0 && cfg.delta_q.is_finite()) {
        return Err(Error::InvalidInput("delta_Q must be positive".into()));
    }
    if cfg.v.interior_radius() <= 0.0 {
        return Err(Error::InvalidInput("V must contain 0 in its interior".into()));
    }
    let sd = (d as f64).sqrt();
    let at = cfg.dilation.transpose_power_ref(1)?.clone();
    let at_inv = cfg.dilation.transpose_power_ref(-1)?.clone();
    let delta_in = match cfg.v {
        Region::Box { .. } => cfg.delta_q / sd,
        Region::Ball { .. } => cfg.delta_q,
    };
    let at_norm = spectral_norm(&at);
    let delta_out = match cfg.v {
        Region::Box { .. } => cfg.delta_q / (at_norm * sd),
        Region::Ball { .. } => cfg.delta_q / at_norm,
    };
    let zero_gap = match &cfg.v {
        Region::Box { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(l, h)| (-l - delta_in).min(h - delta_in))
            .fold(f64::INFINITY, f64::min),
        Region::Ball { center, radius } => radius - delta_in - norm(center),
    };
    if zero_gap <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "delta_Q = {} removes the zero gap of V",
            cfg.delta_q
        )));
    }
    // enclosing ball of A^t(V inflated)
    let (center, radius, box_half) = match &cfg.v {
        Region::Box { lo, hi } => {
            let lo_i: Vec<f64> = lo.iter().map(|v| v - delta_out).collect();
            let hi_i: Vec<f64> = hi.iter().map(|v| v + delta_out).collect();
            let mid: Vec<f64> = lo_i.iter().zip(&hi_i).map(|(a, b)| (a + b) / 2.0).collect();
            let c = mat_vec(&at, &mid);
            let verts: Vec<Vec<f64>> = box_corners(&lo_i, &hi_i).iter().map(|v| mat_vec(&at, v)).collect();
            let r = verts.iter().map(|v| dist(v, &c)).fold(0.0, f64::max);
            let bh = (0..d).map(|i| verts.iter().map(|v| v[i].abs()).fold(0.0, f64::max)).collect();
            (c, r, bh)
        }
        Region::Ball { center, radius } => {
            let c = mat_vec(&at, center);
            let r = at_norm * (radius + delta_out);
            let bh = (0..d)
                .map(|i| {
                    let row: f64 = (0..d).map(|k| at[(i, k)].powi(2)).sum::<f64>().sqrt();
                    c[i].abs() + row * (radius + delta_out)
                })
                .collect();
            (c, r, bh)
        }
    };
    let profile = PainlessProfile { at_inv, v: cfg.v.clone(), delta_in, delta_out };
    let window = SpectralWindow::new(
        Arc::new(profile),
        d,
        SupportInfo { center, radius, box_half, zero_gap },
        WindowMeta { kind: "painless".into(), v: Some(cfg.v.clone()), delta_q: Some(cfg.delta_q), b: None },
    );
    let floor = plateau_floor(&window, &cfg.v, &at)?;
    if floor < 0.5 {
        return Err(Error::Construction(format!("inf over Q of |h| is {floor} < 1/2")));
    }
    if let Some(g) = cfg.gap {
        Admissibility::new(g, radius).check()?;
    }
    Ok(window)
}

/// `min |h|` over a dense sample of `Q̄ = A^t V̄ \ V`.
fn plateau_floor(h: &SpectralWindow, v: &Region, at: &DMatrix<f64>) -> Result<f64> {
    let d = h.dim();
    let (lo, hi) = v.bounds(0.0);
    let imgs: Vec<Vec<f64>> = box_corners(&lo, &hi).iter().map(|c| mat_vec(at, c)).collect();
    let blo: Vec<f64> = (0..d).map(|i| imgs.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min)).collect();
    let bhi: Vec<f64> = (0..d).map(|i| imgs.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let at_inv = at.clone().try_inverse().ok_or_else(|| Error::Internal("singular A^t".into()))?;
    let n = if d == 1 { 4001 } else { 201 };
    let mut floor = f64::INFINITY;
    let mut count = 0usize;
    let coord = |i: usize, k: usize| blo[i] + (bhi[i] - blo[i]) * k as f64 / (n - 1) as f64;
    let mut visit = |w: &[f64]| {
        let u = mat_vec(&at_inv, w);
        if v.contains_closed(&u) && !v.contains_open(w) {
            floor = floor.min(h.eval(w).norm());
            count += 1;
        }
    };
    if d == 1 {
        for k in 0..n {
            visit(&[coord(0, k)]);
        }
    } else {
        for k in 0..n {
            for l in 0..n {
                visit(&[coord(0, k), coord(1, l)]);
            }
        }
    }
    if count == 0 {
        return Err(Error::Construction("Q = A^t V \\ V has no sample points".into()));
    }
    Ok(floor)
}

/// Walks `(A^t)^j w` up and down from `j = 0` until the orbit has left the
/// annulus `zero_gap <= |u| <= outer` for several consecutive scales.
fn auto_range(at: &DMatrix<f64>, at_inv: &DMatrix<f64>, w: &[f64], zero_gap: f64, outer: f64) -> (i32, i32) {
    let mut hi = 0;
    let mut v = w.to_vec();
    let mut miss = 0;
    for step in 1..=RANGE_MAX_STEPS {
        v = mat_vec(at, &v);
        if norm(&v) > outer {
            miss += 1;
            if miss >= RANGE_PAD {
                break;
            }
        } else {
            miss = 0;
            hi = step as i32;
        }
    }
    let mut lo = 0;
    let mut v = w.to_vec();
    let mut miss = 0;
    for step in 1..=RANGE_MAX_STEPS {
        v = mat_vec(at_inv, &v);
        if norm(&v) < zero_gap {
            miss += 1;
            if miss >= RANGE_PAD {
                break;
            }
        } else {
            miss = 0;
            lo = -(step as i32);
        }
    }
    (lo, hi)
}

/// `Σ_j |ψ̂((A^t)^j w)|²` over `j_range`, or over every scale that can
/// contribute when `j_range` is `None`.
pub fn calderon_sum(
    psi: &SpectralWindow,
    a: &ExpansiveDilation,
    w: &[f64],
    j_range: Option<(i32, i32)>,
) -> Result<f64> {
    if w.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("Calderon sum is undefined at w = 0".into()));
    }
    match j_range {
        Some((lo, hi)) => {
            let mut s = 0.0;
            for j in lo..=hi {
                let u = a.apply_transpose(j, w)?;
                s += psi.eval(&u).norm_sqr();
            }
            Ok(s)
        }
        None => {
            let at = a.transpose_power_ref(1)?;
            let at_inv = a.transpose_power_ref(-1)?;
            Ok(orbit_sum(psi.profile().as_ref(), at, at_inv, w, psi.support()))
        }
    }
}

/// Scales `j` with `ψ̂((A^t)^j w) ≠ 0`.
pub fn active_scales(psi: &SpectralWindow, a: &ExpansiveDilation, w: &[f64]) -> Result<Vec<i32>> {
    if w.iter().all(|v| *v == 0.0) {
        return Ok(Vec::new());
    }
    let sup = psi.support();
    let outer = norm(&sup.center) + sup.radius;
    let at = a.transpose_power_ref(1)?;
    let at_inv = a.transpose_power_ref(-1)?;
    let (lo, hi) = auto_range(at, at_inv, w, sup.zero_gap, outer);
    let mut out = Vec::new();
    for j in lo..=hi {
        let u = a.apply_transpose(j, w)?;
        if psi.eval(&u).norm_sqr() > 0.0 {
            out.push(j);
        }
    }
    Ok(out)
}

fn orbit_sum(
    psi: &dyn Profile,
    at: &DMatrix<f64>,
    at_inv: &DMatrix<f64>,
    w: &[f64],
    sup: &SupportInfo,
) -> f64 {
    let outer = norm(&sup.center) + sup.radius;
    let (lo, hi) = auto_range(at, at_inv, w, sup.zero_gap, outer);
    let mut s = psi.eval(w).norm_sqr();
    let mut v = w.to_vec();
    for _ in 1..=hi {
        v = mat_vec(at, &v);
        s += psi.eval(&v).norm_sqr();
    }
    let mut v = w.to_vec();
    for _ in lo..0 {
        v = mat_vec(at_inv, &v);
        s += psi.eval(&v).norm_sqr();
    }
    s
}

#[derive(Debug)]
struct CalderonDualProfile {
    psi: Arc<dyn Profile>,
    at: DMatrix<f64>,
    at_inv: DMatrix<f64>,
    bd: f64,
    support: SupportInfo,
}

impl Profile for CalderonDualProfile {
    fn eval(&self, w: &[f64]) -> Complex64 {
        let p = self.psi.eval(w);
        if p.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s = orbit_sum(self.psi.as_ref(), &self.at, &self.at_inv, w, &self.support);
        p * (self.bd / s)
    }
}

/// `τ̂ = b^d ψ̂ / Σ_j |ψ̂((A^t)^j ·)|²`, so that `Σ_j ψ̂ conj(τ̂) = b^d` off the origin.
pub fn calderon_dual(psi: &SpectralWindow, a: &ExpansiveDilation, b: f64) -> Result<SpectralWindow> {
    let d = psi.dim();
    if a.dim() != d {
        return Err(Error::InvalidInput("window and dilation dimensions differ".into()));
    }
    if !(b > 0.0) || psi.support().box_half.iter().any(|h| *h > b / 2.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "support of the window does not fit in [-b/2, b/2]^d with b = {b}"
        )));
    }
    if !psi.zero_excluded() {
        return Err(Error::InvalidInput("the window must vanish near 0".into()));
    }
    let at = a.transpose_power_ref(1)?.clone();
    let at_inv = a.transpose_power_ref(-1)?.clone();
    let min_sum = min_calderon_on_support(psi, &at, &at_inv);
    if !(min_sum >= 1e-8) {
        return Err(Error::IllPosedDual { min_sum });
    }
    let profile = CalderonDualProfile {
        psi: psi.profile().clone(),
        at,
        at_inv,
        bd: b.powi(d as i32),
        support: psi.support().clone(),
    };
    let mut meta = psi.meta().clone();
    meta.kind = "calderon_dual".into();
    meta.b = Some(b);
    Ok(SpectralWindow::new(Arc::new(profile), d, psi.support().clone(), meta))
}

fn min_calderon_on_support(psi: &SpectralWindow, at: &DMatrix<f64>, at_inv: &DMatrix<f64>) -> f64 {
    let d = psi.dim();
    let bh = &psi.support().box_half;
    let n = if d == 1 { 4001 } else { 161 };
    let coord = |i: usize, k: usize| -bh[i] + 2.0 * bh[i] * k as f64 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    let mut visit = |w: &[f64]| {
        if psi.eval(w).norm_sqr() > 0.0 {
            best = best.min(orbit_sum(psi.profile().as_ref(), at, at_inv, w, psi.support()));
        }
    };
    if d == 1 {
        for k in 0..n {
            visit(&[coord(0, k)]);
        }
    } else {
        for k in 0..n {
            for l in 0..n {
                visit(&[coord(0, k), coord(1, l)]);
            }
        }
    }
    best
}

/// Littlewood-Paley analyzer with `supp φ̂ ⊂ [-1/2, 1/2]^d \ {0}` and
/// `sup_j |φ̂((A^t)^j w)| >= 1` for `w ≠ 0`.
pub fn build_lp_analyzer(a: &ExpansiveDilation) -> Result<SpectralWindow> {
    let d = a.dim();
    let at_norm = a.transpose_power_norm(1)?;
    let radius = 1.0 / (4.0 * at_norm);
    let v = Region::centered_ball(d, radius);
    let cfg = PainlessConfig::new(a.clone(), v, radius / 2.0);
    let mut phi = build_h(&cfg).map_err(|e| {
        Error::Construction(format!("no admissible analyzer for this matrix ({e}); rescale A"))
    })?;
    if phi.support().box_half.iter().any(|h| *h > 0.5) {
        return Err(Error::Construction(
            "analyzer support leaves [-1/2, 1/2]^d; rescale A".into(),
        ));
    }
    phi.meta.kind = "lp_analyzer".into();
    Ok(phi)
}

/// `ĝ(w) · gain · Σ_i c_i e^{-2πi s_i·w}`: finite combinations of translates.
#[derive(Debug)]
pub struct ModulatedProfile {
    pub base: Arc<dyn Profile>,
    pub gain: f64,
    pub shifts: Vec<Vec<f64>>,
    pub coeffs: Vec<Complex64>,
}

impl ModulatedProfile {
    /// `gain · Σ_i c_i e^{-2πi s_i·w}` without the base factor.
    pub fn multiplier(&self, w: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in self.shifts.iter().zip(&self.coeffs) {
            let ph: f64 = s.iter().zip(w).map(|(a, b)| a * b).sum();
            acc += c * Complex64::from_polar(1.0, -2.0 * PI * ph);
        }
        acc * self.gain
    }
}

impl Profile for ModulatedProfile {
    fn eval(&self, w: &[f64]) -> Complex64 {
        let g = self.base.eval(w);
        if g.norm_sqr() == 0.0 {
            return g;
        }
        g * self.multiplier(w)
    }
}

/// Smallest `b >= 2 · factor · max_i box_half_i` such that `b · P_i` is an
/// integer for every period `P_i` (so that `k/b` and `Λ` share periods).
pub fn lattice_parameter(psi: &SpectralWindow, factor: f64, period: Option<&[f64]>) -> Result<f64> {
    let ext = psi.support().box_half.iter().cloned().fold(0.0, f64::max);
    let b_min = 2.0 * ext * factor;
    if !(b_min > 0.0 && b_min.is_finite()) {
        return Err(Error::InvalidInput("window support is degenerate".into()));
    }
    let Some(p) = period else { return Ok(b_min) };
    let start = (b_min * p[0] - 1e-9).ceil() as i64;
    for n in start..start + 100_000 {
        let b = n as f64 / p[0];
        if p.iter().all(|pi| {
            let v = b * pi;
            (v - v.round()).abs() < 1e-9
        }) {
            return Ok(b);
        }
    }
    Err(Error::InvalidInput("node periods admit no common lattice parameter".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> (ExpansiveDilation, SpectralWindow) {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let cfg = PainlessConfig::new(a.clone(), Region::symmetric_box(&[0.5]), 0.1);
        (a, build_h(&cfg).unwrap())
    }

    #[test]
    fn painless_geometry_1d() {
        let (_, h) = reference();
        let s = h.support();
        assert!((s.radius - 1.1).abs() < 1e-12);
        assert!(s.center[0].abs() < 1e-15);
        assert!((s.zero_gap - 0.4).abs() < 1e-12);
        assert_eq!(h.eval(&[0.75]).re, 1.0);
        assert_eq!(h.eval(&[0.0]).re, 0.0);
        for w in [0.5, 1.0, -0.5, -1.0, 0.6, -0.99] {
            assert_eq!(h.eval(&[w]).re, 1.0, "w={w}");
        }
        for w in [0.4, 1.1, 1.3, -0.35, 0.2] {
            assert_eq!(h.eval(&[w]).re, 0.0, "w={w}");
        }
        assert!(h.eval(&[0.45]).re > 0.0 && h.eval(&[0.45]).re < 1.0);
    }

    #[test]
    fn admissibility_rejection() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let mut cfg = PainlessConfig::new(a, Region::symmetric_box(&[0.5]), 0.1);
        cfg.gap = Some(0.25);
        match build_h(&cfg) {
            Err(Error::Admissibility { product, .. }) => assert!((product - 0.275).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        cfg.gap = Some(0.2);
        assert!(build_h(&cfg).is_ok());
    }

    #[test]
    fn v_without_origin_rejected() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let cfg = PainlessConfig::new(a, Region::Box { lo: vec![0.1], hi: vec![0.5] }, 0.05);
        assert!(matches!(build_h(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn calderon_values() {
        let (a, h) = reference();
        let s = calderon_sum(&h, &a, &[0.75], None).unwrap();
        let direct = calderon_sum(&h, &a, &[0.75], Some((-8, 8))).unwrap();
        assert!((1.0..=2.0).contains(&s));
        assert!((s - direct).abs() < 1e-15);
        for w in [0.13, 0.47, 2.9, -0.333] {
            let s1 = calderon_sum(&h, &a, &[w], None).unwrap();
            let s2 = calderon_sum(&h, &a, &[2.0 * w], None).unwrap();
            assert!((s1 - s2).abs() < 1e-12);
        }
        assert!(calderon_sum(&h, &a, &[0.0], None).is_err());
    }

    #[test]
    fn dual_identity_2d() {
        let a = ExpansiveDilation::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let cfg = PainlessConfig::new(a.clone(), Region::centered_ball(2, 0.5), 0.08);
        let h = build_h(&cfg).unwrap();
        let b = lattice_parameter(&h, 1.05, None).unwrap();
        let tau = calderon_dual(&h, &a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let w = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let mut s = Complex64::new(0.0, 0.0);
            for j in -12..=12 {
                let u = a.apply_transpose(j, &w).unwrap();
                s += h.eval(&u) * tau.eval(&u).conj();
            }
            assert!((s.re - b * b).abs() < 1e-10 * b * b && s.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dual_unit_plateau() {
        let (a, h) = reference();
        let tau = calderon_dual(&h, &a, 2.5).unwrap();
        assert!((tau.eval(&[0.75]).re - 2.5).abs() < 1e-15);
        assert_eq!(tau.eval(&[1.2]).re, 0.0);
        assert!(calderon_dual(&h, &a, 2.0).is_err());
    }

    #[test]
    fn lp_analyzer_1d() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let phi = build_lp_analyzer(&a).unwrap();
        assert_eq!(phi.eval(&[0.0]).re, 0.0);
        for w in [0.125, 0.2, 0.25, -0.125, -0.25] {
            assert_eq!(phi.eval(&[w]).re, 1.0);
        }
        assert_eq!(phi.eval(&[0.5]).re, 0.0);
        assert!(phi.support().box_half[0] <= 0.5);
    }

    #[test]
    fn lattice_parameter_snaps() {
        let (_, h) = reference();
        let b = lattice_parameter(&h, 1.05, Some(&[4.0])).unwrap();
        assert!((b - 2.5).abs() < 1e-15);
        let free = lattice_parameter(&h, 1.05, None).unwrap();
        assert!((free - 2.31).abs() < 1e-12);
    }

    #[test]
    fn translate_spectrum_phase() {
        let (a, h) = reference();
        let grid = Grid::new(1, 32.0, 512).unwrap();
        let s = h.dilate_translate(&a, 1, &[0.3], grid).unwrap();
        for idx in 0..grid.len() {
            let w = grid.freq(idx)[0];
            let want = h.eval(&[2.0 * w]) * Complex64::from_polar(2f64.sqrt(), -2.0 * PI * 0.3 * 2.0 * w);
            assert!((s.values[idx] - want).norm() < 1e-14);
        }
        assert!(matches!(h.dilate_translate(&a, -4, &[0.0], grid), Err(Error::Aliasing { .. })));
    }
}
