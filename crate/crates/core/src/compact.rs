//! Compactly supported windows `φ_R = ψ η_R - Σ c_β τ_β` with vanishing
//! moments, the molecule checker, and Neumann-series reconstruction with the
//! perturbed system `{D_{A^j} T_λ φ_R}`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aniso::{mat_vec, Grid, SampledSignal, Spectrum};
use crate::balayage::{ball_quadrature, Ball};
use crate::bump::{smoothstep, unit_bump};
use crate::error::{Error, Result};
use crate::frame::{CoefficientGrid, FrameSystem};
use crate::window::SpectralWindow;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Multi-indices `β ∈ ℕ^d` with `|β| <= n`, graded then lexicographic.
pub fn multi_indices(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=n {
        if d == 1 {
            out.push(vec![total]);
        } else {
            for a in (0..=total).rev() {
                out.push(vec![a, total - a]);
            }
        }
    }
    out
}

fn monomial(x: &[f64], beta: &[usize]) -> f64 {
    x.iter().zip(beta).map(|(v, b)| v.powi(*b as i32)).product()
}

/// Biorthogonal correctors `τ_β = Σ_γ m_{βγ} x^γ θ` with `θ = exp(-1/(1-|x|²))`.
#[derive(Clone, Debug)]
pub struct MomentCorrectorBasis {
    pub n: usize,
    pub d: usize,
    pub indices: Vec<Vec<usize>>,
    /// `G_{γγ'} = ∫ x^{γ+γ'} θ`.
    pub gram: DMatrix<f64>,
    /// `G^{-1}`.
    pub coeffs: DMatrix<f64>,
    pub condition: f64,
    /// `max |∫ x^γ τ_β - δ_{γβ}|` under an independent trapezoid rule.
    pub biorthogonality_error: f64,
}

pub const MAX_MOMENT_ORDER: usize = 8;

pub fn build_correctors(n: usize, d: usize) -> Result<MomentCorrectorBasis> {
    if n > MAX_MOMENT_ORDER {
        return Err(Error::InvalidInput(format!("moment order {n} exceeds {MAX_MOMENT_ORDER}")));
    }
    if d != 1 && d != 2 {
        return Err(Error::InvalidInput(format!("dimension {d} unsupported")));
    }
    let indices = multi_indices(d, n);
    let q = ball_quadrature(&Ball { center: vec![0.0; d], radius: 1.0 }, if d == 1 { 400 } else { 200 })?;
    let k = indices.len();
    let theta: Vec<f64> = q.points.iter().map(|x| unit_bump(x)).collect();
    let gram = DMatrix::from_fn(k, k, |a, b| {
        q.points
            .iter()
            .zip(&q.weights)
            .zip(&theta)
            .map(|((x, w), t)| w * t * monomial(x, &indices[a]) * monomial(x, &indices[b]))
            .sum()
    });
    let sv = gram.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if !(condition <= 1e12) {
        return Err(Error::IllConditioned { cond: condition });
    }
    let coeffs = gram
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
    let mut basis = MomentCorrectorBasis { n, d, indices, gram, coeffs, condition, biorthogonality_error: 0.0 };
    basis.biorthogonality_error = basis.check_biorthogonality(if d == 1 { 4000 } else { 400 });
    Ok(basis)
}

impl MomentCorrectorBasis {
    /// `τ_β(x)` for the `b`-th multi-index.
    pub fn eval(&self, b: usize, x: &[f64]) -> f64 {
        let t = unit_bump(x);
        if t == 0.0 {
            return 0.0;
        }
        let p: f64 = self.indices.iter().enumerate().map(|(g, gamma)| self.coeffs[(b, g)] * monomial(x, gamma)).sum();
        p * t
    }

    fn check_biorthogonality(&self, n: usize) -> f64 {
        let h = 2.0 / n as f64;
        let pts: Vec<Vec<f64>> = if self.d == 1 {
            (0..=n).map(|i| vec![-1.0 + i as f64 * h]).collect()
        } else {
            (0..=n)
                .flat_map(|i| (0..=n).map(move |l| vec![-1.0 + i as f64 * h, -1.0 + l as f64 * h]))
                .collect()
        };
        let cell = h.powi(self.d as i32);
        let k = self.indices.len();
        let mut worst: f64 = 0.0;
        for b in 0..k {
            let tau: Vec<f64> = pts.iter().map(|x| self.eval(b, x)).collect();
            for (g, gamma) in self.indices.iter().enumerate() {
                let m: f64 = pts.iter().zip(&tau).map(|(x, t)| monomial(x, gamma) * t).sum::<f64>() * cell;
                let want = if g == b { 1.0 } else { 0.0 };
                worst = worst.max((m - want).abs());
            }
        }
        worst
    }
}

/// Cutoff `η_R`: 1 on `B_R`, C^∞, with `R`-independent derivative bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `1 - s((|x| - R)/R)`, supported in `B̄_{2R}`.
    #[default]
    Dilated,
    /// `1 - s(|x| - R)`, supported in `B̄_{R+1}`.
    Translated,
}

impl Cutoff {
    pub fn eval(self, r: f64, x: &[f64]) -> f64 {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            Cutoff::Dilated => 1.0 - smoothstep((n - r) / r),
            Cutoff::Translated => 1.0 - smoothstep(n - r),
        }
    }

    pub fn support_radius(self, r: f64) -> f64 {
        match self {
            Cutoff::Dilated => 2.0 * r,
            Cutoff::Translated => r + 1.0,
        }
    }
}

/// `ψ` on a spatial grid from its spectrum (inverse FFT).
pub fn sample_window(psi: &SpectralWindow, grid: Grid) -> Result<SampledSignal> {
    if psi.dim() != grid.d {
        return Err(Error::InvalidInput("window and grid dimensions differ".into()));
    }
    if psi.support().box_half.iter().any(|h| *h >= grid.nyquist()) {
        return Err(Error::Aliasing { scale: 0, frequency: psi.support().box_half.clone() });
    }
    Ok(Spectrum::from_fn(grid, |w| psi.eval(w)).to_signal())
}

#[derive(Clone, Debug)]
pub struct CompactWindow {
    pub r: f64,
    pub cutoff: Cutoff,
    pub n_moments: usize,
    pub support_radius: f64,
    /// Samples of `φ_R` on the sampling grid.
    pub phi: SampledSignal,
    /// `c_β^R = ∫ x^β ψ η_R`.
    pub c: Vec<Complex64>,
    /// `|∫ x^β φ_R|` per multi-index.
    pub moment_residuals: Vec<f64>,
    /// Measured small-constant `ε` on the test region (set by [`choose_r`]).
    pub eps_achieved: Option<f64>,
}

fn riemann_moment(s: &SampledSignal, beta: &[usize]) -> Complex64 {
    let cell = s.grid.dx().powi(s.grid.d as i32);
    s.values.iter().enumerate().map(|(i, v)| v * monomial(&s.grid.point(i)[..s.grid.d], beta)).sum::<Complex64>()
        * cell
}

/// `φ_R = ψ η_R - Σ_β c_β^R τ_β` with moments by grid quadrature.
pub fn truncate_correct(
    psi: &SampledSignal,
    r: f64,
    basis: &MomentCorrectorBasis,
    cutoff: Cutoff,
) -> Result<CompactWindow> {
    if r < 1.0 {
        return Err(Error::InvalidInput(format!("truncation radius {r} must be at least 1")));
    }
    let grid = psi.grid;
    let support_radius = cutoff.support_radius(r).max(1.0);
    if support_radius + 2.0 * grid.dx() >= grid.box_size / 2.0 {
        return Err(Error::Domain(format!(
            "sampling box {} does not cover the support radius {support_radius}",
            grid.box_size
        )));
    }
    let d = grid.d;
    let mut trunc = psi.clone();
    trunc.values.par_iter_mut().enumerate().for_each(|(i, v)| {
        let x = grid.point(i);
        *v *= cutoff.eval(r, &x[..d]);
    });
    let c: Vec<Complex64> = basis.indices.iter().map(|b| riemann_moment(&trunc, b)).collect();
    let mut phi = trunc;
    phi.values.par_iter_mut().enumerate().for_each(|(i, v)| {
        let x = grid.point(i);
        if x[..d].iter().map(|t| t * t).sum::<f64>() < 1.0 {
            for (b, cb) in c.iter().enumerate() {
                *v -= cb * basis.eval(b, &x[..d]);
            }
        }
    });
    let moment_residuals = basis.indices.iter().map(|b| riemann_moment(&phi, b).norm()).collect();
    Ok(CompactWindow { r, cutoff, n_moments: basis.n, support_radius, phi, c, moment_residuals, eps_achieved: None })
}

impl CompactWindow {
    /// `φ̂_R(w)` by the trapezoid rule over the nonzero samples.
    pub fn fourier(&self, w: &[f64]) -> Complex64 {
        let g = self.phi.grid;
        let cell = g.dx().powi(g.d as i32);
        let mut acc = ZERO;
        for (i, v) in self.phi.values.iter().enumerate() {
            if *v == ZERO {
                continue;
            }
            let x = g.point(i);
            let t: f64 = x[..g.d].iter().zip(w).map(|(a, b)| a * b).sum();
            acc += v * Complex64::from_polar(1.0, -2.0 * PI * t);
        }
        acc * cell
    }

    /// Largest `|x|` with a nonzero sample outside the corrector ball `B_1`.
    pub fn sampled_extent(&self) -> f64 {
        let g = self.phi.grid;
        self.phi
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(|(i, _)| {
                let x = g.point(i);
                x[..g.d].iter().map(|t| t * t).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Whether every sample outside `B̄_{support_radius} ∪ B̄_1` is exactly zero.
    pub fn support_exact(&self) -> bool {
        let g = self.phi.grid;
        let rad = self.support_radius.max(1.0);
        self.phi.values.iter().enumerate().all(|(i, v)| {
            let x = g.point(i);
            let n = x[..g.d].iter().map(|t| t * t).sum::<f64>().sqrt();
            n <= rad || *v == ZERO
        })
    }

    pub fn max_moment_residual(&self) -> f64 {
        self.moment_residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// CSV `x[,y],re,im` of the samples.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        self.phi.write_csv(w)
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "R": self.r,
            "N": self.n_moments,
            "cutoff": self.cutoff,
            "support_radius": self.support_radius,
            "eps_achieved": self.eps_achieved,
            "moment_residuals": self.moment_residuals,
        })
    }
}

/// Centered finite-difference derivatives `∂^β` for `|β| <= m` (periodic wrap).
pub fn fd_derivatives(s: &SampledSignal, m: usize, h_mult: usize) -> Vec<(Vec<usize>, Vec<Complex64>)> {
    let g = s.grid;
    multi_indices(g.d, m)
        .into_iter()
        .map(|beta| {
            let mut cur = s.values.clone();
            for (axis, &order) in beta.iter().enumerate() {
                for _ in 0..order {
                    cur = diff_axis(&cur, g, axis, h_mult);
                }
            }
            (beta, cur)
        })
        .collect()
}

fn diff_axis(v: &[Complex64], g: Grid, axis: usize, h_mult: usize) -> Vec<Complex64> {
    let h = g.dx() * h_mult as f64;
    (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut ii = g.unflatten(i);
            let c = ii[axis];
            ii[axis] = (c + h_mult) % g.n;
            let p = v[g.flatten(&ii)];
            ii[axis] = (c + g.n - h_mult) % g.n;
            let q = v[g.flatten(&ii)];
            (p - q) / (2.0 * h)
        })
        .collect()
}

/// Measured constants of `|∂^β(ψ - φ_R)(x)| <= ε (1+|x|)^{-L}` on `|x| <= radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallConstants {
    pub r: f64,
    /// `max_β sup |∂^β(ψ - φ_R)| (1+|x|)^L`.
    pub eps: f64,
    /// `max_β ‖∂^β(ψ - φ_R)‖_∞`.
    pub sup_norm: f64,
    /// `max_β sup |∂^β(ψ - φ_R)| (1+|x|)^{L+1}`.
    pub k_poly: f64,
    /// Step-halving estimate of the finite-difference error in `eps`.
    pub fd_error: f64,
}

pub fn small_constants(psi: &SampledSignal, w: &CompactWindow, l: f64, m: usize, radius: f64) -> SmallConstants {
    let diff = psi.sub(&w.phi);
    let measure = |h_mult: usize| {
        let g = diff.grid;
        let mut eps: f64 = 0.0;
        let mut sup: f64 = 0.0;
        let mut kp: f64 = 0.0;
        for (_, vals) in fd_derivatives(&diff, m, h_mult) {
            for (i, v) in vals.iter().enumerate() {
                let x = g.point(i);
                let n = x[..g.d].iter().map(|t| t * t).sum::<f64>().sqrt();
                if n > radius {
                    continue;
                }
                let a = v.norm();
                sup = sup.max(a);
                eps = eps.max(a * (1.0 + n).powf(l));
                kp = kp.max(a * (1.0 + n).powf(l + 1.0));
            }
        }
        (eps, sup, kp)
    };
    let (eps, sup_norm, k_poly) = measure(1);
    let (eps2, _, _) = measure(2);
    SmallConstants { r: w.r, eps, sup_norm, k_poly, fd_error: (eps2 - eps).abs() / 3.0 }
}

/// Target `ε` for [`choose_r`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsRule {
    Absolute { value: f64 },
    /// `factor · Â / ‖S_Ψ̃‖`.
    FrameRelative { factor: f64 },
    /// `factor ·` the constant measured at the largest radius.
    Measured { factor: f64 },
}

#[derive(Clone, Debug)]
pub struct ChooseReport {
    pub window: CompactWindow,
    pub eps_target: f64,
    pub rows: Vec<SmallConstants>,
    /// `K = max_R k_poly`, the radius-independent constant.
    pub k_const: f64,
    /// `‖∂^β(ψ - φ_R)‖_∞^{1/(L+1)} K^{L/(L+1)}` per radius.
    pub sufficient: Vec<f64>,
}

/// The first `R` in `r_grid` meeting `ε`.
#[allow(clippy::too_many_arguments)]
pub fn choose_r(
    psi: &SampledSignal,
    eps: f64,
    l: f64,
    m: usize,
    basis: &MomentCorrectorBasis,
    r_grid: &[f64],
    cutoff: Cutoff,
    test_radius: f64,
) -> Result<ChooseReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("R grid must be nonempty and increasing".into()));
    }
    let windows: Vec<CompactWindow> =
        r_grid.iter().map(|&r| truncate_correct(psi, r, basis, cutoff)).collect::<Result<_>>()?;
    let rows: Vec<SmallConstants> = windows.iter().map(|w| small_constants(psi, w, l, m, test_radius)).collect();
    let k_const = rows.iter().map(|r| r.k_poly).fold(0.0, f64::max);
    let sufficient =
        rows.iter().map(|r| r.sup_norm.powf(1.0 / (l + 1.0)) * k_const.powf(l / (l + 1.0))).collect();
    match rows.iter().position(|r| r.eps <= eps) {
        Some(i) => {
            let mut window = windows[i].clone();
            window.eps_achieved = Some(rows[i].eps);
            Ok(ChooseReport { window, eps_target: eps, rows, k_const, sufficient })
        }
        None => {
            let best = rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).expect("nonempty");
            Err(Error::Exhausted { eps, best_r: best.r, best_eps: best.eps })
        }
    }
}

/// One family member normalised back to scale 0, `D_{A^{-j}} g_{j,λ}`.
#[derive(Clone, Debug)]
pub struct Molecule {
    pub j: i32,
    pub lambda: Vec<f64>,
    pub grid: Grid,
    /// `∂^β` samples for `|β| <= M`.
    pub derivs: Vec<(Vec<usize>, Vec<Complex64>)>,
    /// `∫ x^β g` for `|β| <= N`.
    pub moments: Vec<(Vec<usize>, Complex64)>,
    /// `∫ |x^β g|` on the test grid, the size a non-cancelling moment would have.
    pub moment_scales: Vec<f64>,
}

fn absolute_moments(grid: Grid, g: &[Complex64], n: usize) -> Vec<f64> {
    let cell = grid.dx().powi(grid.d as i32);
    multi_indices(grid.d, n)
        .iter()
        .map(|beta| {
            g.iter()
                .enumerate()
                .map(|(i, v)| monomial(&grid.point(i)[..grid.d], beta).abs() * v.norm())
                .sum::<f64>()
                * cell
        })
        .collect()
}

/// `∂^β ĝ(0)` by central differences with step `η`, then `(-2πi)^{-|β|}`.
fn spectral_moments(ghat: &dyn Fn(&[f64]) -> Complex64, d: usize, n: usize) -> Vec<(Vec<usize>, Complex64)> {
    const ETA: f64 = 1e-3;
    let stencil = |order: usize| -> Vec<(f64, f64)> {
        // Δ^order with offsets (k - order/2) η
        (0..=order)
            .map(|k| {
                let sign = if (order - k) % 2 == 0 { 1.0 } else { -1.0 };
                (sign * binom(order, k), (k as f64 - order as f64 / 2.0) * ETA)
            })
            .collect()
    };
    multi_indices(d, n)
        .into_iter()
        .map(|beta| {
            let total: usize = beta.iter().sum();
            let s0 = stencil(beta[0]);
            let s1 = if d == 2 { stencil(beta[1]) } else { vec![(1.0, 0.0)] };
            let mut acc = ZERO;
            for (c0, o0) in &s0 {
                for (c1, o1) in &s1 {
                    let w: Vec<f64> = if d == 1 { vec![*o0] } else { vec![*o0, *o1] };
                    acc += ghat(&w) * (c0 * c1);
                }
            }
            let deriv = acc / ETA.powi(total as i32);
            let factor = Complex64::new(0.0, -2.0 * PI).powi(total as i32);
            (beta, deriv / factor)
        })
        .collect()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Member given by its spectrum: `T_λ g` sampled with exact spectral derivatives.
pub fn spectral_molecule(
    ghat: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    j: i32,
    lambda: &[f64],
    grid: Grid,
    m: usize,
    n: usize,
) -> Molecule {
    let d = grid.d;
    let derivs: Vec<(Vec<usize>, Vec<Complex64>)> = multi_indices(d, m)
        .into_iter()
        .map(|beta| {
            let s = Spectrum::from_fn(grid, |w| {
                let t: f64 = lambda.iter().zip(w).map(|(a, b)| a * b).sum();
                let mut f = ghat(w) * Complex64::from_polar(1.0, -2.0 * PI * t);
                for (wi, bi) in w.iter().zip(&beta) {
                    f *= Complex64::new(0.0, 2.0 * PI * wi).powi(*bi as i32);
                }
                f
            });
            (beta, s.to_signal().values)
        })
        .collect();
    let moments = spectral_moments(&|w| ghat(w), d, n);
    let moment_scales = absolute_moments(grid, &derivs[0].1, n);
    Molecule { j, lambda: lambda.to_vec(), grid, derivs, moments, moment_scales }
}

/// Member given by samples, finite-difference derivatives and grid moments.
pub fn sampled_molecule(s: &SampledSignal, j: i32, lambda: &[f64], m: usize, n: usize) -> Molecule {
    let derivs = fd_derivatives(s, m, 1);
    let moments = multi_indices(s.grid.d, n).into_iter().map(|b| {
        let v = riemann_moment(s, &b);
        (b, v)
    });
    let moment_scales = absolute_moments(s.grid, &s.values, n);
    Molecule { j, lambda: lambda.to_vec(), grid: s.grid, derivs, moments: moments.collect(), moment_scales }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeViolation {
    pub j: i32,
    pub lambda: Vec<f64>,
    pub beta: Vec<usize>,
    pub moment: f64,
    pub allowed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeReport {
    /// Smallest `C` meeting both the decay and moment conditions.
    pub constant: f64,
    pub decay_constant: f64,
    pub moment_max: f64,
    pub members: usize,
    pub violation: Option<MoleculeViolation>,
}

/// Relative size of admissible moments: `|∫ x^β g| <= C · MOMENT_TOL`.
pub const MOMENT_TOL: f64 = 1e-8;

/// Smallest `C` with `|∂^β g(x)| <= C (1+|x-λ|)^{-L}` on the test grid and
/// `|∫ x^β g| <= C · 1e-8`. A moment that fails to cancel, `|∫ x^β g| >
/// 1e-8 ∫ |x^β g|`, is reported as a violation.
pub fn molecule_check(family: &[Molecule], l: f64) -> MoleculeReport {
    let decay: Vec<f64> = family
        .par_iter()
        .map(|mol| {
            let g = mol.grid;
            let mut c: f64 = 0.0;
            for (_, vals) in &mol.derivs {
                for (i, v) in vals.iter().enumerate() {
                    let x = g.point(i);
                    let r = x[..g.d].iter().zip(&mol.lambda).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    c = c.max(v.norm() * (1.0 + r).powf(l));
                }
            }
            c
        })
        .collect();
    let decay_constant = decay.iter().cloned().fold(0.0, f64::max);
    let mut moment_max: f64 = 0.0;
    let mut violation = None;
    for mol in family {
        for ((beta, m), scale) in mol.moments.iter().zip(&mol.moment_scales) {
            moment_max = moment_max.max(m.norm());
            if violation.is_none() && m.norm() > MOMENT_TOL * scale {
                violation = Some(MoleculeViolation {
                    j: mol.j,
                    lambda: mol.lambda.clone(),
                    beta: beta.clone(),
                    moment: m.norm(),
                    allowed: MOMENT_TOL * scale,
                });
            }
        }
    }
    MoleculeReport {
        constant: decay_constant.max(moment_max / MOMENT_TOL),
        decay_constant,
        moment_max,
        members: family.len(),
        violation,
    }
}

/// Per-scale samples `|det A|^{j/2} φ̂_R((A^t)^j w)` on the band.
#[derive(Clone, Debug)]
pub struct PerturbedAnalysis {
    pub scales: Vec<(Vec<usize>, Vec<f64>, Vec<Complex64>)>,
}

impl PerturbedAnalysis {
    pub fn new(sys: &FrameSystem, window: &CompactWindow) -> Result<Self> {
        let d = sys.grid.d;
        let band: Vec<usize> = (0..sys.grid.len()).filter(|i| sys.band[*i]).collect();
        let mut scales = Vec::new();
        for s in &sys.scales {
            let at = sys.a.transpose_power_ref(s.j)?;
            let gain = sys.a.det_abs().powf(s.j as f64 / 2.0);
            let us: Vec<Vec<f64>> = band.iter().map(|&i| mat_vec(at, &sys.grid.freq(i)[..d])).collect();
            let vals: Vec<Complex64> = us.par_iter().map(|u| window.fourier(u) * gain).collect();
            scales.push((band.clone(), us.into_iter().flatten().collect(), vals));
        }
        Ok(Self { scales })
    }

    /// The unperturbed system, `φ_R` replaced by `ψ`.
    pub fn exact(sys: &FrameSystem) -> Self {
        let scales = sys.scales.iter().map(|s| (s.idx.clone(), s.u.clone(), s.psi.clone())).collect();
        Self { scales }
    }

    /// `⟨f, D_{A^j} T_λ φ_R⟩` in the layout of `sys`.
    pub fn analyze(&self, sys: &FrameSystem, fh: &Spectrum) -> Result<CoefficientGrid> {
        let d = sys.grid.d;
        let scale = 1.0 / sys.grid.box_size.powi(d as i32);
        let mut out = sys.empty_coefficients();
        for ((s, (idx, u, vals)), row) in sys.scales.iter().zip(&self.scales).zip(out.values.iter_mut()) {
            row.par_iter_mut().zip(s.reps.par_iter()).for_each(|(c, r)| {
                let mut acc = ZERO;
                for (i, &g) in idx.iter().enumerate() {
                    let t: f64 = r.position.iter().zip(&u[i * d..(i + 1) * d]).map(|(a, b)| a * b).sum();
                    acc += fh.values[g] * (vals[i] * Complex64::from_polar(1.0, -2.0 * PI * t)).conj();
                }
                *c = acc * scale;
            });
        }
        Ok(out)
    }

    /// `P S_Ψ̃ C_Φ P`.
    pub fn operator(&self, sys: &FrameSystem, x: &Spectrum) -> Result<Spectrum> {
        let c = self.analyze(sys, &x.project(&sys.band))?;
        Ok(sys.synthesize_spectrum(&c, true)?.project(&sys.band))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeumannReport {
    pub iterations: usize,
    /// `‖f_n - f‖ / ‖f‖` per iterate, starting with `f_0`.
    pub errors: Vec<f64>,
    /// `‖f_{n+1} - f_n‖ / ‖f‖`.
    pub updates: Vec<f64>,
    /// `‖(Id - S_Ψ̃ C_Φ) f‖ / ‖f‖`.
    pub first_contraction: f64,
    /// Largest error ratio over steps above the round-off floor.
    pub decay_ratio: f64,
    pub final_error: f64,
    pub converged: bool,
}

/// Error level treated as converged to round-off when measuring decay.
pub const DECAY_FLOOR: f64 = 1e-12;

/// Richardson iteration `f_{n+1} = f_n + (y - S f_n)` with `y = S f`, `f_0 = y`.
pub fn perturbed_reconstruct(
    sys: &FrameSystem,
    pa: &PerturbedAnalysis,
    f: &Spectrum,
    max_iter: usize,
    tol: f64,
) -> Result<(Spectrum, NeumannReport)> {
    let f = f.project(&sys.band);
    let nf = f.norm();
    if nf == 0.0 {
        let rep = NeumannReport {
            iterations: 0,
            errors: vec![0.0],
            updates: vec![],
            first_contraction: 0.0,
            decay_ratio: 0.0,
            final_error: 0.0,
            converged: true,
        };
        return Ok((f, rep));
    }
    let y = pa.operator(sys, &f)?;
    let first_contraction = y.sub(&f).norm() / nf;
    let mut x = y.clone();
    let mut errors = vec![x.sub(&f).norm() / nf];
    let mut updates = Vec::new();
    let mut growth = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        let sx = pa.operator(sys, &x)?;
        let mut next = x.clone();
        next.add_assign(&y.sub(&sx));
        let upd = next.sub(&x).norm() / nf;
        x = next;
        updates.push(upd);
        let e = x.sub(&f).norm() / nf;
        growth = if e > *errors.last().unwrap() && e > DECAY_FLOOR { growth + 1 } else { 0 };
        errors.push(e);
        if growth >= 3 {
            return Err(Error::ContractionFailure { iterations: updates.len(), error: e });
        }
        if upd < tol {
            converged = true;
            break;
        }
    }
    let decay_ratio = errors
        .windows(2)
        .filter(|w| w[0] > DECAY_FLOOR * 1e2 && w[1] > DECAY_FLOOR)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let final_error = *errors.last().unwrap();
    let rep = NeumannReport {
        iterations: updates.len(),
        errors,
        updates,
        first_contraction,
        decay_ratio,
        final_error,
        converged,
    };
    Ok((x, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::ExpansiveDilation;
    use crate::window::{build_h, PainlessConfig, Region};

    fn reference_psi() -> SpectralWindow {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        build_h(&PainlessConfig::new(a, Region::symmetric_box(&[0.5]), 0.1)).unwrap()
    }

    #[test]
    fn corrector_tables() {
        let b0 = build_correctors(0, 1).unwrap();
        let int_theta = 1.0 / b0.coeffs[(0, 0)];
        assert!((b0.eval(0, &[0.3]) - unit_bump(&[0.3]) / int_theta).abs() < 1e-15);
        let b1 = build_correctors(1, 1).unwrap();
        assert!(b1.gram[(0, 1)].abs() < 1e-15);
        for n in [3, 8] {
            let b = build_correctors(n, 1).unwrap();
            assert!(b.biorthogonality_error <= 1e-10, "{n}: {}", b.biorthogonality_error);
        }
        let b2 = build_correctors(3, 2).unwrap();
        assert_eq!(b2.indices.len(), 10);
        assert!(b2.biorthogonality_error <= 1e-10, "{}", b2.biorthogonality_error);
        assert!(build_correctors(9, 1).is_err());
    }

    #[test]
    fn moments_vanish_and_support_is_exact() {
        let psi = sample_window(&reference_psi(), Grid::new(1, 128.0, 16384).unwrap()).unwrap();
        let basis = build_correctors(3, 1).unwrap();
        let mut prev = f64::INFINITY;
        for r in [4.0, 8.0, 16.0] {
            let w = truncate_correct(&psi, r, &basis, Cutoff::Dilated).unwrap();
            assert!(w.max_moment_residual() <= 1e-9, "{:?}", w.moment_residuals);
            assert!(w.support_exact());
            let sup = psi.sub(&w.phi).values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(sup < prev);
            prev = sup;
        }
        assert!(matches!(truncate_correct(&psi, 40.0, &basis, Cutoff::Dilated), Err(Error::Domain(_))));
    }

    #[test]
    fn choose_radius_paths() {
        let psi = sample_window(&reference_psi(), Grid::new(1, 128.0, 8192).unwrap()).unwrap();
        let basis = build_correctors(3, 1).unwrap();
        let grid = [4.0, 8.0, 16.0];
        let probe = choose_r(&psi, f64::MAX, 6.0, 2, &basis, &grid, Cutoff::Dilated, 33.0).unwrap();
        let last = probe.rows.last().unwrap().eps;
        let rep = choose_r(&psi, 2.0 * last, 6.0, 2, &basis, &grid, Cutoff::Dilated, 33.0).unwrap();
        assert!(rep.window.r <= 16.0);
        assert!(rep.rows.windows(2).all(|w| w[1].sup_norm < w[0].sup_norm));
        assert!(matches!(
            choose_r(&psi, 1e-300, 6.0, 2, &basis, &grid, Cutoff::Dilated, 33.0),
            Err(Error::Exhausted { .. })
        ));
    }

    fn small_system() -> FrameSystem {
        use crate::frame::DualOptions;
        use crate::nodes::{generate, split, Generator, PeriodicBox};
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let cell = PeriodicBox::new(vec![-2.0], vec![4.0]).unwrap();
        let kind = Generator::Jittered { delta: 0.16, spacing: 0.25 };
        let nodes = split(&generate(&kind, &cell, 3).unwrap(), &cell).unwrap();
        let grid = Grid::new(1, 32.0, 512).unwrap();
        let opts = DualOptions { b: 2.5, r_trunc: 12.0, r_dual: 12.0, tol: 1e-8 };
        FrameSystem::build(&reference_psi(), &a, &nodes, (-1, 1), grid, opts).unwrap()
    }

    #[test]
    fn neumann_unperturbed_and_compact() {
        let sys = small_system();
        let f = sys.random_band_spectrum(5);
        let (_, rep) = perturbed_reconstruct(&sys, &PerturbedAnalysis::exact(&sys), &f, 20, 1e-8).unwrap();
        assert!(rep.iterations <= 1, "{rep:?}");
        assert!(rep.errors[0] < 1e-6);

        let psi = sample_window(&reference_psi(), Grid::new(1, 64.0, 8192).unwrap()).unwrap();
        let w = truncate_correct(&psi, 4.0, &build_correctors(3, 1).unwrap(), Cutoff::Dilated).unwrap();
        let pa = PerturbedAnalysis::new(&sys, &w).unwrap();
        let (_, rep) = perturbed_reconstruct(&sys, &pa, &f, 50, 1e-10).unwrap();
        assert!(rep.decay_ratio <= 0.5, "{rep:?}");
        assert!(rep.final_error <= 1e-4, "{rep:?}");
    }

    #[test]
    fn spectral_moments_detect_mean() {
        let psi = reference_psi();
        let grid = Grid::new(1, 64.0, 2048).unwrap();
        let m = spectral_molecule(&|w| psi.eval(w), 0, &[0.3], grid, 2, 5);
        assert!(m.moments.iter().all(|(_, v)| v.norm() == 0.0));
        let bad = |w: &[f64]| psi.eval(w) + 0.2 * unit_bump(&[w[0] / 0.05]);
        let mb = spectral_molecule(&bad, 0, &[0.3], grid, 2, 5);
        let rep = molecule_check(&[m, mb], 10.0);
        let v = rep.violation.unwrap();
        assert_eq!(v.beta, vec![0]);
        assert!((v.moment - 0.2 * (-1.0f64).exp()).abs() < 1e-12);
    }
}
