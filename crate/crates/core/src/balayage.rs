//! Balayage: writing `e_{-w}` on a ball as `Σ_λ a_λ(w) e_{-λ}` with `λ ∈ Λ`,
//! and the dual generators `ψ̃_λ = Σ_k a_{λ,k} T_{k/b} τ`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::Write;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodes::NodeSet;
use crate::window::{Admissibility, ModulatedProfile, SpectralWindow};

/// Relative Tikhonov weights `μ / s_max²` swept by the discrepancy principle.
pub const REG_SWEEP: [f64; 8] = [1e-8, 1e-10, 1e-12, 1e-14, 1e-16, 1e-18, 1e-20, 1e-22];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Positive-weight quadrature on a ball.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Default rule size: enough points to resolve `|Σ a_λ e^{2πi(λ-w)x}|²` for
/// `|λ-w| <= r_trunc`. In the plane this is the angular count.
pub fn default_order(ball: &Ball, r_trunc: f64) -> usize {
    let band = match ball.dim() {
        1 => 8.0 * ball.radius * r_trunc,
        _ => 8.0 * PI * ball.radius * r_trunc,
    };
    (band.ceil() as usize + 16).max(32)
}

/// Gauss-Legendre on the segment (d = 1); Gauss-Legendre in the radius times
/// the trapezoid rule in the angle (d = 2).
pub fn ball_quadrature(ball: &Ball, order: usize) -> Result<Quadrature> {
    let order = order.max(2);
    let c = &ball.center;
    let r = ball.radius;
    match ball.dim() {
        1 => {
            let gl = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
            let (points, weights) = gl.iter().map(|(x, w)| (vec![c[0] + r * x], r * w)).unzip();
            Ok(Quadrature { points, weights })
        }
        2 => {
            let nr = (order / 2).max(2);
            let nt = order.max(4);
            let gl = GaussLegendre::new(NonZeroUsize::new(nr).unwrap());
            let mut points = Vec::with_capacity(nr * nt);
            let mut weights = Vec::with_capacity(nr * nt);
            for (x, w) in gl.iter() {
                let rho = r * (x + 1.0) / 2.0;
                let wr = w * r / 2.0 * rho;
                for k in 0..nt {
                    let th = 2.0 * PI * (k as f64 + 0.5) / nt as f64;
                    points.push(vec![c[0] + rho * th.cos(), c[1] + rho * th.sin()]);
                    weights.push(wr * 2.0 * PI / nt as f64);
                }
            }
            Ok(Quadrature { points, weights })
        }
        d => Err(Error::InvalidInput(format!("balayage in dimension {d} unsupported"))),
    }
}

#[derive(Clone, Debug)]
pub struct BalayageProblem {
    pub ball: Ball,
    /// Candidate nodes `|λ - w| <= r_trunc` with their cell indices.
    pub nodes: Vec<Vec<f64>>,
    pub cells: Vec<usize>,
    pub target: Vec<f64>,
    pub r_trunc: f64,
    pub order: usize,
    pub quadrature: Quadrature,
    pub tol: f64,
    pub admissibility: Admissibility,
}

impl BalayageProblem {
    /// Rejects `ρ(Λ) r >= 1/4` before any work.
    pub fn new(ball: Ball, nodes: &NodeSet, target: &[f64], r_trunc: f64, tol: f64) -> Result<Self> {
        let adm = Admissibility::new(nodes.gap(), ball.radius);
        adm.check()?;
        if ball.dim() != nodes.dim() || target.len() != nodes.dim() {
            return Err(Error::InvalidInput("ball, nodes and target dimensions differ".into()));
        }
        if !(r_trunc > 0.0 && tol > 0.0) {
            return Err(Error::InvalidInput("r_trunc and tol must be positive".into()));
        }
        let near = nodes.nodes_within(target, r_trunc);
        if near.is_empty() {
            return Err(Error::InvalidInput("no node within r_trunc of the target".into()));
        }
        let order = default_order(&ball, r_trunc);
        let quadrature = ball_quadrature(&ball, order)?;
        let (nodes, cells) = near.into_iter().unzip();
        Ok(Self { ball, nodes, cells, target: target.to_vec(), r_trunc, order, quadrature, tol, admissibility: adm })
    }
}

/// Fitted `|a_λ| <= C e^{-c |w-λ|^{1/2}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: f64,
    /// Least-squares slope of `ln|a_λ|` against `|w-λ|^{1/2}`.
    pub slope: f64,
    pub n_fit: usize,
}

#[derive(Clone, Debug)]
pub struct BalayageSolution {
    pub target: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub cells: Vec<usize>,
    pub coeffs: Vec<Complex64>,
    /// Sup of the representation error over the solve quadrature.
    pub residual_sup: f64,
    /// Sup of the representation error over a finer verification rule.
    pub residual_verify: f64,
    /// Selected relative regularisation weight (0 for an exact node hit).
    pub reg_weight: f64,
    pub envelope: Option<Envelope>,
}

fn residual(points: &[Vec<f64>], target: &[f64], nodes: &[Vec<f64>], coeffs: &[Complex64]) -> f64 {
    points
        .par_iter()
        .map(|x| {
            let e = |p: &[f64]| Complex64::from_polar(1.0, -2.0 * PI * dot(p, x));
            let mut s = e(target);
            for (l, a) in nodes.iter().zip(coeffs) {
                s -= a * e(l);
            }
            s.norm()
        })
        .reduce(|| 0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Regularised minimum-norm least squares with the discrepancy principle:
/// the largest weight in [`REG_SWEEP`] whose residual meets `tol` wins.
pub fn solve_balayage(prob: &BalayageProblem) -> Result<BalayageSolution> {
    let verify = ball_quadrature(&prob.ball, 2 * prob.order + 7)?;
    let n = prob.nodes.len();
    if let Some(hit) = prob.nodes.iter().position(|l| dist(l, &prob.target) < 1e-12) {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[hit] = Complex64::new(1.0, 0.0);
        let residual_sup = residual(&prob.quadrature.points, &prob.target, &prob.nodes, &coeffs);
        let residual_verify = residual(&verify.points, &prob.target, &prob.nodes, &coeffs);
        return Ok(BalayageSolution {
            target: prob.target.clone(),
            nodes: prob.nodes.clone(),
            cells: prob.cells.clone(),
            coeffs,
            residual_sup,
            residual_verify,
            reg_weight: 0.0,
            envelope: None,
        });
    }
    let q = &prob.quadrature;
    let m = q.points.len();
    let sw: Vec<f64> = q.weights.iter().map(|w| w.sqrt()).collect();
    let mat = DMatrix::from_fn(m, n, |i, k| {
        Complex64::from_polar(sw[i], -2.0 * PI * dot(&prob.nodes[k], &q.points[i]))
    });
    let rhs: Vec<Complex64> = (0..m)
        .map(|i| Complex64::from_polar(sw[i], -2.0 * PI * dot(&prob.target, &q.points[i])))
        .collect();
    let svd = mat.svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Internal("SVD without U".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::Internal("SVD without V".into()))?;
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank = s.len();
    let proj: Vec<Complex64> = (0..rank)
        .map(|i| (0..m).map(|r| u[(r, i)].conj() * rhs[r]).sum())
        .collect();
    let mut best: Option<(f64, f64, Vec<Complex64>)> = None;
    for &weight in REG_SWEEP.iter() {
        let mu = weight * smax * smax;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..rank {
            let f = s[i] / (s[i] * s[i] + mu);
            if f == 0.0 {
                continue;
            }
            let t = proj[i] * f;
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += vt[(i, k)].conj() * t;
            }
        }
        let res = residual(&q.points, &prob.target, &prob.nodes, &coeffs);
        let better = best.as_ref().is_none_or(|b| res < b.1);
        if res <= prob.tol {
            best = Some((weight, res, coeffs));
            break;
        }
        if better {
            best = Some((weight, res, coeffs));
        }
    }
    let (reg_weight, residual_sup, coeffs) = best.expect("sweep is nonempty");
    if residual_sup > prob.tol {
        return Err(Error::InfeasibleBalayage {
            target: prob.target.clone(),
            best_residual: residual_sup,
            tol: prob.tol,
        });
    }
    let residual_verify = residual(&verify.points, &prob.target, &prob.nodes, &coeffs);
    let envelope = fit_envelope(&prob.target, &prob.nodes, &coeffs);
    Ok(BalayageSolution {
        target: prob.target.clone(),
        nodes: prob.nodes.clone(),
        cells: prob.cells.clone(),
        coeffs,
        residual_sup,
        residual_verify,
        reg_weight,
        envelope,
    })
}

/// Regression of `ln|a_λ|` on `|w-λ|^{1/2}`; `C` is raised until the envelope dominates.
pub fn fit_envelope(target: &[f64], nodes: &[Vec<f64>], coeffs: &[Complex64]) -> Option<Envelope> {
    let pts: Vec<(f64, f64)> = nodes
        .iter()
        .zip(coeffs)
        .filter(|(_, a)| a.norm() > 1e-300)
        .map(|(l, a)| (dist(l, target).sqrt(), a.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let c = -slope;
    let big_c = pts.iter().map(|(x, y)| (y + c * x).exp()).fold(0.0, f64::max);
    Some(Envelope { big_c, c, slope, n_fit: pts.len() })
}

impl BalayageSolution {
    /// Max `|a_λ|` over nodes with `lo <= |λ - w| <= hi`.
    pub fn max_coeff_in(&self, lo: f64, hi: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .filter(|(l, _)| {
                let r = dist(l, &self.target);
                r >= lo && r <= hi
            })
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max)
    }
}

/// Solves one balayage problem per lattice target `k/b`.
pub fn lattice_balayage_table(
    ks: &[Vec<i64>],
    b: f64,
    ball: &Ball,
    nodes: &NodeSet,
    r_trunc: f64,
    tol: f64,
) -> Result<BTreeMap<Vec<i64>, BalayageSolution>> {
    Admissibility::new(nodes.gap(), ball.radius).check()?;
    let solved: Vec<Result<(Vec<i64>, BalayageSolution)>> = ks
        .par_iter()
        .map(|k| {
            let w: Vec<f64> = k.iter().map(|v| *v as f64 / b).collect();
            let prob = BalayageProblem::new(ball.clone(), nodes, &w, r_trunc, tol)?;
            solve_balayage(&prob)
                .map(|s| (k.clone(), s))
                .map_err(|e| Error::Construction(format!("balayage failed for k = {k:?}: {e}")))
        })
        .collect();
    solved.into_iter().collect()
}

/// Balayage coefficients for every `k`, stored for one period of targets and
/// extended through `a_{λ+Pn, k+bPn} = a_{λ,k}`.
#[derive(Clone, Debug)]
pub struct BalayageTable {
    pub b: f64,
    pub ball: Ball,
    pub r_trunc: f64,
    pub tol: f64,
    /// `b P_i` per axis.
    pub k_period: Vec<i64>,
    pub solutions: BTreeMap<Vec<i64>, BalayageSolution>,
    period: Vec<f64>,
    cell_nodes: Vec<Vec<f64>>,
}

impl BalayageTable {
    /// Solves the targets `k ∈ Π [0, bP_i)` for a periodic node set.
    pub fn periodic(b: f64, ball: &Ball, nodes: &NodeSet, r_trunc: f64, tol: f64) -> Result<Self> {
        let period = nodes.period().to_vec();
        let mut k_period = Vec::new();
        for p in &period {
            let v = b * p;
            if (v - v.round()).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("b * P = {v} is not an integer")));
            }
            k_period.push(v.round() as i64);
        }
        let ks: Vec<Vec<i64>> = match k_period.len() {
            1 => (0..k_period[0]).map(|k| vec![k]).collect(),
            _ => (0..k_period[0])
                .flat_map(|a| (0..k_period[1]).map(move |c| vec![a, c]))
                .collect(),
        };
        let solutions = lattice_balayage_table(&ks, b, ball, nodes, r_trunc, tol)?;
        Ok(Self {
            b,
            ball: ball.clone(),
            r_trunc,
            tol,
            k_period,
            solutions,
            period,
            cell_nodes: nodes.nodes().to_vec(),
        })
    }

    pub fn max_residual(&self) -> f64 {
        self.solutions.values().map(|s| s.residual_sup).fold(0.0, f64::max)
    }

    /// Cell index and lattice offset `m` with `λ = cell node + P m`.
    pub fn locate(&self, lambda: &[f64]) -> Result<(usize, Vec<i64>)> {
        for (ci, c) in self.cell_nodes.iter().enumerate() {
            let m: Vec<f64> = lambda.iter().zip(c).zip(&self.period).map(|((l, c), p)| (l - c) / p).collect();
            if m.iter().all(|v| (v - v.round()).abs() < 1e-9) {
                return Ok((ci, m.iter().map(|v| v.round() as i64).collect()));
            }
        }
        Err(Error::InvalidInput(format!("{lambda:?} is not a node")))
    }

    /// All nonzero `(k/b, a_{λ,k})` for the node `λ = cell node + P m`.
    pub fn coefficients_for(&self, cell: usize, m: &[i64]) -> Vec<(Vec<f64>, Complex64)> {
        let mut out = Vec::new();
        for sol in self.solutions.values() {
            for ((pos, &ci), a) in sol.nodes.iter().zip(&sol.cells).zip(&sol.coeffs) {
                if ci != cell || a.norm() == 0.0 {
                    continue;
                }
                // entry at cell + P m' for target k0/b corresponds to k = k0 - bP m'
                let mp: Vec<f64> = pos
                    .iter()
                    .zip(&self.cell_nodes[cell])
                    .zip(&self.period)
                    .map(|((x, c), p)| ((x - c) / p).round())
                    .collect();
                let shift: Vec<f64> = sol
                    .target
                    .iter()
                    .zip(&mp)
                    .zip(&self.period)
                    .zip(m)
                    .map(|(((t, mpi), p), mi)| t - p * mpi + p * *mi as f64)
                    .collect();
                out.push((shift, *a));
            }
        }
        out
    }

    /// CSV rows `k..., λ..., re, im, residual_sup`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.k_period.len();
        let mut head: Vec<String> = (0..d).map(|i| format!("k{i}")).collect();
        head.extend((0..d).map(|i| format!("lambda{i}")));
        head.extend(["re".to_string(), "im".to_string(), "residual_sup".to_string()]);
        writeln!(w, "{}", head.join(","))?;
        for (k, sol) in &self.solutions {
            for (l, a) in sol.nodes.iter().zip(&sol.coeffs) {
                let mut row: Vec<String> = k.iter().map(|v| v.to_string()).collect();
                row.extend(l.iter().map(|v| format!("{v:e}")));
                row.extend([format!("{:e}", a.re), format!("{:e}", a.im), format!("{:e}", sol.residual_sup)]);
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    /// JSON summary of the envelope fits.
    pub fn envelope_summary(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .solutions
            .iter()
            .map(|(k, s)| {
                serde_json::json!({
                    "k": k,
                    "residual_sup": s.residual_sup,
                    "residual_verify": s.residual_verify,
                    "reg_weight": s.reg_weight,
                    "nodes": s.nodes.len(),
                    "envelope": s.envelope,
                })
            })
            .collect();
        serde_json::json!({ "b": self.b, "r_trunc": self.r_trunc, "tol": self.tol, "targets": rows })
    }
}

/// Assembled `ψ̃_λ` with its truncation diagnostics.
#[derive(Clone, Debug)]
pub struct DualGenerator {
    pub window: SpectralWindow,
    pub terms: usize,
    /// `b^{-2d} Σ |a_{λ,k}|` over the coefficients dropped by `r_dual`.
    pub tail: f64,
    /// Envelope extrapolation of the coefficients beyond the solve truncation.
    pub envelope_tail: f64,
}

/// `ψ̃_λ = b^{-2d} Σ_{|k/b-λ| <= r_dual} a_{λ,k} T_{k/b} τ`.
///
/// The factor `b^{-2d}` makes `Σ_{j,λ} ⟨f, D_{A^j}T_λψ⟩ D_{A^j}ψ̃_λ = f`
/// for the dual `τ̂ = b^d ψ̂ / Σ_j |ψ̂((A^t)^j ·)|²`.
pub fn assemble_dual_generator(
    lambda: &[f64],
    table: &BalayageTable,
    tau: &SpectralWindow,
    r_dual: f64,
) -> Result<DualGenerator> {
    let (cell, m) = table.locate(lambda)?;
    let d = lambda.len();
    let gain = table.b.powi(-2 * d as i32);
    let mut shifts = Vec::new();
    let mut coeffs = Vec::new();
    let mut dropped = 0.0;
    for (shift, a) in table.coefficients_for(cell, &m) {
        if dist(&shift, lambda) <= r_dual + 1e-12 {
            shifts.push(shift);
            coeffs.push(a);
        } else {
            dropped += a.norm();
        }
    }
    let tail = dropped * gain;
    if tail > 1e-6 {
        return Err(Error::TruncationTooSmall { tail, r_dual });
    }
    let envelope_tail = envelope_tail(table, r_dual.min(table.r_trunc), d) * gain;
    let terms = shifts.len();
    let profile = ModulatedProfile { base: tau.profile().clone(), gain, shifts, coeffs };
    let mut meta = tau.meta().clone();
    meta.kind = "balayage_dual".into();
    Ok(DualGenerator {
        window: SpectralWindow::new(Arc::new(profile), d, tau.support().clone(), meta),
        terms,
        tail,
        envelope_tail,
    })
}

/// `Σ_{|k/b-λ| > R} C e^{-c|k/b-λ|^{1/2}}` with the weakest fitted envelope,
/// summed over lattice shells of width `1/b`.
fn envelope_tail(table: &BalayageTable, radius: f64, d: usize) -> f64 {
    let env: Vec<&Envelope> = table.solutions.values().filter_map(|s| s.envelope.as_ref()).collect();
    let Some(worst) = env.iter().min_by(|a, b| a.c.total_cmp(&b.c)) else { return 0.0 };
    if worst.c <= 0.0 {
        return f64::INFINITY;
    }
    let big_c = env.iter().map(|e| e.big_c).fold(0.0, f64::max);
    let h = 1.0 / table.b;
    let mut sum = 0.0;
    let mut t = radius + h;
    loop {
        let shell = if d == 1 { 2.0 } else { 2.0 * PI * t / h };
        let term = shell * big_c * (-worst.c * t.sqrt()).exp();
        sum += term;
        if term < 1e-18 * sum.max(1e-300) || t > 1e6 {
            break;
        }
        t += h;
    }
    sum
}

/// Lookup of assembled duals by cell index.
pub fn assemble_cell_duals(
    table: &BalayageTable,
    tau: &SpectralWindow,
    r_dual: f64,
) -> Result<Vec<DualGenerator>> {
    table
        .cell_nodes
        .iter()
        .map(|c| assemble_dual_generator(c, table, tau, r_dual))
        .collect()
}

/// Coefficients of `T_{k/b}ψ = Σ_λ a_{λ,k} T_λ ψ` for one target as a node map.
pub fn coefficient_map(sol: &BalayageSolution) -> HashMap<usize, Complex64> {
    sol.coeffs.iter().enumerate().map(|(i, a)| (i, *a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{generate, split, Generator, PeriodicBox};

    fn half_lattice_jittered(seed: u64) -> NodeSet {
        let b = PeriodicBox::new(vec![-4.0], vec![8.0]).unwrap();
        let nodes = generate(&Generator::Jittered { delta: 0.1, spacing: 0.5 }, &b, seed).unwrap();
        split(&nodes, &b).unwrap()
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let ball = Ball { center: vec![0.75], radius: 0.2 };
        let q = ball_quadrature(&ball, 16).unwrap();
        let s: f64 = q.points.iter().zip(&q.weights).map(|(x, w)| w * x[0] * x[0]).sum();
        let exact = (0.95f64.powi(3) - 0.55f64.powi(3)) / 3.0;
        assert!((s - exact).abs() < 1e-14);
        let disk = Ball { center: vec![0.3, -0.1], radius: 0.5 };
        let q = ball_quadrature(&disk, 24).unwrap();
        let area: f64 = q.weights.iter().sum();
        assert!((area - PI * 0.25).abs() < 1e-13);
        assert!(q.points.iter().all(|p| dist(p, &disk.center) <= 0.5));
    }

    #[test]
    fn node_target_is_exact() {
        let ns = half_lattice_jittered(2);
        let w = ns.nodes()[5].clone();
        let prob = BalayageProblem::new(Ball { center: vec![0.75], radius: 0.2 }, &ns, &w, 12.0, 1e-8).unwrap();
        let sol = solve_balayage(&prob).unwrap();
        assert!(sol.residual_sup <= 1e-12);
    }

    #[test]
    fn jittered_half_lattice_example() {
        let ns = half_lattice_jittered(4);
        assert!(ns.gap() <= 0.3);
        let prob =
            BalayageProblem::new(Ball { center: vec![0.75], radius: 0.2 }, &ns, &[0.13], 12.0, 1e-8).unwrap();
        let sol = solve_balayage(&prob).unwrap();
        assert!(sol.residual_sup <= 1e-8, "{}", sol.residual_sup);
        assert!(sol.residual_verify <= 1e-7, "{}", sol.residual_verify);
        let near = sol.max_coeff_in(0.0, 4.0);
        let far = sol.max_coeff_in(8.0, 12.0);
        assert!(near >= 10.0 * far, "near {near} far {far}");
        assert!(sol.envelope.as_ref().unwrap().c > 0.0);
    }

    #[test]
    fn inadmissible_rejected() {
        let b = PeriodicBox::new(vec![-4.0], vec![8.0]).unwrap();
        let nodes = generate(&Generator::Lattice { spacing: 1.0 }, &b, 0).unwrap();
        let ns = split(&nodes, &b).unwrap();
        let err = BalayageProblem::new(Ball { center: vec![0.0], radius: 0.6 }, &ns, &[0.3], 6.0, 1e-8);
        assert!(matches!(err, Err(Error::Admissibility { .. })));
    }

    #[test]
    fn lattice_targets_are_deltas() {
        let b = 2.5;
        let boxed = PeriodicBox::new(vec![-2.0], vec![4.0]).unwrap();
        let nodes = generate(&Generator::Lattice { spacing: 1.0 / b }, &boxed, 0).unwrap();
        let ns = split(&nodes, &boxed).unwrap();
        let ball = Ball { center: vec![0.0], radius: 1.1 };
        let table = lattice_balayage_table(&[vec![-3], vec![7]], b, &ball, &ns, 6.0, 1e-8).unwrap();
        for (k, sol) in &table {
            for (l, a) in sol.nodes.iter().zip(&sol.coeffs) {
                let want = if (l[0] - k[0] as f64 / b).abs() < 1e-12 { 1.0 } else { 0.0 };
                assert!((a - want).norm() < 1e-15);
            }
        }
    }
}
