//! Analysis, synthesis and reconstruction for `{D_{A^j} T_λ ψ}` and its duals
//! on the periodic grid, plus frame-bound estimation on the covered band.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aniso::{mat_vec, ExpansiveDilation, Grid, SampledSignal, Spectrum};
use crate::balayage::{assemble_dual_generator, Ball, BalayageTable, DualGenerator};
use crate::error::{Error, Result};
use crate::nodes::{NodeSet, Representative};
use crate::window::{active_scales, calderon_dual, SpectralWindow};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Balayage and truncation parameters for the dual system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    pub b: f64,
    pub r_trunc: f64,
    pub r_dual: f64,
    pub tol: f64,
}

/// Per-scale samples of every generator on the frequencies it touches.
#[derive(Clone, Debug)]
pub struct ScaleData {
    pub j: i32,
    /// Grid indices with `ψ̂((A^t)^j w) ≠ 0`.
    pub idx: Vec<usize>,
    /// `(A^t)^j w` for each index, `d` entries per frequency.
    pub u: Vec<f64>,
    /// `|det A|^{j/2} ψ̂(u)`.
    pub psi: Vec<Complex64>,
    /// `|det A|^{j/2} ψ̃_c^(u)` per cell node `c`.
    pub dual: Vec<Vec<Complex64>>,
    pub reps: Vec<Representative>,
}

/// The system `W(ψ, A, Λ)` with its Λ-indexed duals `ψ̃_{j,λ} = D_{A^j} ψ̃_λ`.
#[derive(Clone, Debug)]
pub struct FrameSystem {
    pub psi: SpectralWindow,
    pub tau: SpectralWindow,
    pub a: ExpansiveDilation,
    pub nodes: NodeSet,
    pub j_range: (i32, i32),
    pub grid: Grid,
    pub options: DualOptions,
    pub table: BalayageTable,
    /// One dual per cell node; the dual at `c + Pn` is its translate by `Pn`.
    pub duals: Vec<DualGenerator>,
    pub scales: Vec<ScaleData>,
    /// Frequencies `w ≠ 0` all of whose active scales lie in `j_range`.
    pub band: Vec<bool>,
}

/// Values `c_{j,λ}` for `j ∈ j_range` and the representatives `λ` of each scale.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientGrid {
    pub j_range: (i32, i32),
    pub nodes: Vec<Vec<Vec<f64>>>,
    pub values: Vec<Vec<Complex64>>,
}

impl CoefficientGrid {
    pub fn zeros_like(&self) -> Self {
        Self {
            j_range: self.j_range,
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| vec![ZERO; v.len()]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ c conj(d)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values.iter().flatten().zip(other.values.iter().flatten()).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (row, o) in out.values.iter_mut().zip(&other.values) {
            for (a, b) in row.iter_mut().zip(o) {
                *a += b;
            }
        }
        out
    }

    /// `(j, λ, c)` triples in scale order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &[f64], Complex64)> + '_ {
        self.values.iter().enumerate().flat_map(move |(s, row)| {
            let j = self.j_range.0 + s as i32;
            row.iter().zip(&self.nodes[s]).map(move |(c, l)| (j, l.as_slice(), *c))
        })
    }

    pub fn set(&mut self, j: i32, pos: usize, value: Complex64) -> Result<()> {
        let s = (j - self.j_range.0) as usize;
        let slot = self
            .values
            .get_mut(s)
            .and_then(|r| r.get_mut(pos))
            .ok_or_else(|| Error::InvalidInput(format!("no coefficient ({j}, {pos})")))?;
        *slot = value;
        Ok(())
    }

    /// Rows `j, λ..., re, im`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.nodes.iter().flatten().next().map_or(1, Vec::len);
        let mut head = vec!["j".to_string()];
        head.extend((0..d).map(|i| format!("lambda{i}")));
        head.extend(["re".into(), "im".into()]);
        writeln!(w, "{}", head.join(","))?;
        for (j, l, c) in self.iter() {
            let mut row = vec![j.to_string()];
            row.extend(l.iter().map(|v| format!("{v:e}")));
            row.extend([format!("{:e}", c.re), format!("{:e}", c.im)]);
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads values for a grid of known layout; rows must match in order.
    pub fn read_csv_into(&mut self, r: impl std::io::Read) -> Result<()> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut rows = text.lines().skip(1).filter(|l| !l.trim().is_empty());
        for s in 0..self.values.len() {
            for pos in 0..self.values[s].len() {
                let line = rows.next().ok_or_else(|| Error::Parse("coefficient file too short".into()))?;
                let f: Vec<&str> = line.split(',').collect();
                let n = f.len();
                if n < 3 {
                    return Err(Error::Parse(format!("bad coefficient row {line:?}")));
                }
                let p = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}")));
                self.values[s][pos] = Complex64::new(p(f[n - 2])?, p(f[n - 1])?);
            }
        }
        Ok(())
    }
}

#[inline]
fn phase(shift: &[f64], u: &[f64]) -> Complex64 {
    let t: f64 = shift.iter().zip(u).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, -2.0 * PI * t)
}

impl FrameSystem {
    /// Builds `τ`, the balayage table, the duals and all per-scale samples.
    pub fn build(
        psi: &SpectralWindow,
        a: &ExpansiveDilation,
        nodes: &NodeSet,
        j_range: (i32, i32),
        grid: Grid,
        options: DualOptions,
    ) -> Result<Self> {
        let d = psi.dim();
        if a.dim() != d || nodes.dim() != d || grid.d != d {
            return Err(Error::InvalidInput("window, dilation, nodes and grid dimensions differ".into()));
        }
        if j_range.0 > j_range.1 {
            return Err(Error::InvalidInput(format!("empty scale range {j_range:?}")));
        }
        for j in j_range.0..=j_range.1 {
            psi.check_on_grid(a, j, grid)?;
        }
        let tau = calderon_dual(psi, a, options.b)?;
        let ball = Ball { center: psi.support().center.clone(), radius: psi.support().radius };
        let table = BalayageTable::periodic(options.b, &ball, nodes, options.r_trunc, options.tol)?;
        let duals: Vec<DualGenerator> = nodes
            .nodes()
            .iter()
            .map(|c| assemble_dual_generator(c, &table, &tau, options.r_dual))
            .collect::<Result<_>>()?;
        let mut scales = Vec::new();
        for j in j_range.0..=j_range.1 {
            scales.push(scale_data(psi, &duals, a, nodes, j, grid)?);
        }
        let band = band_mask(psi, a, j_range, grid)?;
        Ok(Self {
            psi: psi.clone(),
            tau,
            a: a.clone(),
            nodes: nodes.clone(),
            j_range,
            grid,
            options,
            table,
            duals,
            scales,
            band,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.scales.iter().map(|s| s.reps.len()).sum()
    }

    pub fn empty_coefficients(&self) -> CoefficientGrid {
        CoefficientGrid {
            j_range: self.j_range,
            nodes: self.scales.iter().map(|s| s.reps.iter().map(|r| r.position.clone()).collect()).collect(),
            values: self.scales.iter().map(|s| vec![ZERO; s.reps.len()]).collect(),
        }
    }

    fn atom_value(&self, s: &ScaleData, r: &Representative, i: usize, dual: bool) -> Complex64 {
        let d = self.grid.d;
        let u = &s.u[i * d..(i + 1) * d];
        if dual {
            s.dual[r.cell][i] * phase(&r.shift, u)
        } else {
            s.psi[i] * phase(&r.position, u)
        }
    }

    /// `⟨f, g_{j,λ}⟩` for all atoms, from the spectrum of `f`.
    pub fn analyze_spectrum(&self, fh: &Spectrum, use_dual: bool) -> Result<CoefficientGrid> {
        if fh.grid != self.grid {
            return Err(Error::InvalidInput("signal grid differs from the system grid".into()));
        }
        let scale = 1.0 / self.grid.box_size.powi(self.grid.d as i32);
        let mut out = self.empty_coefficients();
        for (s, row) in self.scales.iter().zip(out.values.iter_mut()) {
            row.par_iter_mut().zip(s.reps.par_iter()).for_each(|(c, r)| {
                let mut acc = ZERO;
                for (i, &g) in s.idx.iter().enumerate() {
                    acc += fh.values[g] * self.atom_value(s, r, i, use_dual).conj();
                }
                *c = acc * scale;
            });
        }
        Ok(out)
    }

    pub fn analyze(&self, f: &SampledSignal, use_dual: bool) -> Result<CoefficientGrid> {
        self.analyze_spectrum(&f.spectrum(), use_dual)
    }

    /// `Σ c_{j,λ} g_{j,λ}` as a spectrum.
    pub fn synthesize_spectrum(&self, c: &CoefficientGrid, use_dual: bool) -> Result<Spectrum> {
        self.check_layout(c)?;
        if c.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let mut out = Spectrum::zeros(self.grid);
        for (s, row) in self.scales.iter().zip(&c.values) {
            let contrib: Vec<Complex64> = (0..s.idx.len())
                .into_par_iter()
                .map(|i| {
                    let mut acc = ZERO;
                    for (r, cv) in s.reps.iter().zip(row) {
                        if *cv != ZERO {
                            acc += cv * self.atom_value(s, r, i, use_dual);
                        }
                    }
                    acc
                })
                .collect();
            for (&g, v) in s.idx.iter().zip(contrib) {
                out.values[g] += v;
            }
        }
        Ok(out)
    }

    pub fn synthesize(&self, c: &CoefficientGrid, use_dual: bool) -> Result<SampledSignal> {
        Ok(self.synthesize_spectrum(c, use_dual)?.to_signal())
    }

    fn check_layout(&self, c: &CoefficientGrid) -> Result<()> {
        if c.j_range != self.j_range
            || c.values.len() != self.scales.len()
            || c.values.iter().zip(&self.scales).any(|(v, s)| v.len() != s.reps.len())
        {
            return Err(Error::InvalidInput("coefficient layout does not match the system".into()));
        }
        Ok(())
    }

    /// Fraction of `‖f‖²` carried by the band.
    pub fn band_coverage(&self, fh: &Spectrum) -> f64 {
        let total: f64 = fh.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 1.0;
        }
        let inside: f64 = fh.values.iter().zip(&self.band).filter(|(_, b)| **b).map(|(v, _)| v.norm_sqr()).sum();
        inside / total
    }

    /// `S_Ψ̃ C_Ψ f` (dual synthesis) or `S_Ψ C_Ψ̃ f` (dual analysis) with its relative error.
    pub fn reconstruct(&self, f: &SampledSignal, direction: Direction) -> Result<Reconstruction> {
        let fh = f.spectrum();
        let out = self.reconstruct_spectrum(&fh, direction)?;
        let diff = out.sub(&fh);
        let nf = fh.norm();
        let rel_error = if nf == 0.0 { diff.norm() } else { diff.norm() / nf };
        let coverage = self.band_coverage(&fh);
        let warning =
            (coverage < 0.999).then(|| format!("band coverage {coverage:.6} is below 0.999 of the energy"));
        Ok(Reconstruction { signal: out.to_signal(), rel_error, band_coverage: coverage, warning })
    }

    pub fn reconstruct_spectrum(&self, fh: &Spectrum, direction: Direction) -> Result<Spectrum> {
        let (ana, syn) = match direction {
            Direction::DualSynthesis => (false, true),
            Direction::DualAnalysis => (true, false),
        };
        let c = self.analyze_spectrum(fh, ana)?;
        self.synthesize_spectrum(&c, syn)
    }

    /// Band-projected frame operator `P S_Ψ C_Ψ P`.
    pub fn frame_operator(&self, x: &Spectrum) -> Result<Spectrum> {
        let c = self.analyze_spectrum(&x.project(&self.band), false)?;
        Ok(self.synthesize_spectrum(&c, false)?.project(&self.band))
    }

    /// Random spectrum with independent complex Gaussian values on the band.
    pub fn random_band_spectrum(&self, seed: u64) -> Spectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrum::zeros(self.grid);
        for (v, b) in s.values.iter_mut().zip(&self.band) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if *b {
                *v = Complex64::new(re, im);
            }
        }
        s
    }

    pub fn random_band_signal(&self, seed: u64) -> SampledSignal {
        self.random_band_spectrum(seed).to_signal()
    }

    /// `Σ_{j ∈ j_range} |ψ̂((A^t)^j w)|²` times `b^d` on the band: the frame
    /// operator symbol when `Λ = b^{-1} ℤ^d`.
    pub fn lattice_symbol(&self) -> Result<Vec<f64>> {
        let bd = self.options.b.powi(self.grid.d as i32);
        (0..self.grid.len())
            .map(|i| {
                if !self.band[i] {
                    return Ok(0.0);
                }
                let w = self.grid.freq(i);
                let mut s = 0.0;
                for j in self.j_range.0..=self.j_range.1 {
                    s += self.psi.eval(&self.a.apply_transpose(j, &w[..self.grid.d])?).norm_sqr();
                }
                Ok(s * bd)
            })
            .collect()
    }
}

/// Which side carries the duals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    DualSynthesis,
    DualAnalysis,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub signal: SampledSignal,
    pub rel_error: f64,
    pub band_coverage: f64,
    pub warning: Option<String>,
}

fn scale_data(
    psi: &SpectralWindow,
    duals: &[DualGenerator],
    a: &ExpansiveDilation,
    nodes: &NodeSet,
    j: i32,
    grid: Grid,
) -> Result<ScaleData> {
    let d = grid.d;
    let at = a.transpose_power_ref(j)?;
    let gain = a.det_abs().powf(j as f64 / 2.0);
    let hits: Vec<(usize, Vec<f64>, Complex64)> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let w = grid.freq(i);
            let u = mat_vec(at, &w[..d]);
            if !psi.may_support(&u) {
                return None;
            }
            let v = psi.eval(&u);
            (v != ZERO).then(|| (i, u, v * gain))
        })
        .collect();
    let idx: Vec<usize> = hits.iter().map(|h| h.0).collect();
    let u: Vec<f64> = hits.iter().flat_map(|h| h.1.iter().copied()).collect();
    let psi_vals: Vec<Complex64> = hits.iter().map(|h| h.2).collect();
    let dual = duals
        .par_iter()
        .map(|g| hits.iter().map(|(_, u, _)| g.window.eval(u) * gain).collect())
        .collect();
    let reps = nodes.representatives(a, j, grid.box_size)?;
    Ok(ScaleData { j, idx, u, psi: psi_vals, dual, reps })
}

fn band_mask(psi: &SpectralWindow, a: &ExpansiveDilation, j_range: (i32, i32), grid: Grid) -> Result<Vec<bool>> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let w = grid.freq(i);
            let act = active_scales(psi, a, &w[..grid.d])?;
            Ok(!act.is_empty() && act.iter().all(|j| (j_range.0..=j_range.1).contains(j)))
        })
        .collect()
}

/// Estimated frame bounds on the band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    #[serde(rename = "A_hat")]
    pub a_hat: f64,
    #[serde(rename = "B_hat")]
    pub b_hat: f64,
    pub trials: usize,
    pub iters: usize,
    /// Number of band frequencies.
    pub band: usize,
    pub converged: bool,
}

/// `B̂` and `Â` as the extreme Ritz values of the frame operator on the Krylov
/// space of power iteration from random band starts (Lanczos with full
/// reorthogonalisation; the low end is the shifted iteration on `B̂ - S`).
/// Stops when both ends change by at most `1e-12` relative.
pub fn estimate_frame_bounds(sys: &FrameSystem, trials: usize, iters: usize, seed: u64) -> Result<FrameBounds> {
    let band = sys.band.iter().filter(|b| **b).count();
    if band == 0 {
        return Err(Error::InvalidInput("the scale range covers no grid frequency".into()));
    }
    let mut b_hat: f64 = 0.0;
    let mut a_hat = f64::INFINITY;
    let mut converged = true;
    for t in 0..trials.max(1) {
        let start = sys.random_band_spectrum(seed.wrapping_add(t as u64));
        let (lo, hi, ok) = lanczos_extremes(&|v: &Spectrum| sys.frame_operator(v), start, iters)?;
        b_hat = b_hat.max(hi);
        a_hat = a_hat.min(lo);
        converged &= ok;
    }
    Ok(FrameBounds { a_hat, b_hat, trials: trials.max(1), iters, band, converged })
}

/// `‖S_Ψ̃‖`, the square root of the top of `S_Ψ̃ C_Ψ̃` on the band.
pub fn dual_synthesis_norm(sys: &FrameSystem, iters: usize, seed: u64) -> Result<f64> {
    let op = |v: &Spectrum| -> Result<Spectrum> {
        let c = sys.analyze_spectrum(&v.project(&sys.band), true)?;
        Ok(sys.synthesize_spectrum(&c, true)?.project(&sys.band))
    };
    let (_, hi, _) = lanczos_extremes(&op, sys.random_band_spectrum(seed), iters)?;
    Ok(hi.max(0.0).sqrt())
}

fn normalize(x: &mut Spectrum) -> f64 {
    let n = x.norm();
    if n > 0.0 {
        x.scale(Complex64::new(1.0 / n, 0.0));
    }
    n
}

/// Smallest and largest Ritz values of a Hermitian operator.
fn lanczos_extremes(
    op: &dyn Fn(&Spectrum) -> Result<Spectrum>,
    mut x: Spectrum,
    iters: usize,
) -> Result<(f64, f64, bool)> {
    if normalize(&mut x) == 0.0 {
        return Ok((0.0, 0.0, false));
    }
    let mut basis: Vec<Spectrum> = vec![x];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..iters {
        let mut w = op(&basis[k])?;
        alpha.push(w.inner(&basis[k]).re);
        for _ in 0..2 {
            for v in &basis {
                let c = w.inner(v);
                for (wv, vv) in w.values.iter_mut().zip(&v.values) {
                    *wv -= vv * c;
                }
            }
        }
        let (lo, hi) = tridiagonal_extremes(&alpha, &beta);
        let bk = w.norm();
        let tol = 1e-12 * hi.abs();
        if ((lo - prev.0).abs() <= tol && (hi - prev.1).abs() <= tol) || bk <= tol {
            return Ok((lo, hi, true));
        }
        prev = (lo, hi);
        beta.push(bk);
        w.scale(Complex64::new(1.0 / bk, 0.0));
        basis.push(w);
    }
    Ok((prev.0, prev.1, false))
}

fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    let t = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let ev = t.symmetric_eigenvalues();
    (ev.iter().cloned().fold(f64::INFINITY, f64::min), ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Solves `P S P y = x` on the band.
pub fn conjugate_gradient(sys: &FrameSystem, x: &Spectrum, tol: f64, max_iter: usize) -> Result<Spectrum> {
    let rhs = x.project(&sys.band);
    let mut y = Spectrum::zeros(sys.grid);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.inner(&r).re;
    let stop = tol * tol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let sp = sys.frame_operator(&p)?;
        let alpha = rr / sp.inner(&p).re;
        for ((yv, pv), (rv, sv)) in y.values.iter_mut().zip(&p.values).zip(r.values.iter_mut().zip(&sp.values)) {
            *yv += pv * alpha;
            *rv -= sv * alpha;
        }
        let rr_new = r.inner(&r).re;
        let beta = rr_new / rr;
        for (pv, rv) in p.values.iter_mut().zip(&r.values) {
            *pv = rv + *pv * beta;
        }
        rr = rr_new;
    }
    Ok(y)
}

impl FrameBounds {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{generate, split, Generator, PeriodicBox};
    use crate::window::{build_h, PainlessConfig, Region};

    fn small_system(lattice: bool) -> FrameSystem {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let v = Region::symmetric_box(&[0.5]);
        let psi = build_h(&PainlessConfig::new(a.clone(), v, 0.1)).unwrap();
        let cell = PeriodicBox::new(vec![-2.0], vec![4.0]).unwrap();
        let kind = if lattice {
            Generator::Lattice { spacing: 0.4 }
        } else {
            Generator::Jittered { delta: 0.16, spacing: 0.25 }
        };
        let nodes = split(&generate(&kind, &cell, 3).unwrap(), &cell).unwrap();
        let grid = Grid::new(1, 32.0, 512).unwrap();
        let opts = DualOptions { b: 2.5, r_trunc: 12.0, r_dual: 12.0, tol: 1e-8 };
        FrameSystem::build(&psi, &a, &nodes, (-1, 1), grid, opts).unwrap()
    }

    #[test]
    fn single_atom_has_window_norm() {
        let sys = small_system(false);
        let mut c = sys.empty_coefficients();
        c.set(0, 3, Complex64::new(1.0, 0.0)).unwrap();
        let g = sys.synthesize_spectrum(&c, false).unwrap();
        let ps = sys.psi.dilate_translate(&sys.a, 0, &c.nodes[1][3], sys.grid).unwrap();
        assert!(g.sub(&ps).norm() < 1e-12);
        let back = sys.analyze_spectrum(&g, false).unwrap();
        assert!((back.values[1][3] - Complex64::new(ps.norm().powi(2), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn adjointness() {
        let sys = small_system(false);
        let f = sys.random_band_spectrum(1);
        let mut c = sys.empty_coefficients();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in c.values.iter_mut().flatten() {
            let re: f64 = StandardNormal.sample(&mut rng);
            *v = Complex64::new(re, re * 0.5);
        }
        let lhs = sys.synthesize_spectrum(&c, false).unwrap().inner(&f);
        let rhs = c.inner(&sys.analyze_spectrum(&f, false).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn reconstruction_both_directions() {
        let sys = small_system(false);
        let f = sys.random_band_signal(5);
        for dir in [Direction::DualSynthesis, Direction::DualAnalysis] {
            let r = sys.reconstruct(&f, dir).unwrap();
            assert!(r.rel_error < 1e-6, "{dir:?}: {}", r.rel_error);
            assert!(r.warning.is_none());
        }
    }

    #[test]
    fn lattice_bounds_match_symbol() {
        let sys = small_system(true);
        let sym = sys.lattice_symbol().unwrap();
        let on: Vec<f64> = sym.iter().zip(&sys.band).filter(|(_, b)| **b).map(|(s, _)| *s).collect();
        let lo = on.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = on.iter().cloned().fold(0.0, f64::max);
        let fb = estimate_frame_bounds(&sys, 1, 400, 0).unwrap();
        assert!((fb.b_hat - hi).abs() <= 1e-6 * hi, "{} vs {hi}", fb.b_hat);
        assert!((fb.a_hat - lo).abs() <= 1e-6 * hi, "{} vs {lo}", fb.a_hat);
    }
}
