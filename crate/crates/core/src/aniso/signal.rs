use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dilation::ExpansiveDilation;
use crate::error::{Error, Result};

/// Periodic box `[-T/2, T/2)^d` with `N` samples per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub box_size: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: usize, box_size: f64, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidInput(format!("dimension {d} unsupported (1 or 2)")));
        }
        if !(box_size > 0.0 && box_size.is_finite()) {
            return Err(Error::InvalidInput("box size must be positive".into()));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidInput("grid size must be even and >= 2".into()));
        }
        Ok(Self { d, box_size, n })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.box_size / self.n as f64
    }

    pub fn dw(&self) -> f64 {
        1.0 / self.box_size
    }

    /// Highest representable frequency `N/(2T)`.
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / (2.0 * self.box_size)
    }

    /// Multi-index of a flat (row-major) position.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn flatten(&self, ii: &[usize]) -> usize {
        if self.d == 1 {
            ii[0]
        } else {
            ii[0] * self.n + ii[1]
        }
    }

    /// Spatial coordinate of sample `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ii = self.unflatten(idx);
        let h = self.dx();
        let x = |i: usize| -self.box_size / 2.0 + i as f64 * h;
        [x(ii[0]), if self.d == 2 { x(ii[1]) } else { 0.0 }]
    }

    /// Integer frequency index `m` (in `[-N/2, N/2)`) of centered position `idx`.
    pub fn freq_index(&self, idx: usize) -> [i64; 2] {
        let ii = self.unflatten(idx);
        let half = (self.n / 2) as i64;
        [ii[0] as i64 - half, if self.d == 2 { ii[1] as i64 - half } else { 0 }]
    }

    /// Frequency `m/T` of centered position `idx`.
    pub fn freq(&self, idx: usize) -> [f64; 2] {
        let m = self.freq_index(idx);
        [m[0] as f64 / self.box_size, m[1] as f64 / self.box_size]
    }

    /// Centered position of integer frequency index `m`, if on the grid.
    pub fn position_of(&self, m: &[i64]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let mut ii = [0usize; 2];
        for a in 0..self.d {
            let v = m[a] + half;
            if v < 0 || v >= self.n as i64 {
                return None;
            }
            ii[a] = v as usize;
        }
        Some(self.flatten(&ii))
    }

    fn cell(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    fn freq_cell(&self) -> f64 {
        self.dw().powi(self.d as i32)
    }
}

/// Samples of a function on the grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

/// Fourier coefficients `f̂(m/T)` in centered order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.d])).collect();
        Self { grid, values }
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>()
            * self.grid.cell()
    }

    pub fn spectrum(&self) -> Spectrum {
        let g = self.grid;
        let mut buf = self.values.clone();
        fft_nd(&mut buf, g.n, g.d, false);
        let scale = g.cell();
        let half = g.n / 2;
        let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
        for (idx, v) in values.iter_mut().enumerate() {
            let ii = g.unflatten(idx);
            let m = g.freq_index(idx);
            let src: Vec<usize> = (0..g.d).map(|a| (ii[a] + half) % g.n).collect();
            let sign = if (m[0] + m[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v = buf[g.flatten(&src)] * (scale * sign);
        }
        Spectrum { grid: g, values }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Sample `f` at every grid frequency.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.freq(i)[..grid.d])).collect();
        Self { grid, values }
    }

    pub fn to_signal(&self) -> SampledSignal {
        let g = self.grid;
        let half = g.n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); g.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let ii = g.unflatten(idx);
            let m = g.freq_index(idx);
            let dst: Vec<usize> = (0..g.d).map(|a| (ii[a] + half) % g.n).collect();
            let sign = if (m[0] + m[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[g.flatten(&dst)] = v * sign;
        }
        fft_nd(&mut buf, g.n, g.d, true);
        let scale = g.freq_cell();
        for v in buf.iter_mut() {
            *v *= scale;
        }
        SampledSignal { grid: g, values: buf }
    }

    /// `L²` norm via Plancherel.
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.freq_cell()).sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>()
            * self.grid.freq_cell()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in self.values.iter_mut() {
            *a *= s;
        }
    }

    /// Zero every coefficient where `mask` is false.
    pub fn project(&self, mask: &[bool]) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(mask)
                .map(|(v, &m)| if m { *v } else { Complex64::new(0.0, 0.0) })
                .collect(),
        }
    }
}

/// In-place multidimensional FFT (unnormalised both ways).
pub fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    match d {
        1 => fft.process(data),
        2 => {
            fft.process(data);
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("dimension checked by Grid::new"),
    }
}

/// `D_{A^j} T_λ f` by spectral lookup: the output at `w` is
/// `|det A|^{j/2} e^{-2πi λ·(A^t)^j w} f̂((A^t)^j w)`.
///
/// Fails with an aliasing error when a required input frequency falls between
/// grid points inside the support of `f̂`, or when part of `f̂` has no image on
/// the grid.
pub fn dilate_translate_spectrum(
    f: &Spectrum,
    a: &ExpansiveDilation,
    j: i32,
    lambda: &[f64],
) -> Result<Spectrum> {
    let g = f.grid;
    if a.dim() != g.d || lambda.len() != g.d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let at = a.transpose_power_ref(j)?;
    let peak = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let thr = 1e-13 * peak;
    let gain = a.det_abs().powf(j as f64 / 2.0);
    let mut used = vec![false; g.len()];
    let mut out = Spectrum::zeros(g);
    for idx in 0..g.len() {
        let m = g.freq_index(idx);
        let t: Vec<f64> = (0..g.d)
            .map(|r| (0..g.d).map(|c| at[(r, c)] * m[c] as f64).sum())
            .collect();
        let rounded: Vec<i64> = t.iter().map(|v| v.round() as i64).collect();
        let integral = t.iter().zip(&rounded).all(|(v, r)| (v - *r as f64).abs() < 1e-9);
        let w: Vec<f64> = t.iter().map(|v| v / g.box_size).collect();
        if integral {
            if let Some(pos) = g.position_of(&rounded) {
                used[pos] = true;
                let phase: f64 = lambda.iter().zip(&w).map(|(l, u)| l * u).sum();
                out.values[idx] =
                    f.values[pos] * Complex64::from_polar(gain, -2.0 * std::f64::consts::PI * phase);
            }
            continue;
        }
        // off-grid target: acceptable only where f̂ vanishes on the enclosing cell
        for mask in 0..(1usize << g.d) {
            let corner: Vec<i64> = (0..g.d)
                .map(|a| if (mask >> a) & 1 == 1 { t[a].ceil() as i64 } else { t[a].floor() as i64 })
                .collect();
            if let Some(pos) = g.position_of(&corner) {
                if f.values[pos].norm() > thr {
                    return Err(Error::Aliasing { scale: j, frequency: w });
                }
            }
        }
    }
    for (pos, v) in f.values.iter().enumerate() {
        if !used[pos] && v.norm() > thr {
            let m = g.freq_index(pos);
            return Err(Error::Aliasing {
                scale: j,
                frequency: (0..g.d).map(|a| m[a] as f64 / g.box_size).collect(),
            });
        }
    }
    Ok(out)
}

/// Time-domain wrapper around [`dilate_translate_spectrum`].
pub fn dilate_translate(
    f: &SampledSignal,
    a: &ExpansiveDilation,
    j: i32,
    lambda: &[f64],
) -> Result<SampledSignal> {
    Ok(dilate_translate_spectrum(&f.spectrum(), a, j, lambda)?.to_signal())
}

const MAGIC: &[u8; 4] = b"ANIF";
const VERSION: u32 = 1;

impl SampledSignal {
    /// Binary form: 32-byte header then little-endian `(re, im)` pairs.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let mut header = [0u8; 32];
        header[0..4].copy_from_slice(MAGIC);
        header[4..8].copy_from_slice(&VERSION.to_le_bytes());
        header[8..12].copy_from_slice(&(self.grid.d as u32).to_le_bytes());
        header[12..16].copy_from_slice(&(self.grid.n as u32).to_le_bytes());
        header[16..24].copy_from_slice(&self.grid.box_size.to_le_bytes());
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            body.extend_from_slice(&v.re.to_le_bytes());
            body.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::Parse("bad signal magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(Error::Parse(format!("unsupported signal version {}", u32_at(4))));
        }
        let d = u32_at(8) as usize;
        let n = u32_at(12) as usize;
        let t = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let grid = Grid::new(d, t, n).map_err(|e| Error::Parse(e.to_string()))?;
        let mut body = vec![0u8; grid.len() * 16];
        r.read_exact(&mut body)?;
        let values = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Self { grid, values })
    }

    /// CSV with header `x[,y],re,im`, one sample per row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let head = if self.grid.d == 1 { "x,re,im" } else { "x,y,re,im" };
        writeln!(w, "{head}")?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            if self.grid.d == 1 {
                writeln!(w, "{:e},{:e},{:e}", p[0], v.re, v.im)?;
            } else {
                writeln!(w, "{:e},{:e},{:e},{:e}", p[0], p[1], v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv) for the given grid.
    pub fn read_csv(grid: Grid, r: impl Read) -> Result<Self> {
        let text = {
            let mut s = String::new();
            let mut r = r;
            r.read_to_string(&mut s)?;
            s
        };
        let mut values = Vec::with_capacity(grid.len());
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != grid.d + 2 {
                return Err(Error::Parse(format!("line {}: expected {} columns", ln + 1, grid.d + 2)));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))
            };
            values.push(Complex64::new(num(cols[grid.d])?, num(cols[grid.d + 1])?));
        }
        if values.len() != grid.len() {
            return Err(Error::Parse(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let w = std::io::BufWriter::new(f);
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            self.write_csv(w)
        } else {
            self.write_binary(w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(grid: Grid, s: f64) -> SampledSignal {
        SampledSignal::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 / (2.0 * s * s)).exp(), 0.0)
        })
    }

    #[test]
    fn spectrum_of_gaussian() {
        let g = Grid::new(1, 32.0, 1024).unwrap();
        let f = gauss(g, 1.0);
        let s = f.spectrum();
        for idx in (0..g.len()).step_by(37) {
            let w = g.freq(idx)[0];
            let want = (2.0 * PI).sqrt() * (-2.0 * PI * PI * w * w).exp();
            assert!((s.values[idx].re - want).abs() < 1e-12, "w={w}");
            assert!(s.values[idx].im.abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_roundtrip() {
        for d in [1, 2] {
            let g = Grid::new(d, 16.0, if d == 1 { 512 } else { 64 }).unwrap();
            let f = SampledSignal::from_fn(g, |x| {
                Complex64::new(x[0].sin() * (-x[0] * x[0] / 4.0).exp(), 0.3 * x[0].cos())
            });
            let s = f.spectrum();
            assert!(((f.norm() - s.norm()) / f.norm()).abs() < 1e-12);
            let back = s.to_signal();
            let err = back.sub(&f).norm() / f.norm();
            assert!(err < 1e-13, "d={d} err={err}");
        }
    }

    #[test]
    fn identity_dilation() {
        let g = Grid::new(1, 32.0, 256).unwrap();
        let f = gauss(g, 0.7);
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let out = dilate_translate(&f, &a, 0, &[0.0]).unwrap();
        let err = out.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn translation_is_unitary() {
        let g = Grid::new(1, 32.0, 256).unwrap();
        let f = gauss(g, 0.7);
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        for lam in [0.3, -2.71, 5.5] {
            let out = dilate_translate(&f, &a, 0, &[lam]).unwrap();
            assert!(((out.norm() - f.norm()) / f.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_on_sparse_spectrum() {
        // f̂ supported on multiples of 4, so two spreading steps stay on the grid
        let g = Grid::new(1, 32.0, 256).unwrap();
        let mut s = Spectrum::zeros(g);
        for idx in 0..g.len() {
            let m = g.freq_index(idx)[0];
            if m % 4 == 0 && (8..80).contains(&m.abs()) {
                s.values[idx] = Complex64::new(1.0 / (1.0 + m.abs() as f64 * 0.1), 0.2);
            }
        }
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let once = dilate_translate_spectrum(&s, &a, 1, &[0.4]).unwrap();
        let twice = dilate_translate_spectrum(&once, &a, 1, &[0.0]).unwrap();
        let direct = dilate_translate_spectrum(&s, &a, 2, &[0.4]).unwrap();
        let err = twice.sub(&direct).norm() / direct.norm();
        assert!(err < 1e-12, "err={err}");
    }

    #[test]
    fn off_grid_is_aliasing() {
        let g = Grid::new(1, 32.0, 256).unwrap();
        let f = gauss(g, 0.7);
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        assert!(matches!(dilate_translate(&f, &a, -1, &[0.0]), Err(Error::Aliasing { .. })));
        assert!(matches!(dilate_translate(&f, &a, 1, &[0.0]), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn binary_and_csv_roundtrip() {
        let g = Grid::new(2, 4.0, 8).unwrap();
        let f = SampledSignal::from_fn(g, |x| Complex64::new(x[0], x[1] * 0.5));
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 16 * 64);
        assert_eq!(&buf[0..4], b"ANIF");
        assert_eq!(SampledSignal::read_binary(&buf[..]).unwrap(), f);
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let back = SampledSignal::read_csv(g, &csv[..]).unwrap();
        assert_eq!(back.values, f.values);
        assert!(SampledSignal::read_binary(&b"XXXX"[..]).is_err());
    }
}
