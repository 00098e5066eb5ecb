use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `|j|` for cached powers.
pub const DEFAULT_MAX_SCALE: i32 = 16;

const OVERFLOW: f64 = 1e300;

/// Expansive matrix `A` with cached powers `A^j` and `(A^t)^j`.
#[derive(Clone, Debug)]
pub struct ExpansiveDilation {
    entries: DMatrix<f64>,
    det_abs: f64,
    eig_moduli: Vec<f64>,
    max_scale: i32,
    // index j + max_scale; None where the power overflowed
    powers: Vec<Option<DMatrix<f64>>>,
    tpowers: Vec<Option<DMatrix<f64>>>,
}

/// Row-major serialisable form of a dilation matrix.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixSpec(pub Vec<Vec<f64>>);

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.0.len();
        if d == 0 {
            return Err(Error::InvalidInput("matrix has no rows".into()));
        }
        if self.0.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        Ok(DMatrix::from_fn(d, d, |i, k| self.0[i][k]))
    }
}

/// Validate `a` and build the dilation, rejecting eigenvalues of modulus `<= 1`.
pub fn check_expansive(a: &DMatrix<f64>) -> Result<ExpansiveDilation> {
    ExpansiveDilation::with_max_scale(a, DEFAULT_MAX_SCALE)
}

impl ExpansiveDilation {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        check_expansive(&MatrixSpec(rows.to_vec()).to_matrix()?)
    }

    pub fn scalar(a: f64) -> Result<Self> {
        check_expansive(&DMatrix::from_element(1, 1, a))
    }

    pub fn with_max_scale(a: &DMatrix<f64>, max_scale: i32) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        if max_scale < 1 {
            return Err(Error::InvalidInput("max scale must be at least 1".into()));
        }
        let det = a.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::InvalidInput("matrix is singular".into()));
        }
        let eig_moduli = eigen_moduli(a);
        let min_mod = eig_moduli.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_mod <= 1.0 + 1e-12 {
            return Err(Error::NotExpansive { modulus: min_mod });
        }
        let inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("matrix is singular".into()))?;
        let powers = power_table(a, &inv, max_scale);
        let at = a.transpose();
        let powers_t = power_table(&at, &inv.transpose(), max_scale);
        Ok(Self {
            entries: a.clone(),
            det_abs: det.abs(),
            eig_moduli,
            max_scale,
            powers,
            tpowers: powers_t,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn det_abs(&self) -> f64 {
        self.det_abs
    }

    pub fn eig_moduli(&self) -> &[f64] {
        &self.eig_moduli
    }

    pub fn max_scale(&self) -> i32 {
        self.max_scale
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|k| self.entries[(i, k)]).collect()).collect()
    }

    fn lookup<'a>(&self, table: &'a [Option<DMatrix<f64>>], j: i32) -> Result<&'a DMatrix<f64>> {
        if j.abs() > self.max_scale {
            return Err(Error::ScaleRange { j, max: self.max_scale });
        }
        table[(j + self.max_scale) as usize]
            .as_ref()
            .ok_or(Error::ScaleRange { j, max: self.max_scale })
    }

    /// `A^j`; negative `j` gives inverse powers.
    pub fn matrix_power(&self, j: i32) -> Result<DMatrix<f64>> {
        self.lookup(&self.powers, j).cloned()
    }

    /// `(A^t)^j`.
    pub fn transpose_power(&self, j: i32) -> Result<DMatrix<f64>> {
        self.lookup(&self.tpowers, j).cloned()
    }

    pub fn power_ref(&self, j: i32) -> Result<&DMatrix<f64>> {
        self.lookup(&self.powers, j)
    }

    pub fn transpose_power_ref(&self, j: i32) -> Result<&DMatrix<f64>> {
        self.lookup(&self.tpowers, j)
    }

    /// `A^j x`.
    pub fn apply(&self, j: i32, x: &[f64]) -> Result<Vec<f64>> {
        Ok(mat_vec(self.power_ref(j)?, x))
    }

    /// `(A^t)^j w`.
    pub fn apply_transpose(&self, j: i32, w: &[f64]) -> Result<Vec<f64>> {
        Ok(mat_vec(self.transpose_power_ref(j)?, w))
    }

    /// `|det A|^j`.
    pub fn det_pow(&self, j: i32) -> f64 {
        self.det_abs.powi(j)
    }

    /// Spectral norm of `(A^t)^j`.
    pub fn transpose_power_norm(&self, j: i32) -> Result<f64> {
        Ok(spectral_norm(self.transpose_power_ref(j)?))
    }
}

fn power_table(a: &DMatrix<f64>, inv: &DMatrix<f64>, max_scale: i32) -> Vec<Option<DMatrix<f64>>> {
    let d = a.nrows();
    let mut table = vec![None; (2 * max_scale + 1) as usize];
    let mid = max_scale as usize;
    table[mid] = Some(DMatrix::identity(d, d));
    for (base, sign) in [(a, 1i32), (inv, -1i32)] {
        let mut cur = DMatrix::identity(d, d);
        for step in 1..=max_scale {
            cur = base * &cur;
            if cur.iter().any(|v| !v.is_finite() || v.abs() > OVERFLOW) {
                break;
            }
            table[(mid as i32 + sign * step) as usize] = Some(cur.clone());
        }
    }
    table
}

fn eigen_moduli(a: &DMatrix<f64>) -> Vec<f64> {
    match a.nrows() {
        1 => vec![a[(0, 0)].abs()],
        2 => {
            let tr = a[(0, 0)] + a[(1, 1)];
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                vec![(tr / 2.0 + s).abs(), (tr / 2.0 - s).abs()]
            } else {
                let m = det.abs().sqrt();
                vec![m, m]
            }
        }
        _ => a.complex_eigenvalues().iter().map(|z| z.norm()).collect(),
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    (0..d).map(|i| (0..d).map(|k| m[(i, k)] * x[k]).sum()).collect()
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_accepted() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        assert_eq!(a.eig_moduli(), &[2.0]);
        assert_eq!(a.det_abs(), 2.0);
    }

    #[test]
    fn unipotent_rejected() {
        let err = ExpansiveDilation::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap_err();
        match err {
            Error::NotExpansive { modulus } => assert!((modulus - 1.0).abs() < 1e-12),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rotation_like_accepted() {
        let a = ExpansiveDilation::from_rows(&[vec![0.0, -2.0], vec![1.0, 0.0]]).unwrap();
        for m in a.eig_moduli() {
            assert!((m - 2f64.sqrt()).abs() < 1e-14);
        }
        let p = a.matrix_power(2).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -2.0]));
    }

    #[test]
    fn singular_and_nonfinite_rejected() {
        assert!(matches!(
            ExpansiveDilation::from_rows(&[vec![2.0, 4.0], vec![1.0, 2.0]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(ExpansiveDilation::scalar(f64::NAN), Err(Error::InvalidInput(_))));
        assert!(matches!(
            ExpansiveDilation::from_rows(&[vec![2.0, 0.0]]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn scalar_powers() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        assert_eq!(a.matrix_power(3).unwrap()[(0, 0)], 8.0);
        assert_eq!(a.matrix_power(-1).unwrap()[(0, 0)], 0.5);
        assert_eq!(a.matrix_power(0).unwrap()[(0, 0)], 1.0);
        assert!(matches!(a.matrix_power(17), Err(Error::ScaleRange { .. })));
    }

    #[test]
    fn inverse_powers_compose() {
        let a = ExpansiveDilation::from_rows(&[vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap();
        for j in -12..=12 {
            let prod = a.matrix_power(j).unwrap() * a.matrix_power(-j).unwrap();
            let err = (prod - DMatrix::<f64>::identity(2, 2)).abs().max();
            assert!(err < 1e-12, "j={j} err={err}");
        }
    }

    #[test]
    fn overflow_is_scale_error() {
        let a = ExpansiveDilation::with_max_scale(&DMatrix::from_element(1, 1, 1e200), 4).unwrap();
        assert!(a.matrix_power(1).is_ok());
        assert!(matches!(a.matrix_power(2), Err(Error::ScaleRange { .. })));
        assert!(a.matrix_power(-1).is_ok());
    }

    #[test]
    fn det_is_product_of_moduli() {
        let a = ExpansiveDilation::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let prod: f64 = a.eig_moduli().iter().product();
        assert!((prod - a.det_abs()).abs() < 1e-12);
    }
}
