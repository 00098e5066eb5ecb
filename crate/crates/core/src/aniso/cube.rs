use nalgebra::DMatrix;

use super::dilation::{mat_vec, ExpansiveDilation};
use crate::error::Result;

/// Parallelepiped `Q_{j,k} = A^j([0,1]^d + k)`.
#[derive(Clone, Debug)]
pub struct AnisoCube {
    pub j: i32,
    pub k: Vec<i64>,
    edges: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl AnisoCube {
    pub fn new(a: &ExpansiveDilation, j: i32, k: &[i64]) -> Result<Self> {
        Ok(Self {
            j,
            k: k.to_vec(),
            edges: a.matrix_power(j)?,
            inverse: a.matrix_power(-j)?,
        })
    }

    /// Lebesgue volume from the edge vectors.
    pub fn volume(&self) -> f64 {
        self.edges.determinant().abs()
    }

    /// All `2^d` vertices.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.k.len();
        (0..1usize << d)
            .map(|mask| {
                let u: Vec<f64> = (0..d)
                    .map(|i| self.k[i] as f64 + ((mask >> i) & 1) as f64)
                    .collect();
                mat_vec(&self.edges, &u)
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let u = mat_vec(&self.inverse, x);
        u.iter().zip(&self.k).all(|(v, &k)| {
            let t = v - k as f64;
            (0.0..1.0).contains(&t)
        })
    }
}

/// Index `k` of the scale-`j` cube containing `x`.
pub fn cube_index(a: &ExpansiveDilation, j: i32, x: &[f64]) -> Result<Vec<i64>> {
    Ok(a.apply(-j, x)?.iter().map(|v| v.floor() as i64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn volume_law() {
        let mats = [
            vec![vec![2.0]],
            vec![vec![-3.0]],
            vec![vec![0.0, -2.0], vec![1.0, 0.0]],
            vec![vec![2.0, 1.0], vec![0.0, 3.0]],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for rows in mats {
            let a = ExpansiveDilation::from_rows(&rows).unwrap();
            for j in -4..=4 {
                let k: Vec<i64> = (0..a.dim()).map(|_| rng.random_range(-20..20)).collect();
                let q = AnisoCube::new(&a, j, &k).unwrap();
                let want = a.det_abs().powi(j);
                assert!(((q.volume() - want) / want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cubes_tile() {
        let a = ExpansiveDilation::from_rows(&[vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            for j in -2..=2 {
                let k = cube_index(&a, j, &x).unwrap();
                let q = AnisoCube::new(&a, j, &k).unwrap();
                assert!(q.contains(&x));
                let mut k2 = k.clone();
                k2[0] += 1;
                assert!(!AnisoCube::new(&a, j, &k2).unwrap().contains(&x));
            }
        }
    }

    #[test]
    fn corners_scalar() {
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        let q = AnisoCube::new(&a, 2, &[3]).unwrap();
        let mut c: Vec<f64> = q.corners().into_iter().map(|v| v[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![12.0, 16.0]);
    }
}
