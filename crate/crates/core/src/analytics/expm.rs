//! Dense square matrices and the matrix exponential (Padé degree 13 with
//! scaling and squaring).

use alloc::vec;
use alloc::vec::Vec;

use crate::model::GraphSpec;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    /// Graph Laplacian: `L[v][u] = 1` for neighbours, `L[v][v] = -deg(v)`.
    pub fn laplacian(graph: &GraphSpec) -> Self {
        let n = graph.n_vertices();
        let mut m = Self::zeros(n);
        for v in 0..n {
            for &u in graph.neighbors(v) {
                m[(v, u)] += 1.0;
                m[(v, v)] -= 1.0;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scaled(&self, s: f64) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Self {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn add_diagonal(&self, diag: &[f64]) -> Self {
        assert_eq!(diag.len(), self.n);
        let mut m = self.clone();
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] += d;
        }
        m
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Self {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .expect("nonempty");
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    b.swap(col * n + k, pivot * n + k);
                }
            }
            let p = a[col * n + col];
            assert!(p != 0.0, "singular matrix");
            for r in (col + 1)..n {
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                for k in 0..n {
                    b[r * n + k] -= f * b[col * n + k];
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[col * n + col];
            for k in 0..n {
                b[col * n + k] /= p;
            }
            for r in 0..col {
                let f = a[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..n {
                    b[r * n + k] -= f * b[col * n + k];
                }
            }
        }
        Matrix { n, data: b }
    }

    /// `exp(self)`.
    pub fn expm(&self) -> Self {
        const THETA_13: f64 = 5.371_920_351_148_152;
        const B: [f64; 14] = [
            64_764_752_532_480_000.0,
            32_382_376_266_240_000.0,
            7_771_770_303_897_600.0,
            1_187_353_796_428_800.0,
            129_060_195_264_000.0,
            10_559_470_521_600.0,
            670_442_572_800.0,
            33_522_128_640.0,
            1_323_241_920.0,
            40_840_800.0,
            960_960.0,
            16_380.0,
            182.0,
            1.0,
        ];
        let n = self.n;
        if n == 0 {
            return self.clone();
        }
        let norm = self.norm1();
        let s = if norm > THETA_13 {
            crate::math::ceil(crate::math::ln(norm / THETA_13) / core::f64::consts::LN_2) as i32
        } else {
            0
        };
        let a = self.scaled(crate::math::powf(2.0, -(s as f64)));
        let id = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a4.mul(&a2);
        let u_inner = a6
            .scaled(B[13])
            .add_scaled(&a4, B[11])
            .add_scaled(&a2, B[9]);
        let u = a.mul(
            &a6.mul(&u_inner)
                .add_scaled(&a6, B[7])
                .add_scaled(&a4, B[5])
                .add_scaled(&a2, B[3])
                .add_scaled(&id, B[1]),
        );
        let v_inner = a6
            .scaled(B[12])
            .add_scaled(&a4, B[10])
            .add_scaled(&a2, B[8]);
        let v = a6
            .mul(&v_inner)
            .add_scaled(&a6, B[6])
            .add_scaled(&a4, B[4])
            .add_scaled(&a2, B[2])
            .add_scaled(&id, B[0]);
        let mut r = v.add_scaled(&u, -1.0).solve(&v.add(&u));
        for _ in 0..s {
            r = r.mul(&r);
        }
        r
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}
