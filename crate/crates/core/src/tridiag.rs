//! Real symmetric tridiagonal eigensolver: implicit QL with Wilkinson
//! shifts, accumulating the rotations into the eigenvectors.

use crate::{Error, Result};

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Eigenpairs of a symmetric tridiagonal matrix, sorted by ascending
/// eigenvalue. Eigenvector `j` is stored contiguously as row `j`.
#[derive(Clone, Debug)]
pub struct SymTridiagEigen {
    n: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl SymTridiagEigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Diagonalizes the matrix with diagonal `diag` and off-diagonal `off`
/// (`off[k]` couples `k` and `k + 1`).
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<SymTridiagEigen> {
    implicit_ql(diag, off, true)
}

/// Ascending eigenvalues only, without accumulating rotations.
pub fn sym_tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    Ok(implicit_ql(diag, off, false)?.values)
}

fn implicit_ql(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SymTridiagEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(SymTridiagEigen {
            n,
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    if off.len() + 1 != n {
        return Err(Error::param(
            "off",
            format!("expected {} off-diagonal entries, got {}", n - 1, off.len()),
        ));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = if want_vectors {
        vec![0.0; n * n]
    } else {
        Vec::new()
    };
    if want_vectors {
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
    }

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS_PER_VALUE {
                return Err(Error::NoConvergence(n));
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                if !want_vectors {
                    continue;
                }
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zj = &mut hi[..n];
                for k in 0..n {
                    let t = zj[k];
                    zj[k] = s * zi[k] + c * t;
                    zi[k] = c * zi[k] - s * t;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Vec::with_capacity(z.len());
    if want_vectors {
        for &j in &order {
            vectors.extend_from_slice(&z[j * n..(j + 1) * n]);
        }
    }
    Ok(SymTridiagEigen { n, values, vectors })
}
