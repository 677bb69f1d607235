//! The seven two-atom spin-tensor operators and their explicit matrices in the
//! uncoupled `|j m1>|j m2>` product space.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::wigner::{AngMom, cg};

/// Operator label `T_k^(i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TensorOp {
    pub k: u32,
    pub i: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("no spin-tensor operator with k={k}, i={i}")]
pub struct InvalidOp {
    pub k: u32,
    pub i: u32,
}

/// Strengths (or coefficients) ordered as [`TensorOp::ALL`].
pub type Strengths = [f64; 7];

impl TensorOp {
    /// Ordered as the rows of the dispersion-coefficient table.
    pub const ALL: [TensorOp; 7] = [
        TensorOp { k: 0, i: 1 },
        TensorOp { k: 2, i: 1 },
        TensorOp { k: 0, i: 2 },
        TensorOp { k: 2, i: 2 },
        TensorOp { k: 0, i: 3 },
        TensorOp { k: 2, i: 3 },
        TensorOp { k: 4, i: 1 },
    ];
    pub const ISO: TensorOp = TensorOp { k: 0, i: 1 };
    pub const ANISO: TensorOp = TensorOp { k: 2, i: 1 };

    pub fn new(k: u32, i: u32) -> Result<Self, InvalidOp> {
        let op = TensorOp { k, i };
        if Self::ALL.contains(&op) { Ok(op) } else { Err(InvalidOp { k, i }) }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&o| o == self).expect("valid operator")
    }

    /// Single-atom ranks `(l1, l2)` of the coupled products `[O_l1(1) x O_l2(2)]_k`
    /// whose sum forms this operator.
    pub fn components(self) -> &'static [(u32, u32)] {
        match (self.k, self.i) {
            (0, 1) => &[(0, 0)],
            (2, 1) => &[(2, 0), (0, 2)],
            (0, 2) | (2, 2) => &[(1, 1)],
            _ => &[(2, 2)],
        }
    }

    /// The five operators whose strengths follow long-range laws at all R.
    pub fn is_weak(self) -> bool {
        self != Self::ISO && self != Self::ANISO
    }
}

impl fmt::Display for TensorOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}({})", self.k, self.i)
    }
}

/// Single-atom operator component `O_lq` for `l = 0, 1, 2` (`I`, `j_q`, `[j x j]_2q`)
/// in the `|j m>` basis ordered by ascending `m`.
pub fn atom_operator(j: AngMom, l: u32, q: i32) -> DMatrix<f64> {
    let n = j.dim();
    match l {
        0 => {
            if q == 0 { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) }
        }
        1 => spherical_j(j, q),
        2 => {
            let mut out = DMatrix::zeros(n, n);
            for q1 in -1..=1 {
                let q2 = q - q1;
                if q2.abs() > 1 {
                    continue;
                }
                let c = cg(AngMom::ONE, AngMom::ONE, 2 * q1, 2 * q2, AngMom::TWO, 2 * q);
                if c != 0.0 {
                    out += c * spherical_j(j, q1) * spherical_j(j, q2);
                }
            }
            out
        }
        _ => panic!("no single-atom operator of rank {l}"),
    }
}

/// Spherical components `j_{+1} = -j_+/sqrt2`, `j_0 = j_z`, `j_{-1} = j_-/sqrt2`.
fn spherical_j(j: AngMom, q: i32) -> DMatrix<f64> {
    let n = j.dim();
    let jv = j.value();
    let ms: Vec<f64> = j.projections().map(|m| m as f64 / 2.0).collect();
    let mut out = DMatrix::zeros(n, n);
    match q {
        0 => {
            for a in 0..n {
                out[(a, a)] = ms[a];
            }
        }
        1 | -1 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for a in 0..n {
                let target = a as i32 + q;
                if target < 0 || target >= n as i32 {
                    continue;
                }
                let m = ms[a];
                let v = (jv * (jv + 1.0) - m * (m + q as f64)).sqrt();
                out[(target as usize, a)] = if q == 1 { -s * v } else { s * v };
            }
        }
        _ => {}
    }
    out
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `[O_l1(1) x O_l2(2)]_kq` in the product basis `|m1>|m2>` (index `a1*(2j+1)+a2`).
pub fn coupled_product(j: AngMom, l1: u32, l2: u32, k: u32, q: i32) -> DMatrix<f64> {
    let n = j.dim();
    let mut out = DMatrix::zeros(n * n, n * n);
    let (tl1, tl2, tk) = (AngMom::int(l1), AngMom::int(l2), AngMom::int(k));
    for q1 in -(l1 as i32)..=(l1 as i32) {
        let q2 = q - q1;
        if q2.unsigned_abs() > l2 {
            continue;
        }
        let c = cg(tl1, tl2, 2 * q1, 2 * q2, tk, 2 * q);
        if c != 0.0 {
            out += c * kron(&atom_operator(j, l1, q1), &atom_operator(j, l2, q2));
        }
    }
    out
}

/// Component `q` of operator `op` in the product basis.
pub fn product_operator(op: TensorOp, j: AngMom, q: i32) -> DMatrix<f64> {
    let n = j.dim();
    let mut out = DMatrix::zeros(n * n, n * n);
    for &(l1, l2) in op.components() {
        out += coupled_product(j, l1, l2, op.k, q);
    }
    out
}
