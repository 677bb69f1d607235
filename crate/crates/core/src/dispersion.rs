//! Anisotropic van-der-Waals coefficients from atomic line lists.

use rand::SeedableRng;
use rand::rngs::StdRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{Constants, ConstantsError, Species};
use crate::lines::{LineList, LinesError, dipole_partners, dipole_sq_per_strength};
use crate::tensor::{Strengths, TensorOp};
use crate::wigner::{AngMom, cg, parity, racah_w, wigner_9j};

#[derive(Debug, thiserror::Error)]
pub enum DispersionError {
    #[error("line list is empty")]
    EmptyLines,
    #[error("line lists belong to different ground states ({0} and {1})")]
    Heteronuclear(AngMom, AngMom),
    #[error(transparent)]
    Lines(#[from] LinesError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// The four independent coefficients used for the correlation matrix.
pub const INDEPENDENT: [TensorOp; 4] = [
    TensorOp { k: 0, i: 1 },
    TensorOp { k: 2, i: 1 },
    TensorOp { k: 0, i: 2 },
    TensorOp { k: 0, i: 3 },
];

/// Scalar factor `M(b,j;l)` relating the intermediate-state sums to `O_l`.
pub fn m_factor(b: AngMom, j: AngMom, l: u32) -> f64 {
    let (bv, jv) = (b.value(), j.value());
    let ratio = ((2.0 * bv + 1.0) / (2.0 * jv + 1.0)).sqrt();
    let phase = parity((b.twice() as i64 - j.twice() as i64) / 2);
    match l {
        0 => -phase * ratio / 3f64.sqrt(),
        1 => {
            if j.twice() == 0 {
                return 0.0;
            }
            let jj = jv * (jv + 1.0);
            phase / (2.0 * 2f64.sqrt()) * ratio * (2.0 + jj - bv * (bv + 1.0)) / jj
        }
        2 => {
            if j.twice() < 2 {
                return 0.0;
            }
            let one = AngMom::ONE;
            let num = racah_w(j, one, j, one, b, AngMom::TWO);
            let den = racah_w(j, one, j, one, j, AngMom::TWO);
            ratio * num / den / j.casimir()
        }
        _ => panic!("M(b,j;l) is defined for l = 0, 1, 2"),
    }
}

/// `h[b1][b2]` in `E_h a0^6`, indexed by the ground state's dipole partners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HMatrix {
    pub bs: Vec<AngMom>,
    pub h: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct Line {
    slot: usize,
    omega: f64,
    /// `|d|^2` per unit strength
    per: f64,
    strength: f64,
    u: f64,
}

fn prepare(lines: &LineList, c: &Constants) -> Result<(Vec<AngMom>, Vec<Line>), DispersionError> {
    let bs = dipole_partners(lines.ground_j);
    let mut out = Vec::with_capacity(lines.records.len());
    for r in &lines.records {
        let slot = bs.iter().position(|&b| b == r.j_excited).expect("validated by the parser");
        out.push(Line {
            slot,
            omega: r.delta_e / c.eh_to_cm(),
            per: dipole_sq_per_strength(r, lines.ground_j, c)?,
            strength: r.strength,
            u: r.u_strength,
        });
    }
    Ok((bs, out))
}

fn h_from(nb: usize, a: &[Line], xa: &[f64], b: &[Line], xb: &[f64]) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; nb]; nb];
    for (l1, &x1) in a.iter().zip(xa) {
        for (l2, &x2) in b.iter().zip(xb) {
            h[l1.slot][l2.slot] -= x1 * x2 / (l1.omega + l2.omega);
        }
    }
    h
}

pub fn h_matrix(lines1: &LineList, lines2: &LineList, c: &Constants) -> Result<HMatrix, DispersionError> {
    if lines1.records.is_empty() || lines2.records.is_empty() {
        return Err(DispersionError::EmptyLines);
    }
    let (bs1, a) = prepare(lines1, c)?;
    let (bs2, b) = prepare(lines2, c)?;
    if bs1 != bs2 {
        return Err(DispersionError::Heteronuclear(lines1.ground_j, lines2.ground_j));
    }
    let xa: Vec<f64> = a.iter().map(|l| l.per * l.strength).collect();
    let xb: Vec<f64> = b.iter().map(|l| l.per * l.strength).collect();
    Ok(HMatrix { h: h_from(bs1.len(), &a, &xa, &b, &xb), bs: bs1 })
}

/// `C = pre * sum g[b1][b2] h[b1][b2]` for the coupled product `(k, l1, l2)`.
/// Only `pre` depends on `k`, so operators built from the same `(l1, l2)`
/// share the sum and their ratios are exact.
struct Weights {
    pre: f64,
    g: Vec<Vec<f64>>,
}

fn weights_klm(j: AngMom, bs: &[AngMom], k: u32, l1: u32, l2: u32) -> Weights {
    let one = AngMom::ONE;
    let two = AngMom::TWO;
    let nine = wigner_9j(one, one, AngMom::int(l1), one, one, AngMom::int(l2), two, two, AngMom::int(k));
    let clebsch = cg(two, two, 0, 0, AngMom::int(k), 0);
    let pre = 30.0 * (((2 * l1 + 1) * (2 * l2 + 1)) as f64).sqrt() / (j.twice() + 1) as f64 * nine * clebsch;
    let term = |b: AngMom, l: u32| {
        parity((b.twice() as i64 - j.twice() as i64) / 2) / ((b.twice() + 1) as f64).sqrt() * m_factor(b, j, l)
    };
    let g = bs.iter().map(|&b1| bs.iter().map(|&b2| term(b1, l1) * term(b2, l2)).collect()).collect();
    Weights { pre, g }
}

/// Weights for each of the seven operators. For `C2(1)` the `(l1,l2) = (2,0)`
/// product is used; its mirror `(0,2)` carries the same coefficient for a
/// homonuclear pair and both together form the operator.
fn op_weights(j: AngMom, bs: &[AngMom]) -> Vec<Weights> {
    TensorOp::ALL
        .iter()
        .map(|op| {
            let (l1, l2) = op.components()[0];
            weights_klm(j, bs, op.k, l1, l2)
        })
        .collect()
}

fn contract(w: &[Weights], h: &[Vec<f64>]) -> Strengths {
    let mut c = [0.0; 7];
    for (t, wt) in w.iter().enumerate() {
        c[t] = wt.pre * wt.g.iter().zip(h).map(|(wr, hr)| wr.iter().zip(hr).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>();
    }
    c
}

/// Dispersion coefficients with one-sigma uncertainties and correlations, `E_h a0^6`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionSet {
    pub ground_j: AngMom,
    pub c: Strengths,
    pub u: Strengths,
    /// Correlations among [`INDEPENDENT`].
    pub corr: [[f64; 4]; 4],
}

impl DispersionSet {
    pub fn get(&self, op: TensorOp) -> f64 {
        self.c[op.index()]
    }

    pub fn uncertainty(&self, op: TensorOp) -> f64 {
        self.u[op.index()]
    }

    /// `C_ss = C0(1) + (2j)(2j-1) C2(1)/sqrt6`, the spin-stretched `C6`.
    pub fn c_ss(&self) -> f64 {
        let tj = self.ground_j.twice() as f64;
        self.c[0] + tj * (tj - 1.0) * self.c[1] / 6f64.sqrt()
    }
}

/// Central values only.
pub fn coefficients(lines: &LineList, c: &Constants) -> Result<Strengths, DispersionError> {
    if lines.records.is_empty() {
        return Err(DispersionError::EmptyLines);
    }
    let (bs, ls) = prepare(lines, c)?;
    let x: Vec<f64> = ls.iter().map(|l| l.per * l.strength).collect();
    let h = h_from(bs.len(), &ls, &x, &ls, &x);
    Ok(contract(&op_weights(lines.ground_j, &bs), &h))
}

pub fn vdw_coefficients(lines: &LineList, c: &Constants) -> Result<DispersionSet, DispersionError> {
    let central = coefficients(lines, c)?;
    let (u, corr) = propagate_uncertainties(lines, c)?;
    Ok(DispersionSet { ground_j: lines.ground_j, c: central, u, corr })
}

/// Jacobian `dC_t/ds_n` with respect to every line strength.
fn jacobian(lines: &LineList, c: &Constants) -> Result<(Vec<[f64; 7]>, Vec<f64>), DispersionError> {
    if lines.records.is_empty() {
        return Err(DispersionError::EmptyLines);
    }
    let (bs, ls) = prepare(lines, c)?;
    let nb = bs.len();
    let w = op_weights(lines.ground_j, &bs);
    let x: Vec<f64> = ls.iter().map(|l| l.per * l.strength).collect();
    let mut rows = Vec::with_capacity(ls.len());
    for ln in &ls {
        // g[b] = sum over lines m in b of x_m / (-omega_n - omega_m)
        let mut g = vec![0.0; nb];
        for (lm, &xm) in ls.iter().zip(&x) {
            g[lm.slot] -= xm / (ln.omega + lm.omega);
        }
        let mut row = [0.0; 7];
        for (t, wt) in w.iter().enumerate() {
            let mut d = 0.0;
            for (b2, gb) in g.iter().enumerate() {
                d += (wt.g[ln.slot][b2] + wt.g[b2][ln.slot]) * gb;
            }
            row[t] = wt.pre * d * ln.per;
        }
        rows.push(row);
    }
    Ok((rows, ls.iter().map(|l| l.u).collect()))
}

fn correlations(cov: &[[f64; 7]; 7]) -> ([f64; 7], [[f64; 4]; 4]) {
    let u: [f64; 7] = std::array::from_fn(|t| cov[t][t].max(0.0).sqrt());
    let idx = INDEPENDENT.map(|op| op.index());
    let corr = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            if a == b {
                1.0
            } else {
                let (p, q) = (idx[a], idx[b]);
                let d = u[p] * u[q];
                if d > 0.0 { (cov[p][q] / d).clamp(-1.0, 1.0) } else { 0.0 }
            }
        })
    });
    (u, corr)
}

/// First-order propagation with independent line-strength uncertainties.
pub fn propagate_uncertainties(lines: &LineList, c: &Constants) -> Result<(Strengths, [[f64; 4]; 4]), DispersionError> {
    let (rows, us) = jacobian(lines, c)?;
    let mut cov = [[0.0; 7]; 7];
    for (row, u) in rows.iter().zip(&us) {
        for a in 0..7 {
            for b in 0..7 {
                cov[a][b] += row[a] * row[b] * u * u;
            }
        }
    }
    Ok(correlations(&cov))
}

/// Monte-Carlo propagation: each strength is redrawn from an independent
/// normal distribution with its stated one-sigma uncertainty.
pub fn monte_carlo_uncertainties(
    lines: &LineList,
    c: &Constants,
    samples: usize,
    seed: u64,
) -> Result<(Strengths, [[f64; 4]; 4]), DispersionError> {
    if lines.records.is_empty() {
        return Err(DispersionError::EmptyLines);
    }
    let (bs, ls) = prepare(lines, c)?;
    let w = op_weights(lines.ground_j, &bs);
    const CHUNK: usize = 1024;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<([f64; 7], [[f64; 7]; 7], usize)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(ci as u64));
            let dists: Vec<Normal<f64>> = ls.iter().map(|l| Normal::new(l.strength, l.u).unwrap()).collect();
            let n = CHUNK.min(samples - ci * CHUNK);
            let mut sum = [0.0; 7];
            let mut sq = [[0.0; 7]; 7];
            let mut x = vec![0.0; ls.len()];
            for _ in 0..n {
                for ((xi, l), d) in x.iter_mut().zip(&ls).zip(&dists) {
                    *xi = l.per * d.sample(&mut rng);
                }
                let cs = contract(&w, &h_from(bs.len(), &ls, &x, &ls, &x));
                for a in 0..7 {
                    sum[a] += cs[a];
                    for b in 0..7 {
                        sq[a][b] += cs[a] * cs[b];
                    }
                }
            }
            (sum, sq, n)
        })
        .collect();
    let mut sum = [0.0; 7];
    let mut sq = [[0.0; 7]; 7];
    let mut n = 0usize;
    for (s, q, k) in partial {
        n += k;
        for a in 0..7 {
            sum[a] += s[a];
            for b in 0..7 {
                sq[a][b] += q[a][b];
            }
        }
    }
    let nf = n as f64;
    let cov: [[f64; 7]; 7] =
        std::array::from_fn(|a| std::array::from_fn(|b| (sq[a][b] - sum[a] * sum[b] / nf) / (nf - 1.0)));
    Ok(correlations(&cov))
}

/// Magnetic dipole-dipole `D2(2)` (`E_h a0^3`) and quadrupole-quadrupole `Q4(1)` (`E_h a0^5`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongRangeExtras {
    pub d2_2: f64,
    pub q4_1: f64,
}

pub fn long_range_extras(species: Species, c: &Constants) -> Result<LongRangeExtras, DispersionError> {
    let s = c.species(species)?;
    Ok(extras_from(s.g_j, s.quadrupole, AngMom::from_twice(s.two_j), c.codata.fine_structure))
}

pub fn extras_from(g_j: f64, quadrupole: f64, j: AngMom, alpha: f64) -> LongRangeExtras {
    let d2_2 = -(6f64.sqrt()) * alpha * alpha * (g_j / 2.0).powi(2);
    let jv = j.value();
    let q4_1 = if j.twice() < 2 {
        0.0
    } else {
        6.0 * 70f64.sqrt() * quadrupole * quadrupole / (jv * jv * (2.0 * jv - 1.0).powi(2))
    };
    LongRangeExtras { d2_2, q4_1 }
}
