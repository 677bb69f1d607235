//! Brute-force evaluation of the channel coupling matrices in the uncoupled
//! `|j m1>|j m2>|l ml>` basis, with the angular integrals done by quadrature.

#![allow(dead_code)]

pub mod reference;

use std::collections::HashMap;
use std::f64::consts::PI;

use lndimer::rovib::Channel;
use lndimer::tensor::product_operator;
use lndimer::{AngMom, TensorOp};
use nalgebra::DMatrix;

fn fact(n: i64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Racah's formula with integer or half-integer arguments given doubled.
pub fn cg2(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> f64 {
    if tm1 + tm2 != tm || tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let pre = ((tj + 1) as f64 * fact(h(tj1 + tj2 - tj)) * fact(h(tj1 - tj2 + tj)) * fact(h(-tj1 + tj2 + tj))
        / fact(h(tj1 + tj2 + tj) + 1))
        .sqrt()
        * (fact(h(tj1 + tm1)) * fact(h(tj1 - tm1)) * fact(h(tj2 + tm2)) * fact(h(tj2 - tm2)) * fact(h(tj + tm)) * fact(h(tj - tm)))
            .sqrt();
    let mut s = 0.0;
    for k in 0..=(tj1 + tj2) {
        let d = [
            k,
            h(tj1 + tj2 - tj) - k,
            h(tj1 - tm1) - k,
            h(tj2 + tm2) - k,
            h(tj - tj2 + tm1) + k,
            h(tj - tj1 - tm2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign / d.iter().map(|&x| fact(x)).product::<f64>();
    }
    pre * s
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_derivative(n, x);
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Associated Legendre function with the Condon-Shortley phase, `m >= 0`.
fn assoc_legendre(l: i64, m: i64, x: f64) -> f64 {
    let mut pmm = 1.0;
    let s = (1.0 - x * x).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut out = 0.0;
    for ll in (m + 2)..=l {
        out = (x * (2 * ll - 1) as f64 * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = out;
    }
    out
}

/// `Y_lm(theta, phi)` as `(re, im)`.
pub fn ylm(l: i64, m: i64, x: f64, phi: f64) -> (f64, f64) {
    let am = m.abs();
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * fact(l - am) / fact(l + am)).sqrt();
    let mut p = norm * assoc_legendre(l, am, x);
    if m < 0 && am % 2 == 1 {
        p = -p;
    }
    (p * (m as f64 * phi).cos(), p * (m as f64 * phi).sin())
}

/// `<l' m'| C_kq |l m>` by quadrature over the sphere.
#[allow(clippy::too_many_arguments)]
pub fn angular_integral(lp: i64, mp: i64, k: i64, q: i64, l: i64, m: i64, quad: &[(f64, f64)], nphi: usize) -> f64 {
    let c = (4.0 * PI / (2 * k + 1) as f64).sqrt();
    let mut re = 0.0;
    let mut im = 0.0;
    let dphi = 2.0 * PI / nphi as f64;
    for &(x, w) in quad {
        for ip in 0..nphi {
            let phi = ip as f64 * dphi;
            let a = ylm(lp, mp, x, phi);
            let b = ylm(k, q, x, phi);
            let d = ylm(l, m, x, phi);
            // conj(a) * b * d
            let (br, bi) = (b.0 * d.0 - b.1 * d.1, b.0 * d.1 + b.1 * d.0);
            re += w * dphi * (a.0 * br + a.1 * bi);
            im += w * dphi * (a.0 * bi - a.1 * br);
        }
    }
    assert!(im.abs() < 1e-12);
    c * re
}

/// Coupling matrix from explicit uncoupled-basis sums, `M = 0` components.
pub fn brute_force_coupling(op: TensorOp, channels: &[Channel], j: AngMom) -> DMatrix<f64> {
    let tj = j.twice() as i64;
    let ms: Vec<i64> = (0..=tj).map(|a| -tj + 2 * a).collect();
    let n = ms.len();
    let lmax = channels.iter().map(|c| c.l).max().unwrap_or(0) as usize;
    let quad = gauss_legendre(lmax + op.k as usize + 8);
    let nphi = 2 * (2 * lmax + op.k as usize) + 4;
    let tq: Vec<DMatrix<f64>> = (-(op.k as i32)..=op.k as i32).map(|q| product_operator(op, j, q)).collect();

    // expansion coefficients: (a1, a2, ml) -> amplitude
    let expand = |c: &Channel| -> Vec<(usize, usize, i64, f64)> {
        let (je, l, jt) = (c.j_el as i64, c.l as i64, c.j_total as i64);
        let mut out = Vec::new();
        for ml in -l..=l {
            let mel = -ml;
            if mel.abs() > je {
                continue;
            }
            let c1 = cg2(2 * je, 2 * mel, 2 * l, 2 * ml, 2 * jt, 0);
            if c1 == 0.0 {
                continue;
            }
            for (a1, &m1) in ms.iter().enumerate() {
                for (a2, &m2) in ms.iter().enumerate() {
                    if m1 + m2 != 2 * mel {
                        continue;
                    }
                    let c2 = cg2(tj, m1, tj, m2, 2 * je, 2 * mel);
                    if c2 != 0.0 {
                        out.push((a1, a2, ml, c1 * c2));
                    }
                }
            }
        }
        out
    };
    let ex: Vec<_> = channels.iter().map(expand).collect();
    let k = op.k as i64;
    let mut cache: HashMap<(i64, i64, i64, i64, i64), f64> = HashMap::new();
    let mut g = DMatrix::zeros(channels.len(), channels.len());
    for (x, bra) in channels.iter().enumerate() {
        for (y, ket) in channels.iter().enumerate() {
            let mut s = 0.0;
            for &(b1, b2, mlp, cb) in &ex[x] {
                for &(a1, a2, ml, ca) in &ex[y] {
                    // sum_q (-1)^q T_kq C_k,-q; C_k,-q fixes -q = mlp - ml
                    let q = ml - mlp;
                    if q.abs() > k {
                        continue;
                    }
                    let t = tq[(q + k) as usize][(b1 * n + b2, a1 * n + a2)];
                    if t == 0.0 {
                        continue;
                    }
                    let (lp, l) = (bra.l as i64, ket.l as i64);
                    let ang = *cache
                        .entry((lp, mlp, q, l, ml))
                        .or_insert_with(|| angular_integral(lp, mlp, k, -q, l, ml, &quad, nphi));
                    let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    s += cb * ca * sign * t * ang;
                }
            }
            g[(x, y)] = s;
        }
    }
    g
}
