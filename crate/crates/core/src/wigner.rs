//! Angular-momentum algebra with half-integers stored as doubled integers.
//!
//! 3j and 6j symbols are evaluated from the Racah sums in exact rational
//! arithmetic and converted to `f64` only at the end, so the result carries a
//! single rounding error. 9j symbols are contracted from 6j symbols.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{LazyLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WignerError {
    #[error("projection 2m={twice_m} is not allowed for j={j}")]
    BadProjection { j: AngMom, twice_m: i32 },
    #[error("cannot parse angular momentum from {0:?}")]
    Parse(String),
}

/// Angular momentum `j`, stored as `2j`. Serialized as `"7/2"` or `"6"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct AngMom(u32);

impl From<AngMom> for String {
    fn from(j: AngMom) -> String {
        j.to_string()
    }
}

impl TryFrom<String> for AngMom {
    type Error = WignerError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl AngMom {
    pub const ZERO: AngMom = AngMom(0);
    pub const ONE: AngMom = AngMom(2);
    pub const TWO: AngMom = AngMom(4);

    pub const fn from_twice(twice_j: u32) -> Self {
        AngMom(twice_j)
    }

    pub const fn int(j: u32) -> Self {
        AngMom(2 * j)
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `2j + 1`.
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// `j(j+1)`.
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Whether `2m` is a valid doubled projection.
    pub fn allows(self, twice_m: i32) -> bool {
        twice_m.unsigned_abs() <= self.0 && (self.0 as i32 - twice_m) % 2 == 0
    }

    /// Doubled projections `2m` from `-2j` to `2j`, ascending.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let tj = self.0 as i32;
        (0..=self.0 as i32).map(move |k| -tj + 2 * k)
    }

    pub fn checked_sub(self, other: AngMom) -> Option<AngMom> {
        self.0.checked_sub(other.0).map(AngMom)
    }
}

impl std::ops::Add for AngMom {
    type Output = AngMom;
    fn add(self, rhs: AngMom) -> AngMom {
        AngMom(self.0 + rhs.0)
    }
}

impl fmt::Display for AngMom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for AngMom {
    type Err = WignerError;

    /// Accepts `"3"`, `"7/2"` or `"3.5"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || WignerError::Parse(s.to_string());
        if let Some((num, den)) = t.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| err())?;
            match den.trim() {
                "2" => Ok(AngMom(num)),
                "1" => Ok(AngMom(2 * num)),
                _ => Err(err()),
            }
        } else if let Ok(n) = t.parse::<u32>() {
            Ok(AngMom(2 * n))
        } else {
            let x: f64 = t.parse().map_err(|_| err())?;
            let tw = 2.0 * x;
            if x < 0.0 || (tw - tw.round()).abs() > 1e-9 {
                return Err(err());
            }
            Ok(AngMom(tw.round() as u32))
        }
    }
}

/// `(-1)^n` for an integer exponent.
pub fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

pub fn triangle(a: AngMom, b: AngMom, c: AngMom) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    c <= a + b && a <= b + c && b <= a + c && (a + b + c) % 2 == 0
}

static FACTORIALS: LazyLock<RwLock<Vec<BigInt>>> =
    LazyLock::new(|| RwLock::new(vec![BigInt::one()]));

fn factorial(n: u32) -> BigInt {
    let n = n as usize;
    if let Some(f) = FACTORIALS.read().unwrap().get(n) {
        return f.clone();
    }
    let mut table = FACTORIALS.write().unwrap();
    while table.len() <= n {
        let k = table.len();
        let next = &table[k - 1] * BigInt::from(k);
        table.push(next);
    }
    table[n].clone()
}

/// Halves a doubled quantity that must be a non-negative integer.
fn half(x: i64) -> Option<u32> {
    if x < 0 || x % 2 != 0 { None } else { Some((x / 2) as u32) }
}

/// `sign(s) * sqrt(p * s^2)` for exact rationals.
fn signed_sqrt(p: &BigRational, s: &BigRational) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let mag = (p * s * s).to_f64().unwrap_or(f64::NAN).sqrt();
    if s.is_negative() { -mag } else { mag }
}

/// Triangle coefficient `(a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!` on doubled input.
fn delta(a: u32, b: u32, c: u32) -> BigRational {
    let (a, b, c) = (a as i64, b as i64, c as i64);
    let num = factorial(half(a + b - c).unwrap())
        * factorial(half(a - b + c).unwrap())
        * factorial(half(-a + b + c).unwrap());
    let den = factorial(half(a + b + c).unwrap() + 1);
    BigRational::new(num, den)
}

type Key3 = [i32; 6];
type Key6 = [u32; 6];

static CACHE_3J: LazyLock<RwLock<HashMap<Key3, f64>>> = LazyLock::new(Default::default);
static CACHE_6J: LazyLock<RwLock<HashMap<Key6, f64>>> = LazyLock::new(Default::default);

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)` with doubled projections.
/// Returns 0 for any selection-rule violation, including invalid projections.
pub fn wigner_3j(j1: AngMom, j2: AngMom, j3: AngMom, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if tm1 + tm2 + tm3 != 0
        || !j1.allows(tm1)
        || !j2.allows(tm2)
        || !j3.allows(tm3)
        || !triangle(j1, j2, j3)
    {
        return 0.0;
    }
    let key = [j1.0 as i32, j2.0 as i32, j3.0 as i32, tm1, tm2, tm3];
    if let Some(v) = CACHE_3J.read().unwrap().get(&key) {
        return *v;
    }
    let v = racah_3j(j1.0 as i64, j2.0 as i64, j3.0 as i64, tm1 as i64, tm2 as i64, tm3 as i64);
    CACHE_3J.write().unwrap().insert(key, v);
    v
}

fn racah_3j(a: i64, b: i64, c: i64, ma: i64, mb: i64, mc: i64) -> f64 {
    let mut p = delta(a as u32, b as u32, c as u32);
    for (j, m) in [(a, ma), (b, mb), (c, mc)] {
        p *= BigRational::from_integer(
            factorial(half(j + m).unwrap()) * factorial(half(j - m).unwrap()),
        );
    }
    // summation bounds on the doubled scale
    let kmin = 0.max(b - c - ma).max(a - c + mb);
    let kmax = (a + b - c).min(a - ma).min(b + mb);
    let mut s = BigRational::zero();
    let mut k = kmin;
    while k <= kmax {
        let den = factorial(half(k).unwrap())
            * factorial(half(c - b + k + ma).unwrap())
            * factorial(half(c - a + k - mb).unwrap())
            * factorial(half(a + b - c - k).unwrap())
            * factorial(half(a - k - ma).unwrap())
            * factorial(half(b - k + mb).unwrap());
        let term = BigRational::new(BigInt::one(), den);
        if (k / 2) % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
        k += 2;
    }
    parity((a - b - mc) / 2) * signed_sqrt(&p, &s)
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>` (Condon-Shortley phase),
/// projections doubled.
pub fn clebsch_gordan(
    j1: AngMom,
    j2: AngMom,
    tm1: i32,
    tm2: i32,
    j: AngMom,
    tm: i32,
) -> Result<f64, WignerError> {
    for (jj, m) in [(j1, tm1), (j2, tm2), (j, tm)] {
        if !jj.allows(m) {
            return Err(WignerError::BadProjection { j: jj, twice_m: m });
        }
    }
    if tm1 + tm2 != tm {
        return Ok(0.0);
    }
    let ph = parity((j1.0 as i64 - j2.0 as i64 + tm as i64) / 2);
    Ok(ph * ((j.0 + 1) as f64).sqrt() * wigner_3j(j1, j2, j, tm1, tm2, -tm))
}

/// Clebsch-Gordan coefficient that returns 0 for invalid projections.
pub fn cg(j1: AngMom, j2: AngMom, tm1: i32, tm2: i32, j: AngMom, tm: i32) -> f64 {
    clebsch_gordan(j1, j2, tm1, tm2, j, tm).unwrap_or(0.0)
}

/// Wigner 6j symbol `{a b c; d e f}`.
pub fn wigner_6j(a: AngMom, b: AngMom, c: AngMom, d: AngMom, e: AngMom, f: AngMom) -> f64 {
    if !triangle(a, b, c) || !triangle(a, e, f) || !triangle(d, b, f) || !triangle(d, e, c) {
        return 0.0;
    }
    let key = canonical_6j([a.0, b.0, c.0, d.0, e.0, f.0]);
    if let Some(v) = CACHE_6J.read().unwrap().get(&key) {
        return *v;
    }
    let v = racah_6j(key);
    CACHE_6J.write().unwrap().insert(key, v);
    v
}

/// Picks one representative among the 24 column permutations and
/// upper/lower swaps of pairs of columns, so symmetric arguments share a cache entry.
fn canonical_6j(k: Key6) -> Key6 {
    let cols = [[k[0], k[3]], [k[1], k[4]], [k[2], k[5]]];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut best: Option<Key6> = None;
    for p in perms {
        // flip an even number of columns: none, or any two
        for flips in [[false, false, false], [true, true, false], [true, false, true], [false, true, true]] {
            let mut key = [0u32; 6];
            for (slot, (&ci, &fl)) in p.iter().zip(flips.iter()).enumerate() {
                let col = cols[ci];
                let (u, l) = if fl { (col[1], col[0]) } else { (col[0], col[1]) };
                key[slot] = u;
                key[slot + 3] = l;
            }
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    best.unwrap()
}

fn racah_6j(k: Key6) -> f64 {
    let [a, b, c, d, e, f] = k.map(|x| x as i64);
    let p = delta(a as u32, b as u32, c as u32)
        * delta(a as u32, e as u32, f as u32)
        * delta(d as u32, b as u32, f as u32)
        * delta(d as u32, e as u32, c as u32);
    let tmin = (a + b + c).max(a + e + f).max(d + b + f).max(d + e + c);
    let tmax = (a + b + d + e).min(a + c + d + f).min(b + c + e + f);
    let mut s = BigRational::zero();
    let mut t = tmin;
    while t <= tmax {
        let num = factorial(half(t).unwrap() + 1);
        let den = factorial(half(t - a - b - c).unwrap())
            * factorial(half(t - a - e - f).unwrap())
            * factorial(half(t - d - b - f).unwrap())
            * factorial(half(t - d - e - c).unwrap())
            * factorial(half(a + b + d + e - t).unwrap())
            * factorial(half(a + c + d + f - t).unwrap())
            * factorial(half(b + c + e + f - t).unwrap());
        let term = BigRational::new(num, den);
        if (t / 2) % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
        t += 2;
    }
    signed_sqrt(&p, &s)
}

/// Racah coefficient `W(abcd;ef) = (-1)^(a+b+c+d) {a b e; d c f}`.
pub fn racah_w(a: AngMom, b: AngMom, c: AngMom, d: AngMom, e: AngMom, f: AngMom) -> f64 {
    let s = (a.0 + b.0 + c.0 + d.0) as i64;
    if s % 2 != 0 {
        return 0.0;
    }
    parity(s / 2) * wigner_6j(a, b, e, d, c, f)
}

/// Wigner 9j symbol with rows `(j1 j2 j3) (j4 j5 j6) (j7 j8 j9)`.
#[allow(clippy::too_many_arguments)]
pub fn wigner_9j(
    j1: AngMom,
    j2: AngMom,
    j3: AngMom,
    j4: AngMom,
    j5: AngMom,
    j6: AngMom,
    j7: AngMom,
    j8: AngMom,
    j9: AngMom,
) -> f64 {
    let rows = [[j1, j2, j3], [j4, j5, j6], [j7, j8, j9]];
    for (r, row) in rows.iter().enumerate() {
        if !triangle(row[0], row[1], row[2])
            || !triangle(rows[0][r], rows[1][r], rows[2][r])
        {
            return 0.0;
        }
    }
    let lo = j1.0.abs_diff(j9.0).max(j4.0.abs_diff(j8.0)).max(j2.0.abs_diff(j6.0));
    let hi = (j1.0 + j9.0).min(j4.0 + j8.0).min(j2.0 + j6.0);
    let mut sum = 0.0;
    let mut x = lo;
    while x <= hi {
        let ax = AngMom(x);
        let term = wigner_6j(j1, j4, j7, j8, j9, ax)
            * wigner_6j(j2, j5, j8, j4, ax, j6)
            * wigner_6j(j3, j6, j9, ax, j1, j2);
        sum += parity(x as i64) * (x + 1) as f64 * term;
        x += 2;
    }
    sum
}

/// `<j||j||j>` in the Edmonds convention.
pub fn reduced_j(j: AngMom) -> f64 {
    let jv = j.value();
    (jv * (jv + 1.0) * (2.0 * jv + 1.0)).sqrt()
}

/// `<j||[j x j]_2||j>` from the recoupling of two rank-1 operators.
pub fn reduced_jj2(j: AngMom) -> f64 {
    // <j||[A x B]_k||j> = (-1)^(k+2j) sqrt(2k+1) {1 1 k; j j j} <j||A||j><j||B||j>
    let w = wigner_6j(AngMom::ONE, AngMom::ONE, AngMom::TWO, j, j, j);
    parity(2 + j.0 as i64) * 5f64.sqrt() * w * reduced_j(j) * reduced_j(j)
}

/// `<j||O_l||j>` for the single-atom operators `I`, `j`, `[j x j]_2`.
pub fn reduced_elementary(j: AngMom, l: u32) -> f64 {
    match l {
        0 => ((j.0 + 1) as f64).sqrt(),
        1 => reduced_j(j),
        2 => reduced_jj2(j),
        _ => panic!("no elementary operator of rank {l}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fact(n: i64) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Plain floating-point Racah formula for the CG coefficient.
    fn cg_oracle(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
        if (m1 + m2 - m).abs() > 1e-9 {
            return 0.0;
        }
        let r = |x: f64| x.round() as i64;
        let pre = ((2.0 * j + 1.0) * fact(r(j1 + j2 - j)) * fact(r(j1 - j2 + j)) * fact(r(-j1 + j2 + j))
            / fact(r(j1 + j2 + j + 1.0)))
        .sqrt()
            * (fact(r(j1 + m1)) * fact(r(j1 - m1)) * fact(r(j2 + m2)) * fact(r(j2 - m2)) * fact(r(j + m)) * fact(r(j - m)))
                .sqrt();
        let mut s = 0.0;
        for k in 0..=r(j1 + j2 - j) {
            let args = [r(j1 + j2 - j) - k, r(j1 - m1) - k, r(j2 + m2) - k, r(j - j2 + m1) + k, r(j - j1 - m2) + k];
            if args.iter().any(|&a| a < 0) {
                continue;
            }
            let den = fact(k) * args.iter().map(|&a| fact(a)).product::<f64>();
            s += parity(k) / den;
        }
        pre * s
    }

    fn sixj_oracle(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> f64 {
        let r = |x: f64| x.round() as i64;
        let del = |x: f64, y: f64, z: f64| {
            (fact(r(x + y - z)) * fact(r(x - y + z)) * fact(r(-x + y + z)) / fact(r(x + y + z + 1.0))).sqrt()
        };
        let pre = del(a, b, c) * del(a, e, f) * del(d, b, f) * del(d, e, c);
        let mut s = 0.0;
        for t in 0..=r(a + b + c + d + e + f) {
            let tf = t as f64;
            let args = [
                tf - a - b - c,
                tf - a - e - f,
                tf - d - b - f,
                tf - d - e - c,
                a + b + d + e - tf,
                a + c + d + f - tf,
                b + c + e + f - tf,
            ];
            if args.iter().any(|&x| x < -1e-9) {
                continue;
            }
            s += parity(t) * fact(t + 1) / args.iter().map(|&x| fact(r(x))).product::<f64>();
        }
        pre * s
    }

    fn h(twice: u32) -> AngMom {
        AngMom::from_twice(twice)
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("7/2".parse::<AngMom>().unwrap(), h(7));
        assert_eq!("6".parse::<AngMom>().unwrap(), AngMom::int(6));
        assert_eq!("3.5".parse::<AngMom>().unwrap(), h(7));
        assert!("1/3".parse::<AngMom>().is_err());
        assert!("-1".parse::<AngMom>().is_err());
        assert_eq!(h(7).to_string(), "7/2");
        assert_eq!(AngMom::int(6).to_string(), "6");
        assert_eq!(h(3).projections().collect::<Vec<_>>(), vec![-3, -1, 1, 3]);
    }

    #[test]
    fn cg_coupling_to_zero_momentum() {
        let v = clebsch_gordan(AngMom::int(2), AngMom::ZERO, 2, 0, AngMom::int(2), 2).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cg_singlet_closed_form() {
        for tj in 0..=12u32 {
            let j = h(tj);
            for tm in j.projections() {
                let v = clebsch_gordan(j, j, tm, -tm, AngMom::ZERO, 0).unwrap();
                let expect = parity((tj as i64 - tm as i64) / 2) / ((tj + 1) as f64).sqrt();
                assert!((v - expect).abs() < 1e-14, "j={j} 2m={tm}");
            }
        }
        let v = clebsch_gordan(AngMom::int(2), AngMom::int(2), 0, 0, AngMom::ZERO, 0).unwrap();
        assert!((v - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cg_matches_float_racah_sum() {
        let v = clebsch_gordan(AngMom::int(2), AngMom::int(2), 0, 0, AngMom::int(2), 0).unwrap();
        let o = cg_oracle(2.0, 0.0, 2.0, 0.0, 2.0, 0.0);
        assert!((v - o).abs() < 1e-14);
        assert!((v + (2.0f64 / 7.0).sqrt()).abs() < 1e-14);
        for (a, b, c) in [(3u32, 5u32, 4u32), (7, 7, 6), (12, 2, 12), (4, 4, 8)] {
            let (ja, jb, jc) = (h(a), h(b), h(c));
            for ma in ja.projections() {
                for mb in jb.projections() {
                    let mc = ma + mb;
                    if !jc.allows(mc) {
                        continue;
                    }
                    let v = clebsch_gordan(ja, jb, ma, mb, jc, mc).unwrap();
                    let o = cg_oracle(ja.value(), ma as f64 / 2.0, jb.value(), mb as f64 / 2.0, jc.value(), mc as f64 / 2.0);
                    assert!((v - o).abs() < 1e-13, "{a} {b} {c} {ma} {mb}");
                }
            }
        }
    }

    #[test]
    fn cg_rejects_bad_projection() {
        assert!(clebsch_gordan(AngMom::ONE, AngMom::ONE, 1, 0, AngMom::ONE, 1).is_err());
        assert!(clebsch_gordan(AngMom::ONE, AngMom::ONE, 4, 0, AngMom::TWO, 4).is_err());
        assert_eq!(clebsch_gordan(AngMom::ONE, AngMom::ONE, 2, 0, AngMom::TWO, 0).unwrap(), 0.0);
        assert_eq!(clebsch_gordan(AngMom::ONE, AngMom::ONE, 0, 0, AngMom::int(3), 0).unwrap(), 0.0);
    }

    #[test]
    fn cg_orthogonality() {
        for tj1 in 0..=8u32 {
            for tj2 in 0..=8u32 {
                let (j1, j2) = (h(tj1), h(tj2));
                let js: Vec<AngMom> = (tj1.abs_diff(tj2)..=tj1 + tj2).step_by(2).map(h).collect();
                for &ja in &js {
                    for &jb in &js {
                        for ma in ja.projections() {
                            for mb in jb.projections().filter(|&mb| mb == ma) {
                                let mut s = 0.0;
                                for m1 in j1.projections() {
                                    s += cg(j1, j2, m1, ma - m1, ja, ma) * cg(j1, j2, m1, mb - m1, jb, mb);
                                }
                                let expect = if ja == jb && ma == mb { 1.0 } else { 0.0 };
                                assert!((s - expect).abs() < 1e-12, "{j1} {j2} {ja} {jb} {ma} {mb}: {s}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sixj_with_zero() {
        for ta in 0..=8u32 {
            for tb in 0..=8u32 {
                for tf in (ta.abs_diff(tb)..=ta + tb).step_by(2) {
                    let (a, b, f) = (h(ta), h(tb), h(tf));
                    let v = wigner_6j(a, b, f, b, a, AngMom::ZERO);
                    let expect = parity(((ta + tb + tf) / 2) as i64) / (((ta + 1) * (tb + 1)) as f64).sqrt();
                    assert!((v - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn sixj_against_float_oracle() {
        let j = AngMom::int(6);
        let v = racah_w(j, AngMom::ONE, j, AngMom::ONE, AngMom::int(6), AngMom::ONE);
        let o = sixj_oracle(6.0, 1.0, 6.0, 1.0, 6.0, 1.0);
        assert!((v - o).abs() < 1e-14);
        let v = wigner_6j(AngMom::ONE, AngMom::ONE, AngMom::TWO, h(7), h(7), h(7));
        let o = sixj_oracle(1.0, 1.0, 2.0, 3.5, 3.5, 3.5);
        assert!((v - o).abs() < 1e-14);
        for args in [[2u32, 4, 6, 3, 5, 7], [8, 8, 8, 8, 8, 8], [12, 2, 12, 2, 12, 4], [7, 7, 4, 7, 7, 10]] {
            let v = wigner_6j(h(args[0]), h(args[1]), h(args[2]), h(args[3]), h(args[4]), h(args[5]));
            let f = args.map(|x| x as f64 / 2.0);
            let o = sixj_oracle(f[0], f[1], f[2], f[3], f[4], f[5]);
            assert!((v - o).abs() < 1e-13, "{args:?}");
        }
    }

    #[test]
    fn sixj_zero_in_upper_row() {
        for ta in 0..=8u32 {
            for tf in (0..=2 * ta).step_by(2) {
                let (a, f) = (h(ta), h(tf));
                let v = wigner_6j(a, a, AngMom::ZERO, a, a, f);
                let expect = parity(((2 * ta + tf) / 2) as i64) / (ta + 1) as f64;
                assert!((v - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sixj_triangle_violation_is_zero() {
        assert_eq!(wigner_6j(AngMom::ONE, AngMom::ONE, h(8), AngMom::ONE, AngMom::ONE, AngMom::ONE), 0.0);
        assert_eq!(wigner_6j(h(1), h(1), h(1), h(1), h(1), h(1)), 0.0);
    }

    /// Definition as a sum over all projections of six 3j symbols.
    fn ninej_from_3j(j: [AngMom; 9]) -> f64 {
        let [j1, j2, j3, j4, j5, j6, j7, j8, j9] = j;
        let mut s = 0.0;
        for m1 in j1.projections() {
            for m2 in j2.projections() {
                for m4 in j4.projections() {
                    for m5 in j5.projections() {
                        let (m3, m6) = (-m1 - m2, -m4 - m5);
                        let (m7, m8, m9) = (-m1 - m4, -m2 - m5, -m3 - m6);
                        s += wigner_3j(j1, j2, j3, m1, m2, m3)
                            * wigner_3j(j4, j5, j6, m4, m5, m6)
                            * wigner_3j(j7, j8, j9, m7, m8, m9)
                            * wigner_3j(j1, j4, j7, m1, m4, m7)
                            * wigner_3j(j2, j5, j8, m2, m5, m8)
                            * wigner_3j(j3, j6, j9, m3, m6, m9);
                    }
                }
            }
        }
        s
    }

    #[test]
    fn ninej_matches_3j_definition() {
        let cases: [[u32; 9]; 5] = [
            [2, 2, 2, 2, 2, 2, 4, 4, 4],
            [2, 2, 0, 2, 2, 4, 4, 4, 4],
            [3, 3, 2, 3, 3, 4, 4, 2, 2],
            [4, 4, 4, 4, 4, 4, 4, 4, 4],
            [7, 7, 4, 7, 7, 0, 4, 2, 4],
        ];
        for c in cases {
            let a = c.map(h);
            let v = wigner_9j(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]);
            let o = ninej_from_3j(a);
            assert!((v - o).abs() < 1e-12, "{c:?}: {v} vs {o}");
        }
    }

    #[test]
    fn ninej_with_zero_reduces_to_6j() {
        // {a b e; c d e; f f 0} = (-1)^(b+c+e+f) {a b e; d c f} / sqrt((2e+1)(2f+1))
        for (a, b, c, d, e, f) in [(2u32, 2, 2, 2, 2, 4), (4, 2, 2, 4, 4, 2), (7, 7, 7, 7, 4, 6), (12, 2, 12, 2, 12, 12)] {
            let v = wigner_9j(h(a), h(b), h(e), h(c), h(d), h(e), h(f), h(f), AngMom::ZERO);
            let expect = parity(((b + c + e + f) / 2) as i64) * wigner_6j(h(a), h(b), h(e), h(d), h(c), h(f))
                / (((e + 1) * (f + 1)) as f64).sqrt();
            assert!((v - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn ninej_vdw_case() {
        let one = AngMom::ONE;
        let two = AngMom::TWO;
        let v = wigner_9j(one, one, one, one, one, one, two, two, two);
        let mut s = 0.0;
        for x in 0..=4u32 {
            let ax = AngMom::int(x);
            s += (2 * x + 1) as f64
                * wigner_6j(one, one, two, two, two, ax)
                * wigner_6j(one, one, two, one, ax, one)
                * wigner_6j(one, one, two, ax, one, one);
        }
        assert!((v - s).abs() < 1e-14);
        assert!((v - ninej_from_3j([one, one, one, one, one, one, two, two, two])).abs() < 1e-13);
        assert_eq!(wigner_9j(one, one, h(8), one, one, one, two, two, two), 0.0);
    }

    /// Explicit matrices in the |j m> basis, m descending from j.
    fn jmats(j: AngMom) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = j.dim();
        let ms: Vec<f64> = j.projections().rev().map(|m| m as f64 / 2.0).collect();
        let jv = j.value();
        let mut jz = vec![vec![0.0; n]; n];
        let mut jp = vec![vec![0.0; n]; n];
        let mut jm = vec![vec![0.0; n]; n];
        for a in 0..n {
            jz[a][a] = ms[a];
            if a > 0 {
                // <m+1| j+ |m>
                jp[a - 1][a] = (jv * (jv + 1.0) - ms[a] * (ms[a] + 1.0)).sqrt();
                jm[a][a - 1] = jp[a - 1][a];
            }
        }
        (jz, jp, jm)
    }

    fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut c = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    c[i][l] += a[i][k] * b[k][l];
                }
            }
        }
        c
    }

    #[test]
    fn reduced_elements_match_wigner_eckart() {
        for tj in 1..=14u32 {
            let j = h(tj);
            let (jz, jp, jm) = jmats(j);
            let n = j.dim();
            // T20 of [j x j]_2 = (3 jz^2 - j^2)/sqrt(6)
            let jz2 = matmul(&jz, &jz);
            let pm = matmul(&jp, &jm);
            let mp = matmul(&jm, &jp);
            let jv = j.value();
            // top state m = j
            let ms = jv;
            let t20 = (3.0 * jz2[0][0] - 0.5 * (pm[0][0] + mp[0][0]) - jz2[0][0]) / 6f64.sqrt();
            let w2 = wigner_3j(j, AngMom::TWO, j, -(tj as i32), 0, tj as i32);
            let w1 = wigner_3j(j, AngMom::ONE, j, -(tj as i32), 0, tj as i32);
            // Edmonds: <j m|T_k0|j m> = (-1)^(j-m) (j k j; -m 0 m) <j||T||j>, m = j
            assert!((jz[0][0] - w1 * reduced_j(j)).abs() < 1e-12, "j={j}");
            let red2 = reduced_jj2(j);
            if tj >= 2 {
                assert!((t20 - w2 * red2).abs() < 1e-12, "j={j}");
            } else {
                assert!(red2.abs() < 1e-15);
            }
            assert!((ms - jz[0][0]).abs() < 1e-15);
            assert_eq!(n, j.dim());
        }
        assert!((reduced_j(AngMom::ONE) - 6f64.sqrt()).abs() < 1e-15);
        assert!((reduced_jj2(AngMom::ONE) - 5f64.sqrt()).abs() < 1e-14);
        assert_eq!(reduced_jj2(h(1)), 0.0);
    }

    #[test]
    fn reduced_jj2_closed_form() {
        for tj in 2..=30u32 {
            let x = tj as f64;
            let expect = ((x - 1.0) * x * (x + 1.0) * (x + 2.0) * (x + 3.0)).sqrt() / (2.0 * 6f64.sqrt());
            let v = reduced_jj2(h(tj));
            assert!((v - expect).abs() < 1e-12 * expect.max(1.0), "2j={tj}");
        }
    }

    fn sym6(a: [u32; 6]) -> Vec<[u32; 6]> {
        let [a, b, c, d, e, f] = a;
        let mut v = Vec::new();
        let base = [[a, b, c, d, e, f], [b, c, a, e, f, d], [c, a, b, f, d, e], [b, a, c, e, d, f], [a, c, b, d, f, e], [c, b, a, f, e, d]];
        for [a, b, c, d, e, f] in base {
            v.push([a, b, c, d, e, f]);
            v.push([d, e, c, a, b, f]);
            v.push([a, e, f, d, b, c]);
            v.push([d, b, f, a, e, c]);
        }
        v
    }

    fn regge(k: [u32; 6]) -> [u32; 6] {
        // {a b c; d e f} = {a (b+c+e+f)/2-b ...}
        let [a, b, c, d, e, f] = k;
        let s1 = (b + c + e + f) / 2;
        [a, s1 - b, s1 - c, d, s1 - e, s1 - f]
    }

    proptest! {
        #[test]
        fn sixj_symmetries(a in 0u32..=12, b in 0u32..=12, c in 0u32..=12, d in 0u32..=12, e in 0u32..=12, f in 0u32..=12) {
            let k = [a, b, c, d, e, f];
            let v0 = wigner_6j(h(a), h(b), h(c), h(d), h(e), h(f));
            for p in sym6(k) {
                let v = wigner_6j(h(p[0]), h(p[1]), h(p[2]), h(p[3]), h(p[4]), h(p[5]));
                prop_assert!((v - v0).abs() < 1e-13);
            }
            if (b + c + e + f) % 2 == 0 && v0 != 0.0 {
                let r = regge(k);
                let v = wigner_6j(h(r[0]), h(r[1]), h(r[2]), h(r[3]), h(r[4]), h(r[5]));
                prop_assert!((v - v0).abs() < 1e-13);
            }
        }

        #[test]
        fn ninej_contraction_matches_definition(t in proptest::array::uniform9(0u32..=6)) {
            let a = t.map(h);
            let v = wigner_9j(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]);
            let o = ninej_from_3j(a);
            prop_assert!((v - o).abs() < 1e-12);
        }

        #[test]
        fn ninej_reflection_symmetry(t in proptest::array::uniform9(0u32..=24)) {
            let a = t.map(h);
            let v = wigner_9j(a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]);
            let tr = wigner_9j(a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]);
            prop_assert!((v - tr).abs() < 1e-12);
        }
    }
}
