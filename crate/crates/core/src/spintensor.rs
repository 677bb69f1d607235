//! Body-frame interaction operator in the exchange-symmetrized pair basis,
//! adiabatic potentials and least-squares extraction of the strengths.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::Species;
use crate::tensor::{Strengths, TensorOp, product_operator};
use crate::wigner::AngMom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Inversion {
    #[serde(rename = "g")]
    Gerade,
    #[serde(rename = "u")]
    Ungerade,
}

impl Inversion {
    pub fn sign(self) -> i32 {
        match self {
            Inversion::Gerade => 1,
            Inversion::Ungerade => -1,
        }
    }
}

impl fmt::Display for Inversion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inversion::Gerade => "g",
            Inversion::Ungerade => "u",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reflection {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl fmt::Display for Reflection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reflection::Plus => "+",
            Reflection::Minus => "-",
        })
    }
}

/// `Omega^(+-)_(g/u)`. The reflection label is present only for `Omega = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symmetry {
    pub omega: u32,
    pub inversion: Inversion,
    pub reflection: Option<Reflection>,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.omega, self.inversion)?;
        if let Some(r) = self.reflection {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse symmetry label {0:?} (expected e.g. 0g+, 1u, 12g)")]
pub struct SymmetryParseError(pub String);

impl FromStr for Symmetry {
    type Err = SymmetryParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SymmetryParseError(s.to_string());
        let t = s.trim();
        let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
        let omega: u32 = t[..digits].parse().map_err(|_| err())?;
        let mut rest = t[digits..].chars();
        let inversion = match rest.next() {
            Some('g') => Inversion::Gerade,
            Some('u') => Inversion::Ungerade,
            _ => return Err(err()),
        };
        let reflection = match rest.next() {
            None => None,
            Some('+') => Some(Reflection::Plus),
            Some('-') => Some(Reflection::Minus),
            _ => return Err(err()),
        };
        if rest.next().is_some() || (omega == 0) != reflection.is_some() {
            return Err(err());
        }
        Ok(Symmetry { omega, inversion, reflection })
    }
}

/// `N(|j Omega1>|j Omega2> + eps sigma |j Omega2>|j Omega1>)` with `Omega1 >= Omega2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub two_omega1: i32,
    pub two_omega2: i32,
    pub symmetry: Symmetry,
}

impl PairState {
    pub fn omega1(&self) -> f64 {
        self.two_omega1 as f64 / 2.0
    }

    pub fn omega2(&self) -> f64 {
        self.two_omega2 as f64 / 2.0
    }
}

/// Exchange phase `eps = (-1)^(2j)`: +1 for Er, -1 for Tm.
pub fn exchange_phase(j: AngMom) -> i32 {
    if j.is_integer() { 1 } else { -1 }
}

#[derive(Clone, Debug)]
pub struct SymmetrizedPairBasis {
    pub species: Species,
    pub j: AngMom,
    /// Ordered so that each symmetry block is contiguous.
    pub states: Vec<PairState>,
    blocks: Vec<(Symmetry, Range<usize>)>,
    /// Columns are the states expanded in the product basis `|m1>|m2>`.
    projector: DMatrix<f64>,
}

impl SymmetrizedPairBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn blocks(&self) -> &[(Symmetry, Range<usize>)] {
        &self.blocks
    }

    pub fn block(&self, s: Symmetry) -> Option<Range<usize>> {
        self.blocks.iter().find(|(b, _)| *b == s).map(|(_, r)| r.clone())
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    pub fn count(&self, inversion: Inversion) -> usize {
        self.states.iter().filter(|s| s.symmetry.inversion == inversion).count()
    }

    /// Symmetry of the spin-stretched state `Omega1 = Omega2 = j`.
    pub fn stretched_symmetry(&self) -> Symmetry {
        let inversion = if exchange_phase(self.j) == 1 { Inversion::Gerade } else { Inversion::Ungerade };
        let omega = self.j.twice();
        Symmetry { omega, inversion, reflection: if omega == 0 { Some(Reflection::Plus) } else { None } }
    }

    pub fn stretched_index(&self) -> usize {
        let tj = self.j.twice() as i32;
        self.states
            .iter()
            .position(|s| s.two_omega1 == tj && s.two_omega2 == tj)
            .expect("basis contains the stretched state")
    }
}

pub fn build_basis(species: Species) -> SymmetrizedPairBasis {
    basis_for(species, species.ground_j())
}

pub fn basis_for(species: Species, j: AngMom) -> SymmetrizedPairBasis {
    let eps = exchange_phase(j);
    let ms: Vec<i32> = j.projections().collect();
    let n = ms.len();
    let mut raw: Vec<(PairState, DVector<f64>)> = Vec::new();
    for (a1, &m1) in ms.iter().enumerate() {
        for (a2, &m2) in ms.iter().enumerate() {
            if m1 < m2 || m1 + m2 < 0 {
                continue;
            }
            for inversion in [Inversion::Gerade, Inversion::Ungerade] {
                let es = (eps * inversion.sign()) as f64;
                if m1 == m2 && es < 0.0 {
                    continue;
                }
                let mut v = DVector::zeros(n * n);
                v[a1 * n + a2] += 1.0;
                v[a2 * n + a1] += es;
                let v = v.normalize();
                let omega = ((m1 + m2) / 2) as u32;
                // for Omega = 0 the reflection eigenvalue equals sigma
                let reflection = (omega == 0).then_some(if inversion == Inversion::Gerade {
                    Reflection::Plus
                } else {
                    Reflection::Minus
                });
                let symmetry = Symmetry { omega, inversion, reflection };
                raw.push((PairState { two_omega1: m1, two_omega2: m2, symmetry }, v));
            }
        }
    }
    raw.sort_by(|(a, _), (b, _)| {
        (a.symmetry, -a.two_omega1, -a.two_omega2).cmp(&(b.symmetry, -b.two_omega1, -b.two_omega2))
    });
    let mut blocks: Vec<(Symmetry, Range<usize>)> = Vec::new();
    for (i, (s, _)) in raw.iter().enumerate() {
        match blocks.last_mut() {
            Some((sym, r)) if *sym == s.symmetry => r.end = i + 1,
            _ => blocks.push((s.symmetry, i..i + 1)),
        }
    }
    let mut projector = DMatrix::zeros(n * n, raw.len());
    for (c, (_, v)) in raw.iter().enumerate() {
        projector.set_column(c, v);
    }
    SymmetrizedPairBasis { species, j, states: raw.into_iter().map(|(s, _)| s).collect(), blocks, projector }
}

/// Body-frame matrix of `sum_q (-1)^q T_kq C_k,-q(z) = T_k0` over the basis.
pub fn operator_matrix(op: TensorOp, basis: &SymmetrizedPairBasis) -> DMatrix<f64> {
    let p = basis.projector();
    let mut m = p.transpose() * product_operator(op, basis.j, 0) * p;
    // exact zeros between symmetry blocks
    for (s1, r1) in basis.blocks() {
        for (s2, r2) in basis.blocks() {
            if s1 != s2 {
                m.view_mut((r1.start, r2.start), (r1.len(), r2.len())).fill(0.0);
            }
        }
    }
    m
}

/// All seven operator matrices, ordered as [`TensorOp::ALL`].
pub fn operator_matrices(basis: &SymmetrizedPairBasis) -> Vec<DMatrix<f64>> {
    TensorOp::ALL.iter().map(|&op| operator_matrix(op, basis)).collect()
}

/// One adiabatic state. `n` counts from 1 within its symmetry block.
#[derive(Clone, Debug, PartialEq)]
pub struct Adiabat {
    pub energy: f64,
    pub symmetry: Symmetry,
    pub n: u32,
    pub vector: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdiabatSet {
    pub r: f64,
    /// Sorted by energy; ties by symmetry and `n`.
    pub states: Vec<Adiabat>,
}

impl AdiabatSet {
    pub fn lowest(&self) -> &Adiabat {
        &self.states[0]
    }

    pub fn find(&self, symmetry: Symmetry, n: u32) -> Option<&Adiabat> {
        self.states.iter().find(|a| a.symmetry == symmetry && a.n == n)
    }
}

fn weighted_sum(ops: &[DMatrix<f64>], strengths: &Strengths) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(ops[0].nrows(), ops[0].ncols());
    for (op, &v) in ops.iter().zip(strengths) {
        if v != 0.0 {
            h += v * op;
        }
    }
    h
}

/// Eigenpairs of one symmetric block, ascending, with a fixed sign convention.
fn block_eigen(h: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let e = h.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = e
        .eigenvalues
        .iter()
        .zip(e.eigenvectors.column_iter())
        .map(|(&val, col)| {
            let mut v = col.into_owned();
            let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |acc, (i, &x)| {
                if x.abs() > acc.1 + 1e-12 { (i, x.abs()) } else { acc }
            });
            if v[imax] < 0.0 {
                v.neg_mut();
            }
            (val, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lexicographic(&b.1, &a.1)));
    pairs
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-10 {
            return x.total_cmp(y);
        }
    }
    std::cmp::Ordering::Equal
}

/// Adiabatic potentials at one separation from strengths evaluated there.
pub fn adiabats(basis: &SymmetrizedPairBasis, ops: &[DMatrix<f64>], strengths: &Strengths, r: f64) -> AdiabatSet {
    let h = weighted_sum(ops, strengths);
    let dim = basis.len();
    let mut states = Vec::with_capacity(dim);
    for (sym, range) in basis.blocks() {
        let sub = h.view((range.start, range.start), (range.len(), range.len())).into_owned();
        for (n, (energy, v)) in block_eigen(&sub).into_iter().enumerate() {
            let mut vector = DVector::zeros(dim);
            vector.rows_mut(range.start, range.len()).copy_from(&v);
            states.push(Adiabat { energy, symmetry: *sym, n: n as u32 + 1, vector });
        }
    }
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.symmetry.cmp(&b.symmetry)).then(a.n.cmp(&b.n)));
    AdiabatSet { r, states }
}

/// Two-tensor model energy of the `|Omega1 Omega2>` state.
pub fn model_energy(j: AngMom, omega1: f64, omega2: f64, v0: f64, v2: f64) -> f64 {
    v0 + v2 * (3.0 * (omega1 * omega1 + omega2 * omega2) - 2.0 * j.casimir()) / 6f64.sqrt()
}

/// First-order shift from the `T0(2)` and `T2(2)` operators.
pub fn first_order_splitting(omega1: f64, omega2: f64, v0_2: f64, v2_2: f64) -> f64 {
    (-v0_2 / 3f64.sqrt() + 2.0 * v2_2 / 6f64.sqrt()) * omega1 * omega2
}

/// `n` within a symmetry block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub n: u32,
    pub symmetry: Symmetry,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.n, self.symmetry)
    }
}

/// Labelled adiabatic energies at one separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticData {
    pub r: f64,
    pub points: Vec<(StateLabel, f64)>,
}

impl AdiabatSet {
    pub fn to_data(&self) -> AdiabaticData {
        AdiabaticData {
            r: self.r,
            points: self.states.iter().map(|a| (StateLabel { n: a.n, symmetry: a.symmetry }, a.energy)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub active: Vec<TensorOp>,
    /// Fit splittings from the stretched state and derive `V0(1)` from it.
    pub constrain: bool,
    /// One-sigma uncertainty of each datum, cm^-1.
    pub u: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { active: TensorOp::ALL.to_vec(), constrain: true, u: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub r: f64,
    pub strengths: Strengths,
    pub u: Strengths,
    pub chi2_nu: f64,
    pub dof: usize,
    /// Active operators removed because the data cannot determine them.
    pub dropped: Vec<TensorOp>,
    pub iterations: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("no data for the stretched state {0} at R = {1}")]
    NoStretched(Symmetry, f64),
    #[error("state {0} does not exist in the basis")]
    UnknownState(StateLabel),
    #[error("too few data ({data}) for {params} parameters at R = {r}")]
    TooFewData { data: usize, params: usize, r: f64 },
    #[error("least-squares normal equations are singular at R = {0}")]
    Singular(f64),
}

struct Prepared {
    /// Data ordered by (symmetry, n); splittings from the stretched state when constrained.
    rows: Vec<(StateLabel, f64)>,
    ss: f64,
}

fn prepare_fit(basis: &SymmetrizedPairBasis, data: &AdiabaticData, constrain: bool) -> Result<Prepared, FitError> {
    let mut rows: BTreeMap<(Symmetry, u32), f64> = BTreeMap::new();
    for &(label, e) in &data.points {
        let range = basis.block(label.symmetry).ok_or(FitError::UnknownState(label))?;
        if label.n == 0 || label.n as usize > range.len() {
            return Err(FitError::UnknownState(label));
        }
        rows.insert((label.symmetry, label.n), e);
    }
    let ss_sym = basis.stretched_symmetry();
    let ss = match rows.get(&(ss_sym, 1)) {
        Some(&e) => e,
        None if constrain => return Err(FitError::NoStretched(ss_sym, data.r)),
        None => 0.0,
    };
    if constrain {
        rows.remove(&(ss_sym, 1));
    }
    let shift = if constrain { ss } else { 0.0 };
    Ok(Prepared {
        rows: rows.into_iter().map(|((symmetry, n), e)| (StateLabel { n, symmetry }, e - shift)).collect(),
        ss,
    })
}

/// Model values and Hellmann-Feynman derivatives for every datum.
fn model_and_jacobian(
    basis: &SymmetrizedPairBasis,
    ops: &[DMatrix<f64>],
    params: &[TensorOp],
    theta: &[f64],
    rows: &[(StateLabel, f64)],
    constrain: bool,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut s = [0.0; 7];
    for (op, &t) in params.iter().zip(theta) {
        s[op.index()] = t;
    }
    let h = weighted_sum(ops, &s);
    let ssi = basis.stretched_index();
    let ss_e = h[(ssi, ssi)];
    let mut model = DVector::zeros(rows.len());
    let mut jac = DMatrix::zeros(rows.len(), params.len());
    let mut cache: BTreeMap<Symmetry, Vec<(f64, DVector<f64>)>> = BTreeMap::new();
    for (row, (label, _)) in rows.iter().enumerate() {
        let range = basis.block(label.symmetry).expect("validated");
        let eig = cache.entry(label.symmetry).or_insert_with(|| {
            block_eigen(&h.view((range.start, range.start), (range.len(), range.len())).into_owned())
        });
        let (e, v) = &eig[label.n as usize - 1];
        model[row] = if constrain { e - ss_e } else { *e };
        for (c, op) in params.iter().enumerate() {
            let sub = ops[op.index()].view((range.start, range.start), (range.len(), range.len()));
            let mut d = (v.transpose() * sub * v)[(0, 0)];
            if constrain {
                d -= ops[op.index()][(ssi, ssi)];
            }
            jac[(row, c)] = d;
        }
    }
    (model, jac)
}

/// Starting point from block traces, which are linear in the strengths.
fn trace_start(
    basis: &SymmetrizedPairBasis,
    ops: &[DMatrix<f64>],
    params: &[TensorOp],
    rows: &[(StateLabel, f64)],
    constrain: bool,
) -> Vec<f64> {
    let ssi = basis.stretched_index();
    let ss_sym = basis.stretched_symmetry();
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for (sym, range) in basis.blocks() {
        let mut have: Vec<f64> = rows.iter().filter(|(l, _)| l.symmetry == *sym).map(|&(_, e)| e).collect();
        let size = range.len();
        if constrain && *sym == ss_sym {
            // the stretched datum was removed; its splitting is zero by construction
            have.push(0.0);
        }
        if have.len() != size {
            continue;
        }
        let coeffs: Vec<f64> = params
            .iter()
            .map(|op| {
                let m = &ops[op.index()];
                let tr: f64 = range.clone().map(|i| m[(i, i)]).sum();
                if constrain { tr - size as f64 * m[(ssi, ssi)] } else { tr }
            })
            .collect();
        eqs.push((coeffs, have.iter().sum()));
    }
    if eqs.is_empty() {
        return vec![0.0; params.len()];
    }
    let a = DMatrix::from_fn(eqs.len(), params.len(), |r, c| eqs[r].0[c]);
    let b = DVector::from_fn(eqs.len(), |r, _| eqs[r].1);
    match a.svd(true, true).solve(&b, 1e-10) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; params.len()],
    }
}

/// Indices of columns kept by a greedy rank test.
fn independent_columns(j: &DMatrix<f64>) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    let scale = j.column_iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1e-300);
    for c in 0..j.ncols() {
        if j.column(c).norm() <= 1e-12 * scale {
            continue;
        }
        let mut trial = keep.clone();
        trial.push(c);
        let sub = DMatrix::from_fn(j.nrows(), trial.len(), |r, k| j[(r, trial[k])] / j.column(trial[k]).norm());
        let sv = sub.singular_values();
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 1e-9 {
            keep = trial;
        }
    }
    keep
}

/// Weighted least squares of the labelled adiabats at one separation.
pub fn fit_strengths(
    basis: &SymmetrizedPairBasis,
    ops: &[DMatrix<f64>],
    data: &AdiabaticData,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let prep = prepare_fit(basis, data, opts.constrain)?;
    let mut params: Vec<TensorOp> =
        TensorOp::ALL.iter().copied().filter(|op| opts.active.contains(op)).collect();
    if opts.constrain {
        params.retain(|&op| op != TensorOp::ISO);
    }
    let y = DVector::from_fn(prep.rows.len(), |r, _| prep.rows[r].1);
    let mut theta = trace_start(basis, ops, &params, &prep.rows, opts.constrain);

    // drop parameters the data cannot resolve
    let (_, j0) = model_and_jacobian(basis, ops, &params, &theta, &prep.rows, opts.constrain);
    let keep = independent_columns(&j0);
    let mut dropped = Vec::new();
    if keep.len() < params.len() {
        for (c, op) in params.iter().enumerate() {
            if !keep.contains(&c) {
                log::warn!("strength {op} is not determined by the data at R = {}; fixed to zero", data.r);
                dropped.push(*op);
            }
        }
        params = keep.iter().map(|&c| params[c]).collect();
        theta = trace_start(basis, ops, &params, &prep.rows, opts.constrain);
    }
    let n = prep.rows.len();
    let p = params.len();
    if n < p || n == 0 {
        return Err(FitError::TooFewData { data: n, params: p, r: data.r });
    }

    let cost = |theta: &[f64]| {
        let (m, _) = model_and_jacobian(basis, ops, &params, theta, &prep.rows, opts.constrain);
        (&y - m).norm_squared()
    };
    let mut current = cost(&theta);
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        if p == 0 {
            break;
        }
        let (m, jac) = model_and_jacobian(basis, ops, &params, &theta, &prep.rows, opts.constrain);
        let resid = &y - m;
        let step = match jac.clone().svd(true, true).solve(&resid, 1e-13) {
            Ok(s) => s,
            Err(_) => return Err(FitError::Singular(data.r)),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + lambda * s).collect();
            let c = cost(&trial);
            if c <= current {
                theta = trial;
                current = c;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let size = step.norm() * lambda;
        let scale = theta.iter().map(|t| t.abs()).fold(0.0f64, f64::max).max(1e-300);
        if !accepted || size <= 1e-15 * scale {
            break;
        }
    }

    let (_, jac) = model_and_jacobian(basis, ops, &params, &theta, &prep.rows, opts.constrain);
    let w = 1.0 / (opts.u * opts.u);
    let normal = jac.transpose() * &jac * w;
    let cov = if p == 0 {
        DMatrix::zeros(0, 0)
    } else {
        normal.try_inverse().ok_or(FitError::Singular(data.r))?
    };
    let dof = n - p;
    let chi2 = current * w;
    let chi2_nu = if dof > 0 { chi2 / dof as f64 } else { 0.0 };

    let mut strengths = [0.0; 7];
    let mut u = [0.0; 7];
    for (c, op) in params.iter().enumerate() {
        strengths[op.index()] = theta[c];
        u[op.index()] = cov[(c, c)].max(0.0).sqrt();
    }
    if opts.constrain && opts.active.contains(&TensorOp::ISO) {
        let ssi = basis.stretched_index();
        let g: Vec<f64> = params.iter().map(|op| ops[op.index()][(ssi, ssi)]).collect();
        strengths[0] = prep.ss - params.iter().zip(&theta).map(|(op, t)| ops[op.index()][(ssi, ssi)] * t).sum::<f64>();
        let gv = DVector::from_vec(g);
        u[0] = if p == 0 { 0.0 } else { (gv.transpose() * &cov * &gv)[(0, 0)].max(0.0).sqrt() };
    }
    Ok(FitResult { r: data.r, strengths, u, chi2_nu, dof, dropped, iterations })
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {rows:?}")]
    Rows { path: String, rows: Vec<String> },
    #[error("{path}: no stretched-state row at R = {r}")]
    NoStretched { path: String, r: f64 },
}

#[derive(Debug, Deserialize)]
struct RelRow {
    r_bohr: f64,
    n: u32,
    omega: u32,
    sigma: Inversion,
    reflection: String,
    u_rel_cm: f64,
}

/// Reads relativistic CI energies `U_rel` (columns
/// `r_bohr,n,omega,sigma,reflection,u_rel_cm`) and places them on the
/// spin-stretched potential: `V_rel = V_ss + (U_rel - U_rel,ss)`.
pub fn ingest_relativistic(
    path: &Path,
    basis: &SymmetrizedPairBasis,
    v_ss: impl Fn(f64) -> f64,
) -> Result<Vec<AdiabaticData>, IngestError> {
    let f = std::fs::File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    ingest_relativistic_reader(f, &path.display().to_string(), basis, v_ss)
}

pub fn ingest_relativistic_reader<R: Read>(
    reader: R,
    name: &str,
    basis: &SymmetrizedPairBasis,
    v_ss: impl Fn(f64) -> f64,
) -> Result<Vec<AdiabaticData>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut bad = Vec::new();
    let mut by_r: BTreeMap<u64, Vec<(StateLabel, f64)>> = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<RelRow>().enumerate() {
        let line = i + 2;
        let row = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let reflection = match row.reflection.as_str() {
            "" => None,
            "+" => Some(Reflection::Plus),
            "-" => Some(Reflection::Minus),
            s => {
                bad.push(format!("line {line}: reflection {s:?} must be +, - or empty"));
                continue;
            }
        };
        let label = StateLabel { n: row.n, symmetry: Symmetry { omega: row.omega, inversion: row.sigma, reflection } };
        let ok = basis.block(label.symmetry).is_some_and(|r| row.n >= 1 && row.n as usize <= r.len());
        if !ok || !row.r_bohr.is_finite() || row.r_bohr <= 0.0 {
            bad.push(format!("line {line}: state {label} at R = {} is not valid for {}", row.r_bohr, basis.species));
            continue;
        }
        by_r.entry(row.r_bohr.to_bits()).or_default().push((label, row.u_rel_cm));
    }
    if !bad.is_empty() {
        return Err(IngestError::Rows { path: name.to_string(), rows: bad });
    }
    let ss = StateLabel { n: 1, symmetry: basis.stretched_symmetry() };
    let mut out = Vec::new();
    for (bits, points) in by_r {
        let r = f64::from_bits(bits);
        let u_ss = points
            .iter()
            .find(|(l, _)| *l == ss)
            .map(|&(_, e)| e)
            .ok_or(IngestError::NoStretched { path: name.to_string(), r })?;
        let vss = v_ss(r);
        out.push(AdiabaticData { r, points: points.into_iter().map(|(l, u)| (l, vss + (u - u_ss))).collect() });
    }
    out.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok(out)
}

/// CSV in the ingestion format, one row per state.
pub fn to_relativistic_csv(sets: &[AdiabaticData]) -> String {
    let mut s = String::from("r_bohr,n,omega,sigma,reflection,u_rel_cm\n");
    for d in sets {
        for (l, e) in &d.points {
            let refl = l.symmetry.reflection.map(|r| r.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{},{:.10}\n", d.r, l.n, l.symmetry.omega, l.symmetry.inversion, refl, e));
        }
    }
    s
}
