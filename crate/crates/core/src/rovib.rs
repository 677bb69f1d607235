//! Coupled-channel ro-vibrational levels.
//!
//! Channels are `|(j_el l) J>`: the two atomic momenta couple to `j_el`, which
//! couples with the rotation `l` of the internuclear axis to the total `J`.
//! The radial coordinate is discretized with the Colbert-Miller sinc DVR for a
//! semi-infinite interval.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{Constants, ConstantsError, Species};
use crate::curves::{CurveError, CurveSet, Model, minimize};
use crate::linalg::{EigenError, sym_eigen};
use crate::spintensor::{
    Inversion, StateLabel, SymmetrizedPairBasis, adiabats, build_basis, operator_matrices,
};
use crate::tensor::{Strengths, TensorOp, product_operator};
use crate::wigner::{AngMom, cg, parity, reduced_elementary, wigner_3j, wigner_6j, wigner_9j};

#[derive(Debug, thiserror::Error)]
pub enum RovibError {
    #[error("channels mix total angular momenta J={0} and J={1}")]
    MixedJ(u32, u32),
    #[error("invalid grid: n={n}, r in [{r_min}, {r_max}]")]
    BadGrid { n: usize, r_min: f64, r_max: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// Parity of the rotational quantum number `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LParity {
    Even,
    Odd,
}

impl LParity {
    pub fn admits(self, l: u32) -> bool {
        l.is_multiple_of(2) == (self == LParity::Even)
    }
}

/// One symmetry block of the coupled problem: inversion of the electronic
/// state and parity of `l`. Total parity is `sigma (-1)^l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Block {
    pub inversion: Inversion,
    pub l_parity: LParity,
}

impl Block {
    pub const fn new(inversion: Inversion, l_parity: LParity) -> Self {
        Block { inversion, l_parity }
    }

    /// Blocks allowed by exchange symmetry. 168Er has no nuclear spin, so only
    /// states with `j_el + l` even survive; 169Tm (I = 1/2) populates all four.
    pub fn physical(species: Species) -> Vec<Block> {
        use Inversion::*;
        use LParity::*;
        match species {
            Species::Er => vec![Block::new(Gerade, Even), Block::new(Ungerade, Odd)],
            Species::Tm => vec![
                Block::new(Gerade, Even),
                Block::new(Gerade, Odd),
                Block::new(Ungerade, Even),
                Block::new(Ungerade, Odd),
            ],
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.l_parity {
            LParity::Even => "even",
            LParity::Odd => "odd",
        };
        write!(f, "{}/{}-l", self.inversion, l)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel {
    pub j_el: u32,
    pub l: u32,
    pub j_total: u32,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j_el={}, l={})J={}", self.j_el, self.l, self.j_total)
    }
}

/// Channels of one block, ordered by `(j_el, l)`. Gerade states have even `j_el`.
pub fn build_channels(j_total: u32, block: Block, species: Species) -> Vec<Channel> {
    let two_j = species.ground_j().twice();
    let mut out = Vec::new();
    for j_el in 0..=two_j {
        if (j_el % 2 == 0) != (block.inversion == Inversion::Gerade) {
            continue;
        }
        for l in j_el.abs_diff(j_total)..=(j_el + j_total) {
            if block.l_parity.admits(l) {
                out.push(Channel { j_el, l, j_total });
            }
        }
    }
    out
}

/// `<(j j) j_el' || T_k^(i) || (j j) j_el>`.
pub fn reduced_pair_element(op: TensorOp, j: AngMom, j_el_bra: u32, j_el_ket: u32) -> f64 {
    let (a, b, k) = (AngMom::int(j_el_bra), AngMom::int(j_el_ket), AngMom::int(op.k));
    let scale = (((2 * j_el_bra + 1) * (2 * j_el_ket + 1) * (2 * op.k + 1)) as f64).sqrt();
    op.components()
        .iter()
        .map(|&(l1, l2)| {
            let w = wigner_9j(j, j, AngMom::int(l1), j, j, AngMom::int(l2), a, b, k);
            scale * w * reduced_elementary(j, l1) * reduced_elementary(j, l2)
        })
        .sum()
}

/// `<l' || C_k || l>` for the renormalized spherical harmonics.
pub fn reduced_c(l_bra: u32, k: u32, l_ket: u32) -> f64 {
    let w = wigner_3j(AngMom::int(l_bra), AngMom::int(k), AngMom::int(l_ket), 0, 0, 0);
    parity(l_bra as i64) * (((2 * l_bra + 1) * (2 * l_ket + 1)) as f64).sqrt() * w
}

/// Matrix of `sum_q (-1)^q T_kq C_k,-q(R)` between channels of one `J`.
pub fn coupling_matrix(op: TensorOp, channels: &[Channel], j: AngMom) -> Result<DMatrix<f64>, RovibError> {
    if let Some(first) = channels.first()
        && let Some(other) = channels.iter().find(|c| c.j_total != first.j_total)
    {
        return Err(RovibError::MixedJ(first.j_total, other.j_total));
    }
    let n = channels.len();
    let k = AngMom::int(op.k);
    let mut g = DMatrix::zeros(n, n);
    for (a, bra) in channels.iter().enumerate() {
        for (b, ket) in channels.iter().enumerate().skip(a) {
            let tj = AngMom::int(bra.j_total);
            let six = wigner_6j(tj, AngMom::int(bra.l), AngMom::int(bra.j_el), k, AngMom::int(ket.j_el), AngMom::int(ket.l));
            if six == 0.0 {
                continue;
            }
            let rc = reduced_c(bra.l, op.k, ket.l);
            if rc == 0.0 {
                continue;
            }
            let phase = parity((bra.j_total + ket.j_el + bra.l) as i64);
            let v = phase * six * reduced_pair_element(op, j, bra.j_el, ket.j_el) * rc;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// Columns: channels. Rows: body-frame product states `|Omega1>|Omega2>` in the
/// `a1*(2j+1)+a2` ordering. Columns are orthonormal.
pub fn body_frame_transform(channels: &[Channel], j: AngMom) -> DMatrix<f64> {
    let ms: Vec<i32> = j.projections().collect();
    let n = ms.len();
    let mut w = DMatrix::zeros(n * n, channels.len());
    for (c, ch) in channels.iter().enumerate() {
        let (je, l, jt) = (AngMom::int(ch.j_el), AngMom::int(ch.l), AngMom::int(ch.j_total));
        let norm = ((2 * ch.l + 1) as f64 / (2 * ch.j_total + 1) as f64).sqrt();
        for (a1, &m1) in ms.iter().enumerate() {
            for (a2, &m2) in ms.iter().enumerate() {
                let om = m1 + m2;
                if om.unsigned_abs() > 2 * ch.j_el.min(ch.j_total) {
                    continue;
                }
                w[(a1 * n + a2, c)] = cg(j, j, m1, m2, je, om) * norm * cg(je, l, om, 0, jt, om);
            }
        }
    }
    w
}

/// Uniform radial grid `r_i = r_min + i h`, `i = 0..n`. The DVR basis
/// vanishes at `r_min - h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DvrGrid {
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for DvrGrid {
    fn default() -> Self {
        DvrGrid { n: 350, r_min: 6.5, r_max: 30.0 }
    }
}

impl DvrGrid {
    pub fn new(n: usize, r_min: f64, r_max: f64) -> Result<Self, RovibError> {
        if n < 3 || !(r_min > 0.0 && r_max > r_min) {
            return Err(RovibError::BadGrid { n, r_min, r_max });
        }
        Ok(DvrGrid { n, r_min, r_max })
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n - 1) as f64
    }

    pub fn origin(&self) -> f64 {
        self.r_min - self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| self.r_min + i as f64 * h).collect()
    }

    /// The grid used to check convergence: 1.5 times the points, 10 bohr further out.
    pub fn refined(&self) -> Self {
        DvrGrid { n: self.n * 3 / 2, r_min: self.r_min, r_max: self.r_max + 10.0 }
    }
}

/// Kinetic-energy matrix; `kinetic_unit` is `hbar^2/(2 mu)` in cm^-1 bohr^2.
pub fn dvr_kinetic(grid: &DvrGrid, kinetic_unit: f64) -> DMatrix<f64> {
    let h = grid.spacing();
    let pre = kinetic_unit / (h * h);
    DMatrix::from_fn(grid.n, grid.n, |a, b| {
        let (i, j) = ((a + 1) as f64, (b + 1) as f64);
        if a == b {
            pre * (std::f64::consts::PI.powi(2) / 3.0 - 0.5 / (i * i))
        } else {
            let s = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            pre * s * (2.0 / (i - j).powi(2) - 2.0 / (i + j).powi(2))
        }
    })
}

/// Eigenpairs of a single-channel radial problem on the grid.
pub fn radial_levels(
    grid: &DvrGrid,
    kinetic_unit: f64,
    potential: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>), RovibError> {
    let mut h = dvr_kinetic(grid, kinetic_unit);
    for (i, v) in potential.iter().enumerate() {
        h[(i, i)] += v;
    }
    Ok(sym_eigen(&h)?)
}

/// Interaction of one species within one model, with the operator matrices
/// over the symmetrized pair basis cached.
#[derive(Clone, Debug)]
pub struct Interaction {
    pub species: Species,
    pub model: Model,
    pub curves: CurveSet,
    pub kinetic_unit: f64,
    pub basis: SymmetrizedPairBasis,
    pub ops: Vec<DMatrix<f64>>,
}

impl Interaction {
    pub fn new(curves: CurveSet, model: Model, c: &Constants) -> Result<Self, RovibError> {
        let species = curves.species;
        let basis = build_basis(species);
        let ops = operator_matrices(&basis);
        Ok(Interaction { species, model, kinetic_unit: c.kinetic_unit(species)?, curves, basis, ops })
    }

    pub fn bundled(species: Species, model: Model, c: &Constants) -> Result<Self, RovibError> {
        Self::new(CurveSet::bundled(species, c)?, model, c)
    }

    pub fn active_ops(&self) -> Vec<TensorOp> {
        TensorOp::ALL.iter().copied().filter(|op| self.model == Model::Full || !op.is_weak()).collect()
    }

    pub fn strengths_at(&self, r: f64) -> Strengths {
        self.curves.strengths_at(r, self.model)
    }

    pub fn lowest_adiabat(&self, r: f64) -> f64 {
        adiabats(&self.basis, &self.ops, &self.strengths_at(r), r).lowest().energy
    }

    /// Minimum of the lowest adiabat: `(R_e, V(R_e))`.
    pub fn lowest_minimum(&self) -> Result<(f64, f64), RovibError> {
        Ok(minimize(|r| self.lowest_adiabat(r), 6.0, 16.0, 1e-7)?)
    }
}

/// Dense coupled Hamiltonian in the channel-major index `c*n + i`. Without
/// `rotation` the centrifugal term `l(l+1)/(2 mu R^2)` is left out.
pub fn hamiltonian(
    inter: &Interaction,
    j_total: u32,
    block: Block,
    grid: &DvrGrid,
    rotation: bool,
) -> Result<(Vec<Channel>, DMatrix<f64>), RovibError> {
    let channels = build_channels(j_total, block, inter.species);
    let h = dense_hamiltonian(inter, &channels, grid, rotation)?;
    Ok((channels, h))
}

fn strengths_on_grid(inter: &Interaction, r: &[f64]) -> Vec<Strengths> {
    r.iter().map(|&x| inter.strengths_at(x)).collect()
}

fn dense_hamiltonian(
    inter: &Interaction,
    channels: &[Channel],
    grid: &DvrGrid,
    rotation: bool,
) -> Result<DMatrix<f64>, RovibError> {
    let (nc, n) = (channels.len(), grid.n);
    let r = grid.points();
    let v = strengths_on_grid(inter, &r);
    let t = dvr_kinetic(grid, inter.kinetic_unit);
    let mut h = DMatrix::zeros(nc * n, nc * n);
    for c in 0..nc {
        h.view_mut((c * n, c * n), (n, n)).copy_from(&t);
    }
    for op in inter.active_ops() {
        let g = coupling_matrix(op, channels, inter.curves.j)?;
        let t = op.index();
        for a in 0..nc {
            for b in 0..nc {
                if g[(a, b)] != 0.0 {
                    for i in 0..n {
                        h[(a * n + i, b * n + i)] += g[(a, b)] * v[i][t];
                    }
                }
            }
        }
    }
    if rotation {
        for (c, ch) in channels.iter().enumerate() {
            let ll = (ch.l * (ch.l + 1)) as f64;
            for i in 0..n {
                h[(c * n + i, c * n + i)] += ll * inter.kinetic_unit / (r[i] * r[i]);
            }
        }
    }
    Ok(h)
}

/// Radial basis for the contracted solver: the lowest `nv` eigenfunctions of
/// `T + V0(1)(R)`, with the remaining terms projected onto them.
fn contracted_hamiltonian(
    inter: &Interaction,
    channels: &[Channel],
    grid: &DvrGrid,
    nv: usize,
    rotation: bool,
) -> Result<(DMatrix<f64>, DMatrix<f64>), RovibError> {
    let r = grid.points();
    let v = strengths_on_grid(inter, &r);
    let iso = TensorOp::ISO.index();
    let v0: Vec<f64> = v.iter().map(|s| s[iso]).collect();
    let (e, phi) = radial_levels(grid, inter.kinetic_unit, &v0)?;
    let nv = nv.min(grid.n);
    let phi = phi.columns(0, nv).into_owned();
    let project = |f: &dyn Fn(usize) -> f64| -> DMatrix<f64> {
        let mut scaled = phi.clone();
        for i in 0..grid.n {
            let w = f(i);
            scaled.row_mut(i).scale_mut(w);
        }
        phi.transpose() * scaled
    };
    let nc = channels.len();
    let mut h = DMatrix::zeros(nc * nv, nc * nv);
    for c in 0..nc {
        for k in 0..nv {
            h[(c * nv + k, c * nv + k)] = e[k];
        }
    }
    for op in inter.active_ops() {
        if op == TensorOp::ISO {
            continue;
        }
        let t = op.index();
        let f = project(&|i| v[i][t]);
        let g = coupling_matrix(op, channels, inter.curves.j)?;
        add_kron(&mut h, &g, &f);
    }
    if rotation {
        let f = project(&|i| inter.kinetic_unit / (r[i] * r[i]));
        let g = DMatrix::from_diagonal(&DVector::from_iterator(nc, channels.iter().map(|c| (c.l * (c.l + 1)) as f64)));
        add_kron(&mut h, &g, &f);
    }
    Ok((h, phi))
}

fn add_kron(h: &mut DMatrix<f64>, g: &DMatrix<f64>, f: &DMatrix<f64>) {
    let m = f.nrows();
    for a in 0..g.nrows() {
        for b in 0..g.ncols() {
            let x = g[(a, b)];
            if x != 0.0 {
                let mut blk = h.view_mut((a * m, b * m), (m, m));
                blk += x * f;
            }
        }
    }
}

/// Dense solves above this dimension switch to the contracted basis.
pub const DENSE_LIMIT: usize = 2500;
/// Radial functions per channel in the contracted basis.
pub const DEFAULT_NV: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Dense below [`DENSE_LIMIT`], contracted with [`DEFAULT_NV`] above.
    Auto,
    Dense,
    Contracted { nv: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelOptions {
    pub grid: DvrGrid,
    pub solver: Solver,
    pub rotation: bool,
    /// At most this many levels per `(J, block)`.
    pub max_levels: usize,
    /// Only levels below this energy (cm^-1) are kept.
    pub e_max: f64,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions { grid: DvrGrid::default(), solver: Solver::Auto, rotation: true, max_levels: 40, e_max: 0.0 }
    }
}

/// One ro-vibrational level with its assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundLevel {
    pub j_total: u32,
    pub block: Block,
    /// Rank within its `(J, block)`, from 0.
    pub index: usize,
    pub energy: f64,
    /// Dominant adiabatic state at `R_e`.
    pub label: StateLabel,
    pub label_weight: f64,
    pub v: u32,
    /// Sign changes of the dominant adiabatic component.
    pub nodes: u32,
    pub mean_abs_omega1: f64,
    /// Weight of each `|Omega|`, indexed by `|Omega|`.
    pub omega_weights: Vec<f64>,
    /// Every channel with its weight, largest first; the weights sum to 1.
    pub channel_weights: Vec<(Channel, f64)>,
}

/// Adiabatic eigenvectors at `R_e` in the product space, with their mirror
/// images under `Omega -> -Omega` (absent for `Omega = 0`).
struct LabelSet {
    labels: Vec<StateLabel>,
    vectors: Vec<DVector<f64>>,
    mirrors: Vec<Option<DVector<f64>>>,
}

fn label_set(inter: &Interaction, r_e: f64) -> LabelSet {
    let set = adiabats(&inter.basis, &inter.ops, &inter.strengths_at(r_e), r_e);
    let n = inter.curves.j.dim();
    let p = inter.basis.projector();
    let mut out = LabelSet { labels: Vec::new(), vectors: Vec::new(), mirrors: Vec::new() };
    for a in &set.states {
        let v = p * &a.vector;
        let mirror = (a.symmetry.omega > 0).then(|| {
            DVector::from_fn(n * n, |r, _| {
                let (a1, a2) = (r / n, r % n);
                v[(n - 1 - a1) * n + (n - 1 - a2)]
            })
        });
        out.labels.push(StateLabel { n: a.n, symmetry: a.symmetry });
        out.vectors.push(v);
        out.mirrors.push(mirror);
    }
    out
}

fn count_nodes(f: &DVector<f64>) -> u32 {
    let max = f.amax();
    let thr = 0.05 * max;
    let mut last = 0.0f64;
    let mut nodes = 0;
    for &x in f.iter() {
        if x.abs() > thr {
            if last != 0.0 && x.signum() != last {
                nodes += 1;
            }
            last = x.signum();
        }
    }
    nodes
}

/// Label, label weight, nodes, mean |Omega1|, |Omega| weights, channel weights.
type Assignment = (StateLabel, f64, u32, f64, Vec<f64>, Vec<(Channel, f64)>);

fn analyze(
    psi: &DMatrix<f64>,
    channels: &[Channel],
    w: &DMatrix<f64>,
    labels: &LabelSet,
    j: AngMom,
) -> Assignment {
    // psi: grid x channels; b: grid x product states
    let b = psi * w.transpose();
    let ms: Vec<i32> = j.projections().collect();
    let n = ms.len();
    let mut mean = 0.0;
    let mut omega_w = vec![0.0; n];
    for r in 0..n * n {
        let col = b.column(r).norm_squared();
        let (m1, m2) = (ms[r / n], ms[r % n]);
        mean += col * m1.unsigned_abs() as f64 / 2.0;
        omega_w[((m1 + m2).unsigned_abs() / 2) as usize] += col;
    }
    let mut best = (0usize, -1.0, DVector::zeros(0));
    for (k, v) in labels.vectors.iter().enumerate() {
        let f = &b * v;
        let mut wt = f.norm_squared();
        let mut comp = f;
        if let Some(m) = &labels.mirrors[k] {
            let g = &b * m;
            let gw = g.norm_squared();
            if gw > comp.norm_squared() {
                comp = g;
            }
            wt += gw;
        }
        if wt > best.1 {
            best = (k, wt, comp);
        }
    }
    let nodes = count_nodes(&best.2);
    let mut cw: Vec<(Channel, f64)> = channels.iter().enumerate().map(|(c, ch)| (*ch, psi.column(c).norm_squared())).collect();
    cw.sort_by(|a, b| b.1.total_cmp(&a.1));
    while omega_w.last().is_some_and(|&x| x < 1e-14) && omega_w.len() > 1 {
        omega_w.pop();
    }
    (labels.labels[best.0], best.1, nodes, mean, omega_w, cw)
}

fn solve_with_labels(
    inter: &Interaction,
    j_total: u32,
    block: Block,
    opts: &LevelOptions,
    labels: &LabelSet,
) -> Result<Vec<BoundLevel>, RovibError> {
    let channels = build_channels(j_total, block, inter.species);
    if channels.is_empty() {
        return Ok(Vec::new());
    }
    let grid = &opts.grid;
    let nc = channels.len();
    let solver = match opts.solver {
        Solver::Auto if nc * grid.n <= DENSE_LIMIT => Solver::Dense,
        Solver::Auto => Solver::Contracted { nv: DEFAULT_NV },
        s => s,
    };
    let (h, phi) = match solver {
        Solver::Contracted { nv } => contracted_hamiltonian(inter, &channels, grid, nv, opts.rotation)?,
        _ => (dense_hamiltonian(inter, &channels, grid, opts.rotation)?, DMatrix::identity(grid.n, grid.n)),
    };
    let (vals, vecs) = sym_eigen(&h)?;
    let nb = phi.ncols();
    let w = body_frame_transform(&channels, inter.curves.j);
    let mut levels = Vec::new();
    for k in 0..vals.len().min(opts.max_levels) {
        if vals[k] > opts.e_max {
            break;
        }
        let coeffs = DMatrix::from_column_slice(nb, nc, vecs.column(k).as_slice());
        let psi = &phi * coeffs;
        let (label, label_weight, nodes, mean_abs_omega1, omega_weights, channel_weights) =
            analyze(&psi, &channels, &w, labels, inter.curves.j);
        levels.push(BoundLevel {
            j_total,
            block,
            index: k,
            energy: vals[k],
            label,
            label_weight,
            v: nodes,
            nodes,
            mean_abs_omega1,
            omega_weights,
            channel_weights,
        });
    }
    assign_v(&mut levels);
    Ok(levels)
}

/// Within each label ladder (already in energy order) `v` follows the node
/// count but must increase by at least one per level.
fn assign_v(levels: &mut [BoundLevel]) {
    let mut last: std::collections::HashMap<StateLabel, u32> = Default::default();
    for lv in levels.iter_mut() {
        lv.v = match last.get(&lv.label) {
            Some(&p) => lv.nodes.max(p + 1),
            None => lv.nodes,
        };
        last.insert(lv.label, lv.v);
    }
}

/// Bound levels of one `(J, block)`, labelled against the adiabats at the
/// minimum of the lowest adiabat.
pub fn solve_block(inter: &Interaction, j_total: u32, block: Block, opts: &LevelOptions) -> Result<Vec<BoundLevel>, RovibError> {
    let (r_e, _) = inter.lowest_minimum()?;
    solve_with_labels(inter, j_total, block, opts, &label_set(inter, r_e))
}

/// Levels for every `J` in `j_values` and every block in `blocks`, sorted by
/// `(J, block, energy)`.
pub fn bound_levels(
    inter: &Interaction,
    j_values: &[u32],
    blocks: &[Block],
    opts: &LevelOptions,
) -> Result<Vec<BoundLevel>, RovibError> {
    let (r_e, _) = inter.lowest_minimum()?;
    let labels = label_set(inter, r_e);
    let jobs: Vec<(u32, Block)> = j_values.iter().flat_map(|&j| blocks.iter().map(move |&b| (j, b))).collect();
    let parts: Result<Vec<Vec<BoundLevel>>, RovibError> =
        jobs.par_iter().map(|&(j, b)| solve_with_labels(inter, j, b, opts, &labels)).collect();
    Ok(parts?.into_iter().flatten().collect())
}

/// Lowest level over several `J` of one block: `(J, energy)`.
pub fn lowest_over_j(levels: &[BoundLevel]) -> Option<(u32, f64)> {
    levels.iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).map(|l| (l.j_total, l.energy))
}

/// Change of the lowest levels when the grid is refined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub j_total: u32,
    pub block: Block,
    pub grid: DvrGrid,
    pub refined: DvrGrid,
    pub compared: usize,
    pub max_shift: f64,
}

pub fn convergence_report(
    inter: &Interaction,
    j_total: u32,
    block: Block,
    opts: &LevelOptions,
    count: usize,
) -> Result<ConvergenceReport, RovibError> {
    let (r_e, _) = inter.lowest_minimum()?;
    let labels = label_set(inter, r_e);
    let mut o = *opts;
    o.max_levels = count;
    let a = solve_with_labels(inter, j_total, block, &o, &labels)?;
    o.grid = opts.grid.refined();
    let b = solve_with_labels(inter, j_total, block, &o, &labels)?;
    let compared = a.len().min(b.len());
    let max_shift = a.iter().zip(&b).map(|(x, y)| (x.energy - y.energy).abs()).fold(0.0, f64::max);
    Ok(ConvergenceReport { j_total, block, grid: opts.grid, refined: o.grid, compared, max_shift })
}

/// Harmonic-fit half width around `R_e` for the curvature.
pub const CURVATURE_HALF_WIDTH: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopicConstants {
    pub species: Species,
    pub model: Model,
    /// Minimum of the lowest adiabat.
    pub r_e: f64,
    pub d_e: f64,
    pub b_e: f64,
    /// Harmonic frequency from a parabola fitted over `R_e +- 0.2` bohr.
    pub omega_e: f64,
    /// `E(v=1) - E(v=0)` on the lowest adiabat, no rotation.
    pub vib_spacing: f64,
    /// Minimum of the spin-stretched potential.
    pub r_e_ss: f64,
    pub d_e_ss: f64,
    pub b_e_ss: f64,
    pub lowest_state: StateLabel,
    pub v2_at_r_e: f64,
    /// `sqrt(6) V2(1)(R_e)`, the spacing unit of the two-tensor fine-structure ladder.
    pub ladder_unit: f64,
}

pub fn spectroscopic_constants(inter: &Interaction, grid: &DvrGrid) -> Result<SpectroscopicConstants, RovibError> {
    let (r_e, v_e) = inter.lowest_minimum()?;
    let (r_e_ss, v_ss) = minimize(|r| inter.curves.v_ss.eval(r), 6.0, 16.0, 1e-7)?;
    let set = adiabats(&inter.basis, &inter.ops, &inter.strengths_at(r_e), r_e);
    let low = set.lowest();
    let lowest_state = StateLabel { n: low.n, symmetry: low.symmetry };

    // least-squares parabola a + b x + c x^2 on 41 points
    let pts: Vec<(f64, f64)> = (-20..=20)
        .map(|k| {
            let x = CURVATURE_HALF_WIDTH * k as f64 / 20.0;
            (x, inter.lowest_adiabat(r_e + x))
        })
        .collect();
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32));
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * y)).expect("regular normal equations");
    let k = 2.0 * coef[2];
    let omega_e = (2.0 * inter.kinetic_unit * k).sqrt();

    let pot: Vec<f64> = grid.points().iter().map(|&r| inter.lowest_adiabat(r)).collect();
    let (e, _) = radial_levels(grid, inter.kinetic_unit, &pot)?;
    let v2 = inter.curves.strength(TensorOp::ANISO).eval(r_e);
    Ok(SpectroscopicConstants {
        species: inter.species,
        model: inter.model,
        r_e,
        d_e: -v_e,
        b_e: inter.kinetic_unit / (r_e * r_e),
        omega_e,
        vib_spacing: e[1] - e[0],
        r_e_ss,
        d_e_ss: -v_ss,
        b_e_ss: inter.kinetic_unit / (r_e_ss * r_e_ss),
        lowest_state,
        v2_at_r_e: v2,
        ladder_unit: 6f64.sqrt() * v2,
    })
}

/// Body-frame matrix of the centrifugal operator `l(l+1)` restricted to
/// `|Delta Omega| = 1`; its norm measures the Coriolis coupling.
pub fn coriolis_norm(j_total: u32, block: Block, species: Species) -> f64 {
    let channels = build_channels(j_total, block, species);
    let j = species.ground_j();
    let w = body_frame_transform(&channels, j);
    let l2 = DMatrix::from_diagonal(&DVector::from_iterator(
        channels.len(),
        channels.iter().map(|c| (c.l * (c.l + 1)) as f64),
    ));
    let body = &w * l2 * w.transpose();
    let ms: Vec<i32> = j.projections().collect();
    let n = ms.len();
    let omega = |r: usize| ms[r / n] + ms[r % n];
    let mut s = 0.0;
    for a in 0..n * n {
        for b in 0..n * n {
            if (omega(a) - omega(b)).abs() == 2 {
                s += body[(a, b)].powi(2);
            }
        }
    }
    s.sqrt()
}

/// Body-frame component `T_k0` over the product space; used to check the
/// channel transformation.
pub fn body_frame_operator(op: TensorOp, j: AngMom) -> DMatrix<f64> {
    product_operator(op, j, 0)
}
