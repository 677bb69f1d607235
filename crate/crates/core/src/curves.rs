//! Strength functions `V_k^(i)(R)` over all separations: tabulated ab initio
//! points, Akima interpolation of `R^6 V`, short-range extrapolation and
//! dispersive tails.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, Species};
use crate::dispersion::{DispersionError, DispersionSet, LongRangeExtras, long_range_extras, vdw_coefficients};
use crate::lines::LineList;
use crate::tensor::{Strengths, TensorOp};
use crate::wigner::AngMom;

/// Curves may be evaluated on `[R_LOW, R_HIGH]` bohr only.
pub const R_LOW: f64 = 0.5;
pub const R_HIGH: f64 = 1.0e4;
/// Distance of the appended dispersive point beyond the last tabulated node.
pub const DISP_OFFSET: f64 = 0.5;
/// Join radius of the anisotropic strength with its `C2(1)/R^6` law.
pub const R_REL: f64 = 12.5;

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("R = {0} bohr is outside the validity range [{R_LOW}, {R_HIGH}]")]
    OutOfRange(f64),
    #[error("table needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("table abscissae must be strictly increasing (row {0})")]
    NotIncreasing(usize),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("the curve has no minimum inside [{0}, {1}]")]
    NoMinimum(f64, f64),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

/// Piecewise cubic Hermite interpolant: values and first derivatives at nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
}

impl PiecewiseCubic {
    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&xi| xi <= t).clamp(1, n - 1) - 1
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (y0, y1, s0, s1) = (self.y[i], self.y[i + 1], self.s[i] * h, self.s[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * s0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * s1
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (y0, y1, s0, s1) = (self.y[i], self.y[i + 1], self.s[i] * h, self.s[i + 1] * h);
        let u2 = u * u;
        ((6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * s0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * s1)
            / h
    }
}

fn check_abscissae(x: &[f64]) -> Result<(), CurveError> {
    for i in 1..x.len() {
        if x[i].partial_cmp(&x[i - 1]) != Some(std::cmp::Ordering::Greater) {
            return Err(CurveError::NotIncreasing(i));
        }
    }
    Ok(())
}

/// Akima's 1970 local interpolation. Falls back to a natural cubic spline
/// below five points.
pub fn akima_interpolate(x: &[f64], y: &[f64]) -> Result<PiecewiseCubic, CurveError> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 2 {
        return Err(CurveError::TooFewPoints { need: 2, got: n });
    }
    check_abscissae(x)?;
    if n < 5 {
        log::warn!("{n} points are too few for the Akima method; using a natural cubic spline");
        return Ok(natural_cubic(x, y));
    }
    // segment slopes with two extrapolated slopes at each end, offset by 2
    let mut m = vec![0.0; n + 3];
    for i in 0..n - 1 {
        m[i + 2] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    }
    m[1] = 2.0 * m[2] - m[3];
    m[0] = 2.0 * m[1] - m[2];
    m[n + 1] = 2.0 * m[n] - m[n - 1];
    m[n + 2] = 2.0 * m[n + 1] - m[n];
    let s = (0..n)
        .map(|i| {
            let (mm2, mm1, m0, mp1) = (m[i], m[i + 1], m[i + 2], m[i + 3]);
            let w1 = (mp1 - m0).abs();
            let w2 = (mm1 - mm2).abs();
            if w1 + w2 == 0.0 { 0.5 * (mm1 + m0) } else { (w1 * mm1 + w2 * m0) / (w1 + w2) }
        })
        .collect();
    Ok(PiecewiseCubic { x: x.to_vec(), y: y.to_vec(), s })
}

fn natural_cubic(x: &[f64], y: &[f64]) -> PiecewiseCubic {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    // second derivatives, zero at both ends
    let mut mom = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        for r in 1..k {
            let w = h[r] / diag[r - 1];
            diag[r] -= w * h[r];
            rhs[r] -= w * rhs[r - 1];
        }
        for r in (0..k).rev() {
            let upper = if r + 1 < k { h[r + 1] * mom[r + 2] } else { 0.0 };
            mom[r + 1] = (rhs[r] - upper) / diag[r];
        }
    }
    let mut s = vec![0.0; n];
    for i in 0..n - 1 {
        s[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * mom[i] + mom[i + 1]) / 6.0;
    }
    s[n - 1] = (y[n - 1] - y[n - 2]) / h[n - 2] + h[n - 2] * (mom[n - 2] + 2.0 * mom[n - 1]) / 6.0;
    PiecewiseCubic { x: x.to_vec(), y: y.to_vec(), s }
}

/// Tabulated `(R, V)` points, bohr and cm^-1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCurve {
    pub points: Vec<(f64, f64)>,
}

impl TabulatedCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, CurveError> {
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        check_abscissae(&x)?;
        Ok(TabulatedCurve { points })
    }

    pub fn r_min(&self) -> f64 {
        self.points[0].0
    }

    pub fn r_max(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

/// One row of a strength table; `v0` is blank where the table omits it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthRow {
    pub r_bohr: f64,
    pub v0_cm: Option<f64>,
    pub v2_cm: f64,
}

const ER_VSS: &str = include_str!("../data/er_vss.csv");
const TM_VSS: &str = include_str!("../data/tm_vss.csv");
const ER_V2: &str = include_str!("../data/er_v2.csv");
const TM_V2: &str = include_str!("../data/tm_v2.csv");

fn read_csv<T: serde::de::DeserializeOwned, R: Read>(reader: R, name: &str) -> Result<Vec<T>, CurveError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CurveError::Parse { path: name.to_string(), msg: format!("line {}: {e}", i + 2) }))
        .collect()
}

#[derive(Deserialize)]
struct VssRow {
    r_bohr: f64,
    v_cm: f64,
}

/// `r_bohr,v_cm` table of the spin-stretched potential.
pub fn parse_vss<R: Read>(reader: R, name: &str) -> Result<TabulatedCurve, CurveError> {
    let rows: Vec<VssRow> = read_csv(reader, name)?;
    TabulatedCurve::new(rows.into_iter().map(|r| (r.r_bohr, r.v_cm)).collect())
}

/// `r_bohr,v0_cm,v2_cm` table of the fitted strengths.
pub fn parse_strength_table<R: Read>(reader: R, name: &str) -> Result<Vec<StrengthRow>, CurveError> {
    let rows: Vec<StrengthRow> = read_csv(reader, name)?;
    let x: Vec<f64> = rows.iter().map(|r| r.r_bohr).collect();
    check_abscissae(&x)?;
    Ok(rows)
}

fn open(path: &Path) -> Result<std::fs::File, CurveError> {
    std::fs::File::open(path).map_err(|source| CurveError::Io { path: path.display().to_string(), source })
}

pub fn load_vss(path: &Path) -> Result<TabulatedCurve, CurveError> {
    parse_vss(open(path)?, &path.display().to_string())
}

pub fn load_strength_table(path: &Path) -> Result<Vec<StrengthRow>, CurveError> {
    parse_strength_table(open(path)?, &path.display().to_string())
}

pub fn bundled_vss(species: Species) -> TabulatedCurve {
    let text = match species {
        Species::Er => ER_VSS,
        Species::Tm => TM_VSS,
    };
    parse_vss(text.as_bytes(), "bundled").expect("bundled table is valid")
}

pub fn bundled_strength_table(species: Species) -> Vec<StrengthRow> {
    let text = match species {
        Species::Er => ER_V2,
        Species::Tm => TM_V2,
    };
    parse_strength_table(text.as_bytes(), "bundled").expect("bundled table is valid")
}

/// `c3/R^3 + c5/R^5 + c6/R^6 + c8/R^8 + c10/R^10` in cm^-1 with `R` in bohr.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LongRange {
    pub c3: f64,
    pub c5: f64,
    pub c6: f64,
    pub c8: f64,
    pub c10: f64,
}

impl LongRange {
    pub fn value(&self, r: f64) -> f64 {
        let r2 = r * r;
        let r3 = r2 * r;
        let r5 = r3 * r2;
        let r6 = r3 * r3;
        self.c3 / r3 + self.c5 / r5 + self.c6 / r6 + self.c8 / (r6 * r2) + self.c10 / (r6 * r2 * r2)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -3.0 * self.c3 / r.powi(4)
            - 5.0 * self.c5 / r.powi(6)
            - 6.0 * self.c6 / r.powi(7)
            - 8.0 * self.c8 / r.powi(9)
            - 10.0 * self.c10 / r.powi(11)
    }
}

/// Tabulated region: linear below `r_min`, Akima on `R^6 V` up to `r_join`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineRegion {
    pub r_min: f64,
    pub r_join: f64,
    /// Slope through the first two tabulated points.
    pub slope: f64,
    pub spline: PiecewiseCubic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Tabulated { region: SplineRegion, tail: LongRange },
    PowerLaw(LongRange),
    /// Pointwise linear combination of other strengths.
    Combination(Vec<(f64, AssembledStrength)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembledStrength {
    pub name: String,
    pub shape: Shape,
}

impl AssembledStrength {
    /// Value in cm^-1; errors outside the validity range.
    pub fn value(&self, r: f64) -> Result<f64, CurveError> {
        if !(R_LOW..=R_HIGH).contains(&r) {
            return Err(CurveError::OutOfRange(r));
        }
        Ok(self.eval(r))
    }

    /// Value without the range check.
    pub fn eval(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Tabulated { region, tail } => {
                if r < region.r_min {
                    let v0 = region.spline.value(region.r_min) / region.r_min.powi(6);
                    v0 + region.slope * (r - region.r_min)
                } else if r <= region.r_join {
                    region.spline.value(r) / r.powi(6)
                } else {
                    tail.value(r)
                }
            }
            Shape::PowerLaw(lr) => lr.value(r),
            Shape::Combination(terms) => terms.iter().map(|(w, s)| w * s.eval(r)).sum(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Tabulated { region, tail } => {
                if r < region.r_min {
                    region.slope
                } else if r <= region.r_join {
                    let r6 = r.powi(6);
                    region.spline.derivative(r) / r6 - 6.0 * region.spline.value(r) / (r6 * r)
                } else {
                    tail.derivative(r)
                }
            }
            Shape::PowerLaw(lr) => lr.derivative(r),
            Shape::Combination(terms) => terms.iter().map(|(w, s)| w * s.derivative(r)).sum(),
        }
    }

    /// Radii where the functional form changes.
    pub fn joins(&self) -> Vec<f64> {
        let mut out = match &self.shape {
            Shape::Tabulated { region, .. } => vec![region.r_min, region.r_join],
            Shape::PowerLaw(_) => vec![],
            Shape::Combination(terms) => terms.iter().flat_map(|(_, s)| s.joins()).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

fn tabulated(name: &str, nodes: &[(f64, f64)], extra: (f64, f64), tail: LongRange) -> Result<AssembledStrength, CurveError> {
    if nodes.len() < 2 {
        return Err(CurveError::TooFewPoints { need: 2, got: nodes.len() });
    }
    let mut x: Vec<f64> = nodes.iter().map(|p| p.0).collect();
    let mut y: Vec<f64> = nodes.iter().map(|p| p.1 * p.0.powi(6)).collect();
    x.push(extra.0);
    y.push(extra.1 * extra.0.powi(6));
    let spline = akima_interpolate(&x, &y)?;
    let slope = (nodes[1].1 - nodes[0].1) / (nodes[1].0 - nodes[0].0);
    Ok(AssembledStrength {
        name: name.to_string(),
        shape: Shape::Tabulated { region: SplineRegion { r_min: nodes[0].0, r_join: extra.0, slope, spline }, tail },
    })
}

/// `C6`, `C8`, `C10` (cm^-1 bohr^n) of the dispersive tail; `C8` and `C10`
/// reproduce the two outermost tabulated points.
pub fn dispersive_tail(table: &TabulatedCurve, c6_cm: f64) -> Result<LongRange, CurveError> {
    let n = table.points.len();
    if n < 2 {
        return Err(CurveError::TooFewPoints { need: 2, got: n });
    }
    let (ra, va) = table.points[n - 2];
    let (rb, vb) = table.points[n - 1];
    // R^6 V - C6 = C8/R^2 + C10/R^4
    let (ya, yb) = (va * ra.powi(6) - c6_cm, vb * rb.powi(6) - c6_cm);
    let (a11, a12, a21, a22) = (ra.powi(-2), ra.powi(-4), rb.powi(-2), rb.powi(-4));
    let det = a11 * a22 - a12 * a21;
    let c8 = (ya * a22 - a12 * yb) / det;
    let c10 = (a11 * yb - a21 * ya) / det;
    Ok(LongRange { c6: c6_cm, c8, c10, ..Default::default() })
}

/// Spin-stretched potential joined to `C6,ss/R^6 + C8/R^8 + C10/R^10`.
pub fn assemble_spin_stretched(table: &TabulatedCurve, c_ss: f64, c: &Constants) -> Result<AssembledStrength, CurveError> {
    let tail = dispersive_tail(table, c_ss * c.eh_to_cm())?;
    let r_disp = table.r_max() + DISP_OFFSET;
    tabulated("V_ss", &table.points, (r_disp, tail.value(r_disp)), tail)
}

/// Anisotropic strength joined to `C2(1)/R^6` at [`R_REL`].
pub fn assemble_v2(rows: &[StrengthRow], c21: f64, c: &Constants) -> Result<AssembledStrength, CurveError> {
    let tail = LongRange { c6: c21 * c.eh_to_cm(), ..Default::default() };
    let nodes: Vec<(f64, f64)> = rows.iter().map(|r| (r.r_bohr, r.v2_cm)).collect();
    if let Some(last) = nodes.last()
        && last.0 >= R_REL
    {
        return Err(CurveError::Parse { path: "strength table".into(), msg: format!("nodes must lie below {R_REL} bohr") });
    }
    tabulated("V2(1)", &nodes, (R_REL, tail.value(R_REL)), tail)
}

/// `V0(1) = V_ss - (2j)(2j-1) V2(1)/sqrt6`.
pub fn strength_v0(j: AngMom, v_ss: &AssembledStrength, v2: &AssembledStrength) -> AssembledStrength {
    let tj = j.twice() as f64;
    AssembledStrength {
        name: "V0(1)".into(),
        shape: Shape::Combination(vec![(1.0, v_ss.clone()), (-tj * (tj - 1.0) / 6f64.sqrt(), v2.clone())]),
    }
}

/// One of the five weak strengths as a pure long-range law, including the
/// magnetic dipole term in `V2(2)` and the quadrupole term in `V4(1)`.
pub fn weak_strength(
    op: TensorOp,
    disp: &DispersionSet,
    extras: &LongRangeExtras,
    c: &Constants,
) -> Result<AssembledStrength, crate::tensor::InvalidOp> {
    if !op.is_weak() {
        return Err(crate::tensor::InvalidOp { k: op.k, i: op.i });
    }
    let eh = c.eh_to_cm();
    let mut lr = LongRange { c6: disp.get(op) * eh, ..Default::default() };
    match (op.k, op.i) {
        (2, 2) => lr.c3 = extras.d2_2 * eh,
        (4, 1) => lr.c5 = extras.q4_1 * eh,
        _ => {}
    }
    Ok(AssembledStrength { name: format!("V{}({})", op.k, op.i), shape: Shape::PowerLaw(lr) })
}

/// Which strengths enter the interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    TwoTensor,
    Full,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::TwoTensor => "two_tensor",
            Model::Full => "full",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_tensor" | "two" | "2" => Ok(Model::TwoTensor),
            "full" | "all" | "7" => Ok(Model::Full),
            _ => Err(format!("unknown model {s:?} (two_tensor or full)")),
        }
    }
}

/// One-sigma uncertainty of `V_ss`: `2 u(C0(1))/R^6` below the last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VssUncertainty {
    pub two_u_c0_cm: f64,
    pub r_max: f64,
}

impl VssUncertainty {
    pub fn at(&self, r: f64) -> Option<f64> {
        (r < self.r_max).then(|| self.two_u_c0_cm / r.powi(6))
    }
}

/// All seven strengths of one species.
#[derive(Clone, Debug)]
pub struct CurveSet {
    pub species: Species,
    pub j: AngMom,
    pub v_ss: AssembledStrength,
    /// Ordered as [`TensorOp::ALL`].
    pub strengths: Vec<AssembledStrength>,
    pub dispersion: DispersionSet,
    pub extras: LongRangeExtras,
    pub vss_uncertainty: VssUncertainty,
}

impl CurveSet {
    pub fn build(
        species: Species,
        vss: &TabulatedCurve,
        table: &[StrengthRow],
        dispersion: DispersionSet,
        extras: LongRangeExtras,
        c: &Constants,
    ) -> Result<Self, CurveError> {
        let j = species.ground_j();
        let v_ss = assemble_spin_stretched(vss, dispersion.c_ss(), c)?;
        let v2 = assemble_v2(table, dispersion.get(TensorOp::ANISO), c)?;
        let mut strengths = vec![strength_v0(j, &v_ss, &v2), v2];
        for op in TensorOp::ALL.iter().filter(|o| o.is_weak()) {
            strengths.push(weak_strength(*op, &dispersion, &extras, c).expect("weak operator"));
        }
        let vss_uncertainty = VssUncertainty {
            two_u_c0_cm: 2.0 * dispersion.uncertainty(TensorOp::ISO) * c.eh_to_cm(),
            r_max: vss.r_max(),
        };
        Ok(CurveSet { species, j, v_ss, strengths, dispersion, extras, vss_uncertainty })
    }

    /// Curves from the bundled tables and line lists.
    pub fn bundled(species: Species, c: &Constants) -> Result<Self, CurveError> {
        let lines = LineList::bundled(species);
        let dispersion = vdw_coefficients(&lines, c)?;
        let extras = long_range_extras(species, c)?;
        Self::build(species, &bundled_vss(species), &bundled_strength_table(species), dispersion, extras, c)
    }

    pub fn strength(&self, op: TensorOp) -> &AssembledStrength {
        &self.strengths[op.index()]
    }

    /// All seven strengths at `r`; the weak ones are zero in the two-tensor model.
    pub fn strengths_at(&self, r: f64, model: Model) -> Strengths {
        let mut s = [0.0; 7];
        for (t, op) in TensorOp::ALL.iter().enumerate() {
            if model == Model::Full || !op.is_weak() {
                s[t] = self.strengths[t].eval(r);
            }
        }
        s
    }
}

/// Minimum of `f` on `[a, b]`: coarse scan, then golden-section search to `tol`.
pub fn minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64), CurveError> {
    const SCAN: usize = 400;
    let h = (b - a) / SCAN as f64;
    let (mut ib, mut fb) = (0, f(a));
    for i in 1..=SCAN {
        let v = f(a + i as f64 * h);
        if v < fb {
            ib = i;
            fb = v;
        }
    }
    if ib == 0 || ib == SCAN {
        return Err(CurveError::NoMinimum(a, b));
    }
    let (mut lo, mut hi) = (a + (ib - 1) as f64 * h, a + (ib + 1) as f64 * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)))
}

/// Samples `(R, V)` of one curve as CSV.
pub fn sample_csv(curves: &[(&str, &AssembledStrength)], grid: &[f64]) -> Result<String, CurveError> {
    let mut s = String::from("r_bohr");
    for (name, _) in curves {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for &r in grid {
        s.push_str(&format!("{r}"));
        for (_, c) in curves {
            s.push_str(&format!(",{:.10e}", c.value(r)?));
        }
        s.push('\n');
    }
    Ok(s)
}
