use std::path::PathBuf;

use lndimer::curves::{
    AssembledStrength, CurveSet, bundled_strength_table, bundled_vss, load_strength_table, load_vss, sample_csv,
};
use lndimer::dispersion::{INDEPENDENT, long_range_extras, monte_carlo_uncertainties, vdw_coefficients};
use lndimer::lines::{LineList, parse_linelist};
use lndimer::rovib::{
    BoundLevel, ConvergenceReport, DvrGrid, Interaction, LevelOptions, Solver, bound_levels, convergence_report,
    spectroscopic_constants,
};
use lndimer::spintensor::{
    AdiabaticData, FitOptions, adiabats as adiabat_set, build_basis, fit_strengths, ingest_relativistic,
    operator_matrices, to_relativistic_csv,
};
use lndimer::{Constants, Species, TensorOp};
use serde::Serialize;

use crate::error::Failure;
use crate::parse::{self, Curve};
use crate::{
    AdiabatsArgs, ConstantsArgs, CurvesArgs, DataArgs, DispersionArgs, FitArgs, Format, GridArgs, LevelsArgs, Outcome,
    SolverKind,
};

fn outcome(body: String, inputs: Vec<PathBuf>) -> Outcome {
    Outcome { body, inputs, convergence: None, late_failure: None }
}

fn json(v: &impl Serialize) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn only_json(format: Format, command: &str) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::validation(format!("{command} writes JSON only"))),
    }
}

fn load_lines(species: Species, paths: &[PathBuf]) -> Result<LineList, Failure> {
    if paths.is_empty() {
        return Ok(LineList::bundled(species));
    }
    let mut records = Vec::new();
    for p in paths {
        records.extend(parse_linelist(p, species)?.records);
    }
    Ok(LineList::new(species, records))
}

fn load_curves(species: Species, data: &DataArgs, c: &Constants) -> Result<CurveSet, Failure> {
    let lines = load_lines(species, &data.lines)?;
    let dispersion = vdw_coefficients(&lines, c)?;
    let extras = long_range_extras(species, c)?;
    let vss = match &data.vss {
        Some(p) => load_vss(p)?,
        None => bundled_vss(species),
    };
    let table = match &data.v2_table {
        Some(p) => load_strength_table(p)?,
        None => bundled_strength_table(species),
    };
    Ok(CurveSet::build(species, &vss, &table, dispersion, extras, c)?)
}

fn op_name(op: TensorOp) -> String {
    format!("C{}({})", op.k, op.i)
}

#[derive(Serialize)]
struct CoefficientRow {
    operator: String,
    k: u32,
    i: u32,
    value: f64,
    u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    u_mc: Option<f64>,
}

#[derive(Serialize)]
struct DispersionReport {
    species: Species,
    units: &'static str,
    coefficients: Vec<CoefficientRow>,
    /// Among C0(1), C2(1), C0(2), C2(2).
    correlated: Vec<String>,
    correlations: [[f64; 4]; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    correlations_mc: Option<[[f64; 4]; 4]>,
    c_ss: f64,
    /// E_h a0^3.
    d2_2: f64,
    /// E_h a0^5.
    q4_1: f64,
    dispersion: lndimer::dispersion::DispersionSet,
}

pub fn dispersion(a: &DispersionArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    let lines = load_lines(a.species, &a.lines)?;
    let set = vdw_coefficients(&lines, c)?;
    let extras = long_range_extras(a.species, c)?;
    let mc = match a.montecarlo {
        Some(n) if n < 2 => return Err(Failure::validation("--montecarlo needs at least 2 samples")),
        Some(n) => Some(monte_carlo_uncertainties(&lines, c, n, a.seed)?),
        None => None,
    };
    let coefficients: Vec<CoefficientRow> = TensorOp::ALL
        .iter()
        .map(|&op| CoefficientRow {
            operator: op_name(op),
            k: op.k,
            i: op.i,
            value: set.get(op),
            u: set.uncertainty(op),
            u_mc: mc.as_ref().map(|m| m.0[op.index()]),
        })
        .collect();
    let body = match format {
        Format::Json => json(&DispersionReport {
            species: a.species,
            units: "E_h a0^6",
            correlated: INDEPENDENT.iter().map(|&o| op_name(o)).collect(),
            correlations: set.corr,
            correlations_mc: mc.map(|m| m.1),
            c_ss: set.c_ss(),
            d2_2: extras.d2_2,
            q4_1: extras.q4_1,
            coefficients,
            dispersion: set,
        })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &coefficients {
                w.serialize(row)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::validation(e.to_string()))?).expect("utf-8")
        }
    };
    Ok(outcome(body, a.lines.clone()))
}

fn strength_of(set: &CurveSet, curve: Curve) -> &AssembledStrength {
    match curve {
        Curve::Vss => &set.v_ss,
        Curve::Strength(op) => set.strength(op),
    }
}

pub fn curves(a: &CurvesArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    let grid = parse::grid(&a.grid)?;
    let which = parse::curves(&a.which)?;
    let set = load_curves(a.species, &a.data, c)?;
    let named: Vec<(String, &AssembledStrength)> = which.iter().map(|&w| (w.name(), strength_of(&set, w))).collect();
    let body = match format {
        Format::Csv => {
            let refs: Vec<(&str, &AssembledStrength)> = named.iter().map(|(n, s)| (n.as_str(), *s)).collect();
            sample_csv(&refs, &grid)?
        }
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert("r_bohr".into(), serde_json::to_value(&grid)?);
            for (name, s) in &named {
                let v = grid.iter().map(|&r| s.value(r)).collect::<Result<Vec<f64>, _>>()?;
                m.insert(name.clone(), serde_json::to_value(v)?);
            }
            json(&m)?
        }
    };
    Ok(outcome(body, a.data.files()))
}

pub fn adiabats(a: &AdiabatsArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    let rs = match (&a.r, &a.grid) {
        (Some(r), _) => parse::list(r)?,
        (None, Some(g)) => parse::grid(g)?,
        (None, None) => return Err(Failure::validation("adiabats needs --r or --grid")),
    };
    if rs.is_empty() {
        return Err(Failure::validation("no separations given"));
    }
    let inter = Interaction::new(load_curves(a.species, &a.data, c)?, a.model, c)?;
    let mut data: Vec<AdiabaticData> = Vec::with_capacity(rs.len());
    for &r in &rs {
        inter.curves.v_ss.value(r)?;
        data.push(adiabat_set(&inter.basis, &inter.ops, &inter.strengths_at(r), r).to_data());
    }
    let body = match format {
        Format::Csv => to_relativistic_csv(&data),
        Format::Json => json(&data)?,
    };
    Ok(outcome(body, a.data.files()))
}

pub fn strengths_fit(a: &FitArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    if !(a.u.is_finite() && a.u > 0.0) {
        return Err(Failure::validation(format!("--u must be positive, got {}", a.u)));
    }
    let curves = load_curves(a.species, &a.data, c)?;
    let basis = build_basis(a.species);
    let ops = operator_matrices(&basis);
    let data = ingest_relativistic(&a.input, &basis, |r| curves.v_ss.eval(r))?;
    let opts = FitOptions {
        active: if a.two_tensor { vec![TensorOp::ISO, TensorOp::ANISO] } else { TensorOp::ALL.to_vec() },
        constrain: !a.unconstrained,
        u: a.u,
    };
    let fits = data.iter().map(|d| fit_strengths(&basis, &ops, d, &opts)).collect::<Result<Vec<_>, _>>()?;
    let body = match format {
        Format::Json => json(&fits)?,
        Format::Csv => {
            let mut s = String::from("r_bohr");
            for op in TensorOp::ALL {
                s.push_str(&format!(",v{0}_{1},u_v{0}_{1}", op.k, op.i));
            }
            s.push_str(",chi2_nu,dof,dropped\n");
            for f in &fits {
                s.push_str(&format!("{}", f.r));
                for t in 0..7 {
                    s.push_str(&format!(",{:.10e},{:.10e}", f.strengths[t], f.u[t]));
                }
                let dropped: Vec<String> = f.dropped.iter().map(|&o| op_name(o)).collect();
                s.push_str(&format!(",{:.6},{},{}\n", f.chi2_nu, f.dof, dropped.join(" ")));
            }
            s
        }
    };
    let mut inputs = vec![a.input.clone()];
    inputs.extend(a.data.files());
    Ok(outcome(body, inputs))
}

fn dvr_grid(g: &GridArgs) -> Result<DvrGrid, Failure> {
    Ok(DvrGrid::new(g.grid_n, g.r_min, g.r_max)?)
}

const LEVEL_HEADER: [&str; 11] = [
    "J",
    "block",
    "index",
    "energy_cm",
    "v",
    "nodes",
    "omega_label",
    "label_n",
    "label_weight",
    "mean_abs_omega1",
    "top3_channels",
];

fn levels_csv(levels: &[BoundLevel]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LEVEL_HEADER)?;
    for l in levels {
        let top: Vec<String> =
            l.channel_weights.iter().take(3).map(|(ch, x)| format!("{}/{}:{:.4}", ch.j_el, ch.l, x)).collect();
        w.write_record([
            l.j_total.to_string(),
            l.block.to_string(),
            l.index.to_string(),
            format!("{:.8}", l.energy),
            l.v.to_string(),
            l.nodes.to_string(),
            l.label.symmetry.to_string(),
            l.label.n.to_string(),
            format!("{:.4}", l.label_weight),
            format!("{:.4}", l.mean_abs_omega1),
            top.join(";"),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Failure::validation(e.to_string()))?).expect("utf-8"))
}

pub fn levels(a: &LevelsArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    let js = parse::j_range(&a.j)?;
    let blocks = parse::blocks(&a.blocks, a.species)?;
    if a.solver == SolverKind::Contracted && a.nv == 0 {
        return Err(Failure::validation("--nv must be at least 1"));
    }
    let opts = LevelOptions {
        grid: dvr_grid(&a.grid)?,
        solver: match a.solver {
            SolverKind::Auto => Solver::Auto,
            SolverKind::Dense => Solver::Dense,
            SolverKind::Contracted => Solver::Contracted { nv: a.nv },
        },
        rotation: !a.no_rotation,
        max_levels: a.max_levels,
        e_max: a.e_max,
    };
    let inter = Interaction::new(load_curves(a.species, &a.data, c)?, a.model, c)?;
    let t0 = std::time::Instant::now();
    let levels = bound_levels(&inter, &js, &blocks, &opts)?;
    log::info!("{} levels in {:.1} s", levels.len(), t0.elapsed().as_secs_f64());

    let mut reports: Vec<ConvergenceReport> = Vec::new();
    if !a.no_convergence && a.convergence_levels > 0 {
        for &b in &blocks {
            let lowest = levels.iter().filter(|l| l.block == b).min_by(|x, y| x.energy.total_cmp(&y.energy));
            if let Some(l) = lowest {
                reports.push(convergence_report(&inter, l.j_total, b, &opts, a.convergence_levels)?);
            }
        }
    }
    let late_failure = a.max_shift.and_then(|tol| {
        reports.iter().find(|r| r.max_shift.is_nan() || r.max_shift > tol).map(|r| {
            Failure::numerical(format!(
                "levels not converged: J={} {} moved by {:.3e} cm^-1 on grid refinement (limit {tol:e})",
                r.j_total, r.block, r.max_shift
            ))
        })
    });
    let body = match format {
        Format::Csv => levels_csv(&levels)?,
        Format::Json => json(&levels)?,
    };
    Ok(Outcome {
        body,
        inputs: a.data.files(),
        convergence: (!a.no_convergence).then_some(reports),
        late_failure,
    })
}

#[derive(Serialize)]
struct ConstantsReport<'a> {
    constants: &'a Constants,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectroscopic: Option<lndimer::rovib::SpectroscopicConstants>,
}

pub fn constants(a: &ConstantsArgs, format: Format, c: &Constants) -> Result<Outcome, Failure> {
    only_json(format, "constants")?;
    let spectroscopic = match a.species {
        Some(s) => {
            let inter = Interaction::new(load_curves(s, &a.data, c)?, a.model, c)?;
            Some(spectroscopic_constants(&inter, &dvr_grid(&a.grid)?)?)
        }
        None => None,
    };
    Ok(outcome(json(&ConstantsReport { constants: c, spectroscopic })?, a.data.files()))
}
