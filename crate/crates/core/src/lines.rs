//! Atomic transition line lists and their conversion to squared reduced
//! dipole matrix elements.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, Species};
use crate::wigner::AngMom;

const ER_LINES: &str = include_str!("../data/er_lines.csv");
const TM_LINES_A: &str = include_str!("../data/tm_lines_a.csv");
const TM_LINES_F: &str = include_str!("../data/tm_lines_f.csv");

pub const HEADER: [&str; 6] = ["delta_e_cm", "kind", "strength", "u_strength", "two_j", "source"];

#[derive(Debug, thiserror::Error)]
pub enum LinesError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line list {path}: {}", .rows.join("; "))]
    Rows { path: String, rows: Vec<String> },
    #[error("transition energy must be positive, got {0} cm^-1")]
    ZeroEnergy(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrengthKind {
    /// Einstein A coefficient in units of 10^6 s^-1.
    EinsteinA,
    /// Absorption oscillator strength.
    OscillatorF,
}

impl fmt::Display for StrengthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrengthKind::EinsteinA => "A",
            StrengthKind::OscillatorF => "f",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRecord {
    pub delta_e: f64,
    pub kind: StrengthKind,
    pub strength: f64,
    pub u_strength: f64,
    pub j_excited: AngMom,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineList {
    pub species: Species,
    pub ground_j: AngMom,
    pub records: Vec<TransitionRecord>,
}

#[derive(Deserialize)]
struct RawRow {
    delta_e_cm: String,
    kind: String,
    strength: String,
    u_strength: String,
    two_j: String,
    source: String,
}

impl LineList {
    pub fn new(species: Species, records: Vec<TransitionRecord>) -> Self {
        LineList { species, ground_j: species.ground_j(), records }
    }

    /// The tables shipped with the crate (Tm combines the A- and f-value lists).
    pub fn bundled(species: Species) -> Self {
        let parse = |text: &str, name: &str| {
            parse_linelist_reader(text.as_bytes(), species, name).expect("bundled line list is valid")
        };
        match species {
            Species::Er => parse(ER_LINES, "er_lines.csv"),
            Species::Tm => {
                let mut list = parse(TM_LINES_A, "tm_lines_a.csv");
                list.records.extend(parse(TM_LINES_F, "tm_lines_f.csv").records);
                list
            }
        }
    }

    /// Distinct excited-state angular momenta, ascending.
    pub fn excited_js(&self) -> Vec<AngMom> {
        let mut js: Vec<AngMom> = self.records.iter().map(|r| r.j_excited).collect();
        js.sort();
        js.dedup();
        js
    }

    /// Copy with every strength replaced by `f(record)`.
    pub fn with_strengths(&self, f: impl Fn(&TransitionRecord) -> f64) -> LineList {
        let mut out = self.clone();
        for r in out.records.iter_mut() {
            r.strength = f(r);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).unwrap();
        for r in &self.records {
            w.write_record([
                r.delta_e.to_string(),
                r.kind.to_string(),
                r.strength.to_string(),
                r.u_strength.to_string(),
                r.j_excited.twice().to_string(),
                r.source.clone(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

pub fn parse_linelist(path: &Path, species: Species) -> Result<LineList, LinesError> {
    let file = std::fs::File::open(path).map_err(|source| LinesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_linelist_reader(file, species, &path.display().to_string())
}

/// Parses CSV text; every bad row is collected and reported with its line number.
pub fn parse_linelist_reader<R: Read>(reader: R, species: Species, name: &str) -> Result<LineList, LinesError> {
    let ground_j = species.ground_j();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut records = Vec::new();
    let mut bad = Vec::new();
    if let Ok(h) = rdr.headers() {
        let h: Vec<&str> = h.iter().collect();
        if !h.is_empty() && h != HEADER {
            bad.push(format!("line 1: expected header {}", HEADER.join(",")));
        }
    }
    for (idx, row) in rdr.deserialize::<RawRow>().enumerate() {
        let line = idx + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        match validate_row(&row, ground_j) {
            Ok(rec) => records.push(rec),
            Err(msg) => bad.push(format!("line {line}: {msg}")),
        }
    }
    if !bad.is_empty() {
        return Err(LinesError::Rows { path: name.to_string(), rows: bad });
    }
    if records.is_empty() {
        log::warn!("line list {name} is empty");
    }
    let list = LineList { species, ground_j, records };
    for b in dipole_partners(ground_j) {
        if !list.records.iter().any(|r| r.j_excited == b) {
            log::warn!("line list {name} has no transition to an excited state with j={b}");
        }
    }
    Ok(list)
}

/// Excited-state angular momenta reachable by an electric-dipole transition.
pub fn dipole_partners(j: AngMom) -> Vec<AngMom> {
    let mut v = Vec::new();
    if let Some(b) = j.checked_sub(AngMom::ONE) {
        v.push(b);
    }
    if j.twice() > 0 {
        v.push(j);
    }
    v.push(j + AngMom::ONE);
    v
}

fn validate_row(row: &RawRow, ground_j: AngMom) -> Result<TransitionRecord, String> {
    let num = |field: &str, s: &str| -> Result<f64, String> {
        let x: f64 = s.parse().map_err(|_| format!("{field} {s:?} is not a number"))?;
        if !x.is_finite() {
            return Err(format!("{field} {s:?} is not finite"));
        }
        Ok(x)
    };
    let delta_e = num("delta_e_cm", &row.delta_e_cm)?;
    if delta_e <= 0.0 {
        return Err(format!("delta_e_cm {delta_e} must be positive"));
    }
    let kind = match row.kind.as_str() {
        "A" => StrengthKind::EinsteinA,
        "f" => StrengthKind::OscillatorF,
        k => return Err(format!("kind {k:?} must be A or f")),
    };
    let strength = num("strength", &row.strength)?;
    let u_strength = num("u_strength", &row.u_strength)?;
    if strength < 0.0 || u_strength < 0.0 {
        return Err("strength and u_strength must be non-negative".into());
    }
    let two_j: u32 = row
        .two_j
        .parse()
        .map_err(|_| format!("two_j {:?} must be a non-negative integer (2j)", row.two_j))?;
    let b = AngMom::from_twice(two_j);
    if !dipole_partners(ground_j).contains(&b) {
        return Err(format!("j={b} is not dipole-connected to the ground state j={ground_j}"));
    }
    Ok(TransitionRecord {
        delta_e,
        kind,
        strength,
        u_strength,
        j_excited: b,
        source: row.source.clone(),
    })
}

/// `|<j||d||b>|^2` in `(e a0)^2` (Edmonds reduced matrix element).
pub fn reduced_dipole_sq(rec: &TransitionRecord, ground_j: AngMom, c: &Constants) -> Result<f64, LinesError> {
    Ok(dipole_sq_per_strength(rec, ground_j, c)? * rec.strength)
}

/// `|<j||d||b>|^2` per unit of the record's strength; the conversion is linear.
pub fn dipole_sq_per_strength(rec: &TransitionRecord, ground_j: AngMom, c: &Constants) -> Result<f64, LinesError> {
    if rec.delta_e <= 0.0 {
        return Err(LinesError::ZeroEnergy(rec.delta_e));
    }
    let omega = rec.delta_e / c.eh_to_cm();
    Ok(match rec.kind {
        StrengthKind::EinsteinA => {
            let alpha = c.codata.fine_structure;
            let b2 = (rec.j_excited.twice() + 1) as f64;
            // A in 1e6 s^-1 to atomic units
            1e6 * c.codata.atomic_time * b2 / (4.0 / 3.0 * alpha.powi(3) * omega.powi(3))
        }
        StrengthKind::OscillatorF => {
            let j2 = (ground_j.twice() + 1) as f64;
            3.0 * j2 / (2.0 * omega)
        }
    })
}

/// Inverse of [`reduced_dipole_sq`]: the strength that yields `d2`.
pub fn strength_from_dipole_sq(d2: f64, rec: &TransitionRecord, ground_j: AngMom, c: &Constants) -> Result<f64, LinesError> {
    Ok(d2 / dipole_sq_per_strength(rec, ground_j, c)?)
}
