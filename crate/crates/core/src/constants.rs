//! Physical constants and per-species data, loaded from a TOML table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::wigner::AngMom;

pub const BUNDLED_CONSTANTS: &str = include_str!("../data/constants.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConstantsError {
    #[error("cannot read constants file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid constants table: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("constants table has no entry for species {0}")]
    MissingSpecies(Species),
    #[error("unknown species {0:?}")]
    UnknownSpecies(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Er,
    Tm,
}

impl Species {
    pub const ALL: [Species; 2] = [Species::Er, Species::Tm];

    pub fn key(self) -> &'static str {
        match self {
            Species::Er => "er",
            Species::Tm => "tm",
        }
    }

    /// Ground-state `j` (6 for Er, 7/2 for Tm).
    pub fn ground_j(self) -> AngMom {
        match self {
            Species::Er => AngMom::int(6),
            Species::Tm => AngMom::from_twice(7),
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::Er => "Er",
            Species::Tm => "Tm",
        })
    }
}

impl FromStr for Species {
    type Err = ConstantsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "er" | "er2" => Ok(Species::Er),
            "tm" | "tm2" => Ok(Species::Tm),
            _ => Err(ConstantsError::UnknownSpecies(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codata {
    pub release: String,
    pub fine_structure: f64,
    pub hartree_wavenumber: f64,
    pub bohr_angstrom: f64,
    pub atomic_time: f64,
    pub dalton_electron_masses: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesData {
    pub isotope: String,
    pub two_j: u32,
    pub mass_u: f64,
    pub g_j: f64,
    pub quadrupole: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub codata: Codata,
    pub species: BTreeMap<String, SpeciesData>,
}

impl Constants {
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_CONSTANTS).expect("bundled constants table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConstantsError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConstantsError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConstantsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn species(&self, s: Species) -> Result<&SpeciesData, ConstantsError> {
        self.species.get(s.key()).ok_or(ConstantsError::MissingSpecies(s))
    }

    /// Hartree to cm^-1.
    pub fn eh_to_cm(&self) -> f64 {
        self.codata.hartree_wavenumber
    }

    /// Reduced mass `m/2` of the homonuclear pair in electron masses.
    pub fn reduced_mass(&self, s: Species) -> Result<f64, ConstantsError> {
        Ok(0.5 * self.species(s)?.mass_u * self.codata.dalton_electron_masses)
    }

    /// `hbar^2/(2 mu a0^2)` in cm^-1.
    pub fn kinetic_unit(&self, s: Species) -> Result<f64, ConstantsError> {
        Ok(self.eh_to_cm() / (2.0 * self.reduced_mass(s)?))
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::bundled()
    }
}
