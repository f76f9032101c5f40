//! Bundled reference designs.
//!
//! Five sets of named estimator/predictor recipes used by the
//! documentation, the command-line `tables` subcommand, and the
//! simulation fixtures. Estimators use the centred window delay (FIR) or
//! the stationary-point delay (IIR); every recipe also yields a one-step
//! predictor (`q = -1`) on the same window or pole set.

use crate::analysis::Filter;
use crate::fir::{design_fir, FirError};
use crate::iir::{design_iir, BasisSet, DelayPolicy, IirError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Fir(#[from] FirError),
    #[error(transparent)]
    Iir(#[from] IirError),
}

/// How a catalog row is designed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Recipe {
    /// Window design: `m` taps, `k1` moment constraints, colouring `k0`.
    Fir { m: usize, k1: usize, k0: usize },
    /// Rational design on `k_phi` maximally-flat-delay poles at cutoff
    /// `f_c` (cycles per sample).
    Iir {
        k1: usize,
        k0: usize,
        k_phi: usize,
        f_c: f64,
    },
}

/// One named bundled design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    /// Grouping label, 1..=5.
    pub set: u8,
    pub recipe: Recipe,
}

impl CatalogEntry {
    /// Cutoff frequency for rational rows, none for window rows.
    pub fn cutoff(&self) -> Option<f64> {
        match self.recipe {
            Recipe::Fir { .. } => None,
            Recipe::Iir { f_c, .. } => Some(f_c),
        }
    }

    /// The smoothing estimator for this row.
    pub fn estimator(&self) -> Result<Filter, CatalogError> {
        match self.recipe {
            Recipe::Fir { m, k1, k0 } => Ok(Filter::Fir(design_fir(
                m,
                k1,
                k0,
                (m as f64 - 1.0) / 2.0,
            )?)),
            Recipe::Iir { k1, k0, k_phi, f_c } => {
                let basis = BasisSet::bessel(k_phi, f_c)?;
                Ok(Filter::Iir(design_iir(&basis, k1, k0, DelayPolicy::Optimal)?))
            }
        }
    }

    /// The matching one-step predictor.
    pub fn predictor(&self) -> Result<Filter, CatalogError> {
        match self.recipe {
            Recipe::Fir { m, k1, k0 } => Ok(Filter::Fir(design_fir(m, k1, k0, -1.0)?)),
            Recipe::Iir { k1, k0, k_phi, f_c } => {
                let basis = BasisSet::bessel(k_phi, f_c)?;
                Ok(Filter::Iir(design_iir(
                    &basis,
                    k1,
                    k0,
                    DelayPolicy::Explicit(-1.0),
                )?))
            }
        }
    }

    /// Estimator and predictor together.
    pub fn pair(&self) -> Result<(Filter, Filter), CatalogError> {
        Ok((self.estimator()?, self.predictor()?))
    }
}

const fn fir(id: &'static str, set: u8, m: usize, k1: usize, k0: usize) -> CatalogEntry {
    CatalogEntry {
        id,
        set,
        recipe: Recipe::Fir { m, k1, k0 },
    }
}

const fn iir(
    id: &'static str,
    set: u8,
    k1: usize,
    k0: usize,
    k_phi: usize,
    f_c: f64,
) -> CatalogEntry {
    CatalogEntry {
        id,
        set,
        recipe: Recipe::Iir { k1, k0, k_phi, f_c },
    }
}

static ENTRIES: [CatalogEntry; 37] = [
    // set 1: 64-tap windows over both constraint orders
    fir("A1", 1, 64, 1, 0),
    fir("B1", 1, 64, 1, 1),
    fir("C1", 1, 64, 1, 2),
    fir("D1", 1, 64, 1, 3),
    fir("E1", 1, 64, 2, 0),
    fir("F1", 1, 64, 2, 1),
    fir("G1", 1, 64, 2, 2),
    fir("H1", 1, 64, 2, 3),
    // set 2: second- and third-order windows plus two rational designs
    fir("A2", 2, 64, 2, 0),
    fir("B2", 2, 64, 2, 1),
    fir("C2", 2, 64, 2, 2),
    iir("D2", 2, 2, 3, 5, 1.0 / 64.0),
    fir("E2", 2, 64, 3, 0),
    fir("F2", 2, 64, 3, 1),
    fir("G2", 2, 64, 3, 2),
    iir("H2", 2, 3, 3, 5, 1.0 / 64.0),
    // set 3: second-order rational sweep over cutoff
    iir("A3", 3, 2, 3, 5, 0.7 / 64.0),
    iir("B3", 3, 2, 3, 5, 0.8 / 64.0),
    iir("C3", 3, 2, 3, 5, 0.9 / 64.0),
    iir("D3", 3, 2, 3, 5, 1.0 / 64.0),
    iir("E3", 3, 2, 3, 5, 1.1 / 64.0),
    iir("F3", 3, 2, 3, 5, 1.2 / 64.0),
    iir("G3", 3, 2, 3, 5, 1.3 / 64.0),
    // set 4: third-order rational sweep over cutoff
    iir("A4", 4, 3, 3, 5, 0.5 / 64.0),
    iir("B4", 4, 3, 3, 5, 0.6 / 64.0),
    iir("C4", 4, 3, 3, 5, 0.7 / 64.0),
    iir("D4", 4, 3, 3, 5, 0.8 / 64.0),
    iir("E4", 4, 3, 3, 5, 0.9 / 64.0),
    iir("F4", 4, 3, 3, 5, 1.0 / 64.0),
    iir("G4", 4, 3, 3, 5, 1.1 / 64.0),
    // set 5: wide-band designs for the aliased-signal study
    fir("A5", 5, 64, 1, 0),
    fir("B5", 5, 64, 3, 1),
    fir("C5", 5, 64, 3, 2),
    fir("D5", 5, 64, 3, 3),
    iir("E5", 5, 3, 1, 5, 0.0196),
    iir("F5", 5, 3, 2, 5, 0.0196),
    iir("G5", 5, 3, 3, 5, 0.0169),
];

/// All bundled rows in set order.
pub fn entries() -> &'static [CatalogEntry] {
    &ENTRIES
}

/// Rows of one set.
pub fn set(set: u8) -> impl Iterator<Item = &'static CatalogEntry> {
    ENTRIES.iter().filter(move |e| e.set == set)
}

/// Look a row up by its id, case-sensitively.
pub fn find(id: &str) -> Option<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.id == id)
}
