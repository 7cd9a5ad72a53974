//! Reduction of tag streams to coincidences, histograms, dips, scans and
//! model fits.

mod coincidence;
mod dip;
mod fit;
mod histogram;
mod scan;

pub use coincidence::{
    find_coincidences, find_coincidences_with, for_each_pair, Coincidence, CoincidenceList,
    Pairing,
};
pub use dip::{dip_curve, dip_histogram, DipHistogram, DipOptions};
pub use fit::{fit_triangle, fit_voigt_dip, FitParameter, FitResult};
pub use histogram::{phase_histogram, PhaseHistogram};
pub use scan::{visibility_scan, MIN_SCAN_POINTS};
