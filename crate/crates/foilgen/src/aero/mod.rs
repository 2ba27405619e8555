//! Lift-coefficient computation for arbitrary airfoil contours.
//!
//! The default backend is an in-repo inviscid panel method ([`panel_cl`]):
//! deterministic, dependency-free, and total — every input produces a
//! [`ClResult`], with geometric or numerical pathologies reported as
//! non-convergence rather than errors. An adapter around an external XFoil
//! executable ([`xfoil::xfoil_cl`]) is available for viscous labels.

pub mod panel;
pub mod xfoil;

use thiserror::Error;

use crate::geometry::AirfoilShape;

pub use panel::{panel_cl, PanelSolver};
pub use xfoil::{xfoil_cl, XfoilBackend};

#[derive(Debug, Error)]
pub enum AeroError {
    #[error("angle of attack must be finite, got {0}")]
    BadAlpha(f64),
    #[error("Reynolds number must be positive, got {0}")]
    BadReynolds(f64),
    #[error("XFoil executable not found or not runnable: {0}")]
    MissingExecutable(String),
    #[error("failed to drive XFoil: {0}")]
    Io(#[from] std::io::Error),
}

/// Freestream condition for a lift computation.
///
/// The Reynolds number is informational for the inviscid panel solver and
/// required by the external viscous adapter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCondition {
    alpha_deg: f64,
    reynolds: f64,
}

impl FlowCondition {
    pub fn new(alpha_deg: f64, reynolds: f64) -> Result<Self, AeroError> {
        if !alpha_deg.is_finite() {
            return Err(AeroError::BadAlpha(alpha_deg));
        }
        if !(reynolds > 0.0) {
            return Err(AeroError::BadReynolds(reynolds));
        }
        Ok(Self { alpha_deg, reynolds })
    }

    pub fn alpha_deg(&self) -> f64 {
        self.alpha_deg
    }

    pub fn alpha_rad(&self) -> f64 {
        self.alpha_deg.to_radians()
    }

    pub fn reynolds(&self) -> f64 {
        self.reynolds
    }
}

/// Outcome of a lift computation: either a finite lift coefficient, or a
/// non-convergence with at least one diagnostic explaining why.
#[derive(Debug, Clone, PartialEq)]
pub enum ClResult {
    Converged { cl: f64 },
    NonConverged { diagnostics: Vec<String> },
}

impl ClResult {
    pub fn converged(cl: f64) -> Self {
        debug_assert!(cl.is_finite());
        ClResult::Converged { cl }
    }

    pub fn non_converged(diagnostics: Vec<String>) -> Self {
        debug_assert!(!diagnostics.is_empty());
        ClResult::NonConverged { diagnostics }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, ClResult::Converged { .. })
    }

    /// The lift coefficient, present iff converged.
    pub fn cl(&self) -> Option<f64> {
        match self {
            ClResult::Converged { cl } => Some(*cl),
            ClResult::NonConverged { .. } => None,
        }
    }

    pub fn diagnostics(&self) -> &[String] {
        match self {
            ClResult::Converged { .. } => &[],
            ClResult::NonConverged { diagnostics } => diagnostics,
        }
    }
}

/// A lift-coefficient backend that can label shapes.
///
/// Implementations must be safe to call from many threads at once; dataset
/// construction and sweeps evaluate shapes in parallel.
pub trait ClBackend: Sync {
    /// Stable identifier recorded in dataset manifests and reports.
    fn solver_id(&self) -> &str;

    /// Checks the backend is usable before any work starts (e.g. the
    /// external executable exists). The internal solver always is.
    fn preflight(&self) -> Result<(), AeroError> {
        Ok(())
    }

    fn compute_cl(&self, shape: &AirfoilShape, cond: &FlowCondition) -> ClResult;
}
