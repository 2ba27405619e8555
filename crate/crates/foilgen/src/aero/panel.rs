//! Inviscid linear-strength vortex panel method.
//!
//! The contour's points become nodes of a vortex sheet whose strength varies
//! linearly along each panel and is continuous at the nodes. Flow tangency is
//! enforced at every panel midpoint and the Kutta condition closes the
//! system: the sheet strengths at the two trailing-edge nodes cancel, so the
//! flow leaves the trailing edge smoothly. Lift follows from the integrated
//! surface vorticity via Kutta–Joukowski.
//!
//! With `n` surface points there are `n - 1` panels (no resampling) and `n`
//! nodal strengths; `n - 1` tangency equations plus the Kutta condition give
//! a square system solved by LU decomposition. A small trailing-edge gap is
//! tolerated the same way XFoil tolerates a blunt trailing edge; the gap is
//! simply not paneled.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{validate_contour, AirfoilShape};

use super::{ClBackend, ClResult, FlowCondition};

/// Condition-number estimates above this mark the influence matrix as
/// numerically unusable.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Converged solutions must satisfy the Kutta condition to this residual.
pub const KUTTA_RESIDUAL_LIMIT: f64 = 1e-8;
/// Chord extents below this are degenerate (the shape has collapsed).
const MIN_CHORD: f64 = 1e-3;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Computes the lift coefficient of a contour at the given flow condition.
///
/// Total over all 496-vector inputs: invalid contours, ill-conditioned
/// influence matrices, and unsatisfiable Kutta conditions all come back as
/// [`ClResult::NonConverged`] with diagnostics, mirroring how XFoil failures
/// are treated during dataset construction. Identical inputs produce
/// bit-identical results.
pub fn panel_cl(shape: &AirfoilShape, cond: &FlowCondition) -> ClResult {
    if shape.as_slice().iter().any(|v| !v.is_finite()) {
        return ClResult::non_converged(vec!["non-finite coordinates".to_string()]);
    }

    let verdict = validate_contour(shape);
    if !verdict.is_valid() {
        return ClResult::non_converged(
            verdict.violations.iter().map(|v| v.to_string()).collect(),
        );
    }

    let xs = shape.xs();
    let chord = xs.iter().cloned().fold(f64::MIN, f64::max)
        - xs.iter().cloned().fold(f64::MAX, f64::min);
    if chord < MIN_CHORD {
        return ClResult::non_converged(vec![format!("degenerate chord extent {chord:e}")]);
    }

    solve_vortex_sheet(shape, cond.alpha_rad(), chord)
}

/// Velocity induced at local point `(x, z)` by a panel of length `len` lying
/// on the local x-axis, per unit nodal strength: returns
/// `(u_a, w_a, u_b, w_b)` where `a` is the start node and `b` the end node.
fn linear_vortex_influence(x: f64, z: f64, len: f64) -> (f64, f64, f64, f64) {
    let r1_sq = x * x + z * z;
    let r2_sq = (x - len) * (x - len) + z * z;
    // Angle subtended by the panel, computed in one atan2 so the branch cut
    // lies along the panel itself rather than either endpoint ray.
    let beta = f64::atan2(z * len, x * (x - len) + z * z);
    let log_r = 0.5 * (r2_sq / r1_sq).ln();

    let ramp_u = (x * beta + z * log_r) / len;
    let ramp_w = (x * log_r + len - z * beta) / len;

    let u_a = (beta - ramp_u) / TWO_PI;
    let w_a = (log_r - ramp_w) / TWO_PI;
    let u_b = ramp_u / TWO_PI;
    let w_b = ramp_w / TWO_PI;
    (u_a, w_a, u_b, w_b)
}

fn solve_vortex_sheet(shape: &AirfoilShape, alpha: f64, chord: f64) -> ClResult {
    let n = shape.n_points();
    let n_panels = n - 1;

    // Panel geometry: tangents, left normals, lengths, midpoints.
    let mut tx = vec![0.0; n_panels];
    let mut ty = vec![0.0; n_panels];
    let mut len = vec![0.0; n_panels];
    let mut mid = vec![(0.0, 0.0); n_panels];
    for i in 0..n_panels {
        let (x0, y0) = shape.point(i);
        let (x1, y1) = shape.point(i + 1);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let l = (dx * dx + dy * dy).sqrt();
        len[i] = l;
        tx[i] = dx / l;
        ty[i] = dy / l;
        mid[i] = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);

    for i in 0..n_panels {
        // Normal at collocation point i (left of the tangent; the common
        // sign across the row does not affect the solution).
        let (nx, ny) = (-ty[i], tx[i]);
        for j in 0..n_panels {
            let (u_a, w_a, u_b, w_b) = if i == j {
                // Self-influence limit: midpoint of the panel itself.
                (0.25, -1.0 / TWO_PI, 0.25, 1.0 / TWO_PI)
            } else {
                let (px, py) = (mid[i].0 - shape.point(j).0, mid[i].1 - shape.point(j).1);
                let xl = tx[j] * px + ty[j] * py;
                let zl = -ty[j] * px + tx[j] * py;
                linear_vortex_influence(xl, zl, len[j])
            };
            // Rotate the local velocities back to global axes and project
            // onto the collocation normal.
            let (gax, gay) = (u_a * tx[j] - w_a * ty[j], u_a * ty[j] + w_a * tx[j]);
            let (gbx, gby) = (u_b * tx[j] - w_b * ty[j], u_b * ty[j] + w_b * tx[j]);
            a[(i, j)] += gax * nx + gay * ny;
            a[(i, j + 1)] += gbx * nx + gby * ny;
        }
        rhs[i] = -(alpha.cos() * nx + alpha.sin() * ny);
    }

    // Kutta condition: sheet strengths at the trailing-edge nodes cancel.
    a[(n - 1, 0)] = 1.0;
    a[(n - 1, n - 1)] = 1.0;
    rhs[n - 1] = 0.0;

    if a.iter().any(|v| !v.is_finite()) {
        return ClResult::non_converged(vec!["non-finite influence coefficients".to_string()]);
    }

    let norm_a = a.abs().column_sum().max();
    let lu = a.clone().lu();

    // Cheap conditioning estimate from the pivot magnitudes of U; the gate
    // only needs to catch collapse toward singularity, not a tight bound.
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_pivot = diag.iter().fold(f64::MAX, |m, v| m.min(v.abs()));
    if !(min_pivot > 0.0) || !max_pivot.is_finite() {
        return ClResult::non_converged(vec!["singular influence matrix".to_string()]);
    }
    let cond_estimate = max_pivot / min_pivot;
    if cond_estimate > CONDITION_LIMIT {
        return ClResult::non_converged(vec![format!(
            "ill-conditioned influence matrix (condition estimate {cond_estimate:.3e})"
        )]);
    }

    let gamma = match lu.solve(&rhs) {
        Some(g) => g,
        None => return ClResult::non_converged(vec!["singular influence matrix".to_string()]),
    };
    if gamma.iter().any(|v| !v.is_finite()) {
        return ClResult::non_converged(vec!["non-finite sheet strengths".to_string()]);
    }

    // Solution quality: full-system residual and the Kutta residual itself,
    // scaled by the solution magnitude.
    let residual = (&a * &gamma - &rhs).abs().max();
    let scale = 1.0 + norm_a * gamma.abs().max();
    let kutta_residual = (gamma[0] + gamma[n - 1]).abs() / (1.0 + gamma.abs().max());
    if residual / scale > KUTTA_RESIDUAL_LIMIT || kutta_residual > KUTTA_RESIDUAL_LIMIT {
        return ClResult::non_converged(vec![format!(
            "Kutta/tangency residual not reducible below {KUTTA_RESIDUAL_LIMIT:e} \
             (residual {residual:.3e})"
        )]);
    }

    // Integrated surface vorticity -> circulation -> lift coefficient.
    let circulation: f64 = (0..n_panels)
        .map(|j| 0.5 * (gamma[j] + gamma[j + 1]) * len[j])
        .sum();
    let cl = 2.0 * circulation / chord;
    if !cl.is_finite() {
        return ClResult::non_converged(vec!["non-finite lift coefficient".to_string()]);
    }
    ClResult::converged(cl)
}

/// The internal inviscid backend. Stateless and thread-safe.
#[derive(Debug, Clone, Copy, Default)]
pub struct PanelSolver;

impl PanelSolver {
    pub const ID: &'static str = "panel-linear-vortex";
}

impl ClBackend for PanelSolver {
    fn solver_id(&self) -> &str {
        Self::ID
    }

    fn compute_cl(&self, shape: &AirfoilShape, cond: &FlowCondition) -> ClResult {
        panel_cl(shape, cond)
    }
}
