//! NACA 4-digit airfoil surfaces and the fixed 496-dimensional shape vector.
//!
//! Every shape in the pipeline is a closed contour of 248 points ordered
//! trailing edge → upper surface → leading edge → lower surface → trailing
//! edge, flattened as `(x_1..x_248, y_1..y_248)` in chord units. Constructed
//! surfaces are guaranteed to be closed and non-self-intersecting; vectors
//! coming out of a generator carry no such guarantee, which is exactly what
//! [`validate_contour`] is for.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of surface points in every shape vector.
pub const SURFACE_POINTS: usize = 248;
/// Length of the flattened coordinate vector: `2 * SURFACE_POINTS`.
pub const SHAPE_DIM: usize = 2 * SURFACE_POINTS;

/// Half-thickness polynomial coefficients, closed-trailing-edge variant.
///
/// `y_t(x) = 5 t (c0 sqrt(x) + c1 x + c2 x^2 + c3 x^3 + c4 x^4)` with the
/// final coefficient chosen so that `y_t(1) = 0` and the contour closes.
const THICKNESS_COEFFS: [f64; 5] = [0.2969, -0.1260, -0.3516, 0.2843, -0.1036];

/// Maximum chordwise x allowed by contour validation.
pub const X_MAX: f64 = 1.05;
/// Minimum chordwise x allowed by contour validation.
pub const X_MIN: f64 = -0.05;
/// Adjacent points closer than this are flagged as duplicates.
pub const DUPLICATE_SPACING: f64 = 1e-7;
/// Contours whose endpoints are farther apart than this gap (in chords) are
/// flagged open. Constructed surfaces close to ~1e-16; generated shapes are
/// allowed a small trailing-edge gap, which the panel solver tolerates the
/// same way XFoil tolerates a blunt trailing edge.
pub const MAX_TRAILING_EDGE_GAP: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("not a 4-digit NACA code: {0:?}")]
    BadCode(String),
    #[error("thickness digits are 00; a zero-thickness section has no surface")]
    ZeroThickness,
    #[error("camber {m} with camber position 0 is undefined (division by p^2)")]
    DegenerateCamber { m: f64 },
    #[error("point count {0} must be even and at least 120")]
    BadPointCount(usize),
    #[error("coordinate vector has length {0}, expected {expected}", expected = SHAPE_DIM)]
    BadVectorLength(usize),
}

/// A NACA 4-digit designation, e.g. `2412`: 2% max camber at 40% chord,
/// 12% thick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Naca4Code {
    /// Max camber as a fraction of chord (first digit / 100).
    m: f64,
    /// Chordwise position of max camber (second digit / 10).
    p: f64,
    /// Max thickness as a fraction of chord (last two digits / 100).
    t: f64,
    digits: [u8; 3],
}

impl Naca4Code {
    /// Builds a code from its digits: first digit, second digit, and the
    /// two-digit thickness. Rejects zero thickness and the degenerate
    /// combination of nonzero camber at position zero.
    pub fn from_digits(camber: u8, position: u8, thickness: u8) -> Result<Self, GeometryError> {
        if camber > 9 || position > 9 || thickness > 99 {
            return Err(GeometryError::BadCode(format!(
                "{camber}{position}{thickness:02}"
            )));
        }
        if thickness == 0 {
            return Err(GeometryError::ZeroThickness);
        }
        if camber > 0 && position == 0 {
            return Err(GeometryError::DegenerateCamber {
                m: f64::from(camber) / 100.0,
            });
        }
        Ok(Self {
            m: f64::from(camber) / 100.0,
            p: f64::from(position) / 10.0,
            t: f64::from(thickness) / 100.0,
            digits: [camber, position, thickness],
        })
    }

    /// All constructible codes in ascending numeric order (0001 through 9999,
    /// skipping zero-thickness and degenerate-camber combinations).
    pub fn enumerate() -> impl Iterator<Item = Naca4Code> {
        (0u8..=9).flat_map(|m| {
            (0u8..=9).flat_map(move |p| (1u8..=99).filter_map(move |t| Self::from_digits(m, p, t).ok()))
        })
    }

    /// Max camber as a fraction of chord.
    pub fn max_camber(&self) -> f64 {
        self.m
    }

    /// Position of max camber as a fraction of chord.
    pub fn camber_position(&self) -> f64 {
        self.p
    }

    /// Max thickness as a fraction of chord.
    pub fn thickness(&self) -> f64 {
        self.t
    }

    /// Camber line height and slope at chordwise station `x` in `[0, 1]`.
    ///
    /// Two parabolic arcs meeting at the camber position with matching value
    /// and slope; identically zero when the camber digit is zero.
    pub fn camber_line(&self, x: f64) -> (f64, f64) {
        if self.m == 0.0 {
            return (0.0, 0.0);
        }
        let (m, p) = (self.m, self.p);
        if x <= p {
            let yc = m / (p * p) * (2.0 * p * x - x * x);
            let dyc = 2.0 * m / (p * p) * (p - x);
            (yc, dyc)
        } else {
            let q = 1.0 - p;
            let yc = m / (q * q) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x);
            let dyc = 2.0 * m / (q * q) * (p - x);
            (yc, dyc)
        }
    }

    /// Half-thickness at chordwise station `x` in `[0, 1]`, measured
    /// perpendicular to the camber line. Zero at `x = 1` (closed trailing
    /// edge).
    pub fn half_thickness(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3, c4] = THICKNESS_COEFFS;
        5.0 * self.t * (c0 * x.sqrt() + x * (c1 + x * (c2 + x * (c3 + x * c4))))
    }
}

impl FromStr for Naca4Code {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits: Vec<u8> = s.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect::<Option<_>>()
            .ok_or_else(|| GeometryError::BadCode(s.to_string()))?;
        if digits.len() != 4 {
            return Err(GeometryError::BadCode(s.to_string()));
        }
        Self::from_digits(digits[0], digits[1], digits[2] * 10 + digits[3])
    }
}

impl fmt::Display for Naca4Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{:02}", self.digits[0], self.digits[1], self.digits[2])
    }
}

/// A surface contour flattened as `(x_1..x_n, y_1..y_n)`.
///
/// The only invariant the type enforces is the vector length; geometric
/// soundness is checked separately by [`validate_contour`] because generated
/// vectors inhabit this type too.
#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilShape {
    coords: Vec<f64>,
}

impl AirfoilShape {
    /// Wraps a flattened coordinate vector. The pipeline's canonical shape
    /// is [`SHAPE_DIM`]-dimensional, but any even-length vector with at
    /// least two points is representable (surfaces can be discretized at
    /// other resolutions).
    pub fn from_vec(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.len() % 2 != 0 || coords.len() < 4 {
            return Err(GeometryError::BadVectorLength(coords.len()));
        }
        Ok(Self { coords })
    }

    /// The flattened `(x.., y..)` vector.
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Number of surface points.
    pub fn n_points(&self) -> usize {
        self.coords.len() / 2
    }

    /// The `i`-th surface point.
    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.coords[i], self.coords[self.n_points() + i])
    }

    /// Iterates surface points in contour order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_points()).map(move |i| self.point(i))
    }

    pub fn xs(&self) -> &[f64] {
        &self.coords[..self.n_points()]
    }

    pub fn ys(&self) -> &[f64] {
        &self.coords[self.n_points()..]
    }
}

/// Constructs the discretized surface of a 4-digit airfoil.
///
/// Points are laid out with a cosine parameterization of the whole contour:
/// chordwise stations cluster at the leading and trailing edges where the
/// curvature is highest. Thickness is applied perpendicular to the camber
/// line. Ordering is trailing edge → upper → leading edge → lower → trailing
/// edge, and the two trailing-edge endpoints coincide to within rounding.
pub fn naca4_surface(code: &Naca4Code, n_points: usize) -> Result<AirfoilShape, GeometryError> {
    if n_points < 120 || n_points % 2 != 0 {
        return Err(GeometryError::BadPointCount(n_points));
    }

    let n = n_points;
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    for k in 0..n {
        // psi sweeps 0..2*pi: the upper surface for psi < pi, lower after.
        let psi = 2.0 * std::f64::consts::PI * (k as f64) / ((n - 1) as f64);
        let x = 0.5 * (1.0 + psi.cos());
        let (yc, dyc) = code.camber_line(x);
        let yt = code.half_thickness(x);
        let theta = dyc.atan();
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        if psi <= std::f64::consts::PI {
            xs[k] = x - yt * sin_t;
            ys[k] = yc + yt * cos_t;
        } else {
            xs[k] = x + yt * sin_t;
            ys[k] = yc - yt * cos_t;
        }
    }

    let mut coords = xs;
    coords.extend_from_slice(&ys);
    AirfoilShape::from_vec(coords)
}

/// A single failed contour check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourViolation {
    OpenContour,
    SelfIntersection,
    DuplicateAdjacentPoints,
    CoordinateOutOfRange,
    ReversedOrientation,
}

impl fmt::Display for ContourViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ContourViolation::OpenContour => "open contour",
            ContourViolation::SelfIntersection => "self-intersection",
            ContourViolation::DuplicateAdjacentPoints => "duplicate adjacent points",
            ContourViolation::CoordinateOutOfRange => "x outside [-0.05, 1.05]",
            ContourViolation::ReversedOrientation => "reversed orientation",
        };
        f.write_str(s)
    }
}

/// Outcome of [`validate_contour`]: the list of violated checks, empty when
/// the contour is sound.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityVerdict {
    pub violations: Vec<ContourViolation>,
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Signed polygon area of the contour (implicitly closed). Positive for the
/// expected counterclockwise ordering (TE → upper → LE → lower).
pub fn signed_area(shape: &AirfoilShape) -> f64 {
    let n = shape.n_points();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = shape.point(i);
        let (x1, y1) = shape.point((i + 1) % n);
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

/// Checks a contour for the pathologies that break the panel solver.
///
/// Total over all inputs: never errors, returns the full list of violations.
pub fn validate_contour(shape: &AirfoilShape) -> ValidityVerdict {
    let mut violations = Vec::new();
    let n = shape.n_points();

    if shape.xs().iter().any(|&x| !(x >= X_MIN && x <= X_MAX)) {
        violations.push(ContourViolation::CoordinateOutOfRange);
    }

    let first = shape.point(0);
    let last = shape.point(n - 1);
    if !(dist(first, last) <= MAX_TRAILING_EDGE_GAP) {
        violations.push(ContourViolation::OpenContour);
    }

    if (0..n - 1).any(|i| dist(shape.point(i), shape.point(i + 1)) < DUPLICATE_SPACING) {
        violations.push(ContourViolation::DuplicateAdjacentPoints);
    }

    if has_self_intersection(shape) {
        violations.push(ContourViolation::SelfIntersection);
    }

    if !(signed_area(shape) > 0.0) {
        violations.push(ContourViolation::ReversedOrientation);
    }

    ValidityVerdict { violations }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Pairwise test of all non-adjacent segments of the closed contour.
///
/// A coincident first/last point pair counts as a single cyclic vertex, so
/// the two trailing-edge panels of a closed surface are adjacent rather
/// than falsely "touching"; an open contour contributes its gap-bridging
/// closing segment to the test.
fn has_self_intersection(shape: &AirfoilShape) -> bool {
    let mut pts: Vec<(f64, f64)> = shape.points().collect();
    if pts.len() > 2 && dist(pts[0], *pts.last().unwrap()) < 1e-12 {
        pts.pop();
    }
    let m = pts.len();
    let seg = |i: usize| -> ((f64, f64), (f64, f64)) { (pts[i], pts[(i + 1) % m]) };
    let degenerate = |i: usize| {
        let (a, b) = seg(i);
        dist(a, b) < 1e-12
    };
    for i in 0..m {
        if degenerate(i) {
            continue;
        }
        for j in (i + 2)..m {
            if degenerate(j) {
                continue;
            }
            // Cyclic adjacency: the last segment shares a vertex with the first.
            if i == 0 && j == m - 1 {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    q.0 <= p.0.max(r.0) && q.0 >= p.0.min(r.0) && q.1 <= p.1.max(r.1) && q.1 >= p.1.min(r.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // Collinear touching or overlap also counts: a contour that grazes
    // itself is as unsolvable as one that crosses itself.
    (d1 == 0.0 && on_segment(p3, p1, p4))
        || (d2 == 0.0 && on_segment(p3, p2, p4))
        || (d3 == 0.0 && on_segment(p1, p3, p2))
        || (d4 == 0.0 && on_segment(p1, p4, p2))
}
