//! Batch adapter around an external XFoil executable.
//!
//! Each call gets its own temporary working directory, writes the coordinate
//! file, drives the program through stdin in batch mode, and scrapes the lift
//! coefficient from its output. Timeouts, crashes, and missing output lines
//! are reported as non-convergence; a missing executable is a configuration
//! error, which is a different thing entirely.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::geometry::AirfoilShape;

use super::{AeroError, ClBackend, ClResult, FlowCondition};

/// Writes a coordinate file: a name label on the first line, then one
/// `x y` pair per line in contour order, chord-normalized.
pub fn write_coordinate_file<W: Write>(
    w: &mut W,
    name: &str,
    shape: &AirfoilShape,
) -> std::io::Result<()> {
    writeln!(w, "{name}")?;
    for (x, y) in shape.points() {
        writeln!(w, "{x:.8} {y:.8}")?;
    }
    Ok(())
}

/// Runs XFoil on one shape at the given flow condition.
///
/// Returns `Err` only for configuration problems (missing executable, I/O
/// failure while setting up). Solver-side failures — timeout, crash, no CL
/// line, explicit non-convergence — come back as `Ok(NonConverged)`.
pub fn xfoil_cl(
    shape: &AirfoilShape,
    cond: &FlowCondition,
    executable: &Path,
    timeout_s: f64,
) -> Result<ClResult, AeroError> {
    if !executable.is_file() {
        return Err(AeroError::MissingExecutable(executable.display().to_string()));
    }

    let workdir = tempfile::tempdir()?;
    let coord_path = workdir.path().join("shape.dat");
    {
        let mut f = std::fs::File::create(&coord_path)?;
        write_coordinate_file(&mut f, "foilgen shape", shape)?;
    }

    let script = format!(
        "PLOP\nG F\n\nLOAD shape.dat\nOPER\nVISC {re}\nITER 200\nALFA {alpha}\n\nQUIT\n",
        re = cond.reynolds(),
        alpha = cond.alpha_deg(),
    );

    let mut child = Command::new(executable)
        .current_dir(workdir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                AeroError::MissingExecutable(executable.display().to_string())
            }
            _ => AeroError::Io(e),
        })?;

    // Feed the whole script up front; XFoil reads commands sequentially.
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(script.as_bytes());
    }

    let deadline = Instant::now() + Duration::from_secs_f64(timeout_s);
    loop {
        match child.try_wait()? {
            Some(_) => break,
            None => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(ClResult::non_converged(vec![format!(
                        "timeout after {timeout_s}s"
                    )]));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
    }

    let output = child.wait_with_output()?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    Ok(parse_xfoil_output(&stdout))
}

/// Extracts the final `CL = <value>` from an XFoil transcript.
fn parse_xfoil_output(stdout: &str) -> ClResult {
    if stdout.contains("Convergence failed") {
        return ClResult::non_converged(vec!["solver reported convergence failure".to_string()]);
    }
    let mut last_cl = None;
    for line in stdout.lines() {
        if let Some(idx) = line.find("CL =") {
            let rest = &line[idx + 4..];
            if let Some(tok) = rest.split_whitespace().next() {
                if let Ok(v) = tok.parse::<f64>() {
                    last_cl = Some(v);
                }
            }
        }
    }
    match last_cl {
        Some(cl) if cl.is_finite() => ClResult::converged(cl),
        _ => ClResult::non_converged(vec!["no lift coefficient in solver output".to_string()]),
    }
}

/// [`ClBackend`] wrapper for dataset construction and sweeps with XFoil.
#[derive(Debug, Clone)]
pub struct XfoilBackend {
    executable: std::path::PathBuf,
    timeout_s: f64,
}

impl XfoilBackend {
    pub const ID: &'static str = "xfoil";

    pub fn new(executable: impl Into<std::path::PathBuf>, timeout_s: f64) -> Self {
        Self { executable: executable.into(), timeout_s }
    }
}

impl ClBackend for XfoilBackend {
    fn solver_id(&self) -> &str {
        Self::ID
    }

    fn preflight(&self) -> Result<(), AeroError> {
        if self.executable.is_file() {
            Ok(())
        } else {
            Err(AeroError::MissingExecutable(self.executable.display().to_string()))
        }
    }

    fn compute_cl(&self, shape: &AirfoilShape, cond: &FlowCondition) -> ClResult {
        match xfoil_cl(shape, cond, &self.executable, self.timeout_s) {
            Ok(result) => result,
            // Preflight already passed; infrastructure failures mid-run are
            // per-shape non-convergence, like any other solver crash.
            Err(e) => ClResult::non_converged(vec![format!("adapter failure: {e}")]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{naca4_surface, SURFACE_POINTS};
    use std::io::Write as _;
    #[cfg(unix)]
    use std::os::unix::fs::PermissionsExt;

    fn shape() -> AirfoilShape {
        naca4_surface(&"0012".parse().unwrap(), SURFACE_POINTS).unwrap()
    }

    fn cond() -> FlowCondition {
        FlowCondition::new(5.0, 3.0e6).unwrap()
    }

    fn write_mock(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "#!/bin/sh\n{body}").unwrap();
        drop(f);
        #[cfg(unix)]
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    #[test]
    fn coordinate_file_has_name_line_and_all_points() {
        let mut buf = Vec::new();
        write_coordinate_file(&mut buf, "NACA 0012", &shape()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + SURFACE_POINTS);
        assert_eq!(lines[0], "NACA 0012");
        let first: Vec<f64> = lines[1]
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(first.len(), 2);
        assert!((first[0] - 1.0).abs() < 1e-6, "starts at the trailing edge");
    }

    #[test]
    fn missing_executable_is_a_configuration_error() {
        let err = xfoil_cl(&shape(), &cond(), Path::new("/nonexistent/xfoil"), 1.0).unwrap_err();
        assert!(matches!(err, AeroError::MissingExecutable(_)));
    }

    #[cfg(unix)]
    #[test]
    fn parses_cl_from_mock_output() {
        let dir = tempfile::tempdir().unwrap();
        let exe = write_mock(
            dir.path(),
            "xfoil-ok",
            "cat >/dev/null\necho ' Point added to stored polar  1'\necho '      a =  5.000      CL =  0.6123'",
        );
        let result = xfoil_cl(&shape(), &cond(), &exe, 5.0).unwrap();
        assert_eq!(result.cl(), Some(0.6123));
    }

    #[cfg(unix)]
    #[test]
    fn missing_cl_line_is_non_convergence() {
        let dir = tempfile::tempdir().unwrap();
        let exe = write_mock(dir.path(), "xfoil-silent", "cat >/dev/null\necho 'no lift here'");
        let result = xfoil_cl(&shape(), &cond(), &exe, 5.0).unwrap();
        assert!(!result.is_converged());
        assert!(result.diagnostics()[0].contains("no lift coefficient"));
    }

    #[cfg(unix)]
    #[test]
    fn timeout_is_non_convergence_with_diagnostic() {
        let dir = tempfile::tempdir().unwrap();
        let exe = write_mock(dir.path(), "xfoil-hang", "cat >/dev/null\nsleep 30");
        let result = xfoil_cl(&shape(), &cond(), &exe, 0.2).unwrap();
        assert!(!result.is_converged());
        assert!(result.diagnostics()[0].contains("timeout"));
    }

    #[cfg(unix)]
    #[test]
    fn reported_convergence_failure_is_non_convergence() {
        let dir = tempfile::tempdir().unwrap();
        let exe = write_mock(
            dir.path(),
            "xfoil-diverge",
            "cat >/dev/null\necho ' VISCAL:  Convergence failed'\necho '      a =  5.000      CL =  0.9999'",
        );
        let result = xfoil_cl(&shape(), &cond(), &exe, 5.0).unwrap();
        assert!(!result.is_converged());
    }
}
