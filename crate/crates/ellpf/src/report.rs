//! Structured results for individual identity checks.
//!
//! Every check in this crate reduces to the same shape: two complex values
//! that ought to agree, a scale to normalize their difference against, and a
//! tolerance. [`VerificationReport`] records all of it, serializes to a
//! single JSON object per line, and is the only thing the suite runner and
//! the CLI pass around.

use num_complex::Complex64;
use serde::Serialize;

/// Sampled inputs attached to a report, so a failing record can be replayed.
///
/// `nome` and `seed` identify the stream the sample came from; `u` holds the
/// sampled complex arguments (spectral parameters, or plain theta arguments
/// for the scalar checks) and `h` the dynamical parameter when one exists.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckParams {
    pub nome: f64,
    pub seed: u64,
    pub sample_index: u64,
    /// Half the number of spectral parameters; 0 when not applicable.
    pub n: usize,
    pub u: Vec<[f64; 2]>,
    pub h: Option<[f64; 2]>,
}

impl CheckParams {
    pub fn with_arguments(mut self, u: &[Complex64]) -> Self {
        self.u = u.iter().map(|z| [z.re, z.im]).collect();
        self
    }

    pub fn with_dynamical(mut self, h: Complex64) -> Self {
        self.h = Some([h.re, h.im]);
        self
    }
}

/// Outcome of a single identity check at a single sample point.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub params: CheckParams,
    /// Left-hand side as (re, im).
    pub lhs: [f64; 2],
    /// Right-hand side as (re, im).
    pub rhs: [f64; 2],
    /// Nonnegative residual, relative to the largest participating magnitude
    /// (absolute when everything is numerically zero).
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub elapsed_micros: u64,
}

impl VerificationReport {
    /// Builds a report; `pass` is derived, never stored independently.
    pub fn new(
        check_name: impl Into<String>,
        lhs: Complex64,
        rhs: Complex64,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        VerificationReport {
            check_name: check_name.into(),
            params: CheckParams::default(),
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            residual,
            tolerance,
            pass: residual <= tolerance,
            elapsed_micros: 0,
        }
    }

    pub fn with_params(mut self, params: CheckParams) -> Self {
        self.params = params;
        self
    }

    /// Re-judges the report against a different tolerance (used for config
    /// overrides); `pass` stays consistent with `residual ≤ tolerance`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.residual <= tolerance;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.check_name = name.into();
        self
    }

    pub fn with_elapsed(mut self, micros: u64) -> Self {
        self.elapsed_micros = micros;
        self
    }
}

/// Normalized distance between `lhs` and `rhs`.
///
/// The scale is the largest of `|lhs|`, `|rhs|`, and any extra participating
/// magnitudes; if even that is below `zero_tolerance` the comparison falls
/// back to the absolute difference.
pub fn relative_residual(
    lhs: Complex64,
    rhs: Complex64,
    extra_scales: &[f64],
    zero_tolerance: f64,
) -> f64 {
    let mut scale = lhs.norm().max(rhs.norm());
    for &s in extra_scales {
        scale = scale.max(s);
    }
    let diff = (lhs - rhs).norm();
    if scale < zero_tolerance {
        diff
    } else {
        diff / scale
    }
}

/// One-liner for the common case: compare, normalize, wrap in a report.
pub fn residual_report(
    check_name: &str,
    lhs: Complex64,
    rhs: Complex64,
    extra_scales: &[f64],
    zero_tolerance: f64,
    tolerance: f64,
) -> VerificationReport {
    let residual = relative_residual(lhs, rhs, extra_scales, zero_tolerance);
    VerificationReport::new(check_name, lhs, rhs, residual, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracks_tolerance() {
        let r = VerificationReport::new("x", Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1e-12, 1e-10);
        assert!(r.pass);
        let r = r.with_tolerance(1e-13);
        assert!(!r.pass);
        assert_eq!(r.tolerance, 1e-13);
    }

    #[test]
    fn residual_falls_back_to_absolute_near_zero() {
        let a = Complex64::new(1e-18, 0.0);
        let b = Complex64::new(-1e-18, 0.0);
        let r = relative_residual(a, b, &[], 1e-12);
        assert_eq!(r, 2e-18);
    }

    #[test]
    fn extra_scales_dominate() {
        let a = Complex64::new(1e-6, 0.0);
        let b = Complex64::new(0.0, 0.0);
        let r = relative_residual(a, b, &[1.0], 1e-12);
        assert!((r - 1e-6).abs() < 1e-20);
    }

    #[test]
    fn serializes_one_json_object() {
        let r = VerificationReport::new(
            "demo",
            Complex64::new(0.5, -0.25),
            Complex64::new(0.5, -0.25),
            0.0,
            1e-10,
        );
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.starts_with('{') && line.ends_with('}'));
        assert!(line.contains("\"check_name\":\"demo\""));
        assert!(line.contains("\"pass\":true"));
    }
}
