//! The odd theta function `[u]` and its algebraic laws.
//!
//! Everything in this crate is built out of one special function,
//!
//! ```text
//! [u] = 2 sinh(πiu) · ∏_{j=1}^{N} (1 − 2 q^{2j} cosh(2πiu) + q^{4j}) (1 − q^{2j}),
//! ```
//!
//! a truncation of an infinite product over the nome `q ∈ (0, 1)`. In the
//! normalization used here the function has real quasi-period 1 and imaginary
//! quasi-period `τ = −i·ln(q)/π`:
//!
//! ```text
//! [−u]    = −[u]
//! [u + 1] = −[u]
//! [u + τ] = −q⁻¹ e^{−2πiu} [u]
//! ```
//!
//! The truncation order is chosen so the discarded tail sits below double
//! precision; all downstream checks treat `[u]` as exact and measure only
//! floating-point noise.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::report::{residual_report, VerificationReport};
use crate::{ensure_finite, Error};

/// Relative truncation-tail target: `q^(2N) < TAIL_EPS` at the default order.
const TAIL_EPS: f64 = 1e-16;

/// Lattice reduction kicks in once `|Im u|` exceeds this many imaginary
/// periods; below that, `cosh(2πiu)` stays far from overflow.
const REDUCTION_THRESHOLD_PERIODS: f64 = 5.0;

/// Evaluation context for the theta function: nome, truncation order, and the
/// numerical tolerances shared by every check built on top of it.
#[derive(Debug, Clone)]
pub struct EllipticContext {
    nome: f64,
    truncation_order: usize,
    zero_tolerance: f64,
    denominator_guard: f64,
    /// Cached q^{2j}, j = 1..=truncation_order.
    q_even_powers: Vec<f64>,
}

impl EllipticContext {
    /// Context with the default truncation order, the smallest `N` with
    /// `q^(2N) < 1e-16`.
    pub fn new(nome: f64) -> Result<Self, Error> {
        let order = default_truncation_order(nome)?;
        Self::with_truncation(nome, order)
    }

    /// Context with an explicit truncation order (mostly for convergence
    /// tests; `new` picks a sufficient order automatically).
    pub fn with_truncation(nome: f64, truncation_order: usize) -> Result<Self, Error> {
        if !(nome.is_finite() && 0.0 < nome && nome < 1.0) {
            return Err(Error::InvalidNome(nome));
        }
        if truncation_order == 0 {
            return Err(Error::Config(
                "truncation order must be at least 1".to_string(),
            ));
        }
        let q_even_powers = (1..=truncation_order)
            .map(|j| nome.powi(2 * j as i32))
            .collect();
        Ok(EllipticContext {
            nome,
            truncation_order,
            zero_tolerance: 1e-12,
            denominator_guard: 1e-6,
            q_even_powers,
        })
    }

    /// Replaces the threshold below which a value counts as zero.
    pub fn with_zero_tolerance(mut self, zero_tolerance: f64) -> Self {
        assert!(zero_tolerance >= 0.0, "zero tolerance must be nonnegative");
        self.zero_tolerance = zero_tolerance;
        self
    }

    /// Replaces the minimum modulus allowed in denominators.
    pub fn with_denominator_guard(mut self, guard: f64) -> Self {
        assert!(guard > 0.0, "denominator guard must be positive");
        self.denominator_guard = guard;
        self
    }

    pub fn nome(&self) -> f64 {
        self.nome
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }

    pub fn denominator_guard(&self) -> f64 {
        self.denominator_guard
    }

    /// The imaginary quasi-period `τ = −i·ln(q)/π` (purely imaginary, with
    /// positive imaginary part for `q ∈ (0,1)`).
    pub fn tau(&self) -> Complex64 {
        Complex64::new(0.0, -self.nome.ln() / PI)
    }

    /// Evaluates `[u]`.
    ///
    /// Arguments with `|Im u|` beyond a few imaginary periods are reduced to
    /// the fundamental strip first, tracking the exact quasi-period
    /// prefactor, so the `cosh` in the product never overflows.
    pub fn theta(&self, u: Complex64) -> Result<Complex64, Error> {
        ensure_finite(u, "theta argument")?;
        let tau_im = self.tau().im;
        if u.im.abs() <= REDUCTION_THRESHOLD_PERIODS * tau_im {
            return Ok(self.theta_product(u));
        }
        // [u0 + k·τ + m] = (−1)^(k+m) q^(−k²) e^(−2πik·u0) [u0]
        let k = (u.im / tau_im).round();
        let shifted = u - Complex64::new(0.0, k * tau_im);
        let m = shifted.re.round();
        let u0 = shifted - m;
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let sign = if ((k + m) as i64) % 2 == 0 { 1.0 } else { -1.0 };
        let prefactor = sign * self.nome.powf(-k * k) * (-two_pi_i * k * u0).exp();
        Ok(prefactor * self.theta_product(u0))
    }

    /// Evaluates `[u]` and insists the result is usable as a denominator.
    pub fn theta_denominator(&self, u: Complex64, label: &str) -> Result<Complex64, Error> {
        let value = self.theta(u)?;
        let magnitude = value.norm();
        if magnitude < self.denominator_guard {
            return Err(Error::Pole {
                factor: label.to_string(),
                magnitude,
                guard: self.denominator_guard,
            });
        }
        Ok(value)
    }

    /// The truncated product itself, with no lattice reduction.
    fn theta_product(&self, u: Complex64) -> Complex64 {
        let x = Complex64::new(0.0, PI) * u;
        let mut value = 2.0 * x.sinh();
        let c = (2.0 * x).cosh();
        for &q2 in &self.q_even_powers {
            value *= (1.0 - 2.0 * q2 * c + q2 * q2) * (1.0 - q2);
        }
        value
    }
}

/// Smallest truncation order whose discarded tail `q^(2N)` is below 1e-16.
fn default_truncation_order(nome: f64) -> Result<usize, Error> {
    if !(nome.is_finite() && 0.0 < nome && nome < 1.0) {
        return Err(Error::InvalidNome(nome));
    }
    let mut order = (TAIL_EPS.ln() / (2.0 * nome.ln())).ceil().max(1.0) as usize;
    while nome.powi(2 * order as i32) >= TAIL_EPS {
        order += 1;
    }
    Ok(order)
}

/// Checks `[u+1] = −[u]` and `[u+τ] = −q⁻¹ e^{−2πiu} [u]` at one sample.
///
/// Returns one report per quasi-periodicity, both normalized by `|[u]|`.
/// Samples where `[u]` itself is numerically zero cannot be normalized and
/// come back as [`Error::DegenerateSample`].
pub fn check_quasi_periodicity(
    u: Complex64,
    ctx: &EllipticContext,
) -> Result<(VerificationReport, VerificationReport), Error> {
    let base = ctx.theta(u)?;
    let scale = base.norm();
    if scale < ctx.zero_tolerance() {
        return Err(Error::DegenerateSample {
            quantity: "[u]".to_string(),
            magnitude: scale,
        });
    }
    let shifted_one = ctx.theta(u + 1.0)?;
    let first = residual_report(
        "theta_shift_one",
        shifted_one,
        -base,
        &[scale],
        ctx.zero_tolerance(),
        1e-10,
    );

    let shifted_tau = ctx.theta(u + ctx.tau())?;
    let factor = -(Complex64::new(0.0, -2.0 * PI) * u).exp() / ctx.nome();
    let second = residual_report(
        "theta_shift_tau",
        shifted_tau,
        factor * base,
        &[scale],
        ctx.zero_tolerance(),
        1e-10,
    );
    Ok((first, second))
}

/// Checks the half-shift symmetry `[u − 1/2] = [−u − 1/2]`.
pub fn check_half_shift_symmetry(
    u: Complex64,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    let lhs = ctx.theta(u - 0.5)?;
    let rhs = ctx.theta(-u - 0.5)?;
    let scale = lhs.norm().max(rhs.norm());
    if scale < ctx.zero_tolerance() {
        return Err(Error::DegenerateSample {
            quantity: "[u - 1/2]".to_string(),
            magnitude: scale,
        });
    }
    Ok(residual_report(
        "theta_half_shift",
        lhs,
        rhs,
        &[],
        ctx.zero_tolerance(),
        1e-10,
    ))
}

/// Checks the three-term addition formula
/// `[u+x][u−x][v+y][v−y] − [v+x][v−x][u+y][u−y] − [x+y][x−y][u+v][u−v] = 0`,
/// normalized by the largest of the three products.
pub fn check_addition_formula(
    u: Complex64,
    v: Complex64,
    x: Complex64,
    y: Complex64,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    let th = |w| ctx.theta(w);
    let t1 = th(u + x)? * th(u - x)? * th(v + y)? * th(v - y)?;
    let t2 = th(v + x)? * th(v - x)? * th(u + y)? * th(u - y)?;
    let t3 = th(x + y)? * th(x - y)? * th(u + v)? * th(u - v)?;
    let scale = t1.norm().max(t2.norm()).max(t3.norm());
    if scale < ctx.zero_tolerance() {
        return Err(Error::DegenerateSample {
            quantity: "addition-formula terms".to_string(),
            magnitude: scale,
        });
    }
    Ok(residual_report(
        "theta_addition",
        t1,
        t2 + t3,
        &[scale],
        ctx.zero_tolerance(),
        1e-10,
    ))
}

/// Checks that `f` transforms like a degree-`degree` elliptic polynomial with
/// character values `chi_one` and `chi_tau`:
///
/// ```text
/// f(u + 1) = chi_one · f(u)
/// f(u + τ) = chi_tau · e^{−2πi·degree·u − πi·degree·τ} · f(u)
/// ```
///
/// The degree-0 case with trivial character covers constants; the partition
/// functions downstream use degree `2n − 1`.
pub fn check_elliptic_polynomial<F>(
    f: F,
    degree: usize,
    chi_one: Complex64,
    chi_tau: Complex64,
    u: Complex64,
    ctx: &EllipticContext,
) -> Result<(VerificationReport, VerificationReport), Error>
where
    F: Fn(Complex64) -> Result<Complex64, Error>,
{
    let base = f(u)?;
    let scale = base.norm();
    if scale < ctx.zero_tolerance() {
        return Err(Error::DegenerateSample {
            quantity: "f(u)".to_string(),
            magnitude: scale,
        });
    }
    let tau = ctx.tau();
    let deg = degree as f64;

    let lhs_one = f(u + 1.0)?;
    let first = residual_report(
        "elliptic_poly_shift_one",
        lhs_one,
        chi_one * base,
        &[scale],
        ctx.zero_tolerance(),
        1e-10,
    );

    let lhs_tau = f(u + tau)?;
    let exponent = Complex64::new(0.0, -2.0 * PI) * deg * u + Complex64::new(0.0, -PI) * deg * tau;
    let rhs_tau = chi_tau * exponent.exp() * base;
    let second = residual_report(
        "elliptic_poly_shift_tau",
        lhs_tau,
        rhs_tau,
        &[scale],
        ctx.zero_tolerance(),
        1e-10,
    );
    Ok((first, second))
}
