//! Boltzmann weights of the free-fermion face model in vertex form: the
//! dynamical R-matrix, the off-diagonal boundary K-matrix, and numerical
//! checks of the relations that make the pair integrable.
//!
//! The R-matrix acts on two spin-½ spaces in the basis |00⟩, |01⟩, |10⟩,
//! |11⟩ (rows are outgoing states, columns incoming) and depends on the
//! spectral parameters only through their difference `d = u − v`:
//!
//! ```text
//! ⎛ [d+1/2]                                       ⎞
//! ⎜        [h−1/2][d]/[h]   [h+d][1/2]/[h]        ⎟
//! ⎜        [h−d][1/2]/[h]   [h+1/2][d]/[h]        ⎟
//! ⎝                                       [d+1/2] ⎠
//! ```
//!
//! Charge is conserved (the ice rule): every entry whose in- and out-charge
//! differ vanishes identically. The height parameter `h` enters only through
//! theta functions of `h`, `h ± d`, `h ± 1/2`, which makes the weights
//! invariant under `h → h + 1`.
//!
//! The boundary matrix is the constant spin flip `K = [[0, 1], [1, 0]]`; the
//! `(u, h)` arguments are kept in the constructor signature because every
//! other weight carries them, but they are inert.

use num_complex::Complex64;

use crate::report::{residual_report, VerificationReport};
use crate::theta::EllipticContext;
use crate::{ensure_finite, Error};

/// Two-site Boltzmann weights at fixed `(u, v, h)`.
#[derive(Debug, Clone)]
pub struct RMatrix {
    u: Complex64,
    v: Complex64,
    h: Complex64,
    /// Row-major 4×4, rows = outgoing |ab⟩, columns = incoming |ab⟩.
    weights: [Complex64; 16],
}

impl RMatrix {
    pub fn spectral_difference(&self) -> Complex64 {
        self.u - self.v
    }

    pub fn dynamical(&self) -> Complex64 {
        self.h
    }

    /// Weight ⟨out|R|in⟩ with two-bit state indices (0..4).
    pub fn weight(&self, out_state: usize, in_state: usize) -> Complex64 {
        self.weights[out_state * 4 + in_state]
    }

    pub fn weights(&self) -> &[Complex64; 16] {
        &self.weights
    }
}

/// The constant off-diagonal boundary matrix.
#[derive(Debug, Clone, Copy)]
pub struct KMatrix;

impl KMatrix {
    /// The weights do not actually depend on `u` or `h`; the arguments exist
    /// so boundary and bulk weights are built the same way.
    pub fn new(_u: Complex64, _h: Complex64) -> Self {
        KMatrix
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        [[zero, one], [one, zero]]
    }
}

/// Builds the R-matrix at `(u, v, h)`. Fails with a pole error when `[h]`
/// falls inside the denominator guard.
pub fn build_r_matrix(
    u: Complex64,
    v: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
) -> Result<RMatrix, Error> {
    ensure_finite(u, "R-matrix u")?;
    ensure_finite(v, "R-matrix v")?;
    ensure_finite(h, "R-matrix h")?;
    let th = |w| ctx.theta(w);
    let denom = ctx.theta_denominator(h, "h")?;
    let d = u - v;
    let corner = th(d + 0.5)?;
    let half = th(Complex64::new(0.5, 0.0))?;
    let zero = Complex64::new(0.0, 0.0);
    let mut weights = [zero; 16];
    weights[0] = corner; // ⟨00|R|00⟩
    weights[15] = corner; // ⟨11|R|11⟩
    weights[1 * 4 + 1] = th(h - 0.5)? * th(d)? / denom; // ⟨01|R|01⟩
    weights[1 * 4 + 2] = th(h + d)? * half / denom; // ⟨01|R|10⟩
    weights[2 * 4 + 1] = th(h - d)? * half / denom; // ⟨10|R|01⟩
    weights[2 * 4 + 2] = th(h + 0.5)? * th(d)? / denom; // ⟨10|R|10⟩
    Ok(RMatrix { u, v, h, weights })
}

// ---------------------------------------------------------------------------
// dense complex operators on 2^m-dimensional spin spaces (m = 2 or 3 here)

#[derive(Debug, Clone)]
pub(crate) struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub(crate) fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub(crate) fn mul(&self, other: &Operator) -> Operator {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Embeds a two-site 4×4 weight matrix into `num_sites` tensor factors,
/// acting on sites `(a, b)` (0-based, site 0 = most significant bit). The
/// two-bit state index is `2·bit_a + bit_b`.
pub(crate) fn embed_two_site(
    weights: &[Complex64; 16],
    a: usize,
    b: usize,
    num_sites: usize,
) -> Operator {
    let dim = 1 << num_sites;
    let bit = |state: usize, site: usize| (state >> (num_sites - 1 - site)) & 1;
    let mut out = Operator::zeros(dim);
    for row in 0..dim {
        for col in 0..dim {
            let mut others_match = true;
            for s in 0..num_sites {
                if s != a && s != b && bit(row, s) != bit(col, s) {
                    others_match = false;
                    break;
                }
            }
            if !others_match {
                continue;
            }
            let out_state = 2 * bit(row, a) + bit(row, b);
            let in_state = 2 * bit(col, a) + bit(col, b);
            out.set(row, col, weights[out_state * 4 + in_state]);
        }
    }
    out
}

/// Embeds a one-site 2×2 matrix at `site`.
pub(crate) fn embed_one_site(m: &[[Complex64; 2]; 2], site: usize, num_sites: usize) -> Operator {
    let dim = 1 << num_sites;
    let bit = |state: usize, s: usize| (state >> (num_sites - 1 - s)) & 1;
    let mut out = Operator::zeros(dim);
    for row in 0..dim {
        for col in 0..dim {
            let mut others_match = true;
            for s in 0..num_sites {
                if s != site && bit(row, s) != bit(col, s) {
                    others_match = false;
                    break;
                }
            }
            if others_match {
                out.set(row, col, m[bit(row, site)][bit(col, site)]);
            }
        }
    }
    out
}

/// The swap-conjugated weights: same operator read with the two sites in the
/// opposite roles, i.e. P·R·P on the four-dimensional space.
fn swapped_weights(r: &RMatrix) -> [Complex64; 16] {
    let swap = |s: usize| ((s & 1) << 1) | (s >> 1);
    let mut out = [Complex64::new(0.0, 0.0); 16];
    for row in 0..4 {
        for col in 0..4 {
            out[row * 4 + col] = r.weight(swap(row), swap(col));
        }
    }
    out
}

/// Checks the dynamical Yang-Baxter relation on three sites:
///
/// ```text
/// R_bc(v,w|h) R_ac(u,w|h+1/2) R_ab(u,v|h)
///   = R_ab(u,v|h+1/2) R_ac(u,w|h) R_bc(v,w|h+1/2)
/// ```
///
/// The residual is the largest entry of the difference, relative to the
/// largest entry of either side.
pub fn check_dynamical_ybe(
    u: Complex64,
    v: Complex64,
    w: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    ctx.theta_denominator(h, "h")?;
    ctx.theta_denominator(h + 0.5, "h + 1/2")?;
    let r_bc_h = embed_two_site(build_r_matrix(v, w, h, ctx)?.weights(), 1, 2, 3);
    let r_ac_shift = embed_two_site(build_r_matrix(u, w, h + 0.5, ctx)?.weights(), 0, 2, 3);
    let r_ab_h = embed_two_site(build_r_matrix(u, v, h, ctx)?.weights(), 0, 1, 3);
    let r_ab_shift = embed_two_site(build_r_matrix(u, v, h + 0.5, ctx)?.weights(), 0, 1, 3);
    let r_ac_h = embed_two_site(build_r_matrix(u, w, h, ctx)?.weights(), 0, 2, 3);
    let r_bc_shift = embed_two_site(build_r_matrix(v, w, h + 0.5, ctx)?.weights(), 1, 2, 3);

    let lhs = r_bc_h.mul(&r_ac_shift).mul(&r_ab_h);
    let rhs = r_ab_shift.mul(&r_ac_h).mul(&r_bc_shift);
    Ok(operator_report("dynamical_ybe", &lhs, &rhs, ctx, 1e-10))
}

/// Which reading of the reflection equation to test. `Literal` is the
/// equation as displayed; the shifted variants move the height of the two
/// interior R-factors by ±1/2 and exist as a diagnostic in case the literal
/// reading ever fails on some parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectionReading {
    Literal,
    InteriorShiftPlus,
    InteriorShiftMinus,
}

/// Checks the boundary (reflection) equation on two sites:
///
/// ```text
/// R_ba(u−v, h) K_b R_ab(u+v, h) K_a = K_a R_ba(u+v, h) K_b R_ab(u−v, h)
/// ```
///
/// with single-argument R read in difference form (the weights depend only
/// on `u − v`). `R_ba` is the same weight matrix conjugated by the site
/// swap. Under [`ReflectionReading::Literal`] the heights are as written.
pub fn check_reflection_equation(
    u: Complex64,
    v: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    check_reflection_reading(u, v, h, ctx, ReflectionReading::Literal)
}

pub fn check_reflection_reading(
    u: Complex64,
    v: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
    reading: ReflectionReading,
) -> Result<VerificationReport, Error> {
    ctx.theta_denominator(h, "h")?;
    let (h_inner, name) = match reading {
        ReflectionReading::Literal => (h, "reflection_equation"),
        ReflectionReading::InteriorShiftPlus => (h + 0.5, "reflection_shift_plus"),
        ReflectionReading::InteriorShiftMinus => (h - 0.5, "reflection_shift_minus"),
    };
    if reading != ReflectionReading::Literal {
        ctx.theta_denominator(h_inner, "h inner")?;
    }
    let zero = Complex64::new(0.0, 0.0);
    let r_ab = |w: Complex64, hh: Complex64| -> Result<Operator, Error> {
        Ok(embed_two_site(build_r_matrix(w, zero, hh, ctx)?.weights(), 0, 1, 2))
    };
    let r_ba = |w: Complex64, hh: Complex64| -> Result<Operator, Error> {
        let r = build_r_matrix(w, zero, hh, ctx)?;
        Ok(embed_two_site(&swapped_weights(&r), 0, 1, 2))
    };
    let k = KMatrix::new(u, h).entries();
    let k_a = embed_one_site(&k, 0, 2);
    let k_b = embed_one_site(&k, 1, 2);

    let lhs = r_ba(u - v, h)?.mul(&k_b).mul(&r_ab(v + u, h_inner)?).mul(&k_a);
    let rhs = k_a.mul(&r_ba(u + v, h_inner)?).mul(&k_b).mul(&r_ab(u - v, h)?);
    Ok(operator_report(name, &lhs, &rhs, ctx, 1e-10))
}

/// Asserts that every charge-violating entry of the R-matrix is exactly
/// zero. The residual is the largest offending magnitude (absolute).
pub fn check_ice_rule(r: &RMatrix) -> VerificationReport {
    let charge = |state: usize| (state & 1) + ((state >> 1) & 1);
    let mut worst = 0.0_f64;
    for out_state in 0..4 {
        for in_state in 0..4 {
            if charge(out_state) != charge(in_state) {
                worst = worst.max(r.weight(out_state, in_state).norm());
            }
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    VerificationReport::new("ice_rule", zero, zero, worst, 0.0)
}

/// Checks `R(u, v | h + 1) = R(u, v | h)` entrywise.
pub fn check_h_periodicity(
    u: Complex64,
    v: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    let base = build_r_matrix(u, v, h, ctx)?;
    let shifted = build_r_matrix(u, v, h + 1.0, ctx)?;
    let scale = base.weights().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = base
        .weights()
        .iter()
        .zip(shifted.weights())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let residual = if scale < ctx.zero_tolerance() {
        diff
    } else {
        diff / scale
    };
    let zero = Complex64::new(0.0, 0.0);
    Ok(VerificationReport::new(
        "r_h_periodicity",
        zero,
        zero,
        residual,
        1e-12,
    ))
}

fn operator_report(
    name: &str,
    lhs: &Operator,
    rhs: &Operator,
    ctx: &EllipticContext,
    tolerance: f64,
) -> VerificationReport {
    let scale = lhs.max_abs().max(rhs.max_abs());
    let diff = lhs.max_abs_diff(rhs);
    let residual = if scale < ctx.zero_tolerance() {
        diff
    } else {
        diff / scale
    };
    // record the largest-magnitude entry pair as lhs/rhs context
    let mut best = (0usize, 0usize, 0.0_f64);
    for r in 0..lhs.dim {
        for c in 0..lhs.dim {
            let m = lhs.get(r, c).norm();
            if m > best.2 {
                best = (r, c, m);
            }
        }
    }
    let mut report = residual_report(
        name,
        lhs.get(best.0, best.1),
        rhs.get(best.0, best.1),
        &[scale],
        ctx.zero_tolerance(),
        tolerance,
    );
    // the matrix residual is a max over entries, not the headline pair
    report.residual = residual;
    report.pass = residual <= tolerance;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn corner_weight_is_shifted_difference() {
        let ctx = EllipticContext::new(0.3).unwrap();
        let u = c(0.25, 0.0);
        let v = c(0.15, 0.0);
        let r = build_r_matrix(u, v, c(0.4, 0.0), &ctx).unwrap();
        let expected = ctx.theta(c(0.6, 0.0)).unwrap();
        assert!((r.weight(0, 0) - expected).norm() < 1e-14 * expected.norm());
        assert_eq!(r.weight(0, 0), r.weight(3, 3));
    }

    #[test]
    fn equal_spectral_parameters_collapse_middle_block() {
        // at u = v the diagonal middle entries carry [0] = 0 and the block
        // becomes [1/2]/[h] times an off-diagonal pair
        let ctx = EllipticContext::new(0.3).unwrap();
        let u = c(0.2, 0.05);
        let h = c(0.37, 0.0);
        let r = build_r_matrix(u, u, h, &ctx).unwrap();
        assert_eq!(r.weight(1, 1).norm(), 0.0);
        assert_eq!(r.weight(2, 2).norm(), 0.0);
        // [h+0][1/2]/[h] collapses to [1/2], matching the corners
        let half = ctx.theta(c(0.5, 0.0)).unwrap();
        assert!((r.weight(1, 2) - half).norm() < 1e-12 * half.norm());
        assert!((r.weight(0, 0) - half).norm() < 1e-13 * half.norm());
    }

    #[test]
    fn h_periodicity_holds() {
        let ctx = EllipticContext::new(0.3).unwrap();
        let rep = check_h_periodicity(c(0.2, 0.03), c(-0.1, 0.05), c(0.33, 0.02), &ctx).unwrap();
        assert!(rep.pass, "residual {}", rep.residual);
        assert!(rep.residual < 1e-12);
    }

    #[test]
    fn pole_is_reported_with_label() {
        let ctx = EllipticContext::new(0.3).unwrap();
        // h = 0 makes [h] vanish
        match build_r_matrix(c(0.2, 0.0), c(0.1, 0.0), c(0.0, 0.0), &ctx) {
            Err(Error::Pole { factor, .. }) => assert_eq!(factor, "h"),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn ice_rule_is_exact() {
        let ctx = EllipticContext::new(0.5).unwrap();
        let r = build_r_matrix(c(0.11, 0.04), c(-0.2, 0.01), c(0.29, -0.03), &ctx).unwrap();
        let rep = check_ice_rule(&r);
        assert!(rep.pass);
        assert_eq!(rep.residual, 0.0);
        // spot-check two charge-violating entries
        assert_eq!(r.weight(1, 0), c(0.0, 0.0)); // ⟨01|R|00⟩
        assert_eq!(r.weight(3, 0), c(0.0, 0.0)); // ⟨11|R|00⟩
    }

    #[test]
    fn ybe_holds_at_fixed_and_degenerate_points() {
        let ctx = EllipticContext::new(0.3).unwrap();
        let rep = check_dynamical_ybe(c(0.1, 0.0), c(0.25, 0.0), c(0.4, 0.0), c(0.33, 0.0), &ctx)
            .unwrap();
        assert!(rep.residual < 1e-11, "residual {}", rep.residual);

        // u = v: both sides share the degenerate R_ab
        let u = c(0.17, 0.02);
        let rep = check_dynamical_ybe(u, u, c(0.4, -0.03), c(0.28, 0.05), &ctx).unwrap();
        assert!(rep.residual < 1e-11);

        let ctx = EllipticContext::new(0.6).unwrap();
        let rep = check_dynamical_ybe(
            c(0.13, 0.06),
            c(-0.21, -0.04),
            c(0.31, 0.09),
            c(0.22, -0.07),
            &ctx,
        )
        .unwrap();
        assert!(rep.residual < 1e-10);
    }

    #[test]
    fn reflection_holds_literally() {
        let ctx = EllipticContext::new(0.3).unwrap();
        let rep =
            check_reflection_equation(c(0.15, 0.0), c(0.3, 0.0), c(0.4, 0.0), &ctx).unwrap();
        assert!(rep.residual < 1e-11, "residual {}", rep.residual);

        // u = v and u = −v put R at argument 0 on both sides
        let rep =
            check_reflection_equation(c(0.2, 0.01), c(0.2, 0.01), c(0.37, 0.0), &ctx).unwrap();
        assert!(rep.residual < 1e-11);
        let rep =
            check_reflection_equation(c(0.2, 0.0), c(-0.2, 0.0), c(0.37, 0.1), &ctx).unwrap();
        assert!(rep.residual < 1e-11);
    }

    #[test]
    fn build_rejects_non_finite() {
        let ctx = EllipticContext::new(0.3).unwrap();
        assert!(build_r_matrix(c(f64::NAN, 0.0), c(0.0, 0.0), c(0.3, 0.0), &ctx).is_err());
    }
}
