//! Brute-force evaluation of the boundary partition functions.
//!
//! The partition function on 2n sites is the vacuum-to-vacuum matrix element
//! of a product of monodromy matrices,
//!
//! ```text
//! P_2n(u_1, …, u_2n | h) = ⟨Ω| T_2n ⋯ T_2 T_1 |Ω⟩,
//! ```
//!
//! where each `T_j` flips spin `j` at the boundary and then scatters it
//! through every site to its right:
//!
//! ```text
//! T_j = R_{j,2n} ⋯ R_{j,j+2} R_{j,j+1} K_j,
//! ```
//!
//! with `R_{jk}` evaluated at spectral arguments `(u_j, −u_k)` and height
//! `h` when `k − j` is odd, `h + 1/2` when it is even. The factor ordering —
//! adjacent site first, farthest site last — is the one fixed by the
//! recursion relations the partition functions must satisfy (see the
//! recursion tests and the acceptance suite); the opposite ordering fails
//! them at 2n = 4 already.
//!
//! Everything here works on dense state vectors over the full 2^(2n) spin
//! space. It is exponential and meant to be: this module is the oracle the
//! closed forms in [`crate::formulas`] are measured against, so it stays as
//! close to the definition as possible.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::face::{build_r_matrix, RMatrix};
use crate::report::{residual_report, VerificationReport};
use crate::theta::{check_elliptic_polynomial, EllipticContext};
use crate::{ensure_finite, Error};

/// Largest n the oracle accepts (state space 2^(2n) = 1024 at n = 5).
pub const MAX_ORACLE_N: usize = 5;

/// One basis state of m spin-½ sites. Site 0 occupies the most significant
/// bit, so the all-zeros reference state has index 0 for every m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinBasisState {
    index: usize,
    num_sites: usize,
}

impl SpinBasisState {
    pub fn new(index: usize, num_sites: usize) -> Self {
        debug_assert!(index < (1 << num_sites));
        SpinBasisState { index, num_sites }
    }

    /// The all-zeros reference state |Ω⟩.
    pub fn vacuum(num_sites: usize) -> Self {
        SpinBasisState {
            index: 0,
            num_sites,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Occupation bit of `site` (0-based).
    pub fn bit(&self, site: usize) -> usize {
        (self.index >> (self.num_sites - 1 - site)) & 1
    }

    /// Total charge: the number of occupied sites.
    pub fn charge(&self) -> u32 {
        self.index.count_ones()
    }
}

/// Dense vector of 2^m amplitudes over [`SpinBasisState`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |Ω⟩: amplitude 1 on the all-zeros state.
    pub fn vacuum(num_sites: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_sites];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            num_sites,
            amplitudes,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, state: SpinBasisState) -> Complex64 {
        debug_assert_eq!(state.num_sites(), self.num_sites);
        self.amplitudes[state.index()]
    }

    /// Charges that carry any weight above `threshold`.
    pub fn support_charges(&self, threshold: f64) -> Vec<u32> {
        let mut charges: Vec<u32> = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > threshold)
            .map(|(i, _)| (i as u64).count_ones())
            .collect();
        charges.sort_unstable();
        charges.dedup();
        charges
    }

    /// Applies the boundary spin flip at `site`.
    fn apply_flip(&self, site: usize) -> StateVector {
        let mask = 1 << (self.num_sites - 1 - site);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            amplitudes[index ^ mask] = *amp;
        }
        StateVector {
            num_sites: self.num_sites,
            amplitudes,
        }
    }

    /// Applies a two-site weight matrix on sites `(a, b)`, a < b.
    fn apply_two_site(&self, r: &RMatrix, a: usize, b: usize) -> StateVector {
        let m = self.num_sites;
        let mask_a = 1 << (m - 1 - a);
        let mask_b = 1 << (m - 1 - b);
        let mut amplitudes = self.amplitudes.clone();
        for base in 0..self.amplitudes.len() {
            if base & mask_a != 0 || base & mask_b != 0 {
                continue;
            }
            // gather the four states in the order |00⟩, |01⟩, |10⟩, |11⟩
            let idx = [base, base | mask_b, base | mask_a, base | mask_a | mask_b];
            let old = [
                self.amplitudes[idx[0]],
                self.amplitudes[idx[1]],
                self.amplitudes[idx[2]],
                self.amplitudes[idx[3]],
            ];
            for out_state in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for in_state in 0..4 {
                    acc += r.weight(out_state, in_state) * old[in_state];
                }
                amplitudes[idx[out_state]] = acc;
            }
        }
        StateVector {
            num_sites: m,
            amplitudes,
        }
    }
}

/// The coordinates of one partition-function evaluation: 2n spectral
/// parameters and the dynamical parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    u: Vec<Complex64>,
    h: Complex64,
}

impl ParameterPoint {
    pub fn new(u: Vec<Complex64>, h: Complex64) -> Result<Self, Error> {
        if u.is_empty() || u.len() % 2 != 0 {
            return Err(Error::Config(format!(
                "need a positive even number of spectral parameters, got {}",
                u.len()
            )));
        }
        for (i, &z) in u.iter().enumerate() {
            ensure_finite(z, &format!("u[{i}]"))?;
        }
        ensure_finite(h, "h")?;
        Ok(ParameterPoint { u, h })
    }

    /// Half the number of spectral parameters.
    pub fn n(&self) -> usize {
        self.u.len() / 2
    }

    pub fn num_sites(&self) -> usize {
        self.u.len()
    }

    pub fn spectral(&self) -> &[Complex64] {
        &self.u
    }

    pub fn dynamical(&self) -> Complex64 {
        self.h
    }

    /// Same point with `u[index]` replaced.
    pub fn with_spectral(&self, index: usize, value: Complex64) -> ParameterPoint {
        let mut u = self.u.clone();
        u[index] = value;
        ParameterPoint { u, h: self.h }
    }

    /// Same point with two spectral parameters exchanged.
    pub fn with_swapped(&self, i: usize, j: usize) -> ParameterPoint {
        let mut u = self.u.clone();
        u.swap(i, j);
        ParameterPoint { u, h: self.h }
    }

    /// The reduced point with `u[0]` and `u[l]` removed (the right-hand side
    /// of the recursion relations). `l` is 0-based and must be ≥ 1.
    pub fn without_first_and(&self, l: usize) -> Result<ParameterPoint, Error> {
        if l == 0 || l >= self.u.len() {
            return Err(Error::IndexOutOfRange {
                index: l,
                dim: self.u.len(),
            });
        }
        let u: Vec<Complex64> = self
            .u
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 0 && *k != l)
            .map(|(_, z)| *z)
            .collect();
        ParameterPoint::new(u, self.h)
    }
}

/// Applies the monodromy `T_j` (0-based `j`) to a state on the full space:
/// the flip at site `j`, then `R_{j,k}` for `k = j+1, …, 2n−1` in that
/// order, each at height `h` (odd `k − j`) or `h + 1/2` (even `k − j`).
pub fn apply_monodromy(
    j: usize,
    point: &ParameterPoint,
    psi: &StateVector,
    ctx: &EllipticContext,
) -> Result<StateVector, Error> {
    let m = point.num_sites();
    debug_assert_eq!(psi.num_sites(), m);
    let u = point.spectral();
    let h = point.dynamical();
    let mut state = psi.apply_flip(j);
    for k in (j + 1)..m {
        let height = if (k - j) % 2 == 1 { h } else { h + 0.5 };
        let r = build_r_matrix(u[j], -u[k], height, ctx)?;
        state = state.apply_two_site(&r, j, k);
    }
    Ok(state)
}

/// Contracts the full state sum: applies `T_0` through `T_{2n−1}` to |Ω⟩ and
/// reads off the ⟨Ω| component. Exact up to floating point, exponential in n;
/// capped at n = 5.
pub fn partition_function_oracle(
    point: &ParameterPoint,
    ctx: &EllipticContext,
) -> Result<Complex64, Error> {
    if point.n() > MAX_ORACLE_N {
        return Err(Error::CapacityExceeded {
            dim: point.n(),
            max: MAX_ORACLE_N,
        });
    }
    let m = point.num_sites();
    let mut psi = StateVector::vacuum(m);
    for j in 0..m {
        psi = apply_monodromy(j, point, &psi, ctx)?;
    }
    Ok(psi.amplitude(SpinBasisState::vacuum(m)))
}

/// The closed form of the two-site partition function,
/// `P_2 = [1/2][h + u_1 + u_2] / [h]`.
pub fn two_site_closed_form(
    u1: Complex64,
    u2: Complex64,
    h: Complex64,
    ctx: &EllipticContext,
) -> Result<Complex64, Error> {
    let half = ctx.theta(Complex64::new(0.5, 0.0))?;
    let numerator = ctx.theta(h + u1 + u2)?;
    let denom = ctx.theta_denominator(h, "h")?;
    Ok(half * numerator / denom)
}

/// Compares the oracle against itself with `u[i] ⟷ u[j]` exchanged: the
/// partition functions are symmetric in all spectral parameters.
pub fn check_symmetry(
    point: &ParameterPoint,
    i: usize,
    j: usize,
    ctx: &EllipticContext,
) -> Result<VerificationReport, Error> {
    if point.n() > 4 {
        return Err(Error::CapacityExceeded {
            dim: point.n(),
            max: 4,
        });
    }
    let original = partition_function_oracle(point, ctx)?;
    let swapped = partition_function_oracle(&point.with_swapped(i, j), ctx)?;
    Ok(residual_report(
        "oracle_symmetry",
        original,
        swapped,
        &[],
        ctx.zero_tolerance(),
        1e-10,
    ))
}

/// Checks that `u_1 ↦ P_2n` transforms as an elliptic polynomial of degree
/// `2n − 1`: the shift by 1 multiplies it by `(−1)^(2n−1)` and the shift by
/// `τ` by `(−q⁻¹)^(2n−1) · exp(−2πi((2n−1)u_1 + h + Σ_{j≥2} u_j))`.
pub fn check_partition_quasi_periodicity(
    point: &ParameterPoint,
    ctx: &EllipticContext,
) -> Result<(VerificationReport, VerificationReport), Error> {
    if point.n() > 3 {
        return Err(Error::CapacityExceeded {
            dim: point.n(),
            max: 3,
        });
    }
    let degree = point.num_sites() - 1; // 2n − 1, always odd
    let chi_one = Complex64::new(-1.0, 0.0);
    let tail: Complex64 = point.spectral()[1..].iter().sum();
    let exponent = Complex64::new(0.0, -2.0 * PI) * (point.dynamical() + tail);
    let chi_tau = -exponent.exp();
    let f = |u1: Complex64| partition_function_oracle(&point.with_spectral(0, u1), ctx);
    let (first, second) = check_elliptic_polynomial(
        f,
        degree,
        chi_one,
        chi_tau,
        point.spectral()[0],
        ctx,
    )?;
    Ok((
        first.with_name("oracle_quasi_shift_one").with_tolerance(1e-9),
        second.with_name("oracle_quasi_shift_tau").with_tolerance(1e-9),
    ))
}
