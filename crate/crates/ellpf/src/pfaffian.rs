//! Skew-symmetric complex matrices and three independent Pfaffian routines.
//!
//! The Pfaffian of an even-dimensional skew-symmetric matrix is the signed
//! sum over perfect matchings
//!
//! ```text
//! Pf X = Σ_{σ ∈ M_2n} sgn(σ) · x_{σ(1)σ(2)} x_{σ(3)σ(4)} ⋯ x_{σ(2n−1)σ(2n)},
//! ```
//!
//! where the sum runs over pairings with σ(1) < σ(3) < ⋯ and σ(2j−1) < σ(2j).
//! The three routines here — the matching sum itself, the first-row expansion
//! recursion, and an O(n³) tridiagonalization — share no code paths, so their
//! agreement is a meaningful check rather than a tautology.
//!
//! Conventions: `Pf` of the empty 0×0 matrix is 1, and `Pf` of a 2×2 matrix
//! is its upper-right entry.

use num_complex::Complex64;

use crate::Error;

/// Matching-sum enumeration has (dim − 1)!! terms; refuse beyond this.
const MAX_DEFINITION_DIM: usize = 12;

/// Relative asymmetry tolerated (and silently symmetrized away) during
/// construction; anything larger is rejected as genuinely non-skew.
const SKEW_TOLERANCE: f64 = 1e-12;

/// Relative pivot threshold for the elimination routine.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Dense even-dimensional skew-symmetric matrix of complex numbers.
///
/// Construction enforces `x[i][j] = −x[j][i]`: roundoff-level asymmetry is
/// averaged out, larger asymmetry is an error, and the diagonal must be zero
/// to the same tolerance (it is stored as exactly zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SkewMatrix {
    /// Builds a matrix from row-major entries, validating skew-symmetry.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, Error> {
        if dim % 2 != 0 {
            return Err(Error::OddDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::Config(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let max_abs = entries.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let threshold = SKEW_TOLERANCE * max_abs;
        let mut out = entries;
        for i in 0..dim {
            let diag = out[i * dim + i].norm();
            if diag > threshold {
                return Err(Error::NotSkewSymmetric {
                    i,
                    j: i,
                    asymmetry: diag,
                });
            }
            out[i * dim + i] = Complex64::new(0.0, 0.0);
            for j in (i + 1)..dim {
                let a = out[i * dim + j];
                let b = out[j * dim + i];
                let asymmetry = (a + b).norm();
                if asymmetry > threshold {
                    return Err(Error::NotSkewSymmetric { i, j, asymmetry });
                }
                let v = (a - b) * 0.5;
                out[i * dim + j] = v;
                out[j * dim + i] = -v;
            }
        }
        Ok(SkewMatrix { dim, entries: out })
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle; the
    /// lower triangle is filled by antisymmetry, so `f` is never asked for
    /// `i >= j`.
    pub fn from_upper<F>(dim: usize, mut f: F) -> Result<Self, Error>
    where
        F: FnMut(usize, usize) -> Result<Complex64, Error>,
    {
        if dim % 2 != 0 {
            return Err(Error::OddDimension(dim));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut entries = vec![zero; dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = f(i, j)?;
                entries[i * dim + j] = v;
                entries[j * dim + i] = -v;
            }
        }
        Ok(SkewMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Removes rows and columns `i` and `k` (0-based), returning the
    /// (dim − 2)-dimensional matrix used by the expansion recursion.
    pub fn remove_rows_cols(&self, i: usize, k: usize) -> Result<SkewMatrix, Error> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim,
            });
        }
        if k >= self.dim || k == i {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: self.dim,
            });
        }
        let keep: Vec<usize> = (0..self.dim).filter(|&r| r != i && r != k).collect();
        let m = keep.len();
        let mut entries = Vec::with_capacity(m * m);
        for &r in &keep {
            for &c in &keep {
                entries.push(self.get(r, c));
            }
        }
        Ok(SkewMatrix { dim: m, entries })
    }

    /// Determinant by LU elimination with partial pivoting. Kept here so the
    /// `Pf(X)² = det(X)` cross-check does not route through any Pfaffian code.
    pub fn determinant(&self) -> Complex64 {
        let n = self.dim;
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let mut a = self.entries.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = a[col * n + col].norm();
            for row in (col + 1)..n {
                let mag = a[row * n + col].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = row;
                }
            }
            if pivot_mag == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            let pivot = a[col * n + col];
            det *= pivot;
            for row in (col + 1)..n {
                let factor = a[row * n + col] / pivot;
                for j in col..n {
                    let v = a[col * n + j];
                    a[row * n + j] -= factor * v;
                }
            }
        }
        det
    }
}

/// Calls `f` once per perfect matching of `0..dim`, passing the pairs (each
/// `(a, b)` with `a < b`, sorted by first element) and the matching's sign.
pub(crate) fn for_each_perfect_matching<F>(dim: usize, mut f: F)
where
    F: FnMut(&[(usize, usize)], f64),
{
    debug_assert!(dim % 2 == 0);
    let mut free: Vec<usize> = (0..dim).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(dim / 2);
    recurse_matchings(&mut free, &mut pairs, 1.0, &mut f);
}

fn recurse_matchings<F>(
    free: &mut Vec<usize>,
    pairs: &mut Vec<(usize, usize)>,
    sign: f64,
    f: &mut F,
) where
    F: FnMut(&[(usize, usize)], f64),
{
    if free.is_empty() {
        f(pairs, sign);
        return;
    }
    let a = free[0];
    for idx in 1..free.len() {
        let b = free[idx];
        // pairing the smallest free index with the idx-th free element hops
        // over idx−1 smaller elements, each a transposition
        let step_sign = if (idx - 1) % 2 == 0 { sign } else { -sign };
        let mut rest: Vec<usize> = Vec::with_capacity(free.len() - 2);
        rest.extend_from_slice(&free[1..idx]);
        rest.extend_from_slice(&free[idx + 1..]);
        pairs.push((a, b));
        recurse_matchings(&mut rest, pairs, step_sign, f);
        pairs.pop();
    }
}

/// Pfaffian straight from the signed matching sum.
///
/// Exponential in the dimension — the point is transparency, not speed — so
/// it refuses dimensions above 12 ((dim − 1)!! terms).
pub fn pf_by_definition(x: &SkewMatrix) -> Result<Complex64, Error> {
    Ok(pf_with_term_scale(x)?.0)
}

/// Matching sum plus the magnitude of its largest term.
///
/// The second value is the natural scale against which the Pfaffian's
/// floating-point noise must be judged: when `Pf` comes out many orders of
/// magnitude below the largest matching term, the cancellation has eaten the
/// corresponding number of digits, no matter which algorithm produced it.
pub(crate) fn pf_with_term_scale(x: &SkewMatrix) -> Result<(Complex64, f64), Error> {
    let dim = x.dim();
    if dim > MAX_DEFINITION_DIM {
        return Err(Error::CapacityExceeded {
            dim,
            max: MAX_DEFINITION_DIM,
        });
    }
    if dim == 0 {
        return Ok((Complex64::new(1.0, 0.0), 1.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0_f64;
    for_each_perfect_matching(dim, |pairs, sign| {
        let mut term = Complex64::new(sign, 0.0);
        for &(a, b) in pairs {
            term *= x.get(a, b);
        }
        scale = scale.max(term.norm());
        total += term;
    });
    Ok((total, scale))
}

/// Pfaffian by the first-row expansion
/// `Pf X = Σ_{k=2}^{2n} (−1)^k x_{1k} · Pf X with rows/cols 1, k removed`,
/// recursing down to the 2×2 base case.
pub fn pf_by_expansion(x: &SkewMatrix) -> Complex64 {
    let dim = x.dim();
    if dim == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if dim == 2 {
        return x.get(0, 1);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for k in 1..dim {
        // paper indices are 1-based: column k+1 carries sign (−1)^(k+1)
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let minor = x
            .remove_rows_cols(0, k)
            .expect("indices 0 and k are in range and distinct");
        total += sign * x.get(0, k) * pf_by_expansion(&minor);
    }
    total
}

/// Pfaffian by skew-symmetric tridiagonalization with partial pivoting.
///
/// Each symmetric row/column interchange flips the sign; after eliminating a
/// column pair the Pfaffian picks up the superdiagonal entry. O(n³), the
/// workhorse for the 10×10 kernels downstream. A pivot column that is zero
/// relative to the matrix scale means the Pfaffian vanishes.
pub fn pf_by_elimination(x: &SkewMatrix) -> Complex64 {
    let n = x.dim();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut a = x.entries().to_vec();
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut pf = Complex64::new(1.0, 0.0);
    for k in (0..n - 1).step_by(2) {
        // largest |a[row][k]| below the diagonal becomes the pivot
        let mut pivot_row = k + 1;
        let mut pivot_mag = a[(k + 1) * n + k].norm();
        for row in (k + 2)..n {
            let mag = a[row * n + k].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag <= PIVOT_TOLERANCE * scale {
            return Complex64::new(0.0, 0.0);
        }
        if pivot_row != k + 1 {
            for j in 0..n {
                a.swap((k + 1) * n + j, pivot_row * n + j);
            }
            for i in 0..n {
                a.swap(i * n + k + 1, i * n + pivot_row);
            }
            pf = -pf;
        }
        let pivot = a[k * n + k + 1];
        pf *= pivot;
        if k + 2 < n {
            // congruence update of the trailing block:
            // A ← A + τ v^T − v τ^T with τ = A[k, k+2..] / pivot, v = A[k+2.., k+1]
            let tau: Vec<Complex64> = ((k + 2)..n).map(|j| a[k * n + j] / pivot).collect();
            let v: Vec<Complex64> = ((k + 2)..n).map(|i| a[i * n + k + 1]).collect();
            for (ii, i) in ((k + 2)..n).enumerate() {
                for (jj, j) in ((k + 2)..n).enumerate() {
                    a[i * n + j] += tau[ii] * v[jj] - v[ii] * tau[jj];
                }
            }
        }
    }
    pf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SplitMix64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_by_two(a: Complex64) -> SkewMatrix {
        SkewMatrix::new(2, vec![c(0.0, 0.0), a, -a, c(0.0, 0.0)]).unwrap()
    }

    /// The 4×4 with x12..x34 = 1..6; Pf = 1·6 − 2·5 + 3·4 = 8 by hand.
    fn example_4x4() -> SkewMatrix {
        SkewMatrix::from_upper(4, |i, j| {
            let v = match (i, j) {
                (0, 1) => 1.0,
                (0, 2) => 2.0,
                (0, 3) => 3.0,
                (1, 2) => 4.0,
                (1, 3) => 5.0,
                (2, 3) => 6.0,
                _ => unreachable!(),
            };
            Ok(c(v, 0.0))
        })
        .unwrap()
    }

    fn random_skew(rng: &mut SplitMix64, dim: usize) -> SkewMatrix {
        SkewMatrix::from_upper(dim, |_, _| {
            Ok(c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
        })
        .unwrap()
    }

    #[test]
    fn definition_base_cases() {
        let a = c(2.5, -1.0);
        assert_eq!(pf_by_definition(&two_by_two(a)).unwrap(), a);
        let empty = SkewMatrix::new(0, vec![]).unwrap();
        assert_eq!(pf_by_definition(&empty).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn definition_4x4_hand_value() {
        assert!((pf_by_definition(&example_4x4()).unwrap() - c(8.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn definition_zero_row_gives_zero() {
        let x = SkewMatrix::from_upper(4, |i, j| {
            if i == 1 || j == 1 {
                Ok(c(0.0, 0.0))
            } else {
                Ok(c(1.0 + (i + j) as f64, 0.5))
            }
        })
        .unwrap();
        assert_eq!(pf_by_definition(&x).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn definition_rejects_large_dims() {
        let big = SkewMatrix::from_upper(14, |_, _| Ok(c(1.0, 0.0))).unwrap();
        assert!(matches!(
            pf_by_definition(&big),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn expansion_matches_definition() {
        assert!((pf_by_expansion(&example_4x4()) - c(8.0, 0.0)).norm() < 1e-14);
        assert_eq!(pf_by_expansion(&two_by_two(c(3.0, 1.0))), c(3.0, 1.0));
        let mut rng = SplitMix64::new(7);
        let x = random_skew(&mut rng, 8);
        let by_def = pf_by_definition(&x).unwrap();
        let by_exp = pf_by_expansion(&x);
        assert!((by_def - by_exp).norm() < 1e-12 * by_def.norm());
    }

    #[test]
    fn elimination_matches_definition_on_many_random_matrices() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..500 {
            let dim = 2 * (1 + (rng.next_u64() % 4) as usize); // 2, 4, 6, 8
            let x = random_skew(&mut rng, dim);
            let by_def = pf_by_definition(&x).unwrap();
            let by_elim = pf_by_elimination(&x);
            assert!(
                (by_def - by_elim).norm() <= 1e-11 * by_def.norm().max(1e-12),
                "trial {trial} dim {dim}: {by_def} vs {by_elim}"
            );
        }
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let x = example_4x4();
        let pf = pf_by_elimination(&x);
        let det = x.determinant();
        assert!((pf * pf - det).norm() < 1e-12 * det.norm());
        assert!((det - c(64.0, 0.0)).norm() < 1e-12 * 64.0);
    }

    #[test]
    fn block_diagonal_multiplies() {
        let a = c(1.7, 0.4);
        let b = c(-0.6, 2.1);
        let x = SkewMatrix::from_upper(4, |i, j| {
            Ok(match (i, j) {
                (0, 1) => a,
                (2, 3) => b,
                _ => c(0.0, 0.0),
            })
        })
        .unwrap();
        let pf = pf_by_elimination(&x);
        assert!((pf - a * b).norm() < 1e-13 * (a * b).norm());
    }

    #[test]
    fn duplicated_rows_vanish() {
        // make rows 0 and 1 equal off their mutual entry: Pf must vanish
        let mut rng = SplitMix64::new(5);
        let base = random_skew(&mut rng, 6);
        let dim = 6;
        let mut entries = base.entries().to_vec();
        for k in 0..dim {
            if k != 0 && k != 1 {
                let v = entries[0 * dim + k];
                entries[1 * dim + k] = v;
                entries[k * dim + 1] = -v;
            }
        }
        entries[0 * dim + 1] = c(0.0, 0.0);
        entries[1 * dim + 0] = c(0.0, 0.0);
        let x = SkewMatrix::new(dim, entries).unwrap();
        let scale: f64 = x.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(pf_by_definition(&x).unwrap().norm() < 1e-12 * scale);
        assert!(pf_by_elimination(&x).norm() < 1e-12 * scale);
    }

    #[test]
    fn remove_rows_cols_keeps_lower_right_block() {
        let x = example_4x4();
        let sub = x.remove_rows_cols(0, 1).unwrap();
        assert_eq!(sub.dim(), 2);
        assert_eq!(sub.get(0, 1), c(6.0, 0.0));
        // shrinking all the way down reaches the empty matrix, Pf = 1
        let empty = sub.remove_rows_cols(0, 1).unwrap();
        assert_eq!(empty.dim(), 0);
        assert_eq!(pf_by_expansion(&empty), c(1.0, 0.0));
    }

    #[test]
    fn remove_rows_cols_rejects_bad_indices() {
        let x = example_4x4();
        assert!(x.remove_rows_cols(0, 0).is_err());
        assert!(x.remove_rows_cols(0, 4).is_err());
        assert!(x.remove_rows_cols(9, 1).is_err());
    }

    #[test]
    fn construction_symmetrizes_roundoff_and_rejects_worse() {
        let eps = 1e-15;
        let x = SkewMatrix::new(
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0 + eps, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(x.get(0, 1), -x.get(1, 0));

        let bad = SkewMatrix::new(
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(-0.9, 0.0), c(0.0, 0.0)],
        );
        assert!(matches!(bad, Err(Error::NotSkewSymmetric { .. })));

        let odd = SkewMatrix::new(3, vec![c(0.0, 0.0); 9]);
        assert!(matches!(odd, Err(Error::OddDimension(3))));
    }

    #[test]
    fn matching_count_is_double_factorial() {
        let mut count = 0usize;
        for_each_perfect_matching(8, |_, _| count += 1);
        assert_eq!(count, 105); // 7!!
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_three_algorithms_agree(seed in 0u64..u64::MAX, half in 1usize..5) {
            let mut rng = SplitMix64::new(seed);
            let x = random_skew(&mut rng, 2 * half);
            let by_def = pf_by_definition(&x).unwrap();
            let by_exp = pf_by_expansion(&x);
            let by_elim = pf_by_elimination(&x);
            let scale = by_def.norm().max(1e-12);
            prop_assert!((by_def - by_exp).norm() <= 1e-11 * scale);
            prop_assert!((by_def - by_elim).norm() <= 1e-11 * scale);
        }

        #[test]
        fn prop_pf_squared_is_det(seed in 0u64..u64::MAX, half in 1usize..5) {
            let mut rng = SplitMix64::new(seed);
            let x = random_skew(&mut rng, 2 * half);
            let pf = pf_by_elimination(&x);
            let det = x.determinant();
            let scale = det.norm().max(1e-12);
            prop_assert!((pf * pf - det).norm() <= 1e-10 * scale);
        }

        #[test]
        fn prop_diagonal_scaling(seed in 0u64..u64::MAX, half in 1usize..4) {
            let mut rng = SplitMix64::new(seed);
            let dim = 2 * half;
            let x = random_skew(&mut rng, dim);
            let d: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)))
                .collect();
            let scaled = SkewMatrix::from_upper(dim, |i, j| Ok(d[i] * x.get(i, j) * d[j])).unwrap();
            let expected = d.iter().product::<Complex64>() * pf_by_definition(&x).unwrap();
            let got = pf_by_definition(&scaled).unwrap();
            prop_assert!((got - expected).norm() <= 1e-10 * expected.norm().max(1e-12));
        }

        #[test]
        fn prop_permutation_sign(seed in 0u64..u64::MAX, half in 1usize..4) {
            let mut rng = SplitMix64::new(seed);
            let dim = 2 * half;
            let x = random_skew(&mut rng, dim);
            // random permutation by Fisher-Yates, tracking its sign
            let mut perm: Vec<usize> = (0..dim).collect();
            let mut sign = 1.0;
            for i in (1..dim).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                if j != i {
                    perm.swap(i, j);
                    sign = -sign;
                }
            }
            let permuted =
                SkewMatrix::from_upper(dim, |i, j| Ok(x.get(perm[i], perm[j]))).unwrap();
            let expected = sign * pf_by_definition(&x).unwrap();
            let got = pf_by_definition(&permuted).unwrap();
            prop_assert!((got - expected).norm() <= 1e-10 * expected.norm().max(1e-12));
        }
    }
}
