//! Dense complex linear algebra and operator construction.
//!
//! Everything downstream works on dense `Array2<Complex64>` matrices: the
//! largest spaces in play are 4 internal levels times a few tens of Fock
//! states, so dense O(d³) kernels are fast and exactly reproducible. All
//! frequencies are in units of the trap frequency unless noted otherwise.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Default tolerance used by kernel (null-space) searches.
pub const KERNEL_TOL: f64 = 1e-10;
/// Pivot threshold for declaring a linear system singular, relative to the
/// largest matrix entry.
pub const PIVOT_REL_THRESHOLD: f64 = 1e-14;
/// Relative tolerance for Hermiticity checks.
pub const HERMITICITY_REL_TOL: f64 = 1e-12;

/// Dimension bookkeeping for the (4 internal levels) ⊗ (truncated Fock space)
/// product. The internal index varies slowest: state = internal · n_f + phonon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    pub internal_dim: usize,
    pub fock_dim: usize,
}

impl HilbertSpace {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "fock_dim must be >= 2, got {fock_dim}"
            )));
        }
        Ok(Self {
            internal_dim: 4,
            fock_dim,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.internal_dim * self.fock_dim
    }

    pub fn index(&self, internal: usize, phonon: usize) -> usize {
        debug_assert!(internal < self.internal_dim && phonon < self.fock_dim);
        internal * self.fock_dim + phonon
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.fock_dim, index % self.fock_dim)
    }

    /// Lift a 4x4 internal operator to the full space: op ⊗ I_fock.
    pub fn embed_internal(&self, op: &CMatrix) -> Result<CMatrix> {
        if op.nrows() != self.internal_dim || op.ncols() != self.internal_dim {
            return Err(Error::DimensionMismatch {
                context: "embed_internal",
                expected: self.internal_dim,
                got: op.nrows(),
            });
        }
        kron(op, &identity(self.fock_dim))
    }

    /// Lift a Fock-space operator to the full space: I_4 ⊗ op.
    pub fn embed_phonon(&self, op: &CMatrix) -> Result<CMatrix> {
        if op.nrows() != self.fock_dim || op.ncols() != self.fock_dim {
            return Err(Error::DimensionMismatch {
                context: "embed_phonon",
                expected: self.fock_dim,
                got: op.nrows(),
            });
        }
        kron(&identity(self.internal_dim), op)
    }
}

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Entrywise max |A - A†|; zero for exactly Hermitian matrices.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    hermiticity_error(m) <= HERMITICITY_REL_TOL * max_abs(m).max(f64::MIN_POSITIVE)
}

/// Kronecker product of two square matrices:
/// (a ⊗ b)[i·n + k, j·n + l] = a[i, j] · b[k, l].
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.nrows() != b.ncols() {
        return Err(Error::NonSquare {
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let m = a.nrows();
    let n = b.nrows();
    let mut out = Array2::zeros((m * n, m * n));
    for i in 0..m {
        for j in 0..m {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out[[i * n + k, j * n + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    Ok(out)
}

/// Fock-space annihilation operator: a[n-1, n] = √n.
pub fn annihilation(n_f: usize) -> Result<CMatrix> {
    if n_f < 2 {
        return Err(Error::InvalidConfig(format!(
            "Fock dimension must be >= 2, got {n_f}"
        )));
    }
    let mut a = Array2::zeros((n_f, n_f));
    for n in 1..n_f {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(n_f: usize) -> Result<CMatrix> {
    Ok(dagger(&annihilation(n_f)?))
}

/// Number operator a†a = diag(0, 1, …, n_f - 1).
pub fn number_operator(n_f: usize) -> Result<CMatrix> {
    let mut n = Array2::zeros((n_f, n_f));
    for k in 0..n_f {
        n[[k, k]] = C64::new(k as f64, 0.0);
    }
    if n_f < 2 {
        return Err(Error::InvalidConfig(format!(
            "Fock dimension must be >= 2, got {n_f}"
        )));
    }
    Ok(n)
}

/// LU factorization with partial pivoting.
///
/// With `clamp` set, pivots smaller in magnitude than the threshold are
/// replaced by the threshold instead of aborting; this is used for kernel
/// searches and for resolvent solves of consistent singular systems.
pub struct LuFactors {
    lu: CMatrix,
    perm: Vec<usize>,
    threshold: f64,
    clamp: bool,
}

impl LuFactors {
    pub fn factor(a: &CMatrix, clamp: bool) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let n = a.nrows();
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let threshold = PIVOT_REL_THRESHOLD * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // partial pivot on column k
            let mut p = k;
            let mut best = lu[[k, k]].norm();
            for i in (k + 1)..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    let tmp = lu[[k, j]];
                    lu[[k, j]] = lu[[p, j]];
                    lu[[p, j]] = tmp;
                }
            }
            let mut pivot = lu[[k, k]];
            if pivot.norm() < threshold {
                if !clamp {
                    return Err(Error::SingularMatrix {
                        pivot: pivot.norm(),
                        threshold,
                    });
                }
                // keep the phase when there is one; fall back to +threshold
                pivot = if pivot.norm() > 0.0 {
                    pivot / pivot.norm() * threshold
                } else {
                    C64::new(threshold, 0.0)
                };
                lu[[k, k]] = pivot;
            }
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                if factor != C64::new(0.0, 0.0) {
                    for j in (k + 1)..n {
                        let sub = factor * lu[[k, j]];
                        lu[[i, j]] -= sub;
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            threshold,
            clamp,
        })
    }

    pub fn solve(&self, rhs: &CVector) -> Result<CVector> {
        let n = self.lu.nrows();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LuFactors::solve rhs",
                expected: n,
                got: rhs.len(),
            });
        }
        let mut x: CVector = Array1::zeros(n);
        for i in 0..n {
            x[i] = rhs[self.perm[i]];
        }
        // forward substitution (unit lower)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        Ok(x)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_clamped(&self) -> bool {
        self.clamp
    }
}

/// Solve a·x = rhs by LU with partial pivoting. Fails with an explicit
/// singularity error when a pivot falls below 1e-14 times the matrix scale.
pub fn linear_solve(a: &CMatrix, rhs: &CVector) -> Result<CVector> {
    LuFactors::factor(a, false)?.solve(rhs)
}

// Small deterministic generator for inverse-iteration starting vectors; keeps
// kernel searches reproducible without pulling in an RNG dependency.
fn seeded_vector(n: usize, seed: u64) -> CVector {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        // map to [-1, 1)
        (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    };
    let mut v: CVector = Array1::zeros(n);
    for z in v.iter_mut() {
        *z = C64::new(next(), next());
    }
    v
}

fn normalize(v: &mut CVector) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|z| z / norm);
    }
    norm
}

fn apply(a: &CMatrix, v: &CVector) -> CVector {
    a.dot(v)
}

fn inverse_iteration(
    lu: &LuFactors,
    a: &CMatrix,
    a_norm: f64,
    tol: f64,
    seed: u64,
    orthogonal_to: Option<&CVector>,
) -> Result<CVector> {
    let n = a.nrows();
    let mut v = seeded_vector(n, seed);
    if let Some(u) = orthogonal_to {
        project_out(&mut v, u);
    }
    normalize(&mut v);
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        let mut w = lu.solve(&v)?;
        if let Some(u) = orthogonal_to {
            project_out(&mut w, u);
        }
        if normalize(&mut w) == 0.0 {
            break;
        }
        v = w;
        let residual = apply(a, &v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        best = best.min(residual);
        if residual <= tol * a_norm {
            return Ok(v);
        }
    }
    Err(Error::FullRank {
        achieved: best,
        tol: tol * a_norm,
    })
}

fn project_out(v: &mut CVector, u: &CVector) {
    let uu: C64 = u.iter().map(|z| z.conj() * z).sum();
    if uu.norm() == 0.0 {
        return;
    }
    let uv: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    let coeff = uv / uu;
    for (vi, ui) in v.iter_mut().zip(u.iter()) {
        *vi -= coeff * ui;
    }
}

/// Find a unit vector v with ‖a·v‖ ≤ tol·‖a‖ by inverse iteration on a
/// pivot-clamped LU factorization. Errors with `FullRank` when no such
/// vector exists at the requested tolerance.
pub fn null_vector(a: &CMatrix, tol: f64) -> Result<CVector> {
    let lu = LuFactors::factor(a, true)?;
    let a_norm = frobenius_norm(a).max(f64::MIN_POSITIVE);
    inverse_iteration(&lu, a, a_norm, tol, 0x5EED, None)
}

/// Check whether the kernel of `a` contains a second direction independent of
/// `v` at the same tolerance.
pub fn kernel_is_degenerate(a: &CMatrix, tol: f64, v: &CVector) -> bool {
    let lu = match LuFactors::factor(a, true) {
        Ok(lu) => lu,
        Err(_) => return false,
    };
    let a_norm = frobenius_norm(a).max(f64::MIN_POSITIVE);
    inverse_iteration(&lu, a, a_norm, tol, 0xA17E, Some(v)).is_ok()
}

/// Kernel vector plus degeneracy flag from a single LU factorization.
pub fn kernel_pair(a: &CMatrix, tol: f64) -> Result<(CVector, bool)> {
    let lu = LuFactors::factor(a, true)?;
    let a_norm = frobenius_norm(a).max(f64::MIN_POSITIVE);
    let v = inverse_iteration(&lu, a, a_norm, tol, 0x5EED, None)?;
    let degenerate = inverse_iteration(&lu, a, a_norm, tol, 0xA17E, Some(&v)).is_ok();
    Ok((v, degenerate))
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut a = m.clone();
    let scale = max_abs(&a).max(f64::MIN_POSITIVE);
    let stop = 1e-14 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[[p, q]].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[[p, q]];
                let babs = b.norm();
                if babs <= stop {
                    continue;
                }
                let phase = b / babs;
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let theta = (aqq - app) / (2.0 * babs);
                // smaller root of t² − 2θt − 1 = 0
                let t = -theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = phase * (t * c);
                // A <- G† A G with G[p,p]=c, G[q,p]=conj(s), G[p,q]=-s, G[q,q]=c
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c + aiq * s.conj();
                    a[[i, q]] = -aip * s + aiq * c;
                }
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = apj * c + aqj * s;
                    a[[q, j]] = -apj * s.conj() + aqj * c;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = a.diag().iter().map(|z| z.re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn kron_identity() {
        let out = kron(&identity(2), &identity(3)).unwrap();
        assert_eq!(out, identity(6));
    }

    #[test]
    fn kron_diagonal() {
        let mut d = Array2::zeros((2, 2));
        d[[0, 0]] = C64::new(1.0, 0.0);
        d[[1, 1]] = C64::new(-1.0, 0.0);
        let out = kron(&d, &identity(2)).unwrap();
        let expect = Array2::from_diag(&Array1::from(vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        assert_eq!(out, expect);
    }

    #[test]
    fn kron_matches_index_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 3);
        let out = kron(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = a[[i, j]] * b[[k, l]];
                        let got = out[[i * 3 + k, j * 3 + l]];
                        assert!((expect - got).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_rejects_non_square() {
        let a = Array2::zeros((2, 3));
        assert!(matches!(
            kron(&a, &identity(2)),
            Err(Error::NonSquare { .. })
        ));
    }

    #[test]
    fn kron_associative_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 2);
            let b = random_matrix(&mut rng, 2);
            let c = random_matrix(&mut rng, 3);
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            let diff = &left - &right;
            assert!(max_abs(&diff) <= 1e-12);

            // bilinearity in the first argument
            let scaled = kron(&(&a * C64::new(2.0, -1.0)), &c).unwrap();
            let direct = kron(&a, &c).unwrap() * C64::new(2.0, -1.0);
            assert!(max_abs(&(&scaled - &direct)) <= 1e-12);
        }
    }

    #[test]
    fn annihilation_small_cases() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2[[0, 1]], C64::new(1.0, 0.0));
        assert_eq!(a2[[1, 0]], C64::new(0.0, 0.0));

        let a3 = annihilation(3).unwrap();
        assert_abs_diff_eq!(a3[[1, 2]].re, 2.0f64.sqrt(), epsilon = 1e-15);

        assert!(annihilation(1).is_err());
    }

    #[test]
    fn number_operator_from_ladder() {
        let n_f = 6;
        let a = annihilation(n_f).unwrap();
        let n = dagger(&a).dot(&a);
        for k in 0..n_f {
            assert_abs_diff_eq!(n[[k, k]].re, k as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn ladder_commutator_has_truncation_corner() {
        let n_f = 5;
        let a = annihilation(n_f).unwrap();
        let ad = dagger(&a);
        let comm = a.dot(&ad) - ad.dot(&a);
        for k in 0..n_f - 1 {
            assert_abs_diff_eq!(comm[[k, k]].re, 1.0, epsilon = 1e-14);
        }
        // the corner picks up -(n_f - 1) instead of +1
        assert_abs_diff_eq!(
            comm[[n_f - 1, n_f - 1]].re,
            -((n_f - 1) as f64),
            epsilon = 1e-14
        );
    }

    #[test]
    fn hilbert_space_index_round_trip() {
        let space = HilbertSpace::new(7).unwrap();
        for i in 0..4 {
            for n in 0..7 {
                let idx = space.index(i, n);
                assert_eq!(space.split(idx), (i, n));
            }
        }
        assert_eq!(space.total_dim(), 28);
        assert!(HilbertSpace::new(1).is_err());
    }

    #[test]
    fn linear_solve_identity() {
        let rhs = Array1::from(vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)]);
        let x = linear_solve(&identity(2), &rhs).unwrap();
        assert!(x
            .iter()
            .zip(rhs.iter())
            .all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn linear_solve_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let mut a = random_matrix(&mut rng, n);
        // make diagonally dominant
        for i in 0..n {
            a[[i, i]] += C64::new(n as f64, 0.0);
        }
        let rhs = Array1::from_shape_fn(n, |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let x = linear_solve(&a, &rhs).unwrap();
        let residual = &a.dot(&x) - &rhs;
        let rnorm = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(rnorm <= 1e-10 * bnorm);
    }

    #[test]
    fn linear_solve_zero_matrix_is_singular() {
        let a: CMatrix = Array2::zeros((3, 3));
        let rhs = Array1::from(vec![C64::new(1.0, 0.0); 3]);
        assert!(matches!(
            linear_solve(&a, &rhs),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn null_vector_explicit_kernel() {
        let mut a: CMatrix = Array2::zeros((2, 2));
        a[[0, 0]] = C64::new(1.0, 0.0);
        let v = null_vector(&a, 1e-10).unwrap();
        assert!(v[0].norm() < 1e-9);
        assert_abs_diff_eq!(v[1].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn null_vector_full_rank_error() {
        assert!(matches!(
            null_vector(&identity(3), 1e-10),
            Err(Error::FullRank { .. })
        ));
    }

    #[test]
    fn solve_round_trips_well_conditioned_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in [4usize, 9, 16] {
            let mut a = random_matrix(&mut rng, n);
            for i in 0..n {
                a[[i, i]] += C64::new(2.0 * n as f64, 0.0);
            }
            let x_true = Array1::from_shape_fn(n, |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let rhs = a.dot(&x_true);
            let x = linear_solve(&a, &rhs).unwrap();
            let err: f64 = x
                .iter()
                .zip(x_true.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * (1.0 + frobenius_norm(&a)));
        }
    }

    #[test]
    fn hermitian_eigenvalues_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 6;
        let g = random_matrix(&mut rng, n);
        let h = &g + &dagger(&g);
        let eigs = hermitian_eigenvalues(&h).unwrap();
        assert_eq!(eigs.len(), n);
        // trace is preserved
        let tr: f64 = h.diag().iter().map(|z| z.re).sum();
        let sum: f64 = eigs.iter().sum();
        assert_abs_diff_eq!(tr, sum, epsilon = 1e-10 * tr.abs().max(1.0));
        // Frobenius norm matches the eigenvalue 2-norm for Hermitian input
        let fro2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let eig2: f64 = eigs.iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(fro2, eig2, epsilon = 1e-8 * fro2.max(1.0));
    }

    #[test]
    fn hermiticity_checks() {
        let mut m: CMatrix = Array2::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 1.0);
        m[[1, 0]] = C64::new(1.0, -1.0);
        assert!(is_hermitian(&m));
        m[[1, 0]] = C64::new(1.0, 1.0);
        assert!(!is_hermitian(&m));
    }
}
