//! Dense decompositions with deterministic conventions.
//!
//! Everything downstream leans on two properties established here:
//!
//! * `thin_svd` and `sym_eig_desc` order their spectra descending and fix
//!   eigenvector/singular-vector signs so that repeated runs and
//!   basis-rotated inputs produce identical reduced coordinates.
//! * `graded_eigen` decomposes symmetric matrices of the two-scale form
//!   `[[B, r·c], [r·cᵀ, r²·g]]` without ever mixing the `r²` block into the
//!   O(1) block.  A dense solver applied to the assembled matrix loses the
//!   small eigenvalues once `r²·machine_eps` exceeds their magnitude, which
//!   happens around `r ≈ 1e8`; the lifted formulation used by the affine
//!   sensitivity path reaches `r ≈ 4e12` at its tightest accuracy setting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin singular value decomposition `M = U · diag(σ) · Vᵀ` truncated at the
/// numerical rank.
///
/// `u` is `n×r`, `singular_values` has length `r` (strictly positive,
/// descending), `v` is `d×r`.  Columns of `u` are sign-fixed: the
/// largest-magnitude entry of each column is positive (ties broken by lowest
/// row index), with `v` flipped to match, so the product `U·diag(σ)` is
/// invariant under right-rotation of `M`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    /// Numerical rank, i.e. the number of retained singular values.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Rows of the input expressed in the row-space basis: `U · diag(σ)`,
    /// an `n×r` matrix with uncorrelated columns.
    pub fn reduced_rows(&self) -> DMatrix<f64> {
        let mut reduced = self.u.clone();
        for (j, mut col) in reduced.column_iter_mut().enumerate() {
            let s = self.singular_values[j];
            for x in col.iter_mut() {
                *x *= s;
            }
        }
        reduced
    }
}

/// Thin SVD with singular values below `σ₁ · max(n, d) · machine_eps`
/// discarded as rank noise.  A zero matrix has no row space and errors.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (n, d) = m.shape();
    if n == 0 || d == 0 {
        return Err(Error::DimensionMismatch(format!(
            "thin_svd requires a nonempty matrix, got {n}x{d}"
        )));
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON * 8.0, 4096)
        .ok_or_else(|| Error::Numerical("SVD iteration failed to converge".into()))?;
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max <= 0.0 {
        return Err(Error::RankZero);
    }
    let cutoff = sigma_max * (n.max(d) as f64) * f64::EPSILON;

    // try_svd sorts descending; keep everything above the rank cutoff.
    let rank = sv.iter().take_while(|&&s| s > cutoff).count();
    if rank == 0 {
        return Err(Error::RankZero);
    }

    let u_full = svd.u.expect("u requested");
    let vt_full = svd.v_t.expect("v_t requested");
    let mut u = u_full.columns(0, rank).into_owned();
    let mut v = vt_full.rows(0, rank).transpose().into_owned();
    let singular_values = DVector::from_iterator(rank, sv.iter().take(rank).cloned());

    for j in 0..rank {
        if dominant_entry_is_negative(&u.column(j).into_owned()) {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }

    Ok(ThinSvd {
        u,
        singular_values,
        v,
    })
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending and eigenvector signs fixed (largest-magnitude entry positive,
/// ties broken by lowest index).
///
/// Input must be symmetric within `1e-10 · max|mᵢⱼ|`; anything worse is
/// rejected rather than silently symmetrized.
pub fn sym_eig_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig_desc requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let tol = 1e-10 * m.amax();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::InvalidParam(format!(
                    "sym_eig_desc requires a symmetric matrix; entries ({i},{j}) and \
                     ({j},{i}) differ by {}",
                    (m[(i, j)] - m[(j, i)]).abs()
                )));
            }
        }
    }
    // Symmetrize roundoff-level asymmetry so the solver sees an exactly
    // symmetric matrix.
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON * 8.0, 4096)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver failed to converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        if dominant_entry_is_negative(&col) {
            col.neg_mut();
        }
        vectors.set_column(j, &col);
    }
    Ok((values, vectors))
}

fn dominant_entry_is_negative(col: &DVector<f64>) -> bool {
    let mut best = 0usize;
    let mut best_abs = -1.0_f64;
    for (i, &x) in col.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    col[best] < 0.0
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `u`,
/// returned as the `d×(d−1)` trailing columns of the Householder reflection
/// that maps `u` onto `±e₁`.
pub fn householder_complement(u: &DVector<f64>) -> DMatrix<f64> {
    let d = u.len();
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut w = u.clone();
    // Reflect u onto -sign(u₀)·e₁; the choice keeps w away from cancellation.
    let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let norm_sq = w.norm_squared();
    let mut q = DMatrix::zeros(d, d.saturating_sub(1));
    if norm_sq == 0.0 {
        // u was the zero vector; caller guarantees unit input, but stay safe.
        for j in 1..d {
            q[(j, j - 1)] = 1.0;
        }
        return q;
    }
    // Column j of the reflection is e_{j+1} − 2 w w_{j+1} / ‖w‖².
    for j in 1..d {
        let scale = 2.0 * w[j] / norm_sq;
        for i in 0..d {
            q[(i, j - 1)] = -scale * w[i];
        }
        q[(j, j - 1)] += 1.0;
    }
    q
}

/// One eigenpair of the graded decomposition: the eigenvalue and its unit
/// eigenvector in the `(d+1)`-dimensional ambient space.  Last coordinates of
/// order `1/r` are stored at full relative precision.
pub type GradedPair = (f64, DVector<f64>);

/// Eigendecomposition of the symmetric `(d+1)×(d+1)` matrix
///
/// ```text
///     G = [ B     r·c  ]
///         [ r·cᵀ  r²·g ]
/// ```
///
/// given in factored form (`B` symmetric `d×d`, `c` length `d`, scalars `g`
/// and `r > 0`), returning all `d+1` eigenpairs sorted descending.
///
/// The decomposition never forms entries of mixed scale: the trailing
/// coordinate is split off into an exact 2×2 block on `span{ĉ, e_{d+1}}`,
/// whose eigenpairs either join the O(1) subproblem (when their eigenvalue is
/// comparable to `B`) or deflate as isolated pairs (when it is huge, where
/// the neglected coupling correction is bounded by `‖B‖²/|λ|`).  Accuracy is
/// therefore independent of `r`, while a dense solver on the assembled
/// matrix degrades once `r²` dwarfs `1/machine_eps`.
pub fn graded_eigen(
    b: &DMatrix<f64>,
    c: &DVector<f64>,
    g: f64,
    r: f64,
) -> Result<Vec<GradedPair>> {
    let d = b.nrows();
    if b.ncols() != d || c.len() != d {
        return Err(Error::DimensionMismatch(
            "graded_eigen: B must be d×d and c length d".into(),
        ));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!(
            "graded_eigen requires r > 0, got {r}"
        )));
    }

    let c_norm = c.norm();
    let mut pairs: Vec<GradedPair> = Vec::with_capacity(d + 1);

    if c_norm == 0.0 {
        // The trailing coordinate decouples exactly.
        let (vals, vecs) = sym_eig_desc(b)?;
        for j in 0..d {
            let mut v = DVector::zeros(d + 1);
            v.rows_mut(0, d).copy_from(&vecs.column(j));
            pairs.push((vals[j], v));
        }
        let mut e_last = DVector::zeros(d + 1);
        e_last[d] = 1.0;
        pairs.push((r * r * g, e_last));
        sort_pairs_desc(&mut pairs);
        return Ok(pairs);
    }

    let c_hat = c / c_norm;
    let q_perp = householder_complement(&c_hat); // d×(d−1), ⊥ ĉ
    let b_chat = b * &c_hat;
    let a = c_hat.dot(&b_chat);

    // Exact 2×2 block on span{(ĉ,0), e_{d+1}}: [[a, h], [h, e]] with
    // h = r·‖c‖ and e = r²·g, solved in closed form with the determinant
    // computed from the factored O(1) quantities.
    let (lam_hi, vec_hi, lam_lo, vec_lo) = sym2x2_graded(a, c_norm, g, r);

    let coupling = q_perp.tr_mul(&b_chat); // (d−1) vector: Q⊥ᵀ B ĉ
    let b_perp = {
        let bq = b * &q_perp;
        q_perp.tr_mul(&bq)
    };

    let scale = b.amax().max(a.abs()).max(coupling.amax_or_zero()) + f64::MIN_POSITIVE;
    let deflate_threshold = 1e8 * scale;

    // 2×2 eigenpairs with O(1) eigenvalues stay coupled to the ⊥ block; huge
    // ones deflate (dropping a Schur correction of order ‖B‖²/|λ| ≤ 1e-8·‖B‖).
    let mut kept: Vec<(f64, [f64; 2])> = Vec::new();
    for (lam, v2) in [(lam_hi, vec_hi), (lam_lo, vec_lo)] {
        if lam.abs() > deflate_threshold {
            pairs.push((lam, embed_pair(&c_hat, v2, d)));
        } else {
            kept.push((lam, v2));
        }
    }

    let p = d - 1 + kept.len();
    let mut small = DMatrix::zeros(p, p);
    small.view_mut((0, 0), (d - 1, d - 1)).copy_from(&b_perp);
    for (t, &(lam, v2)) in kept.iter().enumerate() {
        let col = d - 1 + t;
        small[(col, col)] = lam;
        // Coupling of the 2×2 eigenvector to the ⊥ block enters only through
        // its ĉ component; the e_{d+1} component is orthogonal to Q⊥ rows.
        for i in 0..d - 1 {
            let w = v2[0] * coupling[i];
            small[(i, col)] = w;
            small[(col, i)] = w;
        }
    }
    let (svals, svecs) = sym_eig_desc(&small)?;
    for j in 0..p {
        let y = svecs.column(j);
        let mut v = DVector::zeros(d + 1);
        for i in 0..d - 1 {
            let yi = y[i];
            if yi != 0.0 {
                for row in 0..d {
                    v[row] += yi * q_perp[(row, i)];
                }
            }
        }
        for (t, &(_, v2)) in kept.iter().enumerate() {
            let yc = y[d - 1 + t];
            if yc != 0.0 {
                for row in 0..d {
                    v[row] += yc * v2[0] * c_hat[row];
                }
                v[d] += yc * v2[1];
            }
        }
        pairs.push((svals[j], v));
    }

    sort_pairs_desc(&mut pairs);
    Ok(pairs)
}

/// Stable eigensolve of `[[a, h], [h, e]]` with `h = r·cn`, `e = r²·g` given
/// in factored form.  Returns `(λ₊, v₊, λ₋, v₋)` with unit eigenvectors in
/// `(ĉ, e_{d+1})` coordinates; `v₋` is the exact right-angle rotation of
/// `v₊`, so orthogonality never degrades near multiple eigenvalues.
fn sym2x2_graded(a: f64, cn: f64, g: f64, r: f64) -> (f64, [f64; 2], f64, [f64; 2]) {
    let h = r * cn;
    let e = r * r * g;
    let tau = a + e;
    let disc = (a - e).hypot(2.0 * h);
    // |λ_big| = max(|λ₊|, |λ₋|): the same-sign root avoids cancellation.
    let lam_big = if tau >= 0.0 {
        0.5 * (tau + disc)
    } else {
        0.5 * (tau - disc)
    };
    // det = a·e − h² = r²·(a·g − cn²): the factored form keeps the small
    // eigenvalue accurate to O(machine_eps) absolutely.
    let det = r * r * (a * g - cn * cn);
    let lam_other = if lam_big != 0.0 { det / lam_big } else { 0.0 };
    let (lam_hi, lam_lo) = if lam_big >= lam_other {
        (lam_big, lam_other)
    } else {
        (lam_other, lam_big)
    };

    // Eigenvector for λ₊ from whichever residual row is better conditioned.
    let r1 = [h, lam_hi - a];
    let r2 = [lam_hi - e, h];
    let n1 = r1[0].hypot(r1[1]);
    let n2 = r2[0].hypot(r2[1]);
    let v_hi = if n1 >= n2 && n1 > 0.0 {
        [r1[0] / n1, r1[1] / n1]
    } else if n2 > 0.0 {
        [r2[0] / n2, r2[1] / n2]
    } else {
        [1.0, 0.0] // matrix is a·I: any direction
    };
    let v_lo = [-v_hi[1], v_hi[0]];
    (lam_hi, v_hi, lam_lo, v_lo)
}

fn embed_pair(c_hat: &DVector<f64>, v2: [f64; 2], d: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d + 1);
    for row in 0..d {
        v[row] = v2[0] * c_hat[row];
    }
    v[d] = v2[1];
    v
}

fn sort_pairs_desc(pairs: &mut [GradedPair]) {
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("eigenvalues are finite"));
}

trait AmaxOrZero {
    fn amax_or_zero(&self) -> f64;
}

impl AmaxOrZero for DVector<f64> {
    fn amax_or_zero(&self) -> f64 {
        if self.len() == 0 {
            0.0
        } else {
            self.amax()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let m = random_matrix(rng, d, d);
        (&m + m.transpose()) * 0.5
    }

    // ==== thin_svd ====

    #[test]
    fn thin_svd_reconstructs_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 50, 10);
        let svd = thin_svd(&m).unwrap();
        assert_eq!(svd.rank(), 10, "generic 50x10 matrix has full rank");
        for j in 1..svd.rank() {
            assert!(
                svd.singular_values[j - 1] >= svd.singular_values[j],
                "singular values must descend"
            );
        }
        let recomposed =
            &svd.u * DMatrix::from_diagonal(&svd.singular_values) * svd.v.transpose();
        assert_relative_eq!(recomposed, m, epsilon = 1e-9);

        // Orthonormal factors.
        let utu = svd.u.tr_mul(&svd.u);
        let vtv = svd.v.tr_mul(&svd.v);
        assert_relative_eq!(utu, DMatrix::identity(10, 10), epsilon = 1e-10);
        assert_relative_eq!(vtv, DMatrix::identity(10, 10), epsilon = 1e-10);
    }

    #[test]
    fn thin_svd_detects_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let svd = thin_svd(&m).unwrap();
        assert_eq!(svd.rank(), 1, "rows (1,2) and (2,4) are parallel");
    }

    #[test]
    fn thin_svd_rejects_zero_matrix() {
        let m = DMatrix::zeros(3, 2);
        assert!(matches!(thin_svd(&m), Err(Error::RankZero)));
    }

    #[test]
    fn reduced_rows_preserve_pairwise_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_matrix(&mut rng, 12, 5);
        let svd = thin_svd(&m).unwrap();
        let red = svd.reduced_rows();
        let gram_full = &m * m.transpose();
        let gram_red = &red * red.transpose();
        assert_relative_eq!(gram_red, gram_full, epsilon = 1e-9);
    }

    #[test]
    fn thin_svd_reduced_rows_invariant_under_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 15, 4);
        // Random rotation via QR of a Gaussian matrix.
        let q = random_matrix(&mut rng, 4, 4).qr().q();
        let rotated = &m * &q;
        let a = thin_svd(&m).unwrap().reduced_rows();
        let b = thin_svd(&rotated).unwrap().reduced_rows();
        assert_relative_eq!(a, b, epsilon = 1e-8);
    }

    // ==== sym_eig_desc ====

    #[test]
    fn sym_eig_desc_rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(sym_eig_desc(&m).is_err());
    }

    #[test]
    fn sym_eig_desc_matches_recomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_symmetric(&mut rng, 8);
        let (vals, vecs) = sym_eig_desc(&m).unwrap();
        for j in 1..8 {
            assert!(vals[j - 1] >= vals[j], "eigenvalues must descend");
        }
        let recomposed = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!(recomposed, m, epsilon = 1e-9);
        for j in 0..8 {
            let col = vecs.column(j).into_owned();
            assert!(!dominant_entry_is_negative(&col), "sign convention");
        }
    }

    // ==== householder_complement ====

    #[test]
    fn householder_complement_is_orthonormal_and_orthogonal_to_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 1..6 {
            let mut u: DVector<f64> = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            if u.norm() == 0.0 {
                u[0] = 1.0;
            }
            u /= u.norm();
            let q = householder_complement(&u);
            assert_eq!(q.shape(), (d, d - 1));
            if d > 1 {
                assert_relative_eq!(
                    q.tr_mul(&q),
                    DMatrix::identity(d - 1, d - 1),
                    epsilon = 1e-12
                );
                let overlap = q.tr_mul(&u);
                assert!(overlap.amax() < 1e-12, "columns must be orthogonal to u");
            }
        }
    }

    // ==== graded_eigen ====

    fn assemble(b: &DMatrix<f64>, c: &DVector<f64>, g: f64, r: f64) -> DMatrix<f64> {
        let d = b.nrows();
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(b);
        for i in 0..d {
            m[(i, d)] = r * c[i];
            m[(d, i)] = r * c[i];
        }
        m[(d, d)] = r * r * g;
        m
    }

    #[test]
    fn graded_eigen_matches_dense_at_moderate_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..40 {
            let d = rng.random_range(1..6);
            let b = random_symmetric(&mut rng, d);
            let c = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let g: f64 = rng.random_range(-1.0..1.0);
            let r = [1.0, 7.5, 120.0][trial % 3];
            let pairs = graded_eigen(&b, &c, g, r).unwrap();
            let dense = assemble(&b, &c, g, r);
            let (dvals, _) = sym_eig_desc(&dense).unwrap();
            let scale = dense.amax();
            for j in 0..=d {
                assert!(
                    (pairs[j].0 - dvals[j]).abs() <= 1e-10 * scale.max(1.0),
                    "trial {trial}: eigenvalue {j}: {} vs dense {}",
                    pairs[j].0,
                    dvals[j]
                );
                // Eigenpair residual ‖Mv − λv‖.
                let v = &pairs[j].1;
                let res = (&dense * v - v * pairs[j].0).norm();
                assert!(
                    res <= 1e-8 * scale.max(1.0),
                    "trial {trial}: residual {res} too large for eigenvalue {}",
                    pairs[j].0
                );
            }
            // Orthonormality of the returned system.
            for i in 0..=d {
                for j in 0..=d {
                    let dot = pairs[i].1.dot(&pairs[j].1);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dot - want).abs() < 1e-9,
                        "trial {trial}: vectors {i},{j} not orthonormal: {dot}"
                    );
                }
            }
        }
    }

    #[test]
    fn graded_eigen_keeps_small_block_accurate_at_huge_scale() {
        // With the trailing coordinate at r ≈ 4e12, the small eigenvalues of
        // the deflated block are B − c·cᵀ/g up to O(1/r²); a dense solver
        // would bury them under r²·machine_eps ≈ 3e9 of rounding noise.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let r = 4.0e12;
        for trial in 0..25 {
            let d = rng.random_range(1..6);
            let b = random_symmetric(&mut rng, d);
            let c = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let g = {
                // keep |g| away from zero so the Schur form B − c·cᵀ/g is the
                // exact reference for the small block
                let raw: f64 = rng.random_range(0.2..1.0);
                raw * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
            };
            let pairs = graded_eigen(&b, &c, g, r).unwrap();

            let schur = &b - (&c * c.transpose()) / g;
            let (svals, _) = sym_eig_desc(&schur).unwrap();

            let mut small: Vec<f64> = pairs
                .iter()
                .map(|p| p.0)
                .filter(|l| l.abs() < 1e11)
                .collect();
            small.sort_by(|x, y| y.partial_cmp(x).unwrap());
            assert_eq!(small.len(), d, "exactly one eigenvalue is huge");
            for j in 0..d {
                assert!(
                    (small[j] - svals[j]).abs() < 1e-9 * (1.0 + svals.amax()),
                    "trial {trial}: small eigenvalue {j}: got {}, want {}",
                    small[j],
                    svals[j]
                );
            }

            let huge = pairs.iter().map(|p| p.0).find(|l| l.abs() >= 1e11).unwrap();
            assert_relative_eq!(huge, r * r * g, max_relative = 1e-6);
        }
    }

    #[test]
    fn graded_eigen_handles_sign_crossing_corner() {
        // g near zero makes both 2×2 eigenvalues huge (±r·‖c‖); the ⊥ block
        // must then decouple cleanly.
        let b = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.2]);
        let c = DVector::from_row_slice(&[0.6, 0.8]);
        let r = 1.0e10;
        let pairs = graded_eigen(&b, &c, 0.0, r).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_relative_eq!(pairs[0].0, r, max_relative = 1e-9); // +r·‖c‖, ‖c‖=1
        assert_relative_eq!(pairs[2].0, -r, max_relative = 1e-9);
        // Middle eigenvalue: B restricted to c⊥; c⊥ direction is (-0.8, 0.6).
        let t = DVector::from_row_slice(&[-0.8, 0.6]);
        let want = t.dot(&(&b * &t));
        assert_relative_eq!(pairs[1].0, want, epsilon = 1e-9);
    }

    #[test]
    fn graded_eigen_decouples_zero_cross_term() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let c = DVector::zeros(2);
        let pairs = graded_eigen(&b, &c, 3.0, 10.0).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        assert_eq!(vals, vec![300.0, 2.0, -1.0]);
    }
}
