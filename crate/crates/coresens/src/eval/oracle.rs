//! Brute-force reference maximizers and checkers.
//!
//! Everything here approaches the defining suprema directly (grids, random
//! multistart, local refinement) instead of going through the iterative
//! solvers, so the fast paths can be validated against values that were
//! obtained by an unrelated route. Oracle values approach each supremum from
//! below: they never exceed the true sensitivity.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coreset::derive_seed;
use crate::error::{Error, Result};
use crate::eval::complete_basis;
use crate::points::{ScaledMatrix, WeightedPointSet};
use crate::sensitivity::lift_points_with_power;

/// Root of the oracle-internal RNG streams; fixed so results are reproducible.
const ORACLE_SEED: u64 = 0x0AC1_E5EE_D001;

/// Modified Gram-Schmidt with one re-orthogonalization pass; `None` when the
/// columns are numerically dependent.
fn orthonormalize(mut m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    for j in 0..m.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let d = m.column(i).dot(&m.column(j));
                let c = m.column(i) * d;
                m.column_mut(j).sub_assign(&c);
            }
        }
        let norm = m.column(j).norm();
        if norm < 1e-10 {
            return None;
        }
        m.column_mut(j).scale_mut(1.0 / norm);
    }
    Some(m)
}

use std::ops::SubAssign;

/// Distance from `x` to the affine subspace `offset + span(basis)`, computed
/// on the explicit residual (twice projected) so large components cancel in
/// the vector, not in a difference of squared norms.
fn dist_to_affine(x: &DVector<f64>, basis: &DMatrix<f64>, offset: Option<&DVector<f64>>) -> f64 {
    let mut res = match offset {
        Some(o) => x - o,
        None => x.clone(),
    };
    for _ in 0..2 {
        if basis.ncols() > 0 {
            let proj = basis.tr_mul(&res);
            res -= basis * proj;
        }
    }
    res.norm()
}

/// Maximizes `f` over the unit sphere in `R^r`: dense angular grid for
/// `r ≤ 2`, random sampling plus shrinking-step hill climbs otherwise.
/// `f` must be even (`f(z) = f(−z)`), which every ratio here is.
fn sphere_max(f: &dyn Fn(&DVector<f64>) -> f64, r: usize, resolution: usize, seed: u64) -> (f64, DVector<f64>) {
    assert!(r >= 1);
    if r == 1 {
        let z = DVector::from_element(1, 1.0);
        return (f(&z), z);
    }
    if r == 2 {
        let eval = |theta: f64| {
            let z = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
            f(&z)
        };
        let steps = resolution.max(8);
        let width = std::f64::consts::PI / steps as f64;
        let mut best_theta = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..steps {
            let theta = i as f64 * width;
            let v = eval(theta);
            if v > best {
                best = v;
                best_theta = theta;
            }
        }
        let (theta, value) = golden_max(&eval, best_theta - width, best_theta + width);
        let z = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
        return (value.max(best), z);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| {
        DVector::from_fn(r, |_, _| {
            // Box-Muller keeps the dependency surface small.
            let u: f64 = rng.random::<f64>().max(1e-12);
            let v: f64 = rng.random();
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_z = DVector::zeros(r);
    let samples = (resolution * resolution).clamp(1000, 200_000);
    for _ in 0..samples {
        let mut z = gauss(&mut rng);
        let n = z.norm();
        if n < 1e-12 {
            continue;
        }
        z /= n;
        let v = f(&z);
        if v > best {
            best = v;
            best_z = z;
        }
    }
    // Shrinking-step stochastic ascent around the best sample.
    let mut sigma = 0.3_f64;
    while sigma > 1e-9 {
        for _ in 0..60 {
            let mut z = &best_z + gauss(&mut rng) * sigma;
            let n = z.norm();
            if n < 1e-12 {
                continue;
            }
            z /= n;
            let v = f(&z);
            if v > best {
                best = v;
                best_z = z;
            }
        }
        sigma *= 0.6;
    }
    (best, best_z)
}

/// Golden-section maximization of a smooth `g` on `[lo, hi]`.
fn golden_max(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..90 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over orthonormal `r×m` frames by random starts (QR of
/// Gaussian matrices plus all coordinate-axis frames) refined with
/// perturb-and-reorthonormalize hill climbs.
fn stiefel_max(
    f: &dyn Fn(&DMatrix<f64>) -> f64,
    r: usize,
    m: usize,
    resolution: usize,
    seed: u64,
) -> (f64, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss_mat = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(r, m, |_, _| {
            let u: f64 = rng.random::<f64>().max(1e-12);
            let v: f64 = rng.random();
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
    };
    let mut candidates: Vec<(f64, DMatrix<f64>)> = Vec::new();
    let push = |value: f64, frame: DMatrix<f64>, candidates: &mut Vec<(f64, DMatrix<f64>)>| {
        candidates.push((value, frame));
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        candidates.truncate(8);
    };
    // Coordinate-axis frames seed the obvious basins.
    let axes: Vec<usize> = (0..r).collect();
    let mut choose = vec![0usize; m];
    fn axis_frames(axes: &[usize], m: usize, start: usize, choose: &mut Vec<usize>, depth: usize, out: &mut Vec<Vec<usize>>) {
        if depth == m {
            out.push(choose.clone());
            return;
        }
        for i in start..axes.len() {
            choose[depth] = axes[i];
            axis_frames(axes, m, i + 1, choose, depth + 1, out);
        }
    }
    let mut combos = Vec::new();
    axis_frames(&axes, m, 0, &mut choose, 0, &mut combos);
    for combo in combos {
        let mut frame = DMatrix::zeros(r, m);
        for (j, &i) in combo.iter().enumerate() {
            frame[(i, j)] = 1.0;
        }
        push(f(&frame), frame, &mut candidates);
    }
    let samples = (resolution * resolution).clamp(1000, 100_000);
    for _ in 0..samples {
        if let Some(q) = orthonormalize(gauss_mat(&mut rng)) {
            push(f(&q), q, &mut candidates);
        }
    }
    let mut best = candidates[0].clone();
    for (value, frame) in candidates {
        let mut cur = (value, frame);
        let mut sigma = 0.3_f64;
        while sigma > 1e-9 {
            for _ in 0..40 {
                let perturbed = &cur.1 + gauss_mat(&mut rng) * sigma;
                if let Some(q) = orthonormalize(perturbed) {
                    let v = f(&q);
                    if v > cur.0 {
                        cur = (v, q);
                    }
                }
            }
            sigma *= 0.6;
        }
        if cur.0 > best.0 {
            best = cur;
        }
    }
    best
}

/// Brute-force lower bound on the non-affine sensitivity of row `index`:
/// maximizes `‖𝐩Y‖²/‖𝐏Y‖²_F` over a dense family of orthonormal complement
/// frames. Returns the value and an achieving ambient frame of `d−k`
/// columns. Requires reduced dimension ≤ 4.
pub fn oracle_nonaffine_sensitivity(
    pset: &WeightedPointSet,
    index: usize,
    k: usize,
    resolution: usize,
) -> Result<(f64, DMatrix<f64>)> {
    let d = pset.dim();
    let n = pset.len();
    if index >= n {
        return Err(Error::InvalidParam(format!("row {index} out of range for {n} rows")));
    }
    if k >= d {
        return Err(Error::InvalidParam(format!(
            "query dimension k = {k} must be below the ambient dimension {d}"
        )));
    }
    let sm = ScaledMatrix::build(pset)?;
    let r = sm.rank();
    if r > 4 {
        return Err(Error::InvalidParam(format!(
            "grid oracle supports reduced dimension ≤ 4, got rank {r}"
        )));
    }
    let zero_row = pset.weight(index) == 0.0 || pset.point(index).iter().all(|&x| x == 0.0);
    if zero_row {
        return Ok((0.0, complete_basis(&DMatrix::zeros(d, 0), d - k)));
    }

    let reduced = sm.reduced_rows();
    let a: DVector<f64> = reduced.row(index).transpose();
    let g = sm.squared_singular_values();
    let g_total: f64 = g.iter().sum();
    let m_eff = if k >= r { 1 } else { r - k };
    let seed = derive_seed(ORACLE_SEED, index as u64);

    let (value, frame_red): (f64, DMatrix<f64>) = if m_eff == r {
        // Every full frame spans the whole row space: the ratio is constant.
        (a.norm_squared() / g_total, DMatrix::identity(r, r))
    } else if m_eff == 1 {
        let f = |z: &DVector<f64>| {
            let num = a.dot(z).powi(2);
            let den: f64 = (0..r).map(|i| g[i] * z[i] * z[i]).sum();
            if den <= 0.0 {
                0.0
            } else {
                num / den
            }
        };
        let (v, z) = sphere_max(&f, r, resolution, seed);
        (v, DMatrix::from_column_slice(r, 1, z.as_slice()))
    } else if m_eff == r - 1 {
        // Frames spanning u⊥ are parameterized by the left-out direction u.
        let a_sq = a.norm_squared();
        let f = |u: &DVector<f64>| {
            let num = a_sq - a.dot(u).powi(2);
            let den = g_total - (0..r).map(|i| g[i] * u[i] * u[i]).sum::<f64>();
            if den <= 1e-300 {
                0.0
            } else {
                (num / den).min(1.0)
            }
        };
        let (v, u) = sphere_max(&f, r, resolution, seed);
        (v, crate::linalg::householder_complement(&u))
    } else {
        // Only (r, m_eff) = (4, 2) remains below reduced dimension 5.
        let f = |y: &DMatrix<f64>| {
            let num = (a.transpose() * y).norm_squared();
            let mut den = 0.0;
            for j in 0..y.ncols() {
                for i in 0..r {
                    den += g[i] * y[(i, j)] * y[(i, j)];
                }
            }
            if den <= 0.0 {
                0.0
            } else {
                num / den
            }
        };
        stiefel_max(&f, r, m_eff, resolution, seed)
    };

    // Ambient frame: map the reduced frame through the row-space basis and
    // pad with directions orthogonal to the row space, which contribute
    // nothing to either norm.
    let basis = sm.row_space_basis();
    let full = complete_basis(basis, d);
    let mut cols: Vec<DVector<f64>> = (basis * &frame_red).column_iter().map(|c| c.into_owned()).collect();
    let mut extra = r;
    while cols.len() < d - k {
        cols.push(full.column(extra).into_owned());
        extra += 1;
    }
    Ok((value.min(1.0), DMatrix::from_columns(&cols)))
}

/// Brute-force lower bound on the affine `k = 0` (1-mean) sensitivity of row
/// `index`: maximizes `w(p)‖p−c‖²/Σ_q w(q)‖q−c‖²` over centers `c` by
/// gradient ascent from every data point, the mean, and `restarts` random
/// starts.
pub fn oracle_affine_sensitivity(
    pset: &WeightedPointSet,
    index: usize,
    k: usize,
    restarts: usize,
) -> Result<f64> {
    if k != 0 {
        return Err(Error::InvalidParam(format!(
            "the center oracle covers k = 0 only, got k = {k}"
        )));
    }
    let n = pset.len();
    if index >= n {
        return Err(Error::InvalidParam(format!("row {index} out of range for {n} rows")));
    }
    let w_p = pset.weight(index);
    if w_p == 0.0 {
        return Ok(0.0);
    }
    let d = pset.dim();
    let p: DVector<f64> = pset.point(index).transpose();
    let mu: DVector<f64> = pset.weighted_mean().transpose();
    let w_total = pset.total_weight();

    let value_at = |c: &DVector<f64>| -> Option<f64> {
        let mut den = 0.0;
        for q in 0..n {
            let diff: DVector<f64> = pset.point(q).transpose() - c;
            den += pset.weight(q) * diff.norm_squared();
        }
        if den <= 1e-300 {
            return None;
        }
        Some(w_p * (&p - c).norm_squared() / den)
    };
    let gradient = |c: &DVector<f64>, f: f64| -> DVector<f64> {
        let mut den = 0.0;
        for q in 0..n {
            let diff: DVector<f64> = pset.point(q).transpose() - c;
            den += pset.weight(q) * diff.norm_squared();
        }
        ((c - &p) * w_p - (c - &mu) * (f * w_total)) * (2.0 / den)
    };

    let radius = (0..n)
        .map(|q| (pset.point(q).transpose() - &mu).norm())
        .fold(0.0_f64, f64::max)
        .max(1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ORACLE_SEED + 1, index as u64));
    let mut starts: Vec<DVector<f64>> = (0..n).map(|q| pset.point(q).transpose()).collect();
    starts.push(mu.clone());
    for _ in 0..restarts {
        let dir = DVector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let stretch = 0.2 + 4.0 * rng.random::<f64>();
        starts.push(&mu + dir * (radius * stretch));
    }

    let mut best = 0.0_f64;
    for start in starts {
        let mut c = start;
        let mut f = match value_at(&c) {
            Some(v) => v,
            None => continue,
        };
        let mut step = radius;
        for _ in 0..600 {
            let g = gradient(&c, f);
            let gnorm = g.norm();
            if gnorm * radius < 1e-17 * f.max(1e-300) {
                break;
            }
            let mut advanced = false;
            let mut t = step;
            while t > 1e-18 * radius {
                let cand = &c + &g * (t / gnorm);
                if let Some(v) = value_at(&cand) {
                    if v > f {
                        c = cand;
                        f = v;
                        step = t * 1.5;
                        advanced = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        best = best.max(f);
    }
    Ok(best.min(1.0))
}

/// Closed-form 1-mean sensitivity `w/W + w‖p−μ‖²/Σ_q w(q)‖q−μ‖²` (weight
/// share when the spread vanishes).
pub fn one_mean_sensitivity_exact(pset: &WeightedPointSet, index: usize) -> Result<f64> {
    let n = pset.len();
    if index >= n {
        return Err(Error::InvalidParam(format!("row {index} out of range for {n} rows")));
    }
    let w = pset.weight(index);
    if w == 0.0 {
        return Ok(0.0);
    }
    let w_total = pset.total_weight();
    let mu = pset.weighted_mean();
    let spread: f64 = (0..n)
        .map(|q| pset.weight(q) * (pset.point(q) - &mu).norm_squared())
        .sum();
    if spread <= 0.0 {
        return Ok(w / w_total);
    }
    Ok((w / w_total + w * (pset.point(index) - &mu).norm_squared() / spread).min(1.0))
}

/// Outcome of the lift inequality check: counts per regime plus the worst
/// observed margin ratios (a ratio above 1 is a violation).
#[derive(Debug, Clone, Serialize)]
pub struct LiftCheckReport {
    pub z: u32,
    pub eps: f64,
    /// Lift coordinate the instance was built with.
    pub r: f64,
    pub trials: usize,
    pub shift_checks: usize,
    pub shift_violations: usize,
    pub sandwich_checks: usize,
    pub sandwich_violations: usize,
    /// Worst `|D_z(0,S) − D_z(p,S)| / (2ε·D_z(0,S))` in the far regime.
    pub max_shift_plain: f64,
    /// Worst `|D_z(r·e,S′) − D_z(p′,S′)| / ((2^z+1)·ε·D_z(r·e,S′))`.
    pub max_shift_lifted: f64,
    /// Worst `(D_z(p′,S′) − D_z(p,S))` relative to the regime scale `εr`
    /// (zero or below means the lower sandwich bound held).
    pub max_sandwich_lower: f64,
    /// Worst `D_z(p,S) / ((1+C_z·ε)·D_z(p′,S′))` in the near regime.
    pub max_sandwich_upper: f64,
}

impl LiftCheckReport {
    pub fn is_pass(&self) -> bool {
        self.shift_checks > 0
            && self.sandwich_checks > 0
            && self.shift_violations == 0
            && self.sandwich_violations == 0
    }
}

/// Stress-tests the lift inequalities on random affine subspaces.
///
/// Per trial one subspace is drawn in the far regime (`D_z(0,S) ≥ εr`) and
/// one in the near regime, and every point of `pset` is checked: the far
/// regime must keep both the plain and lifted distances within the relative
/// shift bounds, the near regime must satisfy the two-sided sandwich
/// `D_z(p′,S′) ≤ D_z(p,S) ≤ (1+C_z·ε)·D_z(p′,S′)` with `C₁ = 3`, `C₂ = 12`.
pub fn check_lift_inequalities(
    pset: &WeightedPointSet,
    eps: f64,
    z: u32,
    trials: usize,
    seed: u64,
) -> Result<LiftCheckReport> {
    if trials == 0 {
        return Err(Error::InvalidParam("at least one trial required".into()));
    }
    let (lifted, cfg) = lift_points_with_power(pset, eps, z)?;
    let d = pset.dim();
    let r = cfg.r;
    let zf = z as i32;
    let sandwich_factor = 1.0 + eps * if z == 1 { 3.0 } else { 12.0 };
    let lifted_factor = (2f64.powi(zf) + 1.0) * eps;
    let abs_slack = 1e-14 * r.powi(zf);
    let rel_slack = 1e-9;

    let mut report = LiftCheckReport {
        z,
        eps,
        r,
        trials,
        shift_checks: 0,
        shift_violations: 0,
        sandwich_checks: 0,
        sandwich_violations: 0,
        max_shift_plain: 0.0,
        max_shift_lifted: 0.0,
        max_sandwich_lower: f64::NEG_INFINITY,
        max_sandwich_upper: 0.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let re: DVector<f64> = {
        let mut v = DVector::zeros(d + 1);
        v[d] = r;
        v
    };

    for _ in 0..trials {
        for far_regime in [true, false] {
            // Random span, a unit normal off it, and an offset whose
            // distance to the origin lands in the requested regime.
            let j = rng.random_range(0..d);
            let (span, normal) = loop {
                let raw = DMatrix::from_fn(d, j + 1, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                if let Some(q) = orthonormalize(raw) {
                    let span = q.columns(0, j).into_owned();
                    let normal = q.column(j).into_owned();
                    break (span, normal);
                }
            };
            let u: f64 = rng.random();
            let target = if far_regime {
                eps * r * (1.0 + u)
            } else {
                eps * r * u
            };
            let rho = target.powf(1.0 / z as f64);
            let offset = &normal * rho;

            // Lifted subspace: the span embedded flat plus the direction of
            // the lifted offset.
            let mut lifted_basis = DMatrix::zeros(d + 1, j + 1);
            lifted_basis.view_mut((0, 0), (d, j)).copy_from(&span);
            let lift_dir_norm = (rho * rho + r * r).sqrt();
            for i in 0..d {
                lifted_basis[(i, j)] = offset[i] / lift_dir_norm;
            }
            lifted_basis[(d, j)] = r / lift_dir_norm;

            let d0 = rho.powi(zf);
            let dre = dist_to_affine(&re, &lifted_basis, None).powi(zf);
            let in_far = d0 >= eps * r;

            for i in 0..pset.len() {
                let p: DVector<f64> = pset.point(i).transpose();
                let p_lift: DVector<f64> = lifted.point(i).transpose();
                let dp = dist_to_affine(&p, &span, Some(&offset)).powi(zf);
                let dp_lift = dist_to_affine(&p_lift, &lifted_basis, None).powi(zf);

                if in_far {
                    report.shift_checks += 1;
                    let plain = (d0 - dp).abs();
                    let lifted_shift = (dre - dp_lift).abs();
                    report.max_shift_plain = report.max_shift_plain.max(plain / (2.0 * eps * d0));
                    report.max_shift_lifted = report
                        .max_shift_lifted
                        .max(lifted_shift / (lifted_factor * dre));
                    let plain_ok = plain <= 2.0 * eps * d0 * (1.0 + rel_slack) + abs_slack;
                    let lifted_ok =
                        lifted_shift <= lifted_factor * dre * (1.0 + rel_slack) + abs_slack;
                    if !plain_ok || !lifted_ok {
                        report.shift_violations += 1;
                    }
                } else {
                    report.sandwich_checks += 1;
                    report.max_sandwich_lower =
                        report.max_sandwich_lower.max((dp_lift - dp) / (eps * r));
                    if dp_lift > 0.0 {
                        report.max_sandwich_upper = report
                            .max_sandwich_upper
                            .max(dp / (sandwich_factor * dp_lift));
                    }
                    let lower_ok = dp_lift <= dp * (1.0 + rel_slack) + abs_slack;
                    let upper_ok = dp <= sandwich_factor * dp_lift * (1.0 + rel_slack) + abs_slack;
                    if !lower_ok || !upper_ok {
                        report.sandwich_violations += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}
