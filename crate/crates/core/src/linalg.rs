//! Small dense least-squares helpers over `nalgebra`.
//!
//! Regressions are solved through a Householder QR of the column-equilibrated
//! design, never through the normal equations.

use nalgebra::{DMatrix, DVector};

/// Smallest admissible ratio of extreme singular values of the
/// column-equilibrated design before it is declared rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient;

/// Builds an `n × k` design matrix from its columns.
pub fn design_from_columns(cols: &[&[f64]]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        debug_assert_eq!(c.len(), n);
        m.column_mut(j).copy_from_slice(c);
    }
    m
}

struct Factor {
    qr: nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    scale: Vec<f64>,
}

fn factor(x: &DMatrix<f64>) -> Result<Factor, RankDeficient> {
    let (n, k) = x.shape();
    if n < k || k == 0 {
        return Err(RankDeficient);
    }
    let mut xs = x.clone();
    let mut scale = Vec::with_capacity(k);
    for mut c in xs.column_iter_mut() {
        let norm = c.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(RankDeficient);
        }
        c /= norm;
        scale.push(norm);
    }
    let qr = xs.qr();
    let sv = qr.r().singular_values();
    let (lo, hi) = min_max(sv.as_slice());
    if !(lo > RANK_TOL * hi) {
        return Err(RankDeficient);
    }
    Ok(Factor { qr, scale })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)))
}

/// True when the design has full column rank at [`RANK_TOL`].
pub fn has_full_column_rank(x: &DMatrix<f64>) -> bool {
    factor(x).is_ok()
}

/// Ordinary least squares `argmin ‖y − Xb‖²`.
pub fn least_squares(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>, RankDeficient> {
    let f = factor(x)?;
    let k = x.ncols();
    let mut rhs = DVector::from_column_slice(y);
    f.qr.q_tr_mul(&mut rhs);
    let r = f.qr.r();
    let head = rhs.rows(0, k).into_owned();
    let b = r.solve_upper_triangular(&head).ok_or(RankDeficient)?;
    Ok(b.iter().zip(&f.scale).map(|(bi, s)| bi / s).collect())
}

/// Condition number of the sample second-moment matrix `XᵀX / n`, i.e. the
/// squared ratio of the extreme singular values of `X`. Returns
/// `f64::INFINITY` when `X` is rank-deficient at [`RANK_TOL`].
pub fn gram_condition_number(x: &DMatrix<f64>) -> f64 {
    match factor(x) {
        Err(_) => f64::INFINITY,
        Ok(f) => {
            // R of the unscaled design is R_s · diag(scale).
            let mut r = f.qr.r();
            for (j, s) in f.scale.iter().enumerate() {
                r.column_mut(j).scale_mut(*s);
            }
            let sv = r.singular_values();
            let (lo, hi) = min_max(sv.as_slice());
            if lo > 0.0 {
                (hi / lo).powi(2)
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Condition number of a symmetric matrix from its singular values.
pub fn symmetric_condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let (lo, hi) = min_max(sv.as_slice());
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}
