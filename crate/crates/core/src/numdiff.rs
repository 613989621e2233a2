//! Central finite differences.

/// Per-coordinate steps `δⱼ = max(1e-5, 1e-5·|xⱼ|)`.
pub fn default_steps(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| (1e-5 * v.abs()).max(1e-5)).collect()
}

/// Jacobian `J[i][j] = ∂fᵢ/∂xⱼ` by central differences with the given steps.
pub fn central_difference_jacobian<F, E>(f: F, x: &[f64], steps: &[f64]) -> Result<Vec<Vec<f64>>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    assert_eq!(x.len(), steps.len(), "one step per coordinate");
    let mut cols = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for (j, &d) in steps.iter().enumerate() {
        xp[j] = x[j] + d;
        let up = f(&xp)?;
        xp[j] = x[j] - d;
        let down = f(&xp)?;
        xp[j] = x[j];
        cols.push(up.iter().zip(&down).map(|(u, l)| (u - l) / (2.0 * d)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, Vec::len);
    Ok((0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}
