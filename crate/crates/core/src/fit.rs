//! Least-squares fit of counts against the Manin-type model `c·B(log B)^{b-1}`.

use std::fmt;

use crate::densities::ConstantReport;

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub c: f64,
    pub c_err: f64,
    /// Coefficient of the secondary term `B(log B)^{b-2}` when `b >= 2`.
    pub secondary: Option<f64>,
    pub points: usize,
    /// Largest `|N - fit| / N` over the fitted checkpoints.
    pub max_rel_residual: f64,
    pub warnings: Vec<String>,
}

/// Unweighted least squares of `count` against `B(log B)^{b-1}`, with a secondary
/// `B(log B)^{b-2}` column when `b >= 2`. Only checkpoints with `B >= min_bound` (and `B > 1`)
/// enter the fit.
pub fn fit_constant(data: &[(f64, f64)], b: usize, min_bound: f64) -> FitResult {
    let rows: Vec<(Vec<f64>, f64)> = data
        .iter()
        .filter(|(bb, _)| *bb > 1.0 && *bb >= min_bound)
        .map(|&(bb, n)| {
            let l = bb.ln();
            let mut x = vec![bb * l.powi(b as i32 - 1)];
            if b >= 2 {
                x.push(bb * l.powi(b as i32 - 2));
            }
            (x, n)
        })
        .collect();
    let k = if b >= 2 { 2 } else { 1 };
    let mut warnings = Vec::new();
    if rows.len() < k {
        warnings.push(format!("{} usable checkpoints for {k} parameters", rows.len()));
        return FitResult { c: f64::NAN, c_err: f64::NAN, secondary: None, points: rows.len(), max_rel_residual: f64::NAN, warnings };
    }
    // scale columns to unit norm before forming the normal equations
    let scale: Vec<f64> = (0..k).map(|j| rows.iter().map(|(x, _)| x[j] * x[j]).sum::<f64>().sqrt()).collect();
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (x, y) in &rows {
        for i in 0..k {
            aty[i] += x[i] / scale[i] * y;
            for j in 0..k {
                ata[i][j] += x[i] / scale[i] * x[j] / scale[j];
            }
        }
    }
    let (beta, inv) = if k == 1 {
        (vec![aty[0] / ata[0][0]], vec![vec![1.0 / ata[0][0]]])
    } else {
        let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
        let inv = vec![vec![ata[1][1] / det, -ata[0][1] / det], vec![-ata[1][0] / det, ata[0][0] / det]];
        let cond = (inv[0][0] + inv[1][1]) * (ata[0][0] + ata[1][1]);
        if !cond.is_finite() || cond > 1e8 {
            warnings.push(format!("ill-conditioned fit (condition estimate {cond:.2e})"));
        }
        let beta = (0..2).map(|i| inv[i][0] * aty[0] + inv[i][1] * aty[1]).collect();
        (beta, inv)
    };
    let pred = |x: &[f64]| (0..k).map(|j| beta[j] * x[j] / scale[j]).sum::<f64>();
    let resid: f64 = rows.iter().map(|(x, y)| (y - pred(x)).powi(2)).sum();
    let max_rel_residual =
        rows.iter().filter(|(_, y)| *y > 0.0).map(|(x, y)| (y - pred(x)).abs() / y).fold(0.0, f64::max);
    let dof = rows.len().saturating_sub(k);
    let sigma2 = if dof > 0 { resid / dof as f64 } else { f64::NAN };
    if dof == 0 {
        warnings.push("no residual degrees of freedom; standard error undefined".into());
    }
    let c = beta[0] / scale[0];
    let c_err = (sigma2 * inv[0][0]).sqrt() / scale[0];
    let secondary = (k == 2).then(|| beta[1] / scale[1]);
    FitResult { c, c_err, secondary, points: rows.len(), max_rel_residual, warnings }
}

/// Fitted against predicted constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub fit: FitResult,
    pub c_pred: f64,
}

impl Comparison {
    pub const CSV_HEADER: &'static str = "c_fit,c_fit_err,c_pred,ratio";

    pub fn new(fit: FitResult, predicted: &ConstantReport) -> Self {
        Comparison { fit, c_pred: predicted.c_pred }
    }

    pub fn ratio(&self) -> f64 {
        self.fit.c / self.c_pred
    }

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.fit.c, self.fit.c_err, self.c_pred, self.ratio())
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::CSV_HEADER)?;
        write!(f, "{}", self.csv_line())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(b: usize, c: f64, c2: f64) -> Vec<(f64, f64)> {
        (0..12)
            .map(|k| {
                let bb = 1e6 / 2f64.powi(k);
                let l = bb.ln();
                (bb, c * bb * l.powi(b as i32 - 1) + if b >= 2 { c2 * bb * l.powi(b as i32 - 2) } else { 0.0 })
            })
            .collect()
    }

    #[test]
    fn recovers_synthetic_constant() {
        let r = fit_constant(&grid(1, 7.0, 0.0), 1, 0.0);
        assert!((r.c - 7.0).abs() < 1e-6);
        assert!(r.c_err < 1e-6);
        let r = fit_constant(&grid(2, 7.0, -3.0), 2, 0.0);
        assert!((r.c - 7.0).abs() < 1e-6, "{r:?}");
        assert!((r.secondary.unwrap() + 3.0).abs() < 1e-4);
    }

    #[test]
    fn minimum_bound_drops_small_checkpoints() {
        let mut data = grid(1, 7.0, 0.0);
        data.push((10.0, 1e6));
        assert!((fit_constant(&data, 1, 100.0).c - 7.0).abs() < 1e-6);
        assert_eq!(fit_constant(&data, 1, 100.0).points, 12);
    }

    #[test]
    fn too_few_points_warns() {
        let r = fit_constant(&[(100.0, 5.0)], 2, 0.0);
        assert!(r.c.is_nan());
        assert!(!r.warnings.is_empty());
    }

    proptest! {
        #[test]
        fn exact_data_is_fitted_exactly(c in 0.01f64..100.0, b in 1usize..4) {
            let r = fit_constant(&grid(b, c, 0.0), b, 0.0);
            prop_assert!((r.c - c).abs() < 1e-6 * c.max(1.0));
        }
    }
}
