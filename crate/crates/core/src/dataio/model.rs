use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::moments::{
    case3_moments, CosineMoments, DimensionlessMeans, GaussianModel, MomentKind, Spectrum,
};
use crate::optimize::{min_variance, optimal_spectrum};
use crate::sum::{ksum, KahanSum};

use super::DataMatrix;

/// Eigenvalues at or below this fraction of the covariance trace are floored.
pub const EIGEN_FLOOR_FRACTION: f64 = 1e-10;

/// Gaussian model fitted to data, expressed in the covariance eigenbasis.
#[derive(Debug, Clone)]
pub struct EstimatedModel {
    /// Column means.
    pub mean: Vec<f64>,
    /// Sample covariance eigenvalues, nonincreasing. Floored entries may be
    /// zero or slightly negative.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors matching `eigenvalues`.
    pub basis: Matrix,
    /// `(Uᵀμ̂)ᵢ / √λᵢ`, zero on floored axes.
    pub etas: DimensionlessMeans,
    /// Indices of axes whose eigenvalue is at or below `floor`.
    pub floored: Vec<usize>,
    pub floor: f64,
}

impl EstimatedModel {
    /// Mean expressed in the eigenbasis, `Uᵀμ̂`.
    pub fn rotated_mean(&self) -> Vec<f64> {
        let n = self.mean.len();
        (0..n)
            .map(|i| ksum((0..n).map(|k| self.basis[(k, i)] * self.mean[k])))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        ksum(self.eigenvalues.iter().copied())
    }

    /// Spectrum of the retained axes; errors if any axis was floored.
    pub fn spectrum(&self) -> Result<Spectrum> {
        if let Some(&i) = self.floored.first() {
            return Err(floored_error(i, self.eigenvalues[i]));
        }
        Spectrum::new(self.eigenvalues.clone())
    }

    /// Predicted moments of cosine similarity between two independent draws
    /// from the fitted model. Floored axes count as constant offsets: they add
    /// their squared mean to both dot product and squared norm but no
    /// variance.
    pub fn null_moments(&self) -> Result<CosineMoments> {
        let mu = self.rotated_mean();
        let kept: Vec<usize> = (0..mu.len())
            .filter(|i| !self.floored.contains(i))
            .collect();
        if kept.is_empty() {
            return Err(Error::domain(
                "every covariance eigenvalue is below the floor",
            ));
        }
        let model = GaussianModel::new(
            kept.iter().map(|&i| mu[i]).collect(),
            Spectrum::new(kept.iter().map(|&i| self.eigenvalues[i]).collect())?,
        )?;
        let m = case3_moments(&model);
        let extra = ksum(self.floored.iter().map(|&i| mu[i] * mu[i]));
        if extra == 0.0 {
            return Ok(m);
        }
        let total: KahanSum = kept
            .iter()
            .map(|&i| mu[i] * mu[i] + self.eigenvalues[i])
            .collect();
        let s = total.value();
        Ok(CosineMoments {
            mean: (m.mean * s + extra) / (s + extra),
            variance: m.variance * (s / (s + extra)).powi(2),
            kind: MomentKind::AsymptoticApprox,
        })
    }

    /// Cosine variance predicted after [`optimal_transform`].
    pub fn min_variance(&self) -> Result<f64> {
        if let Some(&i) = self.floored.first() {
            return Err(floored_error(i, self.eigenvalues[i]));
        }
        Ok(min_variance(&self.etas))
    }
}

fn floored_error(axis: usize, value: f64) -> Error {
    Error::domain(format!(
        "covariance eigenvalue {axis} ({value:e}) is below the floor; \
         reduce the dimension (drop near-constant directions) first"
    ))
}

/// Column means, `1/(n − 1)` sample covariance and its eigendecomposition.
pub fn estimate_model(data: &DataMatrix) -> Result<EstimatedModel> {
    let (m, n) = (data.rows(), data.cols());
    if m < 2 || n < 1 {
        return Err(Error::domain(format!(
            "need at least 2 rows and 1 column to estimate a covariance, got {m}x{n}"
        )));
    }
    let x = data.values();
    let mean: Vec<f64> = (0..n)
        .map(|j| ksum((0..m).map(|i| x[(i, j)])) / m as f64)
        .collect();
    let mut cov = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let s = ksum((0..m).map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b])));
            let v = s / (m - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    if cov.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sample covariance is not finite"));
    }

    let eig = symmetric_eigen(&cov)?;
    let trace = ksum(eig.values.iter().copied());
    let floor = EIGEN_FLOOR_FRACTION * trace.max(0.0);
    let floored: Vec<usize> = (0..n).filter(|&i| !(eig.values[i] > floor)).collect();

    let mut model = EstimatedModel {
        mean,
        eigenvalues: eig.values,
        basis: eig.vectors,
        etas: DimensionlessMeans::zeros(n),
        floored,
        floor,
    };
    let rotated = model.rotated_mean();
    let etas = (0..n)
        .map(|i| {
            if model.floored.contains(&i) {
                0.0
            } else {
                rotated[i] / model.eigenvalues[i].sqrt()
            }
        })
        .collect();
    model.etas = DimensionlessMeans::new(etas)?;
    Ok(model)
}

/// Subtracts each row's own mean. The cosine of two centered rows is the
/// Pearson correlation of the original rows.
pub fn center_rows(data: &DataMatrix) -> Result<DataMatrix> {
    if data.cols() < 2 {
        return Err(Error::domain("centering rows needs at least 2 columns"));
    }
    let mut values = data.values().clone();
    for i in 0..values.rows() {
        let row = values.row_mut(i);
        let mean = ksum(row.iter().copied()) / row.len() as f64;
        row.iter_mut().for_each(|x| *x -= mean);
    }
    DataMatrix::new(values, data.column_names().map(<[String]>::to_vec))
}

/// Symmetric map `W = U · diag(√(wᵢ/λᵢ)) · Uᵀ` that rescales each eigenaxis
/// so the covariance spectrum of `XW` is the variance-minimizing one for the
/// fitted `η` (scale fixed to one). Row vectors transform as `x ↦ xW`.
pub fn optimal_transform(model: &EstimatedModel) -> Result<Matrix> {
    if let Some(&i) = model.floored.first() {
        return Err(floored_error(i, model.eigenvalues[i]));
    }
    let target = optimal_spectrum(&model.etas, 1.0)?;
    let gains: Vec<f64> = target
        .weights()
        .iter()
        .zip(&model.eigenvalues)
        .map(|(w, l)| (w / l).sqrt())
        .collect();
    let u = &model.basis;
    let n = gains.len();
    let mut w = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = ksum((0..n).map(|i| u[(a, i)] * gains[i] * u[(b, i)]));
            w[(a, b)] = v;
            w[(b, a)] = v;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let d = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = estimate_model(&d).unwrap();
        assert_eq!(m.mean, vec![0.5, 0.5]);
        assert!((m.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!(m.eigenvalues[1].abs() < 1e-15);
        assert_eq!(m.floored, vec![1]);
        assert_eq!(m.etas.values()[1], 0.0);
        assert!(optimal_transform(&m).is_err());
    }

    #[test]
    fn centering() {
        let d = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0]]).unwrap();
        let c = center_rows(&d).unwrap();
        assert_eq!(c.row(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.row(1), &[0.0, 0.0, 0.0]);
        assert!(center_rows(&DataMatrix::from_rows(&[vec![1.0]]).unwrap()).is_err());
    }

    #[test]
    fn too_few_rows() {
        let d = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(estimate_model(&d).is_err());
    }

    #[test]
    fn constant_offset_axis_enters_null_mean() {
        let d = DataMatrix::from_rows(&[
            vec![1.0, 3.0],
            vec![-1.0, 3.0],
            vec![2.0, 3.0],
            vec![-2.0, 3.0],
        ])
        .unwrap();
        let m = estimate_model(&d).unwrap();
        assert_eq!(m.floored, vec![1]);
        let nm = m.null_moments().unwrap();
        let var = 10.0 / 3.0;
        assert!((nm.mean - 9.0 / (9.0 + var)).abs() < 1e-12);
        assert!((nm.variance - var * var / (9.0 + var).powi(2)).abs() < 1e-12);
    }
}
