//! Gaussian measures and linear Gaussian channels with closed-form functionals.

use std::f64::consts::{E, PI};

use crate::error::{check_dim, Result};
use crate::linalg::{self, Matrix, Vector};

/// `N(mean, cov)` with a symmetric positive semidefinite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: Vector,
    cov: Matrix,
}

impl GaussianMeasure {
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        let cov = linalg::ingest_psd(&cov, "Gaussian covariance")?;
        check_dim("Gaussian mean", cov.nrows(), mean.len())?;
        Ok(Self { mean, cov })
    }

    pub fn centered(cov: Matrix) -> Result<Self> {
        let n = cov.nrows();
        Self::new(Vector::zeros(n), cov)
    }

    pub fn standard(n: usize) -> Self {
        Self {
            mean: Vector::zeros(n),
            cov: Matrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }
}

/// `x -> B x + w` with `w ~ N(0, noise_cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    b: Matrix,
    noise_cov: Matrix,
}

impl GaussianChannel {
    pub fn new(b: Matrix, noise_cov: Matrix) -> Result<Self> {
        let noise_cov = linalg::ingest_psd(&noise_cov, "channel noise covariance")?;
        check_dim("channel noise", b.nrows(), noise_cov.nrows())?;
        Ok(Self { b, noise_cov })
    }

    /// Additive noise channel `y = x + w`.
    pub fn additive(noise_cov: Matrix) -> Result<Self> {
        let n = noise_cov.nrows();
        Self::new(Matrix::identity(n, n), noise_cov)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.b
    }

    pub fn noise_cov(&self) -> &Matrix {
        &self.noise_cov
    }

    pub fn n_in(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.b.nrows()
    }

    /// Noise covariance invertible.
    pub fn is_non_degenerate(&self) -> bool {
        self.n_out() == 0 || linalg::logdet_psd(&self.noise_cov).is_finite()
    }

    /// Output covariance `B S B^T + N`.
    pub fn output_cov(&self, input_cov: &Matrix) -> Matrix {
        linalg::symmetrize(&(&self.b * input_cov * self.b.transpose() + &self.noise_cov))
    }
}

/// `(1/2) ln det(2 pi e cov)`, `-inf` for a singular covariance.
pub fn gaussian_entropy(cov: &Matrix) -> Result<f64> {
    let cov = linalg::ingest_psd(cov, "gaussian_entropy")?;
    Ok(entropy_unchecked(&cov))
}

pub(crate) fn entropy_unchecked(cov: &Matrix) -> f64 {
    let n = cov.nrows() as f64;
    0.5 * (n * (2.0 * PI * E).ln() + linalg::logdet_psd(cov))
}

/// Closed-form `D(P || Q)`; a singular `Q` is handled on its column space.
pub fn gaussian_relative_entropy(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    check_dim("gaussian_relative_entropy", q.dim(), p.dim())?;
    let n = p.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let (basis, vals) = linalg::range_basis(&q.cov);
    let dm = &p.mean - &q.mean;
    let r = basis.ncols();
    let proj = &basis * basis.transpose();
    let off = Matrix::identity(n, n) - &proj;
    let scale = linalg::spectral_norm_sym(&p.cov).max(linalg::spectral_norm_sym(&q.cov));
    let leak_cov = (&off * &p.cov * &off).amax();
    let leak_mean = (&off * &dm).amax();
    if leak_cov > 1e-10 * scale.max(1.0) || leak_mean > 1e-10 * dm.amax().max(1.0) {
        return Ok(f64::INFINITY);
    }
    let sp = linalg::symmetrize(&(basis.transpose() * &p.cov * &basis));
    let logdet_p = linalg::logdet_psd(&sp);
    if logdet_p == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let dm_r = basis.transpose() * dm;
    let mut trace = 0.0;
    let mut quad = 0.0;
    let mut logdet_q = 0.0;
    for i in 0..r {
        trace += sp[(i, i)] / vals[i];
        quad += dm_r[i] * dm_r[i] / vals[i];
        logdet_q += vals[i].ln();
    }
    Ok(0.5 * (trace + quad - r as f64 + logdet_q - logdet_p))
}

pub fn gaussian_pushforward(p: &GaussianMeasure, ch: &GaussianChannel) -> Result<GaussianMeasure> {
    check_dim("gaussian_pushforward", ch.n_in(), p.dim())?;
    Ok(GaussianMeasure {
        mean: &ch.b * &p.mean,
        cov: ch.output_cov(&p.cov),
    })
}

/// Quadratic Wasserstein distance between Gaussians (Bures closed form).
pub fn w2_gaussian(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    check_dim("w2_gaussian", q.dim(), p.dim())?;
    let root_q = linalg::sqrt_psd(&q.cov);
    let middle = linalg::symmetrize(&(&root_q * &p.cov * &root_q));
    let cross = linalg::sqrt_psd(&middle).trace();
    let bures = p.cov.trace() + q.cov.trace() - 2.0 * cross;
    let shift = (&p.mean - &q.mean).norm_squared();
    Ok((shift + bures.max(0.0)).sqrt())
}
