//! Conditional Gaussian reference densities for systems whose second block of
//! coordinates is linear given the path of the first block:
//!
//! ```text
//! dX_I  = [A0(X_I) + A1(X_I) X_II] dt + S_I  dW_I
//! dX_II = [a0(X_I) + a1(X_I) X_II] dt + S_II dW_II
//! ```
//!
//! The conditional law of `X_II` given the `X_I` path is Gaussian with a mean
//! and covariance that follow a Kalman-Bucy type filter. One long trajectory
//! drives the filter; conditional densities recorded whenever `X_I` visits the
//! neighbourhood of a reference point are averaged.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::models::{SdeModel, TURB6D_DAMPING, TURB6D_NOISE};
use crate::sampler::{ReferenceSet, Trajectory, TrajectoryConfig};

pub type VecMap = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type MatMap = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Which noise covariance drives the filter covariance equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceNoise {
    /// `S_II S_II^*`, the noise of the unobserved block.
    #[default]
    Unobserved,
    /// `S_I S_I^*`, kept for comparison runs; only dimensionally valid when
    /// both blocks have the same size.
    Observed,
}

#[derive(Clone)]
pub struct ConditionalLinearModel {
    pub n1: usize,
    pub n2: usize,
    pub a0_obs: VecMap,
    pub a1_obs: MatMap,
    pub a0_lin: VecMap,
    pub a1_lin: MatMap,
    /// `S_I`.
    pub noise_obs: DMatrix<f64>,
    /// `S_II`.
    pub noise_lin: DMatrix<f64>,
    pub base: SdeModel,
    pub covariance_noise: CovarianceNoise,
    obs_precision: DMatrix<f64>,
}

impl std::fmt::Debug for ConditionalLinearModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConditionalLinearModel")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("base", &self.base.name())
            .finish()
    }
}

impl ConditionalLinearModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        base: SdeModel,
        n1: usize,
        a0_obs: VecMap,
        a1_obs: MatMap,
        a0_lin: VecMap,
        a1_lin: MatMap,
        noise_obs: DMatrix<f64>,
        noise_lin: DMatrix<f64>,
    ) -> Result<Self> {
        let n = base.dim();
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidArgument(format!("observed block size {n1} must be in 1..{n}")));
        }
        let n2 = n - n1;
        if noise_obs.shape() != (n1, n1) || noise_lin.shape() != (n2, n2) {
            return Err(Error::InvalidArgument("noise blocks have the wrong shape".into()));
        }
        let ss = &noise_obs * noise_obs.transpose();
        let obs_precision = ss
            .clone()
            .try_inverse()
            .filter(|_| ss.determinant().abs() > 1e-300)
            .ok_or_else(|| Error::Singular("S_I S_I^* is not invertible".into()))?;
        Ok(Self {
            n1,
            n2,
            a0_obs,
            a1_obs,
            a0_lin,
            a1_lin,
            noise_obs,
            noise_lin,
            base,
            covariance_noise: CovarianceNoise::default(),
            obs_precision,
        })
    }

    /// Decomposition of a built-in model with conditional linear structure
    /// (`gibbs2d` with `X_I = x`, `turb6d` with `X_I = x`).
    pub fn for_builtin(model: &SdeModel) -> Result<Self> {
        match model.name() {
            "gibbs2d" => Self::new(
                model.clone(),
                1,
                Arc::new(|x: &[f64]| DVector::from_element(1, -x[0].powi(5))),
                Arc::new(|x: &[f64]| DMatrix::from_element(1, 1, x[0] * x[0])),
                Arc::new(|x: &[f64]| DVector::from_element(1, x[0].powi(3) / 3.0)),
                Arc::new(|_: &[f64]| DMatrix::from_element(1, 1, -7.0 / 3.0)),
                DMatrix::identity(1, 1),
                DMatrix::identity(1, 1),
            ),
            "turb6d" => Self::new(
                model.clone(),
                1,
                Arc::new(|x: &[f64]| DVector::from_element(1, -0.1 * x[0] + 0.5)),
                Arc::new(|x: &[f64]| DMatrix::from_element(1, 5, 0.25 * x[0])),
                Arc::new(|x: &[f64]| DVector::from_element(5, -0.25 * x[0] * x[0])),
                Arc::new(|_: &[f64]| {
                    DMatrix::from_diagonal(&DVector::from_iterator(5, TURB6D_DAMPING.iter().map(|d| -d)))
                }),
                DMatrix::from_element(1, 1, TURB6D_NOISE[0]),
                DMatrix::from_diagonal(&DVector::from_row_slice(&TURB6D_NOISE[1..])),
            ),
            other => Err(Error::InvalidArgument(format!(
                "model `{other}` has no conditional linear decomposition"
            ))),
        }
    }

    pub fn with_covariance_noise(mut self, mode: CovarianceNoise) -> Result<Self> {
        if mode == CovarianceNoise::Observed && self.n1 != self.n2 {
            return Err(Error::InvalidArgument(
                "S_I S_I^* in the covariance equation needs equal block sizes".into(),
            ));
        }
        self.covariance_noise = mode;
        Ok(self)
    }

    /// Drift reassembled from the blocks, `(A0 + A1 x_II, a0 + a1 x_II)`.
    pub fn reassembled_drift(&self, x: &[f64]) -> Vec<f64> {
        let (xi, xii) = x.split_at(self.n1);
        let y = DVector::from_row_slice(xii);
        let top = (self.a0_obs)(xi) + (self.a1_obs)(xi) * &y;
        let bottom = (self.a0_lin)(xi) + (self.a1_lin)(xi) * &y;
        top.iter().chain(bottom.iter()).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl FilterState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }
}

/// One explicit Euler step of the conditional mean and covariance equations,
/// given the observed increment `dx_obs` of `X_I` over `dt` starting at `x_obs`.
pub fn filter_step(
    m: &ConditionalLinearModel,
    state: &FilterState,
    x_obs: &[f64],
    dx_obs: &[f64],
    dt: f64,
) -> Result<FilterState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if x_obs.len() != m.n1 || dx_obs.len() != m.n1 {
        return Err(Error::DimensionMismatch { expected: m.n1, got: x_obs.len().min(dx_obs.len()) });
    }
    let a0 = (m.a0_obs)(x_obs);
    let a1 = (m.a1_obs)(x_obs);
    let b0 = (m.a0_lin)(x_obs);
    let b1 = (m.a1_lin)(x_obs);
    let r = &state.cov;
    let gain = r * a1.transpose() * &m.obs_precision;
    let innovation = DVector::from_row_slice(dx_obs) - (&a0 + &a1 * &state.mean) * dt;
    let mean = &state.mean + (&b0 + &b1 * &state.mean) * dt + &gain * innovation;
    let noise = match m.covariance_noise {
        CovarianceNoise::Unobserved => &m.noise_lin * m.noise_lin.transpose(),
        CovarianceNoise::Observed => &m.noise_obs * m.noise_obs.transpose(),
    };
    let ra = r * a1.transpose();
    let drift = &b1 * r + r * b1.transpose() + noise - &ra * &m.obs_precision * ra.transpose();
    let cov = r + drift * dt;
    Ok(FilterState { mean, cov: clamp_psd(cov) })
}

/// Symmetrizes and clamps negative eigenvalues to zero.
fn clamp_psd(cov: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&cov + cov.transpose()) * 0.5;
    if sym.nrows() == 1 {
        return sym.map(|v| v.max(0.0));
    }
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    let out = &eig.eigenvectors * l * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Density of `N(mean, cov)` at `y`.
pub fn gaussian_density(state: &FilterState, y: &[f64]) -> Result<f64> {
    let n = state.mean.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let chol = state
        .cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("filter covariance is not positive definite".into()))?;
    let d = DVector::from_row_slice(y) - &state.mean;
    let z = chol.l().solve_lower_triangular(&d).expect("cholesky factor is nonsingular");
    let logdet: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let quad = z.dot(&z);
    Ok((-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgDensities {
    /// Joint density estimate: visit frequency of the `X_I` box times the
    /// averaged conditional density. `None` for points never visited.
    pub density: Vec<Option<f64>>,
    /// Average of the recorded conditional densities of `X_II`.
    pub conditional: Vec<Option<f64>>,
    pub visits: Vec<u64>,
}

/// Runs one trajectory of the base model for `horizon` time units after the
/// burn-in, co-integrating the filter. Whenever `X_I` lies in the box of
/// half-width `radius` around `y_I` of a reference point, the conditional
/// density at its `y_II` is recorded.
pub fn cg_reference_densities(
    m: &ConditionalLinearModel,
    reference: &ReferenceSet,
    horizon: f64,
    radius: f64,
    cfg: &TrajectoryConfig,
) -> Result<CgDensities> {
    cfg.validate()?;
    if !(radius > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon and radius must be positive".into()));
    }
    let n = m.base.dim();
    for p in &reference.points {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
    }
    let model = &m.base;
    let mut traj = Trajectory::new(
        model,
        model.domain().midpoint(),
        cfg.dt,
        crate::rng::substream(cfg.seed, crate::rng::Stream::Trajectory),
    )?;
    let mut state = FilterState::new(
        DVector::from_row_slice(&traj.state()[m.n1..]),
        DMatrix::zeros(m.n2, m.n2),
    );
    let advance = |traj: &mut Trajectory<'_>, state: &mut FilterState| -> Result<()> {
        let before = traj.state()[..m.n1].to_vec();
        let after = traj.step()?;
        let dx: Vec<f64> = after[..m.n1].iter().zip(&before).map(|(a, b)| a - b).collect();
        *state = filter_step(m, state, &before, &dx, cfg.dt)?;
        Ok(())
    };
    for _ in 0..cfg.burn_in_steps() {
        advance(&mut traj, &mut state)?;
    }

    // reference points ordered by their first observed coordinate
    let mut order: Vec<usize> = (0..reference.len()).collect();
    order.sort_by(|&a, &b| reference.points[a][0].total_cmp(&reference.points[b][0]));
    let keys: Vec<f64> = order.iter().map(|&j| reference.points[j][0]).collect();

    let steps = (horizon / cfg.dt).round() as u64;
    let mut sums = vec![0.0; reference.len()];
    let mut visits = vec![0u64; reference.len()];
    for _ in 0..steps {
        advance(&mut traj, &mut state)?;
        let x = traj.state();
        let lo = keys.partition_point(|&k| k <= x[0] - radius);
        let hi = keys.partition_point(|&k| k < x[0] + radius);
        if lo >= hi {
            continue;
        }
        for &j in &order[lo..hi] {
            let y = &reference.points[j];
            if (0..m.n1).all(|a| (x[a] - y[a]).abs() < radius) {
                sums[j] += gaussian_density(&state, &y[m.n1..])?;
                visits[j] += 1;
            }
        }
    }
    if visits.iter().all(|&v| v == 0) {
        return Err(Error::NoVisits);
    }
    let box_volume = (2.0 * radius).powi(m.n1 as i32);
    let density = sums
        .iter()
        .zip(&visits)
        .map(|(&s, &v)| (v > 0).then(|| s / (steps as f64 * box_volume)))
        .collect();
    let conditional = sums
        .iter()
        .zip(&visits)
        .map(|(&s, &v)| (v > 0).then(|| s / v as f64))
        .collect();
    Ok(CgDensities { density, conditional, visits })
}
