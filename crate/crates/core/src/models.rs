//! SDE systems `dX = f(X) dt + sigma dW` with constant diffusion, their
//! Fokker-Planck generator, and closed-form Gibbs densities for the built-in
//! benchmark systems.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::quadrature;

pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Names accepted by [`make_builtin`].
pub const BUILTIN_MODELS: [&str; 4] = ["ring2d", "gibbs2d", "ring4d", "turb6d"];

/// A potential `V` with analytic gradient and (row-major) Hessian.
#[derive(Clone)]
pub struct Potential {
    pub value: ScalarField,
    pub gradient: VectorField,
    pub hessian: VectorField,
}

#[derive(Clone)]
pub struct SdeModel {
    name: String,
    dim: usize,
    drift: VectorField,
    divergence: ScalarField,
    diffusion: DMatrix<f64>,
    noise: DMatrix<f64>,
    potential: Option<Potential>,
    domain: Domain,
    normalization_domain: Option<Domain>,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("diffusion", &self.diffusion)
            .field("has_exact_solution", &self.potential.is_some())
            .finish()
    }
}

impl SdeModel {
    /// Builds a model from its drift, the analytic divergence of the drift, and a
    /// constant symmetric positive-semidefinite diffusion matrix `Sigma`.
    pub fn new(
        name: impl Into<String>,
        drift: VectorField,
        divergence: ScalarField,
        diffusion: DMatrix<f64>,
        domain: Domain,
    ) -> Result<Self> {
        let dim = domain.dim();
        if diffusion.nrows() != dim || diffusion.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: diffusion.nrows() });
        }
        let scale = diffusion.amax().max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (diffusion[(i, j)] - diffusion[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument("diffusion matrix is not symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(diffusion.clone());
        if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(Error::InvalidArgument(
                "diffusion matrix is not positive semidefinite".into(),
            ));
        }
        // noise * noise^T = Sigma
        let sqrt_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let noise = &eig.eigenvectors * sqrt_l;
        Ok(Self {
            name: name.into(),
            dim,
            drift,
            divergence,
            diffusion,
            noise,
            potential: None,
            domain,
            normalization_domain: None,
        })
    }

    /// Attaches a potential whose Gibbs density `exp(-2V/s)` is invariant, where
    /// `Sigma = s * I`. `normalization_domain` must hold all but a negligible
    /// fraction of the mass.
    pub fn with_potential(mut self, potential: Potential, normalization_domain: Domain) -> Result<Self> {
        self.isotropic_variance().ok_or_else(|| {
            Error::InvalidArgument("a Gibbs density needs Sigma = s * Identity".into())
        })?;
        if normalization_domain.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: normalization_domain.dim() });
        }
        self.potential = Some(potential);
        self.normalization_domain = Some(normalization_domain);
        Ok(self)
    }

    /// Pure diffusion `f = 0`, `Sigma = sigma^2 I` on `[0, 1]^dim`.
    pub fn pure_diffusion(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(
            format!("diffusion{dim}d"),
            Arc::new(|_, out: &mut [f64]| out.fill(0.0)),
            Arc::new(|_| 0.0),
            DMatrix::identity(dim, dim) * (sigma * sigma),
            Domain::cube(dim, 0.0, 1.0)?,
        )
    }

    /// Ornstein-Uhlenbeck process `f(x) = -x`, `Sigma = sigma^2 I`.
    pub fn ornstein_uhlenbeck(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(
            format!("ou{dim}d"),
            Arc::new(|x: &[f64], out: &mut [f64]| {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -v;
                }
            }),
            Arc::new(move |_| -(dim as f64)),
            DMatrix::identity(dim, dim) * (sigma * sigma),
            Domain::cube(dim, -4.0, 4.0)?,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }

    pub fn drift_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift(x, &mut out);
        out
    }

    pub fn drift_divergence(&self, x: &[f64]) -> f64 {
        (self.divergence)(x)
    }

    /// `Sigma = sigma^T sigma`.
    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    /// A factor `L` with `L L^T = Sigma`, used to drive the noise.
    pub fn noise_factor(&self) -> &DMatrix<f64> {
        &self.noise
    }

    /// The default numerical domain of the model.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn set_domain(&mut self, domain: Domain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: domain.dim() });
        }
        self.domain = domain;
        Ok(())
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    pub fn has_exact_solution(&self) -> bool {
        self.potential.is_some()
    }

    /// `s` when `Sigma = s * I`.
    pub fn isotropic_variance(&self) -> Option<f64> {
        let s = self.diffusion[(0, 0)];
        let tol = 1e-14 * s.abs().max(1.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expect = if i == j { s } else { 0.0 };
                if (self.diffusion[(i, j)] - expect).abs() > tol {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// Returns a copy whose diffusion matrix is replaced by `diffusion`.
    pub fn with_diffusion(&self, diffusion: DMatrix<f64>) -> Result<Self> {
        let mut m = Self::new(
            self.name.clone(),
            self.drift.clone(),
            self.divergence.clone(),
            diffusion,
            self.domain.clone(),
        )?;
        if let (Some(p), Some(d)) = (&self.potential, &self.normalization_domain) {
            if m.isotropic_variance().is_some() {
                m = m.with_potential(p.clone(), d.clone())?;
            }
        }
        Ok(m)
    }
}

/// Looks up one of [`BUILTIN_MODELS`].
pub fn make_builtin(name: &str) -> Result<SdeModel> {
    match name {
        "ring2d" => ring2d(),
        "gibbs2d" => gibbs2d(),
        "ring4d" => ring4d(),
        "turb6d" => turb6d(),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// `V = (|x|^2 - 1)^2` in any dimension, with gradient and Hessian.
fn radial_ring_potential(dim: usize) -> Potential {
    Potential {
        value: Arc::new(|x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (r2 - 1.0).powi(2)
        }),
        gradient: Arc::new(|x: &[f64], out: &mut [f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            for (o, v) in out.iter_mut().zip(x) {
                *o = 4.0 * (r2 - 1.0) * v;
            }
        }),
        hessian: Arc::new(move |x: &[f64], out: &mut [f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            for i in 0..dim {
                for j in 0..dim {
                    let diag = if i == j { 4.0 * (r2 - 1.0) } else { 0.0 };
                    out[i * dim + j] = diag + 8.0 * x[i] * x[j];
                }
            }
        }),
    }
}

/// Ring potential gradient flow plus the rotation `(y, -x)` in the first two coordinates.
fn ring_model(name: &str, dim: usize) -> Result<SdeModel> {
    let drift: VectorField = Arc::new(|x: &[f64], out: &mut [f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        for (o, v) in out.iter_mut().zip(x) {
            *o = -4.0 * v * (r2 - 1.0);
        }
        out[0] += x[1];
        out[1] -= x[0];
    });
    let n = dim as f64;
    // sum_i d/dx_i [-4 x_i (r^2 - 1)] = -4n(r^2 - 1) - 8 r^2
    let divergence: ScalarField = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        -4.0 * n * (r2 - 1.0) - 8.0 * r2
    });
    SdeModel::new(
        name,
        drift,
        divergence,
        DMatrix::identity(dim, dim),
        Domain::cube(dim, -2.0, 2.0)?,
    )?
    .with_potential(radial_ring_potential(dim), Domain::cube(dim, -2.5, 2.5)?)
}

fn ring2d() -> Result<SdeModel> {
    ring_model("ring2d", 2)
}

fn ring4d() -> Result<SdeModel> {
    ring_model("ring4d", 4)
}

fn gibbs2d() -> Result<SdeModel> {
    let drift: VectorField = Arc::new(|p: &[f64], out: &mut [f64]| {
        let (x, y) = (p[0], p[1]);
        out[0] = x * x * y - x.powi(5);
        out[1] = x.powi(3) / 3.0 - 7.0 * y / 3.0;
    });
    let divergence: ScalarField = Arc::new(|p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        2.0 * x * y - 5.0 * x.powi(4) - 7.0 / 3.0
    });
    // V = (x^3 - y)^2 / 6 + y^2 = -x^3 y / 3 + x^6 / 6 + 7 y^2 / 6
    let potential = Potential {
        value: Arc::new(|p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            (x.powi(3) - y).powi(2) / 6.0 + y * y
        }),
        gradient: Arc::new(|p: &[f64], out: &mut [f64]| {
            let (x, y) = (p[0], p[1]);
            out[0] = -x * x * y + x.powi(5);
            out[1] = -x.powi(3) / 3.0 + 7.0 * y / 3.0;
        }),
        hessian: Arc::new(|p: &[f64], out: &mut [f64]| {
            let (x, y) = (p[0], p[1]);
            out[0] = -2.0 * x * y + 5.0 * x.powi(4);
            out[1] = -x * x;
            out[2] = -x * x;
            out[3] = 7.0 / 3.0;
        }),
    };
    SdeModel::new(
        "gibbs2d",
        drift,
        divergence,
        DMatrix::identity(2, 2),
        Domain::cube(2, -2.0, 2.0)?,
    )?
    .with_potential(potential, Domain::cube(2, -3.0, 3.0)?)
}

/// Damping rates of the five linear modes of the 6D turbulence model.
pub(crate) const TURB6D_DAMPING: [f64; 5] = [0.2, 0.5, 1.0, 2.0, 5.0];
/// Noise amplitudes `(x, y1..y5)` of the 6D turbulence model.
pub(crate) const TURB6D_NOISE: [f64; 6] = [2.0, 0.5, 0.2, 0.1, 0.1, 0.1];

fn turb6d() -> Result<SdeModel> {
    let drift: VectorField = Arc::new(|p: &[f64], out: &mut [f64]| {
        let x = p[0];
        let ysum: f64 = p[1..6].iter().sum();
        out[0] = -0.1 * x + 0.5 + 0.25 * x * ysum;
        for i in 0..5 {
            out[1 + i] = -TURB6D_DAMPING[i] * p[1 + i] - 0.25 * x * x;
        }
    });
    let divergence: ScalarField = Arc::new(|p: &[f64]| {
        let ysum: f64 = p[1..6].iter().sum();
        -0.1 + 0.25 * ysum - TURB6D_DAMPING.iter().sum::<f64>()
    });
    let diffusion = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        6,
        TURB6D_NOISE.iter().map(|s| s * s),
    ));
    let domain = Domain::new(vec![
        (-3.0, 3.0),
        (-3.0, 0.0),
        (-1.5, 0.5),
        (-0.5, 0.5),
        (-0.5, 0.5),
        (-0.5, 0.5),
    ])?;
    SdeModel::new("turb6d", drift, divergence, diffusion, domain)
}

/// Applies the stationary Fokker-Planck operator with constant `Sigma` to a
/// function known through its value, gradient and Hessian at `x`:
/// `-sum_i (div f u + f_i du/dx_i) + 1/2 sum_ij Sigma_ij d2u/dx_i dx_j`.
pub fn generator_apply(model: &SdeModel, u: f64, grad: &[f64], hess: &[f64], x: &[f64]) -> Result<f64> {
    let n = model.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if grad.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grad.len() });
    }
    if hess.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: hess.len() });
    }
    let mut f = vec![0.0; n];
    model.drift(x, &mut f);
    let mut out = -model.drift_divergence(x) * u;
    for i in 0..n {
        out -= f[i] * grad[i];
    }
    let sigma = model.diffusion();
    for i in 0..n {
        for j in 0..n {
            out += 0.5 * sigma[(i, j)] * hess[i * n + j];
        }
    }
    Ok(out)
}

/// The normalized Gibbs density `exp(-2V/s) / Z` of a model with a potential.
#[derive(Clone)]
pub struct ExactSolution {
    potential: Potential,
    variance: f64,
    normalization: f64,
    domain: Domain,
    dim: usize,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("normalization", &self.normalization)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ExactSolution {
    /// Computes the normalization constant once by composite Gauss-Legendre
    /// quadrature over the model's normalization domain.
    pub fn new(model: &SdeModel) -> Result<Self> {
        let potential = model
            .potential
            .clone()
            .ok_or_else(|| Error::NoExactSolution(model.name.clone()))?;
        let domain = model.normalization_domain.clone().expect("set with potential");
        let variance = model.isotropic_variance().expect("checked with potential");
        let (panels, order) = match model.dim() {
            1 => (200, 8),
            2 => (64, 8),
            3 => (24, 8),
            _ => (12, 8),
        };
        let v = potential.value.clone();
        let normalization =
            quadrature::integrate_box(&domain, panels, order, |x| (-2.0 * v(x) / variance).exp())?;
        Ok(Self { potential, variance, normalization, domain, dim: model.dim() })
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unnormalized_density(&self, x: &[f64]) -> f64 {
        (-2.0 * (self.potential.value)(x) / self.variance).exp()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.unnormalized_density(x) / self.normalization
    }

    /// Density, gradient and row-major Hessian at `x`:
    /// `grad u = -c u grad V`, `hess u = u (c^2 grad V grad V^T - c hess V)` with `c = 2/s`.
    pub fn jet(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.dim;
        let c = 2.0 / self.variance;
        let u = self.density(x);
        let mut gv = vec![0.0; n];
        (self.potential.gradient)(x, &mut gv);
        let mut hv = vec![0.0; n * n];
        (self.potential.hessian)(x, &mut hv);
        let grad = gv.iter().map(|g| -c * u * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = u * (c * c * gv[i] * gv[j] - c * hv[i * n + j]);
            }
        }
        (u, grad, hess)
    }
}

/// `exp(-2V(x)/s) / Z`.
pub fn exact_density(sol: &ExactSolution, x: &[f64]) -> f64 {
    sol.density(x)
}

pub fn exact_jet(sol: &ExactSolution, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    sol.jet(x)
}
