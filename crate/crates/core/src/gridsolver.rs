//! Finite-difference Fokker-Planck operator on a tensor grid and the two
//! data-driven grid solvers: null-space projection of a Monte Carlo field and
//! the penalized least squares `min ||A u||^2 + ||u - v||^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{DensityField, GridSpec};
use crate::linalg::{conjugate_gradient, norm2, solve_banded_lu, BandedCholesky, CsrMatrix};
use crate::models::{ExactSolution, SdeModel};

/// Banded factorizations are used while `rows * (bandwidth + 1)` stays below this.
const BANDED_LIMIT: usize = 25_000_000;
const CG_TOL: f64 = 1e-10;

/// Discretization of the generator at the `(N-2)^n` interior nodes, acting on
/// values at all `N^n` nodes.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: CsrMatrix,
    pub grid: GridSpec,
    /// Flat node index of the interior node behind each row.
    pub interior: Vec<usize>,
}

impl OperatorMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(u)
    }
}

/// Central differences: `-(f_j u)_{x_j}` over `2 h_j` using the drift at the
/// neighbouring nodes, `1/2 Sigma_jj u_{x_j x_j}` by the 3-point stencil and
/// mixed terms by the 4-point cross stencil.
pub fn assemble_operator(model: &SdeModel, grid: &GridSpec) -> Result<OperatorMatrix> {
    let n = grid.dim();
    if model.dim() != n {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: n });
    }
    let sigma = model.diffusion();
    let interior = grid.interior_nodes();
    let strides: Vec<usize> = (0..n).map(|a| grid.stride(a)).collect();
    let h = grid.spacings();
    let mut trip = Vec::with_capacity(interior.len() * (1 + 2 * n + 2 * n * (n - 1)));
    let mut f = vec![0.0; n];
    for (row, &k) in interior.iter().enumerate() {
        for j in 0..n {
            let kp = k + strides[j];
            let km = k - strides[j];
            model.drift(&grid.node_flat(kp), &mut f);
            trip.push((row, kp, -f[j] / (2.0 * h[j])));
            model.drift(&grid.node_flat(km), &mut f);
            trip.push((row, km, f[j] / (2.0 * h[j])));

            let s = 0.5 * sigma[(j, j)] / (h[j] * h[j]);
            if s != 0.0 {
                trip.push((row, kp, s));
                trip.push((row, km, s));
                trip.push((row, k, -2.0 * s));
            }
            for l in (j + 1)..n {
                // 1/2 (Sigma_jl + Sigma_lj) u_{x_j x_l}
                let c = 0.5 * (sigma[(j, l)] + sigma[(l, j)]) / (4.0 * h[j] * h[l]);
                if c != 0.0 {
                    let (sj, sl) = (strides[j], strides[l]);
                    trip.push((row, k + sj + sl, c));
                    trip.push((row, k + sj - sl, -c));
                    trip.push((row, k - sj + sl, -c));
                    trip.push((row, k - sj - sl, c));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(interior.len(), grid.num_nodes(), trip);
    Ok(OperatorMatrix { matrix, grid: grid.clone(), interior })
}

/// Finite-difference solution with `A u = 0` in the interior and prescribed
/// values on the boundary nodes (given in [`GridSpec::boundary_nodes`] order).
pub fn solve_baseline(op: &OperatorMatrix, boundary: &[f64]) -> Result<DensityField> {
    let grid = &op.grid;
    let bnodes = grid.boundary_nodes();
    if boundary.len() != bnodes.len() {
        return Err(Error::DimensionMismatch { expected: bnodes.len(), got: boundary.len() });
    }
    let mut u = vec![0.0; grid.num_nodes()];
    for (&k, &v) in bnodes.iter().zip(boundary) {
        u[k] = v;
    }
    // interior column position of each node, or usize::MAX on the boundary
    let mut pos = vec![usize::MAX; grid.num_nodes()];
    for (i, &k) in op.interior.iter().enumerate() {
        pos[k] = i;
    }
    let m = op.rows();
    let mut trip = Vec::with_capacity(op.matrix.nnz());
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        let (cols, vals) = op.matrix.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if pos[c] == usize::MAX {
                rhs[r] -= v * u[c];
            } else {
                trip.push((r, pos[c], v));
            }
        }
    }
    let square = CsrMatrix::from_triplets(m, m, trip);
    let interior = solve_banded_lu(&square, &rhs)?;
    for (&k, v) in op.interior.iter().zip(interior) {
        u[k] = v;
    }
    DensityField::new(grid.clone(), u)
}

/// Boundary values of `f` in the order expected by [`solve_baseline`].
pub fn boundary_values<F: Fn(&[f64]) -> f64>(grid: &GridSpec, f: F) -> Vec<f64> {
    grid.boundary_nodes().into_iter().map(|k| f(&grid.node_flat(k))).collect()
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DensityField,
    /// `||A u||_2`.
    pub residual_norm: f64,
    /// `||u - v||_2`.
    pub data_misfit: f64,
    pub discrete_l2_error: Option<f64>,
}

impl SolveReport {
    fn new(op: &OperatorMatrix, u: Vec<f64>, v: &[f64]) -> Result<Self> {
        let residual_norm = norm2(&op.apply(&u));
        let data_misfit = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok(Self {
            solution: DensityField::new(op.grid.clone(), u)?,
            residual_norm,
            data_misfit,
            discrete_l2_error: None,
        })
    }

    pub fn with_oracle(mut self, oracle: &DensityField) -> Result<Self> {
        self.discrete_l2_error = Some(discrete_l2_error(&self.solution, oracle)?);
        Ok(self)
    }
}

/// Symmetric positive-definite solve: banded Cholesky while it fits in memory,
/// Jacobi-preconditioned CG otherwise.
enum SpdSolver {
    Cholesky(BandedCholesky),
    Iterative { matrix: CsrMatrix, diag: Vec<f64> },
}

impl SpdSolver {
    fn new(matrix: CsrMatrix) -> Result<Self> {
        let bw = matrix.bandwidth();
        if matrix.nrows().saturating_mul(bw + 1) <= BANDED_LIMIT {
            Ok(Self::Cholesky(BandedCholesky::factor(&matrix, bw)?))
        } else {
            let diag = matrix.diagonal();
            Ok(Self::Iterative { matrix, diag })
        }
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Cholesky(c) => Ok(c.solve(b)),
            Self::Iterative { matrix, diag } => {
                let mut x = vec![0.0; b.len()];
                let max_iter = (20 * b.len()).max(1000);
                conjugate_gradient(|v, o| matrix.mul_vec_into(v, o), diag, b, &mut x, CG_TOL, max_iter)?;
                Ok(x)
            }
        }
    }
}

/// Euclidean projection of `v` onto `{u : A u = 0}`, `u = v - A^T (A A^T)^{-1} A v`.
pub fn solve_constrained(op: &OperatorMatrix, v: &DensityField) -> Result<SolveReport> {
    check_grid(op, v)?;
    let gram = op.matrix.matmul(&op.matrix.transpose());
    let solver = SpdSolver::new(gram).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("A A^T is rank deficient: {msg}")),
        other => other,
    })?;
    let vnorm = norm2(&v.values);
    let mut u = v.values.clone();
    // Re-projecting the remainder removes what the first solve leaves behind.
    for _ in 0..4 {
        let r = op.apply(&u);
        if norm2(&r) <= 1e-11 * vnorm {
            break;
        }
        let w = solver.solve(&r)?;
        let correction = op.matrix.mul_vec_t(&w);
        for (a, c) in u.iter_mut().zip(correction) {
            *a -= c;
        }
    }
    SolveReport::new(op, u, &v.values)
}

/// Reusable solver for `(I + A^T A) u = v`.
pub struct PenalizedSolver {
    op: OperatorMatrix,
    normal: CsrMatrix,
    solver: SpdSolver,
}

impl PenalizedSolver {
    pub fn new(op: &OperatorMatrix) -> Result<Self> {
        let normal = op.matrix.transpose().matmul(&op.matrix).add_identity(1.0);
        let solver = SpdSolver::new(normal.clone())?;
        Ok(Self { op: op.clone(), normal, solver })
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let vnorm = norm2(v);
        let mut u = self.solver.solve(v)?;
        for _ in 0..3 {
            let r: Vec<f64> = self.normal.mul_vec(&u).iter().zip(v).map(|(a, b)| b - a).collect();
            if norm2(&r) <= 1e-12 * vnorm {
                break;
            }
            let d = self.solver.solve(&r)?;
            for (a, b) in u.iter_mut().zip(d) {
                *a += b;
            }
        }
        Ok(u)
    }

    /// `||(I + A^T A) u - v||_2`.
    pub fn normal_residual(&self, u: &[f64], v: &[f64]) -> f64 {
        let r: Vec<f64> = self.normal.mul_vec(u).iter().zip(v).map(|(a, b)| a - b).collect();
        norm2(&r)
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }
}

/// Unique minimizer of `||A u||^2 + ||u - v||^2`, `u = (I + A^T A)^{-1} v`.
pub fn solve_unconstrained(op: &OperatorMatrix, v: &DensityField) -> Result<SolveReport> {
    check_grid(op, v)?;
    let u = PenalizedSolver::new(op)?.solve(&v.values)?;
    SolveReport::new(op, u, &v.values)
}

fn check_grid(op: &OperatorMatrix, v: &DensityField) -> Result<()> {
    if v.grid != op.grid {
        return Err(Error::InvalidArgument("field and operator live on different grids".into()));
    }
    Ok(())
}

/// `sqrt(h_1 ... h_n) * ||u - oracle||_2`.
pub fn discrete_l2_error(u: &DensityField, oracle: &DensityField) -> Result<f64> {
    if u.grid != oracle.grid {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    let ss: f64 = u.values.iter().zip(&oracle.values).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((u.grid.cell_volume() * ss).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDiagnostic {
    pub h: f64,
    pub q: f64,
    /// Eigenvalues of `A_h^T A_h` above the cutoff.
    pub rank: usize,
    pub interior_nodes: usize,
}

/// Largest `N^n` accepted by the dense eigen-decomposition in [`compute_q`].
pub const Q_SIZE_GUARD: usize = 4000;

/// `Q(h) = h^n sum_i (1 / (1 + h^-4 lambda_i))^2` over the nonzero eigenvalues
/// of `A_h^T A_h`, `A_h = h^2 A`. The nonzero spectrum is taken from the
/// smaller Gram matrix `A_h A_h^T`, which shares it.
pub fn q_diagnostic(model: &SdeModel, grid: &GridSpec) -> Result<QDiagnostic> {
    if grid.num_nodes() > Q_SIZE_GUARD {
        return Err(Error::SizeGuard(format!(
            "Q(h) needs a dense eigen-decomposition; {} nodes exceed the limit of {Q_SIZE_GUARD}",
            grid.num_nodes()
        )));
    }
    if !grid.is_uniform() {
        return Err(Error::InvalidArgument("Q(h) needs equal spacing on every axis".into()));
    }
    let op = assemble_operator(model, grid)?;
    let h = grid.h(0);
    let a = op.matrix.to_dense() * (h * h);
    let gram: DMatrix<f64> = &a * a.transpose();
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let cutoff = 1e-12 * lmax;
    let h4 = h.powi(4);
    let mut rank = 0;
    let mut sum = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l > cutoff {
            rank += 1;
            sum += (1.0 / (1.0 + l / h4)).powi(2);
        }
    }
    Ok(QDiagnostic { h, q: h.powi(grid.dim() as i32) * sum, rank, interior_nodes: op.rows() })
}

pub fn compute_q(model: &SdeModel, grid: &GridSpec) -> Result<f64> {
    Ok(q_diagnostic(model, grid)?.q)
}

/// Source of boundary values for the baseline `u*`.
pub enum Baseline<'a> {
    /// Boundary values from the model's closed-form density.
    Exact(&'a ExactSolution),
    /// Boundary values from an arbitrary function.
    Boundary(&'a dyn Fn(&[f64]) -> f64),
}

/// For each grid, perturbs the baseline `u*` by i.i.d. `N(0, zeta^2)` noise `e`,
/// solves the penalized problem for `u`, and returns `(h, sum ||u - u*||^2 / sum ||e||^2)`
/// over `trials` draws.
pub fn error_reduction_ratio<R: Rng + ?Sized>(
    model: &SdeModel,
    grids: &[GridSpec],
    zeta: f64,
    trials: usize,
    baseline: Option<Baseline<'_>>,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let baseline = baseline.ok_or_else(|| {
        Error::InvalidArgument("the ratio experiment needs a baseline solution u*".into())
    })?;
    if !(zeta > 0.0) || trials == 0 {
        return Err(Error::InvalidArgument("need zeta > 0 and at least one trial".into()));
    }
    let normal = Normal::new(0.0, zeta).expect("zeta > 0");
    let mut out = Vec::with_capacity(grids.len());
    for grid in grids {
        let op = assemble_operator(model, grid)?;
        let boundary = match &baseline {
            Baseline::Exact(sol) => boundary_values(grid, |x| sol.density(x)),
            Baseline::Boundary(f) => boundary_values(grid, f),
        };
        let ustar = solve_baseline(&op, &boundary)?;
        let solver = PenalizedSolver::new(&op)?;
        let mut zz = 0.0;
        let mut ee = 0.0;
        for _ in 0..trials {
            let e: Vec<f64> = (0..grid.num_nodes()).map(|_| normal.sample(rng)).collect();
            let v: Vec<f64> = ustar.values.iter().zip(&e).map(|(u, e)| u + e).collect();
            let ubar = solver.solve(&v)?;
            zz += ubar.iter().zip(&ustar.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            ee += e.iter().map(|x| x * x).sum::<f64>();
        }
        out.push((grid.h(0), zz / ee));
    }
    Ok(out)
}
