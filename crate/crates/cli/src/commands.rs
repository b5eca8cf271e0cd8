//! Subcommand implementations. Each one reads an [`ExperimentConfig`], runs a
//! single experiment and writes its CSV artifacts into the output directory.

use std::path::{Path, PathBuf};

use fpsolve_core::cgfilter::{cg_reference_densities, ConditionalLinearModel};
use fpsolve_core::gridsolver::{
    assemble_operator, discrete_l2_error, q_diagnostic, solve_constrained, solve_unconstrained,
    error_reduction_ratio, Baseline,
};
use fpsolve_core::io;
use fpsolve_core::neural::{
    evaluate_on_grid, evaluate_slice, init_params, train_double_shuffle, AdamHyper, TrainConfig,
};
use fpsolve_core::rng::{child_seed, substream, Stream};
use fpsolve_core::sampler::{
    estimate_density_full_grid, estimate_density_split, inject_multiplicative_noise,
    sample_collocation, sample_collocation_with_origin, snap_to_grid,
};
use fpsolve_core::{
    make_builtin, DensityField, Domain, Error, ExactSolution, GridSpec, ReferenceSet, SdeModel,
    TrajectoryConfig,
};

use crate::config::{ExperimentConfig, GridInput, GridMethod, Sampler};

/// Independent components of one experiment; each gets its own child seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Role {
    Collocation = 0,
    ReferencePoints = 1,
    ReferenceDensity = 2,
    Noise = 3,
    Init = 4,
    Shuffle = 5,
    GridInput = 6,
    Ratio = 7,
}

fn seed_for(cfg: &ExperimentConfig, role: Role) -> u64 {
    child_seed(cfg.seed, role as u64)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("training did not converge after {iterations} iterations (artifacts written)")]
    NotConverged { iterations: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(e) => match e {
                Error::BlowUp { .. } | Error::Singular(_) | Error::NotConverged { .. } | Error::NoVisits => 2,
                _ => 1,
            },
            CliError::NotConverged { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn build_model(cfg: &ExperimentConfig) -> CliResult<SdeModel> {
    let sigma = cfg.sigma.unwrap_or(1.0);
    let mut model = match cfg.model.as_str() {
        "diffusion" | "ou" => {
            let dim = cfg
                .dim
                .ok_or_else(|| CliError::Validation(format!("model `{}` needs `dim`", cfg.model)))?;
            if cfg.model == "diffusion" {
                SdeModel::pure_diffusion(dim, sigma)?
            } else {
                SdeModel::ornstein_uhlenbeck(dim, sigma)?
            }
        }
        name => {
            if cfg.dim.is_some() || cfg.sigma.is_some() {
                return Err(CliError::Validation(format!(
                    "`dim` and `sigma` only apply to diffusion and ou, not `{name}`"
                )));
            }
            make_builtin(name)?
        }
    };
    if let Some(bounds) = &cfg.domain {
        let domain = Domain::new(bounds.iter().map(|[a, b]| (*a, *b)).collect())?;
        model.set_domain(domain)?;
    }
    Ok(model)
}

fn trajectory(cfg: &ExperimentConfig, role: Role) -> TrajectoryConfig {
    TrajectoryConfig {
        dt: cfg.trajectory.dt,
        burn_in_time: cfg.trajectory.burn_in_time,
        internal_gap: cfg.trajectory.internal_gap,
        seed: seed_for(cfg, role),
    }
}

fn meta(cfg: &ExperimentConfig, command: &str) -> Vec<(&'static str, String)> {
    vec![("command", command.into()), ("model", cfg.model.clone()), ("seed", cfg.seed.to_string())]
}

fn exact_for(model: &SdeModel) -> CliResult<Option<ExactSolution>> {
    if model.has_exact_solution() {
        Ok(Some(ExactSolution::new(model)?))
    } else {
        Ok(None)
    }
}

pub fn sample(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let c = sample_collocation_with_origin(
        &model,
        model.domain(),
        cfg.sample.count,
        cfg.sample.alpha,
        &trajectory(cfg, Role::Collocation),
    )?;
    let mut header: Vec<String> = (0..model.dim()).map(|k| format!("x{k}")).collect();
    header.push("from_trajectory".into());
    let rows: Vec<Vec<f64>> = c
        .points
        .iter()
        .zip(&c.from_trajectory)
        .map(|(p, &t)| p.iter().copied().chain([f64::from(u8::from(t))]).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut m = meta(cfg, "sample");
    m.push(("alpha", cfg.sample.alpha.to_string()));
    io::write_table(&out.join("collocation.csv"), &m, &header, &rows)?;
    Ok(())
}

/// Reference points inside the domain and their densities from the
/// configured sampler.
pub fn reference_set(cfg: &ExperimentConfig, model: &SdeModel) -> CliResult<ReferenceSet> {
    let d = &cfg.density;
    let domain = model.domain();
    let points: Vec<Vec<f64>> = sample_collocation(model, domain, d.points, d.alpha, &trajectory(cfg, Role::ReferencePoints))?
        .into_iter()
        .filter(|p| domain.contains(p))
        .collect();
    let traj = trajectory(cfg, Role::ReferenceDensity);
    let (points, densities): (Vec<Vec<f64>>, Vec<Option<f64>>) = match d.sampler {
        Sampler::Mc => {
            let grid = GridSpec::new(domain.clone(), d.points_per_axis)?;
            let snapped = snap_to_grid(&points, &grid)?;
            let field = estimate_density_full_grid(model, &grid, d.steps, &traj)?;
            let dens = snapped.indices.iter().map(|m| Some(field.values[grid.flat_index(m)])).collect();
            (snapped.points, dens)
        }
        Sampler::McSplit => {
            let grid = GridSpec::new(domain.clone(), d.points_per_axis)?;
            let snapped = snap_to_grid(&points, &grid)?;
            let dens = estimate_density_split(model, &grid, &snapped.points, d.steps, &traj)?;
            (snapped.points, dens.into_iter().map(Some).collect())
        }
        Sampler::Cg => {
            let cg = ConditionalLinearModel::for_builtin(model)?;
            let set = ReferenceSet::new(points);
            let out = cg_reference_densities(&cg, &set, d.horizon, d.radius, &traj)?;
            (set.points, out.density)
        }
        Sampler::Exact | Sampler::ExactNoise => {
            let exact = ExactSolution::new(model)?;
            let mut v: Vec<f64> = points.iter().map(|p| exact.density(p)).collect();
            if d.sampler == Sampler::ExactNoise {
                let mut rng = substream(seed_for(cfg, Role::Noise), Stream::Noise);
                v = inject_multiplicative_noise(&v, d.noise, &mut rng)?;
            }
            (points, v.into_iter().map(Some).collect())
        }
    };
    Ok(ReferenceSet::with_densities(points, densities)?)
}

pub fn density(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let set = reference_set(cfg, &model)?;
    let mut m = meta(cfg, "density");
    m.push(("sampler", format!("{:?}", cfg.density.sampler)));
    io::write_points(&out.join("reference.csv"), &m, &set)?;

    if let Some(exact) = exact_for(&model)? {
        let mut rows = Vec::new();
        for (p, v) in set.observed() {
            let e = exact.density(&p);
            let signed = (v - e) / e;
            rows.push(p.iter().copied().chain([v, e, signed.abs(), signed]).collect::<Vec<f64>>());
        }
        let mut header: Vec<String> = (0..model.dim()).map(|k| format!("x{k}")).collect();
        header.extend(["estimate", "exact", "rel_error", "signed_rel_error"].map(String::from));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        io::write_table(&out.join("errors.csv"), &m, &header, &rows)?;

        let k = model.dim();
        let count = rows.len() as f64;
        let mean_abs = rows.iter().map(|r| r[k + 2]).sum::<f64>() / count;
        let mean_signed = rows.iter().map(|r| r[k + 3]).sum::<f64>() / count;
        io::write_table(
            &out.join("density_summary.csv"),
            &m,
            &["points", "observed", "mean_rel_error", "mean_signed_rel_error"],
            &[vec![set.len() as f64, count, mean_abs, mean_signed]],
        )?;
    }
    Ok(())
}

pub fn grid_solve(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let g = &cfg.grid;
    let grid = GridSpec::new(model.domain().clone(), g.points_per_axis)?;
    let exact = exact_for(&model)?;
    let oracle = exact.as_ref().map(|e| DensityField::from_fn(grid.clone(), |x| e.density(x)));
    let input = match g.input {
        GridInput::Mc => estimate_density_full_grid(&model, &grid, g.steps, &trajectory(cfg, Role::GridInput))?,
        GridInput::ExactNoise => {
            let o = oracle
                .as_ref()
                .ok_or_else(|| CliError::Validation("grid.input = exact-noise needs a model with an exact density".into()))?;
            let mut rng = substream(seed_for(cfg, Role::Noise), Stream::Noise);
            DensityField::new(grid.clone(), inject_multiplicative_noise(&o.values, g.noise, &mut rng)?)?
        }
    };
    let op = assemble_operator(&model, &grid)?;
    let mut report = match g.method {
        GridMethod::Constrained => solve_constrained(&op, &input)?,
        GridMethod::Penalized => solve_unconstrained(&op, &input)?,
    };
    let mut input_error = f64::NAN;
    if let Some(o) = &oracle {
        input_error = discrete_l2_error(&input, o)?;
        report = report.with_oracle(o)?;
    }
    let mut m = meta(cfg, "grid-solve");
    m.push(("method", format!("{:?}", g.method)));
    io::write_field(&out.join("input.csv"), &m, &input)?;
    io::write_field(&out.join("solution.csv"), &m, &report.solution)?;
    io::write_table(
        &out.join("grid_summary.csv"),
        &m,
        &["input_error", "solution_error", "residual_norm", "data_misfit"],
        &[vec![
            input_error,
            report.discrete_l2_error.unwrap_or(f64::NAN),
            report.residual_norm,
            report.data_misfit,
        ]],
    )?;
    Ok(())
}

pub fn train(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let t = &cfg.train;
    let collocation = sample_collocation(
        &model,
        model.domain(),
        t.collocation,
        t.collocation_alpha,
        &trajectory(cfg, Role::Collocation),
    )?;
    let set = match &t.reference_file {
        Some(path) => io::read_points(&resolve(out, path))?,
        None => reference_set(cfg, &model)?,
    };
    if set.dim() != model.dim() {
        return Err(CliError::Validation(format!(
            "reference points have dimension {}, model has {}",
            set.dim(),
            model.dim()
        )));
    }
    let (refs, targets): (Vec<Vec<f64>>, Vec<f64>) = set.observed().into_iter().unzip();
    if refs.is_empty() {
        return Err(CliError::Validation("no reference point carries a density".into()));
    }
    let mut sizes = vec![model.dim()];
    sizes.extend(&t.hidden);
    sizes.push(1);
    let init = init_params(&sizes, seed_for(cfg, Role::Init))?;
    let tc = TrainConfig {
        batch_collocation: t.batch_collocation,
        batch_reference: t.batch_reference.map(|b| b.min(refs.len())),
        max_iters: t.max_iters,
        tol_l1: t.tol_l1,
        tol_l2: t.tol_l2,
        ema_decay: t.ema_decay,
        seed: seed_for(cfg, Role::Shuffle),
        rescale: t.rescale,
        use_residual: t.use_residual,
        adam: AdamHyper { lr: t.lr, beta1: t.beta1, beta2: t.beta2, eps: t.eps },
    };
    let outcome = train_double_shuffle(&model, init, &collocation, &refs, &targets, &tc)?;

    let mut m = meta(cfg, "train");
    m.push(("layers", format!("{sizes:?}")));
    m.push(("converged", outcome.converged.to_string()));
    io::write_points(&out.join("reference.csv"), &m, &set)?;
    io::write_checkpoint(&out.join("checkpoint.csv"), &m, &outcome.params)?;
    io::write_history(&out.join("history.csv"), &m, &outcome.history)?;

    let grid = GridSpec::new(model.domain().clone(), t.eval_points_per_axis)?;
    let field = if model.dim() <= 2 {
        evaluate_on_grid(&outcome.params, &grid)?
    } else {
        let d = model.domain();
        let plane = GridSpec::new(Domain::new(d.bounds()[..2].to_vec())?, t.eval_points_per_axis)?;
        evaluate_slice(&outcome.params, &plane, (0, 1), &d.midpoint())?
    };
    io::write_field(&out.join("field.csv"), &m, &field)?;

    let error = match exact_for(&model)? {
        Some(e) if model.dim() <= 2 => {
            discrete_l2_error(&field, &DensityField::from_fn(grid.clone(), |x| e.density(x)))?
        }
        _ => f64::NAN,
    };
    let last = outcome.history.last().copied();
    io::write_table(
        &out.join("train_summary.csv"),
        &m,
        &["converged", "iterations", "l1", "l2", "l2_error"],
        &[vec![
            f64::from(u8::from(outcome.converged)),
            outcome.history.len() as f64,
            last.map_or(f64::NAN, |r| r.l1),
            last.map_or(f64::NAN, |r| r.l2),
            error,
        ]],
    )?;
    if !outcome.converged {
        return Err(CliError::NotConverged { iterations: outcome.history.len() });
    }
    Ok(())
}

fn resolve(out: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

pub fn eval(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let params = io::read_checkpoint(&resolve(out, &cfg.eval.checkpoint))?;
    if params.input_dim() != model.dim() {
        return Err(CliError::Validation(format!(
            "checkpoint takes {} inputs, model has dimension {}",
            params.input_dim(),
            model.dim()
        )));
    }
    let e = &cfg.eval;
    let d = model.domain();
    let m = meta(cfg, "eval");
    if e.slice_axes.is_none() && model.dim() <= 2 {
        let grid = GridSpec::new(d.clone(), e.points_per_axis)?;
        io::write_field(&out.join("field.csv"), &m, &evaluate_on_grid(&params, &grid)?)?;
        return Ok(());
    }
    let [a, b] = e.slice_axes.unwrap_or([0, 1]);
    if a >= model.dim() || b >= model.dim() {
        return Err(CliError::Validation(format!("slice axes [{a}, {b}] out of range")));
    }
    let base = e.slice_base.clone().unwrap_or_else(|| d.midpoint());
    if base.len() != model.dim() {
        return Err(CliError::Validation(format!("slice_base needs {} values", model.dim())));
    }
    let plane = GridSpec::new(Domain::new(vec![d.bounds()[a], d.bounds()[b]])?, e.points_per_axis)?;
    let field = evaluate_slice(&params, &plane, (a, b), &base)?;
    io::write_field(&out.join("slice.csv"), &m, &field)?;
    Ok(())
}

pub fn qh(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let mut rows = Vec::new();
    for &n in &cfg.qh.grids {
        let grid = GridSpec::new(model.domain().clone(), n)?;
        let q = q_diagnostic(&model, &grid)?;
        rows.push(vec![n as f64, q.h, q.q, q.rank as f64, q.interior_nodes as f64]);
    }
    io::write_table(
        &out.join("qh.csv"),
        &meta(cfg, "qh"),
        &["points_per_axis", "h", "q", "rank", "interior_nodes"],
        &rows,
    )?;
    Ok(())
}

pub fn thm1(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let model = build_model(cfg)?;
    let grids = cfg
        .thm1
        .grids
        .iter()
        .map(|&n| GridSpec::new(model.domain().clone(), n))
        .collect::<Result<Vec<_>, _>>()?;
    let exact = exact_for(&model)?;
    let uniform = |_: &[f64]| 1.0;
    let baseline = match &exact {
        Some(e) => Baseline::Exact(e),
        None => Baseline::Boundary(&uniform),
    };
    let mut rng = substream(seed_for(cfg, Role::Ratio), Stream::Noise);
    let ratios = error_reduction_ratio(&model, &grids, cfg.thm1.zeta, cfg.thm1.trials, Some(baseline), &mut rng)?;
    let rows: Vec<Vec<f64>> = ratios
        .iter()
        .zip(&cfg.thm1.grids)
        .map(|(&(h, r), &n)| vec![n as f64, h, r])
        .collect();
    let mut m = meta(cfg, "thm1");
    m.push(("zeta", cfg.thm1.zeta.to_string()));
    m.push(("trials", cfg.thm1.trials.to_string()));
    io::write_table(&out.join("thm1.csv"), &m, &["points_per_axis", "h", "ratio"], &rows)?;
    Ok(())
}
