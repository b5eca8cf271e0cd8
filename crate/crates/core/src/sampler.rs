//! Euler-Maruyama trajectories, collocation sampling and Monte Carlo density
//! estimation (full grid and the memory-light split-index variant).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Domain, GridSpec};
use crate::models::SdeModel;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    /// Burn-in time `t0` discarded before sampling.
    pub burn_in_time: f64,
    /// Time `s0` between retained trajectory samples.
    pub internal_gap: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { dt: 1e-3, burn_in_time: 10.0, internal_gap: 1e-2, seed: 0 }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.burn_in_time >= 0.0) {
            return Err(Error::InvalidArgument("burn-in time must be nonnegative".into()));
        }
        if !(self.internal_gap >= self.dt) {
            return Err(Error::InvalidArgument(format!(
                "internal gap {} must be at least dt {}",
                self.internal_gap, self.dt
            )));
        }
        Ok(())
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in_time / self.dt).round() as u64
    }

    pub fn gap_steps(&self) -> u64 {
        ((self.internal_gap / self.dt).round() as u64).max(1)
    }
}

/// One Euler-Maruyama step `x + f(x) dt + sigma sqrt(dt) xi`.
pub fn em_step<R: Rng + ?Sized>(model: &SdeModel, x: &[f64], dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be nonnegative, got {dt}")));
    }
    let n = model.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut out = x.to_vec();
    let mut drift = vec![0.0; n];
    let mut xi = vec![0.0; n];
    step_in_place(model, &mut out, dt, rng, &mut drift, &mut xi);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { step: 1, state: out });
    }
    Ok(out)
}

#[inline]
fn step_in_place<R: Rng + ?Sized>(
    model: &SdeModel,
    x: &mut [f64],
    dt: f64,
    rng: &mut R,
    drift: &mut [f64],
    xi: &mut [f64],
) {
    let n = x.len();
    model.drift(x, drift);
    for v in xi.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let sq = dt.sqrt();
    let l = model.noise_factor();
    for i in 0..n {
        let mut noise = 0.0;
        for j in 0..n {
            noise += l[(i, j)] * xi[j];
        }
        x[i] += drift[i] * dt + sq * noise;
    }
}

/// A single sequential Euler-Maruyama trajectory with its own random stream.
pub struct Trajectory<'a> {
    model: &'a SdeModel,
    state: Vec<f64>,
    dt: f64,
    rng: ChaCha8Rng,
    steps: u64,
    drift: Vec<f64>,
    xi: Vec<f64>,
}

impl<'a> Trajectory<'a> {
    pub fn new(model: &'a SdeModel, start: Vec<f64>, dt: f64, rng: ChaCha8Rng) -> Result<Self> {
        if start.len() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: start.len() });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let n = model.dim();
        Ok(Self { model, state: start, dt, rng, steps: 0, drift: vec![0.0; n], xi: vec![0.0; n] })
    }

    /// Starts at the midpoint of `start_domain` on the trajectory substream of
    /// `cfg.seed` and runs the burn-in.
    pub fn burned_in(model: &'a SdeModel, start_domain: &Domain, cfg: &TrajectoryConfig) -> Result<Self> {
        cfg.validate()?;
        let mut traj = Self::new(model, start_domain.midpoint(), cfg.dt, substream(cfg.seed, Stream::Trajectory))?;
        traj.advance(cfg.burn_in_steps())?;
        traj.steps = 0;
        Ok(traj)
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self) -> Result<&[f64]> {
        step_in_place(self.model, &mut self.state, self.dt, &mut self.rng, &mut self.drift, &mut self.xi);
        self.steps += 1;
        if self.state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: self.steps, state: self.state.clone() });
        }
        Ok(&self.state)
    }

    pub fn advance(&mut self, steps: u64) -> Result<&[f64]> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(&self.state)
    }
}

/// Collocation points together with which of them came from the trajectory.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub points: Vec<Vec<f64>>,
    pub from_trajectory: Vec<bool>,
}

/// Draws `count` points: with probability `alpha` the next trajectory state
/// (spaced by the internal gap), otherwise a uniform point of `domain`.
/// Trajectory points outside `domain` are kept.
pub fn sample_collocation_with_origin(
    model: &SdeModel,
    domain: &Domain,
    count: usize,
    alpha: f64,
    cfg: &TrajectoryConfig,
) -> Result<Collocation> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("collocation count must be at least 1".into()));
    }
    if domain.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: domain.dim() });
    }
    let mut traj = Trajectory::burned_in(model, domain, cfg)?;
    let gap = cfg.gap_steps();
    let mut coin = substream(cfg.seed, Stream::Collocation);
    let mut points = Vec::with_capacity(count);
    let mut from_trajectory = Vec::with_capacity(count);
    for _ in 0..count {
        let c: f64 = coin.random();
        if c <= alpha && alpha > 0.0 {
            points.push(traj.advance(gap)?.to_vec());
            from_trajectory.push(true);
        } else {
            points.push(domain.sample_uniform(&mut coin));
            from_trajectory.push(false);
        }
    }
    Ok(Collocation { points, from_trajectory })
}

pub fn sample_collocation(
    model: &SdeModel,
    domain: &Domain,
    count: usize,
    alpha: f64,
    cfg: &TrajectoryConfig,
) -> Result<Vec<Vec<f64>>> {
    Ok(sample_collocation_with_origin(model, domain, count, alpha, cfg)?.points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnappedPoints {
    pub points: Vec<Vec<f64>>,
    pub indices: Vec<Vec<usize>>,
}

/// Maps each point to its nearest grid node, dropping repeated nodes (first
/// occurrence wins).
pub fn snap_to_grid(points: &[Vec<f64>], grid: &GridSpec) -> Result<SnappedPoints> {
    let n = grid.dim();
    let last = grid.points_per_axis() - 1;
    let mut seen = std::collections::HashSet::new();
    let mut out = SnappedPoints { points: Vec::new(), indices: Vec::new() };
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if !grid.domain().contains(p) {
            return Err(Error::OutsideDomain(p.clone()));
        }
        // Points in the last half box (b - h/2, b] round to index N; the
        // closest existing node is N - 1.
        let multi: Vec<usize> = (0..n)
            .map(|axis| {
                let t = ((p[axis] - grid.domain().lower(axis)) / grid.h(axis) + 0.5).floor();
                (t.max(0.0) as usize).min(last)
            })
            .collect();
        if seen.insert(grid.flat_index(&multi)) {
            out.points.push(grid.node(&multi));
            out.indices.push(multi);
        }
    }
    Ok(out)
}

/// Histogram estimate of the invariant density on every node of `grid` from one
/// trajectory of `steps` post-burn-in steps. Samples outside the grid boxes are
/// dropped but still count towards `steps`.
pub fn estimate_density_full_grid(
    model: &SdeModel,
    grid: &GridSpec,
    steps: u64,
    cfg: &TrajectoryConfig,
) -> Result<DensityField> {
    let n = grid.dim();
    if n > 3 {
        return Err(Error::SizeGuard(format!(
            "full-grid estimation is limited to 3 dimensions (got {n}); use estimate_density_split"
        )));
    }
    if n != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: n });
    }
    let counts = full_grid_counts(model, grid, steps, cfg)?;
    let scale = 1.0 / (steps.max(1) as f64 * grid.cell_volume());
    let values = counts.iter().map(|&c| c as f64 * scale).collect();
    DensityField::new(grid.clone(), values)
}

fn full_grid_counts(model: &SdeModel, grid: &GridSpec, steps: u64, cfg: &TrajectoryConfig) -> Result<Vec<u64>> {
    let n = grid.dim();
    let mut counts = vec![0u64; grid.num_nodes()];
    let mut traj = Trajectory::burned_in(model, grid.domain(), cfg)?;
    let strides: Vec<usize> = (0..n).map(|a| grid.stride(a)).collect();
    'outer: for _ in 0..steps {
        let x = traj.step()?;
        let mut flat = 0;
        for axis in 0..n {
            match grid.axis_bin(axis, x[axis]) {
                Some(k) => flat += k * strides[axis],
                None => continue 'outer,
            }
        }
        counts[flat] += 1;
    }
    Ok(counts)
}

/// Index lists for the split estimator: bucket `k` of the first half holds the
/// reference points whose first `n/2` indices encode to `k`, bucket `N^{n/2} + k`
/// likewise for the last `n/2` indices. Lists are sorted.
#[derive(Debug, Clone)]
pub struct SplitIndex {
    half: usize,
    points_per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl SplitIndex {
    pub fn build(grid: &GridSpec, reference: &[Vec<f64>]) -> Result<Self> {
        let n = grid.dim();
        if n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "split estimator needs an even dimension, got {n}"
            )));
        }
        let half = n / 2;
        let npa = grid.points_per_axis();
        let per_half = npa
            .checked_pow(half as u32)
            .ok_or_else(|| Error::SizeGuard("split index does not fit in memory".into()))?;
        let mut buckets = vec![Vec::new(); 2 * per_half];
        for (j, y) in reference.iter().enumerate() {
            let multi = aligned_index(grid, y)?;
            let (k1, k2) = encode_halves(&multi, half, npa);
            buckets[k1].push(j as u32);
            buckets[per_half + k2].push(j as u32);
        }
        // pushed in increasing j, so already sorted
        Ok(Self { half, points_per_axis: npa, buckets })
    }

    /// The unique reference point sharing both half-buckets with `multi`, if
    /// the intersection has exactly one element.
    pub fn lookup(&self, multi: &[usize]) -> Option<u32> {
        let (k1, k2) = encode_halves(multi, self.half, self.points_per_axis);
        let per_half = self.buckets.len() / 2;
        let a = &self.buckets[k1];
        let b = &self.buckets[per_half + k2];
        let (mut i, mut j) = (0, 0);
        let mut found = None;
        let mut hits = 0;
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    found = Some(a[i]);
                    hits += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        if hits == 1 {
            found
        } else {
            None
        }
    }
}

fn encode_halves(multi: &[usize], half: usize, npa: usize) -> (usize, usize) {
    let k1 = multi[..half].iter().fold(0, |acc, &k| acc * npa + k);
    let k2 = multi[half..].iter().fold(0, |acc, &k| acc * npa + k);
    (k1, k2)
}

fn aligned_index(grid: &GridSpec, y: &[f64]) -> Result<Vec<usize>> {
    if y.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: y.len() });
    }
    let multi = grid.nearest_index(y).ok_or_else(|| Error::NotGridAligned(y.to_vec()))?;
    for (axis, &k) in multi.iter().enumerate() {
        if (grid.coordinate(axis, k) - y[axis]).abs() > 1e-9 * grid.h(axis) {
            return Err(Error::NotGridAligned(y.to_vec()));
        }
    }
    Ok(multi)
}

/// Raw visit counts of the split estimator.
pub fn split_counts(
    model: &SdeModel,
    grid: &GridSpec,
    reference: &[Vec<f64>],
    steps: u64,
    cfg: &TrajectoryConfig,
) -> Result<Vec<u64>> {
    if grid.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: grid.dim() });
    }
    let index = SplitIndex::build(grid, reference)?;
    let mut eta = vec![0u64; reference.len()];
    let mut traj = Trajectory::burned_in(model, grid.domain(), cfg)?;
    let mut multi = vec![0usize; grid.dim()];
    'outer: for _ in 0..steps {
        let x = traj.step()?;
        for (axis, slot) in multi.iter_mut().enumerate() {
            match grid.axis_bin(axis, x[axis]) {
                Some(k) => *slot = k,
                None => continue 'outer,
            }
        }
        if let Some(j) = index.lookup(&multi) {
            eta[j as usize] += 1;
        }
    }
    Ok(eta)
}

/// Densities at grid-aligned reference points from one trajectory, using the
/// split index; each count is normalized by `steps` and the box volume.
pub fn estimate_density_split(
    model: &SdeModel,
    grid: &GridSpec,
    reference: &[Vec<f64>],
    steps: u64,
    cfg: &TrajectoryConfig,
) -> Result<Vec<f64>> {
    let eta = split_counts(model, grid, reference, steps, cfg)?;
    let scale = 1.0 / (steps.max(1) as f64 * grid.cell_volume());
    Ok(eta.iter().map(|&c| c as f64 * scale).collect())
}

/// Multiplies each density by an independent draw from `U[1 - alpha, 1 + alpha]`.
pub fn inject_multiplicative_noise<R: Rng + ?Sized>(
    densities: &[f64],
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("noise level must lie in [0, 1), got {alpha}")));
    }
    Ok(densities
        .iter()
        .map(|&v| {
            let r = 1.0 - alpha + 2.0 * alpha * rng.random::<f64>();
            v * r
        })
        .collect())
}

/// Reference points with (possibly missing) density values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub points: Vec<Vec<f64>>,
    pub densities: Option<Vec<Option<f64>>>,
}

impl ReferenceSet {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self { points, densities: None }
    }

    pub fn with_densities(points: Vec<Vec<f64>>, densities: Vec<Option<f64>>) -> Result<Self> {
        if points.len() != densities.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: densities.len() });
        }
        Ok(Self { points, densities: Some(densities) })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// Points that carry a density, with that density.
    pub fn observed(&self) -> Vec<(Vec<f64>, f64)> {
        match &self.densities {
            None => Vec::new(),
            Some(d) => self
                .points
                .iter()
                .zip(d)
                .filter_map(|(p, v)| v.map(|v| (p.clone(), v)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SdeModel;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn frozen(dim: usize) -> SdeModel {
        SdeModel::new(
            "frozen",
            Arc::new(|_, o: &mut [f64]| o.fill(0.0)),
            Arc::new(|_| 0.0),
            DMatrix::zeros(dim, dim),
            Domain::cube(dim, 0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_euler_without_noise() {
        let m = SdeModel::ornstein_uhlenbeck(1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = em_step(&m, &[1.0], 0.1, &mut rng).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let m = SdeModel::pure_diffusion(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(em_step(&m, &[0.3, 0.4], 0.0, &mut rng).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn blow_up_is_reported_with_state() {
        let m = SdeModel::new(
            "explode",
            Arc::new(|x: &[f64], o: &mut [f64]| o[0] = x[0] * x[0] * 1e300),
            Arc::new(|x: &[f64]| 2.0 * x[0]),
            DMatrix::zeros(1, 1),
            Domain::cube(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match em_step(&m, &[1e10], 1.0, &mut rng) {
            Err(Error::BlowUp { state, .. }) => assert!(!state[0].is_finite()),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_config_validation() {
        let mut cfg = TrajectoryConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.internal_gap = cfg.dt / 2.0;
        assert!(cfg.validate().is_err());
        cfg = TrajectoryConfig { dt: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snapping_rounds_and_dedups() {
        let grid = GridSpec::new(Domain::new(vec![(0.0, 1.0)]).unwrap(), 10).unwrap();
        let s = snap_to_grid(&[vec![0.14], vec![0.3], vec![0.11], vec![0.09]], &grid).unwrap();
        assert_eq!(s.indices, vec![vec![1], vec![3]]);
        assert!((s.points[0][0] - 0.1).abs() < 1e-15);
        // on a node already
        let on = snap_to_grid(&[vec![0.5]], &grid).unwrap();
        assert_eq!(on.points, vec![vec![0.5]]);
        assert!(matches!(snap_to_grid(&[vec![1.5]], &grid), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn frozen_process_puts_all_mass_in_one_box() {
        let m = frozen(2);
        let grid = GridSpec::new(m.domain().clone(), 10).unwrap();
        // the midpoint (0.5, 0.5) is node (5, 5)
        let cfg = TrajectoryConfig { burn_in_time: 0.0, ..Default::default() };
        let field = estimate_density_full_grid(&m, &grid, 1000, &cfg).unwrap();
        let nonzero: Vec<_> = field.values.iter().enumerate().filter(|(_, v)| **v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, grid.flat_index(&[5, 5]));
        assert!((field.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_grid_guard_rejects_high_dimension() {
        let m = frozen(4);
        let grid = GridSpec::new(m.domain().clone(), 4).unwrap();
        assert!(matches!(
            estimate_density_full_grid(&m, &grid, 10, &TrajectoryConfig::default()),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn split_requires_grid_aligned_points() {
        let m = frozen(2);
        let grid = GridSpec::new(m.domain().clone(), 10).unwrap();
        let r = split_counts(&m, &grid, &[vec![0.15, 0.2]], 10, &TrajectoryConfig::default());
        assert!(matches!(r, Err(Error::NotGridAligned(_))));
    }

    #[test]
    fn split_zero_steps_gives_zero() {
        let m = frozen(2);
        let grid = GridSpec::new(m.domain().clone(), 10).unwrap();
        let d = estimate_density_split(&m, &grid, &[vec![0.5, 0.5]], 0, &TrajectoryConfig::default()).unwrap();
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn split_lookup_requires_both_halves() {
        let grid = GridSpec::new(Domain::cube(2, 0.0, 1.0).unwrap(), 10).unwrap();
        // share the first half-index only
        let refs = vec![grid.node(&[2, 3]), grid.node(&[2, 7])];
        let index = SplitIndex::build(&grid, &refs).unwrap();
        assert_eq!(index.lookup(&[2, 3]), Some(0));
        assert_eq!(index.lookup(&[2, 7]), Some(1));
        assert_eq!(index.lookup(&[2, 5]), None);
        assert_eq!(index.lookup(&[4, 3]), None);
    }

    #[test]
    fn split_rejects_odd_dimension() {
        let grid = GridSpec::new(Domain::cube(3, 0.0, 1.0).unwrap(), 5).unwrap();
        assert!(SplitIndex::build(&grid, &[]).is_err());
    }

    #[test]
    fn noise_injection_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = vec![2.0; 1000];
        assert_eq!(inject_multiplicative_noise(&v, 0.0, &mut rng).unwrap(), v);
        let noisy = inject_multiplicative_noise(&v, 0.5, &mut rng).unwrap();
        assert!(noisy.iter().all(|&x| (1.0..=3.0).contains(&x)));
        assert!(inject_multiplicative_noise(&v, 1.0, &mut rng).is_err());
    }

    #[test]
    fn noise_ratio_mean_is_one() {
        let alpha = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = vec![1.0; 10_000];
        let noisy = inject_multiplicative_noise(&v, alpha, &mut rng).unwrap();
        let mean = noisy.iter().sum::<f64>() / noisy.len() as f64;
        let tol = 3.0 * (alpha / 3f64.sqrt()) / 100.0;
        assert!((mean - 1.0).abs() < tol, "{mean}");
    }

    #[test]
    fn collocation_count_and_uniform_mode() {
        let m = SdeModel::ornstein_uhlenbeck(2, 1.0).unwrap();
        let d = Domain::new(vec![(-1.0, 3.0), (0.0, 2.0)]).unwrap();
        let cfg = TrajectoryConfig { burn_in_time: 1.0, seed: 4, ..Default::default() };
        assert_eq!(sample_collocation(&m, &d, 5, 0.6, &cfg).unwrap().len(), 5);
        let pts = sample_collocation(&m, &d, 4000, 0.0, &cfg).unwrap();
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / pts.len() as f64;
            let se = d.width(axis) / 12f64.sqrt() / (pts.len() as f64).sqrt();
            assert!((mean - d.midpoint()[axis]).abs() < 3.0 * se);
            assert!(pts.iter().all(|p| d.contains(p)));
        }
    }

    #[test]
    fn reference_set_lengths_checked() {
        assert!(ReferenceSet::with_densities(vec![vec![0.0]], vec![]).is_err());
        let r = ReferenceSet::with_densities(vec![vec![0.0], vec![1.0]], vec![Some(0.5), None]).unwrap();
        assert_eq!(r.observed(), vec![(vec![0.0], 0.5)]);
    }
}
