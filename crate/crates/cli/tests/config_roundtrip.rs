use fpsolve_cli::config::{GridInput, GridMethod, Sampler};
use fpsolve_cli::ExperimentConfig;
use proptest::prelude::*;

fn sampler() -> impl Strategy<Value = Sampler> {
    prop_oneof![
        Just(Sampler::Mc),
        Just(Sampler::McSplit),
        Just(Sampler::Cg),
        Just(Sampler::Exact),
        Just(Sampler::ExactNoise)
    ]
}

prop_compose! {
    fn config()(
        model in prop_oneof![Just("ring2d"), Just("gibbs2d"), Just("ring4d"), Just("turb6d")],
        seed in any::<u64>(),
        dt in 1e-5f64..1e-2,
        gap_factor in 1.0f64..20.0,
        burn in 0.0f64..100.0,
        alpha in 0.0f64..=1.0,
        noise in 0.0f64..0.99,
        sampler in sampler(),
        points in 1usize..5000,
        steps in 1u64..10_000_000,
        n in 3usize..400,
        penalized in any::<bool>(),
        hidden in prop::collection::vec(1usize..200, 0..6),
        lr in 1e-6f64..1.0,
        batch_ref in prop::option::of(1usize..512),
        rescale in any::<bool>(),
        use_residual in any::<bool>(),
        slice in prop::option::of((0usize..3, 3usize..6)),
        grids in prop::collection::vec(3usize..200, 1..6),
        zeta in 1e-4f64..10.0,
    ) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(model);
        c.seed = seed;
        c.trajectory.dt = dt;
        c.trajectory.internal_gap = dt * gap_factor;
        c.trajectory.burn_in_time = burn;
        c.sample.alpha = alpha;
        c.density.sampler = sampler;
        c.density.points = points;
        c.density.noise = noise;
        c.density.steps = steps;
        c.grid.points_per_axis = n;
        c.grid.method = if penalized { GridMethod::Penalized } else { GridMethod::Constrained };
        c.grid.input = if rescale { GridInput::ExactNoise } else { GridInput::Mc };
        c.train.hidden = hidden;
        c.train.lr = lr;
        c.train.batch_reference = batch_ref;
        c.train.rescale = rescale;
        c.train.use_residual = use_residual;
        c.eval.slice_axes = slice.map(|(a, b)| [a, b]);
        c.qh.grids = grids.clone();
        c.thm1.grids = grids;
        c.thm1.zeta = zeta;
        c
    }
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(cfg in config()) {
        let text = cfg.to_toml();
        let once = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&once, &cfg);
        let twice = ExperimentConfig::parse(&once.to_toml()).unwrap();
        prop_assert_eq!(twice, once);
    }
}

#[test]
fn generic_models_round_trip_with_dimension() {
    let mut cfg = ExperimentConfig::new("ou");
    cfg.dim = Some(3);
    cfg.sigma = Some(0.5);
    cfg.domain = Some(vec![[-1.0, 1.0]; 3]);
    assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
}
