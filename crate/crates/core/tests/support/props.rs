use pbpk_core::data::{format_series, parse_series, ConcentrationSeries, Manifest, PlasmaProfile};
use pbpk_core::de::{differential_evolution, DeConfig, EstimationResult};
use pbpk_core::metrics::{auc_values, cmax_tmax_values, half_life_values};
use pbpk_core::model::{assemble_matrix, forcing_gain, rhs, ConcentrationState, ModelParams, ModelVariant, ParamName};
use pbpk_core::nn::{init_network, Activation, Network, NetworkConfig};
use pbpk_core::ode::{solve, InitialState, PlasmaSpec, SolveConfig, SolveMethod};
use pbpk_core::train::{Checkpoint, EstimationSpec};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Runs `test` on `cases` deterministic draws from `strategy`.
fn check<S: Strategy>(name: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    if let Err(e) = runner.run(&strategy, test) {
        panic!("{name}: {e}");
    }
}

pub fn scaled_params(factors: &[f64]) -> ModelParams<f64> {
    let mut p = ModelParams::default();
    for (name, f) in ParamName::ALL.iter().zip(factors) {
        let v: f64 = p.get(*name) * f;
        p.set(*name, v);
    }
    for fu in [&mut p.drug.fubb, &mut p.drug.fubm, &mut p.drug.fuccsf, &mut p.drug.lam_bb, &mut p.drug.lam_bm, &mut p.drug.lam_ccsf] {
        *fu = fu.min(1.0);
    }
    p
}

fn variant() -> impl Strategy<Value = ModelVariant> {
    prop_oneof![Just(ModelVariant::Literal), Just(ModelVariant::MassConsistent)]
}

pub fn rhs_terms_equal_matrix_form() {
    let strategy = (
        prop::collection::vec(0.5f64..2.0, 25),
        prop::array::uniform4(0.0f64..0.1),
        0.0f64..48.0,
        variant(),
    );
    let plasma = PlasmaSpec::default().sample(&SolveConfig::uniform_grid(97, 48.0)).unwrap();
    check("rhs vs matrix", 300, strategy, |(factors, y, t, v)| {
        let p = scaled_params(&factors);
        let direct = rhs(t, &ConcentrationState(y), &p, &plasma, v);
        let mut via = assemble_matrix(&p, v).apply(&y);
        via[0] += forcing_gain(&p) * plasma.interp(t);
        for i in 0..4 {
            let scale = direct.0[i].abs().max(via[i].abs()).max(1.0);
            prop_assert!((direct.0[i] - via[i]).abs() <= 1e-12 * scale, "row {}: {} vs {}", i, direct.0[i], via[i]);
        }
        Ok(())
    });
}

pub fn balanced_spinal_flows_conserve_spinal_row() {
    let strategy = (0.01f64..0.2, 0.0f64..0.05, 0.0f64..0.05, variant());
    check("spinal flow balance", 300, strategy, |(vscsf, qsout, qssink, v)| {
        let mut p = ModelParams::<f64>::default();
        p.system.Vscsf = vscsf;
        p.system.Qsout = qsout;
        p.system.Qssink = qssink;
        p.system.Qsin = qsout + qssink;
        let row = assemble_matrix(&p, v).0[3];
        let scale = row[2].abs().max(row[3].abs()).max(f64::MIN_POSITIVE);
        prop_assert!((row[2] + row[3]).abs() <= 1e-12 * scale);
        prop_assert_eq!(row[0], 0.0);
        prop_assert_eq!(row[1], 0.0);
        Ok(())
    });
    let p = ModelParams::<f64>::default();
    assert!((p.system.Qsin - p.system.Qsout - p.system.Qssink).abs() < 1e-15);
}

pub fn interpolation_is_exact_on_affine_profiles() {
    let strategy = (-1.0f64..1.0, 1.0f64..2.0, prop::collection::btree_set(0u32..1000, 2..40), 0.0f64..1.0);
    check("interpolation", 300, strategy, |(slope, icpt, knots, probe)| {
        let times: Vec<f64> = knots.iter().map(|&k| k as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| icpt + slope * t / 50.0).collect();
        let prof = PlasmaProfile::new(times.clone(), values.clone()).unwrap();
        for (t, v) in times.iter().zip(&values) {
            prop_assert_eq!(prof.interp(*t), *v);
        }
        let t = times[0] + probe * (times[times.len() - 1] - times[0]);
        let exact = icpt + slope * t / 50.0;
        prop_assert!((prof.interp(t) - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        Ok(())
    });
}

pub fn auc_is_additive() {
    let strategy = (prop::collection::vec(0.0f64..10.0, 3..100), 0.0f64..1.0);
    check("auc additivity", 300, strategy, |(vals, split)| {
        let n = vals.len();
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.37).collect();
        let s = 1 + ((n - 2) as f64 * split) as usize;
        let whole = auc_values(&t, &vals).unwrap();
        let parts = auc_values(&t[..=s], &vals[..=s]).unwrap() + auc_values(&t[s..], &vals[s..]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(f64::MIN_POSITIVE));
        Ok(())
    });
}

pub fn metrics_scale_equivariant() {
    let strategy = (0.01f64..100.0, 0.01f64..0.5, 1usize..150);
    check("metric scaling", 200, strategy, |(c, k, peak_at)| {
        let t: Vec<f64> = (0..200).map(|i| 48.0 * i as f64 / 199.0).collect();
        let base: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &x)| if i < peak_at { x / t[peak_at] } else { (-k * (x - t[peak_at])).exp() })
            .collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
        let (a1, a2) = (auc_values(&t, &base).unwrap(), auc_values(&t, &scaled).unwrap());
        prop_assert!((a2 - c * a1).abs() <= 1e-12 * (c * a1));
        let ((m1, t1), (m2, t2)) = (cmax_tmax_values(&t, &base).unwrap(), cmax_tmax_values(&t, &scaled).unwrap());
        prop_assert!((m2 - c * m1).abs() <= 1e-12 * c * m1);
        prop_assert_eq!(t1, t2);
        match (half_life_values(&t, &base, 0.25).unwrap(), half_life_values(&t, &scaled, 0.25).unwrap()) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * a),
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
        Ok(())
    });
}

pub fn auc_trapezoid_error_shrinks_fourfold() {
    let exact = (1.0 - (-4.8f64).exp()) / 0.1;
    let err = |n: usize| {
        let t: Vec<f64> = (0..n).map(|i| 48.0 * i as f64 / (n - 1) as f64).collect();
        let v: Vec<f64> = t.iter().map(|x| (-0.1 * x).exp()).collect();
        (auc_values(&t, &v).unwrap() - exact).abs()
    };
    let ratio = err(51) / err(101);
    assert!((3.0..=5.0).contains(&ratio), "error ratio {ratio}");
}

pub fn de_best_never_increases() {
    check("de monotone best", 40, (0u64..10_000, 1usize..5), |(seed, dim)| {
        let rosen = |x: &[f64]| -> f64 {
            x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum::<f64>() + x[0].abs()
        };
        let cfg = DeConfig { max_generations: 30, seed, ..DeConfig::default() };
        let r = differential_evolution(rosen, &vec![(-2.0, 2.0); dim], &cfg).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*r.history.last().unwrap(), r.value);
        prop_assert_eq!(rosen(&r.best), r.value);
        Ok(())
    });
}

pub fn superposition_of_forcing() {
    let p = ModelParams::<f64>::default();
    let grid = SolveConfig::uniform_grid(97, 48.0);
    let plasma = PlasmaSpec::default().sample(&grid).unwrap();
    let run = |pl: &PlasmaProfile<f64>| solve(&p, pl, ModelVariant::Literal, &InitialState::zero(), &SolveConfig::expm(grid.clone())).unwrap();
    let base = run(&plasma);
    for c in [0.5, 3.0, 17.0] {
        let scaled = run(&plasma.scaled(c));
        for (a, b) in base.columns().iter().zip(scaled.columns()) {
            let peak = a.iter().cloned().fold(0.0, f64::max) * c;
            for (x, y) in a.iter().zip(b) {
                assert!((c * x - y).abs() <= 1e-10 * peak);
            }
        }
    }
}

pub fn series_text_round_trip() {
    let strategy = (prop::collection::vec(prop::array::uniform5(0.0f64..1e3), 1..30), any::<bool>());
    check("series round trip", 200, strategy, |(rows, with_plasma)| {
        let times: Vec<f64> = (0..rows.len()).map(|i| i as f64 * 0.25 + rows[0][0] * 1e-3).collect();
        let cols: [Vec<f64>; 4] = std::array::from_fn(|c| rows.iter().map(|r| r[c]).collect());
        let plasma = with_plasma.then(|| rows.iter().map(|r| r[4]).collect());
        let s = ConcentrationSeries::new(times, cols, plasma).unwrap();
        let back: ConcentrationSeries<f64> = parse_series(format_series(&s).as_bytes()).unwrap();
        prop_assert_eq!(back, s);
        Ok(())
    });
}

pub fn network_text_round_trip() {
    let act = prop_oneof![
        Just(Activation::Tanh),
        Just(Activation::Sigmoid),
        Just(Activation::Relu),
        (0.5f64..3.0).prop_map(|omega| Activation::Sin { omega }),
    ];
    check("network round trip", 100, (1usize..4, 1usize..12, any::<u64>(), act), |(layers, neurons, seed, activation)| {
        let cfg = NetworkConfig { hidden_layers: layers, neurons, activation, seed, ..NetworkConfig::default() };
        let net: Network<f64> = init_network(&cfg).unwrap();
        let back = Network::<f64>::from_text(&net.to_text()).unwrap();
        prop_assert_eq!(back.flatten(), net.flatten());
        prop_assert_eq!(back.activation(), net.activation());
        Ok(())
    });
}

pub fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    check("checkpoint round trip", 100, (prop::collection::vec(-30.0f64..30.0, 6), 0usize..1_000_000), |(raws, iter)| {
        let fresh = || EstimationSpec::from_reference(&ModelParams::default(), &ParamName::DEFAULT_FREE, 0.5, 2.0).unwrap();
        let mut spec = fresh();
        spec.set_raws(&raws);
        let ck = Checkpoint::from_spec(&spec, iter, ModelVariant::Literal);
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        prop_assert_eq!(&loaded, &ck);
        let mut restored = fresh();
        loaded.apply(&mut restored).unwrap();
        prop_assert_eq!(restored.raws(), spec.raws());
        Ok(())
    });
}

pub fn estimation_result_round_trip() {
    let strategy = (prop::collection::vec(1e-6f64..10.0, 1..7), 0.0f64..1.0, 0.0f64..1e4);
    check("result round trip", 200, strategy, |(values, objective, seconds)| {
        let names = ParamName::ALL[..values.len()].to_vec();
        let r = EstimationResult { method: "DE".into(), names, values, reference: None, objective, seconds };
        let back = EstimationResult::parse_csv(r.to_csv().as_bytes()).unwrap();
        prop_assert_eq!(back, r);
        Ok(())
    });
}

pub fn manifest_file_round_trip() {
    let m = Manifest {
        points: 17,
        horizon: 12.5,
        noise_sd: 1e-3,
        seed: 9,
        variant: ModelVariant::MassConsistent,
        solver: SolveMethod::Dopri45,
        plasma: PlasmaSpec { ka: 2.0, ke: 0.3, peak: 0.1 },
        reference: scaled_params(&[1.1; 25]),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    m.save(&path).unwrap();
    assert_eq!(Manifest::load(&path).unwrap(), m);
}

pub const ALL: [(&str, fn()); 14] = [
    ("rhs term form equals matrix form", rhs_terms_equal_matrix_form),
    ("spinal flow balance", balanced_spinal_flows_conserve_spinal_row),
    ("interpolation exactness", interpolation_is_exact_on_affine_profiles),
    ("auc additivity", auc_is_additive),
    ("metric scaling", metrics_scale_equivariant),
    ("auc convergence", auc_trapezoid_error_shrinks_fourfold),
    ("de monotone best objective", de_best_never_increases),
    ("superposition", superposition_of_forcing),
    ("series round trip", series_text_round_trip),
    ("network round trip", network_text_round_trip),
    ("checkpoint round trip", checkpoint_round_trip),
    ("result round trip", estimation_result_round_trip),
    ("manifest round trip", manifest_file_round_trip),
    ("solver agreement", super::solvers::assert_solver_agreement),
];
