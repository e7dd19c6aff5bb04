use pbpk_core::de::{default_de_solver, fit_de, sse_objective, DeConfig};
use pbpk_core::model::{ModelParams, ModelVariant, ParamName};
use pbpk_core::ode::{synthesize_dataset, PlasmaSpec};
use pbpk_core::train::EstimationSpec;

fn dataset(plasma: &PlasmaSpec, points: usize) -> pbpk_core::data::ConcentrationSeries<f64> {
    synthesize_dataset(&ModelParams::default(), plasma, ModelVariant::Literal, points, 48.0, 0.0, 0).unwrap()
}

#[test]
fn sse_vanishes_at_truth_and_grows_away_from_it() {
    let data = dataset(&PlasmaSpec::default(), 50);
    let plasma = data.plasma_profile().unwrap();
    let reference = ModelParams::<f64>::default();
    let spec = EstimationSpec::from_reference(&reference, &ParamName::DEFAULT_FREE, 0.5, 2.0).unwrap();
    let truth: Vec<f64> = ParamName::DEFAULT_FREE.iter().map(|&n| reference.get(n)).collect();
    let solver = default_de_solver(data.times());
    assert!(sse_objective(&truth, &spec, &data, &plasma, ModelVariant::Literal, &solver) < 1e-12);
    let mut doubled = truth.clone();
    doubled[0] *= 2.0;
    assert!(sse_objective(&doubled, &spec, &data, &plasma, ModelVariant::Literal, &solver) > 0.0);

    let zero = dataset(&PlasmaSpec::zero(), 50);
    let zero_plasma = zero.plasma_profile().unwrap();
    assert_eq!(sse_objective(&doubled, &spec, &zero, &zero_plasma, ModelVariant::Literal, &solver), 0.0);
}

#[test]
fn single_free_volume_is_recovered() {
    let data = dataset(&PlasmaSpec::default(), 100);
    let reference = ModelParams::<f64>::default();
    let spec = EstimationSpec::from_reference(&reference, &[ParamName::Vscsf], 0.5, 2.0).unwrap();
    let cfg = DeConfig { max_generations: 200, ..DeConfig::default() };
    let (res, _) = fit_de(&data, &spec, ModelVariant::Literal, &cfg, &default_de_solver(data.times())).unwrap();
    assert!((res.values[0] - reference.system.Vscsf).abs() < 1e-8, "{}", res.values[0]);
}
