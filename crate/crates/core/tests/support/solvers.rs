use pbpk_core::data::ConcentrationSeries;
use pbpk_core::model::{Compartment, ModelParams, ModelVariant};
use pbpk_core::ode::{solve, InitialState, PlasmaSpec, SolveConfig};

/// `max |a − b| / max |b|` per compartment.
pub fn max_rel_err(a: &ConcentrationSeries<f64>, b: &ConcentrationSeries<f64>) -> [f64; 4] {
    Compartment::ALL.map(|c| {
        let (x, y) = (a.column(c), b.column(c));
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / scale
    })
}

/// Worst relative errors of RK4 (h = 0.001) and DOPRI45 (tol 1e-10) against
/// the exact propagator on the default 48 h problem.
pub fn solver_errors() -> (f64, f64) {
    let grid = SolveConfig::uniform_grid(200, 48.0);
    let plasma = PlasmaSpec::default().sample(&grid).unwrap();
    let p = ModelParams::<f64>::default();
    let v = ModelVariant::Literal;
    let init = InitialState::zero();
    let exact = solve(&p, &plasma, v, &init, &SolveConfig::expm(grid.clone())).unwrap();
    let rk = solve(&p, &plasma, v, &init, &SolveConfig::rk4(1e-3, grid.clone())).unwrap();
    let dp = solve(&p, &plasma, v, &init, &SolveConfig::dopri45(1e-10, 1e-14, grid)).unwrap();
    let worst = |e: [f64; 4]| e.into_iter().fold(0.0, f64::max);
    (worst(max_rel_err(&rk, &exact)), worst(max_rel_err(&dp, &exact)))
}

pub fn assert_solver_agreement() {
    let (rk, dp) = solver_errors();
    assert!(rk < 1e-6, "rk4 error {rk:e}");
    assert!(dp < 1e-8, "dopri45 error {dp:e}");
}
