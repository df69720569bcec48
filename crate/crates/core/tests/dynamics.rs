use dicke_phase_lab::echo::{analytic_series, TimeGrid};
use dicke_phase_lab::extract::extract;
use dicke_phase_lab::model::ModelParams;
use dicke_phase_lab::sim::{run_quench, BasisSpec, InitialSpin, DEFAULT_TOLERANCE};

/// Exact return amplitude of a squeezed single mode.
fn exact_mode(mu: f64, delta: f64, t: f64) -> f64 {
    let gap = mu * mu - delta * delta;
    let w = gap.abs().sqrt();
    let s = if gap > 0.0 { (w * t).sin() } else { (w * t).sinh() };
    (1.0 + delta * delta / gap.abs() * s * s).powf(-0.5)
}

#[test]
fn two_mode_simulation_matches_exact_echo() {
    let grid = TimeGrid::new(1.0, 0.01).unwrap();
    for (g1, g2) in [(0.4, 0.4), (1.6, 0.4), (1.2, 0.8), (0.4, 1.6)] {
        let p = ModelParams::resonant(1.0, g1, g2, 1).unwrap();
        let run = run_quench(&p, &BasisSpec::two_mode(60).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
            .unwrap();
        for (t, l) in run.series.times.iter().zip(&run.series.values) {
            let exact = exact_mode(1.0 + g1, g2, *t) * exact_mode(1.0 - g1, -g2, *t);
            assert!((l - exact).abs() < 1e-9, "({g1}, {g2}) t={t}: {l} vs {exact}");
        }
    }
}

#[test]
fn analytic_echo_tracks_simulation_at_weak_coupling() {
    // the analytic amplitudes are leading order in tanh θ
    let grid = TimeGrid::new(10.0, 0.01).unwrap();
    let p = ModelParams::resonant(1.0, 0.1, 0.1, 1).unwrap();
    let sim = run_quench(&p, &BasisSpec::two_mode(30).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
        .unwrap()
        .series;
    let analytic = analytic_series(&p, &grid).unwrap();
    let worst = sim
        .values
        .iter()
        .zip(&analytic.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

/// Rotating the spins by π about x maps |⇑⟩ to |⇓⟩ and the Hamiltonian at
/// `(g1, g2, ω0)` to the one at `(g2, g1, -ω0)`.
#[test]
fn spin_up_quench_equals_spin_down_with_swapped_couplings() {
    let grid = TimeGrid::new(3.0, 0.01).unwrap();
    let spec = BasisSpec::spin_boson(10, 24).unwrap();
    for (g1, g2) in [(1.6, 0.4), (0.4, 1.6), (1.2, 0.8)] {
        let up = ModelParams::new(1.0, 1.0, g1, g2, 10).unwrap();
        let mirrored = ModelParams::new(1.0, -1.0, g2, g1, 10).unwrap();
        let a = run_quench(&up, &spec, InitialSpin::Up, &grid, DEFAULT_TOLERANCE).unwrap().series;
        let b = run_quench(&mirrored, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
            .unwrap()
            .series;
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10, "({g1}, {g2}): {x} vs {y}");
        }
    }
}

#[test]
fn finite_n_echo_approaches_effective_model() {
    let grid = TimeGrid::new(4.0, 0.01).unwrap();
    let p = |n| ModelParams::resonant(1.0, 0.4, 0.4, n).unwrap();
    let eff = run_quench(&p(1), &BasisSpec::two_mode(30).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
        .unwrap()
        .series;
    let gap = |n| {
        let s = run_quench(&p(n), &BasisSpec::spin_boson(n, 30).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
            .unwrap()
            .series;
        s.values
            .iter()
            .zip(&eff.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let (g20, g80) = (gap(20), gap(80));
    assert!(g80 < g20 / 2.0, "N=20: {g20}, N=80: {g80}");
}

#[test]
fn analytic_series_extracts_to_analytic_observables() {
    let grid = TimeGrid::new(20.0, 0.01).unwrap();
    for (g1, g2) in [(0.4, 0.4), (1.6, 0.4), (1.2, 0.8), (0.4, 1.6)] {
        let p = ModelParams::resonant(1.0, g1, g2, 1).unwrap();
        let expected = dicke_phase_lab::echo::analytic_observables(&p).unwrap();
        let got = extract(&analytic_series(&p, &grid).unwrap()).unwrap().observables;
        assert!((got.f - expected.f).abs() < 2e-3 * expected.f.max(1.0), "({g1}, {g2}) f {got:?}");
        assert!((got.lambda - expected.lambda).abs() < 1e-2 * expected.lambda.abs().max(1.0), "({g1}, {g2}) λ {got:?}");
    }
}
