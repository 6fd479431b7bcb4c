use w2a_core::montecarlo::{run_simulation, Environment, SimulationOptions};
use w2a_core::outage::{channel_pdf_continuous, outage_probability};
use w2a_core::pointing::LinkGeometry;

fn geometry(z_a: f64, theta_fov: f64) -> LinkGeometry {
    LinkGeometry {
        z_w: 10.0,
        z_a,
        theta_0: 0.05,
        d_r: 0.075,
        theta_fov,
        wavelength_nm: 450.0,
    }
}

fn options(h_th: f64) -> SimulationOptions {
    SimulationOptions {
        n_trials: 60_000,
        seed: 3,
        h_th: Some(h_th),
        ..SimulationOptions::default()
    }
}

#[test]
fn fitted_channel_reproduces_simulated_outage() {
    let report = run_simulation(
        &geometry(10.0, 60.0),
        &Environment::new(14.0),
        &options(1e-8),
    )
    .unwrap();
    let model = report.channel_model().expect("mixture fitted");
    let closed = outage_probability(1e-8, &model).unwrap();
    assert!(closed.threshold_valid);
    let mc = report.empirical_outage.unwrap();
    assert!(
        mc.agrees_with(closed.probability, 4.0),
        "{} vs {mc:?}",
        closed.probability
    );
    assert!(closed.probability >= report.closed_form.interruption.p_tir);
}

#[test]
fn continuous_part_carries_connected_mass() {
    let report = run_simulation(
        &geometry(5.0, 30.0),
        &Environment::new(10.0),
        &options(1e-8),
    )
    .unwrap();
    let model = report.channel_model().unwrap();
    let peak = model.peak_gain();
    let n = 20_000;
    let mass: f64 = (0..n)
        .map(|i| {
            let h = peak * (i as f64 + 0.5) / n as f64;
            channel_pdf_continuous(h, &model).unwrap_or(0.0) * peak / n as f64
        })
        .sum();
    let expected = 1.0 - model.interruption.p_int;
    assert!(
        (mass - expected).abs() < 1e-2 * expected,
        "{mass} vs {expected}"
    );
}

#[test]
fn higher_receiver_raises_outage() {
    let low = run_simulation(
        &geometry(5.0, 60.0),
        &Environment::new(10.0),
        &options(1e-8),
    )
    .unwrap();
    let high = run_simulation(
        &geometry(10.0, 60.0),
        &Environment::new(10.0),
        &options(1e-8),
    )
    .unwrap();
    assert!(high.closed_form.p_out.unwrap() > low.closed_form.p_out.unwrap());
    assert!(high.empirical_outage.unwrap().value > low.empirical_outage.unwrap().value);
}
