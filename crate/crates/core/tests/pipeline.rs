use std::f64::consts::PI;

use attractor_core::energy::{absorbing_estimate, attach_energy, fit_decay_rate, BallSpec};
use attractor_core::process::evolve;
use attractor_core::report::{read_table, write_energy, Header, ENERGY_COLUMNS};
use attractor_core::{Basis, DampingSpec, HullSample, NonlinearitySpec, SolverConfig, State, Symbol, SymbolKind, System, Time};

fn forced_system() -> (System, HullSample) {
    let n = 8;
    let sys = System::new(Basis::new(1, n, &[PI]).unwrap(), DampingSpec::polynomial(3).unwrap(), NonlinearitySpec::cubic_double_well());
    let base = Symbol::new(
        SymbolKind::Quasiperiodic { amplitude: 1.0, frequencies: vec![1.0, 2f64.sqrt()] },
        Symbol::unit_profile(n, 0),
    )
    .unwrap();
    (sys, HullSample::new(&base, &[1.5, 3.0]).unwrap())
}

#[test]
fn ensemble_results_do_not_depend_on_thread_count() {
    let (sys, hull) = forced_system();
    let ball = BallSpec { center: State::zero(8), radius: 4.0, count: 5, seed: 17 };
    let cfg = SolverConfig::rk4(0.01).with_stride(10);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| absorbing_estimate(&ball, &hull, Time::from_f64(4.0), &sys, &cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn energy_csv_round_trips_exactly() {
    let (sys, hull) = forced_system();
    let sigma = &hull.symbols[1];
    let mut y = State::zero(8);
    y.u[0] = 1.2;
    let mut traj = evolve(sigma, Time::ZERO, Time::from_f64(1.0), &y, &sys, &SolverConfig::imex(0.01)).unwrap();
    attach_energy(&mut traj, sigma, 0.05, &sys).unwrap();
    let mut buf = Vec::new();
    write_energy(&mut buf, &Header::new().with("seed", 1), traj.energy.as_ref().unwrap()).unwrap();
    let (header, rows) = read_table(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(header.entries()[0].1, "1");
    assert_eq!(rows[0], ENERGY_COLUMNS);
    for (row, rec) in rows[1..].iter().zip(traj.energy.as_ref().unwrap()) {
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.e0);
        assert_eq!(row[4].parse::<f64>().unwrap(), rec.forcing_power);
    }
}

#[test]
fn linear_decay_rate_matches_spectral_oracle() {
    // u'' + k u' + λ u = 0 on mode 1 decays at E ~ exp(-k t) when k² < 4λ
    let k = 0.4;
    let sys = System::new(Basis::new(1, 4, &[PI]).unwrap(), DampingSpec::linear(k), NonlinearitySpec::zero());
    let sigma = Symbol::zero(4);
    let mut y = State::zero(4);
    y.u[0] = 1.0;
    let mut traj = evolve(&sigma, Time::ZERO, Time::from_f64(60.0), &y, &sys, &SolverConfig::rk4(0.01)).unwrap();
    attach_energy(&mut traj, &sigma, 0.0, &sys).unwrap();
    let rate = fit_decay_rate(traj.energy.as_ref().unwrap(), 5.0).unwrap();
    assert!((rate - k).abs() < 0.02 * k, "{rate}");
}
