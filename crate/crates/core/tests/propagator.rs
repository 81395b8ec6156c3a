use optocool_validation as oracle;

use std::f64::consts::PI;

use optocool::bath::ModeLabel;
use optocool::config::{tau_m, SystemConfig, TimeGrid};
use optocool::linalg::{Mat6, P1, Q1, Q2};
use optocool::propagator::{
    evolve_covariance, noise_covariance, noise_double_sum, noise_spectral_sum, propagate_fundamental, simulate,
    Constant, Propagator,
};

fn closed(n_t: f64, n_c: f64, t_final: f64) -> SystemConfig<f64> {
    SystemConfig::resonant(0.0, 0.0, 1.0, 1.0, n_t, n_c, t_final).unwrap()
}

fn with_dt(c: SystemConfig<f64>, dt: f64) -> SystemConfig<f64> {
    c.with_grid(TimeGrid::covering(c.grid.t_final(), dt).unwrap())
}

#[test]
fn fundamental_starts_at_identity() {
    let c = SystemConfig::resonant(1e-2, 0.1, 1.0, 100.0, 5.0, 0.0, tau_m()).unwrap();
    let fund = propagate_fundamental(&c, &|t: f64| 0.3 * t.sin()).unwrap();
    assert_eq!(fund.phi[0], Mat6::identity());
    assert_eq!(fund.len(), c.grid.n_steps + 1);
}

#[test]
fn free_rotation_after_quarter_period() {
    let c = with_dt(closed(0.0, 0.0, PI / 2.0), PI / 2.0 / 400.0);
    let fund = propagate_fundamental(&c, &Constant(0.0)).unwrap();
    let want = oracle::normal_mode_map(0.0, PI / 2.0);
    let got = fund.phi.last().unwrap().physical_block();
    for i in 0..4 {
        for j in 0..4 {
            assert!((got[i][j] - want[i][j]).abs() < 1e-8, "({i},{j}) {} vs {}", got[i][j], want[i][j]);
        }
    }
    assert!((got[0][1] - 1.0).abs() < 1e-8);
}

#[test]
fn constant_coupling_matches_normal_modes() {
    let c = with_dt(closed(100.0, 0.0, 2.0 * tau_m::<f64>()), tau_m::<f64>() / 2000.0);
    let snaps = evolve_covariance(&c, &Constant(0.05), 40).unwrap();
    assert_eq!(snaps.len(), 101);
    let s0 = oracle::thermal4(100.0, 0.0);
    for s in &snaps {
        let want = oracle::sandwich4(&oracle::normal_mode_map(0.05, s.time), &s0);
        let got = s.sigma.physical_block();
        for i in 0..4 {
            for j in 0..4 {
                assert!((got[i][j] - want[i][j]).abs() < 1e-8, "t={} ({i},{j})", s.time);
            }
        }
    }
}

#[test]
fn closed_dynamics_is_symplectic() {
    let c = closed(0.0, 0.0, 10.0 * tau_m::<f64>());
    for g in [0.0, 0.05] {
        let fund = propagate_fundamental(&c, &Constant(g)).unwrap();
        for j in 0..fund.len() {
            assert!((fund.physical_determinant(j) - 1.0).abs() < 1e-8, "g={g} j={j}");
        }
    }
}

#[test]
fn uncoupled_closed_modes_conserve_occupation() {
    let c = with_dt(closed(100.0, 3.0, 10.0 * tau_m::<f64>()), tau_m::<f64>() / 1000.0);
    let tr = simulate(&c, &Constant(0.0), 10).unwrap();
    for (a, b) in tr.n_mech.iter().zip(&tr.n_opt) {
        assert!((a - 100.0).abs() < 1e-8);
        assert!((b - 3.0).abs() < 1e-8);
    }
}

#[test]
fn resonant_swap_empties_mechanical_mode() {
    let c = closed(100.0, 0.0, 6.0 * tau_m::<f64>());
    let tr = simulate(&c, &Constant(0.05), 1).unwrap();
    let (k, min) = tr.n_mech.iter().enumerate().fold((0, f64::MAX), |a, (k, &n)| if n < a.1 { (k, n) } else { a });
    assert!(min < 1.0, "min {min}");
    // exchange completes at g t = π/2
    assert!((tr.times[k] - PI / 0.1).abs() < 0.5, "at {}", tr.times[k]);
    let total: Vec<f64> = tr.n_mech.iter().zip(&tr.n_opt).map(|(a, b)| a + b).collect();
    assert!(total.iter().all(|x| (x - 100.0).abs() < 1.0));
}

fn lindblad_config() -> SystemConfig<f64> {
    let mut c = SystemConfig::resonant(1e-2, 0.0, 100.0, 100.0, 10.0, 0.0, 200.0 * tau_m::<f64>()).unwrap();
    c.mech_bath.occupation = 1.0;
    c
}

#[test]
fn markovian_relaxation_follows_lindblad() {
    let c = lindblad_config();
    let stride = c.grid.n_steps / 400;
    let tr = simulate(&c, &Constant(0.0), stride).unwrap();
    let tau = tau_m::<f64>();
    let mut checked = 0;
    for (t, n) in tr.times.iter().zip(&tr.n_mech) {
        if *t >= 10.0 * tau {
            let want = oracle::lindblad_occupation(10.0, 1.0, 1e-2, *t);
            assert!((n - want).abs() < 0.02 * want, "t={t} n={n} want={want}");
            checked += 1;
        }
    }
    assert!(checked > 300);
    let pp = tr.final_state.sigma[(P1, P1)];
    assert!((pp - 1.5).abs() < 0.02 * 1.5, "pp {pp}");
}

#[test]
fn relaxation_is_monotone_after_period_averaging() {
    let c = SystemConfig::resonant(0.05, 0.0, 1.0, 1.0, 20.0, 0.0, 30.0 * tau_m::<f64>()).unwrap();
    let mut c = c;
    c.mech_bath.occupation = 2.0;
    let per = (tau_m::<f64>() / c.grid.dt).round() as usize;
    let tr = simulate(&c, &Constant(0.0), 1).unwrap();
    let means: Vec<f64> = tr.n_mech.chunks_exact(per).map(|w| w.iter().sum::<f64>() / per as f64).collect();
    assert!(means.len() >= 29);
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn streaming_noise_matches_explicit_sums() {
    let mut c = SystemConfig::resonant(1e-2, 3e-2, 1.0, 2.0, 5.0, 0.0, 0.7 * tau_m::<f64>()).unwrap();
    c.opt_bath.occupation = 0.3;
    let g = |t: f64| 0.3 * (0.7 * t).sin();
    let prop = Propagator::new(c).unwrap();
    let fund = propagate_fundamental(&c, &g).unwrap();
    let mut state = prop.start();
    for _ in 0..c.grid.n_steps {
        prop.advance(&mut state, &g).unwrap();
    }
    let streaming = prop.noise(&state);
    let n = c.grid.n_steps;
    let double = noise_double_sum(&prop.plan, &fund.steps, n);
    let spectral = noise_spectral_sum(&c, &fund.steps, n, 20000);
    let scale = double.max_abs();
    assert!(streaming.max_abs_diff(&double) < 1e-12 * scale);
    assert!(double.max_abs_diff(&spectral) < 1e-9 * scale);
    assert_eq!(noise_covariance(&c, &fund, n).unwrap(), double);
}

#[test]
fn green_products_agree_with_inversion_on_short_spans() {
    let c = SystemConfig::resonant(1e-2, 0.1, 1.0, 2.0, 5.0, 0.0, tau_m::<f64>()).unwrap();
    let fund = propagate_fundamental(&c, &|t: f64| 0.2 * t.cos()).unwrap();
    for (j, k) in [(100, 0), (150, 37), (200, 199)] {
        let a = fund.green(j, k);
        let b = fund.green_by_inverse(j, k).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }
}

#[test]
fn uncoupled_baths_add_no_noise() {
    let c = closed(1.0, 1.0, tau_m());
    let fund = propagate_fundamental(&c, &Constant(0.1)).unwrap();
    assert_eq!(noise_covariance(&c, &fund, c.grid.n_steps).unwrap(), Mat6::zeros());
    let c = SystemConfig::resonant(0.1, 0.1, 1.0, 1.0, 1.0, 1.0, tau_m()).unwrap();
    let fund = propagate_fundamental(&c, &Constant(0.1)).unwrap();
    assert_eq!(noise_covariance(&c, &fund, 0).unwrap(), Mat6::zeros());
}

#[test]
fn grid_refinement_converges_at_second_order() {
    let base = SystemConfig::resonant(0.05, 0.2, 2.0, 5.0, 10.0, 0.0, tau_m()).unwrap();
    let g = |t: f64| 0.4 * (1.3 * t).sin();
    let tc = base.grid.t_final();
    let run = |n: usize| {
        let c = base.with_grid(TimeGrid::new(tc / n as f64, n).unwrap());
        simulate(&c, &g, n).unwrap().final_state.phonon_number(ModeLabel::Mechanical, &c)
    };
    let (a, b, d) = (run(100), run(200), run(400));
    let ratio = (a - b).abs() / (b - d).abs();
    assert!(ratio > 3.5, "ratio {ratio}, values {a} {b} {d}");
}

#[test]
fn swap_is_symmetric_under_mode_exchange() {
    let c = closed(7.0, 2.0, tau_m());
    let d = closed(2.0, 7.0, tau_m());
    let a = simulate(&c, &Constant(0.1), 10).unwrap();
    let b = simulate(&d, &Constant(0.1), 10).unwrap();
    for (x, y) in a.n_mech.iter().zip(&b.n_opt) {
        assert!((x - y).abs() < 1e-12);
    }
    let s = a.final_state.sigma;
    assert!((s[(Q1, Q2)] - s[(Q2, Q1)]).abs() < 1e-14);
}
