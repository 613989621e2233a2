use cfproj_core::estimator::{self, evaluate_control_projection, full_data_cf_estimate};
use cfproj_core::inference::{self, alpha_of_mu, asymptotic_variance, bootstrap_inference};
use cfproj_core::mar::{self, estimate_e_a_given_z, fit_e_a_given_z};
use cfproj_core::nonparam::{self, KernelFit, Smoother};
use cfproj_core::numdiff::{central_difference_jacobian, default_steps};
use cfproj_core::sim::{
    discrete_exact_sample, discrete_population_oracle, run_monte_carlo, sample_dgp, DgpSpec,
    InstrumentDist, MonteCarloConfig, NoiseDist, Scenario, Selection, SettingId,
};
use cfproj_core::{stats, BasisSpec, BootstrapConfig, EstimatorConfig, MarConfig, PrimaryRow};
use nalgebra::{DMatrix, DVector};

fn setting4(n1: usize, n2: usize) -> DgpSpec {
    DgpSpec::from_setting(Scenario::Linear, SettingId::Main(4), n1, n2)
}

#[test]
fn discrete_sample_recovers_population_values() {
    let oracle = discrete_population_oracle();
    let sim = discrete_exact_sample(1000);
    let basis = BasisSpec::identity();
    let (r, cp) = estimator::estimate(&sim.dataset, &basis, &EstimatorConfig::default()).unwrap();
    assert!((r.alpha_hat[0] - oracle.alpha).abs() < 1e-6);
    assert!((r.xi_hat - oracle.xi).abs() < 1e-6);
    assert!((cp.treatment_model.gamma0 - oracle.gamma0).abs() < 1e-12);
    assert!((cp.treatment_model.gamma1 - oracle.gamma1).abs() < 1e-12);
    let c = evaluate_control_projection(&cp, &oracle.support);
    for (got, want) in c.iter().zip(&oracle.c_values) {
        assert!((got - want).abs() < 1e-6);
    }
    let full = full_data_cf_estimate(&sim.joint, &basis).unwrap();
    assert!((full.alpha[0] - 1.0).abs() < 1e-6);
    assert!((full.rho - 1.0).abs() < 1e-6);
}

#[test]
fn treatment_variance_matches_analytic_moment() {
    let spec = setting4(25_000, 25_000);
    let sim = sample_dgp(&spec, 11);
    let a: Vec<f64> = sim.joint.iter().map(|r| r.a).collect();
    let want = spec.treatment_variance();
    assert!((want - 2.25).abs() < 1e-12);
    assert!((stats::variance(&a) / want - 1.0).abs() < 0.05);

    let s1 = DgpSpec::from_setting(Scenario::Linear, SettingId::Main(1), 25_000, 25_000);
    let z: Vec<f64> = sample_dgp(&s1, 12).joint.iter().map(|r| r.z).collect();
    assert!((stats::variance(&z) / 0.25 - 1.0).abs() < 0.05);
}

#[test]
fn standardized_noise_has_unit_variance() {
    for (u, z) in [
        (NoiseDist::Uniform, InstrumentDist::Uniform { lo: -1.0, hi: 1.0 }),
        (NoiseDist::Exponential, InstrumentDist::Exponential { rate: 1.0 }),
    ] {
        let spec = DgpSpec {
            scenario: Scenario::Linear,
            alpha: 0.0,
            gamma: 0.0,
            beta: 1.0,
            l: 0.0,
            z_dist: z,
            u_dist: u,
            eps_dist: u,
            eta_sd: 0.0,
            n1: 20_000,
            n2: 20_000,
            selection: Selection::Mcar,
        };
        // With α = l = γ = 0 and η ≡ 0, A = ε and Y = U.
        let sim = sample_dgp(&spec, 3);
        let eps: Vec<f64> = sim.joint.iter().map(|r| r.a).collect();
        let uu: Vec<f64> = sim.joint.iter().map(|r| r.y).collect();
        for v in [&eps, &uu] {
            assert!(stats::mean(v).abs() < 0.03);
            assert!((stats::variance(v) - 1.0).abs() < 0.05);
        }
    }
}

#[test]
fn logistic_selection_favours_large_treatments() {
    let mut spec = setting4(10_000, 10_000);
    spec.selection = Selection::Logistic { coef: 0.5, intercept: 0.0 };
    let sim = sample_dgp(&spec, 5);
    assert_eq!(sim.dataset.n1() + sim.dataset.n2(), 20_000);
    let ma = stats::mean(&sim.dataset.auxiliary.iter().map(|r| r.a).collect::<Vec<_>>());
    let mp = stats::mean(&sim.dataset.primary.iter().map(|r| r.a).collect::<Vec<_>>());
    assert!(mp > ma + 0.3);
}

#[test]
fn noiseless_null_is_exact() {
    let mut spec = setting4(400, 400);
    spec.alpha = 0.0;
    spec.beta = 0.0;
    spec.eta_sd = 0.0;
    let cfg = MonteCarloConfig { reps: 8, bootstrap: None, master_seed: 1, estimator: EstimatorConfig::default() };
    let res = run_monte_carlo(&spec, &cfg).unwrap();
    assert_eq!(res.n_failed_reps, 0);
    assert!(res.outcomes.iter().all(|o| o.alpha_hat == 0.0));
    assert_eq!(res.mean_bias_x100, 0.0);
    assert_eq!(res.mse_x100, 0.0);
}

/// Heteroskedasticity-robust (HC0) covariance of the slope coefficients of
/// `Y` on `(1, g(A), Ĉ(A))`, computed independently of the library.
fn hc0_slope(a: &[f64], c: &[f64], y: &[f64]) -> f64 {
    let n = a.len();
    let x = DMatrix::from_fn(n, 3, |i, j| [1.0, a[i], c[i]][j]);
    let yv = DVector::from_column_slice(y);
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let b = &xtx_inv * x.transpose() * &yv;
    let e = &yv - &x * b;
    let mut meat = DMatrix::zeros(3, 3);
    for i in 0..n {
        let row = x.row(i).transpose();
        meat += &row * row.transpose() * e[i] * e[i];
    }
    (&xtx_inv * meat * &xtx_inv)[(1, 1)]
}

#[test]
fn asymptotic_variance_is_a_robust_sandwich() {
    let sim = sample_dgp(&setting4(2000, 2000), 21);
    let basis = BasisSpec::identity();
    let (_, cp) = estimator::estimate(&sim.dataset, &basis, &EstimatorConfig::default()).unwrap();
    let a: Vec<f64> = sim.dataset.primary.iter().map(|r| r.a).collect();
    let y: Vec<f64> = sim.dataset.primary.iter().map(|r| r.y).collect();
    let c = evaluate_control_projection(&cp, &a);
    let n = a.len() as f64;
    let want = n / (n - 1.0) * hc0_slope(&a, &c, &y);
    let got = asymptotic_variance(&sim.dataset.primary, &cp, &basis).unwrap()[(0, 0)];
    assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
}

#[test]
fn jacobian_stable_under_step_refinement() {
    let sim = sample_dgp(&setting4(2000, 2000), 22);
    let basis = BasisSpec::identity();
    let (_, cp) = estimator::estimate(&sim.dataset, &basis, &EstimatorConfig::default()).unwrap();
    let a: Vec<f64> = sim.dataset.primary.iter().map(|r| r.a).collect();
    let (mu, _) = inference::moment_vector(&a, &cp, &basis);
    let f = |m: &[f64]| alpha_of_mu(m, 1, &[1.3], 0.4);
    let steps = default_steps(&mu);
    let fine: Vec<f64> = steps.iter().map(|s| s / 10.0).collect();
    let j1 = central_difference_jacobian(f, &mu, &steps).unwrap();
    let j2 = central_difference_jacobian(f, &mu, &fine).unwrap();
    for (u, v) in j1[0].iter().zip(&j2[0]) {
        assert!((u - v).abs() <= 1e-4 * v.abs().max(1e-8), "{u} vs {v}");
    }
}

#[test]
fn bootstrap_is_deterministic_and_scale_equivariant() {
    let sim = sample_dgp(&setting4(300, 300), 31);
    let basis = BasisSpec::identity();
    let cfg = BootstrapConfig { replicates: 60, seed: 9, ..Default::default() };
    let est = EstimatorConfig::default();
    let r1 = bootstrap_inference(&sim.dataset, &basis, &cfg, &est).unwrap();
    let r2 = bootstrap_inference(&sim.dataset, &basis, &cfg, &est).unwrap();
    assert_eq!(r1, r2);
    assert!(r1.ci_lower[0] <= r1.ci_upper[0] && r1.se[0] >= 0.0);

    // Scaling by a power of two keeps every floating-point operation exact.
    let mut scaled = sim.dataset.clone();
    scaled.primary.iter_mut().for_each(|r| r.y *= 4.0);
    let r3 = bootstrap_inference(&scaled, &basis, &cfg, &est).unwrap();
    assert!((r3.se[0] - 4.0 * r1.se[0]).abs() <= 1e-10 * r3.se[0]);
    assert!((r3.ci_lower[0] - 4.0 * r1.ci_lower[0]).abs() <= 1e-10);
    assert!((r3.ci_upper[0] - 4.0 * r1.ci_upper[0]).abs() <= 1e-10);
}

#[test]
fn binned_and_exact_smoothers_agree() {
    let sim = sample_dgp(&setting4(5000, 100), 41);
    let a: Vec<f64> = sim.dataset.auxiliary.iter().map(|r| r.a).collect();
    let z: Vec<f64> = sim.dataset.auxiliary.iter().map(|r| r.z).collect();
    let h = nonparam::undersmoothed_bandwidth(&a).unwrap();
    let fit = KernelFit::new(a.clone(), z, h).unwrap();
    let q = nonparam::linspace(-3.0, 8.0, 400);
    let exact = nonparam::nw_regress_with(&fit, &q, Smoother::Exact);
    let binned = nonparam::nw_regress_with(&fit, &q, Smoother::Binned);
    for (e, b) in exact.iter().zip(&binned) {
        assert!((e - b).abs() < 1e-3 * e.abs().max(1.0), "{e} vs {b}");
    }
}

#[test]
fn mar_conditional_mean_independent_instrument() {
    // γ = 0 makes A independent of Z, so E(A|Z=z) is the marginal mean.
    let mut spec = DgpSpec::from_setting(Scenario::Linear, SettingId::Main(2), 5000, 5000);
    spec.gamma = 0.0;
    let sim = sample_dgp(&spec, 51);
    let pooled_mean = stats::mean(&sim.dataset.pooled_treatment());
    let cfg = MarConfig::for_dataset(&sim.dataset);
    assert!(cfg.z_is_binary);
    let m = estimate_e_a_given_z(&sim.dataset, &cfg, &[0.0, 1.0]).unwrap();
    for v in m {
        assert!((v - pooled_mean).abs() < 0.05, "{v} vs {pooled_mean}");
    }
}

#[test]
fn mar_discrete_oracle() {
    let sim = discrete_exact_sample(625);
    let cfg = MarConfig::for_dataset(&sim.dataset);
    let fit = fit_e_a_given_z(&sim.dataset, &cfg).unwrap();
    let m = fit.evaluate(&[0.0, 1.0]).unwrap();
    assert!(m[0].abs() < 0.05 && (m[1] - 1.0).abs() < 0.05, "{m:?}");

    let (p0, p1) = (fit.instrument_marginal(0.0), fit.instrument_marginal(1.0));
    assert!((p0 + p1 - 1.0).abs() < 1e-2);
    let total = m[0] * p0 + m[1] * p1;
    assert!((total - stats::mean(&sim.dataset.pooled_treatment())).abs() < 1e-2);
}

#[test]
fn mar_continuous_density_integrates_to_one() {
    let spec = DgpSpec::from_setting(Scenario::Linear, SettingId::Main(6), 2000, 2000);
    let sim = sample_dgp(&spec, 52);
    let fit = fit_e_a_given_z(&sim.dataset, &MarConfig::default()).unwrap();
    let grid = nonparam::linspace(-2.0, 2.0, 801);
    let dens: Vec<f64> = grid.iter().map(|&z| fit.instrument_marginal(z)).collect();
    assert!(dens.iter().all(|&d| d >= 0.0));
    assert!((nonparam::trapezoid(&grid, &dens) - 1.0).abs() < 1e-2);
}

#[test]
fn mar_discrete_selection_on_treatment() {
    // Y = A + U with P(R = 1 | A) increasing in A, realized with exact
    // frequencies: primary shares 1/4, 1/3, 1/2, 2/3 at A = -1, 0, 1, 2.
    let share = [(1, 4), (1, 3), (1, 2), (2, 3)];
    let cells = [(0.0, -1.0), (0.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
    let mut aux = Vec::new();
    let mut primary = Vec::new();
    for &(z, u) in &cells {
        let a: f64 = z + u;
        let (num, den) = share[(a + 1.0) as usize];
        let total = 5040;
        let n_primary = total * num / den;
        for k in 0..total {
            if k < n_primary {
                primary.push(PrimaryRow { a, y: a + u });
            } else {
                aux.push(cfproj_core::AuxiliaryRow { z, a });
            }
        }
    }
    let ds = cfproj_core::TwoSampleDataset::new(aux, primary);
    let r = mar::estimate_alpha_mar(&ds, &BasisSpec::identity(), &MarConfig::for_dataset(&ds)).unwrap();
    assert!((r.alpha_hat[0] - 1.0).abs() < 0.05, "{:?}", r.alpha_hat);
}
