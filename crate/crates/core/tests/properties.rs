use nalgebra::SymmetricEigen;
use neqdeco::decoherence::{a_int, a_int_via_temperature, CatState};
use neqdeco::efftemp::{effective_temperature, effective_temperature_laplace, two_reservoir_t_eff};
use neqdeco::kernels::{ExpTerm, ModeExpansion, NoiseModel, ReservoirSpec, System};
use neqdeco::langevin::{cat_initial_covariance, embed, propagate_covariance};
use neqdeco::quad::Quadrature;
use num_complex::Complex64;
use proptest::prelude::*;

fn sys() -> System {
    System::new(1.0, 1.0).unwrap()
}

fn two_reservoir(eta_f: f64, t_f: f64, eta_s: f64, t_s: f64, tau: f64) -> NoiseModel {
    NoiseModel::compose(&[ReservoirSpec::delta(eta_f, t_f), ReservoirSpec::exponential(eta_s, tau, t_s)], sys()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_add_pointwise(
        e1 in 0.1..10.0f64, t1 in 0.1..10.0f64, tau1 in 0.1..10.0f64,
        e2 in 0.1..10.0f64, t2 in 0.1..10.0f64, tau2 in 0.1..10.0f64,
        d in 0.0..5.0f64, t in 0.0..30.0f64,
    ) {
        let a = [ReservoirSpec::exponential(e1, tau1, t1), ReservoirSpec::delta(d, t2)];
        let b = [ReservoirSpec::exponential(e2, tau2, t2)];
        let both: Vec<_> = a.iter().chain(&b).cloned().collect();
        let (ma, mb, mab) = (
            NoiseModel::compose(&a, sys()).unwrap(),
            NoiseModel::compose(&b, sys()).unwrap(),
            NoiseModel::compose(&both, sys()).unwrap(),
        );
        let eta = ma.friction_time(t).unwrap() + mb.friction_time(t).unwrap();
        let c = ma.correlator_time(t).unwrap() + mb.correlator_time(t).unwrap();
        prop_assert!((mab.friction_time(t).unwrap() - eta).abs() <= 1e-13 * eta.abs().max(1e-300));
        prop_assert!((mab.correlator_time(t).unwrap() - c).abs() <= 1e-13 * c.abs().max(1e-300));
        prop_assert!((mab.delta_noise - ma.delta_noise - mb.delta_noise).abs() < 1e-14);
        prop_assert!(mab.friction_time(t).unwrap() >= 0.0 && mab.correlator_time(t).unwrap() >= 0.0);
    }

    #[test]
    fn exponential_laplace_matches_quadrature(eta in 0.1..10.0f64, tau in 0.1..10.0f64, x in -2.0..2.0f64) {
        let spec = ReservoirSpec::exponential(eta, tau, 1.0);
        let s = 10f64.powf(x) / tau;
        let lap = spec.friction_kernel_laplace().unwrap().eval_real(s);
        let horizon = 60.0 / (s + 1.0 / tau);
        let num = Quadrature::with_rel_tol(1e-11)
            .integrate(|t| spec.friction_kernel_time(t).unwrap() * (-s * t).exp(), 0.0, horizon)
            .unwrap();
        prop_assert!(rel(num, lap) < 1e-7, "s={} num={} lap={}", s, num, lap);
    }

    #[test]
    fn partial_fractions_reproduce_two_reservoir_form(
        eta_f in 0.1..10.0f64, eta_s in 0.1..10.0f64, tau in 0.1..10.0f64,
        t_f in 0.1..10.0f64, t_s in 0.1..10.0f64, x in 0.0..1.0f64,
    ) {
        let model = two_reservoir(eta_f, t_f, eta_s, t_s, tau);
        let temp = effective_temperature(&model).unwrap();
        for t in [0.0, x * tau, 3.0 * x * tau, 20.0 * tau] {
            let want = two_reservoir_t_eff(eta_f, t_f, eta_s, t_s, tau, t).unwrap();
            prop_assert!(rel(temp.t_eff(t).unwrap(), want) < 1e-10, "t={}", t);
        }
        // zero-frequency anchor
        let anchor = effective_temperature_laplace(&model).unwrap().eval_real(0.0);
        prop_assert!(rel(anchor, (eta_f * t_f + eta_s * t_s) / (eta_f + eta_s)) < 1e-12);
        prop_assert!(rel(temp.asymptote, anchor) < 1e-12);
    }

    #[test]
    fn effective_temperature_is_bounded(
        eta in prop::collection::vec(0.1..10.0f64, 3),
        temps in prop::collection::vec(0.1..10.0f64, 3),
        tau1 in 0.1..3.0f64, ratio in 1.5..5.0f64, x in 0.0..1.0f64,
    ) {
        let specs = [
            ReservoirSpec::delta(eta[0], temps[0]),
            ReservoirSpec::exponential(eta[1], tau1, temps[1]),
            ReservoirSpec::exponential(eta[2], tau1 * ratio, temps[2]),
        ];
        let model = NoiseModel::compose(&specs, sys()).unwrap();
        let temp = effective_temperature(&model).unwrap();
        let (lo, hi) = temps.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        for k in 0..20 {
            let t = x * 40.0 * tau1 * ratio * k as f64 / 19.0;
            let v = temp.t_eff(t).unwrap();
            prop_assert!(v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9), "t={} T_eff={} not in [{}, {}]", t, v, lo, hi);
        }
    }

    #[test]
    fn attenuation_is_monotone_in_temperature(
        eta0 in 0.1..5.0f64, eta1 in 0.0..5.0f64, g_eta in 0.1..5.0f64,
        base in 0.0..5.0f64, b1 in 0.0..5.0f64, g1 in 0.1..5.0f64,
        extra_d in 0.0..2.0f64, extra in 0.0..2.0f64, g2 in 0.1..5.0f64, t in 0.0..10.0f64,
    ) {
        let cat = CatState::new(3.0, 0.2, 1.0, 1.0).unwrap();
        let eta = ModeExpansion { delta: eta0, terms: vec![ExpTerm::real(eta1 * g_eta, g_eta)] };
        let tb = ModeExpansion { delta: base, terms: vec![ExpTerm::real(b1 * g1, g1)] };
        let mut ta = tb.clone();
        ta.delta += extra_d;
        ta.terms.push(ExpTerm::real(extra * g2, g2));
        let a = a_int_via_temperature(&cat, &eta, &ta, t).unwrap();
        let b = a_int_via_temperature(&cat, &eta, &tb, t).unwrap();
        prop_assert!(a >= b - 1e-12 * b.abs().max(1.0), "A={} B={}", a, b);
    }

    #[test]
    fn attenuation_scales_and_adds(
        eta_f in 0.1..10.0f64, eta_s in 0.1..10.0f64, tau in 0.1..10.0f64,
        t_f in 0.1..10.0f64, t_s in 0.1..10.0f64, lambda in 0.1..10.0f64, t in 0.0..50.0f64,
    ) {
        let cat = CatState::new(2.0, 0.1, 1.0, 1.0).unwrap();
        let scaled = CatState::new(2.0 * lambda, 0.1, 1.0, 1.0).unwrap();
        let model = two_reservoir(eta_f, t_f, eta_s, t_s, tau);
        let a = a_int(&cat, &model, t).unwrap();
        prop_assert!(rel(a_int(&scaled, &model, t).unwrap(), lambda * lambda * a) < 1e-12 || a == 0.0);
        let fast = NoiseModel::compose(&[ReservoirSpec::delta(eta_f, t_f)], sys()).unwrap();
        let slow = NoiseModel::compose(&[ReservoirSpec::exponential(eta_s, tau, t_s)], sys()).unwrap();
        let sum = a_int(&cat, &fast, t).unwrap() + a_int(&cat, &slow, t).unwrap();
        prop_assert!((a - sum).abs() <= 1e-12 * sum.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embedding_reproduces_transfer_function(
        m in 0.1..10.0f64, w in 0.1..10.0f64, eta_f in 0.0..5.0f64,
        eta_s in 0.1..5.0f64, tau in 0.1..5.0f64,
        re in prop::collection::vec(0.01..10.0f64, 20), im in prop::collection::vec(-10.0..10.0f64, 20),
    ) {
        let model = NoiseModel::compose(
            &[ReservoirSpec::delta(eta_f, 1.0), ReservoirSpec::exponential(eta_s, tau, 2.0)],
            System::new(m, w).unwrap(),
        ).unwrap();
        let sys = embed(&model).unwrap();
        let eta = model.friction_laplace().unwrap();
        for (x, y) in re.iter().zip(&im) {
            let s = Complex64::new(*x, *y);
            let want = 1.0 / (m * s * s + s * eta.eval(s) + m * w * w);
            let got = sys.transfer_function(s).unwrap();
            prop_assert!((got - want).norm() <= 1e-10 * want.norm(), "s={}", s);
        }
    }

    #[test]
    fn covariance_stays_positive(
        eta_f in 0.01..2.0f64, eta_s in 0.01..2.0f64, tau in 0.1..5.0f64,
        t_f in 0.1..10.0f64, t_s in 0.1..10.0f64, w in 0.1..3.0f64,
    ) {
        let model = NoiseModel::compose(
            &[ReservoirSpec::delta(eta_f, t_f), ReservoirSpec::exponential(eta_s, tau, t_s)],
            System::new(1.0, w).unwrap(),
        ).unwrap();
        let sys = embed(&model).unwrap();
        let cat = CatState::new(4.0, 0.3, 1.0, w).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        for state in propagate_covariance(&sys, &cat_initial_covariance(&cat, &sys), &times).unwrap() {
            let tr = state.sigma.trace();
            let min = SymmetricEigen::new(state.sigma.clone()).eigenvalues.min();
            prop_assert!(min >= -1e-10 * tr, "t={} min eig {}", state.time, min);
        }
    }
}
