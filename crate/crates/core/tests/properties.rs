use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::collection::vec;

use sqg_core::calculus::{apply_multiplier, semigroup, velocity_extended};
use sqg_core::grid::{extrapolated_trace, odd_extend, restrict, Field, GridSpec};
use sqg_core::harness::{holder_seminorm, time_derivative};
use sqg_core::io::csv::{diagnostics_csv, DIAGNOSTICS_HEADER};
use sqg_core::io::fieldfile::{decode, encode};
use sqg_core::nonlinear::{nonlinear_term, nonlinear_term_extended};
use sqg_core::presets::Preset;
use sqg_core::solver::{picard_solve, simulate, SolverConfig};
use sqg_core::transform::{forward_transform, inverse_transform, Spectrum};

fn max_coeff_diff(a: &Spectrum, b: &Spectrum) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// A grid with `n1 <= 64`, `n2 <= 63` and samples in `[-1, 1]`.
fn any_field() -> impl Strategy<Value = Field> {
    (1usize..=32, 1usize..=63, 0.5f64..10.0, 0.5f64..5.0).prop_flat_map(|(h, n2, l1, l2)| {
        vec(-1.0f64..1.0, 2 * h * n2).prop_map(move |v| Field::from_values(GridSpec::new(2 * h, n2, l1, l2).unwrap(), v).unwrap())
    })
}

fn field_pair() -> impl Strategy<Value = (Field, Field)> {
    any_field().prop_flat_map(|f| {
        let g = *f.grid();
        (Just(f), vec(-1.0f64..1.0, g.len()).prop_map(move |v| Field::from_values(g, v).unwrap()))
    })
}

fn dealiased(f: &Field) -> Field {
    inverse_transform(&forward_transform(f).unwrap().dealiased())
}

fn small_data() -> impl Strategy<Value = Field> {
    (0.01f64..0.3, any::<u64>()).prop_map(|(a, seed)| {
        Preset::RandomBand { j_lo: 0, j_hi: 2, amplitude: a, seed }.build(&GridSpec::standard()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(f in any_field()) {
        let back = inverse_transform(&forward_transform(&f).unwrap());
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * f.linf());
    }

    #[test]
    fn parity_closure_is_exact(f in any_field()) {
        let closed = restrict(&odd_extend(&f).unwrap());
        prop_assert_eq!(forward_transform(&closed).unwrap(), forward_transform(&f).unwrap());
    }

    #[test]
    fn transform_is_linear((f, g) in field_pair(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = forward_transform(&f.combine(a, &g, b).unwrap()).unwrap();
        let rhs = forward_transform(&f).unwrap().combine(a, &forward_transform(&g).unwrap(), b).unwrap();
        prop_assert!(max_coeff_diff(&lhs, &rhs) <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn eigenfunctions_map_to_deltas(k in 0i64..32, m in 1usize..=63) {
        let g = GridSpec::standard();
        let f = Field::from_fn(g, |x1, x2| (k as f64 * x1).cos() * (m as f64 * x2).sin());
        let s = forward_transform(&f).unwrap();
        let weight = if k == 0 { 1.0 } else { 0.5 };
        for (idx, kk, mm, _) in s.modes() {
            let want = if kk.abs() == k && mm as usize == m { weight } else { 0.0 };
            prop_assert!((s.coeffs()[idx] - Complex64::new(want, 0.0)).norm() < 1e-13, "({}, {})", kk, mm);
        }
    }

    #[test]
    fn multipliers_compose(f in any_field(), p in -1.5f64..1.5, q in -1.5f64..1.5) {
        let twice = apply_multiplier(&apply_multiplier(&f, |l| l.powf(p)).unwrap(), |l| l.powf(q)).unwrap();
        let once = apply_multiplier(&f, |l| l.powf(p + q)).unwrap();
        prop_assert!(twice.max_abs_diff(&once).unwrap() <= 1e-12 * once.linf().max(f.linf()));
    }

    #[test]
    fn semigroup_contracts(f in any_field(), t in 0.0f64..3.0) {
        let g = *f.grid();
        let bound = (-g.lambda_min() * t).exp() * f.l2();
        prop_assert!(semigroup(&f, t).unwrap().l2() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn velocity_parity(f in any_field()) {
        let theta = dealiased(&f);
        let (u1, u2) = velocity_extended(&theta).unwrap();
        let scale = theta.linf().max(f64::MIN_POSITIVE);
        prop_assert!(u2.trace().iter().all(|v| v.abs() <= 1e-10 * scale));
        prop_assert!(u1.even_defect() <= 1e-12 * scale);
    }

    #[test]
    fn transport_is_skew(f in any_field()) {
        let theta = dealiased(&f);
        let n = nonlinear_term(&theta).unwrap();
        let pairing = n.inner(&theta).unwrap();
        prop_assert!(pairing.abs() <= 1e-8 * n.l2() * theta.l2() + 1e-300);
    }

    #[test]
    fn time_derivative_matches_the_equation(f in any_field()) {
        let theta = dealiased(&f);
        let dt = time_derivative(&theta, 1).unwrap();
        let lam = apply_multiplier(&theta, |l| l).unwrap();
        let n = nonlinear_term(&theta).unwrap();
        let residual = dt.add(&lam).unwrap().add(&n).unwrap();
        let scale = lam.linf() + n.linf();
        prop_assert!(residual.linf() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn holder_grows_with_budget(f in any_field(), a in 0.05f64..1.0, budget in 1usize..400) {
        let small = holder_seminorm(&f, a, budget);
        let large = holder_seminorm(&f, a, 2 * budget);
        prop_assert!(large >= small);
    }

    #[test]
    fn field_file_round_trips(bits in vec(any::<u64>(), 12), t in any::<f64>()) {
        let values: Vec<f64> = bits.iter().map(|&b| f64::from_bits(b)).collect();
        let f = Field::from_values(GridSpec::new(4, 3, 1.0, 2.0).unwrap(), values).unwrap();
        let (g, t2) = decode(&encode(&f, t).unwrap()).unwrap();
        prop_assert_eq!(t.to_bits(), t2.to_bits());
        let a: Vec<u64> = f.values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = g.values().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trajectories_respect_boundary_and_maximum_principle(theta0 in small_data()) {
        let cfg = SolverConfig { dt: 0.01, t_end: 0.3, snapshot_stride: 5, holder_pairs: 64, ..SolverConfig::default() };
        let traj = simulate(&theta0, &cfg).unwrap();
        for (d, state) in traj.diagnostics().iter().zip(traj.states()) {
            prop_assert!(d.max_principle_ok, "at t = {}", d.t);
            let trace = extrapolated_trace(state);
            prop_assert!(trace.iter().all(|v| v.abs() <= 1e-8 * state.linf()));
            let product = nonlinear_term_extended(state).unwrap();
            prop_assert!(product.trace().iter().all(|v| v.abs() <= 1e-14 * state.linf()));
        }
        let csv = diagnostics_csv(traj.diagnostics());
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next(), Some(DIAGNOSTICS_HEADER));
        let mut last_t = f64::NEG_INFINITY;
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(cells.len(), 7);
            let reals: Vec<f64> = cells[..6].iter().map(|c| c.parse::<f64>().unwrap()).collect();
            prop_assert!(reals[0] > last_t);
            last_t = reals[0];
            prop_assert!(cells[6] == "true" || cells[6] == "false");
        }
    }

    #[test]
    fn converged_picard_has_small_residual(theta0 in small_data()) {
        let cfg = SolverConfig { dt: 0.05, t_end: 0.2, holder_pairs: 64, ..SolverConfig::default() };
        let out = picard_solve(&theta0.scaled(0.1), cfg.t_end, &cfg).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.residual <= 2.0 * cfg.picard_tol, "{}", out.residual);
    }

    #[test]
    fn presets_are_deterministic(seed in any::<u64>()) {
        let g = GridSpec::new(16, 15, 1.0, 1.0).unwrap();
        let p = Preset::RandomBand { j_lo: 1, j_hi: 4, amplitude: 1.0, seed };
        prop_assert_eq!(p.build(&g).unwrap().into_values(), p.build(&g).unwrap().into_values());
    }
}

#[test]
fn sine_mode_survives_a_round_trip() {
    let g = GridSpec::standard();
    let f = Field::from_fn(g, |_, x2| x2.sin());
    let c = forward_transform(&f).unwrap().get(0, 1).unwrap();
    assert_relative_eq!(c.re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(c.im, 0.0, epsilon = 1e-14);
}
