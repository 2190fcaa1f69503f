use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grid::{GridDomain, GridFunction, GridLevel, MultiIndex};

fn closure(n: u64) -> Arc<GridDomain> {
    let level = GridLevel::new(n, 1.0).unwrap();
    Arc::new(GridDomain::lattice_box(level, &[0], &[n as i64]).unwrap())
}

fn square(n: u64) -> Arc<GridDomain> {
    let level = GridLevel::new(n, 1.0).unwrap();
    Arc::new(GridDomain::lattice_box(level, &[0, 0], &[n as i64, n as i64]).unwrap())
}

fn laplacian(domain: &Arc<GridDomain>) -> AssembledSystem {
    let spec = OperatorSpec::negative_laplacian(domain.dim()).unwrap();
    assemble(&spec, Arc::clone(domain), Boundary::Dirichlet).unwrap()
}

#[test]
fn one_dimensional_stencil() {
    let n = 16;
    let sys = laplacian(&closure(n));
    let m = sys.matrix();
    let nn = (n * n) as f64;
    for i in 1..n as usize {
        assert!(!sys.is_boundary_row(i));
        let row: Vec<(usize, f64)> = m.row(i).collect();
        assert_eq!(row, vec![(i - 1, -nn), (i, 2.0 * nn), (i + 1, -nn)]);
    }
    assert!(sys.is_boundary_row(0) && sys.is_boundary_row(n as usize));
    assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 1.0)]);
    assert_eq!(sys.boundary_count(), 2);
}

#[test]
fn laplacian_of_square_is_minus_two() {
    let d = closure(64);
    let sys = laplacian(&d);
    let u = GridFunction::sample(Arc::clone(&d), |x| x[0] * x[0]).unwrap();
    let lu = sys.apply(&u).unwrap();
    for i in 1..64 {
        assert!((lu.values()[i] + 2.0).abs() < 1e-9, "{}", lu.values()[i]);
    }
}

#[test]
fn zero_coefficients_leave_only_boundary_rows() {
    let d = closure(8);
    let spec = OperatorSpec::new(1, 1)
        .unwrap()
        .with_constant_term(MultiIndex::unit(1, 0), MultiIndex::unit(1, 0), 0.0)
        .unwrap();
    let sys = assemble(&spec, Arc::clone(&d), Boundary::Dirichlet).unwrap();
    for i in 1..8 {
        assert_eq!(sys.matrix().row(i).count(), 0);
    }
    assert_eq!(sys.boundary_count(), 2);
}

#[test]
fn two_dimensional_five_point_stencil() {
    let n = 8;
    let d = square(n);
    let sys = laplacian(&d);
    let nn = (n * n) as f64;
    let centre = d.id_of(&[3, 4]).unwrap();
    let mut row: Vec<(usize, f64)> = sys.matrix().row(centre).collect();
    let mut expected = vec![
        (centre, 4.0 * nn),
        (d.id_of(&[2, 4]).unwrap(), -nn),
        (d.id_of(&[4, 4]).unwrap(), -nn),
        (d.id_of(&[3, 3]).unwrap(), -nn),
        (d.id_of(&[3, 5]).unwrap(), -nn),
    ];
    row.sort_by_key(|e| e.0);
    expected.sort_by_key(|e| e.0);
    assert_eq!(row, expected);
    assert_eq!(sys.boundary_count(), 4 * n as usize);
}

#[test]
fn non_finite_coefficient_is_rejected() {
    let spec = OperatorSpec::new(1, 1)
        .unwrap()
        .with_term(MultiIndex::unit(1, 0), MultiIndex::unit(1, 0), |x| 1.0 / (x[0] - 0.5))
        .unwrap();
    let err = assemble(&spec, closure(8), Boundary::Dirichlet).unwrap_err();
    assert!(matches!(err, crate::Error::NonFiniteCoefficient { .. }));
}

#[test]
fn matrix_matches_composed_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d1 = closure(32);
    let spec1 = OperatorSpec::new(1, 2)
        .unwrap()
        .with_term(MultiIndex::new(vec![2]), MultiIndex::new(vec![2]), |x| 1.0 + x[0] * x[0])
        .unwrap()
        .with_term(MultiIndex::new(vec![1]), MultiIndex::new(vec![0]), |x| (3.0 * x[0]).sin())
        .unwrap()
        .with_mass(0.5)
        .unwrap();
    let d2 = square(12);
    let spec2 = OperatorSpec::new(2, 1)
        .unwrap()
        .with_term(MultiIndex::unit(2, 0), MultiIndex::unit(2, 1), |x| 2.0 + x[0] * x[1])
        .unwrap()
        .with_term(MultiIndex::unit(2, 1), MultiIndex::unit(2, 1), |x| (x[0] + 1.0).ln() + 1.0)
        .unwrap();
    for (spec, d, boundary) in
        [(&spec1, &d1, Boundary::Dirichlet), (&spec2, &d2, Boundary::Dirichlet), (&spec2, &d2, Boundary::Periodic)]
    {
        let sys = assemble(spec, Arc::clone(d), boundary).unwrap();
        for _ in 0..100 {
            let values = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = GridFunction::new(Arc::clone(d), values).unwrap();
            let r = sys.stencil_residual(&u).unwrap();
            assert!(r.within_ulps(8.0), "{boundary:?}, dim {}: {} ulp", d.dim(), r.max_ulps());
        }
    }
}

#[test]
fn constant_symmetric_coefficients_give_symmetric_interior() {
    let d = square(10);
    let spec = OperatorSpec::new(2, 1)
        .unwrap()
        .with_constant_term(MultiIndex::unit(2, 0), MultiIndex::unit(2, 0), 2.0)
        .unwrap()
        .with_constant_term(MultiIndex::unit(2, 0), MultiIndex::unit(2, 1), 0.5)
        .unwrap()
        .with_constant_term(MultiIndex::unit(2, 1), MultiIndex::unit(2, 0), 0.5)
        .unwrap()
        .with_constant_term(MultiIndex::unit(2, 1), MultiIndex::unit(2, 1), 1.0)
        .unwrap();
    let sys = assemble(&spec, Arc::clone(&d), Boundary::Dirichlet).unwrap();
    let block = sys.matrix().principal_submatrix(&sys.interior_rows());
    assert!(block.is_symmetric(0.0));
}

#[test]
fn smallest_eigenvalue_matches_closed_form() {
    for n in [16u64, 64] {
        let sys = laplacian(&closure(n));
        let lambda = smallest_eigenvalue(&sys, 1e-13, 500).unwrap();
        let nf = n as f64;
        let exact = 4.0 * nf * nf * (PI / (2.0 * nf)).sin().powi(2);
        assert!((lambda - exact).abs() < 1e-9 * exact, "{lambda} vs {exact}");
    }
    let sys = laplacian(&square(16));
    let lambda = smallest_eigenvalue(&sys, 1e-13, 500).unwrap();
    let exact = 8.0 * 256.0 * (PI / 32.0).sin().powi(2);
    assert!((lambda - exact).abs() < 1e-9 * exact, "{lambda} vs {exact}");
}

#[test]
fn zero_rhs_gives_zero() {
    let d = closure(32);
    let sys = laplacian(&d);
    for opts in [SolveOptions::direct(), SolveOptions::cg()] {
        let u = solve(&sys, &GridFunction::zeros(Arc::clone(&d)), opts).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn green_tent() {
    let n = 64u64;
    let d = closure(n);
    let sys = laplacian(&d);
    for opts in [SolveOptions::direct(), SolveOptions::cg()] {
        let g = fundamental_solution(&sys, &[0.5], opts).unwrap();
        for i in 0..=n as i64 {
            let x = i as f64 / n as f64;
            let exact = if x <= 0.5 { 0.5 * x } else { 0.5 * (1.0 - x) };
            assert!((g.at(&[i]) - exact).abs() < 1e-9, "{i}: {}", g.at(&[i]));
        }
        let back = sys.apply(&g).unwrap();
        assert!((back.at(&[32]) - n as f64).abs() < 1e-8 * n as f64);
    }
}

#[test]
fn direct_and_cg_agree_in_two_dimensions() {
    let d = square(24);
    let sys = laplacian(&d);
    let f = GridFunction::sample(Arc::clone(&d), |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).sin() + x[0]).unwrap();
    let a = solve_detailed(&sys, &f, SolveOptions::direct()).unwrap();
    let b = solve_detailed(&sys, &f, SolveOptions::cg()).unwrap();
    assert!(a.relative_residual <= 1e-10 && b.relative_residual <= 1e-10);
    let diff = a.value.values().iter().zip(b.value.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-9, "{diff}");
    for i in 0..d.len() {
        if sys.is_boundary_row(i) {
            assert_eq!(a.value.values()[i], 0.0);
        }
    }
}

#[test]
fn cg_rejects_non_symmetric_systems() {
    let spec = OperatorSpec::new(1, 1)
        .unwrap()
        .with_term(MultiIndex::unit(1, 0), MultiIndex::unit(1, 0), |x| 1.0 + x[0])
        .unwrap()
        .with_constant_term(MultiIndex::unit(1, 0), MultiIndex::zero(1), 3.0)
        .unwrap();
    let d = closure(16);
    let sys = assemble(&spec, Arc::clone(&d), Boundary::Dirichlet).unwrap();
    let f = GridFunction::constant(Arc::clone(&d), 1.0);
    assert!(matches!(solve(&sys, &f, SolveOptions::cg()), Err(crate::Error::NotSymmetric)));
    assert!(solve(&sys, &f, SolveOptions::direct()).is_ok());
}

#[test]
fn poisson_sine_converges_at_second_order() {
    let mut errors = Vec::new();
    for n in [32u64, 64, 128] {
        let d = closure(n);
        let sys = laplacian(&d);
        let f = GridFunction::sample(Arc::clone(&d), |x| PI * PI * (PI * x[0]).sin()).unwrap();
        let u = solve(&sys, &f, SolveOptions::default()).unwrap();
        let err = (0..d.len()).fold(0.0f64, |m, i| m.max((u.values()[i] - (PI * d.coords(i)[0]).sin()).abs()));
        errors.push(err);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.9, "{errors:?}");
    }
}

#[test]
fn convolution_with_spikes_is_shift_and_superposition() {
    let n = 40u64;
    let level = GridLevel::new(n, 1.0).unwrap();
    let d = Arc::new(GridDomain::lattice_box(level, &[0], &[n as i64 - 1]).unwrap());
    let spec = OperatorSpec::negative_laplacian(1).unwrap().with_mass(1.0).unwrap();
    let sys = assemble(&spec, Arc::clone(&d), Boundary::Periodic).unwrap();
    let u0 = fundamental_solution(&sys, &[0.0], SolveOptions::direct()).unwrap();
    let nf = n as f64;
    let spike = |k: usize, w: f64| {
        let mut v = vec![0.0; d.len()];
        v[k] = w * nf;
        GridFunction::new(Arc::clone(&d), v).unwrap()
    };
    let shifted = convolve(&spike(7, 1.0), &u0, ConvolutionMode::Periodic).unwrap();
    for i in 0..n as i64 {
        assert_eq!(shifted.at(&[i]), u0.at(&[(i - 7).rem_euclid(n as i64)]));
    }
    let a = convolve(&spike(3, 1.5), &u0, ConvolutionMode::Periodic).unwrap();
    let b = convolve(&spike(20, -0.25), &u0, ConvolutionMode::Periodic).unwrap();
    let both =
        convolve(&spike(3, 1.5).zip_with(&spike(20, -0.25), |x, y| x + y).unwrap(), &u0, ConvolutionMode::Periodic)
            .unwrap();
    for i in 0..d.len() {
        let sum = a.values()[i] + b.values()[i];
        assert!((both.values()[i] - sum).abs() <= 2.0 * f64::EPSILON * sum.abs().max(u0.max_abs()));
    }
    let g = GridFunction::sample(Arc::clone(&d), |x| (2.0 * PI * x[0]).cos() + 0.3).unwrap();
    let conv = convolve(&g, &u0, ConvolutionMode::Periodic).unwrap();
    let direct = solve(&sys, &g, SolveOptions::direct()).unwrap();
    for i in 0..d.len() {
        assert!((conv.values()[i] - direct.values()[i]).abs() < 1e-10);
    }
}

#[test]
fn heat_equation_trivial_cases() {
    let d = closure(32);
    let sys = assemble(&OperatorSpec::new(1, 1).unwrap(), Arc::clone(&d), Boundary::Periodic).unwrap();
    let u0 = GridFunction::sample(Arc::clone(&d), |x| x[0] * (1.0 - x[0])).unwrap();
    for scheme in [Scheme::ImplicitEuler, Scheme::Trapezoidal] {
        let opts = TimeOptions { scheme, dt: 0.01, ..TimeOptions::default() };
        let zero = GridFunction::zeros(Arc::clone(&d));
        let tr = time_integrate(&sys, None, &zero, &u0, 0.5, opts).unwrap();
        assert_eq!(tr.final_time(), 0.5);
        assert_eq!(tr.last().values(), u0.values());
        let c = GridFunction::constant(Arc::clone(&d), 2.0);
        let tr = time_integrate(&sys, None, &c, &u0, 0.5, opts).unwrap();
        for (a, b) in tr.last().values().iter().zip(u0.values()) {
            assert!((a - (b + 1.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn heat_equation_decays_like_the_sine_mode() {
    let d = closure(64);
    let sys = laplacian(&d);
    let u0 = GridFunction::sample(Arc::clone(&d), |x| (PI * x[0]).sin()).unwrap();
    let zero = GridFunction::zeros(Arc::clone(&d));
    let opts = TimeOptions { dt: 1e-3, ..TimeOptions::default() };
    let tr = time_integrate(&sys, None, &zero, &u0, 0.1, opts).unwrap();
    let decay = (-PI * PI * 0.1).exp();
    let err =
        (0..d.len()).fold(0.0f64, |m, i| m.max((tr.last().values()[i] - decay * (PI * d.coords(i)[0]).sin()).abs()));
    assert!(err < 2e-4, "{err}");
}

#[test]
fn reaction_term_uses_newton() {
    let d = closure(16);
    let sys = assemble(&OperatorSpec::new(1, 1).unwrap(), Arc::clone(&d), Boundary::Periodic).unwrap();
    let u0 = GridFunction::constant(Arc::clone(&d), 0.5);
    let reaction = Reaction::new(|u| -u * u, |u| -2.0 * u);
    let opts = TimeOptions { scheme: Scheme::Trapezoidal, dt: 1e-3, ..TimeOptions::default() };
    let tr = time_integrate(&sys, Some(&reaction), &GridFunction::zeros(Arc::clone(&d)), &u0, 1.0, opts).unwrap();
    let exact = 0.5 / (1.0 + 0.5);
    for v in tr.last().values() {
        assert!((v - exact).abs() < 1e-6, "{v}");
    }
}
