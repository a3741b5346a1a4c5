use super::*;
use crate::market::{Commodity, JumpSpec, RegimeParams, SeasonalityFn, SizeDistribution};
use approx::assert_relative_eq;

fn quiet_regime() -> RegimeParams {
    RegimeParams {
        alpha_e: 0.0,
        alpha_g: 0.0,
        sigma_e: 0.0,
        sigma_g: 0.0,
        rho: 0.0,
        jump_e: JumpSpec::none(),
        jump_g: JumpSpec::none(),
        seasonality_e: SeasonalityFn::constant(30.0),
        seasonality_g: SeasonalityFn::constant(3.0),
        switch_rate: 0.0,
    }
}

fn small_grid() -> GridSpec {
    GridSpec::two_price(100.0, 10, 10.0, 8, 12)
}

fn solver(regime: RegimeParams, r: f64, grid: &GridSpec) -> Solver {
    let model = ModelSpec::single(regime, r, 10.0);
    Solver::new(&model, &PlantSpec::default(), &CopulaSpec::default(), grid).unwrap()
}

#[test]
fn diffusion_on_constant_lattice() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    let lat = Lattice::from_fn(s.geometry().shape, 1, |_, _, _, _| 7.0);
    for (i, j, u) in [(1, 1, 0), (5, 3, 6), (9, 7, 12)] {
        assert_relative_eq!(s.diffusion_operator(&lat, 0, i, j, u).unwrap(), -0.35, epsilon = 1e-12);
    }
    assert!(s.diffusion_operator(&lat, 0, 0, 3, 0).is_err());
}

#[test]
fn diffusion_on_linear_lattice() {
    let mut p = RegimeParams::base();
    p.rho = 0.0;
    let s = solver(p, 0.05, &small_grid());
    let g = *s.geometry();
    let lat = Lattice::from_fn(g.shape, 1, |_, i, _, _| g.s_e(i));
    let t = s.calendar_time(0);
    for i in 1..10 {
        let mu = p.effective_drift(Commodity::Electricity, g.s_e(i), t, s.model().drift_convention);
        let got = s.diffusion_operator(&lat, 0, i, 4, 3).unwrap();
        assert_relative_eq!(got, mu - 0.05 * g.s_e(i), epsilon = 1e-10);
    }
}

#[test]
fn cross_stencil_exact_on_bilinear() {
    let mut p = quiet_regime();
    p.sigma_e = 1.0;
    p.sigma_g = 1.0;
    p.rho = 0.15;
    let s = solver(p, 0.0, &small_grid());
    let g = *s.geometry();
    let lat = Lattice::from_fn(g.shape, 1, |_, i, j, _| g.s_e(i) * g.s_g(j));
    for i in 1..10 {
        for j in 1..8 {
            assert_relative_eq!(s.diffusion_operator(&lat, 0, i, j, 2).unwrap(), 0.15, epsilon = 1e-10);
        }
    }
}

#[test]
fn marginal_jump_examples() {
    let grid = small_grid();
    let s = solver(quiet_regime(), 0.05, &grid);
    let g = *s.geometry();
    let lat = Lattice::from_fn(g.shape, 1, |_, i, j, u| (i * 3 + j * 5 + u) as f64);
    assert_eq!(s.marginal_jump_operator_e(&lat, 0, 4, 4, 4).unwrap(), 0.0);

    let mut p = quiet_regime();
    p.jump_e = JumpSpec {
        intensity: 0.3,
        size: SizeDistribution::PointMass { size: 3.0 * g.d_se },
    };
    let s = solver(p, 0.05, &grid);
    let constant = Lattice::from_fn(g.shape, 1, |_, _, _, _| 4.0);
    assert_eq!(s.marginal_jump_operator_e(&constant, 0, 4, 4, 4).unwrap(), 0.0);
    let linear = Lattice::from_fn(g.shape, 1, |_, i, _, _| g.s_e(i));
    for i in 1..10 {
        // the atom at cell 3 pushes most of these stencils past the grid edge
        assert_relative_eq!(s.marginal_jump_operator_e(&linear, 0, i, 2, 5).unwrap(), 0.3, epsilon = 1e-12);
    }
}

#[test]
fn linear_extension_consistency() {
    let mut p = RegimeParams::base();
    p.jump_e.size = SizeDistribution::TruncatedNormal { mean: 70.0, sd: 10.0 };
    let s = solver(p, 0.05, &GridSpec::two_price(100.0, 20, 10.0, 10, 6));
    let g = *s.geometry();
    let lat = Lattice::from_fn(g.shape, 1, |_, i, j, _| 2.0 * g.s_e(i) - 3.0 * g.s_g(j) + 1.0);
    let (nu_e, nu_g) = s.marginal_masses(0);
    let (se, sg): (f64, f64) = (nu_e.iter().sum(), nu_g.iter().sum());
    assert!(se >= (1.0 - 1e-6) * 0.1 && sg >= (1.0 - 1e-6) * 0.4);
    for i in 1..20 {
        for j in 1..10 {
            let he = s.marginal_jump_operator_e(&lat, 0, i, j, 1).unwrap();
            let hg = s.marginal_jump_operator_g(&lat, 0, i, j, 1).unwrap();
            assert_relative_eq!(he, 2.0 * se, max_relative = 1e-12);
            assert_relative_eq!(hg, -3.0 * sg, max_relative = 1e-12);
        }
    }
}

#[test]
fn cross_jump_examples() {
    let grid = small_grid();
    let model = ModelSpec::single(RegimeParams::base(), 0.05, 10.0);
    let plant = PlantSpec::default();
    let s = Solver::new(&model, &plant, &CopulaSpec::Independence, &grid).unwrap();
    let g = *s.geometry();
    let wavy = Lattice::from_fn(g.shape, 1, |_, i, j, u| ((i * j) as f64).sin() + u as f64);
    assert_eq!(s.cross_jump_operator(&wavy, 0, 3, 3, 3).unwrap(), 0.0);

    let s = Solver::new(&model, &plant, &CopulaSpec::default(), &grid).unwrap();
    let constant = Lattice::from_fn(g.shape, 1, |_, _, _, _| 5.0);
    assert!(s.cross_jump_operator(&constant, 0, 3, 3, 3).unwrap().abs() < 1e-14);

    // pointwise and table-based evaluation agree
    let field = s.cross_jump_field(&wavy, 0).unwrap();
    for i in 1..10 {
        for j in 1..8 {
            let a = s.cross_jump_operator(&wavy, 0, i, j, 4).unwrap();
            let b = field[g.shape.idx(i, j, 4)];
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    let s = s.with_cross_kernel(|_, _| 1.0);
    let (ke, kg) = s.quadrature_cells(0);
    let bilinear = Lattice::from_fn(g.shape, 1, |_, i, j, _| g.s_e(i) * g.s_g(j));
    let expect = ke as f64 * g.d_se * kg as f64 * g.d_sg;
    for (i, j) in [(1, 1), (4, 5), (9, 7)] {
        assert_relative_eq!(s.cross_jump_operator(&bilinear, 0, i, j, 0).unwrap(), expect, max_relative = 1e-10);
        assert_relative_eq!(
            s.cross_jump_field(&bilinear, 0).unwrap()[g.shape.idx(i, j, 0)],
            expect,
            max_relative = 1e-10
        );
    }
}

fn objective(s: &Solver, lat: &Lattice, i: usize, j: usize, u: usize, c: f64) -> f64 {
    let g = s.geometry();
    let p = s.plant();
    let a = p.drift_unchecked(g.l(u), c);
    let nl = g.shape.nl;
    let d = if a >= 0.0 {
        if u + 1 < nl {
            (lat.get(0, i, j, u + 1) - lat.get(0, i, j, u)) / g.d_l
        } else {
            0.0
        }
    } else if u > 0 {
        (lat.get(0, i, j, u) - lat.get(0, i, j, u - 1)) / g.d_l
    } else {
        0.0
    };
    p.output_unchecked(g.l(u)) * g.s_e(i) - g.s_g(j) * c + a * d
}

#[test]
fn control_examples() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    let g = *s.geometry();
    let p = *s.plant();
    let flat = Lattice::from_fn(g.shape, 1, |_, _, _, _| 1.0);
    for u in 0..g.shape.nl {
        let (c, _) = s.optimize_control(&flat, 0, 3, 4, u).unwrap();
        assert_eq!(c, p.control_bounds_unchecked(g.l(u)).0);
    }
    let rising = Lattice::from_fn(g.shape, 1, |_, _, _, u| 10.0 * u as f64);
    for u in 0..g.shape.nl - 1 {
        let (c, _) = s.optimize_control(&rising, 0, 3, 0, u).unwrap();
        assert_eq!(c, p.control_bounds_unchecked(g.l(u)).1);
    }
    for u in 0..g.shape.nl {
        let (c, h) = s.optimize_control(&flat, 0, 7, 0, u).unwrap();
        assert_eq!(c, p.control_bounds_unchecked(g.l(u)).0);
        assert_eq!(h, p.output_unchecked(g.l(u)) * g.s_e(7));
    }
}

#[test]
fn control_beats_dense_search() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    let g = *s.geometry();
    let lat = Lattice::from_fn(g.shape, 1, |_, i, j, u| {
        let l = g.l(u);
        (l - 300.0).max(0.0) * 0.4 * i as f64 - 2.0 * j as f64 + 0.3 * ((u * 7) as f64).sin() * l
    });
    for i in [0, 3, 10] {
        for j in [0, 2, 8] {
            for u in 0..g.shape.nl {
                let (c, h) = s.optimize_control(&lat, 0, i, j, u).unwrap();
                let (lo, hi) = s.plant().control_bounds_unchecked(g.l(u));
                assert!(c >= lo && c <= hi);
                assert_relative_eq!(h, objective(&s, &lat, i, j, u, c), max_relative = 1e-12);
                for k in 0..=20_000 {
                    let cc = lo + (hi - lo) * k as f64 / 20_000.0;
                    let f = objective(&s, &lat, i, j, u, cc);
                    assert!(f <= h + 1e-9 * h.abs().max(1.0), "u={u} c={cc}: {f} > {h}");
                }
            }
        }
    }
}

#[test]
fn boundary_corners() {
    let s = solver(quiet_regime(), 0.0, &small_grid());
    let g = *s.geometry();
    let zero = s.zero_lattice();
    let rates = s.apply_boundary_conditions(&zero, 0).unwrap();
    let last_j = g.shape.ng - 1;
    for r in &rates {
        if r.i == 0 && r.j == 0 {
            assert_eq!(r.rate, 0.0);
        }
        if r.i == 0 && r.j == last_j {
            assert_eq!(r.control, s.plant().control_bounds_unchecked(g.l(r.u)).0);
        }
    }
    let n_boundary = g.shape.ne * g.shape.ng - (g.shape.ne - 2) * (g.shape.ng - 2);
    assert_eq!(rates.len(), n_boundary * g.shape.nl);
}

#[test]
fn first_step_from_zero() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    let g = *s.geometry();
    let p = *s.plant();
    let (v1, pol) = s.step(&s.zero_lattice()).unwrap();
    let dt = s.delta_tau();
    for i in 0..g.shape.ne {
        for j in 0..g.shape.ng {
            for u in 0..g.shape.nl {
                let l = g.l(u);
                let cmin = p.control_bounds_unchecked(l).0;
                let expect = dt * (p.output_unchecked(l) * g.s_e(i) - g.s_g(j) * cmin);
                assert_relative_eq!(v1.get(0, i, j, u), expect, max_relative = 1e-12, epsilon = 1e-12);
                assert_eq!(pol.get(0, i, j, u), cmin);
            }
        }
    }
}

#[test]
fn regime_decoupling_and_symmetry() {
    let grid = GridSpec {
        steps: StepCount::Fixed(400),
        ..GridSpec::two_price(80.0, 8, 8.0, 6, 8)
    };
    let plant = PlantSpec::default();
    let cop = CopulaSpec::default();
    let (a, b) = (RegimeParams::base(), RegimeParams::volatile());
    let two = ModelSpec {
        regimes: vec![a, b],
        ..ModelSpec::single(a, 0.05, 10.0)
    };
    let both = Solver::new(&two, &plant, &cop, &grid).unwrap().solve(&[10.0]).unwrap();
    for (l, r) in [a, b].into_iter().enumerate() {
        let one = Solver::new(&ModelSpec::single(r, 0.05, 10.0), &plant, &cop, &grid)
            .unwrap()
            .solve(&[10.0])
            .unwrap();
        assert_eq!(both.terminal.regime(l), one.terminal.regime(0));
    }

    let mut sym = a;
    sym.switch_rate = 0.2;
    let model = ModelSpec {
        regimes: vec![sym, sym],
        ..ModelSpec::single(a, 0.05, 10.0)
    };
    let s = Solver::new(&model, &plant, &cop, &grid).unwrap();
    let mut lat = s.zero_lattice();
    for _ in 0..50 {
        lat = s.step(&lat).unwrap().0;
        assert_eq!(lat.regime(0), lat.regime(1));
    }
}

#[test]
fn stability_examples() {
    let plant = PlantSpec {
        ramp_limit: 0.0,
        ..PlantSpec::default()
    };
    let model = ModelSpec::single(quiet_regime(), 0.05, 200.0);
    let grid = small_grid();
    assert_relative_eq!(stability_bound(&grid, &model, &plant), 18.0, epsilon = 1e-12);

    let mut p = quiet_regime();
    p.sigma_e = 0.5;
    let model = ModelSpec::single(p, 0.0, 200.0);
    let a = stability_bound(&grid, &model, &plant);
    let fine = GridSpec { n_e: 20, ..grid };
    let b = stability_bound(&fine, &model, &plant);
    assert!(b <= a / 4.0 * (1.0 + 1e-12));

    let model = ModelSpec::single(quiet_regime(), 0.0, 200.0);
    let grid = GridSpec { n_l: 29, ..grid };
    let dt = stability_bound(&grid, &model, &PlantSpec::default());
    assert_relative_eq!(dt, 1.2, epsilon = 1e-12);
}

#[test]
fn forced_steps_above_limit_rejected() {
    let grid = GridSpec {
        steps: StepCount::Fixed(1),
        ..small_grid()
    };
    let model = ModelSpec::single(RegimeParams::base(), 0.05, 200.0);
    match Solver::new(&model, &PlantSpec::default(), &CopulaSpec::default(), &grid) {
        Err(Error::Unstable { delta_tau, delta_tau_max }) => assert!(delta_tau > delta_tau_max),
        other => panic!("{other:?}"),
    }
}

#[test]
fn snapshots_outside_horizon_rejected() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    assert!(matches!(s.solve(&[11.0]), Err(Error::SnapshotOutOfRange { .. })));
    assert!(matches!(s.solve(&[-1.0]), Err(Error::SnapshotOutOfRange { .. })));
}

#[test]
fn short_horizon_gives_small_values() {
    let model = ModelSpec::single(RegimeParams::base(), 0.05, 1e-3);
    let grid = GridSpec {
        steps: StepCount::Fixed(1),
        ..small_grid()
    };
    let s = Solver::new(&model, &PlantSpec::default(), &CopulaSpec::default(), &grid).unwrap();
    let sol = s.solve(&[0.0, 1e-3]).unwrap();
    assert!(sol.terminal.max_abs() <= s.payoff_bound());
    assert_eq!(sol.snapshots.len(), 2);
    assert!(sol.snapshots[0].values.max_abs() == 0.0);
}

#[test]
fn full_solve_stays_bounded_and_admissible() {
    let s = solver(RegimeParams::base(), 0.05, &small_grid());
    let sol = s.solve(&[0.0, 5.0, 10.0]).unwrap();
    assert!(sol.terminal.values.iter().all(|v| v.is_finite()));
    assert!(sol.terminal.max_abs() <= s.payoff_bound());
    let g = sol.geometry;
    for snap in &sol.snapshots {
        for i in 0..g.shape.ne {
            for j in 0..g.shape.ng {
                for u in 0..g.shape.nl {
                    let (lo, hi) = s.plant().control_bounds_unchecked(g.l(u));
                    let c = snap.policy.get(0, i, j, u);
                    assert!(c >= lo && c <= hi);
                }
            }
        }
    }
}

#[test]
fn fixed_gas_needs_quiet_gas() {
    let grid = GridSpec::fixed_gas(150.0, 10, 3.5, 10);
    let model = ModelSpec::single(RegimeParams::base(), 0.05, 10.0);
    assert!(Solver::new(&model, &PlantSpec::default(), &CopulaSpec::default(), &grid).is_err());
    let mut p = RegimeParams::base();
    p.alpha_g = 0.0;
    p.sigma_g = 0.0;
    p.jump_g = JumpSpec::none();
    p.seasonality_g = SeasonalityFn::constant(3.5);
    let s = solver(p, 0.05, &grid);
    assert_eq!(s.geometry().shape.ng, 1);
    let sol = s.solve(&[10.0]).unwrap();
    assert!(sol.terminal.values.iter().all(|v| v.is_finite()));
}
