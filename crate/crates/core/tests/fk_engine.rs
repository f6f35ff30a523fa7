use std::sync::Arc;

use fkqsd::dynamics::{Dynamics, ModelSpec, ModelState};
use fkqsd::fk_engine::{estimate_eigenfunction, estimate_qt_f, run_killed_weighted_path};
use fkqsd::geometry::Domain;
use fkqsd::oracle::{radial_ground_eigen, radial_survival, RadialProblem};
use fkqsd::potentials::{
    ConfiningKind, DriftSpec, InteractionSpec, PairKind, PotentialSpec, Schrodinger, SingularKind,
};
use fkqsd::samplers::{LevyFamily, LevySpec, RngIncrements};
use fkqsd::streams::{stream, Purpose};

fn disk_model(radius: f64) -> ModelSpec<f64> {
    ModelSpec::new(
        Dynamics::Levy { levy: LevySpec::brownian(2).unwrap() },
        Schrodinger::Point(PotentialSpec::constant(0.0, 2).unwrap()),
        Domain::ball(vec![0.0, 0.0], radius).unwrap(),
    )
    .unwrap()
}

fn free_disk_problem(n: usize) -> RadialProblem<f64> {
    RadialProblem::radial(2, 1.0, Arc::new(|_: f64| 0.0), n).unwrap()
}

fn interpolate(nodes: &[f64], values: &[f64], r: f64) -> f64 {
    let i = nodes.partition_point(|&x| x < r).clamp(1, nodes.len() - 1);
    let (x0, x1) = (nodes[i - 1], nodes[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (r - x0) / (x1 - x0)
}

#[test]
fn disk_survival_matches_heat_equation() {
    let oracle = radial_survival(&free_disk_problem(400), 0.3, 0.0, 600).unwrap();
    assert!(oracle.dt_change < 1e-4);
    let est = estimate_qt_f(
        &disk_model(1.0),
        &ModelState::position(vec![0.0, 0.0]),
        &|_| 1.0,
        0.3,
        1e-4,
        4000,
        3,
    )
    .unwrap();
    let gap = (est.mean - oracle.value).abs();
    let se = (est.standard_error.powi(2) + oracle.dt_change.powi(2)).sqrt();
    assert!(gap <= 3.0 * se, "estimate {} vs oracle {} (se {se})", est.mean, oracle.value);
}

#[test]
fn disk_eigenfunction_profile_matches_oracle() {
    let ground = radial_ground_eigen(&free_disk_problem(400)).unwrap();
    let radii = [0.2, 0.4, 0.6, 0.8];
    let grid: Vec<_> = radii.iter().map(|&r| ModelState::position(vec![r, 0.0])).collect();
    let est = estimate_eigenfunction(&disk_model(1.0), &grid, ground.lambda, 0.5, 1e-4, 20_000, 5, None).unwrap();
    let exact: Vec<f64> = radii
        .iter()
        .map(|&r| interpolate(&ground.nodes, &ground.eigenfunction, r))
        .collect();
    // compare shapes: both profiles scaled to mean 1 over the grid
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (me, mx) = (mean(&est.values), mean(&exact));
    for (i, r) in radii.iter().enumerate() {
        let (a, b) = (est.values[i] / me, exact[i] / mx);
        assert!((a - b).abs() <= 0.05 * b, "r = {r}: estimate {a} vs oracle {b}");
    }
}

#[test]
fn rotation_invariant_model_gives_equal_values_on_a_circle() {
    let grid: Vec<_> = [0.0f64, 2.0, 4.0]
        .iter()
        .map(|&a| ModelState::position(vec![0.5 * a.cos(), 0.5 * a.sin()]))
        .collect();
    let est = estimate_eigenfunction(&disk_model(1.0), &grid, 2.9, 0.2, 1e-3, 4000, 8, None).unwrap();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let se = (est.standard_errors[i].powi(2) + est.standard_errors[j].powi(2)).sqrt();
            assert!((est.values[i] - est.values[j]).abs() <= 3.0 * se);
        }
    }
}

#[test]
fn enlarging_the_domain_never_kills_a_surviving_path() {
    let (small, large) = (disk_model(1.0), disk_model(1.5));
    let start = ModelState::position(vec![0.3, 0.2]);
    let mut killed_only_in_small = 0;
    for j in 0..500 {
        let run = |m: &ModelSpec<f64>| {
            let mut noise = RngIncrements(stream(17, Purpose::Path, 0, j));
            run_killed_weighted_path(m, start.clone(), 1e-3, 500, &mut noise).unwrap()
        };
        let (a, b) = (run(&small), run(&large));
        assert!(!a.alive || b.alive, "path {j} survives the small disk only");
        killed_only_in_small += (!a.alive && b.alive) as usize;
    }
    assert!(killed_only_in_small > 0);
}

#[test]
fn semigroup_composes_over_two_stages() {
    let v = PotentialSpec::new(
        SingularKind::None,
        ConfiningKind::Power { exponent: 2.0, coef: 0.5 },
        0.0,
        2,
    )
    .unwrap();
    let model = ModelSpec::new(
        Dynamics::overdamped(DriftSpec::linear(1.0).unwrap(), 2).unwrap(),
        Schrodinger::Point(v),
        Domain::full(2),
    )
    .unwrap();
    let x = ModelState::position(vec![0.8, -0.3]);
    let f = |s: &ModelState<f64>| s.x[0].cos() + 0.5;
    let (s, t, dt, n) = (0.4, 0.6, 1e-3, 20_000);
    let direct = estimate_qt_f(&model, &x, &f, s + t, dt, n, 1).unwrap();

    let values: Vec<f64> = (0..n as u64)
        .map(|j| {
            let mut noise = RngIncrements(stream(2, Purpose::Path, 0, j));
            let first = run_killed_weighted_path(&model, x.clone(), dt, 400, &mut noise).unwrap();
            let mut noise = RngIncrements(stream(2, Purpose::Path, 1, j));
            let second = run_killed_weighted_path(&model, first.endpoint, dt, 600, &mut noise).unwrap();
            f(&second.endpoint) * (first.log_weight + second.log_weight).exp()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64 + direct.standard_error.powi(2)).sqrt();
    assert!((mean - direct.mean).abs() <= 3.0 * se, "{mean} vs {}", direct.mean);
}

/// Fractions of paths whose minimum singular distance falls below each `δ`.
fn near_singular_fractions(model: &ModelSpec<f64>, start: &ModelState<f64>, deltas: &[f64]) -> Vec<f64> {
    let n = 10_000;
    let mut counts = vec![0usize; deltas.len()];
    for j in 0..n {
        let mut noise = RngIncrements(stream(23, Purpose::Path, 0, j));
        let path = run_killed_weighted_path(model, start.clone(), 1e-3, 1000, &mut noise).unwrap();
        assert!(path.min_singularity_distance > 0.0);
        for (c, &d) in counts.iter_mut().zip(deltas) {
            *c += (path.min_singularity_distance < d) as usize;
        }
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

#[test]
fn singular_set_is_not_approached_from_distance_one() {
    let coulomb = PotentialSpec::coulomb(1.0, 2).unwrap();
    let s2 = PotentialSpec::new(
        SingularKind::Riesz { exponent: 1.0, coef: 1.0 },
        ConfiningKind::Power { exponent: 2.0, coef: 1.0 },
        0.0,
        2,
    )
    .unwrap();
    let confining = PotentialSpec::new(
        SingularKind::None,
        ConfiningKind::Power { exponent: 2.0, coef: 0.5 },
        0.0,
        2,
    )
    .unwrap();
    let drift = DriftSpec::gradient_power(1.0, 4.0).unwrap();
    let cases = [
        (
            ModelSpec::new(Dynamics::overdamped(drift, 2).unwrap(), Schrodinger::Point(coulomb.clone()), Domain::full(2)),
            ModelState::position(vec![1.0, 0.0]),
        ),
        (
            ModelSpec::new(
                Dynamics::Levy { levy: LevySpec::new(LevyFamily::IsotropicStable { alpha: 1.5 }, 2).unwrap() },
                Schrodinger::Point(s2),
                Domain::full(2),
            ),
            ModelState::position(vec![1.0, 0.0]),
        ),
        (
            ModelSpec::new(Dynamics::kinetic(drift, 1.0, 2).unwrap(), Schrodinger::Point(coulomb), Domain::full(2)),
            ModelState::phase(vec![1.0, 0.0], vec![0.0, 0.0]),
        ),
        (
            ModelSpec::new(
                Dynamics::interacting(2, LevySpec::brownian(2).unwrap()).unwrap(),
                Schrodinger::Interaction(
                    InteractionSpec::new(2, confining, PairKind::Riesz { exponent: 1.0, coef: 1.0 }).unwrap(),
                ),
                Domain::full(2),
            ),
            ModelState::position(vec![0.5, 0.0, -0.5, 0.0]),
        ),
    ];
    for (model, start) in cases {
        let model = model.unwrap();
        assert_eq!(model.singularity_distance(&start), 1.0);
        let frac = near_singular_fractions(&model, &start, &[1e-1, 1e-2, 1e-3]);
        assert!(frac.windows(2).all(|w| w[1] <= w[0]), "{frac:?}");
        assert!(frac[2] < 1e-3, "{frac:?}");
    }
}
