use aps_core::fem::{classify, h1_relative_error, solve_aps, solve_p_direct};
use aps_core::mesh::{build_perturbed_mesh, build_structured_mesh};
use aps_core::problem::{CaseKind, Problem};
use aps_core::{Mesh64, Problem32, Problem64};

fn uniform(n: usize, problem: &Problem64) -> Mesh64 {
    let h = 1.0 / n as f64;
    classify(&build_structured_mesh(n, n, h, h).unwrap(), problem).unwrap()
}

fn aps_error(n: usize, alpha: f64, eps: f64) -> f64 {
    let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, alpha, eps).unwrap();
    let mesh = uniform(n, &pr);
    let sol = solve_aps(&mesh, &pr).unwrap();
    h1_relative_error(&mesh, &sol.phi, pr.exact.as_deref().unwrap()).unwrap()
}

#[test]
fn p_and_aps_agree_at_eps_one() {
    let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, 1.0, 1.0).unwrap();
    let mesh = classify(&build_perturbed_mesh(16, 16, 0.2, 3).unwrap(), &pr).unwrap();
    let a = solve_aps(&mesh, &pr).unwrap();
    let p = solve_p_direct(&mesh, &pr).unwrap();
    let scale = p.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.phi.iter().zip(&p.phi).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-10 * scale, "max difference {diff:e}");
}

#[test]
fn first_order_convergence() {
    let e: Vec<f64> = [10, 20, 40].iter().map(|&n| aps_error(n, 0.0, 1.0)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 1.0).abs() < 0.15, "order {order} from {e:?}");
    }
}

#[test]
fn error_is_uniform_in_eps() {
    for n in [10, 20] {
        let base = aps_error(n, 2.0, 1.0);
        for eps in [1e-2, 1e-6, 1e-10] {
            let r = aps_error(n, 2.0, eps) / base;
            assert!((0.4..2.5).contains(&r), "n={n} eps={eps:e} ratio {r}");
        }
    }
}

#[test]
fn p_model_degenerates_while_aps_stays_accurate() {
    // grid-aligned field: the P matrix inherits the 1/eps spread
    let aligned: Problem64 = Problem::manufactured(CaseKind::Smooth, 0.0, 1e-10).unwrap();
    let mesh = uniform(10, &aligned);
    let cond = solve_p_direct(&mesh, &aligned).unwrap().stats.condition.unwrap();
    assert!(cond >= 1e9, "cond {cond:e}");

    // curved field: P locks onto phi_h ~ eps, APS does not
    let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, 2.0, 1e-10).unwrap();
    let mesh = uniform(10, &pr);
    let p = solve_p_direct(&mesh, &pr).unwrap();
    assert!(p.phi.iter().all(|v| v.abs() < 1e-6));
    let sol = solve_aps(&mesh, &pr).unwrap();
    assert!(sol.stats.relative_residual() <= 1e-8);
    let err = h1_relative_error(&mesh, &sol.phi, pr.exact.as_deref().unwrap()).unwrap();
    assert!((err / 0.11 - 1.0).abs() <= 0.4, "err {err}");
}

#[test]
fn condition_grows_like_inverse_eps() {
    let cond = |eps: f64| {
        let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, 0.0, eps).unwrap();
        let mesh = uniform(8, &pr);
        solve_p_direct(&mesh, &pr).unwrap().stats.condition.unwrap()
    };
    let r = cond(1e-6) / cond(1e-4);
    assert!((50.0..200.0).contains(&r), "ratio {r}");
}

#[test]
fn solves_are_bitwise_reproducible() {
    let pr: Problem64 = Problem::manufactured(CaseKind::Layer, 1.5, 1e-8).unwrap();
    let mesh = classify(&build_perturbed_mesh(12, 12, 0.2, 9).unwrap(), &pr).unwrap();
    let a = solve_aps(&mesh, &pr).unwrap();
    let b = solve_aps(&mesh, &pr).unwrap();
    assert_eq!(a.phi, b.phi);
    assert_eq!(a.q, b.q);
}

#[test]
fn single_precision_path() {
    let pr: Problem32 = Problem::manufactured(CaseKind::Smooth, 0.0, 1.0).unwrap();
    let mesh = classify(&build_structured_mesh(8, 8, 0.125f32, 0.125).unwrap(), &pr).unwrap();
    let sol = solve_aps(&mesh, &pr).unwrap();
    let err = h1_relative_error(&mesh, &sol.phi, pr.exact.as_deref().unwrap()).unwrap();
    let err64 = aps_error(8, 0.0, 1.0) as f32;
    assert!((err - err64).abs() < 1e-3, "f32 {err} vs f64 {err64}");
}
