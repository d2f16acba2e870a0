//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion not listed in `KNOWN_UNATTAINABLE`
//! fails. Thresholds live in `common::manifest`.

mod common;

use std::time::Instant;

use aps_core::adapt::IndicatorKind;
use aps_core::experiments::{
    right_direction_pairs, run_adapt_study, run_ladder, run_uniform_table, AdaptStudy,
    ExperimentConfig, ExperimentKind, MeshFamily, TableRow, ANISO_JITTER,
};
use aps_core::fem::{classify, solve_aps, solve_p_direct, ApsOptions};
use aps_core::linalg::Mat2;
use aps_core::mesh::build_structured_mesh;
use aps_core::problem::{CaseKind, Problem};
use aps_core::Problem64;
use common::manifest as m;
use common::*;
use rand::Rng;

/// Criteria allowed to fail, each analysed in the decision ledger.
const KNOWN_UNATTAINABLE: &[usize] = &[];

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(v: f64, reference: f64, rel: f64) -> bool {
    (v / reference - 1.0).abs() <= rel
}

fn errors(rows: &[TableRow]) -> Vec<f64> {
    rows.iter().map(|r| r.error().unwrap_or(f64::NAN)).collect()
}

fn fmt(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", s.join(", "))
}

/// Least-squares slope of log(err) against log(h).
fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn table(alpha: f64, eps: f64) -> Vec<TableRow> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::UniformTable,
        alpha,
        eps,
        ..ExperimentConfig::default()
    };
    run_uniform_table(&cfg).unwrap()
}

fn criterion1(smooth: &[TableRow], secs: f64) -> Outcome {
    let e = errors(smooth);
    let close = e.iter().zip(&m::C1_REFERENCE).all(|(&v, &r)| within(v, r, m::C1_REL_TOL));
    let order = fitted_order(&m::LADDER, &e);
    let order_ok = (order - m::C1_ORDER).abs() <= m::C1_ORDER_TOL;
    Outcome {
        pass: close && order_ok && secs < m::C1_SECONDS,
        detail: format!("err {} order {order:.3} in {secs:.1}s", fmt(&e)),
    }
}

fn criterion2(small: &[TableRow], unit: &[TableRow]) -> Outcome {
    let e = errors(small);
    let u = errors(unit);
    let close = e.iter().zip(&m::C2_REFERENCE).all(|(&v, &r)| within(v, r, m::C2_REL_TOL));
    let ratios: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a / b).collect();
    let robust = ratios.iter().all(|r| (m::C2_RATIO.0..=m::C2_RATIO.1).contains(r));
    Outcome {
        pass: close && robust,
        detail: format!("err {} ratio to eps=1 {}", fmt(&e), fmt(&ratios)),
    }
}

fn criterion3(smooth: &[TableRow]) -> Outcome {
    let zz: Vec<f64> = smooth
        .iter()
        .filter(|r| r.h1 <= m::C3_ZZ_MAX_H + 1e-12)
        .map(|r| r.effectivity.zz.unwrap_or(f64::NAN))
        .collect();
    let band = zz.iter().all(|z| (m::C3_ZZ_BAND.0..=m::C3_ZZ_BAND.1).contains(z));
    let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, 0.0, 1e-10).unwrap();
    let family = MeshFamily::Perturbed {
        jitter: ANISO_JITTER,
        seed: 1,
    };
    let wrong = &run_ladder(&pr, &ApsOptions::default(), "wrong", &[m::C3_WRONG], family)[0];
    let wzz = wrong.effectivity.zz.unwrap_or(f64::NAN);
    Outcome {
        pass: band && wzz < m::C3_WRONG_ZZ_MAX,
        detail: format!(
            "ei_ZZ(h<=0.05) {} wrong-direction ei_ZZ {wzz:.3e} err {:.2e}",
            fmt(&zz),
            wrong.error().unwrap_or(f64::NAN)
        ),
    }
}

fn criterion4() -> Outcome {
    let pr: Problem64 = Problem::manufactured(CaseKind::Smooth, 0.0, 1e-10).unwrap();
    let family = MeshFamily::Perturbed {
        jitter: ANISO_JITTER,
        seed: 1,
    };
    let rows = run_ladder(&pr, &ApsOptions::default(), "right", &right_direction_pairs(), family);
    let target = rows
        .iter()
        .find(|r| (r.h1, r.h2) == m::C4_MESH)
        .and_then(|r| r.error())
        .unwrap_or(f64::NAN);
    let sa: Vec<f64> = rows
        .iter()
        .map(|r| r.effectivity.simplified.unwrap_or(f64::NAN))
        .collect();
    let sa_max = sa.iter().cloned().fold(f64::NAN, f64::max);
    Outcome {
        pass: target <= m::C4_ERR_MAX && sa.iter().all(|&s| s <= m::C4_SA_MAX),
        detail: format!("err(0.1-0.005) {target:.2e} ei_SA {} max {sa_max:.2}", fmt(&sa)),
    }
}

fn criterion5(c2_error_h01: f64) -> Outcome {
    let t = Instant::now();
    // the 1/eps spread shows on the grid-aligned field; on curved fields the
    // P-model locks instead (see the decision ledger)
    let aligned: Problem64 = Problem::manufactured(CaseKind::Smooth, 0.0, 1e-10).unwrap();
    let mesh = classify(&build_structured_mesh(10, 10, 0.1, 0.1).unwrap(), &aligned).unwrap();
    let cond = solve_p_direct(&mesh, &aligned)
        .ok()
        .and_then(|p| p.stats.condition)
        .unwrap_or(f64::INFINITY);
    let curved: Problem64 = Problem::manufactured(CaseKind::Smooth, 2.0, 1e-10).unwrap();
    let mesh = classify(&build_structured_mesh(10, 10, 0.1, 0.1).unwrap(), &curved).unwrap();
    let res = solve_aps(&mesh, &curved).unwrap().stats.relative_residual();
    let secs = t.elapsed().as_secs_f64();
    let accurate = within(c2_error_h01, m::C2_REFERENCE[0], m::C2_REL_TOL);
    Outcome {
        pass: cond >= m::C5_COND_MIN && res <= m::C5_RESIDUAL_MAX && accurate && secs < m::C5_SECONDS,
        detail: format!(
            "cond(P) {cond:.2e} APS residual {res:.1e} APS err {c2_error_h01:.3e} in {secs:.2}s"
        ),
    }
}

fn adapt(eps: f64, tols: &[f64], kind: IndicatorKind, iterations: usize) -> AdaptStudy {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::AdaptStudy,
        case: CaseKind::Layer,
        alpha: 0.0,
        eps,
        tols: tols.to_vec(),
        indicator: kind,
        max_iterations: iterations,
        fixed_iterations: true,
        ..ExperimentConfig::default()
    };
    run_adapt_study(&cfg).unwrap()
}

fn criterion6() -> Outcome {
    let t = Instant::now();
    let study = adapt(1.0, &m::C6_TOLS, IndicatorKind::Full, m::C6_ITERATIONS);
    let secs = t.elapsed().as_secs_f64();
    let err: Vec<f64> = study.runs.iter().map(|r| r.final_error().unwrap_or(f64::NAN)).collect();
    let nv: Vec<f64> = study.runs.iter().map(|r| r.final_nv().unwrap_or(0) as f64).collect();
    let ratios: Vec<f64> = nv.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = study.runs.iter().all(|r| r.outcome.is_ok())
        && err.iter().zip(&m::C6_REFERENCE).all(|(&e, &r)| within(e, r, m::C6_REL_TOL))
        && ratios.iter().all(|r| (m::C6_NV_RATIO.0..=m::C6_NV_RATIO.1).contains(r));
    Outcome {
        pass: ok && secs < m::C6_SECONDS,
        detail: format!("err {} NV {nv:?} NV ratios {} in {secs:.0}s", fmt(&err), fmt(&ratios)),
    }
}

fn criterion7() -> Outcome {
    let run = |kind| adapt(1e-10, &[m::C7_TOL], kind, m::C7_ITERATIONS);
    let simpl = run(IndicatorKind::Simplified);
    let full = run(IndicatorKind::Full);
    let s = simpl.runs[0].trace.last().cloned();
    let f = full.runs[0].trace.last().cloned();
    let (Some(s), Some(f)) = (s, f) else {
        return Outcome {
            pass: false,
            detail: "adaptive run produced no iterations".into(),
        };
    };
    let err = s.error.unwrap_or(f64::NAN);
    let ok = simpl.runs[0].outcome.is_ok()
        && full.runs[0].outcome.is_ok()
        && s.aspect_max >= m::C7_ASPECT_MIN
        && s.nv <= m::C7_NV_MAX
        && err <= m::C7_ERR_MAX
        && s.nv < f.nv;
    Outcome {
        pass: ok,
        detail: format!(
            "simplified NV {} max aspect {:.0} err {err:.4}; full NV {} max aspect {:.0} err {:.4}",
            s.nv,
            s.aspect_max,
            f.nv,
            f.aspect_max,
            f.error.unwrap_or(f64::NAN)
        ),
    }
}

fn criterion8() -> Outcome {
    let mut r = rng(8);
    let svd = (0..2000)
        .map(|_| {
            let mut v = || r.gen_range(-10.0..10.0);
            svd_defect(Mat2::new(v(), v(), v(), v()))
        })
        .fold(0.0f64, f64::max);
    let meshes: Vec<_> = (0..6).map(|s| random_mesh(4 + 2 * s as usize, s)).collect();
    let geo = meshes.iter().map(geometry_defect).fold(0.0f64, f64::max);
    let patch = meshes
        .iter()
        .flat_map(|mesh| [1.0, 1e-4, 1e-10].map(|eps| patch_defect(mesh, eps, [0.3, -1.2, 0.7])))
        .fold(0.0f64, f64::max);
    let assembly = meshes
        .iter()
        .enumerate()
        .map(|(i, mesh)| assembly_defect(mesh, 1e-3, i as u64))
        .fold(0.0f64, f64::max);
    let (mut identity, mut sandwich) = (0.0f64, true);
    for (seed, alpha, eps) in [(1, 0.0, 1.0), (2, 1.5, 1e-4), (3, 2.0, 1e-10)] {
        let (d, ok) = indicator_identities(10, seed, alpha, eps);
        identity = identity.max(d);
        sandwich &= ok;
    }
    let forcing = [(CaseKind::Smooth, 0.0, 1.0), (CaseKind::Smooth, 2.0, 0.1), (CaseKind::Layer, 1.0, 1.0)]
        .iter()
        .enumerate()
        .map(|(i, &(k, a, e))| forcing_defect(k, a, e, m::FORCING_POINTS, i as u64))
        .fold(0.0f64, f64::max);
    let (mut audits, mut area) = (true, 0.0f64);
    for seed in 0..6 {
        let (ok, a) = remesh_audit(seed);
        audits &= ok;
        area = area.max(a);
    }
    let pass = svd <= m::SVD_TOL
        && geo <= m::SVD_TOL
        && patch <= m::PATCH_TOL
        && assembly <= m::ASSEMBLY_TOL
        && identity <= m::NODAL_IDENTITY_TOL
        && sandwich
        && forcing <= m::FORCING_TOL
        && audits
        && area <= m::AREA_TOL;
    Outcome {
        pass,
        detail: format!(
            "svd {svd:.1e} geometry {geo:.1e} patch {patch:.1e} assembly {assembly:.1e} \
             identity {identity:.1e} sandwich {sandwich} forcing {forcing:.1e} \
             remesh audits {audits} area {area:.1e}"
        ),
    }
}

fn main() {
    let t = Instant::now();
    let smooth = table(0.0, 1.0);
    let c1_secs = t.elapsed().as_secs_f64();
    let small = table(2.0, 1e-10);
    let unit = table(2.0, 1.0);
    let c2_h01 = small[0].error().unwrap_or(f64::NAN);

    let mut failed = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {tag}: {}", o.detail);
        if !o.pass && !KNOWN_UNATTAINABLE.contains(&n) {
            failed.push(n);
        }
    };
    report(1, criterion1(&smooth, c1_secs));
    report(2, criterion2(&small, &unit));
    report(3, criterion3(&smooth));
    report(4, criterion4());
    report(5, criterion5(c2_h01));
    report(6, criterion6());
    report(7, criterion7());
    report(8, criterion8());
    println!("acceptance finished in {:.0}s", t.elapsed().as_secs_f64());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
