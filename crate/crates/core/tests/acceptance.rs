//! Acceptance criteria AC1 to AC10, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synchro_core::frames::{abc_to_dq, back_emf, dq_derivative_identity_check, dq_matrix, ExcitationParams};
use synchro_core::frames::{RotorKinematics, ThreePhaseVector};
use synchro_core::numerics::Method;
use synchro_core::sim::{basin_probe, frame_consistency, BasinOptions, SystemModel};
use synchro_core::single::{
    equilibrium_cubic, equilibrium_currents_single, equilibrium_residual, lyapunov_check, routh_hurwitz_single,
    solve_single_equilibria, SingleEquilibrium, SingleMachineParams,
};
use synchro_core::two::{
    defining_residual, solve_two_equilibria, stability_two, Reduction, TwoCurrents, TwoDqState,
    TwoEquilibria, TwoMachineParams, TwoSolveOptions, TwoVerdict,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Equilibria gathered across criteria for the residual and Jacobian checks.
#[derive(Default)]
struct Emitted {
    single: Vec<(SingleMachineParams, SingleEquilibrium)>,
    two: Vec<(TwoMachineParams, TwoEquilibria)>,
}

fn case1() -> SingleMachineParams {
    SingleMachineParams::new(1.0, 1.0, 9.0, 1.0, 1.0, 4.0).unwrap()
}

fn case2() -> TwoMachineParams {
    TwoMachineParams::from_total_resistance(1.0, 9.0, 2910.0, 2800.0, 1010.0, 1000.0, 0.041, 0.04, 5.0).unwrap()
}

fn median_time<F: FnMut()>(runs: usize, mut f: F) -> Duration {
    let mut t: Vec<Duration> = (0..runs)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed()
        })
        .collect();
    t.sort();
    t[runs / 2]
}

fn ac1(emitted: &mut Emitted) -> Outcome {
    let p = case1();
    let coeffs = equilibrium_cubic(&p).coeffs().to_vec();
    let exact = coeffs == [-9.0, 17.0, -9.0, 1.0];
    let sol = solve_single_equilibria(&p).unwrap();
    let s7 = 7f64.sqrt();
    let expected = [1.0, 4.0 - s7, 4.0 + s7];
    let speeds: Vec<f64> = sol.equilibria.iter().map(|e| e.omega).collect();
    let roots_ok = speeds.len() == 3 && speeds.iter().zip(expected).all(|(w, e)| (w - e).abs() <= 1e-9);
    let elapsed = median_time(11, || {
        solve_single_equilibria(&p).unwrap();
    });
    emitted.single.extend(sol.equilibria.iter().map(|e| (p, *e)));
    outcome(
        exact && roots_ok && elapsed < Duration::from_millis(1),
        format!("coefficients {coeffs:?}, roots {speeds:?}, median {elapsed:?}"),
    )
}

fn ac2() -> Outcome {
    let p = case1();
    let (i_d, i_q) = equilibrium_currents_single(1.0, &p);
    let at_one = routh_hurwitz_single(&SingleEquilibrium { omega: 1.0, i_d, i_q, residual_norm: 0.0 }, &p);
    let coeffs_ok = (at_one.a2, at_one.a1, at_one.a0) == (3.0, 12.0, 2.0);

    let mut invariant = true;
    let mut verdicts = Vec::new();
    for j in [0.1, 1.0, 10.0] {
        let pj = SingleMachineParams::new(j, 1.0, 9.0, 1.0, 1.0, 4.0).unwrap();
        let v: Vec<(bool, bool)> = solve_single_equilibria(&pj)
            .unwrap()
            .equilibria
            .iter()
            .map(|e| {
                let r = routh_hurwitz_single(e, &pj);
                (r.stable, r.a0 > 0.0)
            })
            .collect();
        invariant &= v == [(true, true), (false, false), (true, true)];
        verdicts.push(v);
    }
    outcome(
        coeffs_ok && invariant,
        format!(
            "(a2, a1, a0) at omega = 1: ({}, {}, {}); (stable, a0 > 0) for J = 0.1, 1, 10: {verdicts:?}",
            at_one.a2, at_one.a1, at_one.a0
        ),
    )
}

fn ac3() -> Outcome {
    let p = case1();
    let (i_d, i_q) = equilibrium_currents_single(1.0, &p);
    let rep = lyapunov_check(&SingleEquilibrium { omega: 1.0, i_d, i_q, residual_norm: 0.0 }, &p).unwrap();
    outcome(
        rep.speed_form_bound == 2.0 && !rep.holds,
        format!("bound {} (current form {}), holds: {}", rep.speed_form_bound, rep.current_form_bound, rep.holds),
    )
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let pts = basin_probe(&case1(), &[4.5], &BasinOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let pt = &pts[0];
    let ok = matches!((pt.final_omega, pt.final_time), (Some(w), Some(t)) if (w - 1.0).abs() <= 1e-4 && t < 200.0);
    outcome(
        ok && elapsed < Duration::from_secs(1),
        format!("final omega {:?} at t = {:?}, took {elapsed:?}", pt.final_omega, pt.final_time),
    )
}

fn ac5(emitted: &mut Emitted) -> Outcome {
    let p = case2();
    let start = Instant::now();
    let sol = solve_two_equilibria(&p, &TwoSolveOptions::default()).unwrap();
    let verdicts: Vec<TwoVerdict> = sol.equilibria.iter().map(|e| stability_two(e, &p).unwrap().verdict).collect();
    let elapsed = start.elapsed();
    let speeds: Vec<f64> = sol.equilibria.iter().map(|e| e.omega).collect();
    let ok = speeds.len() == 2
        && (speeds[0] - 309.0166).abs() <= 1e-3
        && (speeds[1] - 315.5902).abs() <= 1e-3
        && verdicts[0] != TwoVerdict::LocallyStable
        && verdicts[1] == TwoVerdict::LocallyStable;
    emitted.two.push((p, sol));
    let exact = solve_two_equilibria(&p, &TwoSolveOptions::with_reduction(Reduction::Exact)).unwrap();
    emitted.two.push((p, exact));
    outcome(
        ok && elapsed < Duration::from_secs(1),
        format!("omega {speeds:?}, verdicts {verdicts:?}, took {elapsed:?}"),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, centre: f64, factor: f64) -> f64 {
    centre * rng.gen_range(-factor.ln()..factor.ln()).exp()
}

fn draw_case2(rng: &mut ChaCha8Rng) -> TwoMachineParams {
    let f = 2.0;
    TwoMachineParams::new(
        log_uniform(rng, 1.0, f),
        log_uniform(rng, 9.0, f),
        log_uniform(rng, 2910.0, f),
        log_uniform(rng, 2800.0, f),
        log_uniform(rng, 10.0, f),
        log_uniform(rng, 1000.0, f),
        log_uniform(rng, 0.041, f),
        log_uniform(rng, 0.04, f),
        log_uniform(rng, 5.0, f),
    )
    .unwrap()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Independent re-match of the polynomial equilibria against the Newton
/// roots.
fn sets_match(sol: &TwoEquilibria, tol: f64) -> bool {
    let Some(o) = &sol.oracle else { return false };
    let mut used = vec![false; o.newton.len()];
    for e in &sol.equilibria {
        let hit = o.newton.iter().enumerate().position(|(k, &(w, d))| {
            !used[k] && (e.omega - w).abs() <= tol * e.omega.max(1.0) && angle_gap(e.delta, d) <= tol
        });
        match hit {
            Some(k) => used[k] = true,
            None => return false,
        }
    }
    used.iter().all(|&u| u)
}

fn ac6(emitted: &mut Emitted) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<TwoMachineParams> = (0..200).map(|_| draw_case2(&mut rng)).collect();
    let (mut agree, mut flagged, mut silent, mut total) = (0, 0, 0, 0);
    let mut errors = Vec::new();
    for reduction in [Reduction::HalfGain, Reduction::Exact] {
        for p in &draws {
            total += 1;
            match solve_two_equilibria(p, &TwoSolveOptions::with_reduction(reduction)) {
                Ok(sol) => {
                    let independent = sets_match(&sol, 1e-6);
                    let reported = sol.oracle.as_ref().is_some_and(|o| o.agree);
                    match (reported, independent) {
                        (true, true) => agree += 1,
                        (false, _) => flagged += 1,
                        (true, false) => silent += 1,
                    }
                    emitted.two.push((*p, sol));
                }
                Err(e) => errors.push(format!("{reduction:?}: {e}")),
            }
        }
    }
    outcome(
        silent == 0,
        format!("{total} solves: {agree} agree, {flagged} flagged disagreements, {silent} silent, errors {errors:?}"),
    )
}

fn single_relative_residual(p: &SingleMachineParams, e: &SingleEquilibrium) -> f64 {
    let r = equilibrium_residual(e.omega, e.i_d, e.i_q, p);
    let scale = 1f64.max(p.torque).max((p.b() * e.omega).abs());
    r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

fn ac7(emitted: &Emitted) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (p, e) in &emitted.single {
        worst = worst.max(single_relative_residual(p, e));
        count += 1;
    }
    for (p, sol) in &emitted.two {
        for e in &sol.equilibria {
            let rows = defining_residual(e.omega, e.delta, &e.currents, p, sol.reduction);
            let rel = rows.iter().fold(0.0f64, |m, &(v, s)| m.max(if s > 0.0 { v.abs() / s } else { v.abs() }));
            worst = worst.max(rel);
            count += 1;
        }
    }
    outcome(worst <= 1e-8, format!("{count} equilibria, worst relative residual {worst:.3e}"))
}

fn ac8(emitted: &Emitted) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (p, sol) in &emitted.two {
        for e in &sol.equilibria {
            worst = worst.max(stability_two(e, p).unwrap().finite_difference_mismatch);
            count += 1;
        }
    }
    outcome(worst <= 1e-6, format!("{count} equilibria, worst entrywise mismatch {worst:.3e}"))
}

fn ac9() -> Outcome {
    let tol = 1e-10;
    let single =
        frame_consistency(&SystemModel::Single(case1()), &[0.0, 4.5, 0.0, 0.0], 0.0, Method::rk45(tol), 2.0, 0.01)
            .unwrap();
    let p = TwoMachineParams::new(1.0, 2.0, 40.0, 40.0, 1.0, 4.0, 0.5, 0.2, 3.0).unwrap();
    let x0 = TwoDqState { delta: 0.0, omega1: 5.0, omega2: 5.0, currents: TwoCurrents::default() }.to_vec();
    let two = frame_consistency(&SystemModel::Two(p), &x0, 0.0, Method::rk45(tol), 2.0, 0.01).unwrap();
    let worst = |f: &synchro_core::sim::FrameConsistency| f.max_current_deviation.max(f.max_speed_deviation);
    outcome(
        worst(&single) <= 10.0 * tol && worst(&two) <= 10.0 * tol,
        format!("single {:.3e}, symmetric two {:.3e} (limit {:.0e})", worst(&single), worst(&two), 10.0 * tol),
    )
}

fn identity_order() -> f64 {
    let eta_of = |t: f64| 2.0 * t + 0.3 * (5.0 * t).sin();
    let i_of = |t: f64| {
        let (a, b) = ((4.0 * t).cos() * (1.0 + t), (t * t).sin() - 0.2 * t);
        ThreePhaseVector::new(a, b, -a - b)
    };
    let pts: Vec<(f64, f64)> = [0.02, 0.01, 0.005, 0.0025]
        .iter()
        .map(|&h: &f64| {
            let n = (1.0 / h).round() as usize + 1;
            let t: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
            let eta: Vec<f64> = t.iter().map(|&t| eta_of(t)).collect();
            let i: Vec<ThreePhaseVector> = t.iter().map(|&t| i_of(t)).collect();
            (h.ln(), dq_derivative_identity_check(&eta, &i, h).unwrap().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn ac10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut orth: f64 = 0.0;
    for _ in 0..1000 {
        let u = dq_matrix(rng.gen_range(-1e3..1e3)).unwrap();
        for r in 0..2 {
            for s in 0..2 {
                let dot: f64 = (0..3).map(|j| u[r][j] * u[s][j]).sum();
                orth = orth.max((dot - if r == s { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    let mut emf: f64 = 0.0;
    for _ in 0..1000 {
        let kin = RotorKinematics { theta: rng.gen_range(-50.0..50.0), omega: rng.gen_range(0.0..10.0) };
        let exc = ExcitationParams::from_b(rng.gen_range(0.0..5.0));
        let dq = abc_to_dq(kin.theta, back_emf(kin, exc)).unwrap();
        let scale = 1f64.max(exc.b() * kin.omega);
        emf = emf.max(dq.d.abs().max((dq.q - exc.b() * kin.omega).abs()) / scale);
    }
    let order = identity_order();
    outcome(
        orth <= 1e-13 && emf <= 1e-13 && order >= 1.9,
        format!("|UU^T - I| {orth:.2e}, back-EMF gap {emf:.2e} (relative to max(1, b omega)), identity order {order:.3}"),
    )
}

fn main() -> ExitCode {
    let mut emitted = Emitted::default();
    let mut all = true;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!("{} {name}: {} [{:?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, start.elapsed());
    };
    report("AC1 case 1 cubic and roots", &mut || ac1(&mut emitted));
    report("AC2 case 1 Routh-Hurwitz", &mut ac2);
    report("AC3 case 1 Lyapunov bound", &mut ac3);
    report("AC4 case 1 basin from 4.5", &mut ac4);
    report("AC5 case 2 equilibria and verdicts", &mut || ac5(&mut emitted));
    report("AC6 polynomial vs Newton on 200 draws", &mut || ac6(&mut emitted));
    report("AC7 residuals of emitted equilibria", &mut || ac7(&emitted));
    report("AC8 analytic vs finite-difference Jacobian", &mut || ac8(&emitted));
    report("AC9 frame consistency", &mut ac9);
    report("AC10 transform suite", &mut ac10);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
