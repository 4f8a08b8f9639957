use proptest::prelude::*;

use octk::circuits::{circuit_ode, hysteresis_circuit, CircuitKind, CircuitOde, ParamVector, SignConvention, Timescales};
use octk::continuation::{equilibria_at, trace, Stability};
use octk::dynamics::{integrate, Channel, InputSignal, IntegratorOptions, Trajectory};
use octk::nonlinearity::SigmoidFamily;
use octk::protocols::{burster_ode, rest_spike_alpha_scan, rest_spike_ode, ALPHA_CELLS, BURSTER_X0, REST_SPIKE_U};
use octk::regimes::{classify_trajectory, detect_spikes_in, ClassifyOptions, RegimeLabel};
use octk::scan::{scan_static, Axis, StaticScanOptions};

fn tanh() -> SigmoidFamily {
    SigmoidFamily::TANH
}

fn ode(kind: CircuitKind, params: ParamVector, eps_f: f64) -> CircuitOde {
    circuit_ode(kind, &tanh(), &params, Timescales::fast(eps_f), None).unwrap()
}

fn bistable(beta: f64) -> CircuitOde {
    ode(CircuitKind::Bistable, ParamVector::new().with("beta", beta), 0.1)
}

fn relaxation(eps_f: f64) -> CircuitOde {
    ode(CircuitKind::Relaxation, ParamVector::new().with("beta", 0.5), eps_f)
}

fn run(o: &CircuitOde, u: f64, x0: &[f64], t_end: f64) -> Trajectory {
    integrate(o, &[InputSignal::constant(Channel::U, u)], x0, t_end, &IntegratorOptions::default()).unwrap()
}

fn rhs(o: &CircuitOde, x: &[f64], u: f64, alpha_in: f64) -> Vec<f64> {
    let mut dx = vec![0.0; x.len()];
    o.rhs(x, u, alpha_in, &mut dx);
    dx
}

/// Effective input seen by the fast subsystem at state `x`.
fn fast_input(x: &[f64], u: f64) -> f64 {
    match x.get(1) {
        Some(x_s) => u + x_s,
        None => u,
    }
}

/// Roots of the bistable right-hand side in `[-1.5, 1.5]`, by bisection on a fine grid.
fn rhs_roots(o: &CircuitOde, u: f64) -> Vec<f64> {
    let f = |x: f64| rhs(o, &[x], u, 0.0)[0];
    let n = 20_000;
    let h = 3.0 / n as f64;
    let mut roots = Vec::new();
    for i in 0..n {
        let (mut a, mut b) = (-1.5 + i as f64 * h, -1.5 + (i + 1) as f64 * h);
        if f(a) * f(b) > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let r = 0.5 * (a + b);
        if roots.last().is_none_or(|&l: &f64| (r - l).abs() > 1e-9) {
            roots.push(r);
        }
    }
    roots
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bistable_rhs_is_odd(x in -2.0f64..2.0, u in -2.0f64..2.0, beta in -1.0f64..1.5) {
        let o = bistable(beta);
        let a = rhs(&o, &[x], u, 0.0)[0];
        let b = rhs(&o, &[-x], -u, 0.0)[0];
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn bistable_equilibria_are_branch_points(beta in -0.5f64..1.0, u in -0.4f64..0.4) {
        let o = bistable(beta);
        let roots = rhs_roots(&o, u);
        let p = o.fast_problem().unwrap();
        let eq = equilibria_at(&p, &ParamVector::new(), u, (-1.5, 1.5)).unwrap();
        prop_assume!(roots.len() == eq.len());
        for (r, e) in roots.iter().zip(&eq) {
            prop_assert!((r - e.y).abs() < 1e-8, "root {} vs equilibrium {}", r, e.y);
        }
        // The traced diagram crosses the line u at the same points.
        let d = trace(&p, &ParamVector::new(), (-1.0, 1.0), (-1.5, 1.5), None).unwrap();
        for r in &roots {
            let near = d.points().any(|(_, q)| (q.u - u).abs() < 0.05 && (q.y - r).abs() < 0.05);
            prop_assert!(near, "no branch point near ({}, {})", u, r);
        }
    }
}

#[test]
fn flat_segments_sit_on_continuation_equilibria() {
    let cases: Vec<(CircuitOde, f64, Vec<f64>)> = vec![
        (bistable(0.5), 0.1, vec![0.9]),
        (bistable(-0.3), -0.2, vec![0.5]),
        (relaxation(0.05), 1.0, vec![0.0, 0.0]),
        (rest_spike_ode(0.0, 0.01).unwrap(), 0.0, vec![-0.5, -0.5]),
    ];
    for (o, u, x0) in cases {
        let tr = run(&o, u, &x0, 60.0);
        let p = o.fast_problem().unwrap();
        let params = p.declared_params().clone();
        let mut start: Option<f64> = None;
        let mut checked = 0;
        for i in 0..tr.len() {
            let x = tr.state(i);
            let speed = rhs(&o, x, u, 0.0).iter().map(|v| v * v).sum::<f64>().sqrt();
            if speed >= 1e-8 {
                start = None;
                continue;
            }
            let t0 = *start.get_or_insert(tr.times[i]);
            if tr.times[i] - t0 > 1.0 {
                let eq = equilibria_at(&p, &params, fast_input(x, u), (-1.5, 1.5)).unwrap();
                let dist = eq.iter().map(|e| (e.y - x[0]).abs()).fold(f64::INFINITY, f64::min);
                assert!(dist < 1e-4, "{:?} at t = {}: distance {dist}", o.kind(), tr.times[i]);
                checked += 1;
            }
        }
        assert!(checked > 0, "{:?}: no flat segment", o.kind());
    }
}

/// Fraction of one period spent in fast jumps, `|ẋ_f| > 10 |ẋ_s|`.
fn jump_fraction(eps_f: f64) -> f64 {
    let o = relaxation(eps_f);
    let tr = run(&o, 0.0, &[1e-3, 0.0], 60.0);
    let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
    assert_eq!(rep.label, RegimeLabel::PeriodicSpiking);
    let period = rep.evidence.period.unwrap();
    let (lo, hi) = (60.0 - period, 60.0);
    let mut fast_time = 0.0;
    for i in 1..tr.len() {
        if tr.times[i] <= lo || tr.times[i] > hi {
            continue;
        }
        let dx = rhs(&o, tr.state(i), 0.0, 0.0);
        if dx[0].abs() > 10.0 * dx[1].abs() {
            fast_time += tr.times[i] - tr.times[i - 1];
        }
    }
    fast_time / period
}

/// At `ε_f = 0.1` the cycle is still rounded, so the fraction first rises;
/// from `0.03` down it falls strictly.
#[test]
fn jumps_take_vanishing_time_as_eps_shrinks() {
    let f: Vec<f64> = [0.1, 0.03, 0.01, 0.003].iter().map(|&e| jump_fraction(e)).collect();
    assert!(f[2] < f[0], "fractions {f:?}");
    assert!(f[1] > f[2] && f[2] > f[3], "fractions {f:?}");
    assert!(f[3] < 0.1, "fractions {f:?}");
}

#[test]
fn period_is_robust_to_threshold() {
    let tr = run(&relaxation(0.01), 0.0, &[1e-3, 0.0], 100.0);
    let period = |threshold: f64| {
        let rep = classify_trajectory(&tr, &ClassifyOptions { threshold, ..Default::default() }).unwrap();
        assert_eq!(rep.label, RegimeLabel::PeriodicSpiking);
        rep.evidence.period.unwrap()
    };
    let base = period(0.0);
    for d in [-0.05, 0.05] {
        let p = period(d);
        assert!((p - base).abs() < 0.01 * base, "threshold {d}: {p} vs {base}");
    }
}

#[test]
fn quiescent_runs_end_on_stable_equilibria() {
    let cases: Vec<(CircuitOde, f64, Vec<f64>)> = vec![
        (bistable(0.5), 0.0, vec![-0.2]),
        (bistable(0.5), 0.3, vec![0.9]),
        (relaxation(0.01), -1.0, vec![0.0, 0.0]),
        (relaxation(0.01), 0.8, vec![0.5, -0.5]),
        (rest_spike_ode(0.0, 0.0075).unwrap(), 0.0, vec![-0.9, -0.9]),
    ];
    for (o, u, x0) in cases {
        let tr = run(&o, u, &x0, 80.0);
        let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
        assert_eq!(rep.label, RegimeLabel::Quiescent, "{:?} at u = {u}", o.kind());
        let x = tr.last_state();
        let p = o.fast_problem().unwrap();
        let eq = equilibria_at(&p, p.declared_params(), fast_input(x, u), (-1.5, 1.5)).unwrap();
        let near = eq
            .iter()
            .filter(|e| e.stability == Stability::Stable)
            .map(|e| (e.y - x[0]).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(near < 1e-4, "{:?} at u = {u}: {near}", o.kind());
        if x.len() > 1 {
            assert!((x[0] - x[1]).abs() < 1e-4, "slow variable not at rest: {x:?}");
        }
    }
}

#[test]
fn bursts_have_the_stored_structure() {
    let o = burster_ode(-15.05, octk::circuits::BursterWiring::SetPointGain).unwrap();
    let tr = run(&o, 0.5, &BURSTER_X0, 750.0);
    let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
    assert_eq!(rep.label, RegimeLabel::Bursting);
    let ev = &rep.evidence;
    assert!(ev.spikes_per_burst.len() >= 2);
    assert!(ev.spikes_per_burst.iter().all(|&n| n >= 2), "{:?}", ev.spikes_per_burst);
    let ratio = ev.interburst_gap_min.unwrap() / ev.intraburst_isi_median.unwrap();
    assert!(ratio > 5.0, "gap ratio {ratio}");
    assert!((ratio - ev.burst_gap_ratio.unwrap()).abs() < 1e-9);

    // Recount from the raw spike train: ISIs above the gap split bursts.
    let train = detect_spikes_in(&tr, 0.0, rep.window.0, rep.window.1).unwrap();
    assert_eq!(train.times.len(), ev.spike_count);
    let split = 0.5 * (ev.interburst_gap_min.unwrap() + ev.intraburst_isi_median.unwrap());
    let gaps = train.isis().iter().filter(|&&d| d > split).count();
    assert_eq!(gaps, ev.spikes_per_burst.len() + 1);
}

#[test]
fn flagged_cells_border_class_changes() {
    let p = hysteresis_circuit(&tanh(), SignConvention::Dynamic);
    let axis = Axis::new("beta", -1.0, 1.0, 41);
    let chart = scan_static(&p, &ParamVector::new(), std::slice::from_ref(&axis), &StaticScanOptions::new((-2.0, 2.0), (-1.5, 1.5)))
        .unwrap();
    let flagged: Vec<f64> = chart.cells.iter().filter(|c| c.varieties.any()).map(|c| c.coords[0]).collect();
    assert!(!flagged.is_empty());
    let boundary: Vec<f64> = chart.boundaries.iter().flat_map(|b| b.points.iter().map(|p| p[0])).collect();
    for f in flagged {
        let d = boundary.iter().map(|b| (b - f).abs()).fold(f64::INFINITY, f64::min);
        assert!(d <= axis.spacing() + 1e-12, "flagged cell at beta {f} is {d} from a boundary");
    }
}

/// Containment of the rest-spike region as `ε_f` shrinks. The theorem only
/// guarantees small-ε existence, so the outcome is printed, not asserted.
#[test]
fn rest_spike_region_containment_is_reported() {
    let (_, coarse) = rest_spike_alpha_scan(0.0075, ALPHA_CELLS, 0).unwrap();
    let (chart, fine) = rest_spike_alpha_scan(0.005, ALPHA_CELLS, 0).unwrap();
    let cell = chart.axes[0].spacing();
    let contained = match (coarse.bounding_box.first(), fine.bounding_box.first()) {
        (Some(&(a, b)), Some(&(c, d))) => a >= c - cell && b <= d + cell,
        (None, _) => true,
        _ => false,
    };
    eprintln!(
        "rest-spike region at u = {REST_SPIKE_U}: eps 0.0075 {:?}, eps 0.005 {:?}, contained within one cell: {contained}",
        coarse.bounding_box, fine.bounding_box
    );
}
