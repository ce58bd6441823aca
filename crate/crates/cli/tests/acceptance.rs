//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs with its own `main` so the lines are always shown.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fracbvp::greenkernel::{green_eval, KernelPoint, Kernels};
use fracbvp::powercalc::canonical_exponent;
use fracbvp::regularity::{classify, Problem, Sampling, Verdict};
use fracbvp::singquad::{build_mesh, check_condition_h};
use fracbvp::solver::{gl_residual, solve_linear, solve_nonlinear, NonlinearitySpec, Picard, PicardOptions};
use fracbvp::specfun::gamma;
use fracbvp::{Order, PowerSum, WeightSpec};
use fracbvp_cli::{cmd_figure1, read_solution_csv};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn ord(a: f64) -> Order {
    Order::new(a).unwrap()
}

fn u2() -> PowerSum {
    PowerSum::from_terms([(1.0, 0.8), (-1.0, 1.8)])
}

fn u3() -> PowerSum {
    PowerSum::from_terms([(1.0, 0.2), (-1.0, 1.2)])
}

/// `g = −D^{1.5}u`, so that `D^{1.5}u + g = 0`.
fn forcing(u: &PowerSum) -> PowerSum {
    -&u.frac_derivative(1.5).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", items.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn c1_oracle_exactness() -> Check {
    let g = |x: f64| gamma(x).unwrap();
    let h2 = u2().frac_derivative(1.5).map_err(|e| e.to_string())?;
    let h3 = u3().frac_derivative(1.5).map_err(|e| e.to_string())?;
    let expected = [
        (&h2, -0.7, g(1.8) / g(0.3)),
        (&h2, 0.3, -g(2.8) / g(1.3)),
        (&h3, -1.3, g(1.2) / g(-0.3)),
        (&h3, -0.3, -g(2.2) / g(0.7)),
    ];
    let mut worst: f64 = 0.0;
    for (h, e, want) in expected {
        let got = h.coefficient_of(e);
        worst = worst.max(rel(got, want));
        ensure(rel(got, want) <= 1e-12, || format!("t^{e}: {got} vs {want}"))?;
    }
    ensure(h2.terms().len() == 2 && h3.terms().len() == 2, || "extra terms".into())?;
    for (c1, c2) in [(1.0, 1.0), (-2.5, 0.75), (1e6, -3.0)] {
        let k = PowerSum::from_terms([(c1, 0.5), (c2, -0.5)]).frac_derivative(1.5).map_err(|e| e.to_string())?;
        ensure(k.is_zero(), || format!("kernel not annihilated: {k}"))?;
    }
    Ok(format!("max coefficient rel error {worst:.1e}; kernel annihilated exactly"))
}

fn c2_classical() -> Check {
    let u = solve_linear(&WeightSpec::power(0.0).unwrap(), ord(2.0), 128).map_err(|e| e.to_string())?;
    let err = u
        .nodes()
        .iter()
        .zip(&u.values)
        .map(|(&t, &v)| (v - t * (1.0 - t) / 2.0).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-8, || format!("sup error {err:e}"))?;
    Ok(format!("sup-node error {err:.1e} at n = 128"))
}

fn sup_error(u: &PowerSum, n: usize) -> Result<(f64, f64), String> {
    let sol = solve_linear(&WeightSpec::from_power_sum(&forcing(u)), ord(1.5), n).map_err(|e| e.to_string())?;
    let err = sol
        .nodes()
        .iter()
        .zip(&sol.values)
        .map(|(&t, &v)| (v - u.eval(t).unwrap()).abs())
        .fold(0.0, f64::max);
    Ok((err, sol.sup_norm()))
}

/// Errors at n = 32..512; each doubling may grow the error by at most 10%,
/// except once both errors are at the roundoff level of the solution.
fn round_trip(u: &PowerSum, tol: f64) -> Check {
    let mut errs = Vec::new();
    let mut scale: f64 = 0.0;
    for n in [32, 64, 128, 256, 512] {
        let (e, s) = sup_error(u, n)?;
        errs.push(e);
        scale = scale.max(s);
    }
    let floor = 64.0 * f64::EPSILON * scale;
    let last = errs[errs.len() - 1];
    ensure(last <= tol, || format!("n = 512 error {last:e} > {tol:e}"))?;
    for w in errs.windows(2) {
        ensure(w[1] <= 1.1 * w[0] || w[1].max(w[0]) <= floor, || {
            format!("not monotone: {}", sci(&errs))
        })?;
    }
    Ok(format!("errors n=32..512: {}", sci(&errs)))
}

fn c3_u2() -> Check {
    round_trip(&u2(), 5e-4).map(|s| format!("u2 {s}"))
}

fn c3_u3() -> Check {
    round_trip(&u3(), 2e-3).map(|s| format!("u3 {s}"))
}

fn c4_residual() -> Check {
    let mut out = Vec::new();
    for (name, u) in [("u2", u2()), ("u3", u3())] {
        let g = forcing(&u);
        let sol = solve_linear(&WeightSpec::from_power_sum(&g), ord(1.5), 512).map_err(|e| e.to_string())?;
        let r = gl_residual(&sol, |t| g.eval_positive(t), 1024).map_err(|e| e.to_string())?;
        ensure(r.median_rel <= 0.05, || format!("{name} median {}", r.median_rel))?;
        out.push(format!("{name} median {:.1e}", r.median_rel));
    }
    Ok(out.join(", "))
}

fn verdicts(w: &WeightSpec, a: f64, n: usize) -> Result<(Verdict, Verdict), String> {
    let pr = Problem::linear(w, ord(a), n).map_err(|e| e.to_string())?;
    let r = classify(&pr, Sampling::default()).map_err(|e| e.to_string())?;
    Ok((r.in_e_alpha, r.in_c1_2ma))
}

fn c5_regularity() -> Check {
    use Verdict::*;
    type Case = (&'static str, WeightSpec, f64, Option<Verdict>, Option<Verdict>);
    let cases: Vec<Case> = vec![
        ("u2", WeightSpec::from_power_sum(&forcing(&u2())), 1.5, Some(Yes), Some(Yes)),
        ("u3", WeightSpec::from_power_sum(&forcing(&u3())), 1.5, Some(Yes), Some(No)),
        ("t^0.6", WeightSpec::new(0.0, PowerSum::monomial(1.0, 0.6)).unwrap(), 1.6, None, Some(Yes)),
        ("1", WeightSpec::power(0.0).unwrap(), 1.6, None, Some(Yes)),
        ("t^-1.2", WeightSpec::power(1.2).unwrap(), 1.6, Some(Yes), Some(No)),
    ];
    let mut out = Vec::new();
    for (name, w, a, want_e, want_c) in cases {
        let (e, c) = verdicts(&w, a, 512)?;
        ensure(e != No, || format!("{name}: E_alpha = no"))?;
        ensure(want_e.is_none_or(|v| v == e), || format!("{name}: E_alpha = {e}"))?;
        ensure(want_c.is_none_or(|v| v == c), || format!("{name}: C1 = {c}"))?;
        out.push(format!("{name} ({e},{c})"));
    }
    let mut swept = 0;
    for a in [1.1, 1.3, 1.5, 1.7, 1.9, 2.0] {
        for frac in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let beta = canonical_exponent((a * frac * 100.0_f64).floor() / 100.0);
            let (e, _) = verdicts(&WeightSpec::power(beta).unwrap(), a, 128)?;
            ensure(e != No, || format!("alpha {a}, beta {beta}: E_alpha = no"))?;
            swept += 1;
        }
    }
    Ok(format!("{}; no E_alpha = no on {swept} swept weights", out.join(" ")))
}

fn c6_figure() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fig = cmd_figure1(dir.path()).map_err(|e| e.to_string())?;
    ensure(fig.curves.len() == 4, || "expected four curves".into())?;
    let svg = std::fs::read_to_string(&fig.svg_path).map_err(|e| e.to_string())?;
    ensure(svg.matches("<polyline").count() == 4, || "plot lacks four polylines".into())?;
    for c in &fig.curves {
        let rows = read_solution_csv(&c.csv_path).map_err(|e| e.to_string())?;
        ensure(rows == c.rows, || format!("{}: CSV does not read back", c.label))?;
        let first = rows.first().unwrap();
        let last = rows.last().unwrap();
        ensure(first.t == 0.0 && first.u == 0.0 && last.t == 1.0 && last.u == 0.0, || {
            format!("{}: boundary values", c.label)
        })?;
        ensure(rows.iter().all(|r| r.u.is_finite() && r.u >= 0.0), || format!("{}: u < 0", c.label))?;
        // no visible break at plot resolution, including at t = 0
        let top = rows.iter().fold(0.0_f64, |m, r| m.max(r.u));
        let jump = rows.windows(2).map(|w| (w[1].u - w[0].u).abs()).fold(0.0, f64::max);
        ensure(jump <= 0.1 * top, || format!("{}: jump {jump:e} against max {top:e}", c.label))?;
    }
    let steep = &fig.curves[3];
    let s: Vec<f64> = steep.slopes.iter().map(|p| p.1).collect();
    ensure(s[0] < s[1] && s[1] < s[2], || format!("t^-1.2 slopes not increasing: {s:?}"))?;
    for c in &fig.curves[..3] {
        ensure(c.p_verdict == Verdict::Yes, || format!("{}: p(t) verdict {}", c.label, c.p_verdict))?;
    }
    Ok(format!("u'(1e-1,1e-2,1e-3) = {s:.3?} for t^-1.2; p settles for the other three"))
}

fn prop(name: &str, r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn c7_properties() -> Check {
    let mut failures = Vec::new();
    let mut runner = TestRunner::new(Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    });
    let off_pole = |x: f64| (x - x.round()).abs() > 1e-3;

    // specfun
    let r = runner.run(&(-5.0f64..20.0), |x| {
        if off_pole(x) && off_pole(x + 1.0) {
            let (lhs, rhs) = (gamma(x + 1.0).unwrap(), x * gamma(x).unwrap());
            prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
        }
        Ok(())
    });
    prop("gamma recurrence", r).unwrap_or_else(|e| failures.push(e));
    let r = runner.run(&(-5.0f64..5.0), |x| {
        if off_pole(x) && off_pole(1.0 - x) {
            let v = gamma(x).unwrap() * gamma(1.0 - x).unwrap() * (PI * x).sin() / PI;
            prop_assert!((v - 1.0).abs() <= 1e-11);
        }
        Ok(())
    });
    prop("gamma reflection", r).unwrap_or_else(|e| failures.push(e));

    // powercalc
    let r = runner.run(&(1.01f64..=2.0, -10.0f64..10.0, -10.0f64..10.0), |(a, c1, c2)| {
        let k = PowerSum::from_terms([(c1, a - 1.0), (c2, a - 2.0)]);
        prop_assert!(k.frac_derivative(a).unwrap().is_zero());
        Ok(())
    });
    prop("powercalc kernel", r).unwrap_or_else(|e| failures.push(e));
    let r = runner.run(&(0.05f64..=2.0, -0.9f64..3.0, 0.1f64..4.0), |(mu, l, c)| {
        let u = PowerSum::monomial(c, l);
        let back = u.frac_integral(mu).unwrap().frac_derivative(mu).unwrap();
        let got = back.coefficient_of(l);
        prop_assert!(((got - c) / c).abs() <= 1e-11);
        prop_assert_eq!(back.terms().len(), 1);
        Ok(())
    });
    prop("powercalc composition", r).unwrap_or_else(|e| failures.push(e));
    let r = runner.run(&(0.05f64..2.0, 0.05f64..2.0, -0.9f64..3.0), |(a, b, l)| {
        let u = PowerSum::monomial(1.0, l);
        let lhs = u.frac_integral(a).unwrap().frac_integral(b).unwrap();
        let rhs = u.frac_integral(a + b).unwrap();
        prop_assert_eq!(lhs.terms().len(), 1);
        prop_assert_eq!(lhs.terms()[0].exponent, rhs.terms()[0].exponent);
        let (x, y) = (lhs.terms()[0].coefficient, rhs.terms()[0].coefficient);
        prop_assert!(((x - y) / y).abs() <= 1e-11);
        Ok(())
    });
    prop("powercalc semigroup", r).unwrap_or_else(|e| failures.push(e));
    let r = runner.run(&(0.05f64..=2.0, -3.0f64..3.0, -3.0f64..3.0, -0.9f64..3.0, -0.9f64..3.0), |(mu, a, b, l1, l2)| {
        let u = PowerSum::monomial(1.0, l1);
        let v = PowerSum::monomial(1.0, l2);
        let lhs = (&(&u * a) + &(&v * b)).frac_derivative(mu).unwrap();
        let rhs = &(&u.frac_derivative(mu).unwrap() * a) + &(&v.frac_derivative(mu).unwrap() * b);
        for t in [0.1, 0.5, 0.9] {
            let (x, y) = (lhs.eval_positive(t), rhs.eval_positive(t));
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
        }
        Ok(())
    });
    prop("powercalc linearity", r).unwrap_or_else(|e| failures.push(e));

    // greenkernel, literally as stated on the grids
    let mut continuity = Vec::new();
    for a in [1.1, 1.5, 1.9, 2.0] {
        let alpha = ord(a);
        for i in 0..200 {
            for j in 0..200 {
                let (t, s) = (i as f64 / 199.0, j as f64 / 199.0);
                if !(green_eval(t, s, alpha) >= 0.0) {
                    failures.push(format!("nonnegativity at alpha {a}, ({t}, {s})"));
                }
            }
            let s = i as f64 / 199.0;
            if green_eval(0.0, s, alpha) != 0.0 || green_eval(1.0, s, alpha) != 0.0 {
                failures.push(format!("boundary zero at alpha {a}, s {s}"));
            }
        }
        let k = Kernels::new(alpha);
        let eps = 1e-9;
        let gap = (1..199)
            .map(|i| {
                let t = i as f64 / 199.0;
                let l = k.green_left(t, KernelPoint::new(t, t - eps));
                let r = k.green_right(t, KernelPoint::new(t, t + eps));
                (l - r).abs()
            })
            .fold(0.0, f64::max);
        if gap >= 1e-6 {
            let theory = eps.powf(a - 1.0) / gamma(a).unwrap();
            continuity.push(format!("alpha {a}: max gap {gap:.2e} (eps^(alpha-1)/Gamma(alpha) = {theory:.2e})"));
        }
    }
    if !continuity.is_empty() {
        failures.push(format!("branch continuity < 1e-6 at s = t +/- 1e-9: {}", continuity.join("; ")));
    }

    // solver
    let mut runner = TestRunner::new(Config {
        cases: 16,
        failure_persistence: None,
        ..Config::default()
    });
    let weights = (1.1f64..=2.0, 0.0f64..1.0).prop_map(|(a, frac)| {
        let beta = canonical_exponent((a * frac * 100.0).floor() / 100.0);
        (a, WeightSpec::power(beta).unwrap())
    });
    let r = runner.run(&(weights.clone(), 0.0f64..1.0, 0.0f64..2.0), |((a, w), s, b)| {
        let f = NonlinearitySpec::Affine(s, b);
        let opts = PicardOptions {
            max_iter: 30,
            ..PicardOptions::default()
        };
        let rep = solve_nonlinear(&w, f, ord(a), 32, opts).unwrap();
        let v = &rep.solution.values;
        prop_assert!(v[0] == 0.0 && v[32] == 0.0);
        prop_assert!(v.iter().all(|&x| x >= -1e-12));
        let lin = solve_linear(&w, ord(a), 32).unwrap();
        prop_assert!(lin.values[0] == 0.0 && lin.values[32] == 0.0);
        prop_assert!(lin.values.iter().all(|&x| x >= -1e-12));
        let c = 1.0 + s;
        let scaled = solve_nonlinear(&w, NonlinearitySpec::Constant(c), ord(a), 32, opts).unwrap();
        for (l, u) in lin.values.iter().zip(&scaled.solution.values) {
            prop_assert!((c * l - u).abs() <= 1e-12 * (c * l).abs().max(1.0));
        }
        let mut picard = Picard::new(&w, f, ord(a), 32, 1.0).unwrap();
        let mut prev = picard.iterate().to_vec();
        for _ in 0..6 {
            picard.step();
            prop_assert!(picard.iterate().iter().zip(&prev).all(|(q, p)| *q >= *p - 1e-13));
            prev = picard.iterate().to_vec();
        }
        Ok(())
    });
    prop("solver positivity/boundary/linearity/Picard monotonicity", r).unwrap_or_else(|e| failures.push(e));

    if failures.is_empty() {
        Ok("specfun, powercalc, greenkernel and solver invariants hold".into())
    } else {
        Err(failures.join(" | "))
    }
}

fn c8_condition_h() -> Check {
    let mut checked = 0;
    for ai in 11..=20 {
        for bi in 0..=19 {
            for li in [0, 3, 5] {
                let (a, b, l) = (ai as f64 / 10.0, bi as f64 / 10.0, li as f64 / 10.0);
                let w = WeightSpec::new(b, PowerSum::monomial(1.0, l)).unwrap();
                let want = ai - bi + li > 0;
                let report = check_condition_h(&w, ord(a));
                ensure(report.satisfied == want, || {
                    format!("alpha {a}, beta {b}, lambda {l}: margin {}", report.exponent_margin)
                })?;
                ensure(build_mesh(16, &w, ord(a)).is_ok() == want, || format!("mesh gate at alpha {a}, beta {b}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (alpha, beta, lambda_min) cases match alpha - beta + lambda_min > 0"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "oracle exactness", limit: Duration::from_secs(1), run: c1_oracle_exactness },
        Criterion { id: 2, name: "classical reduction", limit: Duration::from_secs(1), run: c2_classical },
        Criterion { id: 3, name: "singular-weight round trip (u2)", limit: Duration::from_secs(10), run: c3_u2 },
        Criterion { id: 3, name: "singular-weight round trip (u3)", limit: Duration::from_secs(10), run: c3_u3 },
        Criterion { id: 4, name: "residual identity", limit: Duration::from_secs(10), run: c4_residual },
        Criterion { id: 5, name: "regularity verdicts", limit: Duration::from_secs(30), run: c5_regularity },
        Criterion { id: 6, name: "four-weight figure", limit: Duration::from_secs(30), run: c6_figure },
        Criterion { id: 7, name: "property suites", limit: Duration::from_secs(60), run: c7_properties },
        Criterion { id: 8, name: "condition (H) gate", limit: Duration::from_secs(1), run: c8_condition_h },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.limit => Err(format!("{msg}; took {elapsed:.2?} > {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {} [{}]: PASS ({elapsed:.2?}) {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {} [{}]: FAIL ({elapsed:.2?}) {msg}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} of {} checks passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
