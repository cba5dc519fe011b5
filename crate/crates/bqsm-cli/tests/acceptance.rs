//! The seventeen acceptance criteria, each run through its registered
//! experiment at the stated sizes. Prints one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use bqsm_cli::{find, run_named, Outcome};
use serde_json::{Map, Value};

type Row = Map<String, Value>;

fn f(row: &Row, key: &str) -> f64 {
    row.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn u(row: &Row, key: &str) -> u64 {
    row.get(key).and_then(Value::as_u64).unwrap_or(u64::MAX)
}

fn s<'a>(row: &'a Row, key: &str) -> &'a str {
    row.get(key).and_then(Value::as_str).unwrap_or("")
}

struct Criterion {
    id: u8,
    experiment: &'static str,
    params: Vec<(&'static str, &'static str)>,
    seed: u64,
    limit: Option<Duration>,
    /// Extra checks on the rows beyond the experiment's own verdict;
    /// returns a short detail string, or an error describing the failure.
    verify: fn(&Outcome) -> Result<String, String>,
}

fn c1(o: &Outcome) -> Result<String, String> {
    let ns: Vec<u64> = o.rows.iter().map(|r| u(r, "n")).collect();
    if ns != (2..=8).collect::<Vec<_>>() {
        return Err(format!("sizes {ns:?}"));
    }
    let worst = o.rows.iter().map(|r| (f(r, "lhs") - (1.0 + 2f64.powf(-f(r, "n") / 2.0))).abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(format!("max deviation {worst:e}"));
    }
    Ok(format!("n = 2..8, max |sum - (1 + 2^(-n/2))| = {worst:.1e}"))
}

fn c2(o: &Outcome) -> Result<String, String> {
    let worst =
        o.rows.iter().map(|r| (f(r, "lhs") - 2.0).abs().max((f(r, "rhs") - 2.0).abs())).fold(0.0, f64::max);
    if o.rows.len() != 4 || worst > 1e-9 {
        return Err(format!("{} rows, max deviation {worst:e}", o.rows.len()));
    }
    Ok(format!("n in {{2,4,6,8}}, max |lhs - 2|, |rhs - 2| = {worst:.1e}"))
}

fn c3(o: &Outcome) -> Result<String, String> {
    let mut detail = Vec::new();
    for rel in ["two-basis", "max-prob-sum", "max-prob-product", "min-entropy-sum", "multi-mub"] {
        let r = o.rows.iter().find(|r| s(r, "relation") == rel).ok_or(format!("no rows for {rel}"))?;
        if u(r, "checked") != 10_000 || u(r, "violations") != 0 {
            return Err(format!("{rel}: {} checked, {} violations", u(r, "checked"), u(r, "violations")));
        }
        detail.push(format!("{rel} min slack {:.2e}", f(r, "min_slack")));
    }
    Ok(format!("10^4 states, zero violations; {}", detail.join(", ")))
}

fn c4(o: &Outcome) -> Result<String, String> {
    let sweep = o.rows.iter().find(|r| s(r, "check") == "random_states").ok_or("no sweep row")?;
    if u(sweep, "checked") != 10_000 || u(sweep, "violations") != 0 {
        return Err("sweep violations".into());
    }
    let eq = o.rows.iter().filter(|r| s(r, "check") == "basis_state").map(|r| f(r, "slack").abs()).fold(0.0, f64::max);
    if eq > 1e-6 {
        return Err(format!("basis-state slack {eq:e}"));
    }
    Ok(format!("10^4 states, min slack {:.2e}; basis states max |slack| {eq:.1e}", f(sweep, "slack")))
}

fn c5(o: &Outcome) -> Result<String, String> {
    let mut parts = Vec::new();
    for (d, t) in [(2, 0.72), (4, 1.56), (8, 2.48), (16, 3.43)] {
        let r = o.rows.iter().find(|r| u(r, "d") == d).ok_or(format!("no row for d = {d}"))?;
        let h = f(r, "closed_form");
        if ((h * 100.0).round() / 100.0 - t).abs() > 1e-9 {
            return Err(format!("d = {d}: {h}"));
        }
        let z = f(r, "z");
        if z.abs() > 3.0 {
            return Err(format!("d = {d}: Monte Carlo z = {z}"));
        }
        parts.push(format!("h_{d} = {h:.4} (z {z:+.2})"));
    }
    Ok(parts.join(", "))
}

fn c6(o: &Outcome) -> Result<String, String> {
    let mut parts = Vec::new();
    for (a, want, tol) in [("bb84", 0.1100, 0.0005), ("six-state", 0.1735, 0.002), ("haar", 0.199, 0.002)] {
        let r = o.rows.iter().find(|r| s(r, "alphabet") == a).ok_or(format!("no row for {a}"))?;
        let (p, rate) = (f(r, "p"), f(r, "rate"));
        if (p - want).abs() > tol || rate.abs() > 1e-6 {
            return Err(format!("{a}: p = {p}, rate {rate:e}"));
        }
        parts.push(format!("{a} p = {p:.4}"));
    }
    Ok(parts.join(", "))
}

fn c7(o: &Outcome) -> Result<String, String> {
    for (n, ell) in [(4, 1), (4, 2), (6, 1)] {
        let k = o.rows.iter().filter(|r| u(r, "n") == n && u(r, "ell") == ell).count();
        if k < 20 {
            return Err(format!("only {k} distributions at ({n},{ell})"));
        }
    }
    let min = o.rows.iter().map(|r| f(r, "slack")).fold(f64::INFINITY, f64::min);
    if min < -1e-12 {
        return Err(format!("slack {min:e}"));
    }
    Ok(format!("{} cases, min slack {min:.3e}", o.rows.len()))
}

fn c8(o: &Outcome) -> Result<String, String> {
    let strategies = o.rows.iter().filter(|r| !s(r, "source").starts_with("random_cq")).count();
    for q in 0..=2 {
        if !o.rows.iter().any(|r| u(r, "q") == q) {
            return Err(format!("no case with q = {q}"));
        }
    }
    let min = o.rows.iter().map(|r| f(r, "slack")).fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(format!("slack {min:e}"));
    }
    Ok(format!("{} cases ({strategies} strategy states), min slack {min:.3e}", o.rows.len()))
}

fn c9(o: &Outcome) -> Result<String, String> {
    for r in &o.rows {
        if u(r, "n") % 2 == 0 && ((f(r, "success") - 1.0).abs() > 1e-9 || u(r, "memory_qubits") != 0) {
            return Err(format!("n = {}: success {}", u(r, "n"), f(r, "success")));
        }
    }
    Ok("success 1 at n = 2, 4, 6 with no stored qubits".into())
}

fn c10(o: &Outcome) -> Result<String, String> {
    let r = &o.rows[0];
    let target = (std::f64::consts::PI / 8.0).cos().powi(2);
    let dev = (f(r, "b0_success") - target).abs().max((f(r, "b1_success") - target).abs());
    if dev > 1e-9 {
        return Err(format!("deviation {dev:e}"));
    }
    Ok(format!("per-bit success {:.6} = cos^2(pi/8)", f(r, "b0_success")))
}

fn c11(o: &Outcome) -> Result<String, String> {
    let xr = o.rows.iter().find(|r| s(r, "check") == "xor_iff_zero_epsilon").ok_or("no rational row")?;
    if u(xr, "instances") != 10_000 || u(xr, "violations") != 0 {
        return Err("counterexamples".into());
    }
    for ell in [1, 2] {
        let r = o
            .rows
            .iter()
            .find(|r| s(r, "check") == "perturbed_epsilon_vs_ndlf" && u(r, "ell") == ell)
            .ok_or(format!("no perturbed row at ell = {ell}"))?;
        if u(r, "violations") != 0 {
            return Err(format!("ell = {ell}: {} violations", u(r, "violations")));
        }
    }
    Ok(format!("0 counterexamples in 10^4 ({} XOR-uniform); perturbed ell 1, 2: 0 violations", u(xr, "xor_uniform")))
}

fn c12(o: &Outcome) -> Result<String, String> {
    let r = &o.rows[0];
    if u(r, "trials") != 10_000 || u(r, "violations") != 0 {
        return Err(format!("{} violations", u(r, "violations")));
    }
    Ok(format!("10^4 joints, min H(X_(1-C) C) - H(X0 X1)/2 = {:.3e}", f(r, "min_margin")))
}

fn c13(o: &Outcome) -> Result<String, String> {
    for check in ["rabin_output_when_a_is_1", "ot12_standard", "ot12_reversed", "commitment_open"] {
        let r = o.rows.iter().find(|r| s(r, "check") == check).ok_or(format!("no {check}"))?;
        if u(r, "failures") != 0 {
            return Err(format!("{check}: {} failures", u(r, "failures")));
        }
    }
    let a = o.rows.iter().find(|r| s(r, "check") == "rabin_pr_a_is_1").ok_or("no Pr[A=1] row")?;
    let n = u(a, "runs") as f64;
    if (f(a, "rate") - 0.5).abs() > 3.0 * (0.25 / n).sqrt() {
        return Err(format!("Pr[A=1] = {}", f(a, "rate")));
    }
    let mut noisy = Vec::new();
    for check in ["ot12_noisy", "commitment_noisy"] {
        let r = o.rows.iter().find(|r| s(r, "check") == check).ok_or(format!("no {check}"))?;
        noisy.push(format!("{check} {:.4} <= {:.4}", f(r, "rate"), f(r, "design_bound")));
    }
    Ok(format!("noiseless: 0 failures, Pr[A=1] = {:.4}; {}", f(a, "rate"), noisy.join(", ")))
}

fn c14(o: &Outcome) -> Result<String, String> {
    let max_n = o.rows.iter().map(|r| u(r, "n")).max().unwrap_or(0);
    let worst = o.rows.iter().map(|r| f(r, "distance")).fold(0.0, f64::max);
    if max_n != 8 || worst > 1e-9 {
        return Err(format!("n up to {max_n}, max distance {worst:e}"));
    }
    Ok(format!("{} (strategy, protocol, n) cases, max distance {worst:.1e}", o.rows.len()))
}

fn c15(o: &Outcome) -> Result<String, String> {
    let sup: Vec<&Row> = o.rows.iter().filter(|r| s(r, "check") == "superposed_sum_is_1").collect();
    if sup.is_empty() || sup.iter().any(|r| (f(r, "sum") - 1.0).abs() > 1e-9) {
        return Err("superposed committer sum".into());
    }
    let ctrl = o.rows.iter().find(|r| s(r, "check") == "full_memory_control").ok_or("no control")?;
    if f(ctrl, "sum") <= 1.9 {
        return Err(format!("control sum {}", f(ctrl, "sum")));
    }
    let bounded: Vec<&Row> = o.rows.iter().filter(|r| s(r, "check") == "bounded_weak").collect();
    for n in [8, 10, 12] {
        if !bounded.iter().any(|r| u(r, "n") == n) {
            return Err(format!("no bounded strategies at n = {n}"));
        }
    }
    if bounded.iter().any(|r| u(r, "q") > 2 || r.get("links_hold") != Some(&Value::Bool(true))) {
        return Err("bounded strategy outside its bound".into());
    }
    let worst = bounded.iter().map(|r| f(r, "sum")).fold(0.0, f64::max);
    Ok(format!(
        "superposed sum 1, control {:.4}, {} bounded cases within bound (max sum {worst:.4})",
        f(ctrl, "sum"),
        bounded.len()
    ))
}

fn c16(o: &Outcome) -> Result<String, String> {
    let chains: Vec<&str> = ["sender_security", "qkd_rate"].into_iter().filter(|c| o.rows.iter().any(|r| s(r, "chain") == *c)).collect();
    if chains.len() != 2 {
        return Err(format!("chains present: {chains:?}"));
    }
    for link in ["event_min_entropy", "splitting", "chain_rule", "privacy_amplification", "uncertainty_shannon"] {
        if !o.rows.iter().any(|r| s(r, "link") == link) {
            return Err(format!("link {link} never evaluated"));
        }
    }
    let min = o.rows.iter().map(|r| f(r, "slack")).fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(format!("slack {min:e}"));
    }
    Ok(format!("{} links, min slack {min:.3e}", o.rows.len()))
}

fn c17(o: &Outcome) -> Result<String, String> {
    let r = &o.rows[0];
    let (ex, eps, se) = (f(r, "exceedance"), f(r, "epsilon"), f(r, "stderr"));
    if u(r, "trials") != 10_000 || ex > eps + 3.0 * se {
        return Err(format!("exceedance {ex} vs epsilon {eps}"));
    }
    Ok(format!("exceedance {ex:.4} <= epsilon {eps:.4} + 3 sigma"))
}

fn criteria() -> Vec<Criterion> {
    let c = |id, experiment, params: Vec<(&'static str, &'static str)>, limit: Option<u64>, verify| Criterion {
        id,
        experiment,
        params,
        seed: 20_240_000 + id as u64,
        limit: limit.map(Duration::from_secs),
        verify,
    };
    vec![
        c(1, "uncertainty-invariant", vec![("n_min", "2"), ("n_max", "8")], Some(1), c1),
        c(2, "uncertainty-half-split", vec![("n", "2,4,6,8")], None, c2),
        c(3, "relation-sweep", vec![("n_max", "6"), ("trials", "10000")], None, c3),
        c(4, "maassen-uffink", vec![("n_max", "6"), ("trials", "10000")], None, c4),
        c(5, "overall-bound", vec![("d", "2,4,8,16"), ("samples", "100000")], Some(120), c5),
        c(6, "qkd-thresholds", vec![], None, c6),
        c(7, "classical-lhl", vec![("cases", "4:1,4:2,6:1")], None, c7),
        c(8, "pa-quantum", vec![("n", "4,5,6"), ("q_max", "2")], Some(600), c8),
        c(9, "bell-attack", vec![("n", "2,4,6")], None, c9),
        c(10, "breitbart-attack", vec![], None, c10),
        c(11, "xor-characterization", vec![("trials", "10000"), ("perturbed", "10000"), ("ell", "1,2")], None, c11),
        c(12, "min-entropy-splitting", vec![("trials", "10000")], None, c12),
        c(13, "protocol-correctness", vec![("runs", "10000"), ("phi", "0.05")], None, c13),
        c(14, "purification", vec![("n_max", "8")], None, c14),
        c(15, "commit-binding", vec![("n", "8,10,12"), ("q_max", "2")], None, c15),
        c(16, "proof-chain-audit", vec![], None, c16),
        c(17, "hmin-floor-hugging", vec![("n", "200"), ("alphabet", "4"), ("lambda", "0.1"), ("trials", "10000")], None, c17),
    ]
}

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for cr in criteria() {
        let exp = find(cr.experiment).expect("registered");
        assert_eq!(exp.criterion, Some(cr.id), "{} is registered for another criterion", cr.experiment);
        let start = Instant::now();
        let result = run_named(cr.experiment, &cr.params, cr.seed);
        let elapsed = start.elapsed();
        let verdict = match result {
            Err(e) => Err(format!("error: {:?}", e)),
            Ok(o) if !o.passed() => Err(format!("{} checks failed in {}", o.violations, cr.experiment)),
            Ok(o) => (cr.verify)(&o),
        }
        .and_then(|d| match cr.limit {
            Some(l) if elapsed > l => Err(format!("{d}; runtime {elapsed:.1?} over {l:?}")),
            _ => Ok(d),
        });
        match &verdict {
            Ok(d) => println!("criterion {:2} PASS [{}] {d} ({elapsed:.2?})", cr.id, cr.experiment),
            Err(d) => {
                println!("criterion {:2} FAIL [{}] {d} ({elapsed:.2?})", cr.id, cr.experiment);
                failed.push(cr.id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
