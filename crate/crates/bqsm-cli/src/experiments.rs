use std::collections::BTreeMap;

use bqsm::classical_ot::{
    construct_pointer, ndlf_security_distance, random_ot_distribution, random_rational, xor_uniformity,
    OtOutputDistribution, Rational,
};
use bqsm::cqstate::{classical_lhl_distance, pa_distance_best, CqState, FamilyAveraging};
use bqsm::derive_seed;
use bqsm::entropy::{random_joint, split_min_entropy, Distribution, JointDistribution};
use bqsm::hashing::HashFamily;
use bqsm::protocols::{
    bell_attack, binding_experiment, breitbart_attack, purification_check, rabin_cq_state, receiver_security_witness,
    run_bb84_rabin_ot, run_commitment, run_ot12, run_rabin_ot, sender_security_distance, standard_strategies,
    superposed_committer, AdversaryStrategy, BindingMode, ChainLink, ChannelModel, CommitVariant, Direction,
    LinearCode, Participant, SecurityProtocol, SenderProgram, MAX_STRONG_N,
};
use bqsm::qkd::{
    overall_bound, overall_bound_mc, rate_bound_check, run_qkd, threshold_table, Alphabet, QkdConfig,
    RateCheckConfig,
};
use bqsm::qstate::PureState;
use bqsm::uncertainty::{
    accumulated_min_entropy, half_split_fixture, invariant_state, maassen_uffink, relation_sweep, sweep_state,
    two_basis_relation, FloorHugging,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Experiment, Outcome, ParamSpec, Params, RunError, RunResult};

fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, default, help }
}

fn exp(
    name: &'static str,
    criterion: Option<u8>,
    description: &'static str,
    params: Vec<ParamSpec>,
    run: crate::Runner,
) -> Experiment {
    Experiment { name, description, criterion, params, run }
}

pub fn registry() -> Vec<Experiment> {
    vec![
        exp("uncertainty-invariant", Some(1), "Two-basis relation on the invariant state with singleton sets", vec![
            p("n_min", "2", "smallest register"),
            p("n_max", "8", "largest register"),
        ], invariant),
        exp("uncertainty-half-split", Some(2), "Two-basis relation on the half-split state and sets", vec![
            p("n", "2,4,6,8", "even register sizes"),
        ], half_split),
        exp("uncertainty-two-basis", None, "Two-basis relation on Haar-random states with random sets", vec![
            p("n", "4", "register size"),
            p("trials", "1000", "random states"),
        ], two_basis),
        exp("relation-sweep", Some(3), "All uncertainty relations on random states and sets", vec![
            p("n_max", "6", "register sizes cycle through 1..=n_max"),
            p("trials", "10000", "random states"),
        ], sweep),
        exp("maassen-uffink", Some(4), "Shannon relation on random states, equality on basis states", vec![
            p("n_max", "6", "register sizes cycle through 1..=n_max"),
            p("trials", "10000", "random states"),
        ], mu),
        exp("overall-bound", Some(5), "Overall average entropic uncertainty bound: closed form and Haar Monte Carlo", vec![
            p("d", "2,4,8,16", "dimensions"),
            p("samples", "100000", "Haar bases per dimension"),
        ], overall),
        exp("qkd-thresholds", Some(6), "Noise thresholds h(p) = h for BB84, six-state and Haar alphabets", vec![], thresholds),
        exp("classical-lhl", Some(7), "Left-over hash lemma on structured distributions, exhaustive family", vec![
            p("cases", "4:1,4:2,6:1", "n:ell pairs"),
        ], classical_lhl),
        exp("pa-quantum", Some(8), "Privacy amplification against quantum memory for each strategy", vec![
            p("n", "4,5,6", "register sizes"),
            p("q_max", "2", "largest memory"),
            p("ell", "1", "output length"),
            p("random", "4", "random cq-states per (n, q)"),
        ], pa_quantum),
        exp("bell-attack", Some(9), "Pairwise Bell measurements against the deterministic-XOR protocol", vec![
            p("n", "2,4,6", "register sizes"),
        ], bell),
        exp("breitbart-attack", Some(10), "Rotated-basis attack on the one-qubit two-bit encoding", vec![], breitbart),
        exp("xor-characterization", Some(11), "Pointer construction versus XOR and NDLF distances", vec![
            p("trials", "10000", "rational bit-OT distributions"),
            p("perturbed", "10000", "perturbed distributions per ell"),
            p("ell", "1,2", "string lengths for the perturbed check"),
            p("w_card", "3", "receiver view size"),
            p("max_weight", "12", "largest integer weight"),
        ], xor_char),
        exp("min-entropy-splitting", Some(12), "Splitting pointer on random joints", vec![
            p("trials", "10000", "random joints"),
            p("d_max", "8", "largest alphabet per side"),
        ], splitting),
        exp("protocol-correctness", Some(13), "Honest executions of Rabin OT, 1-2 OT and commitment", vec![
            p("runs", "10000", "noiseless runs per protocol"),
            p("noisy_runs", "2000", "noisy runs per protocol"),
            p("phi", "0.05", "bit-flip rate of the noisy runs"),
            p("code", "rep3", "error-correcting code for noisy 1-2 OT"),
            p("epsilon", "0.1", "acceptance margin above phi for noisy commitment"),
            p("n_rabin", "16", "qubits per Rabin OT"),
            p("n_ot", "24", "qubits per noiseless 1-2 OT"),
            p("n_noisy_ot", "64", "qubits per noisy 1-2 OT"),
            p("ell", "3", "1-2 OT string length"),
            p("n_commit", "40", "qubits per noiseless commitment"),
            p("n_noisy_commit", "200", "qubits per noisy commitment"),
        ], correctness),
        exp("purification", Some(14), "Direct versus EPR-based adversary states", vec![
            p("n_max", "8", "register sizes 1..=n_max"),
            p("q_max", "2", "largest stored prefix besides full memory"),
            p("protocols", "rabin,commitment", "protocols to check"),
        ], purification),
        exp("commit-binding", Some(15), "Opening probabilities of committers against the binding bound", vec![
            p("n", "8,10,12", "register sizes"),
            p("q_max", "2", "largest memory"),
            p("lambda", "0.1", "entropy rate of the uncertainty event"),
            p("control_n", "8", "size for the full-memory control"),
            p("strong_n", "8", "size for the strong-binding check, 0 to skip"),
        ], binding),
        exp("proof-chain-audit", Some(16), "Every link of the sender-security and QKD rate chains", vec![
            p("rabin_n", "4,5,6", "Rabin OT sizes"),
            p("ot12_n", "4", "1-2 OT sizes"),
            p("q_max", "2", "largest memory"),
            p("ell", "1", "output length"),
            p("lambda", "0.1", "entropy rate of the uncertainty event"),
            p("rate_m", "6", "sifted length for the QKD rate check"),
            p("alphabets", "bb84,six-state", "QKD alphabets"),
        ], audit),
        exp("hmin-floor-hugging", Some(17), "Min-entropy accumulation for a floor-hugging source", vec![
            p("n", "200", "sequence length"),
            p("alphabet", "4", "alphabet size"),
            p("lambda", "0.1", "deviation"),
            p("h", "1.0", "per-step Shannon entropy"),
            p("trials", "10000", "sampled sequences"),
        ], hmin),
        exp("qkd-run", None, "Honest QKD runs through sifting, error correction and privacy amplification", vec![
            p("alphabet", "bb84", "bb84, six-state or haar"),
            p("haar_count", "4", "bases in a Haar alphabet"),
            p("p", "0.0", "channel bit-flip probability"),
            p("code", "none4", "error-correcting code"),
            p("q", "0", "eavesdropper memory"),
            p("symbols", "2000", "transmitted qubits"),
            p("margin", "10", "security margin in bits"),
            p("runs", "1", "independent runs"),
        ], qkd_run),
        exp("rate-check", None, "Exact QKD key distance against one eavesdropper", vec![
            p("alphabet", "bb84", "bb84, six-state or haar"),
            p("haar_count", "4", "bases in a Haar alphabet"),
            p("m", "6", "sifted length"),
            p("code", "none6", "error-correcting code"),
            p("margin", "0", "security margin in bits"),
            p("epsilon", "0.5", "target security level"),
            p("strategy", "none", "none or an adversary strategy name"),
            p("q", "0", "stored qubits (store_prefix)"),
            p("basis", "+", "measurement bases (measure_fixed_basis)"),
            p("basis_samples", "16", "basis strings in the assembly"),
            p("hash_samples", "16", "hash functions when sampling"),
        ], rate_check),
        exp("sender-security", None, "Sender-security distance and bound chain for one strategy", vec![
            p("protocol", "rabin", "rabin or ot12"),
            p("strategy", "store_prefix", "adversary strategy name"),
            p("q", "1", "stored qubits (store_prefix)"),
            p("basis", "+", "measurement bases (measure_fixed_basis)"),
            p("n", "4", "qubits"),
            p("ell", "1", "output length"),
            p("lambda", "0.1", "entropy rate of the uncertainty event"),
        ], sender_security),
        exp("protocol-run", None, "Protocol executions with transcripts", vec![
            p("protocol", "rabin", "rabin, bb84-rabin, ot12 or commit"),
            p("bit", "0", "sender bit, choice bit or committed bit"),
            p("n", "16", "qubits"),
            p("ell", "1", "1-2 OT string length"),
            p("phi", "0.0", "bit-flip probability"),
            p("eta", "0.0", "multi-qubit emission probability"),
            p("party", "honest", "honest or an adversary strategy name"),
            p("q", "0", "stored qubits (store_prefix)"),
            p("basis", "+", "measurement bases (measure_fixed_basis)"),
            p("code", "hamming74", "error-correcting code, or none"),
            p("direction", "standard", "standard or reversed (1-2 OT)"),
            p("tolerance", "0", "noisy commitment tolerance, 0 for exact checking"),
            p("runs", "1", "independent runs"),
        ], protocol_run),
        exp("receiver-witness", None, "Receiver-security witness for a sender program", vec![
            p("protocol", "rabin", "rabin or ot12"),
            p("program", "garbage", "honest, garbage or entangling"),
            p("n", "3", "qubits"),
            p("ell", "1", "output length"),
        ], witness),
    ]
}

fn strategy(name: &str, q: usize, basis: &str) -> RunResult<AdversaryStrategy> {
    Ok(AdversaryStrategy::from_name(name, q, basis)?)
}

fn alphabet(params: &Params, seed: u64) -> RunResult<Alphabet> {
    Ok(Alphabet::parse(params.text("alphabet"), params.usize("haar_count")?, seed)?)
}

fn protocol(name: &str) -> RunResult<SecurityProtocol> {
    match name {
        "rabin" => Ok(SecurityProtocol::Rabin),
        "ot12" => Ok(SecurityProtocol::Ot12),
        "commitment" | "commit" => Ok(SecurityProtocol::Commitment),
        _ => Err(RunError::Parameter(format!("unknown protocol {name}"))),
    }
}

fn link_rows(o: &mut Outcome, base: &Value, links: &[ChainLink]) {
    for l in links {
        let mut row = base.clone();
        row["link"] = json!(l.name);
        row["lhs"] = json!(l.lhs);
        row["rhs"] = json!(l.rhs);
        row["slack"] = json!(l.slack);
        row["holds"] = json!(o.check(l.holds()));
        o.push(row);
    }
}

fn random_set<R: Rng>(d: usize, rng: &mut R) -> Vec<usize> {
    let k = rng.gen_range(1..=(d / 4).max(1));
    rand::seq::index::sample(rng, d, k).into_vec()
}

/// Bounded strategies from the standard list, without duplicates.
fn bounded(n: usize, q_max: usize) -> RunResult<Vec<AdversaryStrategy>> {
    let mut out: Vec<AdversaryStrategy> = Vec::new();
    for s in standard_strategies(n, q_max) {
        if s.memory_qubits(n)? <= q_max && !out.iter().any(|t| t.label() == s.label()) {
            out.push(s);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Uncertainty
// ---------------------------------------------------------------------------

fn invariant(params: &Params, _seed: u64) -> RunResult<Outcome> {
    let mut o = Outcome::default();
    for n in params.usize("n_min")?..=params.usize("n_max")? {
        let r = two_basis_relation(&invariant_state(n)?.density(), &[0], &[0])?;
        let expected = 1.0 + 2f64.powf(-(n as f64) / 2.0);
        let ok = o.check((r.lhs - expected).abs() <= 1e-9 && r.holds());
        o.push(json!({"n": n, "lhs": r.lhs, "rhs": r.rhs, "expected": expected, "slack": r.slack, "pass": ok}));
    }
    Ok(o)
}

fn half_split(params: &Params, _seed: u64) -> RunResult<Outcome> {
    let mut o = Outcome::default();
    for n in params.usize_list("n")? {
        let (st, lp, lx) = half_split_fixture(n)?;
        let r = two_basis_relation(&st.density(), &lp, &lx)?;
        let ok = o.check((r.lhs - 2.0).abs() <= 1e-9 && (r.rhs - 2.0).abs() <= 1e-9);
        o.push(json!({"n": n, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack, "pass": ok}));
    }
    Ok(o)
}

fn two_basis(params: &Params, seed: u64) -> RunResult<Outcome> {
    let n = params.usize("n")?;
    let mut o = Outcome::default();
    for i in 0..params.usize("trials")? {
        let s = derive_seed(seed, i as u64);
        let rho = sweep_state(n, s, false)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, 1));
        let (lp, lx) = (random_set(1 << n, &mut rng), random_set(1 << n, &mut rng));
        let r = two_basis_relation(&rho, &lp, &lx)?;
        let ok = o.check(r.holds());
        o.push(json!({
            "trial": i, "n": n, "state_seed": s, "size_plus": lp.len(), "size_cross": lx.len(),
            "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack, "holds": ok,
        }));
    }
    Ok(o)
}

fn sweep(params: &Params, seed: u64) -> RunResult<Outcome> {
    let rows = relation_sweep(params.usize("n_max")?, params.usize("trials")?, seed)?;
    let mut agg: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    for r in &rows {
        let e = agg.entry(r.relation.clone()).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        if r.slack < -1e-9 {
            e.1 += 1;
        }
        e.2 = e.2.min(r.slack);
    }
    let mut o = Outcome::default();
    for (rel, (count, viol, min_slack)) in agg {
        o.check(viol == 0);
        o.push(json!({"relation": rel, "checked": count, "violations": viol, "min_slack": min_slack}));
    }
    o.set("rows_checked", rows.len());
    Ok(o)
}

fn mu(params: &Params, seed: u64) -> RunResult<Outcome> {
    let n_max = params.usize("n_max")?;
    let trials = params.usize("trials")?;
    if n_max == 0 {
        return Err(RunError::Parameter("n_max must be positive".into()));
    }
    let mut o = Outcome::default();
    let (mut viol, mut min_slack) = (0usize, f64::INFINITY);
    for i in 0..trials {
        let n = 1 + i % n_max;
        let r = maassen_uffink(&sweep_state(n, derive_seed(seed, i as u64), i % 2 == 1)?)?;
        if !r.holds() {
            viol += 1;
        }
        min_slack = min_slack.min(r.slack);
    }
    o.check(viol == 0);
    o.push(json!({"check": "random_states", "n": n_max, "index": null, "checked": trials, "violations": viol, "slack": min_slack}));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 1..=n_max {
        let d = 1usize << n;
        let mut idx = vec![0, d - 1, d / 2, rng.gen_range(0..d)];
        idx.dedup();
        for x in idx {
            let r = maassen_uffink(&PureState::basis_state(n, x)?.density())?;
            let ok = o.check(r.slack.abs() <= 1e-6);
            o.push(json!({"check": "basis_state", "n": n, "index": x, "checked": 1, "violations": usize::from(!ok), "slack": r.slack}));
        }
    }
    Ok(o)
}

fn overall(params: &Params, seed: u64) -> RunResult<Outcome> {
    let table: BTreeMap<usize, f64> = [(2, 0.72), (4, 1.56), (8, 2.48), (16, 3.43)].into_iter().collect();
    let samples = params.usize("samples")?;
    let mut o = Outcome::default();
    let mut prev: Option<(f64, f64)> = None;
    let mut ds = params.usize_list("d")?;
    ds.sort_unstable();
    for d in ds {
        let h = overall_bound(d)?;
        let (mc, se) = overall_bound_mc(d, samples, derive_seed(seed, d as u64))?;
        let reference = table.get(&d).copied();
        let table_ok = reference.map_or(true, |t| ((h * 100.0).round() - t * 100.0).abs() < 1e-6);
        let mc_ok = (mc - h).abs() <= 3.0 * se;
        let ratio = h / (d as f64).log2();
        let mono_ok = prev.map_or(true, |(ph, pr)| h > ph && ratio > pr);
        prev = Some((h, ratio));
        let ok = o.check(table_ok && mc_ok && mono_ok);
        o.push(json!({
            "d": d, "closed_form": h, "table": reference, "mc": mc, "stderr": se,
            "z": if se > 0.0 { (mc - h) / se } else { 0.0 }, "ratio_to_log_d": ratio, "pass": ok,
        }));
    }
    Ok(o)
}

fn thresholds(_params: &Params, _seed: u64) -> RunResult<Outcome> {
    let expect: BTreeMap<&str, (f64, f64)> =
        [("bb84", (0.1100, 0.0005)), ("six-state", (0.1735, 0.002)), ("haar", (0.199, 0.002))].into_iter().collect();
    let mut o = Outcome::default();
    for r in threshold_table()? {
        let (want, tol) = expect[r.alphabet.as_str()];
        let ok = o.check((r.p - want).abs() <= tol && r.rate.abs() <= 1e-6);
        o.push(json!({"alphabet": r.alphabet, "h": r.h, "p": r.p, "rate": r.rate, "expected_p": want, "tolerance": tol, "pass": ok}));
    }
    Ok(o)
}

// ---------------------------------------------------------------------------
// Privacy amplification
// ---------------------------------------------------------------------------

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Named test distributions on n-bit strings: flat, point, subset, affine,
/// geometric, spiked, biased-product and random.
fn structured_distributions(n: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let d = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(String, Vec<f64>)> = vec![("uniform".into(), vec![1.0 / d as f64; d])];
    for (name, at) in [("point_first", 0), ("point_last", d - 1)] {
        let mut v = vec![0.0; d];
        v[at] = 1.0;
        out.push((name.into(), v));
    }
    for k in 1..n {
        out.push((format!("prefix_subset_{k}"), normalized((0..d).map(|x| f64::from(u8::from(x < 1 << k))).collect())));
    }
    for k in 1..n {
        let span = loop {
            let gens: Vec<usize> = (0..k).map(|_| rng.gen_range(1..d)).collect();
            let mut span = vec![0usize];
            for g in &gens {
                let shifted: Vec<usize> = span.iter().map(|s| s ^ g).collect();
                span.extend(shifted);
            }
            span.sort_unstable();
            span.dedup();
            if span.len() == 1 << k {
                break span;
            }
        };
        let off = rng.gen_range(0..d);
        let mut v = vec![0.0; d];
        for s in span {
            v[s ^ off] = 1.0;
        }
        out.push((format!("affine_{k}"), normalized(v)));
    }
    for r in [0.5f64, 0.8, 0.95] {
        out.push((format!("geometric_{r}"), normalized((0..d).map(|i| r.powi(i as i32)).collect())));
    }
    out.push(("ramp".into(), normalized((0..d).map(|i| (i + 1) as f64).collect())));
    for a in [0.25, 0.5, 0.9] {
        let at = rng.gen_range(0..d);
        let v = (0..d).map(|x| if x == at { a } else { (1.0 - a) / (d - 1) as f64 }).collect();
        out.push((format!("spike_{a}"), v));
    }
    for b in [0.6, 0.75, 0.9] {
        let v = (0..d).map(|x| (0..n).map(|j| if (x >> j) & 1 == 0 { b } else { 1.0 - b }).product()).collect();
        out.push((format!("biased_product_{b}"), normalized(v)));
    }
    for t in 0..4 {
        out.push((format!("random_{t}"), normalized((0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect())));
    }
    out
}

fn classical_lhl(params: &Params, seed: u64) -> RunResult<Outcome> {
    let mut o = Outcome::default();
    for case in params.text("cases").split(',') {
        let (n, ell) = case
            .split_once(':')
            .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| RunError::Parameter(format!("bad case {case:?}, expected n:ell")))?;
        if n == 0 || n > 10 || ell == 0 || ell > n {
            return Err(RunError::Parameter(format!("case {case} outside 1 <= ell <= n <= 10")));
        }
        let family = HashFamily::linear(n, ell);
        for (name, mass) in structured_distributions(n, derive_seed(seed, n as u64)) {
            let (dist, bound) = classical_lhl_distance(&Distribution::new(mass)?, &family, FamilyAveraging::Exhaustive)?;
            let ok = o.check(dist <= bound + 1e-12);
            o.push(json!({"n": n, "ell": ell, "distribution": name, "distance": dist, "bound": bound, "slack": bound - dist, "pass": ok}));
        }
    }
    o.set("cases_checked", o.rows.len());
    Ok(o)
}

fn pa_quantum(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (q_max, ell, random) = (params.usize("q_max")?, params.usize("ell")?, params.usize("random")?);
    let mut o = Outcome::default();
    let record = |o: &mut Outcome, source: String, n: usize, cq: &CqState| -> RunResult<()> {
        let family = HashFamily::linear(n, ell);
        let r = pa_distance_best(cq, &family, FamilyAveraging::auto(&family, 64, seed))?;
        let ok = o.check(r.exact_distance <= r.bound + 1e-9);
        o.push(json!({
            "source": source, "n": n, "q": r.q, "ell": ell, "exact_distance": r.exact_distance,
            "bound": r.bound, "epsilon": r.epsilon, "smooth_min_entropy": r.smooth_min_entropy,
            "slack": r.slack(), "members": r.members, "pass": ok,
        }));
        Ok(())
    };
    for n in params.usize_list("n")? {
        for s in bounded(n, q_max)? {
            record(&mut o, s.label(), n, &rabin_cq_state(&s, n)?)?;
        }
        for q in 0..=q_max {
            for t in 0..random {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ((n * 16 + q) * 1024 + t) as u64));
                let cq = CqState::random(1 << n, 2, q, 2usize.min(1 << q), &mut rng)?;
                record(&mut o, format!("random_cq_{t}"), n, &cq)?;
            }
        }
    }
    Ok(o)
}

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

fn bell(params: &Params, _seed: u64) -> RunResult<Outcome> {
    let mut o = Outcome::default();
    for n in params.usize_list("n")? {
        let r = bell_attack(n)?;
        let ok = if n % 2 == 0 {
            o.check((r.success - 1.0).abs() <= 1e-9 && r.memory_qubits == 0)
        } else {
            o.check((r.success - 1.0).abs() <= 1e-9)
        };
        o.push(json!({"n": n, "memory_qubits": r.memory_qubits, "success": r.success,
            "success_plus": r.per_basis[0], "success_cross": r.per_basis[1], "pass": ok}));
    }
    Ok(o)
}

fn breitbart(_params: &Params, _seed: u64) -> RunResult<Outcome> {
    let r = breitbart_attack()?;
    let mut o = Outcome::default();
    let ok = o.check(
        (r.b0_success - r.target).abs() <= 1e-9 && (r.b1_success - r.target).abs() <= 1e-9 && r.xor_distance.abs() <= 1e-9,
    );
    o.push(json!({"b0_success": r.b0_success, "b1_success": r.b1_success, "target": r.target,
        "xor_distance": r.xor_distance, "pass": ok}));
    Ok(o)
}

// ---------------------------------------------------------------------------
// Classical OT tools
// ---------------------------------------------------------------------------

fn xor_char(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (trials, perturbed) = (params.usize("trials")?, params.usize("perturbed")?);
    let (wc, maxw) = (params.usize("w_card")?, params.u64("max_weight")? as i64);
    if maxw < 1 {
        return Err(RunError::Parameter("max_weight must be positive".into()));
    }
    let mut o = Outcome::default();
    let zero = Rational::from_integer(0);
    let (mut counter, mut xor_zero, mut eps_zero) = (0usize, 0usize, 0usize);
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let d = random_rational(1, wc, maxw, i % 2 == 0, &mut rng)?;
        let x = xor_uniformity(&d)? == zero;
        let e = construct_pointer(&d)?.epsilon == zero;
        xor_zero += usize::from(x);
        eps_zero += usize::from(e);
        if x != e {
            counter += 1;
        }
    }
    o.check(counter == 0);
    o.push(json!({"check": "xor_iff_zero_epsilon", "ell": 1, "instances": trials, "violations": counter,
        "xor_uniform": xor_zero, "zero_epsilon": eps_zero, "max_ratio": null}));
    for ell in params.usize_list("ell")? {
        let (mut viol, mut worst) = (0usize, 0.0f64);
        let root = derive_seed(seed, 1 << 40 | ell as u64);
        for i in 0..perturbed {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root, i as u64));
            let base = random_rational(ell, wc, maxw, true, &mut rng)?.to_f64();
            let noise = random_ot_distribution(ell, wc, &mut rng)?;
            let delta = 10f64.powf(-rng.gen_range(1.0..4.0));
            let mass = base.mass().iter().zip(noise.mass()).map(|(a, b)| (1.0 - delta) * a + delta * b).collect();
            let d = OtOutputDistribution::new(ell, wc, mass)?;
            let nu = ndlf_security_distance(&d)?.0;
            let eps = construct_pointer(&d)?.epsilon;
            let factor = 2f64.powi(2 * ell as i32 + 1);
            if eps > factor * nu + 1e-12 {
                viol += 1;
            }
            if nu > 0.0 {
                worst = worst.max(eps / (factor * nu));
            }
        }
        o.check(viol == 0);
        o.push(json!({"check": "perturbed_epsilon_vs_ndlf", "ell": ell, "instances": perturbed, "violations": viol,
            "xor_uniform": null, "zero_epsilon": null, "max_ratio": worst}));
    }
    Ok(o)
}

fn splitting(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (trials, d_max) = (params.usize("trials")?, params.usize("d_max")?);
    if d_max < 2 {
        return Err(RunError::Parameter("d_max must be at least 2".into()));
    }
    let (mut viol, mut min_margin, mut c1) = (0usize, f64::INFINITY, 0usize);
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let (dx, dy) = (rng.gen_range(2..=d_max), rng.gen_range(2..=d_max));
        let mut joint = random_joint(dx, dy, &mut rng);
        if i % 2 == 1 {
            // Sharpen so that the heavy branch is exercised.
            joint = JointDistribution::new(vec![dx, dy], normalized(joint.mass().iter().map(|v| v.powi(4)).collect()))?;
        }
        let alpha = -joint.flatten().max().log2();
        let s = split_min_entropy(&joint, alpha)?;
        if !s.holds {
            viol += 1;
        }
        if s.heavy_x1.iter().any(|&h| h) {
            c1 += 1;
        }
        min_margin = min_margin.min(s.achieved - alpha / 2.0);
    }
    let mut o = Outcome::default();
    o.check(viol == 0);
    o.push(json!({"trials": trials, "violations": viol, "min_margin": min_margin, "with_heavy_branch": c1}));
    Ok(o)
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

fn rate_row(o: &mut Outcome, check: &str, runs: usize, failures: usize, design: Option<f64>) -> bool {
    let rate = failures as f64 / runs.max(1) as f64;
    let ok = match design {
        None => failures == 0,
        Some(b) => rate <= b + 3.0 * (b * (1.0 - b) / runs.max(1) as f64).sqrt(),
    };
    let ok = o.check(ok);
    o.push(json!({"check": check, "runs": runs, "failures": failures, "rate": rate, "design_bound": design, "pass": ok}));
    ok
}

fn correctness(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (runs, noisy) = (params.usize("runs")?, params.usize("noisy_runs")?);
    let phi = params.f64("phi")?;
    let ell = params.usize("ell")?;
    let perfect = ChannelModel::perfect();
    let honest = Participant::Honest;
    let mut o = Outcome::default();

    let n = params.usize("n_rabin")?;
    let (mut fail, mut ones) = (0, 0usize);
    for i in 0..runs {
        let b = (i % 2) as u8;
        let t = run_rabin_ot(b, &perfect, &honest, n, derive_seed(seed, i as u64))?;
        if t.bit("a") == Some(1) {
            ones += 1;
            if t.bit("y") != Some(b) {
                fail += 1;
            }
        }
    }
    rate_row(&mut o, "rabin_output_when_a_is_1", runs, fail, None);
    let sigma = (runs as f64 / 4.0).sqrt();
    let ok = o.check((ones as f64 - runs as f64 / 2.0).abs() <= 3.0 * sigma);
    o.push(json!({"check": "rabin_pr_a_is_1", "runs": runs, "failures": null, "rate": ones as f64 / runs.max(1) as f64,
        "design_bound": 0.5, "pass": ok}));

    let n = params.usize("n_ot")?;
    for (label, dir) in [("ot12_standard", Direction::Standard), ("ot12_reversed", Direction::Reversed)] {
        let mut fail = 0;
        for i in 0..runs {
            let t = run_ot12((i % 2) as u8, &perfect, &honest, n, ell, dir, None, derive_seed(seed ^ 0x0712, i as u64))?;
            if t.flag("correct") != Some(true) {
                fail += 1;
            }
        }
        rate_row(&mut o, label, runs, fail, None);
    }

    let n = params.usize("n_commit")?;
    let mut fail = 0;
    for i in 0..runs {
        let r = run_commitment((i % 2) as u8, &perfect, &honest, n, CommitVariant::Comm, derive_seed(seed ^ 0xc0, i as u64))?;
        if !r.accepted {
            fail += 1;
        }
    }
    rate_row(&mut o, "commitment_open", runs, fail, None);

    let channel = ChannelModel::new(phi, 0.0)?;
    let code = LinearCode::by_name(params.text("code"))?;
    let n = params.usize("n_noisy_ot")?;
    let (mut fail, mut design) = (0, 0.0);
    for i in 0..noisy {
        let c = (i % 2) as u8;
        let t = run_ot12(c, &channel, &honest, n, ell, Direction::Standard, Some(&code), derive_seed(seed ^ 0x1712, i as u64))?;
        let len = t.outputs[if c == 0 { "I0" } else { "I1" }].as_array().map_or(0, Vec::len);
        design += code.failure_probability(phi, len) / noisy.max(1) as f64;
        if t.flag("correct") != Some(true) {
            fail += 1;
        }
    }
    rate_row(&mut o, "ot12_noisy", noisy, fail, Some(design));

    let n = params.usize("n_noisy_commit")?;
    let eps = params.f64("epsilon")?;
    let variant = CommitVariant::CommNoisy { tolerance: phi + eps };
    let (mut fail, mut design) = (0, 0.0);
    for i in 0..noisy {
        let r = run_commitment((i % 2) as u8, &channel, &honest, n, variant, derive_seed(seed ^ 0x1c0, i as u64))?;
        let k = r.transcript.int("checked").unwrap_or(0) as f64;
        design += (-2.0 * eps * eps * k).exp().min(1.0) / noisy.max(1) as f64;
        if !r.accepted {
            fail += 1;
        }
    }
    rate_row(&mut o, "commitment_noisy", noisy, fail, Some(design));
    Ok(o)
}

fn purification(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (n_max, q_max) = (params.usize("n_max")?, params.usize("q_max")?);
    let protos: Vec<SecurityProtocol> = params.text("protocols").split(',').map(|s| protocol(s.trim())).collect::<RunResult<_>>()?;
    let mut o = Outcome::default();
    for n in 1..=n_max {
        let mut strategies = bounded(n, q_max)?;
        if n > q_max {
            strategies.push(AdversaryStrategy::full_memory(n));
        }
        for s in &strategies {
            for &proto in &protos {
                let r = purification_check(s, proto, n, derive_seed(seed, n as u64))?;
                let ok = o.check(r.distance <= 1e-9);
                o.push(json!({"protocol": proto, "strategy": r.strategy, "n": n, "bases_checked": r.bases_checked,
                    "distance": r.distance, "pass": ok}));
            }
        }
    }
    Ok(o)
}

fn binding(params: &Params, _seed: u64) -> RunResult<Outcome> {
    let (q_max, lambda) = (params.usize("q_max")?, params.f64("lambda")?);
    let mut o = Outcome::default();
    let row = |o: &mut Outcome, check: &str, n: usize, r: &bqsm::protocols::BindingReport, ok: bool| {
        let ok = o.check(ok);
        o.push(json!({"check": check, "strategy": r.strategy, "n": n, "q": r.q, "mode": r.mode, "p0": r.p0, "p1": r.p1,
            "sum": r.sum, "bound": r.bound, "opened_other": r.opened_other, "links_hold": r.holds(), "pass": ok}));
    };
    let ns = params.usize_list("n")?;
    for &n in &ns {
        let r = superposed_committer(n)?;
        row(&mut o, "superposed_sum_is_1", n, &r, (r.sum - 1.0).abs() <= 1e-9);
    }
    let cn = params.usize("control_n")?;
    let r = binding_experiment(&AdversaryStrategy::full_memory(cn), cn, BindingMode::Weak, lambda)?;
    row(&mut o, "full_memory_control", cn, &r, r.sum > 1.9);
    for &n in &ns {
        for s in bounded(n, q_max)? {
            let r = binding_experiment(&s, n, BindingMode::Weak, lambda)?;
            row(&mut o, "bounded_weak", n, &r, r.holds());
        }
    }
    let sn = params.usize("strong_n")?;
    if sn > 0 {
        if sn > MAX_STRONG_N {
            return Err(RunError::Parameter(format!("strong_n = {sn} (limit {MAX_STRONG_N})")));
        }
        for s in bounded(sn, q_max)? {
            let r = binding_experiment(&s, sn, BindingMode::Strong, lambda)?;
            row(&mut o, "bounded_strong", sn, &r, r.holds());
        }
    }
    Ok(o)
}

fn audit(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (q_max, ell, lambda) = (params.usize("q_max")?, params.usize("ell")?, params.f64("lambda")?);
    let mut o = Outcome::default();
    for (proto, key) in [(SecurityProtocol::Rabin, "rabin_n"), (SecurityProtocol::Ot12, "ot12_n")] {
        for n in params.usize_list(key)? {
            for s in bounded(n, q_max)? {
                let r = sender_security_distance(&s, proto, n, ell, lambda, derive_seed(seed, n as u64))?;
                let base = json!({"chain": "sender_security", "protocol": proto, "strategy": r.strategy, "n": n, "q": r.q});
                link_rows(&mut o, &base, &r.links);
            }
        }
    }
    let m = params.usize("rate_m")?;
    for name in params.text("alphabets").split(',') {
        let alpha = Alphabet::parse(name.trim(), 4, seed)?;
        let cfg = RateCheckConfig {
            alphabet: alpha,
            m,
            code: format!("none{m}"),
            margin: 0,
            epsilon: 0.5,
            basis_samples: 16,
            hash_samples: 16,
            seed,
        };
        let mut eves: Vec<Option<AdversaryStrategy>> = vec![None];
        eves.extend(bounded(m, q_max)?.into_iter().map(Some));
        for e in &eves {
            let r = rate_bound_check(&cfg, e.as_ref())?;
            let base = json!({"chain": "qkd_rate", "protocol": r.alphabet, "strategy": r.eavesdropper, "n": m, "q": r.q});
            link_rows(&mut o, &base, &r.links);
        }
    }
    o.set("links_checked", o.rows.len());
    Ok(o)
}

fn hmin(params: &Params, seed: u64) -> RunResult<Outcome> {
    let (n, k, trials) = (params.usize("n")?, params.usize("alphabet")?, params.usize("trials")?);
    let (lambda, h) = (params.f64("lambda")?, params.f64("h")?);
    let model = FloorHugging::new(k, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = accumulated_min_entropy(&model, n, h, lambda, trials, &mut rng)?;
    let mut o = Outcome::default();
    o.check(r.holds);
    o.push(serde_json::to_value(&r).expect("report serializes"));
    Ok(o)
}

// ---------------------------------------------------------------------------
// Single harness runs
// ---------------------------------------------------------------------------

fn qkd_run(params: &Params, seed: u64) -> RunResult<Outcome> {
    let runs = params.usize("runs")?;
    let base = QkdConfig {
        alphabet: alphabet(params, seed)?,
        p: params.f64("p")?,
        code: params.text("code").to_string(),
        q: params.usize("q")?,
        symbols: params.usize("symbols")?,
        margin: params.usize("margin")?,
        seed,
    };
    let mut o = Outcome::default();
    let (mut disagree, mut extracted, mut design) = (0usize, 0usize, 0.0);
    for i in 0..runs {
        let cfg = QkdConfig { seed: derive_seed(seed, i as u64), ..base.clone() };
        let r = run_qkd(&cfg)?;
        let s = &r.summary;
        if s.extracted {
            extracted += 1;
            if !s.keys_equal {
                disagree += 1;
            }
        }
        design += s.design_failure / runs.max(1) as f64;
        let mut row = serde_json::to_value(s).expect("summary serializes");
        row["run"] = json!(i);
        row["seed"] = json!(cfg.seed);
        row["sift_rate"] = json!(s.sifted as f64 / cfg.symbols as f64);
        row["alice_key"] = json!(r.alice_key.to_hex());
        o.push(row);
    }
    let rate = disagree as f64 / runs.max(1) as f64;
    let ok = rate <= design + 3.0 * (design * (1.0 - design) / runs.max(1) as f64).sqrt();
    o.check(ok);
    o.set("runs", runs);
    o.set("extracted", extracted);
    o.set("disagreement_rate", rate);
    o.set("design_failure", design);
    Ok(o)
}

fn rate_check(params: &Params, seed: u64) -> RunResult<Outcome> {
    let cfg = RateCheckConfig {
        alphabet: alphabet(params, seed)?,
        m: params.usize("m")?,
        code: params.text("code").to_string(),
        margin: params.usize("margin")?,
        epsilon: params.f64("epsilon")?,
        basis_samples: params.usize("basis_samples")?,
        hash_samples: params.usize("hash_samples")?,
        seed,
    };
    let eve = match params.text("strategy") {
        "none" => None,
        name => Some(strategy(name, params.usize("q")?, params.text("basis"))?),
    };
    let r = rate_bound_check(&cfg, eve.as_ref())?;
    let mut o = Outcome::default();
    let base = json!({"alphabet": r.alphabet, "eavesdropper": r.eavesdropper, "m": r.m, "q": r.q});
    link_rows(&mut o, &base, &r.links);
    o.check(r.meets_level);
    o.set("key_length", r.key_length);
    o.set("measured", r.measured);
    o.set("stderr", r.stderr);
    o.set("bound", r.bound);
    o.set("epsilon", r.epsilon);
    o.set("meets_level", r.meets_level);
    Ok(o)
}

fn sender_security(params: &Params, seed: u64) -> RunResult<Outcome> {
    let s = strategy(params.text("strategy"), params.usize("q")?, params.text("basis"))?;
    let proto = protocol(params.text("protocol"))?;
    let n = params.usize("n")?;
    let r = sender_security_distance(&s, proto, n, params.usize("ell")?, params.f64("lambda")?, seed)?;
    let mut o = Outcome::default();
    let base = json!({"protocol": proto, "strategy": r.strategy, "n": n, "q": r.q});
    link_rows(&mut o, &base, &r.links);
    o.set("measured", r.measured);
    o.set("stderr", r.stderr);
    o.set("bound", r.bound);
    o.set("hash_members", r.hash_members);
    o.set("event_probability", r.event_probability);
    o.set("pointer", r.pointer);
    Ok(o)
}

fn protocol_run(params: &Params, seed: u64) -> RunResult<Outcome> {
    let channel = ChannelModel::new(params.f64("phi")?, params.f64("eta")?)?;
    let party = match params.text("party") {
        "honest" => Participant::Honest,
        name => Participant::adversary(strategy(name, params.usize("q")?, params.text("basis"))?),
    };
    let bit = params.usize("bit")?;
    if bit > 1 {
        return Err(RunError::Parameter("bit must be 0 or 1".into()));
    }
    let bit = bit as u8;
    let n = params.usize("n")?;
    let code = match params.text("code") {
        "none" => None,
        name => Some(LinearCode::by_name(name)?),
    };
    let direction = match params.text("direction") {
        "standard" => Direction::Standard,
        "reversed" => Direction::Reversed,
        d => return Err(RunError::Parameter(format!("unknown direction {d}"))),
    };
    let tolerance = params.f64("tolerance")?;
    let variant = if tolerance > 0.0 { CommitVariant::CommNoisy { tolerance } } else { CommitVariant::Comm };
    let mut o = Outcome::default();
    for i in 0..params.usize("runs")? {
        let s = derive_seed(seed, i as u64);
        let transcript = match params.text("protocol") {
            "rabin" => run_rabin_ot(bit, &channel, &party, n, s)?,
            "bb84-rabin" => {
                let c = code.clone().ok_or_else(|| RunError::Parameter("bb84-rabin needs a code".into()))?;
                run_bb84_rabin_ot(bit, &channel, &party, n, &c, s)?
            }
            "ot12" => run_ot12(bit, &channel, &party, n, params.usize("ell")?, direction, code.as_ref(), s)?,
            "commit" => run_commitment(bit, &channel, &party, n, variant, s)?.transcript,
            other => return Err(RunError::Parameter(format!("unknown protocol {other}"))),
        };
        o.push(json!({"run": i, "seed": s, "outputs": transcript.outputs, "transcript": transcript}));
    }
    Ok(o)
}

fn witness(params: &Params, seed: u64) -> RunResult<Outcome> {
    let proto = protocol(params.text("protocol"))?;
    let (n, ell) = (params.usize("n")?, params.usize("ell")?);
    let program = match params.text("program") {
        "honest" => SenderProgram::honest(proto, n, ell, seed)?,
        "garbage" => SenderProgram::garbage(proto, n, ell, seed)?,
        "entangling" => SenderProgram::entangling(proto, n, ell, seed)?,
        other => return Err(RunError::Parameter(format!("unknown sender program {other}"))),
    };
    let r = receiver_security_witness(&program)?;
    let mut o = Outcome::default();
    o.check(r.holds());
    o.push(serde_json::to_value(&r).expect("report serializes"));
    Ok(o)
}
