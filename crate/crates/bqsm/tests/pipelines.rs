//! Cross-module runs: protocols end to end, cq-states fed to privacy
//! amplification, and the QKD pipeline.

use bqsm::cqstate::{pa_distance_best, FamilyAveraging};
use bqsm::hashing::HashFamily;
use bqsm::protocols::{
    bell_attack, rabin_cq_state, run_commitment, run_ot12, run_rabin_ot, standard_strategies, superposed_committer,
    AdversaryStrategy, ChannelModel, CommitVariant, Direction, LinearCode, Participant, ProtocolTranscript,
};
use bqsm::qkd::{noise_threshold, rate_bound_check, run_qkd, threshold_table, Alphabet, QkdConfig, RateCheckConfig};

#[test]
fn honest_protocols_are_correct_and_replayable() {
    let ch = ChannelModel::perfect();
    for seed in 0..20 {
        let t = run_rabin_ot(1, &ch, &Participant::Honest, 12, seed).unwrap();
        if t.outputs["a"] == 1 {
            assert_eq!(t.outputs["y"], 1);
        }
        let back: ProtocolTranscript = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert_eq!(run_rabin_ot(1, &ch, &Participant::Honest, 12, seed).unwrap(), t);

        for dir in [Direction::Standard, Direction::Reversed] {
            let t = run_ot12((seed % 2) as u8, &ch, &Participant::Honest, 16, 2, dir, None, seed).unwrap();
            assert_eq!(t.outputs["correct"], true, "{dir:?} seed {seed}");
        }
        for b in [0, 1] {
            let r = run_commitment(b, &ch, &Participant::Honest, 16, CommitVariant::Comm, seed).unwrap();
            assert!(r.accepted);
        }
    }
}

#[test]
fn noisy_ot_with_code_mostly_correct() {
    let ch = ChannelModel::new(0.02, 0.0).unwrap();
    let code = LinearCode::by_name("rep3").unwrap();
    let correct = (0..200)
        .filter(|&s| {
            let t = run_ot12(0, &ch, &Participant::Honest, 48, 1, Direction::Standard, Some(&code), s).unwrap();
            t.outputs["correct"] == true
        })
        .count();
    assert!(correct >= 180, "{correct}/200");
}

#[test]
fn rabin_cq_state_feeds_privacy_amplification() {
    let n = 4;
    let family = HashFamily::linear(n, 1);
    for s in standard_strategies(n, 2) {
        let rho = rabin_cq_state(&s, n).unwrap();
        assert_eq!(rho.x_card(), 1 << n);
        let rep = pa_distance_best(&rho, &family, FamilyAveraging::Exhaustive).unwrap();
        assert!(rep.slack() >= -1e-9, "{}: {:?}", s.label(), rep);
    }
    // Keeping everything: every member's output is determined, including the
    // constant zero map.
    let full = rabin_cq_state(&AdversaryStrategy::full_memory(n), n).unwrap();
    let rep = pa_distance_best(&full, &family, FamilyAveraging::Exhaustive).unwrap();
    assert!((rep.exact_distance - 0.5).abs() < 1e-9);
}

#[test]
fn attacks_and_binding_controls() {
    for n in [2, 4, 6] {
        let r = bell_attack(n).unwrap();
        assert!((r.success - 1.0).abs() < 1e-9);
    }
    let sup = superposed_committer(6).unwrap();
    assert!((sup.sum - 1.0).abs() < 1e-12);
}

#[test]
fn qkd_pipeline_yields_equal_keys_below_threshold() {
    for alphabet in [Alphabet::Bb84, Alphabet::SixState] {
        let cfg = QkdConfig {
            alphabet: alphabet.clone(),
            p: 0.002,
            code: "hamming74".into(),
            q: 4,
            symbols: 6000,
            margin: 8,
            seed: 5,
        };
        let run = run_qkd(&cfg).unwrap();
        assert!(run.summary.extracted, "{:?}", run.summary);
        assert!(run.summary.key_length > 0);
        assert_eq!(run.alice_key.len(), run.summary.key_length as usize);
        if !run.summary.decode_failed {
            assert!(run.summary.keys_equal);
            assert_eq!(run.alice_key, run.bob_key);
        }
        assert_eq!(run_qkd(&cfg).unwrap(), run);
    }
}

#[test]
fn qkd_rejects_bad_configs() {
    let base = QkdConfig {
        alphabet: Alphabet::Bb84,
        p: 0.01,
        code: "rep3".into(),
        q: 0,
        symbols: 100,
        margin: 0,
        seed: 0,
    };
    assert!(run_qkd(&QkdConfig { p: 0.5, ..base.clone() }).is_err());
    assert!(run_qkd(&QkdConfig { symbols: 0, ..base.clone() }).is_err());
    assert!(run_qkd(&QkdConfig { code: "golay".into(), ..base }).is_err());
}

#[test]
fn threshold_table_consistent_with_bisection() {
    for row in threshold_table().unwrap() {
        assert!((noise_threshold(row.h).unwrap() - row.p).abs() < 1e-12);
        assert!(row.rate.abs() < 1e-6);
    }
}

#[test]
fn rate_check_honest_and_stored_memory() {
    let cfg = RateCheckConfig {
        alphabet: Alphabet::Bb84,
        m: 6,
        code: "none6".into(),
        margin: 0,
        epsilon: 0.5,
        basis_samples: 64,
        hash_samples: 32,
        seed: 3,
    };
    let honest = rate_bound_check(&cfg, None).unwrap();
    assert!(honest.holds(), "{honest:?}");
    let s = AdversaryStrategy::from_name("store_prefix", 2, "computational").unwrap();
    let attacked = rate_bound_check(&cfg, Some(&s)).unwrap();
    assert_eq!(attacked.q, 2);
    assert!(attacked.links.iter().all(|l| l.holds()), "{:?}", attacked.links);
}
