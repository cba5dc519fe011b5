//! Protocol machines for Rabin OT, 1-2 OT and bit commitment, with honest
//! parties, memory-bounded adversaries, the noisy channel model and the
//! security-experiment drivers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{input_err, Result};

mod adversary;
pub mod code;
mod runs;
mod security;

pub use adversary::{apply_gate, product_state, AdversaryStrategy, Gate, Instrument, MAX_EXACT_N};
pub use code::LinearCode;
pub use runs::{
    run_bb84_rabin_ot, run_commitment, run_ot12, run_rabin_ot, CommitmentRun, CommitVariant, Direction, MAX_HONEST_N,
};
pub use security::{
    bell_attack, binding_experiment, breitbart_attack, purification_check, rabin_cq_state, receiver_security_witness,
    sender_security_distance, standard_strategies, superposed_committer, Announcement, BellAttackReport, BindingMode,
    BindingReport, BreitbartReport, ChainLink, PurificationReport, SecurityProtocol, SenderBranch, SenderProgram,
    SenderSecurityReport, WitnessReport, MAX_OT12_SENDER_N, MAX_PROGRAM_QUBITS, MAX_PURIFIED_N, MAX_SENDER_N,
    MAX_STRONG_N,
};

/// The noisy channel: bit flips with probability `phi`, and with
/// probability `eta` a pulse carries more than one copy of the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    phi: f64,
    eta: f64,
}

impl ChannelModel {
    pub fn new(phi: f64, eta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&phi) {
            return input_err(format!("phi = {phi} must lie in [0, 1/2)"));
        }
        if !(eta >= 0.0 && eta < 1.0 - phi) {
            return input_err(format!("eta = {eta} must lie in [0, 1 - phi)"));
        }
        Ok(Self { phi, eta })
    }

    pub fn perfect() -> Self {
        Self { phi: 0.0, eta: 0.0 }
    }

    /// Folds detector imperfections into the two effective parameters:
    /// `phi = phi_x + phi_dc / 2` and `eta = eta_mq / (1 - eta_ab)`, where
    /// `phi_dc` is the dark-count rate, `eta_mq` the multi-photon rate and
    /// `eta_ab` the empty-pulse rate.
    pub fn from_imperfections(phi_x: f64, phi_dc: f64, eta_mq: f64, eta_ab: f64) -> Result<Self> {
        for (name, v) in [("phi_x", phi_x), ("phi_dc", phi_dc), ("eta_mq", eta_mq), ("eta_ab", eta_ab)] {
            if !(0.0..=1.0).contains(&v) {
                return input_err(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if eta_ab >= 1.0 {
            return input_err("every pulse empty");
        }
        Self::new(phi_x + phi_dc / 2.0, eta_mq / (1.0 - eta_ab))
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Who plays the receiving (or committing) side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "party", rename_all = "snake_case")]
pub enum Participant {
    Honest,
    Adversary { strategy: AdversaryStrategy },
}

impl Participant {
    pub fn adversary(strategy: AdversaryStrategy) -> Self {
        Participant::Adversary { strategy }
    }

    pub fn label(&self) -> String {
        match self {
            Participant::Honest => "honest".into(),
            Participant::Adversary { strategy } => strategy.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub from: String,
    pub label: String,
    pub value: Value,
}

/// What a memory-bounded party holds once the bound has been applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRecord {
    pub strategy: String,
    /// Classical outcome of the measured qubits, as an integer.
    pub y: u64,
    pub memory_qubits: usize,
    /// Normalized memory state as (re, im) pairs.
    pub memory: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: String,
    pub seed: u64,
    pub strategy: String,
    pub n: usize,
    pub messages: Vec<Message>,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub adversary: Option<AdversaryRecord>,
}

impl ProtocolTranscript {
    pub(crate) fn new(protocol: &str, seed: u64, strategy: String, n: usize) -> Self {
        Self {
            protocol: protocol.into(),
            seed,
            strategy,
            n,
            messages: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            adversary: None,
        }
    }

    pub(crate) fn send(&mut self, from: &str, label: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("transcript values serialize");
        self.messages.push(Message { from: from.into(), label: label.into(), value });
    }

    pub(crate) fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(key.into(), serde_json::to_value(value).expect("transcript values serialize"));
    }

    pub(crate) fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(key.into(), serde_json::to_value(value).expect("transcript values serialize"));
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        self.outputs.get(key).or_else(|| self.inputs.get(key))
    }

    /// An integer-valued input or output.
    pub fn int(&self, key: &str) -> Option<u64> {
        self.lookup(key)?.as_u64()
    }

    pub fn bit(&self, key: &str) -> Option<u8> {
        self.int(key).map(|v| v as u8)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.lookup(key)?.as_bool()
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        self.lookup(key)?.as_f64()
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.lookup(key)?.as_str()
    }

    pub fn message(&self, label: &str) -> Option<&Message> {
        self.messages.iter().find(|m| m.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_validation_and_mapping() {
        assert!(ChannelModel::new(0.5, 0.0).is_err());
        assert!(ChannelModel::new(0.1, 0.9).is_err());
        assert!(ChannelModel::new(0.1, 0.89).is_ok());
        let c = ChannelModel::from_imperfections(0.02, 0.04, 0.05, 0.5).unwrap();
        assert!((c.phi() - 0.04).abs() < 1e-15);
        assert!((c.eta() - 0.1).abs() < 1e-15);
        assert!(ChannelModel::from_imperfections(0.0, 0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn participant_serde() {
        let p = Participant::adversary(AdversaryStrategy::StorePrefix { q: 2 });
        let s = serde_json::to_string(&p).unwrap();
        let back: Participant = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
