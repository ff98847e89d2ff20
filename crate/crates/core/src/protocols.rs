//! Measurement-free teleportation through shared EPR pairs, entanglement
//! recycling, thermofield double states and the N-pair generalization.
//!
//! Register layout for `N` pairs: wire 0 holds the teleported qubit and
//! wires `1..=2N` hold the pairs `(i, 2N + 1 - i)`, nested around the middle.
//! The sender acts on wires `0..=N`, wire `N` is handed over, and the receiver
//! acts on wires `N..=2N`. For `N = 2` this is the five-wire circuit with
//! pairs `(1, 4)` and `(2, 3)` and the exchanged qubit on wire 2.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::circuits::{epr_gates, v_gates, Circuit};
use crate::error::{Error, Result};
use crate::qstate::{
    self, apply_unitary_in_place, check_unitary, fidelity, fidelity_with_pure, tensor_product,
    von_neumann_entropy, CMatrix, DensityMatrix, StateVector,
};

/// Threshold on the largest eigenvalue of a recycled resource below which
/// recycling is aborted.
pub const RESOURCE_PURITY_TOL: f64 = 1e-8;

/// Run metadata echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: Option<u64>,
    pub n_pairs: usize,
    /// Input amplitudes as `[re, im]` pairs.
    pub input_state: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl ReportMetadata {
    pub fn new(seed: Option<u64>, n_pairs: usize, psi: &StateVector) -> Self {
        Self {
            seed,
            n_pairs,
            input_state: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
            generated_at_unix: None,
        }
    }
}

/// Outcome of one protocol execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub teleported_state_label: String,
    /// Fidelity of the receiver's output qubit with the teleported state.
    pub output_fidelity: f64,
    /// Fidelity of the exchanged qubit with `I/2`.
    pub hawking_fidelity: Option<f64>,
    pub hawking_entropy_nats: Option<f64>,
    pub hawking_entropy_over_ln2: Option<f64>,
    pub hawking_reduced_dm: Option<DensityMatrix>,
    /// Fidelity of the returned pair block with the expected EPR pairs.
    pub epr_restored_fidelity: Option<f64>,
    /// Register wire carrying the exchanged qubit.
    pub intermediate_wire: Option<usize>,
    pub measurement_bits: Option<Vec<u8>>,
    pub metadata: ReportMetadata,
}

/// `N` EPR pairs on `2N` wires, pair `j` on wires `(j, 2N - 1 - j)`.
pub fn nested_epr_block(n_pairs: usize) -> StateVector {
    let n = 2 * n_pairs;
    let circuit = Circuit::new(n, 0).gates((0..n_pairs).flat_map(|j| epr_gates(j, n - 1 - j)));
    circuit
        .run(&StateVector::zero(n), 0)
        .expect("EPR preparation is well formed")
        .state
}

/// The nested block with wires 0 and 1 exchanged: the layout `V` returns.
pub fn swapped_nested_epr_block(n_pairs: usize) -> StateVector {
    let block = nested_epr_block(n_pairs);
    if n_pairs < 1 {
        return block;
    }
    let mut order: Vec<usize> = (0..2 * n_pairs).collect();
    order.swap(0, 1);
    block.permute_wires(&order).expect("valid permutation")
}

/// Which arrangement of the returned EPR pairs counts as a restored resource.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalPairing {
    /// Pairs `(j, 2N - 1 - j)` on wires `0..2N`.
    Nested,
    /// The nested layout after exchanging wires 0 and 1.
    SwappedNested,
    /// Either of the above; the better overlap counts.
    #[default]
    Either,
}

impl FinalPairing {
    pub fn targets(self, n_pairs: usize) -> Vec<StateVector> {
        match self {
            FinalPairing::Nested => vec![nested_epr_block(n_pairs)],
            FinalPairing::SwappedNested => vec![swapped_nested_epr_block(n_pairs)],
            FinalPairing::Either => {
                vec![nested_epr_block(n_pairs), swapped_nested_epr_block(n_pairs)]
            }
        }
    }
}

/// States captured while running the protocol.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub n_pairs: usize,
    /// Register state just before the qubit exchange.
    pub pre_exchange: StateVector,
    pub final_state: StateVector,
}

impl ProtocolRun {
    pub fn intermediate_wire(&self) -> usize {
        self.n_pairs
    }

    pub fn output_wire(&self) -> usize {
        2 * self.n_pairs
    }

    pub fn hawking_dm(&self) -> Result<DensityMatrix> {
        self.pre_exchange
            .reduced_density(&[self.intermediate_wire()])
    }

    pub fn output_dm(&self) -> Result<DensityMatrix> {
        self.final_state.reduced_density(&[self.output_wire()])
    }

    /// Reduced state of wires `0..2N`, which should again hold the pairs.
    pub fn pair_block_dm(&self) -> Result<DensityMatrix> {
        let keep: Vec<usize> = (0..2 * self.n_pairs).collect();
        self.final_state.reduced_density(&keep)
    }

    fn report(
        &self,
        protocol: &str,
        psi: &StateVector,
        epr_targets: &[StateVector],
    ) -> Result<ProtocolReport> {
        let hawking = self.hawking_dm()?;
        let entropy = von_neumann_entropy(&hawking);
        let hawking_fidelity = fidelity(&hawking, &DensityMatrix::maximally_mixed(1))?;
        let output_fidelity = fidelity_with_pure(psi, &self.output_dm()?)?;
        let block = self.pair_block_dm()?;
        let mut epr_restored = 0.0f64;
        for t in epr_targets {
            epr_restored = epr_restored.max(fidelity_with_pure(t, &block)?);
        }
        Ok(ProtocolReport {
            protocol: protocol.into(),
            teleported_state_label: qstate::describe(psi),
            output_fidelity,
            hawking_fidelity: Some(hawking_fidelity),
            hawking_entropy_nats: Some(entropy),
            hawking_entropy_over_ln2: Some(entropy / LN_2),
            hawking_reduced_dm: Some(hawking),
            epr_restored_fidelity: Some(epr_restored),
            intermediate_wire: Some(self.intermediate_wire()),
            measurement_bits: None,
            metadata: ReportMetadata::new(None, self.n_pairs, psi),
        })
    }
}

fn check_single_qubit(psi: &StateVector) -> Result<()> {
    if psi.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: psi.n_qubits(),
        });
    }
    Ok(())
}

/// Sender and receiver halves of the five-wire circuit, as gate sequences.
pub fn measurement_free_circuits() -> (Circuit, Circuit, Circuit) {
    let prepare = Circuit::new(5, 0)
        .gates(epr_gates(1, 4))
        .gates(epr_gates(2, 3));
    let sender = Circuit::new(5, 0).gates(v_gates(0, 1, 2));
    let receiver = Circuit::new(5, 0).gates(v_gates(2, 3, 4));
    (prepare, sender, receiver)
}

/// Five-wire state after the sender's `V`, before the exchange.
pub fn pre_exchange_state(psi: &StateVector) -> Result<StateVector> {
    check_single_qubit(psi)?;
    let (prepare, sender, _) = measurement_free_circuits();
    let input = tensor_product(psi, &StateVector::zero(4));
    let prepared = prepare.run(&input, 0)?.state;
    Ok(sender.run(&prepared, 0)?.state)
}

fn run_from_resource(psi: &StateVector, resource: &StateVector) -> Result<ProtocolRun> {
    let (_, sender, receiver) = measurement_free_circuits();
    let input = tensor_product(psi, resource);
    let pre_exchange = sender.run(&input, 0)?.state;
    let final_state = receiver.run(&pre_exchange, 0)?.state;
    Ok(ProtocolRun {
        n_pairs: 2,
        pre_exchange,
        final_state,
    })
}

/// Runs the five-wire measurement-free protocol gate by gate.
pub fn measurement_free_run(psi: &StateVector) -> Result<ProtocolRun> {
    let pre_exchange = pre_exchange_state(psi)?;
    let (_, _, receiver) = measurement_free_circuits();
    let final_state = receiver.run(&pre_exchange, 0)?.state;
    Ok(ProtocolRun {
        n_pairs: 2,
        pre_exchange,
        final_state,
    })
}

/// Teleports `psi` without measurement and reports fidelities and the
/// exchanged qubit's entropy.
pub fn measurement_free_teleport(psi: &StateVector) -> Result<ProtocolReport> {
    let run = measurement_free_run(psi)?;
    run.report("measurement_free", psi, &[swapped_nested_epr_block(2)])
}

/// Reuses one set of EPR pairs across consecutive teleportations.
#[derive(Clone, Debug)]
pub struct RecyclingSession {
    resource: StateVector,
    rounds: usize,
}

impl Default for RecyclingSession {
    fn default() -> Self {
        Self::new()
    }
}

impl RecyclingSession {
    pub fn new() -> Self {
        Self {
            resource: nested_epr_block(2),
            rounds: 0,
        }
    }

    /// Current four-qubit entanglement resource (wires 1..=4 of the next round).
    pub fn resource(&self) -> &StateVector {
        &self.resource
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Teleports `psi`, then extracts the returned pairs as the next resource.
    pub fn teleport(&mut self, psi: &StateVector) -> Result<ProtocolReport> {
        check_single_qubit(psi)?;
        let run = run_from_resource(psi, &self.resource)?;
        let mut report = run.report(
            "measurement_free_recycled",
            psi,
            &[swapped_nested_epr_block(2)],
        )?;
        report.metadata.seed = None;

        let block = run.pair_block_dm()?;
        let dec = block.decompose();
        let largest = dec.max_eigenvalue();
        if largest < 1.0 - RESOURCE_PURITY_TOL {
            return Err(Error::ResourceDamaged {
                largest_eigenvalue: largest,
            });
        }
        let top = dec.eigenvectors.column(dec.eigenvalues.len() - 1);
        let returned = StateVector::normalized(top.iter().copied().collect())?;
        // undo the wire 0 <-> 1 exchange by relabelling
        self.resource = returned.permute_wires(&[1, 0, 2, 3])?;
        self.rounds += 1;
        Ok(report)
    }
}

/// Teleports each state in turn through the same, recycled EPR pairs.
pub fn recycle_teleport(states: &[StateVector]) -> Result<Vec<ProtocolReport>> {
    if states.is_empty() {
        return Err(Error::InvalidParameter(
            "recycling needs at least one state".into(),
        ));
    }
    let mut session = RecyclingSession::new();
    states.iter().map(|psi| session.teleport(psi)).collect()
}

/// Inverse temperature: finite and non-negative, or the zero-temperature limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    /// Parses a non-negative number or `inf`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") {
            return Ok(Beta::Infinite);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("beta '{s}' is not a number or 'inf'")))?;
        Beta::finite(v)
    }

    pub fn finite(v: f64) -> Result<Self> {
        if v.is_infinite() && v > 0.0 {
            return Ok(Beta::Infinite);
        }
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {v}"
            )));
        }
        Ok(Beta::Finite(v))
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(v) => s.serialize_f64(*v),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Beta::finite(v),
            Raw::Text(t) => Beta::parse(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Energy levels `E_n` of one side (one per basis state) and the inverse temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfdSpec {
    energies: Vec<f64>,
    beta: Beta,
}

impl TfdSpec {
    pub fn new(energies: Vec<f64>, beta: Beta) -> Result<Self> {
        let len = energies.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "need 2^N energies with N >= 1, got {len}"
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("energies must be finite".into()));
        }
        if let Beta::Finite(b) = beta {
            Beta::finite(b)?;
        }
        Ok(Self { energies, beta })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    /// Qubits per side.
    pub fn side_qubits(&self) -> usize {
        self.energies.len().trailing_zeros() as usize
    }

    /// Squared, normalized amplitudes `e^{-2βE_n} / Z`: the Schmidt spectrum of the state.
    pub fn boltzmann_weights(&self) -> Result<Vec<f64>> {
        let e_min = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        match self.beta {
            Beta::Finite(beta) => {
                let w: Vec<f64> = self
                    .energies
                    .iter()
                    .map(|e| (-2.0 * beta * (e - e_min)).exp())
                    .collect();
                let z: f64 = w.iter().sum();
                Ok(w.into_iter().map(|x| x / z).collect())
            }
            Beta::Infinite => {
                let ground: Vec<usize> = (0..self.energies.len())
                    .filter(|&n| self.energies[n] == e_min)
                    .collect();
                if ground.len() != 1 {
                    return Err(Error::DegenerateGroundState);
                }
                let mut w = vec![0.0; self.energies.len()];
                w[ground[0]] = 1.0;
                Ok(w)
            }
        }
    }
}

/// `Z^{-1/2} Σ_n e^{-βE_n} |n>_A |n>_B` with `Z = Σ_n e^{-2βE_n}`.
///
/// The weight carries `e^{-βE_n}` rather than the `e^{-βE_n/2}` found in
/// some conventions; the two coincide at `β = 0`.
pub fn tfd_state(spec: &TfdSpec) -> Result<StateVector> {
    let weights = spec.boltzmann_weights()?;
    let n = spec.side_qubits();
    let side = 1usize << n;
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); side * side];
    for (k, p) in weights.iter().enumerate() {
        amps[k * side + k] = num_complex::Complex64::new(p.sqrt(), 0.0);
    }
    StateVector::normalized(amps)
}

/// Entropy (nats) of the first `side_qubits` wires of a two-sided state.
pub fn black_hole_side_entropy(tfd: &StateVector, side_qubits: usize) -> Result<f64> {
    if tfd.n_qubits() != 2 * side_qubits || side_qubits == 0 {
        return Err(Error::DimensionMismatch {
            expected: 2 * side_qubits,
            found: tfd.n_qubits(),
        });
    }
    let keep: Vec<usize> = (0..side_qubits).collect();
    Ok(von_neumann_entropy(&tfd.reduced_density(&keep)?))
}

/// Applies a pre-validated `(N+1)`-qubit unitary twice: sender window `0..=N`
/// and receiver window `N..=2N`.
pub(crate) fn general_run_unchecked(
    psi: &StateVector,
    v: &CMatrix,
    n_pairs: usize,
) -> Result<ProtocolRun> {
    let mut state = tensor_product(psi, &nested_epr_block(n_pairs));
    let sender: Vec<usize> = (0..=n_pairs).collect();
    let receiver: Vec<usize> = (n_pairs..=2 * n_pairs).collect();
    apply_unitary_in_place(&mut state, v, &sender)?;
    let pre_exchange = state.clone();
    apply_unitary_in_place(&mut state, v, &receiver)?;
    Ok(ProtocolRun {
        n_pairs,
        pre_exchange,
        final_state: state,
    })
}

fn check_general_inputs(psi: &StateVector, v: &CMatrix, n_pairs: usize) -> Result<()> {
    check_single_qubit(psi)?;
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("need at least one EPR pair".into()));
    }
    let d = 1usize << (n_pairs + 1);
    if v.nrows() != d || v.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.nrows(),
        });
    }
    check_unitary(v)
}

/// Runs the `N`-pair protocol with an arbitrary `(N+1)`-qubit unitary.
pub fn general_run(psi: &StateVector, v: &CMatrix, n_pairs: usize) -> Result<ProtocolRun> {
    check_general_inputs(psi, v, n_pairs)?;
    general_run_unchecked(psi, v, n_pairs)
}

/// Report for the `N`-pair protocol; the pair block is scored against `pairing`.
pub fn general_protocol_with_pairing(
    psi: &StateVector,
    v: &CMatrix,
    n_pairs: usize,
    pairing: FinalPairing,
) -> Result<ProtocolReport> {
    let run = general_run(psi, v, n_pairs)?;
    run.report("general", psi, &pairing.targets(n_pairs))
}

/// [`general_protocol_with_pairing`] accepting either nested layout.
pub fn general_protocol(psi: &StateVector, v: &CMatrix, n_pairs: usize) -> Result<ProtocolReport> {
    general_protocol_with_pairing(psi, v, n_pairs, FinalPairing::Either)
}
