//! Gates, circuits with mid-circuit measurement, and the reference protocols:
//! standard teleportation, superdense coding and the three-qubit `V` operator.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{ProtocolReport, ReportMetadata};
use crate::qstate::{
    self, apply_unitary_in_place, check_wires, fidelity_with_pure, tensor_product, CMatrix,
    StateVector,
};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const I1: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    /// Rotation `exp(-i θ Y / 2)`, angle in radians.
    Ry(f64),
    Cnot,
    Cz,
    Swap,
    Custom(CMatrix),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::Y | GateKind::Z | GateKind::Ry(_) => 1,
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Custom(m) => m.nrows().trailing_zeros() as usize,
        }
    }

    pub fn matrix(&self) -> CMatrix {
        let r = |v: f64| Complex64::new(v, 0.0);
        match self {
            GateKind::H => CMatrix::from_row_slice(2, 2, &[C1, C1, C1, -C1]) * r(FRAC_1_SQRT_2),
            GateKind::X => CMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0]),
            GateKind::Y => CMatrix::from_row_slice(2, 2, &[C0, -I1, I1, C0]),
            GateKind::Z => CMatrix::from_row_slice(2, 2, &[C1, C0, C0, -C1]),
            GateKind::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                CMatrix::from_row_slice(2, 2, &[r(c), r(-s), r(s), r(c)])
            }
            GateKind::Cnot => permutation(&[0, 1, 3, 2]),
            GateKind::Swap => permutation(&[0, 2, 1, 3]),
            GateKind::Cz => {
                CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C1, C1, C1, -C1]))
            }
            GateKind::Custom(m) => m.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::Ry(_) => "ry",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Custom(_) => "custom",
        }
    }
}

fn permutation(rows: &[usize]) -> CMatrix {
    let d = rows.len();
    CMatrix::from_fn(d, d, |i, j| if rows[i] == j { C1 } else { C0 })
}

/// A gate bound to the wires it acts on. For controlled gates the control comes first.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>) -> Result<Self> {
        if let GateKind::Custom(m) = &kind {
            if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() || m.nrows() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "custom gate matrix must be 2^k x 2^k, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            qstate::check_unitary(m)?;
        }
        if wires.len() != kind.arity() {
            return Err(Error::DimensionMismatch {
                expected: kind.arity(),
                found: wires.len(),
            });
        }
        for (i, w) in wires.iter().enumerate() {
            if wires[..i].contains(w) {
                return Err(Error::DuplicateWire(*w));
            }
        }
        Ok(Self { kind, wires })
    }

    pub fn h(w: usize) -> Self {
        Self {
            kind: GateKind::H,
            wires: vec![w],
        }
    }
    pub fn x(w: usize) -> Self {
        Self {
            kind: GateKind::X,
            wires: vec![w],
        }
    }
    pub fn y(w: usize) -> Self {
        Self {
            kind: GateKind::Y,
            wires: vec![w],
        }
    }
    pub fn z(w: usize) -> Self {
        Self {
            kind: GateKind::Z,
            wires: vec![w],
        }
    }
    pub fn ry(theta: f64, w: usize) -> Self {
        Self {
            kind: GateKind::Ry(theta),
            wires: vec![w],
        }
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            wires: vec![control, target],
        }
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            wires: vec![a, b],
        }
    }
    pub fn swap(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Swap,
            wires: vec![a, b],
        }
    }

    pub fn matrix(&self) -> CMatrix {
        self.kind.matrix()
    }

    /// The same gate acting on `wires[i] + offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            kind: self.kind.clone(),
            wires: self.wires.iter().map(|w| w + offset).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Gate(Gate),
    Measure {
        wire: usize,
        bit: usize,
    },
    /// Applies the gate iff classical `bit` is 1.
    Controlled {
        gate: Gate,
        bit: usize,
    },
}

/// An ordered list of steps on `n_wires` qubits and `n_bits` classical bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_wires: usize,
    n_bits: usize,
    steps: Vec<Step>,
}

/// Classical register and post-measurement state after a circuit run.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub bits: Vec<u8>,
    pub state: StateVector,
    /// Probability of the realised measurement branch.
    pub probability: f64,
}

impl Circuit {
    pub fn new(n_wires: usize, n_bits: usize) -> Self {
        Self {
            n_wires,
            n_bits,
            steps: Vec::new(),
        }
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn gate(mut self, gate: Gate) -> Self {
        self.steps.push(Step::Gate(gate));
        self
    }

    pub fn gates(mut self, gates: impl IntoIterator<Item = Gate>) -> Self {
        self.steps.extend(gates.into_iter().map(Step::Gate));
        self
    }

    pub fn measure(mut self, wire: usize, bit: usize) -> Self {
        self.steps.push(Step::Measure { wire, bit });
        self
    }

    pub fn controlled(mut self, gate: Gate, bit: usize) -> Self {
        self.steps.push(Step::Controlled { gate, bit });
        self
    }

    /// Number of gate applications (controlled gates included).
    pub fn gate_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| !matches!(s, Step::Measure { .. }))
            .count()
    }

    /// Circuit depth, counting every step as one layer on the wires it touches.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_wires];
        for step in &self.steps {
            let wires: &[usize] = match step {
                Step::Gate(g) | Step::Controlled { gate: g, .. } => &g.wires,
                Step::Measure { wire, .. } => std::slice::from_ref(wire),
            };
            let next = wires
                .iter()
                .map(|&w| level.get(w).copied().unwrap_or(0))
                .max()
                .unwrap_or(0)
                + 1;
            for &w in wires {
                if let Some(l) = level.get_mut(w) {
                    *l = next;
                }
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Checks every wire and classical-bit reference.
    pub fn validate(&self) -> Result<()> {
        let check_bit = |bit: usize| {
            if bit >= self.n_bits {
                Err(Error::BitOutOfRange {
                    bit,
                    n_bits: self.n_bits,
                })
            } else {
                Ok(())
            }
        };
        for step in &self.steps {
            match step {
                Step::Gate(g) => check_wires(&g.wires, self.n_wires)?,
                Step::Measure { wire, bit } => {
                    check_wires(&[*wire], self.n_wires)?;
                    check_bit(*bit)?;
                }
                Step::Controlled { gate, bit } => {
                    check_wires(&gate.wires, self.n_wires)?;
                    check_bit(*bit)?;
                }
            }
        }
        Ok(())
    }

    /// The unitary implemented by a measurement-free circuit.
    pub fn unitary(&self) -> Result<CMatrix> {
        self.validate()?;
        let d = 1usize << self.n_wires;
        let mut u = CMatrix::zeros(d, d);
        for col in 0..d {
            let mut state = StateVector::basis(self.n_wires, col)?;
            for step in &self.steps {
                match step {
                    Step::Gate(g) => apply_unitary_in_place(&mut state, &g.matrix(), &g.wires)?,
                    _ => {
                        return Err(Error::InvalidParameter(
                            "circuit with measurements has no unitary".into(),
                        ))
                    }
                }
            }
            u.set_column(col, &nalgebra::DVector::from_vec(state.into_amplitudes()));
        }
        Ok(u)
    }

    /// Runs the circuit from a zeroed classical register, sampling measurements.
    pub fn run(&self, input: &StateVector, rng_seed: u64) -> Result<MeasurementRecord> {
        self.run_with_register(input, &vec![0; self.n_bits], rng_seed)
    }

    /// Runs the circuit from a preset classical register.
    pub fn run_with_register(
        &self,
        input: &StateVector,
        register: &[u8],
        rng_seed: u64,
    ) -> Result<MeasurementRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        self.execute(input, register, |p_one, _| {
            u8::from(rng.random::<f64>() < p_one)
        })
    }

    /// Runs the circuit forcing the `k`-th measurement to return `outcomes[k]`.
    ///
    /// Fails if a forced branch has zero probability.
    pub fn run_postselected(
        &self,
        input: &StateVector,
        outcomes: &[u8],
    ) -> Result<MeasurementRecord> {
        let measurements = self
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Measure { .. }))
            .count();
        if outcomes.len() != measurements {
            return Err(Error::DimensionMismatch {
                expected: measurements,
                found: outcomes.len(),
            });
        }
        self.execute(input, &vec![0; self.n_bits], |_, k| outcomes[k])
    }

    fn execute(
        &self,
        input: &StateVector,
        register: &[u8],
        mut choose: impl FnMut(f64, usize) -> u8,
    ) -> Result<MeasurementRecord> {
        self.validate()?;
        if input.n_qubits() != self.n_wires {
            return Err(Error::DimensionMismatch {
                expected: self.n_wires,
                found: input.n_qubits(),
            });
        }
        if register.len() != self.n_bits {
            return Err(Error::DimensionMismatch {
                expected: self.n_bits,
                found: register.len(),
            });
        }
        let mut bits = register.to_vec();
        let mut state = input.clone();
        let mut probability = 1.0;
        let mut n_measured = 0;
        for step in &self.steps {
            match step {
                Step::Gate(g) => apply_unitary_in_place(&mut state, &g.matrix(), &g.wires)?,
                Step::Controlled { gate, bit } => {
                    if bits[*bit] == 1 {
                        apply_unitary_in_place(&mut state, &gate.matrix(), &gate.wires)?;
                    }
                }
                Step::Measure { wire, bit } => {
                    let mask = qstate::bit(self.n_wires, *wire);
                    let p_one: f64 = state
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i & mask != 0)
                        .map(|(_, a)| a.norm_sqr())
                        .sum();
                    let outcome = choose(p_one, n_measured);
                    n_measured += 1;
                    let p = if outcome == 1 { p_one } else { 1.0 - p_one };
                    if p <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "measurement branch {outcome} on wire {wire} has zero probability"
                        )));
                    }
                    probability *= p;
                    let scale = 1.0 / p.sqrt();
                    let amps = state
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .map(|(i, a)| {
                            if (i & mask != 0) == (outcome == 1) {
                                a * scale
                            } else {
                                C0
                            }
                        })
                        .collect();
                    state = StateVector::from_raw(self.n_wires, amps);
                    bits[*bit] = outcome;
                }
            }
        }
        Ok(MeasurementRecord {
            bits,
            state,
            probability,
        })
    }
}

/// Runs `circuit` on `input`; see [`Circuit::run`].
pub fn run_circuit(
    circuit: &Circuit,
    input: &StateVector,
    rng_seed: u64,
) -> Result<MeasurementRecord> {
    circuit.run(input, rng_seed)
}

/// `(|00> + |11>)/sqrt(2)`.
pub fn epr_pair() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::from_raw(2, vec![h, C0, C0, h])
}

/// `H(a)` then `CNOT(a, b)`: prepares an EPR pair on `(a, b)` from `|00>`.
pub fn epr_gates(a: usize, b: usize) -> [Gate; 2] {
    [Gate::h(a), Gate::cnot(a, b)]
}

/// The four gates of `V` on wires `(a, b, c)`: `CNOT(a,b)`, `H(a)`, `CNOT(b,c)`, `CZ(a,c)`.
pub fn v_gates(a: usize, b: usize, c: usize) -> [Gate; 4] {
    [
        Gate::cnot(a, b),
        Gate::h(a),
        Gate::cnot(b, c),
        Gate::cz(a, c),
    ]
}

/// `V` as a three-wire sub-circuit.
pub fn v_circuit() -> Circuit {
    Circuit::new(3, 0).gates(v_gates(0, 1, 2))
}

/// The 8x8 matrix of `V = CZ(0,2) · (H(0) ⊗ CNOT(1,2)) · CNOT(0,1)`.
pub fn build_v() -> CMatrix {
    v_circuit().unitary().expect("V sub-circuit is well formed")
}

/// Closed-form action of `V` on the basis state `|a b c>`.
pub fn v_closed_form(a: u8, b: u8, c: u8) -> Result<StateVector> {
    if a > 1 || b > 1 || c > 1 {
        return Err(Error::InvalidParameter(format!(
            "bits must be 0 or 1, got ({a}, {b}, {c})"
        )));
    }
    let (a, b, c) = (a as usize, b as usize, c as usize);
    let not_a = 1 - a;
    let ab = a ^ b;
    let abc = a ^ b ^ c;
    let sign = |exp: usize| if exp.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut amps = vec![C0; 8];
    amps[(not_a << 2) | (ab << 1) | abc] += Complex64::new(sign(not_a * abc) * FRAC_1_SQRT_2, 0.0);
    amps[(a << 2) | (ab << 1) | abc] += Complex64::new(sign(a * abc + a) * FRAC_1_SQRT_2, 0.0);
    Ok(StateVector::from_raw(3, amps))
}

/// Standard teleportation: `ψ` on wire 0, EPR on wires 1–2, Bell measurement,
/// classically controlled X (bit 1) then Z (bit 0) on wire 2.
pub fn standard_teleportation_circuit() -> Circuit {
    Circuit::new(3, 2)
        .gates(epr_gates(1, 2))
        .gate(Gate::cnot(0, 1))
        .gate(Gate::h(0))
        .measure(0, 0)
        .measure(1, 1)
        .controlled(Gate::x(2), 1)
        .controlled(Gate::z(2), 0)
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

fn bob_fidelity(record: &MeasurementRecord, psi: &StateVector) -> Result<f64> {
    let bob = record.state.reduced_density(&[2])?;
    fidelity_with_pure(psi, &bob)
}

/// Runs standard teleportation with sampled measurement outcomes.
pub fn standard_teleportation(psi: &StateVector, rng_seed: u64) -> Result<ProtocolReport> {
    check_single_qubit(psi)?;
    let input = tensor_product(psi, &StateVector::zero(2));
    let record = standard_teleportation_circuit().run(&input, rng_seed)?;
    let output_fidelity = bob_fidelity(&record, psi)?;
    Ok(ProtocolReport {
        protocol: "standard_teleportation".into(),
        teleported_state_label: qstate::describe(psi),
        output_fidelity,
        hawking_fidelity: None,
        hawking_entropy_nats: None,
        hawking_entropy_over_ln2: None,
        hawking_reduced_dm: None,
        epr_restored_fidelity: None,
        intermediate_wire: None,
        measurement_bits: Some(record.bits),
        metadata: ReportMetadata::new(Some(rng_seed), 1, psi),
    })
}

/// One forced measurement branch of standard teleportation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub bits: [u8; 2],
    pub probability: f64,
    pub fidelity: f64,
}

/// Enumerates all four Bell-measurement outcomes of standard teleportation.
pub fn standard_teleportation_branches(psi: &StateVector) -> Result<Vec<BranchOutcome>> {
    check_single_qubit(psi)?;
    let input = tensor_product(psi, &StateVector::zero(2));
    let circuit = standard_teleportation_circuit();
    let mut out = Vec::with_capacity(4);
    for m0 in 0..2u8 {
        for m1 in 0..2u8 {
            let record = circuit.run_postselected(&input, &[m0, m1])?;
            out.push(BranchOutcome {
                bits: [m0, m1],
                probability: record.probability,
                fidelity: bob_fidelity(&record, psi)?,
            });
        }
    }
    Ok(out)
}

/// Superdense coding: classical bits 0 (`b1`, drives Z) and 1 (`b0`, drives X)
/// are preset; bits 2 and 3 receive the decoded measurements of wires 0 and 1.
pub fn superdense_circuit() -> Circuit {
    Circuit::new(2, 4)
        .gates(epr_gates(0, 1))
        .controlled(Gate::x(0), 1)
        .controlled(Gate::z(0), 0)
        .gate(Gate::cnot(0, 1))
        .gate(Gate::h(0))
        .measure(0, 2)
        .measure(1, 3)
}

/// Sends the two classical bits `(b1, b0)` through one qubit of a shared EPR
/// pair and returns the decoded bits.
pub fn superdense_code(b1: u8, b0: u8, rng_seed: u64) -> Result<(u8, u8)> {
    if b1 > 1 || b0 > 1 {
        return Err(Error::InvalidParameter(format!(
            "message bits must be 0 or 1, got ({b1}, {b0})"
        )));
    }
    let record =
        superdense_circuit().run_with_register(&StateVector::zero(2), &[b1, b0, 0, 0], rng_seed)?;
    Ok((record.bits[2], record.bits[3]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{max_abs_diff, unitarity_deviation, LabeledState};
    use std::f64::consts::PI;

    fn assert_state_eq(a: &StateVector, b: &StateVector, tol: f64) {
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn named_gates_are_unitary() {
        for kind in [
            GateKind::H,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::Ry(0.7),
            GateKind::Cnot,
            GateKind::Cz,
            GateKind::Swap,
        ] {
            assert!(
                unitarity_deviation(&kind.matrix()) < 1e-12,
                "{}",
                kind.name()
            );
        }
    }

    #[test]
    fn ry_periodicity() {
        let id = CMatrix::identity(2, 2);
        assert!(max_abs_diff(&GateKind::Ry(0.0).matrix(), &id) < 1e-15);
        assert!(max_abs_diff(&GateKind::Ry(2.0 * PI).matrix(), &(-id)) < 1e-12);
    }

    #[test]
    fn gate_constructor_validates() {
        assert!(matches!(
            Gate::new(GateKind::Cnot, vec![0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Gate::new(GateKind::Cz, vec![1, 1]),
            Err(Error::DuplicateWire(1))
        ));
        let bad = CMatrix::from_element(2, 2, C1);
        assert!(matches!(
            Gate::new(GateKind::Custom(bad), vec![0]),
            Err(Error::NotUnitary { .. })
        ));
        assert!(Gate::new(GateKind::Custom(build_v()), vec![0, 1, 2]).is_ok());
    }

    #[test]
    fn x_then_measure_is_deterministic() {
        let c = Circuit::new(1, 1).gate(Gate::x(0)).measure(0, 0);
        for seed in 0..10 {
            let rec = c.run(&StateVector::zero(1), seed).unwrap();
            assert_eq!(rec.bits, vec![1]);
            assert_eq!(rec.state, StateVector::basis(1, 1).unwrap());
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let psi = StateVector::from_bloch(1.1, 0.4);
        let rec = Circuit::new(1, 0).run(&psi, 3).unwrap();
        assert_eq!(rec.state, psi);
        assert!(rec.bits.is_empty());
    }

    #[test]
    fn hadamard_measurement_is_fair() {
        let c = Circuit::new(1, 1).gate(Gate::h(0)).measure(0, 0);
        let shots = 8192u64;
        let ones: u64 = (0..shots)
            .map(|s| c.run(&StateVector::zero(1), s).unwrap().bits[0] as u64)
            .sum();
        let freq = ones as f64 / shots as f64;
        let sigma = 0.5 / (shots as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn same_seed_same_outcome() {
        let c = Circuit::new(2, 2)
            .gate(Gate::h(0))
            .gate(Gate::h(1))
            .measure(0, 0)
            .measure(1, 1);
        let a = c.run(&StateVector::zero(2), 42).unwrap();
        let b = c.run(&StateVector::zero(2), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_circuits_rejected() {
        let c = Circuit::new(2, 1).gate(Gate::h(2));
        assert!(matches!(
            c.run(&StateVector::zero(2), 0),
            Err(Error::WireOutOfRange { .. })
        ));
        let c = Circuit::new(2, 1).measure(0, 1);
        assert!(matches!(
            c.run(&StateVector::zero(2), 0),
            Err(Error::BitOutOfRange { .. })
        ));
        let c = Circuit::new(2, 1).controlled(Gate::x(0), 3);
        assert!(matches!(
            c.run(&StateVector::zero(2), 0),
            Err(Error::BitOutOfRange { .. })
        ));
        let c = Circuit::new(2, 0);
        assert!(matches!(
            c.run(&StateVector::zero(3), 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn postselection_rejects_impossible_branch() {
        let c = Circuit::new(1, 1).measure(0, 0);
        assert!(c.run_postselected(&StateVector::zero(1), &[1]).is_err());
        let rec = c.run_postselected(&StateVector::zero(1), &[0]).unwrap();
        assert!((rec.probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn epr_pair_matches_circuit() {
        let h = FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, h];
        for (a, e) in epr_pair().amplitudes().iter().zip(expected) {
            assert!((a - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let built = Circuit::new(2, 0)
            .gates(epr_gates(0, 1))
            .run(&StateVector::zero(2), 0)
            .unwrap()
            .state;
        assert!((built.overlap(&epr_pair()).unwrap() - 1.0).abs() < 1e-12);
        for keep in [0, 1] {
            let red = epr_pair().reduced_density(&[keep]).unwrap();
            assert!(red.max_abs_diff(&qstate::DensityMatrix::maximally_mixed(1)) < 1e-15);
        }
    }

    #[test]
    fn v_matrix_examples() {
        let v = build_v();
        assert!(unitarity_deviation(&v) < 1e-12);
        let h = FRAC_1_SQRT_2;
        for z in v.iter() {
            assert!(z.im == 0.0);
            assert!([0.0, h, -h].iter().any(|e| (z.re - e).abs() < 1e-15));
        }
        // V|000> = (|000> + |100>)/sqrt2
        assert!((v[(0, 0)].re - h).abs() < 1e-15 && (v[(4, 0)].re - h).abs() < 1e-15);
        // V|110> = (|000> - |100>)/sqrt2
        assert!((v[(0, 6)].re - h).abs() < 1e-15 && (v[(4, 6)].re + h).abs() < 1e-15);
        assert_eq!(v_circuit().gate_count(), 4);
        assert_eq!(v_circuit().depth(), 3);
    }

    #[test]
    fn closed_form_examples() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let s = v_closed_form(0, 0, 0).unwrap();
        let mut e = vec![C0; 8];
        e[0] = h;
        e[4] = h;
        assert_state_eq(&s, &StateVector::new(e).unwrap(), 1e-15);

        let s = v_closed_form(1, 0, 0).unwrap();
        let mut e = vec![C0; 8];
        e[0b011] = h;
        e[0b111] = h;
        assert_state_eq(&s, &StateVector::new(e).unwrap(), 1e-15);
        assert!(v_closed_form(2, 0, 0).is_err());
    }

    #[test]
    fn closed_form_matches_gate_product() {
        let v = build_v();
        for idx in 0..8usize {
            let (a, b, c) = ((idx >> 2) as u8 & 1, (idx >> 1) as u8 & 1, idx as u8 & 1);
            let closed = v_closed_form(a, b, c).unwrap();
            for row in 0..8 {
                assert!((v[(row, idx)] - closed.amplitudes()[row]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn standard_teleportation_all_branches() {
        for ls in LabeledState::six() {
            let branches = standard_teleportation_branches(&ls.state).unwrap();
            assert_eq!(branches.len(), 4);
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for b in branches {
                assert!((b.probability - 0.25).abs() < 1e-12);
                assert!(
                    (b.fidelity - 1.0).abs() < 1e-10,
                    "{} {:?}",
                    ls.label,
                    b.bits
                );
            }
            let rep = standard_teleportation(&ls.state, 11).unwrap();
            assert!((rep.output_fidelity - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn superdense_all_messages() {
        for b1 in 0..2 {
            for b0 in 0..2 {
                for seed in 0..4 {
                    assert_eq!(superdense_code(b1, b0, seed).unwrap(), (b1, b0));
                }
            }
        }
        assert!(superdense_code(2, 0, 0).is_err());
    }
}
