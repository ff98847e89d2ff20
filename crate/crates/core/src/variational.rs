//! RY-ansatz search for an `(N+1)`-qubit operator that makes the `N`-pair
//! protocol teleport while keeping the exchanged qubit maximally mixed.

mod cobyla;

use std::f64::consts::{LN_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{build_v, Circuit, Gate};
use crate::error::{Error, Result};
use crate::noise::MeanSem;
use crate::protocols::{general_run_unchecked, FinalPairing};
use crate::qstate::{check_unitary, von_neumann_entropy, CMatrix, LabeledState, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    n_qubits: usize,
    reps: usize,
    thetas: Vec<f64>,
}

impl AnsatzSpec {
    pub fn param_count(n_qubits: usize, reps: usize) -> usize {
        n_qubits * (reps + 1)
    }

    pub fn new(n_qubits: usize, reps: usize, thetas: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParameter(
                "ansatz needs at least one qubit".into(),
            ));
        }
        let expected = Self::param_count(n_qubits, reps);
        if thetas.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: thetas.len(),
            });
        }
        Ok(Self {
            n_qubits,
            reps,
            thetas,
        })
    }

    /// Infers the repetition count from the angle count.
    pub fn from_thetas(n_qubits: usize, thetas: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || thetas.len() < n_qubits || !thetas.len().is_multiple_of(n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "{} angles do not fit an ansatz on {} qubits",
                thetas.len(),
                n_qubits
            )));
        }
        let reps = thetas.len() / n_qubits - 1;
        Self::new(n_qubits, reps, thetas)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }
}

/// RY layer, then per repetition a CNOT staircase where each wire gets its next
/// rotation right after the CNOT that makes it a control.
pub fn ry_ansatz_circuit(spec: &AnsatzSpec) -> Circuit {
    let q = spec.n_qubits;
    let th = &spec.thetas;
    let mut c = Circuit::new(q, 0).gates((0..q).map(|w| Gate::ry(th[w], w)));
    for r in 1..=spec.reps {
        let layer = &th[r * q..(r + 1) * q];
        for (w, &t) in layer.iter().enumerate().take(q - 1) {
            c = c.gate(Gate::cnot(w, w + 1)).gate(Gate::ry(t, w));
        }
        c = c.gate(Gate::ry(layer[q - 1], q - 1));
    }
    c
}

pub fn ry_ansatz(spec: &AnsatzSpec) -> Result<CMatrix> {
    ry_ansatz_circuit(spec).unitary()
}

/// Per-state pieces of the cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub cost: f64,
    pub fidelities: Vec<f64>,
    pub entropies_over_ln2: Vec<f64>,
}

impl CostBreakdown {
    pub fn mean_fidelity(&self) -> f64 {
        MeanSem::of(&self.fidelities).mean
    }

    pub fn entropy_over_ln2(&self) -> MeanSem {
        MeanSem::of(&self.entropies_over_ln2)
    }
}

/// `C = 1 - (1/2n) Σ_k (F_k + S_k / ln 2)` for an explicit operator.
pub fn evaluate_unitary(
    v: &CMatrix,
    n_pairs: usize,
    states: &[StateVector],
    pairing: FinalPairing,
) -> Result<CostBreakdown> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("state set is empty".into()));
    }
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
    check_unitary(v)?;
    let blocks = pairing.targets(n_pairs);
    let mut fidelities = Vec::with_capacity(states.len());
    let mut entropies = Vec::with_capacity(states.len());
    for psi in states {
        if psi.n_qubits() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: psi.n_qubits(),
            });
        }
        let run = general_run_unchecked(psi, v, n_pairs)?;
        let f = blocks
            .iter()
            .map(|b| crate::qstate::tensor_product(b, psi).overlap(&run.final_state))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        fidelities.push(f.min(1.0));
        let hawk = run.pre_exchange.reduced_density(&[n_pairs])?;
        entropies.push(von_neumann_entropy(&hawk) / LN_2);
    }
    let n = states.len() as f64;
    let total: f64 = fidelities.iter().zip(&entropies).map(|(f, s)| f + s).sum();
    Ok(CostBreakdown {
        cost: (1.0 - 0.5 * total / n).max(0.0),
        fidelities,
        entropies_over_ln2: entropies,
    })
}

pub fn evaluate(
    thetas: &[f64],
    n_pairs: usize,
    states: &[StateVector],
    pairing: FinalPairing,
) -> Result<CostBreakdown> {
    let spec = AnsatzSpec::from_thetas(n_pairs + 1, thetas.to_vec())?;
    evaluate_unitary(&ry_ansatz(&spec)?, n_pairs, states, pairing)
}

/// Cost of the ansatz with angles `thetas`, accepting either nested pair layout.
pub fn cost(thetas: &[f64], n_pairs: usize, states: &[StateVector]) -> Result<f64> {
    cost_with_pairing(thetas, n_pairs, states, FinalPairing::Either)
}

pub fn cost_with_pairing(
    thetas: &[f64],
    n_pairs: usize,
    states: &[StateVector],
    pairing: FinalPairing,
) -> Result<f64> {
    Ok(evaluate(thetas, n_pairs, states, pairing)?.cost)
}

pub fn six_states() -> Vec<StateVector> {
    LabeledState::six().into_iter().map(|l| l.state).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Cost evaluations per restart.
    pub max_iters: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub cost_tol: f64,
    pub rho_beg: f64,
    pub rho_end: f64,
    #[serde(default)]
    pub pairing: FinalPairing,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            restarts: 5,
            rng_seed: 0,
            cost_tol: 1e-8,
            rho_beg: 1.0,
            rho_end: 1e-4,
            pairing: FinalPairing::Either,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and restarts must be >= 1".into(),
            ));
        }
        if !(self.rho_beg > 0.0 && self.rho_end > 0.0 && self.rho_end <= self.rho_beg) {
            return Err(Error::InvalidParameter(
                "trust radii must satisfy 0 < rho_end <= rho_beg".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub initial_thetas: Vec<f64>,
    /// Cost of every evaluation, in order.
    pub costs: Vec<f64>,
    pub best_cost: f64,
    pub best_thetas: Vec<f64>,
    pub final_fidelity: f64,
    pub final_entropy_over_ln2: MeanSem,
}

impl RestartTrace {
    pub fn running_best(&self) -> Vec<f64> {
        running_min(&self.costs)
    }
}

pub fn running_min(costs: &[f64]) -> Vec<f64> {
    costs
        .iter()
        .scan(f64::INFINITY, |best, &c| {
            *best = best.min(c);
            Some(*best)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub n_pairs: usize,
    pub reps: usize,
    pub config: OptimizerConfig,
    pub runs: Vec<RestartTrace>,
    pub best_restart: usize,
    pub best_cost: f64,
    pub best_thetas: Vec<f64>,
}

impl OptimizationTrace {
    pub fn best(&self) -> &RestartTrace {
        &self.runs[self.best_restart]
    }

    pub fn median_final_cost(&self) -> f64 {
        let mut c: Vec<f64> = self.runs.iter().map(|r| r.best_cost).collect();
        c.sort_by(f64::total_cmp);
        let m = c.len() / 2;
        if c.len() % 2 == 1 {
            c[m]
        } else {
            0.5 * (c[m - 1] + c[m])
        }
    }
}

fn initial_thetas(cfg: &OptimizerConfig, restart: usize, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(restart as u64);
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Multi-start COBYLA over the RY ansatz on `n_pairs + 1` qubits.
pub fn optimize(n_pairs: usize, reps: usize, cfg: &OptimizerConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("need at least one EPR pair".into()));
    }
    let states = six_states();
    let q = n_pairs + 1;
    let count = AnsatzSpec::param_count(q, reps);
    let mut runs = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let x0 = initial_thetas(cfg, restart, count);
        let out = cobyla::minimize(
            |x| cost_with_pairing(x, n_pairs, &states, cfg.pairing),
            &x0,
            cobyla::Params {
                rho_beg: cfg.rho_beg,
                rho_end: cfg.rho_end,
                max_evals: cfg.max_iters,
                f_target: cfg.cost_tol,
            },
        )?;
        let fin = evaluate(&out.x, n_pairs, &states, cfg.pairing)?;
        runs.push(RestartTrace {
            restart,
            initial_thetas: x0,
            costs: out.history,
            best_cost: out.f,
            best_thetas: out.x,
            final_fidelity: fin.mean_fidelity(),
            final_entropy_over_ln2: fin.entropy_over_ln2(),
        });
    }
    let best_restart = (0..runs.len())
        .min_by(|&a, &b| runs[a].best_cost.total_cmp(&runs[b].best_cost))
        .unwrap_or(0);
    Ok(OptimizationTrace {
        n_pairs,
        reps,
        config: cfg.clone(),
        best_cost: runs[best_restart].best_cost,
        best_thetas: runs[best_restart].best_thetas.clone(),
        best_restart,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// `|tr(A† V)| / 8`.
    pub overlap: f64,
    pub cost: f64,
    pub equivalent: bool,
}

pub const EQUIVALENCE_COST_TOL: f64 = 1e-6;

/// Compares a three-qubit ansatz with the exact operator, both as matrices and
/// through the two-pair protocol cost.
pub fn verify_v_equivalence(thetas: &[f64]) -> Result<EquivalenceReport> {
    let spec = AnsatzSpec::from_thetas(3, thetas.to_vec())?;
    let a = ry_ansatz(&spec)?;
    let overlap = (a.adjoint() * build_v()).trace().norm() / 8.0;
    let cost = evaluate_unitary(&a, 2, &six_states(), FinalPairing::Either)?.cost;
    Ok(EquivalenceReport {
        overlap,
        cost,
        equivalent: cost < EQUIVALENCE_COST_TOL,
    })
}
