//! Pseudo-pure noise, finite-shot Pauli measurements, single-qubit tomography
//! and a synthetic version of the repeated-runs teleportation experiment.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::GateKind;
use crate::error::{Error, Result};
use crate::protocols::measurement_free_run;
use crate::qstate::{
    fidelity, fidelity_with_pure, partial_trace, to_density, von_neumann_entropy, CMatrix,
    DensityMatrix, LabeledState, SIX_STATE_LABELS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Weight of the maximally mixed component.
    pub epsilon: f64,
    /// Independent per-shot probability of flipping a readout bit.
    #[serde(default)]
    pub readout_flip_prob: f64,
}

impl NoiseConfig {
    pub fn new(epsilon: f64, readout_flip_prob: f64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            readout_flip_prob,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noiseless() -> Self {
        Self {
            epsilon: 0.0,
            readout_flip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(0.0..1.0).contains(&self.readout_flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "readout flip probability must lie in [0, 1), got {}",
                self.readout_flip_prob
            )));
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub runs: usize,
    /// Shots per measurement basis.
    pub shots: u64,
    pub rng_seed: u64,
    pub state_set: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            runs: 12,
            shots: 8192,
            rng_seed: 0,
            state_set: SIX_STATE_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.shots == 0 {
            return Err(Error::InvalidParameter(
                "runs and shots must be >= 1".into(),
            ));
        }
        if self.state_set.is_empty() {
            return Err(Error::InvalidParameter("state set is empty".into()));
        }
        for label in &self.state_set {
            LabeledState::from_label(label)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Rotation taking the basis' +1 eigenstate to `|0>`: `H`, `H S†`, `I`.
    pub fn rotation(self) -> CMatrix {
        match self {
            Basis::X => GateKind::H.matrix(),
            Basis::Y => {
                let s_dag = CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::new(1.0, 0.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, -1.0),
                    ],
                );
                GateKind::H.matrix() * s_dag
            }
            Basis::Z => CMatrix::identity(2, 2),
        }
    }

    /// Probability of outcome 0 for `dm` measured in this basis.
    pub fn prob_zero(self, dm: &DensityMatrix) -> f64 {
        let u = self.rotation();
        let rotated = &u * dm.matrix() * u.adjoint();
        rotated[(0, 0)].re.clamp(0.0, 1.0)
    }
}

/// Outcome tallies for one basis. Fractional tallies are allowed so exact
/// expectation values can be fed to [`tomography_1q`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub zeros: f64,
    pub ones: f64,
}

impl Counts {
    pub fn total(&self) -> f64 {
        self.zeros + self.ones
    }

    /// Expectation value of the measured Pauli operator.
    pub fn expectation(&self) -> f64 {
        (self.zeros - self.ones) / self.total()
    }

    /// Noise-free expected tallies for `shots` measurements of `dm`.
    pub fn exact(dm: &DensityMatrix, basis: Basis, shots: f64) -> Self {
        let p0 = basis.prob_zero(dm);
        Self {
            zeros: p0 * shots,
            ones: (1.0 - p0) * shots,
        }
    }
}

impl From<(u64, u64)> for Counts {
    fn from((zeros, ones): (u64, u64)) -> Self {
        Self {
            zeros: zeros as f64,
            ones: ones as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub bloch_vector: [f64; 3],
    pub reconstructed_dm: DensityMatrix,
    pub shots_used: u64,
}

/// `(1 - ε) ρ + ε I / 2^n`.
pub fn pseudo_pure(rho0: &DensityMatrix, epsilon: f64) -> Result<DensityMatrix> {
    NoiseConfig::new(epsilon, 0.0)?;
    let d = rho0.dim();
    let mixed = CMatrix::identity(d, d) * Complex64::new(epsilon / d as f64, 0.0);
    let m = rho0.matrix() * Complex64::new(1.0 - epsilon, 0.0) + mixed;
    Ok(DensityMatrix::from_matrix_unchecked(rho0.n_qubits(), m))
}

/// Samples `shots` single-qubit measurements of `dm` in `basis`.
pub fn sample_counts(
    dm: &DensityMatrix,
    basis: Basis,
    shots: u64,
    rng_seed: u64,
    readout_flip_prob: f64,
) -> Result<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_counts_with(dm, basis, shots, readout_flip_prob, &mut rng)
}

pub fn sample_counts_with<R: Rng>(
    dm: &DensityMatrix,
    basis: Basis,
    shots: u64,
    readout_flip_prob: f64,
    rng: &mut R,
) -> Result<(u64, u64)> {
    if dm.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: dm.n_qubits(),
        });
    }
    NoiseConfig::new(0.0, readout_flip_prob)?;
    let p0 = basis.prob_zero(dm);
    let mut zeros = 0u64;
    for _ in 0..shots {
        let mut outcome_zero = rng.random::<f64>() < p0;
        if readout_flip_prob > 0.0 && rng.random::<f64>() < readout_flip_prob {
            outcome_zero = !outcome_zero;
        }
        zeros += u64::from(outcome_zero);
    }
    Ok((zeros, shots - zeros))
}

/// Linear-inversion tomography; Bloch vectors longer than 1 are rescaled onto the sphere.
pub fn tomography_1q(x: Counts, y: Counts, z: Counts) -> Result<TomographyResult> {
    for c in [x, y, z] {
        if c.total() <= 0.0 || c.zeros < 0.0 || c.ones < 0.0 {
            return Err(Error::InvalidParameter(
                "tomography needs a positive number of shots in every basis".into(),
            ));
        }
    }
    let mut r = [x.expectation(), y.expectation(), z.expectation()];
    let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > 1.0 {
        r.iter_mut().for_each(|v| *v /= len);
    }
    let reconstructed_dm = bloch_to_dm(r)?;
    Ok(TomographyResult {
        bloch_vector: r,
        reconstructed_dm,
        shots_used: (x.total() + y.total() + z.total()).round() as u64,
    })
}

/// `(I + r·σ) / 2`.
pub fn bloch_to_dm(r: [f64; 3]) -> Result<DensityMatrix> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.5 * (1.0 + r[2]), 0.0),
            c(0.5 * r[0], -0.5 * r[1]),
            c(0.5 * r[0], 0.5 * r[1]),
            c(0.5 * (1.0 - r[2]), 0.0),
        ],
    );
    DensityMatrix::new(m)
}

/// Samples all three bases and reconstructs the state.
pub fn measure_and_reconstruct<R: Rng>(
    dm: &DensityMatrix,
    shots: u64,
    readout_flip_prob: f64,
    rng: &mut R,
) -> Result<TomographyResult> {
    let mut counts = [Counts {
        zeros: 0.0,
        ones: 0.0,
    }; 3];
    for (slot, basis) in counts.iter_mut().zip(Basis::ALL) {
        *slot = sample_counts_with(dm, basis, shots, readout_flip_prob, rng)?.into();
    }
    tomography_1q(counts[0], counts[1], counts[2])
}

/// One row of the raw per-run output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub state_label: String,
    pub run: usize,
    pub output_fidelity: f64,
    pub hawking_fidelity: f64,
    pub hawking_entropy_over_ln2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSem {
    pub mean: f64,
    /// Standard deviation of the mean.
    pub sem: f64,
}

impl MeanSem {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                sem: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let sem = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, sem }
    }
}

/// Per-state summary across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub state_label: String,
    pub output_fidelity: MeanSem,
    pub hawking_fidelity: MeanSem,
    pub hawking_entropy_over_ln2: MeanSem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub noise: NoiseConfig,
    pub records: Vec<RunRecord>,
    pub summary: Vec<StateSummary>,
}

impl ExperimentReport {
    /// Largest separation, in combined standard errors, between one state's mean
    /// and the pooled mean of all other states, for `(hawking_fidelity, hawking_entropy_over_ln2)`.
    pub fn hawking_state_dependence(&self) -> (f64, f64) {
        let fid = |r: &RunRecord| r.hawking_fidelity;
        let ent = |r: &RunRecord| r.hawking_entropy_over_ln2;
        (self.max_separation(fid), self.max_separation(ent))
    }

    fn max_separation(&self, metric: impl Fn(&RunRecord) -> f64) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.config.state_set {
            let (mine, rest): (Vec<&RunRecord>, Vec<&RunRecord>) =
                self.records.iter().partition(|r| &r.state_label == s);
            if rest.is_empty() {
                continue;
            }
            let a = MeanSem::of(&mine.iter().map(|r| metric(r)).collect::<Vec<_>>());
            let b = MeanSem::of(&rest.iter().map(|r| metric(r)).collect::<Vec<_>>());
            let spread = (a.sem.powi(2) + b.sem.powi(2)).sqrt();
            let diff = (a.mean - b.mean).abs();
            let z = if spread > 0.0 {
                diff / spread
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        worst
    }
}

/// Repeats the measurement-free protocol under pseudo-pure noise, tomographs
/// the output and exchanged qubits, and summarizes each state over the runs.
///
/// Run `r` of the `s`-th state draws from a ChaCha8 stream `s` seeded with
/// `rng_seed + r`, so runs are independent of evaluation order.
pub fn run_experiment(cfg: &ExperimentConfig, noise: &NoiseConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    noise.validate()?;
    let half = DensityMatrix::maximally_mixed(1);
    let mut records = Vec::with_capacity(cfg.runs * cfg.state_set.len());
    let mut summary = Vec::with_capacity(cfg.state_set.len());

    for (s_idx, label) in cfg.state_set.iter().enumerate() {
        let psi = LabeledState::from_label(label)?.state;
        let run = measurement_free_run(&psi)?;
        let hawking = partial_trace(
            &pseudo_pure(&to_density(&run.pre_exchange), noise.epsilon)?,
            &[2],
        )?;
        let output = partial_trace(
            &pseudo_pure(&to_density(&run.final_state), noise.epsilon)?,
            &[4],
        )?;

        let mut rows = Vec::with_capacity(cfg.runs);
        for r in 0..cfg.runs {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(r as u64));
            rng.set_stream(s_idx as u64);
            let out_tomo =
                measure_and_reconstruct(&output, cfg.shots, noise.readout_flip_prob, &mut rng)?;
            let hawk_tomo =
                measure_and_reconstruct(&hawking, cfg.shots, noise.readout_flip_prob, &mut rng)?;
            rows.push(RunRecord {
                state_label: label.clone(),
                run: r,
                output_fidelity: fidelity_with_pure(&psi, &out_tomo.reconstructed_dm)?,
                hawking_fidelity: fidelity(&hawk_tomo.reconstructed_dm, &half)?,
                hawking_entropy_over_ln2: von_neumann_entropy(&hawk_tomo.reconstructed_dm) / LN_2,
            });
        }
        let col = |f: fn(&RunRecord) -> f64| MeanSem::of(&rows.iter().map(f).collect::<Vec<_>>());
        summary.push(StateSummary {
            state_label: label.clone(),
            output_fidelity: col(|r| r.output_fidelity),
            hawking_fidelity: col(|r| r.hawking_fidelity),
            hawking_entropy_over_ln2: col(|r| r.hawking_entropy_over_ln2),
        });
        records.extend(rows);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        noise: *noise,
        records,
        summary,
    })
}
