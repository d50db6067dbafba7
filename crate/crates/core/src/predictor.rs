// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Predicting projective Bell outcomes from sequentially read ancillas.
//!
//! Each Bell qubit is coupled with strength `V` to its own ancilla along the
//! axis it will later be measured on. The ancilla is then read out by a long
//! run of very weak z measurements; the sign of the running mean predicts
//! the Bell qubit's projective outcome. Four qubits are tracked exactly:
//! Bell qubits 0 and 1, ancilla 2 (for qubit 0) and ancilla 3 (for qubit 1).

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    chsh_combine, exact_report, prepare_bell, ChshReport, MeanAccumulator, Settings,
};
use crate::qcore::linalg::{self, re};
use crate::qcore::{
    ancilla_coupling_unitary, bloch_observable, eigenprojector, partial_trace, projective_measure,
    weak_kraus, CouplingStrength, MeasurementAxis, Op2, Outcome, QuantumState,
};
use crate::seed::{rng_from_seed, trial_seed};

const ANCILLA: [usize; 2] = [2, 3];

/// How a sequential readout is simulated. Both modes sample the same joint
/// distribution of (mean, post state).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutMode {
    /// One weak measurement per step.
    Stepwise,
    /// The step Kraus operators commute, so the record only depends on the
    /// number of `+1` outcomes; that count is drawn from its exact mixture
    /// of binomials and the product Kraus operator applied once.
    #[default]
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequentialReadoutParams {
    pub v: CouplingStrength,
    pub steps: u32,
    #[serde(default)]
    pub mode: ReadoutMode,
}

impl SequentialReadoutParams {
    pub fn new(v: CouplingStrength, steps: u32) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "readout needs at least one step".into(),
            ));
        }
        Ok(Self {
            v,
            steps,
            mode: ReadoutMode::default(),
        })
    }

    pub fn with_mode(mut self, mode: ReadoutMode) -> Self {
        self.mode = mode;
        self
    }

    /// `steps * v^2 >= 25`: the running mean resolves the ancilla eigenvalue.
    pub fn is_saturated(&self) -> bool {
        f64::from(self.steps) * self.v.value() * self.v.value() >= 25.0
    }
}

/// Reads `qubit` out through `params.steps` weak measurements along `axis`.
/// Returns the mean raw outcome and the conditioned final state.
pub fn sequential_weak_sequence<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    params: &SequentialReadoutParams,
    rng: &mut R,
) -> Result<(f64, QuantumState)> {
    if params.steps == 0 {
        return Err(Error::InvalidParameter(
            "readout needs at least one step".into(),
        ));
    }
    match params.mode {
        ReadoutMode::Stepwise => stepwise(state, qubit, axis, params, rng),
        ReadoutMode::Aggregated => aggregated(state, qubit, axis, params, rng),
    }
}

fn stepwise<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    params: &SequentialReadoutParams,
    rng: &mut R,
) -> Result<(f64, QuantumState)> {
    let pair = weak_kraus(params.v, axis);
    let mut state = state.clone();
    let mut total = 0i64;
    for _ in 0..params.steps {
        let p_plus = state.branch_probability_local(qubit, &pair.plus)?;
        let outcome = if rng.random::<f64>() < p_plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        state = state.branch_local(qubit, pair.operator(outcome))?.1;
        total += i64::from(outcome.as_i8());
    }
    Ok((total as f64 / f64::from(params.steps), state))
}

fn aggregated<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    params: &SequentialReadoutParams,
    rng: &mut R,
) -> Result<(f64, QuantumState)> {
    let w_plus = state.branch_probability_local(qubit, &eigenprojector(axis, Outcome::Plus))?;
    let eigen = if rng.random::<f64>() < w_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let v = params.v.value();
    let p_plus = ((1.0 + eigen.sign() * v) / 2.0).clamp(0.0, 1.0);
    let n = u64::from(params.steps);
    let plus_count = Binomial::new(n, p_plus)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    let kraus = product_kraus(axis, v, plus_count, n - plus_count);
    let (_, post) = state.branch_local(qubit, &kraus)?;
    let mean = (2.0 * plus_count as f64 - n as f64) / n as f64;
    Ok((mean, post))
}

/// `k+^plus k-^minus` up to a positive scale (irrelevant after normalization).
fn product_kraus(axis: MeasurementAxis, v: f64, plus: u64, minus: u64) -> Op2 {
    let ln_p = ((1.0 + v) / 2.0).ln();
    let ln_q = ((1.0 - v) / 2.0).ln();
    let term = |count: u64, ln: f64| if count == 0 { 0.0 } else { count as f64 * ln };
    let lw_plus = 0.5 * (term(plus, ln_p) + term(minus, ln_q));
    let lw_minus = 0.5 * (term(plus, ln_q) + term(minus, ln_p));
    let top = lw_plus.max(lw_minus);
    eigenprojector(axis, Outcome::Plus) * re((lw_plus - top).exp())
        + eigenprojector(axis, Outcome::Minus) * re((lw_minus - top).exp())
}

/// Sign rule with a deterministic `+1` on a zero mean.
pub fn predict(mean: f64) -> Outcome {
    if mean < 0.0 {
        Outcome::Minus
    } else {
        Outcome::Plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub trial_index: u64,
    pub settings_id: u64,
    pub trajectory_mean1: f64,
    pub trajectory_mean2: f64,
    pub predicted1: i8,
    pub predicted2: i8,
    pub actual1: i8,
    pub actual2: i8,
    pub seed: u64,
}

impl PredictionRecord {
    pub fn matches(&self) -> u64 {
        u64::from(self.predicted1 == self.actual1) + u64::from(self.predicted2 == self.actual2)
    }
}

fn check_same_axes(settings: &Settings) -> Result<()> {
    if settings.a1 != settings.b1 {
        return Err(Error::AxisMismatch { qubit: 1 });
    }
    if settings.a2 != settings.b2 {
        return Err(Error::AxisMismatch { qubit: 2 });
    }
    Ok(())
}

/// Bell pair with both ancillas coupled (strength `settings.v`, along `b_i`).
pub fn coupled_state(settings: &Settings) -> Result<QuantumState> {
    let zero = QuantumState::basis(2, 0)?;
    let state = prepare_bell(settings.bell).tensor(&zero)?;
    let state = state.evolve(
        &[0, ANCILLA[0]],
        &ancilla_coupling_unitary(settings.v, settings.b1),
    )?;
    state.evolve(
        &[1, ANCILLA[1]],
        &ancilla_coupling_unitary(settings.v, settings.b2),
    )
}

/// One prediction trial: couple, read both ancillas, predict, then measure
/// the Bell qubits projectively along `b_i`. `settings.v` is the system
/// coupling; detector noise settings are not used here.
pub fn run_prediction_experiment(
    settings: &Settings,
    readout: &SequentialReadoutParams,
    trial_index: u64,
    master_seed: u64,
) -> Result<PredictionRecord> {
    check_same_axes(settings)?;
    let seed = trial_seed(master_seed, trial_index);
    let mut rng = rng_from_seed(seed);
    let state = coupled_state(settings)?;
    let (mean1, state) =
        sequential_weak_sequence(&state, ANCILLA[0], MeasurementAxis::Z, readout, &mut rng)?;
    let (mean2, state) =
        sequential_weak_sequence(&state, ANCILLA[1], MeasurementAxis::Z, readout, &mut rng)?;
    let (actual1, state) = projective_measure(&state, 0, settings.b1, &mut rng)?;
    let (actual2, _) = projective_measure(&state, 1, settings.b2, &mut rng)?;
    Ok(PredictionRecord {
        trial_index,
        settings_id: settings.id(),
        trajectory_mean1: mean1,
        trajectory_mean2: mean2,
        predicted1: predict(mean1).as_i8(),
        predicted2: predict(mean2).as_i8(),
        actual1: actual1.as_i8(),
        actual2: actual2.as_i8(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimate {
    pub accuracy: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of correct predictions pooled over both qubits, with a Wilson 95%
/// interval.
pub fn prediction_accuracy(records: &[PredictionRecord]) -> Result<AccuracyEstimate> {
    if records.is_empty() {
        return Err(Error::TooFewRecords {
            required: 1,
            actual: 0,
        });
    }
    let successes: u64 = records.iter().map(PredictionRecord::matches).sum();
    let trials = 2 * records.len() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
    Ok(AccuracyEstimate {
        accuracy: successes as f64 / trials as f64,
        successes,
        trials,
        ci_low,
        ci_high,
    })
}

/// `P(n+ >= k0)` for `n+ ~ Binomial(n, p)`, summed in log space.
fn binomial_upper_tail(n: u64, p: f64, k0: u64) -> f64 {
    if k0 == 0 {
        return 1.0;
    }
    if k0 > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let mut log_pmf = n as f64 * ln_q;
    let mut terms = Vec::with_capacity((n - k0 + 1) as usize);
    for k in 0..=n {
        if k >= k0 {
            terms.push(log_pmf);
        }
        if k < n {
            log_pmf += ((n - k) as f64 / (k + 1) as f64).ln() + ln_p - ln_q;
        }
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln())
        .exp()
        .min(1.0)
}

/// Probability that the readout predicts `predicted` for an ancilla in the
/// z eigenstate `eigen`.
pub fn readout_response(
    readout: &SequentialReadoutParams,
    eigen: Outcome,
    predicted: Outcome,
) -> f64 {
    let n = u64::from(readout.steps);
    let p_plus = ((1.0 + eigen.sign() * readout.v.value()) / 2.0).clamp(0.0, 1.0);
    // predict(mean) = +1  <=>  2 n+ >= n
    let plus = binomial_upper_tail(n, p_plus, n.div_ceil(2));
    match predicted {
        Outcome::Plus => plus,
        Outcome::Minus => 1.0 - plus,
    }
}

/// Readout effect `E_pred = sum_s P(pred | s) |s><s|` on an ancilla, square-rooted.
fn readout_effect_root(readout: &SequentialReadoutParams, predicted: Outcome) -> Op2 {
    Outcome::BOTH
        .iter()
        .map(|&s| {
            eigenprojector(MeasurementAxis::Z, s)
                * re(readout_response(readout, s, predicted).sqrt())
        })
        .sum()
}

/// Exact pooled prediction accuracy, enumerating predictions and
/// projective outcomes over the coupled four-qubit state.
pub fn exact_prediction_accuracy(
    settings: &Settings,
    readout: &SequentialReadoutParams,
) -> Result<f64> {
    check_same_axes(settings)?;
    let state = coupled_state(settings)?;
    let mut total = 0.0;
    for (bell, axis) in [(0usize, settings.b1), (1usize, settings.b2)] {
        for outcome in Outcome::BOTH {
            // Prediction equals the projective outcome on this qubit.
            let effect = readout_effect_root(readout, outcome);
            let op = linalg::kron(
                &linalg::to_dynamic(&eigenprojector(axis, outcome)),
                &linalg::to_dynamic(&(effect * effect)),
            );
            total += state.expectation_multi(&[bell, ANCILLA[bell]], &op)?;
        }
    }
    Ok(total / 2.0)
}

/// Which trials enter the Bell test after the ancilla readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSelection {
    /// All trials; the ancilla outcomes are ignored.
    #[default]
    Marginal,
    /// Only trials whose ancilla predictions equal the given pair.
    Predicted(i8, i8),
}

fn selection_outcomes(selection: PostSelection) -> Result<Option<[Outcome; 2]>> {
    match selection {
        PostSelection::Marginal => Ok(None),
        PostSelection::Predicted(a, b) => Ok(Some([Outcome::from_i8(a)?, Outcome::from_i8(b)?])),
    }
}

fn bell_test_axes(settings: &Settings) -> Result<[MeasurementAxis; 4]> {
    let d = settings.bell.optimal_chsh_degrees();
    Ok([
        MeasurementAxis::from_degrees(d[0])?,
        MeasurementAxis::from_degrees(d[1])?,
        MeasurementAxis::from_degrees(d[2])?,
        MeasurementAxis::from_degrees(d[3])?,
    ])
}

const BELL_PAIRS: [(usize, usize); 4] = [(0, 2), (0, 3), (1, 2), (1, 3)];

/// Exact CHSH of a standard projective Bell test (at the angles optimal for
/// `settings.bell`) on the Bell pair after coupling and ancilla readout.
///
/// With [`PostSelection::Marginal`] the readout, acting on the ancillas only,
/// leaves the Bell pair's reduced state untouched.
pub fn post_protocol_chsh(
    settings: &Settings,
    readout: &SequentialReadoutParams,
    selection: PostSelection,
) -> Result<ChshReport> {
    check_same_axes(settings)?;
    let mut state = coupled_state(settings)?;
    if let Some(pred) = selection_outcomes(selection)? {
        for (k, &p) in pred.iter().enumerate() {
            state = state
                .branch_local(ANCILLA[k], &readout_effect_root(readout, p))?
                .1;
        }
    }
    let pair = partial_trace(&state, &[0, 1])?;
    let axes = bell_test_axes(settings)?;
    let mut values = [0.0; 4];
    for (slot, &(i, j)) in values.iter_mut().zip(BELL_PAIRS.iter()) {
        let op = linalg::kron(
            &linalg::to_dynamic(&bloch_observable(axes[i])),
            &linalg::to_dynamic(&bloch_observable(axes[j])),
        );
        *slot = pair.expectation_multi(&[0, 1], &op)?;
    }
    Ok(exact_report(values))
}

/// One Monte Carlo round of the post-protocol Bell test. Trial `i` uses
/// setting pair `i mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellTestSample {
    pub pair_index: u8,
    pub product: i8,
    pub predicted: [i8; 2],
}

pub fn post_protocol_bell_trial(
    settings: &Settings,
    readout: &SequentialReadoutParams,
    trial_index: u64,
    master_seed: u64,
) -> Result<BellTestSample> {
    check_same_axes(settings)?;
    let mut rng = rng_from_seed(trial_seed(master_seed, trial_index));
    let state = coupled_state(settings)?;
    let (m1, state) =
        sequential_weak_sequence(&state, ANCILLA[0], MeasurementAxis::Z, readout, &mut rng)?;
    let (m2, state) =
        sequential_weak_sequence(&state, ANCILLA[1], MeasurementAxis::Z, readout, &mut rng)?;
    let axes = bell_test_axes(settings)?;
    let pair_index = (trial_index % 4) as usize;
    let (i, j) = BELL_PAIRS[pair_index];
    let (x, state) = projective_measure(&state, 0, axes[i], &mut rng)?;
    let (y, _) = projective_measure(&state, 1, axes[j], &mut rng)?;
    Ok(BellTestSample {
        pair_index: pair_index as u8,
        product: x.as_i8() * y.as_i8(),
        predicted: [predict(m1).as_i8(), predict(m2).as_i8()],
    })
}

pub fn combine_bell_samples(
    samples: &[BellTestSample],
    selection: PostSelection,
) -> Result<ChshReport> {
    let wanted = selection_outcomes(selection)?.map(|p| [p[0].as_i8(), p[1].as_i8()]);
    let mut acc = [MeanAccumulator::default(); 4];
    for s in samples
        .iter()
        .filter(|s| wanted.is_none_or(|w| s.predicted == w))
    {
        acc[usize::from(s.pair_index)].push(f64::from(s.product));
    }
    if let Some(short) = acc.iter().find(|a| a.count() < 2) {
        return Err(Error::TooFewRecords {
            required: 2,
            actual: short.count() as usize,
        });
    }
    let e = acc.map(|a| a.estimate());
    Ok(chsh_combine(e[0], e[1], e[2], e[3]))
}
