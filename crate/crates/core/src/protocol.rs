// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! One weak-then-strong trial per Bell pair, correlator estimation, and the
//! exact branch-enumeration oracle.
//!
//! A trial weakly couples qubit 1 along `a1` and qubit 2 along `a2` (raw
//! outcomes `r1`, `r2`, rescaled to `alpha_i = raw_i / V`), then measures
//! qubit 1 along `b1` and qubit 2 along `b2` projectively (`beta_i`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::re;
use crate::qcore::{
    apply_readout_noise, eigenprojector, nonselective_weak, projective_measure, rescale,
    weak_kraus, weak_measure, CouplingStrength, MeasurementAxis, NoiseModel, Outcome, QuantumState,
    MIN_OUTCOME_PROB,
};
use crate::seed::{mix64, rng_from_seed, trial_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellKind {
    /// Angles `(A1, A2, B1, B2)` in degrees at which a projective CHSH test on
    /// this state reaches `2 sqrt 2`.
    pub fn optimal_chsh_degrees(self) -> [f64; 4] {
        match self {
            BellKind::PhiPlus => [0.0, 90.0, 45.0, -45.0],
            BellKind::PsiMinus => [0.0, 90.0, 225.0, 135.0],
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phi_plus" | "phiplus" => Ok(BellKind::PhiPlus),
            "psi-" | "psi_minus" | "psiminus" | "singlet" => Ok(BellKind::PsiMinus),
            _ => Err(Error::UnknownBellKind(s.to_string())),
        }
    }
}

pub fn prepare_bell(kind: BellKind) -> QuantumState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match kind {
        BellKind::PhiPlus => [h, 0.0, 0.0, h],
        BellKind::PsiMinus => [0.0, h, -h, 0.0],
    };
    QuantumState::from_amplitudes(2, amps.iter().map(|&a| re(a)).collect())
        .expect("Bell amplitudes are normalized")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub a1: MeasurementAxis,
    pub a2: MeasurementAxis,
    pub b1: MeasurementAxis,
    pub b2: MeasurementAxis,
    pub v: CouplingStrength,
    #[serde(default)]
    pub noise: NoiseModel,
    pub bell: BellKind,
}

impl Settings {
    /// `Φ+` with `a1 = 0°, a2 = 90°, b1 = 45°, b2 = -45°`, noise off.
    pub fn chsh_default(v: CouplingStrength) -> Self {
        Self::from_degrees(
            [0.0, 90.0, 45.0, -45.0],
            v,
            NoiseModel::NONE,
            BellKind::PhiPlus,
        )
        .expect("default angles are finite")
    }

    /// Angles ordered `(a1, a2, b1, b2)`.
    pub fn from_degrees(
        degrees: [f64; 4],
        v: CouplingStrength,
        noise: NoiseModel,
        bell: BellKind,
    ) -> Result<Self> {
        Ok(Self {
            a1: MeasurementAxis::from_degrees(degrees[0])?,
            a2: MeasurementAxis::from_degrees(degrees[1])?,
            b1: MeasurementAxis::from_degrees(degrees[2])?,
            b2: MeasurementAxis::from_degrees(degrees[3])?,
            v,
            noise,
            bell,
        })
    }

    pub fn with_v(mut self, v: CouplingStrength) -> Self {
        self.v = v;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    /// Stable fingerprint of every parameter, used as `settings_id`.
    pub fn id(&self) -> u64 {
        let words = [
            self.a1.theta().to_bits(),
            self.a2.theta().to_bits(),
            self.b1.theta().to_bits(),
            self.b2.theta().to_bits(),
            self.v.value().to_bits(),
            self.noise.bias.to_bits(),
            self.noise.sigma.to_bits(),
            match self.bell {
                BellKind::PhiPlus => 1,
                BellKind::PsiMinus => 2,
            },
        ];
        words
            .iter()
            .fold(0x5157_4b42_454c_4c00, |h, &w| mix64(h ^ w))
    }
}

/// Which recorded quantity enters a correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Alpha1,
    Alpha2,
    Beta1,
    Beta2,
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha1" => Ok(Field::Alpha1),
            "alpha2" => Ok(Field::Alpha2),
            "beta1" => Ok(Field::Beta1),
            "beta2" => Ok(Field::Beta2),
            _ => Err(Error::InvalidParameter(format!("unknown field `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub settings_id: u64,
    pub raw1: f64,
    pub raw2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: i8,
    pub beta2: i8,
    pub seed: u64,
}

impl TrialRecord {
    pub fn field(&self, field: Field) -> f64 {
        match field {
            Field::Alpha1 => self.alpha1,
            Field::Alpha2 => self.alpha2,
            Field::Beta1 => f64::from(self.beta1),
            Field::Beta2 => f64::from(self.beta2),
        }
    }

    /// The four-term combination `α1β1 + α1β2 + α2β1 − α2β2` of this trial.
    pub fn chsh_term(&self) -> f64 {
        let (b1, b2) = (f64::from(self.beta1), f64::from(self.beta2));
        self.alpha1 * (b1 + b2) + self.alpha2 * (b1 - b2)
    }
}

/// Runs one trial. The result depends only on `(settings, trial_index,
/// master_seed)`.
pub fn run_trial(settings: &Settings, trial_index: u64, master_seed: u64) -> Result<TrialRecord> {
    let seed = trial_seed(master_seed, trial_index);
    let mut rng = rng_from_seed(seed);
    let state = prepare_bell(settings.bell);
    let (r1, state) = weak_measure(&state, 0, settings.a1, settings.v, &mut rng)?;
    let (r2, state) = weak_measure(&state, 1, settings.a2, settings.v, &mut rng)?;
    let raw1 = apply_readout_noise(r1.sign(), &settings.noise, &mut rng);
    let raw2 = apply_readout_noise(r2.sign(), &settings.noise, &mut rng);
    let (beta1, state) = projective_measure(&state, 0, settings.b1, &mut rng)?;
    let (beta2, _) = projective_measure(&state, 1, settings.b2, &mut rng)?;
    Ok(TrialRecord {
        trial_index,
        settings_id: settings.id(),
        raw1,
        raw2,
        alpha1: rescale(raw1, settings.v),
        alpha2: rescale(raw2, settings.v),
        beta1: beta1.as_i8(),
        beta2: beta2.as_i8(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Streaming mean and plug-in variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Mean with `stderr = sd / sqrt(n)`, `sd` the plug-in (divide-by-n)
    /// standard deviation.
    pub fn estimate(&self) -> CorrelatorEstimate {
        let n = self.count as f64;
        let variance = if self.count > 0 {
            (self.m2 / n).max(0.0)
        } else {
            0.0
        };
        CorrelatorEstimate {
            value: self.mean,
            stderr: if self.count > 0 {
                (variance / n).sqrt()
            } else {
                0.0
            },
            count: self.count,
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAccumulator::default();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

fn require_records(records: &[TrialRecord], required: usize) -> Result<()> {
    if records.len() < required {
        return Err(Error::TooFewRecords {
            required,
            actual: records.len(),
        });
    }
    Ok(())
}

pub fn estimate_correlator(
    records: &[TrialRecord],
    left: Field,
    right: Field,
) -> Result<CorrelatorEstimate> {
    require_records(records, 2)?;
    Ok(records
        .iter()
        .map(|r| r.field(left) * r.field(right))
        .collect::<MeanAccumulator>()
        .estimate())
}

pub fn estimate_mean(records: &[TrialRecord], field: Field) -> Result<CorrelatorEstimate> {
    require_records(records, 2)?;
    Ok(records
        .iter()
        .map(|r| r.field(field))
        .collect::<MeanAccumulator>()
        .estimate())
}

/// Assignment of recorded fields to the four correlators `e11, e12, e21,
/// e22` entering `e11 + e12 + e21 - e22`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshLayout {
    pub pairs: [(Field, Field); 4],
}

impl Default for ChshLayout {
    /// `e_ij` correlates `alpha_i` with `beta_j`.
    fn default() -> Self {
        Self {
            pairs: [
                (Field::Alpha1, Field::Beta1),
                (Field::Alpha1, Field::Beta2),
                (Field::Alpha2, Field::Beta1),
                (Field::Alpha2, Field::Beta2),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub e11: CorrelatorEstimate,
    pub e12: CorrelatorEstimate,
    pub e21: CorrelatorEstimate,
    pub e22: CorrelatorEstimate,
    pub chsh: f64,
    pub chsh_stderr: f64,
}

pub fn chsh_combine(
    e11: CorrelatorEstimate,
    e12: CorrelatorEstimate,
    e21: CorrelatorEstimate,
    e22: CorrelatorEstimate,
) -> ChshReport {
    let chsh = e11.value + e12.value + e21.value - e22.value;
    let chsh_stderr = [e11, e12, e21, e22]
        .iter()
        .map(|e| e.stderr * e.stderr)
        .sum::<f64>()
        .sqrt();
    ChshReport {
        e11,
        e12,
        e21,
        e22,
        chsh,
        chsh_stderr,
    }
}

/// Exact values wrapped as estimates with zero standard error.
pub fn exact_report(values: [f64; 4]) -> ChshReport {
    let wrap = |value| CorrelatorEstimate {
        value,
        stderr: 0.0,
        count: 0,
    };
    chsh_combine(
        wrap(values[0]),
        wrap(values[1]),
        wrap(values[2]),
        wrap(values[3]),
    )
}

pub fn estimate_chsh(records: &[TrialRecord]) -> Result<ChshReport> {
    estimate_chsh_with(records, &ChshLayout::default())
}

pub fn estimate_chsh_with(records: &[TrialRecord], layout: &ChshLayout) -> Result<ChshReport> {
    let mut est = [CorrelatorEstimate {
        value: 0.0,
        stderr: 0.0,
        count: 0,
    }; 4];
    for (slot, &(l, r)) in est.iter_mut().zip(layout.pairs.iter()) {
        *slot = estimate_correlator(records, l, r)?;
    }
    Ok(chsh_combine(est[0], est[1], est[2], est[3]))
}

/// One of the 16 outcome branches of a noiseless trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub r1: Outcome,
    pub r2: Outcome,
    pub beta1: Outcome,
    pub beta2: Outcome,
}

/// Enumerates both weak and both projective outcomes over the evolving
/// density operator. Branches with probability below the sampling floor are
/// dropped.
pub fn enumerate_branches(settings: &Settings) -> Result<Vec<Branch>> {
    let rho = prepare_bell(settings.bell).to_mixed();
    let k1 = weak_kraus(settings.v, settings.a1);
    let k2 = weak_kraus(settings.v, settings.a2);
    let mut branches = Vec::with_capacity(16);
    for r1 in Outcome::BOTH {
        let Some((p1, s1)) = sub_branch(&rho, 0, k1.operator(r1))? else {
            continue;
        };
        for r2 in Outcome::BOTH {
            let Some((p2, s2)) = sub_branch(&s1, 1, k2.operator(r2))? else {
                continue;
            };
            for beta1 in Outcome::BOTH {
                let Some((p3, s3)) = sub_branch(&s2, 0, &eigenprojector(settings.b1, beta1))?
                else {
                    continue;
                };
                for beta2 in Outcome::BOTH {
                    let p4 = s3.branch_probability_local(1, &eigenprojector(settings.b2, beta2))?;
                    branches.push(Branch {
                        probability: p1 * p2 * p3 * p4,
                        r1,
                        r2,
                        beta1,
                        beta2,
                    });
                }
            }
        }
    }
    Ok(branches)
}

fn sub_branch(
    state: &QuantumState,
    qubit: usize,
    kraus: &crate::qcore::Op2,
) -> Result<Option<(f64, QuantumState)>> {
    let p = state.branch_probability_local(qubit, kraus)?;
    if p < MIN_OUTCOME_PROB {
        return Ok(None);
    }
    state.branch_local(qubit, kraus).map(Some)
}

/// Conditional mean of a field given a branch (detector noise averaged out).
fn branch_value(settings: &Settings, branch: &Branch, field: Field) -> f64 {
    let v = settings.v.value();
    match field {
        Field::Alpha1 => (branch.r1.sign() + settings.noise.bias) / v,
        Field::Alpha2 => (branch.r2.sign() + settings.noise.bias) / v,
        Field::Beta1 => branch.beta1.sign(),
        Field::Beta2 => branch.beta2.sign(),
    }
}

/// `E[left * right]` computed exactly, including the effect of detector
/// noise bias (and its variance when `left == right` is an ancilla field).
pub fn exact_correlator(settings: &Settings, left: Field, right: Field) -> Result<f64> {
    let branches = enumerate_branches(settings)?;
    let mut value: f64 = branches
        .iter()
        .map(|b| b.probability * branch_value(settings, b, left) * branch_value(settings, b, right))
        .sum();
    if left == right && matches!(left, Field::Alpha1 | Field::Alpha2) {
        let v = settings.v.value();
        value += settings.noise.sigma * settings.noise.sigma / (v * v);
    }
    Ok(value)
}

pub fn exact_mean(settings: &Settings, field: Field) -> Result<f64> {
    Ok(enumerate_branches(settings)?
        .iter()
        .map(|b| b.probability * branch_value(settings, b, field))
        .sum())
}

pub fn exact_chsh_report(settings: &Settings, layout: &ChshLayout) -> Result<ChshReport> {
    let mut values = [0.0; 4];
    for (slot, &(l, r)) in values.iter_mut().zip(layout.pairs.iter()) {
        *slot = exact_correlator(settings, l, r)?;
    }
    Ok(exact_report(values))
}

pub fn exact_chsh(settings: &Settings) -> Result<f64> {
    Ok(exact_chsh_report(settings, &ChshLayout::default())?.chsh)
}

/// Exact CHSH combination for each coupling strength in `v_grid`.
pub fn chsh_curve(settings: &Settings, v_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if v_grid.is_empty() {
        return Err(Error::InvalidParameter("empty V grid".into()));
    }
    v_grid
        .iter()
        .map(|&v| {
            let s = settings.with_v(CouplingStrength::new(v)?);
            Ok((v, exact_chsh(&s)?))
        })
        .collect()
}

/// Bell-pair state after both weak couplings, averaged over their outcomes.
pub fn post_weak_state(settings: &Settings) -> Result<QuantumState> {
    let s = nonselective_weak(&prepare_bell(settings.bell), 0, settings.a1, settings.v)?;
    nonselective_weak(&s, 1, settings.a2, settings.v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::concurrence;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn strength(v: f64) -> CouplingStrength {
        CouplingStrength::new(v).unwrap()
    }

    fn est(value: f64) -> CorrelatorEstimate {
        CorrelatorEstimate {
            value,
            stderr: 0.0,
            count: 1,
        }
    }

    fn record(alpha1: f64, beta1: i8) -> TrialRecord {
        TrialRecord {
            trial_index: 0,
            settings_id: 0,
            raw1: alpha1,
            raw2: 0.0,
            alpha1,
            alpha2: 0.0,
            beta1,
            beta2: 1,
            seed: 0,
        }
    }

    #[test]
    fn bell_amplitudes() {
        let phi = prepare_bell(BellKind::PhiPlus);
        let a = phi.amplitudes().unwrap();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && (a[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let psi = prepare_bell(BellKind::PsiMinus);
        let a = psi.amplitudes().unwrap();
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15 && (a[2].re + FRAC_1_SQRT_2).abs() < 1e-15);
        for kind in [BellKind::PhiPlus, BellKind::PsiMinus] {
            assert!((concurrence(&prepare_bell(kind)).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!("bogus".parse::<BellKind>().is_err());
        assert_eq!("psi-".parse::<BellKind>().unwrap(), BellKind::PsiMinus);
    }

    #[test]
    fn trial_is_deterministic() {
        let s =
            Settings::chsh_default(strength(0.3)).with_noise(NoiseModel::unbiased(0.2).unwrap());
        assert_eq!(
            run_trial(&s, 17, 99).unwrap(),
            run_trial(&s, 17, 99).unwrap()
        );
        assert_ne!(
            run_trial(&s, 17, 99).unwrap(),
            run_trial(&s, 18, 99).unwrap()
        );
    }

    #[test]
    fn strong_same_axis_repeats_eigenvalue() {
        let s = Settings::from_degrees(
            [20.0, -50.0, 20.0, -50.0],
            strength(1.0),
            NoiseModel::NONE,
            BellKind::PhiPlus,
        )
        .unwrap();
        for i in 0..500 {
            let r = run_trial(&s, i, 7).unwrap();
            assert_eq!(r.alpha1, f64::from(r.beta1));
            assert_eq!(r.alpha2, f64::from(r.beta2));
        }
    }

    #[test]
    fn record_invariants() {
        let s =
            Settings::chsh_default(strength(0.37)).with_noise(NoiseModel::new(0.1, 0.4).unwrap());
        for i in 0..200 {
            let r = run_trial(&s, i, 1).unwrap();
            assert!((r.alpha1 * 0.37 - r.raw1).abs() < 1e-12);
            assert!((r.alpha2 * 0.37 - r.raw2).abs() < 1e-12);
            assert!(r.beta1.abs() == 1 && r.beta2.abs() == 1);
            assert_eq!(r.settings_id, s.id());
        }
    }

    #[test]
    fn correlator_small_examples() {
        let e = estimate_correlator(
            &[record(1.0, 1), record(-1.0, -1)],
            Field::Alpha1,
            Field::Beta1,
        )
        .unwrap();
        assert_eq!((e.value, e.stderr, e.count), (1.0, 0.0, 2));
        let e = estimate_correlator(
            &[record(2.0, 1), record(-2.0, -1)],
            Field::Alpha1,
            Field::Beta1,
        )
        .unwrap();
        assert_eq!(e.value, 2.0);
        assert!(estimate_correlator(&[], Field::Alpha1, Field::Beta1).is_err());
    }

    #[test]
    fn stderr_is_plug_in() {
        let acc: MeanAccumulator = [1.0, -1.0, 1.0, 1.0].into_iter().collect();
        let e = acc.estimate();
        // mean 0.5, plug-in variance 0.75
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!((e.stderr - (0.75f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 / 7.0 - 3.0)
            .collect();
        let whole: MeanAccumulator = xs.iter().copied().collect();
        let mut merged: MeanAccumulator = xs[..333].iter().copied().collect();
        merged.merge(&xs[333..].iter().copied().collect());
        let (a, b) = (whole.estimate(), merged.estimate());
        assert!((a.value - b.value).abs() < 1e-12 && (a.stderr - b.stderr).abs() < 1e-12);
    }

    #[test]
    fn chsh_combine_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = chsh_combine(est(h), est(h), est(h), est(-h));
        assert!((r.chsh - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(
            chsh_combine(est(1.0), est(1.0), est(1.0), est(1.0)).chsh,
            2.0
        );
        assert_eq!(
            chsh_combine(est(0.0), est(0.0), est(0.0), est(0.0)).chsh,
            0.0
        );
        let mk = |s| CorrelatorEstimate {
            value: 0.0,
            stderr: s,
            count: 10,
        };
        let r = chsh_combine(mk(0.1), mk(0.2), mk(0.2), mk(0.4));
        assert!((r.chsh_stderr - 0.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        for v in [0.05, 0.5, 1.0] {
            let b = enumerate_branches(&Settings::chsh_default(strength(v))).unwrap();
            let total: f64 = b.iter().map(|x| x.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_qubit_correlator_is_v_independent() {
        for v in [0.1, 0.6, 1.0] {
            let s = Settings::chsh_default(strength(v));
            let e = exact_correlator(&s, Field::Alpha1, Field::Beta1).unwrap();
            assert!((e - FRAC_1_SQRT_2).abs() < 1e-12, "V={v}: {e}");
        }
    }

    #[test]
    fn cross_correlator_damped() {
        let s = Settings::chsh_default(strength(0.6));
        let e = exact_correlator(&s, Field::Alpha1, Field::Beta2).unwrap();
        assert!((e - FRAC_1_SQRT_2 * 0.8).abs() < 1e-12);
        assert!((e - 0.56569).abs() < 1e-5);
        let s = Settings::chsh_default(strength(1.0));
        assert!(
            exact_correlator(&s, Field::Alpha1, Field::Beta2)
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn curve_points() {
        let s = Settings::chsh_default(strength(0.5));
        // alpha = ±1/V amplifies rounding in the branch sum, so the small-V
        // limit is probed at V = 1e-3 rather than closer to zero.
        let curve = chsh_curve(&s, &[1e-3, 1.0, 0.2]).unwrap();
        assert!((curve[0].1 - SQRT_2 * (1.0 + (1.0 - 1e-6f64).sqrt())).abs() < 1e-9);
        assert!((curve[0].1 - 2.0 * SQRT_2).abs() < 1e-6);
        assert!((curve[1].1 - SQRT_2).abs() < 1e-9);
        assert!((curve[2].1 - SQRT_2 * (1.0 + 0.96f64.sqrt())).abs() < 1e-9);
        assert!((curve[2].1 - 2.7998).abs() < 1e-4);
        assert!(chsh_curve(&s, &[]).is_err());
        assert!(chsh_curve(&s, &[1.2]).is_err());
    }

    #[test]
    fn violation_window_edges() {
        let s = Settings::chsh_default(strength(0.5));
        assert!(exact_chsh(&s.with_v(strength(0.909))).unwrap() > 2.0);
        assert!(exact_chsh(&s.with_v(strength(0.911))).unwrap() <= 2.0);
    }

    #[test]
    fn weak_measurement_order_is_irrelevant() {
        // Swap the roles of the qubits: Φ+ is symmetric, so measuring qubit 2
        // first along a2 must give the mirrored branch distribution.
        let s = Settings::from_degrees(
            [10.0, 75.0, -20.0, 140.0],
            strength(0.45),
            NoiseModel::NONE,
            BellKind::PhiPlus,
        )
        .unwrap();
        let rho = prepare_bell(s.bell);
        let k1 = weak_kraus(s.v, s.a1);
        let k2 = weak_kraus(s.v, s.a2);
        for r1 in Outcome::BOTH {
            for r2 in Outcome::BOTH {
                let (pa, sa) = rho.branch_local(0, k1.operator(r1)).unwrap();
                let (pb, sa) = sa.branch_local(1, k2.operator(r2)).unwrap();
                let (pc, sb) = rho.branch_local(1, k2.operator(r2)).unwrap();
                let (pd, sb) = sb.branch_local(0, k1.operator(r1)).unwrap();
                assert!((pa * pb - pc * pd).abs() < 1e-12);
                let diff =
                    crate::qcore::linalg::max_abs_diff(&sa.density_matrix(), &sb.density_matrix());
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn marginals_vanish() {
        let s = Settings::from_degrees(
            [13.0, 71.0, -33.0, 101.0],
            strength(0.4),
            NoiseModel::NONE,
            BellKind::PsiMinus,
        )
        .unwrap();
        for f in [Field::Alpha1, Field::Alpha2, Field::Beta1, Field::Beta2] {
            assert!(exact_mean(&s, f).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn unbiased_noise_leaves_exact_correlators_unchanged() {
        let clean = Settings::chsh_default(strength(0.3));
        let noisy = clean.with_noise(NoiseModel::unbiased(0.9).unwrap());
        let layout = ChshLayout::default();
        for (l, r) in layout.pairs {
            let a = exact_correlator(&clean, l, r).unwrap();
            let b = exact_correlator(&noisy, l, r).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_coupling_preserves_entanglement() {
        let mut previous = 1.0 + 1e-12;
        for k in 0..10 {
            let v = 1e-6 + k as f64 * 0.1;
            let s = Settings::from_degrees(
                [0.0, 0.0, 45.0, -45.0],
                strength(v),
                NoiseModel::NONE,
                BellKind::PhiPlus,
            )
            .unwrap();
            let c = concurrence(&post_weak_state(&s).unwrap()).unwrap();
            assert!(c > 0.0 && c < previous);
            assert!((c - (1.0 - v * v)).abs() < 1e-8);
            previous = c;
        }
    }

    #[test]
    fn default_angle_coupling_concurrence() {
        // Orthogonal weak axes leave a Bell-diagonal state with Φ+ weight
        // (1+c)^2/4, so C = (1+c)^2/2 - 1, vanishing once c <= sqrt 2 - 1.
        for v in [0.2, 0.6, 0.9, 0.95] {
            let s = Settings::chsh_default(strength(v));
            let c = (1.0 - v * v).sqrt();
            let expected = ((1.0 + c).powi(2) / 2.0 - 1.0).max(0.0);
            let got = concurrence(&post_weak_state(&s).unwrap()).unwrap();
            assert!((got - expected).abs() < 1e-8, "V={v}: {got} vs {expected}");
        }
    }

    #[test]
    fn settings_serde_roundtrip() {
        let s =
            Settings::chsh_default(strength(0.25)).with_noise(NoiseModel::new(0.1, 0.3).unwrap());
        let back: Settings = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.id(), back.id());
        assert_ne!(s.id(), s.with_v(strength(0.26)).id());
    }
}
