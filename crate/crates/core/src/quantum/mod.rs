//! Exact quantum simulation of the modulo-(m,d) game.
//!
//! Two independent routes compute the joint outcome distribution:
//!
//! * [`spatial_outcome_distribution`] — full state-vector simulation of the
//!   n-party protocol: prepare the GHZ state, apply `F† S^X` on every factor,
//!   read the computational-basis distribution.
//! * [`temporal_outcome_distribution`] — single m-level system measured n
//!   times with diagonal Kraus operators; outcome paths are enumerated and
//!   each path amplitude is `⟨+| K_n ··· K_1 |+⟩` with probability
//!   `m · |amplitude|²` (the boundary vectors and the factor m come from the
//!   GHZ bond representation).
//!
//! The two must agree; [`audit_constructions`] measures that agreement per
//! operator construction and reports normalization failures instead of
//! renormalizing.

pub mod bloch;
pub mod kraus;
pub mod linalg;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::games::{
    check_promise, check_win, enumerate_promise_inputs, GameError, GameSpec, InputVector,
    OutputVector,
};
use kraus::{fourier_matrix, phase_matrix, KrausConstruction};
use linalg::PureState;

/// Tolerance for total probability mass and distribution comparisons.
pub const MASS_TOL: f64 = 1e-9;

/// Probabilities below this are clamped to zero when serializing
/// distributions; internal arithmetic is never clamped.
pub const SERIALIZE_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("instance needs {required} amplitudes/paths, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("state norm {norm} is not 1 within {tol}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error(
        "outcome mass {mass} deviates from 1 by more than {tol}: \
         the operator construction does not define a distribution"
    )]
    ConstructionFailure { mass: f64, tol: f64 },

    #[error("no closed-form operator table for even m={0} (tables cover m = 2, 4, 6)")]
    NoOperatorTable(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Game(#[from] GameError),
}

/// Resource caps for exact simulation.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Max state-vector length `m^n` for the spatial simulation.
    pub max_amplitudes: u128,
    /// Max outcome paths `m^n` for the temporal simulation, and max branches
    /// for the qubit projective chain.
    pub max_paths: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_amplitudes: 1 << 20,
            max_paths: 1 << 20,
        }
    }
}

/// Joint probability distribution over output vectors.
#[derive(Debug, Clone, Default)]
pub struct OutcomeDistribution {
    probs: BTreeMap<OutputVector, f64>,
}

impl OutcomeDistribution {
    pub fn from_entries(entries: impl IntoIterator<Item = (OutputVector, f64)>) -> Self {
        OutcomeDistribution {
            probs: entries.into_iter().collect(),
        }
    }

    /// Point mass on a single outcome.
    pub fn point_mass(outcome: OutputVector) -> Self {
        Self::from_entries([(outcome, 1.0)])
    }

    /// Uniform distribution over all m^n outcomes.
    pub fn uniform(spec: &GameSpec) -> Self {
        let total = (spec.m as u128).pow(spec.n);
        let p = 1.0 / total as f64;
        let mut probs = BTreeMap::new();
        let mut digits = vec![0u32; spec.n as usize];
        loop {
            probs.insert(OutputVector::new(digits.clone(), spec).unwrap(), p);
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return OutcomeDistribution { probs };
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < spec.m {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    pub fn probability(&self, outcome: &OutputVector) -> f64 {
        self.probs.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutputVector, f64)> {
        self.probs.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Sup-norm distance, treating missing outcomes as probability 0.
    pub fn sup_distance(&self, other: &OutcomeDistribution) -> f64 {
        let mut worst = 0.0f64;
        for (outcome, p) in self.iter() {
            worst = worst.max((p - other.probability(outcome)).abs());
        }
        for (outcome, q) in other.iter() {
            worst = worst.max((self.probability(outcome) - q).abs());
        }
        worst
    }
}

// JSON map from comma-joined outcome strings ("0,1,0") to probabilities.
impl Serialize for OutcomeDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let visible: Vec<(String, f64)> = self
            .probs
            .iter()
            .filter(|(_, &p)| p >= SERIALIZE_CLAMP)
            .map(|(outcome, &p)| {
                let key = outcome
                    .values()
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, p)
            })
            .collect();
        let mut map = serializer.serialize_map(Some(visible.len()))?;
        for (key, p) in visible {
            map.serialize_entry(&key, &p)?;
        }
        map.end()
    }
}

/// GHZ state on `n` factors of dimension `m`: amplitude `1/√m` on the `m`
/// all-equal basis states.
pub fn ghz_state(n: u32, m: u32, limits: &Limits) -> Result<PureState, QuantumError> {
    if n < 1 || m < 2 {
        return Err(QuantumError::InvalidParameter(format!(
            "need n >= 1 and m >= 2, got n={n}, m={m}"
        )));
    }
    let dim = (m as u128)
        .checked_pow(n)
        .filter(|&dim| dim <= limits.max_amplitudes)
        .ok_or(QuantumError::CapExceeded {
            required: (m as u128).saturating_pow(n),
            cap: limits.max_amplitudes,
        })?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim as usize];
    let amp = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    // |i⟩^⊗n has index i·(m^n − 1)/(m − 1) = i·Σ m^k
    let stride: u128 = (0..n).map(|k| (m as u128).pow(k)).sum();
    for i in 0..m as u128 {
        amplitudes[(i * stride) as usize] = amp;
    }
    PureState::new(amplitudes)
}

/// Full state-vector simulation of the n-party protocol: applies `F† S^{X_k}`
/// on factor k of the GHZ state and returns the computational-basis joint
/// distribution. Requires the promise.
pub fn spatial_outcome_distribution(
    spec: &GameSpec,
    x: &InputVector,
    limits: &Limits,
) -> Result<OutcomeDistribution, QuantumError> {
    if !check_promise(x, spec)? {
        return Err(GameError::PromiseViolation {
            sum: x.sum(),
            d: spec.d,
        }
        .into());
    }
    let mut state = ghz_state(spec.n, spec.m, limits)?;
    let fourier_dagger = fourier_matrix(spec.m).dagger();
    for (site, &setting) in x.values().iter().enumerate() {
        let local = fourier_dagger.mul(&phase_matrix(spec.m, spec.d, setting))?;
        state.apply_single_site(&local, site, spec.m as usize, spec.n as usize)?;
    }

    let m = spec.m as usize;
    let n = spec.n as usize;
    let probs = state
        .probabilities()
        .into_iter()
        .enumerate()
        .map(|(index, p)| {
            let mut digits = vec![0u32; n];
            let mut rest = index;
            for pos in (0..n).rev() {
                digits[pos] = (rest % m) as u32;
                rest /= m;
            }
            (OutputVector::new(digits, spec).unwrap(), p)
        })
        .collect::<BTreeMap<_, _>>();

    let dist = OutcomeDistribution { probs };
    let mass = dist.total_mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(QuantumError::NotNormalized {
            norm: mass,
            tol: MASS_TOL,
        });
    }
    Ok(dist)
}

/// Sequential Kraus-chain simulation on a single m-level system.
///
/// Enumerates all `m^n` outcome paths; for the path `Y`, the probability is
/// `m · |⟨+| K_{Y_n} ··· K_{Y_1} |+⟩|²` where `|+⟩` is the uniform
/// superposition and `K^{(k)}` comes from `construction` at setting `X_k`.
/// A total mass off 1 by more than [`MASS_TOL`] is reported as
/// [`QuantumError::ConstructionFailure`], never silently renormalized.
pub fn temporal_outcome_distribution(
    spec: &GameSpec,
    x: &InputVector,
    construction: KrausConstruction,
    limits: &Limits,
) -> Result<OutcomeDistribution, QuantumError> {
    if !check_promise(x, spec)? {
        return Err(GameError::PromiseViolation {
            sum: x.sum(),
            d: spec.d,
        }
        .into());
    }
    let paths = (spec.m as u128).checked_pow(spec.n);
    if !paths.is_some_and(|p| p <= limits.max_paths) {
        return Err(QuantumError::CapExceeded {
            required: paths.unwrap_or(u128::MAX),
            cap: limits.max_paths,
        });
    }

    // Per stage, per outcome: the operator diagonal.
    let mut stage_diagonals: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(spec.n as usize);
    for &setting in x.values() {
        let set = construction.build(spec.m, spec.d, setting)?;
        stage_diagonals.push(set.diagonals());
    }

    let m = spec.m as usize;
    let mut probs = BTreeMap::new();
    // ⟨+|D|+⟩ = (1/m)·Σ_i Π_k diag_k[i]; seed the running vector with 1/m.
    let seed = vec![Complex64::new(1.0 / m as f64, 0.0); m];
    let mut prefix: Vec<u32> = Vec::with_capacity(spec.n as usize);

    fn walk(
        stage_diagonals: &[Vec<Vec<Complex64>>],
        spec: &GameSpec,
        running: &[Complex64],
        prefix: &mut Vec<u32>,
        probs: &mut BTreeMap<OutputVector, f64>,
    ) {
        let stage = prefix.len();
        if stage == stage_diagonals.len() {
            let amplitude: Complex64 = running.iter().sum();
            let p = spec.m as f64 * amplitude.norm_sqr();
            probs.insert(OutputVector::new(prefix.clone(), spec).unwrap(), p);
            return;
        }
        for (outcome, diagonal) in stage_diagonals[stage].iter().enumerate() {
            let next: Vec<Complex64> = running
                .iter()
                .zip(diagonal)
                .map(|(r, d)| r * d)
                .collect();
            prefix.push(outcome as u32);
            walk(stage_diagonals, spec, &next, prefix, probs);
            prefix.pop();
        }
    }
    walk(&stage_diagonals, spec, &seed, &mut prefix, &mut probs);

    let dist = OutcomeDistribution { probs };
    let mass = dist.total_mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(QuantumError::ConstructionFailure {
            mass,
            tol: MASS_TOL,
        });
    }
    Ok(dist)
}

/// Total probability of winning outcomes under `distribution` for input `x`.
pub fn win_probability(
    distribution: &OutcomeDistribution,
    x: &InputVector,
    spec: &GameSpec,
) -> Result<f64, GameError> {
    let mut total = 0.0;
    for (outcome, p) in distribution.iter() {
        if check_win(x, outcome, spec)? {
            total += p;
        }
    }
    Ok(total)
}

/// `E[ω_m^{ΣY}] = Σ_Y P(Y)·exp(2πi·ΣY/m)`; for m = 2 this is the ±1 product
/// correlation of the outputs.
pub fn outcome_phase_expectation(distribution: &OutcomeDistribution, m: u32) -> Complex64 {
    distribution
        .iter()
        .map(|(outcome, p)| {
            Complex64::from_polar(
                p,
                2.0 * std::f64::consts::PI * outcome.sum() as f64 / f64::from(m),
            )
        })
        .sum()
}

/// Outcome of comparing one operator construction against the spatial
/// simulation over every promise input of a spec.
#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub spec: GameSpec,
    pub construction: KrausConstruction,
    /// All Kraus sets satisfied `Σ K†K = I` within tolerance.
    pub completeness_ok: bool,
    pub max_completeness_defect: f64,
    /// Every input produced total mass 1 within tolerance.
    pub normalized: bool,
    pub max_mass_defect: f64,
    /// Largest sup-norm distance to the spatial distribution over inputs that
    /// produced a distribution at all.
    pub max_sup_distance: f64,
    /// The construction reproduces the spatial distribution on every promise
    /// input within [`MASS_TOL`].
    pub matches_spatial: bool,
    pub first_failing_input: Option<InputVector>,
}

/// Compares each construction against the spatial oracle on every promise
/// input of `spec`. Reports what held and what failed; never assumes any
/// construction is valid.
pub fn audit_constructions(
    spec: &GameSpec,
    constructions: &[KrausConstruction],
    limits: &Limits,
) -> Result<Vec<AuditEntry>, QuantumError> {
    let inputs = enumerate_promise_inputs(spec, limits.max_paths)?;
    let spatial: Vec<OutcomeDistribution> = inputs
        .iter()
        .map(|x| spatial_outcome_distribution(spec, x, limits))
        .collect::<Result<_, _>>()?;

    let mut entries = Vec::with_capacity(constructions.len());
    for &construction in constructions {
        let mut max_completeness_defect = 0.0f64;
        let mut completeness_ok = true;
        for setting in 0..spec.d {
            let set = construction.build(spec.m, spec.d, setting)?;
            max_completeness_defect = max_completeness_defect.max(set.completeness_defect());
            completeness_ok &= set.is_complete();
        }

        let mut max_mass_defect = 0.0f64;
        let mut max_sup_distance = 0.0f64;
        let mut normalized = true;
        let mut matches_spatial = true;
        let mut first_failing_input = None;
        for (x, reference) in inputs.iter().zip(&spatial) {
            match temporal_outcome_distribution(spec, x, construction, limits) {
                Ok(dist) => {
                    max_mass_defect = max_mass_defect.max((dist.total_mass() - 1.0).abs());
                    let distance = dist.sup_distance(reference);
                    max_sup_distance = max_sup_distance.max(distance);
                    if distance > MASS_TOL {
                        matches_spatial = false;
                        first_failing_input.get_or_insert_with(|| x.clone());
                    }
                }
                Err(QuantumError::ConstructionFailure { mass, .. }) => {
                    normalized = false;
                    matches_spatial = false;
                    max_mass_defect = max_mass_defect.max((mass - 1.0).abs());
                    first_failing_input.get_or_insert_with(|| x.clone());
                }
                Err(other) => return Err(other),
            }
        }

        entries.push(AuditEntry {
            spec: *spec,
            construction,
            completeness_ok,
            max_completeness_defect,
            normalized,
            max_mass_defect,
            max_sup_distance,
            matches_spatial,
            first_failing_input,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::kraus::ExponentReading;
    use super::*;

    fn spec(n: u32, m: u32, d: u32) -> GameSpec {
        GameSpec::new(n, m, d).unwrap()
    }

    fn input(values: &[u32], s: &GameSpec) -> InputVector {
        InputVector::new(values.to_vec(), s).unwrap()
    }

    #[test]
    fn ghz_state_small_cases() {
        let limits = Limits::default();
        let bell = ghz_state(2, 2, &limits).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((bell.amplitudes()[0].re - s).abs() < 1e-15);
        assert!((bell.amplitudes()[3].re - s).abs() < 1e-15);
        assert_eq!(bell.amplitudes()[1], Complex64::new(0.0, 0.0));
        assert_eq!(bell.amplitudes()[2], Complex64::new(0.0, 0.0));

        let ghz33 = ghz_state(3, 3, &limits).unwrap();
        let nonzero = ghz33
            .amplitudes()
            .iter()
            .filter(|a| a.norm() > 0.0)
            .count();
        assert_eq!(nonzero, 3);
        assert!((ghz33.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_state_respects_cap() {
        let limits = Limits {
            max_amplitudes: 100,
            max_paths: 100,
        };
        assert!(matches!(
            ghz_state(10, 3, &limits),
            Err(QuantumError::CapExceeded { .. })
        ));
    }

    #[test]
    fn spatial_distribution_is_normalized_and_parity_constrained() {
        let s = spec(3, 2, 2);
        let limits = Limits::default();
        for x in enumerate_promise_inputs(&s, 16).unwrap() {
            let dist = spatial_outcome_distribution(&s, &x, &limits).unwrap();
            assert!((dist.total_mass() - 1.0).abs() < MASS_TOL);
            // all mass on winning outcomes
            for (y, p) in dist.iter() {
                if p > 1e-12 {
                    assert!(
                        check_win(&x, y, &s).unwrap(),
                        "losing outcome {:?} carries mass {p} at input {:?}",
                        y,
                        x
                    );
                }
            }
        }
    }

    #[test]
    fn spatial_rejects_off_promise_input() {
        let s = spec(3, 2, 2);
        let x = input(&[1, 0, 0], &s);
        assert!(matches!(
            spatial_outcome_distribution(&s, &x, &Limits::default()),
            Err(QuantumError::Game(GameError::PromiseViolation { .. }))
        ));
    }

    #[test]
    fn temporal_equals_spatial_on_small_specs() {
        let limits = Limits::default();
        for s in [spec(3, 2, 2), spec(3, 3, 3), spec(4, 2, 4)] {
            for x in enumerate_promise_inputs(&s, 256).unwrap() {
                let spatial = spatial_outcome_distribution(&s, &x, &limits).unwrap();
                let temporal =
                    temporal_outcome_distribution(&s, &x, KrausConstruction::Bond, &limits)
                        .unwrap();
                assert!(
                    spatial.sup_distance(&temporal) < MASS_TOL,
                    "distributions disagree at {:?} on {:?}",
                    x,
                    s
                );
            }
        }
    }

    #[test]
    fn temporal_wins_with_certainty() {
        let s = spec(3, 2, 2);
        let limits = Limits::default();
        let x = input(&[0, 0, 0], &s);
        let dist = temporal_outcome_distribution(&s, &x, KrausConstruction::Bond, &limits).unwrap();
        let p = win_probability(&dist, &x, &s).unwrap();
        assert!((p - 1.0).abs() < MASS_TOL);
    }

    #[test]
    fn uniform_distribution_wins_half_the_time_on_3_2_2() {
        // Oracle: exhaustive check_win count over all 8 outputs; 4 of 8 win
        // for every promise input, so the uniform win probability is 0.5.
        let s = spec(3, 2, 2);
        let uniform = OutcomeDistribution::uniform(&s);
        for x in enumerate_promise_inputs(&s, 16).unwrap() {
            let mut winning = 0u32;
            for (y, _) in uniform.iter() {
                if check_win(&x, y, &s).unwrap() {
                    winning += 1;
                }
            }
            assert_eq!(winning, 4, "at input {:?}", x);
            let p = win_probability(&uniform, &x, &s).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn point_mass_on_losing_outcome_scores_zero() {
        let s = spec(3, 2, 2);
        let x = input(&[1, 1, 0], &s);
        let losing = OutputVector::new(vec![0, 0, 0], &s).unwrap();
        assert!(!check_win(&x, &losing, &s).unwrap());
        let dist = OutcomeDistribution::point_mass(losing);
        assert_eq!(win_probability(&dist, &x, &s).unwrap(), 0.0);
    }

    #[test]
    fn phase_expectation_matches_cosine_of_summed_settings() {
        // m=2: E[(−1)^{ΣY}] = cos(π·ΣX/2) on promise inputs of (3,2,2).
        let s = spec(3, 2, 2);
        let limits = Limits::default();
        for (x_values, expected) in [([0u32, 0, 0], 1.0), ([1, 1, 0], -1.0), ([0, 1, 1], -1.0)] {
            let x = input(&x_values, &s);
            let dist = spatial_outcome_distribution(&s, &x, &limits).unwrap();
            let e = outcome_phase_expectation(&dist, s.m);
            assert!((e.re - expected).abs() < MASS_TOL, "at {:?}", x_values);
            assert!(e.im.abs() < MASS_TOL);
        }
    }

    #[test]
    fn phase_expectation_of_zero_point_mass_is_one() {
        let s = spec(3, 2, 2);
        let dist = OutcomeDistribution::point_mass(OutputVector::new(vec![0, 0, 0], &s).unwrap());
        let e = outcome_phase_expectation(&dist, s.m);
        assert!((e.re - 1.0).abs() < 1e-15 && e.im.abs() < 1e-15);
    }

    #[test]
    fn distribution_serializes_with_joined_keys() {
        let s = spec(3, 2, 2);
        let x = input(&[0, 0, 0], &s);
        let dist = spatial_outcome_distribution(&s, &x, &Limits::default()).unwrap();
        let json = serde_json::to_value(&dist).unwrap();
        let map = json.as_object().unwrap();
        assert!(map.contains_key("0,0,0"));
        // clamped: near-zero entries are dropped
        assert!(map.values().all(|v| v.as_f64().unwrap() >= SERIALIZE_CLAMP));
    }

    #[test]
    fn audit_reports_closed_form_verdicts() {
        let limits = Limits::default();
        let constructions = [
            KrausConstruction::Bond,
            KrausConstruction::ClosedForm(ExponentReading::PowerOfTwo),
            KrausConstruction::ClosedForm(ExponentReading::Linear),
        ];
        let entries = audit_constructions(&spec(3, 2, 2), &constructions, &limits).unwrap();
        assert_eq!(entries.len(), 3);
        let bond = &entries[0];
        assert!(bond.matches_spatial && bond.normalized && bond.completeness_ok);
        // Both literal readings fail on (3,2,2): their input phases live on
        // the wrong lattice, so off-diagonal promise inputs disagree.
        for entry in &entries[1..] {
            assert!(entry.completeness_ok);
            assert!(!entry.matches_spatial, "{:?}", entry.construction);
            assert!(entry.first_failing_input.is_some());
        }
    }
}
