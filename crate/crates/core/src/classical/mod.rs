//! Sequential classical protocols with bounded forward communication.
//!
//! A protocol is an ordered list of stage functions. Stage k reads its own
//! input `X_k` and the incoming message, and produces its output `Y_k` plus
//! the outgoing message. Stage functions are finite lookup tables, not
//! callbacks, so they can be enumerated by the protocol search, probed
//! pointwise by the adversary, and serialized into certificates. Randomized
//! strategies are modeled as deterministic tables selected by a seed.

pub mod search;
pub mod toner_bacon;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::{
    check_win, enumerate_promise_inputs, sample_promise_inputs, GameError, GameSpec, InputVector,
    OutputVector,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("stage budgets must all be at least 1 (size-1 alphabet means silence)")]
    EmptyAlphabet,

    #[error("expected {expected} stage budgets for n={n}, got {got}")]
    BudgetCount { expected: usize, got: usize, n: u32 },

    #[error("stage {stage} table has {got} entries, expected {expected}")]
    TableShape {
        stage: u32,
        expected: usize,
        got: usize,
    },

    #[error("stage {stage} table entry ({x}, {incoming}) -> ({output}, {message}) leaves its alphabet")]
    EntryOutOfAlphabet {
        stage: u32,
        x: u32,
        incoming: u32,
        output: u32,
        message: u32,
    },

    #[error("stage {stage} evaluated outside its alphabets: x={x}, incoming={incoming}")]
    AlphabetViolation { stage: u32, x: u32, incoming: u32 },

    #[error("protocol was built for {expected:?}, asked to run against {got:?}")]
    SpecMismatch { expected: GameSpec, got: GameSpec },

    #[error("setting {value} is not a multiple of pi/2 in {{0, pi/2}}")]
    NotTwoSetting { value: f64 },

    #[error("settings sum {sum} is not a multiple of pi (promise violation)")]
    PhasePromiseViolation { sum: f64 },

    #[error("search space or instance too large: {0}")]
    CapExceeded(String),

    #[error(transparent)]
    Game(#[from] GameError),
}

/// Per-stage outgoing message alphabet sizes `|M_1|, …, |M_{n−1}|`.
/// Size 1 means no communication; the bit cost of stage k is `log2 |M_k|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StageBudget(Vec<u32>);

impl StageBudget {
    pub fn from_sizes(sizes: Vec<u32>, spec: &GameSpec) -> Result<Self, ProtocolError> {
        if sizes.len() != (spec.n - 1) as usize {
            return Err(ProtocolError::BudgetCount {
                expected: (spec.n - 1) as usize,
                got: sizes.len(),
                n: spec.n,
            });
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(ProtocolError::EmptyAlphabet);
        }
        Ok(StageBudget(sizes))
    }

    /// All n−1 message alphabets share one size.
    pub fn uniform(spec: &GameSpec, size: u32) -> Result<Self, ProtocolError> {
        Self::from_sizes(vec![size; (spec.n - 1) as usize], spec)
    }

    pub fn sizes(&self) -> &[u32] {
        &self.0
    }

    /// Outgoing alphabet size of stage k (1-based); stage n sends nothing.
    pub fn outgoing_size(&self, stage: u32) -> u32 {
        if stage as usize > self.0.len() {
            1
        } else {
            self.0[stage as usize - 1]
        }
    }

    /// Incoming alphabet size of stage k (1-based); stage 1 receives nothing.
    pub fn incoming_size(&self, stage: u32) -> u32 {
        if stage == 1 {
            1
        } else {
            self.0[stage as usize - 2]
        }
    }

    /// Bit cost `log2 |M_k|` of stage k's outgoing message.
    pub fn bits(&self, stage: u32) -> f64 {
        f64::from(self.outgoing_size(stage)).log2()
    }
}

/// One stage-table entry: output and outgoing message. Serialized as
/// `[output, message]`.
pub type StageEntry = (u32, u32);

/// A deterministic sequential protocol as a list of stage lookup tables.
///
/// The table for stage k maps `(X_k, incoming message)` to
/// `(Y_k, outgoing message)`, stored row-major with index
/// `x · incoming_size + incoming`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolData", into = "ProtocolData")]
pub struct ClassicalProtocol {
    spec: GameSpec,
    budgets: StageBudget,
    tables: Vec<Vec<StageEntry>>,
}

/// Raw serialized form of [`ClassicalProtocol`]; validated on the way in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolData {
    pub spec: GameSpec,
    pub budgets: Vec<u32>,
    pub tables: Vec<Vec<StageEntry>>,
}

impl TryFrom<ProtocolData> for ClassicalProtocol {
    type Error = ProtocolError;
    fn try_from(data: ProtocolData) -> Result<Self, Self::Error> {
        let budgets = StageBudget::from_sizes(data.budgets, &data.spec)?;
        ClassicalProtocol::new(data.spec, budgets, data.tables)
    }
}

impl From<ClassicalProtocol> for ProtocolData {
    fn from(p: ClassicalProtocol) -> ProtocolData {
        ProtocolData {
            spec: p.spec,
            budgets: p.budgets.0,
            tables: p.tables,
        }
    }
}

impl ClassicalProtocol {
    pub fn new(
        spec: GameSpec,
        budgets: StageBudget,
        tables: Vec<Vec<StageEntry>>,
    ) -> Result<Self, ProtocolError> {
        if budgets.sizes().len() != (spec.n - 1) as usize {
            return Err(ProtocolError::BudgetCount {
                expected: (spec.n - 1) as usize,
                got: budgets.sizes().len(),
                n: spec.n,
            });
        }
        if tables.len() != spec.n as usize {
            return Err(ProtocolError::TableShape {
                stage: 0,
                expected: spec.n as usize,
                got: tables.len(),
            });
        }
        for (idx, table) in tables.iter().enumerate() {
            let stage = idx as u32 + 1;
            let expected = (spec.d * budgets.incoming_size(stage)) as usize;
            if table.len() != expected {
                return Err(ProtocolError::TableShape {
                    stage,
                    expected,
                    got: table.len(),
                });
            }
            let out_alphabet = budgets.outgoing_size(stage);
            for (slot, &(output, message)) in table.iter().enumerate() {
                if output >= spec.m || message >= out_alphabet {
                    let incoming_size = budgets.incoming_size(stage);
                    return Err(ProtocolError::EntryOutOfAlphabet {
                        stage,
                        x: slot as u32 / incoming_size,
                        incoming: slot as u32 % incoming_size,
                        output,
                        message,
                    });
                }
            }
        }
        Ok(ClassicalProtocol {
            spec,
            budgets,
            tables,
        })
    }

    /// All-zero outputs and messages.
    pub fn constant_zero(spec: GameSpec, budgets: StageBudget) -> Result<Self, ProtocolError> {
        let tables = (1..=spec.n)
            .map(|stage| vec![(0, 0); (spec.d * budgets.incoming_size(stage)) as usize])
            .collect();
        Self::new(spec, budgets, tables)
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn budgets(&self) -> &StageBudget {
        &self.budgets
    }

    pub fn tables(&self) -> &[Vec<StageEntry>] {
        &self.tables
    }

    /// Evaluates stage k (1-based) on `(x, incoming)`.
    pub fn stage_eval(&self, stage: u32, x: u32, incoming: u32) -> Result<StageEntry, ProtocolError> {
        let incoming_size = self.budgets.incoming_size(stage);
        if stage < 1 || stage > self.spec.n || x >= self.spec.d || incoming >= incoming_size {
            return Err(ProtocolError::AlphabetViolation { stage, x, incoming });
        }
        Ok(self.tables[stage as usize - 1][(x * incoming_size + incoming) as usize])
    }
}

/// Full record of one protocol run: input, all messages (`M_0 = 0` before
/// stage 1 through `M_n = 0` after stage n), and outputs. Replaying the
/// protocol on the input reproduces messages and outputs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub input: InputVector,
    pub messages: Vec<u32>,
    pub output: OutputVector,
}

/// Runs the protocol on a well-formed input (the promise is deliberately not
/// required: the adversary probes stage functions pointwise).
pub fn run_protocol(p: &ClassicalProtocol, x: &InputVector) -> Result<Transcript, ProtocolError> {
    x.validate(&p.spec)?;
    let mut messages = Vec::with_capacity(p.spec.n as usize + 1);
    messages.push(0u32);
    let mut outputs = Vec::with_capacity(p.spec.n as usize);
    let mut incoming = 0u32;
    for (idx, &xk) in x.values().iter().enumerate() {
        let stage = idx as u32 + 1;
        let (y, outgoing) = p.stage_eval(stage, xk, incoming)?;
        outputs.push(y);
        messages.push(outgoing);
        incoming = outgoing;
    }
    Ok(Transcript {
        input: x.clone(),
        messages,
        output: OutputVector::new(outputs, &p.spec)?,
    })
}

/// How to verify a protocol against its game.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum VerifyMode {
    Exhaustive { cap: u64 },
    Sampled { count: u64, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub total: u64,
    pub wins: u64,
    pub win_rate: f64,
    /// Earliest failing input in enumeration (or sampling) order.
    pub first_failure: Option<InputVector>,
}

/// Win rate over promise inputs, exhaustive or sampled.
pub fn verify_protocol(
    p: &ClassicalProtocol,
    spec: &GameSpec,
    mode: VerifyMode,
) -> Result<VerificationReport, ProtocolError> {
    if *spec != p.spec {
        return Err(ProtocolError::SpecMismatch {
            expected: p.spec,
            got: *spec,
        });
    }
    let inputs = match mode {
        VerifyMode::Exhaustive { cap } => enumerate_promise_inputs(spec, u128::from(cap))?,
        VerifyMode::Sampled { count, seed } => sample_promise_inputs(spec, count, seed),
    };
    let mut wins = 0u64;
    let mut first_failure = None;
    for x in &inputs {
        let transcript = run_protocol(p, x)?;
        if check_win(x, &transcript.output, spec)? {
            wins += 1;
        } else if first_failure.is_none() {
            first_failure = Some(x.clone());
        }
    }
    let total = inputs.len() as u64;
    Ok(VerificationReport {
        total,
        wins,
        win_rate: wins as f64 / total as f64,
        first_failure,
    })
}

/// The one-bit carry protocol for the modulo-(2,2) game on n stages: each
/// stage forwards the running input parity and outputs 1 exactly when its
/// input and the incoming parity are both 1 (a carry into the twos place).
/// It maintains `Σ_{i≤j} X_i = M_j + 2·Σ_{i≤j} Y_i` on every prefix, so under
/// the promise the final message is 0 and the outputs win with certainty.
pub fn one_bit_carry_protocol(n: u32) -> Result<ClassicalProtocol, ProtocolError> {
    let spec = GameSpec::new(n, 2, 2)?;
    let budgets = StageBudget::uniform(&spec, 2)?;
    let tables = (1..=n)
        .map(|stage| {
            let incoming_size = spec.d * budgets.incoming_size(stage);
            (0..incoming_size)
                .map(|slot| {
                    let x = slot / budgets.incoming_size(stage);
                    let incoming = slot % budgets.incoming_size(stage);
                    let y = u32::from(x == 1 && incoming == 1);
                    let outgoing = if stage == n { 0 } else { (x + incoming) % 2 };
                    (y, outgoing)
                })
                .collect()
        })
        .collect();
    ClassicalProtocol::new(spec, budgets, tables)
}

/// GHZ-paradox wrapper over the carry protocol: two-setting phases
/// `φ_k ∈ {0, π/2}` map to bits `X_k = 2φ_k/π`; under the promise
/// (`Σφ` a multiple of π) the returned product `Π (−1)^{Y_k}` equals
/// `cos(Σφ)` exactly. Single-point expectation values are deliberately not
/// modeled.
pub fn ghz_paradox_one_bit_correlation(phases: &[f64]) -> Result<f64, ProtocolError> {
    const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;
    const TOL: f64 = 1e-9;
    let n = phases.len() as u32;
    if n < 3 {
        return Err(ProtocolError::CapExceeded(format!(
            "need at least 3 settings, got {n}"
        )));
    }
    let mut bits = Vec::with_capacity(phases.len());
    for &phi in phases {
        if phi.abs() < TOL {
            bits.push(0u32);
        } else if (phi - HALF_PI).abs() < TOL {
            bits.push(1u32);
        } else {
            return Err(ProtocolError::NotTwoSetting { value: phi });
        }
    }
    let sum: u32 = bits.iter().sum();
    if sum % 2 != 0 {
        return Err(ProtocolError::PhasePromiseViolation {
            sum: phases.iter().sum(),
        });
    }
    let protocol = one_bit_carry_protocol(n)?;
    let x = InputVector::new(bits, protocol.spec())?;
    let transcript = run_protocol(&protocol, &x)?;
    let product: f64 = transcript
        .output
        .values()
        .iter()
        .map(|&y| if y == 0 { 1.0 } else { -1.0 })
        .product();
    Ok(product)
}

/// Uniformly random valid stage tables; deterministic given the seed.
pub fn random_protocol(spec: &GameSpec, budgets: &StageBudget, seed: u64) -> ClassicalProtocol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tables = (1..=spec.n)
        .map(|stage| {
            let entries = (spec.d * budgets.incoming_size(stage)) as usize;
            let out_alphabet = budgets.outgoing_size(stage);
            (0..entries)
                .map(|_| (rng.gen_range(0..spec.m), rng.gen_range(0..out_alphabet)))
                .collect()
        })
        .collect();
    ClassicalProtocol::new(*spec, budgets.clone(), tables)
        .expect("randomly drawn tables stay inside their alphabets")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;
    use std::collections::HashSet;
    use std::hash::{Hash, Hasher};

    fn spec(n: u32, m: u32, d: u32) -> GameSpec {
        GameSpec::new(n, m, d).unwrap()
    }

    fn input(values: &[u32], s: &GameSpec) -> InputVector {
        InputVector::new(values.to_vec(), s).unwrap()
    }

    #[test]
    fn carry_protocol_hand_traces() {
        let p = one_bit_carry_protocol(3).unwrap();
        let s = *p.spec();

        let t = run_protocol(&p, &input(&[1, 1, 0], &s)).unwrap();
        assert_eq!(t.messages, vec![0, 1, 0, 0]);
        assert_eq!(t.output.values(), &[0, 1, 0]);

        let t = run_protocol(&p, &input(&[1, 0, 1], &s)).unwrap();
        assert_eq!(t.output.values(), &[0, 0, 1]);

        let t = run_protocol(&p, &input(&[0, 0, 0], &s)).unwrap();
        assert_eq!(t.output.values(), &[0, 0, 0]);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = one_bit_carry_protocol(5).unwrap();
        let x = input(&[1, 0, 1, 1, 1], p.spec());
        assert_eq!(run_protocol(&p, &x).unwrap(), run_protocol(&p, &x).unwrap());
    }

    #[test]
    fn constant_protocol_outputs_zeros_everywhere() {
        let s = spec(4, 3, 3);
        let budgets = StageBudget::uniform(&s, 2).unwrap();
        let p = ClassicalProtocol::constant_zero(s, budgets).unwrap();
        let t = run_protocol(&p, &input(&[2, 1, 0, 2], &s)).unwrap();
        assert_eq!(t.output.values(), &[0, 0, 0, 0]);
        assert!(t.messages.iter().all(|&m| m == 0));
    }

    #[test]
    fn carry_prefix_invariant_holds_on_and_off_promise() {
        // Σ_{i≤j} X_i = m_j + 2·Σ_{i≤j} Y_i for every prefix of every input,
        // where m_j is the running parity the protocol forwards. The last
        // stage's transcript slot is pinned to 0 by the alphabet contract, so
        // the parity is tracked independently there; on promise they agree.
        for n in [2u32, 3, 6] {
            let p = one_bit_carry_protocol(n).unwrap();
            let s = *p.spec();
            for raw in 0..(1u32 << n) {
                let values: Vec<u32> = (0..n).map(|k| (raw >> k) & 1).collect();
                let x = input(&values, &s);
                let t = run_protocol(&p, &x).unwrap();
                let mut x_sum = 0u32;
                let mut y_sum = 0u32;
                for j in 0..n as usize {
                    x_sum += t.input.values()[j];
                    y_sum += t.output.values()[j];
                    let parity = x_sum % 2;
                    assert_eq!(x_sum, parity + 2 * y_sum, "prefix {} of {:?}", j + 1, values);
                    if j + 1 < n as usize {
                        assert_eq!(t.messages[j + 1], parity);
                    }
                }
                assert_eq!(*t.messages.last().unwrap(), 0);
                if x_sum % 2 == 0 {
                    // on promise the forced 0 coincides with the true parity
                    assert_eq!(x_sum, 2 * y_sum);
                }
            }
        }
    }

    #[test]
    fn carry_protocol_wins_exhaustively() {
        for n in [3u32, 7, 12] {
            let p = one_bit_carry_protocol(n).unwrap();
            let report =
                verify_protocol(&p, p.spec(), VerifyMode::Exhaustive { cap: 1 << 20 }).unwrap();
            assert_eq!(report.win_rate, 1.0, "n={n}");
            assert_eq!(report.total, 1 << (n - 1));
            assert!(report.first_failure.is_none());
        }
    }

    #[test]
    fn constant_zero_wins_quarter_of_promise_inputs_on_3_2_2() {
        // Exhaustive count: of the 4 promise inputs only (0,0,0) has
        // ΣX ≡ 0 mod 4, and the all-zero output wins exactly there.
        let s = spec(3, 2, 2);
        let p =
            ClassicalProtocol::constant_zero(s, StageBudget::uniform(&s, 2).unwrap()).unwrap();
        let report = verify_protocol(&p, &s, VerifyMode::Exhaustive { cap: 16 }).unwrap();
        assert_eq!(report.total, 4);
        assert_eq!(report.wins, 1);
        assert_eq!(report.win_rate, 0.25);
        assert_eq!(report.first_failure, Some(input(&[0, 1, 1], &s)));
    }

    #[test]
    fn verify_rejects_mismatched_spec() {
        let p = one_bit_carry_protocol(3).unwrap();
        let other = spec(3, 2, 4);
        assert!(matches!(
            verify_protocol(&p, &other, VerifyMode::Exhaustive { cap: 64 }),
            Err(ProtocolError::SpecMismatch { .. })
        ));
    }

    #[test]
    fn sampled_verification_agrees_with_exhaustive_for_winner() {
        let p = one_bit_carry_protocol(9).unwrap();
        let report = verify_protocol(
            &p,
            p.spec(),
            VerifyMode::Sampled {
                count: 500,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(report.win_rate, 1.0);
    }

    #[test]
    fn ghz_paradox_correlation_is_exact_cosine() {
        use std::f64::consts::FRAC_PI_2;
        assert_eq!(ghz_paradox_one_bit_correlation(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(
            ghz_paradox_one_bit_correlation(&[FRAC_PI_2, FRAC_PI_2, 0.0]).unwrap(),
            -1.0
        );
        assert_eq!(
            ghz_paradox_one_bit_correlation(&[FRAC_PI_2, 0.0, FRAC_PI_2]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn ghz_paradox_rejects_bad_settings() {
        use std::f64::consts::FRAC_PI_2;
        assert!(matches!(
            ghz_paradox_one_bit_correlation(&[0.3, 0.0, 0.0]),
            Err(ProtocolError::NotTwoSetting { .. })
        ));
        assert!(matches!(
            ghz_paradox_one_bit_correlation(&[FRAC_PI_2, 0.0, 0.0]),
            Err(ProtocolError::PhasePromiseViolation { .. })
        ));
    }

    #[test]
    fn random_protocols_are_valid_and_seed_deterministic() {
        let s = spec(6, 2, 8);
        let budgets = StageBudget::uniform(&s, 2).unwrap();
        let a = random_protocol(&s, &budgets, 11);
        let b = random_protocol(&s, &budgets, 11);
        assert_eq!(a, b);

        let mut hashes = HashSet::new();
        for seed in 0..100u64 {
            let p = random_protocol(&s, &budgets, seed);
            let mut hasher = DefaultHasher::new();
            p.tables().hash(&mut hasher);
            hashes.insert(hasher.finish());
        }
        assert_eq!(hashes.len(), 100, "seed collisions in random tables");
    }

    #[test]
    fn protocol_construction_rejects_bad_tables() {
        let s = spec(3, 2, 2);
        let budgets = StageBudget::uniform(&s, 2).unwrap();
        // output 2 is outside m=2
        let mut tables = vec![
            vec![(0u32, 0u32), (0, 1)],
            vec![(0, 0); 4],
            vec![(0, 0); 4],
        ];
        tables[1][2] = (2, 0);
        assert!(matches!(
            ClassicalProtocol::new(s, budgets.clone(), tables),
            Err(ProtocolError::EntryOutOfAlphabet { stage: 2, .. })
        ));

        let short = vec![vec![(0, 0); 2], vec![(0, 0); 4]];
        assert!(matches!(
            ClassicalProtocol::new(s, budgets, short),
            Err(ProtocolError::TableShape { .. })
        ));
    }

    #[test]
    fn protocol_json_roundtrip_revalidates() {
        let p = one_bit_carry_protocol(4).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ClassicalProtocol = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);

        // corrupt an entry beyond its alphabet and watch deserialization fail
        let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
        value["tables"][0][0][0] = serde_json::json!(9);
        let bad = serde_json::from_value::<ClassicalProtocol>(value);
        assert!(bad.is_err());
    }

    #[test]
    fn transcripts_never_leave_declared_alphabets() {
        let s = spec(5, 3, 4);
        let budgets =
            StageBudget::from_sizes(vec![2, 3, 1, 4], &s).unwrap();
        for seed in 0..20u64 {
            let p = random_protocol(&s, &budgets, seed);
            for x in sample_promise_inputs(&s, 16, seed ^ 0xa5) {
                let t = run_protocol(&p, &x).unwrap();
                assert_eq!(t.messages[0], 0);
                assert_eq!(*t.messages.last().unwrap(), 0);
                for stage in 1..=s.n {
                    assert!(t.messages[stage as usize] < budgets.outgoing_size(stage));
                }
            }
        }
    }
}
