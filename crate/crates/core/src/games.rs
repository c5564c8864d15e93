//! The sequential modulo-(m,d) game: instance parameters, promise and winning
//! predicates, and promise-input enumeration/sampling.
//!
//! An instance has `n` ordered parties. Party `k` receives an input
//! `X_k ∈ {0, …, d−1}` under the promise `Σ X_k ≡ 0 (mod d)` and must emit an
//! output `Y_k ∈ {0, …, m−1}`. The run is won when
//! `d · Σ Y_k ≡ Σ X_k (mod m·d)`.
//!
//! Inputs and outputs are residues, not bit strings: an alphabet of size `d`
//! carries `log2 d` bits without forcing `d` to be a power of two. The win
//! predicate is undefined off-promise, so [`check_win`] rejects off-promise
//! inputs instead of scoring them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid game spec: need n >= 2, m >= 2, d >= 2, got n={n}, m={m}, d={d}")]
    InvalidSpec { n: u32, m: u32, d: u32 },

    #[error("vector has length {got}, spec requires {expected}")]
    WrongLength { got: usize, expected: usize },

    #[error("entry {value} at position {index} is outside the alphabet 0..{alphabet}")]
    EntryOutOfRange {
        index: usize,
        value: u32,
        alphabet: u32,
    },

    #[error("input violates the promise: sum {sum} is not 0 mod {d}")]
    PromiseViolation { sum: u64, d: u32 },

    #[error("instance too large: {count} promise inputs exceed cap {cap}; use sampling")]
    InstanceTooLarge { count: u128, cap: u128 },
}

/// Parameters (n, m, d) of one sequential modulo-(m,d) instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameSpec {
    /// Number of sequential stages (parties).
    pub n: u32,
    /// Output alphabet size; also the dimension of the quantum system.
    pub m: u32,
    /// Input alphabet size.
    pub d: u32,
}

impl GameSpec {
    pub fn new(n: u32, m: u32, d: u32) -> Result<Self, GameError> {
        if n < 2 || m < 2 || d < 2 {
            return Err(GameError::InvalidSpec { n, m, d });
        }
        Ok(GameSpec { n, m, d })
    }

    /// The winning-predicate modulus m·d.
    pub fn modulus(&self) -> u64 {
        u64::from(self.m) * u64::from(self.d)
    }

    /// True when the communication lower bound applies to this instance:
    /// `d` an integer power of two and `m` even.
    pub fn lower_bound_applicable(&self) -> bool {
        self.d.is_power_of_two() && self.m % 2 == 0
    }

    /// Number of promise inputs, `d^(n−1)`, or `None` on u128 overflow.
    pub fn promise_input_count(&self) -> Option<u128> {
        let d = u128::from(self.d);
        (1..self.n).try_fold(1u128, |acc, _| acc.checked_mul(d))
    }
}

/// Inputs `X_1..X_n`, each in `{0, …, d−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputVector(Vec<u32>);

/// Outputs `Y_1..Y_n`, each in `{0, …, m−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputVector(Vec<u32>);

fn validate_entries(values: &[u32], n: u32, alphabet: u32) -> Result<(), GameError> {
    if values.len() != n as usize {
        return Err(GameError::WrongLength {
            got: values.len(),
            expected: n as usize,
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if value >= alphabet {
            return Err(GameError::EntryOutOfRange {
                index,
                value,
                alphabet,
            });
        }
    }
    Ok(())
}

impl InputVector {
    pub fn new(values: Vec<u32>, spec: &GameSpec) -> Result<Self, GameError> {
        validate_entries(&values, spec.n, spec.d)?;
        Ok(InputVector(values))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn validate(&self, spec: &GameSpec) -> Result<(), GameError> {
        validate_entries(&self.0, spec.n, spec.d)
    }
}

impl OutputVector {
    pub fn new(values: Vec<u32>, spec: &GameSpec) -> Result<Self, GameError> {
        validate_entries(&values, spec.n, spec.m)?;
        Ok(OutputVector(values))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn validate(&self, spec: &GameSpec) -> Result<(), GameError> {
        validate_entries(&self.0, spec.n, spec.m)
    }
}

/// True iff `Σ X_k ≡ 0 (mod d)`.
pub fn check_promise(x: &InputVector, spec: &GameSpec) -> Result<bool, GameError> {
    x.validate(spec)?;
    Ok(x.sum() % u64::from(spec.d) == 0)
}

/// True iff `d · Σ Y_k ≡ Σ X_k (mod m·d)`.
///
/// The game is a promise problem: calling this with an off-promise input is
/// an error, not a loss, so callers cannot silently score off-promise runs.
pub fn check_win(x: &InputVector, y: &OutputVector, spec: &GameSpec) -> Result<bool, GameError> {
    x.validate(spec)?;
    y.validate(spec)?;
    if !check_promise(x, spec)? {
        return Err(GameError::PromiseViolation {
            sum: x.sum(),
            d: spec.d,
        });
    }
    let md = spec.modulus();
    Ok((u64::from(spec.d) * y.sum()) % md == x.sum() % md)
}

/// The unique value in `{0, …, d−1}` completing `partial_sum` to `0 mod d`.
pub fn promise_completion(partial_sum: u64, d: u32) -> u32 {
    let d = u64::from(d);
    ((d - partial_sum % d) % d) as u32
}

/// All `d^(n−1)` promise inputs, in lexicographic order of the first `n−1`
/// entries; the last entry is the forced completion.
pub fn enumerate_promise_inputs(spec: &GameSpec, cap: u128) -> Result<Vec<InputVector>, GameError> {
    let count = spec.promise_input_count();
    match count {
        Some(c) if c <= cap => {}
        _ => {
            return Err(GameError::InstanceTooLarge {
                count: count.unwrap_or(u128::MAX),
                cap,
            })
        }
    }
    let free = (spec.n - 1) as usize;
    let mut digits = vec![0u32; free];
    let mut out = Vec::with_capacity(count.unwrap() as usize);
    loop {
        let partial: u64 = digits.iter().map(|&v| u64::from(v)).sum();
        let mut values = digits.clone();
        values.push(promise_completion(partial, spec.d));
        out.push(InputVector(values));

        // odometer increment on the free digits, most significant first
        let mut pos = free;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < spec.d {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Draws `count` inputs uniformly from the promise set: the first `n−1`
/// entries are uniform and the last is the forced completion. Deterministic
/// given `seed`.
pub fn sample_promise_inputs(spec: &GameSpec, count: u64, seed: u64) -> Vec<InputVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut values: Vec<u32> = (1..spec.n).map(|_| rng.gen_range(0..spec.d)).collect();
            let partial: u64 = values.iter().map(|&v| u64::from(v)).sum();
            values.push(promise_completion(partial, spec.d));
            InputVector(values)
        })
        .collect()
}
