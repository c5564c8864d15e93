//! Constructive refutation of under-communicating protocols.
//!
//! Any deterministic protocol that keeps its message alphabets below the
//! threshold `|M_k|·m < d` in enough stages cannot win with certainty when
//! `d` is a power of two and `m` is even. This module turns that argument
//! into an executable: walk the stages once, collect a pigeonhole collision
//! per sub-threshold stage, pick a subset of the collision gaps whose sum is
//! `≡ 0 (mod d)` but `≢ 0 (mod m·d)`, and emit two promise inputs with
//! identical transcripts that cannot both win — a certificate any third
//! party can replay.
//!
//! The subset selection needs only `m·d − 1` gaps: scanning the gaps while
//! tracking which residues subset sums reach, either some gap adds nothing
//! new (the reachable set is shift-invariant under it, so a suitable multiple
//! of that gap is already reachable), or every gap grows the set until all
//! `m·d` residues are reachable and residue `d` itself can be read off.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::{run_protocol, ClassicalProtocol, ProtocolError, StageBudget, Transcript};
use crate::games::{
    check_promise, check_win, promise_completion, GameError, GameSpec, InputVector,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("refutation not applicable: {reason}")]
    NotApplicable { reason: String },

    #[error("subset selection needs m even and d a power of two, got m={m}, d={d}")]
    UnsupportedParameters { m: u32, d: u32 },

    #[error("gap {value} at position {index} outside 1..{bound}")]
    DeltaOutOfRange { index: usize, value: u64, bound: u64 },

    #[error("subset selection needs at least {need} gaps, got {got}")]
    TooFewDeltas { need: usize, got: usize },

    #[error("modulus {md} exceeds the selection table cap {cap}")]
    ModulusTooLarge { md: u64, cap: u64 },

    #[error("{subsets} subsets exceed brute-force cap {cap}")]
    SubsetCapExceeded { subsets: u128, cap: u128 },

    #[error("no collision at stage {stage} for incoming message {incoming}; budget accounting is inconsistent")]
    NoCollision { stage: u32, incoming: u32 },

    #[error("internal invariant failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Game(#[from] GameError),
}

/// Two inputs at one stage that the protocol cannot tell apart: given the
/// same incoming message they produce the same output and outgoing message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub stage: u32,
    pub incoming_message: u32,
    pub input_low: u32,
    pub input_high: u32,
    /// `input_high − input_low`, in `{1, …, d−1}`.
    pub delta: u32,
    pub shared_output: u32,
    pub shared_message: u32,
}

/// Proof that a protocol fails: two promise inputs with identical outputs
/// whose input sums differ mod `m·d`, so at most one of them can win.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub spec: GameSpec,
    pub budgets: StageBudget,
    /// Sub-threshold stages the construction used (the first m·d of them).
    pub collision_stages: Vec<u32>,
    pub collisions: Vec<CollisionRecord>,
    /// Stages where the two inputs differ by the collision gap.
    pub shifted_stages: Vec<u32>,
    pub input_a: InputVector,
    pub input_b: InputVector,
    pub transcript_a: Transcript,
    pub transcript_b: Transcript,
}

/// How stages outside the collision set pick their inputs.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RefuteOptions {
    /// `None`: fill with 0 (reproducible default). `Some(seed)`: fill with
    /// seeded uniform draws, exercising the freedom the construction has.
    pub filler_seed: Option<u64>,
}

/// Stages 1..n−1 whose outgoing alphabet satisfies `|M_k|·m < d`, i.e. the
/// stage has strictly fewer than `d` joint (message, output) possibilities.
/// Stage n never carries a message and is handled by promise completion.
pub fn sub_threshold_stages(budgets: &StageBudget, spec: &GameSpec) -> Vec<u32> {
    (1..spec.n)
        .filter(|&k| u64::from(budgets.outgoing_size(k)) * u64::from(spec.m) < u64::from(spec.d))
        .collect()
}

/// Scans inputs `0..d` at one stage under a fixed incoming message and
/// returns the first collision, ordered by smallest higher input then
/// smallest lower input. Guaranteed to exist on sub-threshold stages.
pub fn find_collision(
    p: &ClassicalProtocol,
    stage: u32,
    incoming: u32,
) -> Result<CollisionRecord, AdversaryError> {
    let d = p.spec().d;
    let outcomes: Vec<(u32, u32)> = (0..d)
        .map(|x| p.stage_eval(stage, x, incoming))
        .collect::<Result<_, _>>()?;
    for high in 1..d as usize {
        for low in 0..high {
            if outcomes[low] == outcomes[high] {
                return Ok(CollisionRecord {
                    stage,
                    incoming_message: incoming,
                    input_low: low as u32,
                    input_high: high as u32,
                    delta: (high - low) as u32,
                    shared_output: outcomes[low].0,
                    shared_message: outcomes[low].1,
                });
            }
        }
    }
    Err(AdversaryError::NoCollision { stage, incoming })
}

const SELECTION_TABLE_CAP: u64 = 1 << 22;

fn validate_selection_parameters(
    deltas: &[u64],
    m: u32,
    d: u32,
) -> Result<(u64, u32), AdversaryError> {
    if m < 2 || m % 2 != 0 || d < 2 || !d.is_power_of_two() {
        return Err(AdversaryError::UnsupportedParameters { m, d });
    }
    let md = u64::from(m) * u64::from(d);
    if md > SELECTION_TABLE_CAP {
        return Err(AdversaryError::ModulusTooLarge {
            md,
            cap: SELECTION_TABLE_CAP,
        });
    }
    for (index, &value) in deltas.iter().enumerate() {
        if value == 0 || value >= md {
            return Err(AdversaryError::DeltaOutOfRange {
                index,
                value,
                bound: md,
            });
        }
    }
    Ok((md, d.trailing_zeros()))
}

fn subset_sum(deltas: &[u64], subset: &[usize]) -> u64 {
    subset.iter().map(|&i| deltas[i]).sum()
}

fn is_witness(sum: u64, d: u32, md: u64) -> bool {
    sum % u64::from(d) == 0 && sum % md != 0
}

/// Constructive selection of indices with `Σ Δ ≡ 0 (mod d)` and
/// `≢ 0 (mod m·d)`. Needs m even, d a power of two, and at least `m·d − 1`
/// gaps, each in `{1, …, m·d−1}`.
pub fn select_delta_subset(deltas: &[u64], m: u32, d: u32) -> Result<Vec<usize>, AdversaryError> {
    let (md, s) = validate_selection_parameters(deltas, m, d)?;
    let need = (md - 1) as usize;
    if deltas.len() < need {
        return Err(AdversaryError::TooFewDeltas {
            need,
            got: deltas.len(),
        });
    }

    // reached[residue] = one subset of indices realizing it (empty set for 0)
    let mut reached: Vec<Option<Vec<usize>>> = vec![None; md as usize];
    reached[0] = Some(Vec::new());
    let mut count = 1u64;

    let finish = |subset: Vec<usize>| -> Result<Vec<usize>, AdversaryError> {
        let sum = subset_sum(deltas, &subset);
        if subset.is_empty() || !is_witness(sum, d, md) {
            return Err(AdversaryError::Internal(format!(
                "selected subset {subset:?} with sum {sum} is not a witness"
            )));
        }
        Ok(subset)
    };

    for (index, &delta) in deltas.iter().enumerate() {
        let occupied: Vec<u64> = (0..md).filter(|&r| reached[r as usize].is_some()).collect();
        let mut grew = false;
        for r in occupied {
            let shifted = ((r + delta) % md) as usize;
            if reached[shifted].is_none() {
                let mut subset = reached[r as usize].clone().unwrap();
                subset.push(index);
                reached[shifted] = Some(subset);
                count += 1;
                grew = true;
            }
        }

        if !grew {
            // The reachable set is invariant under shifting by this gap, so
            // all of its multiples are reachable. Write delta = p·2^r with p
            // odd; for r < s the multiple 2^(s−r)·delta = p·d is the witness
            // value, and for r >= s the gap alone is divisible by d already.
            // Either way the value is realized by an already-recorded subset.
            let r = delta.trailing_zeros();
            let target = ((delta << s.saturating_sub(r)) % md) as usize;
            let subset = reached[target].clone().ok_or_else(|| {
                AdversaryError::Internal(format!(
                    "stabilized set is missing multiple {target} of gap {delta}"
                ))
            })?;
            return finish(subset);
        }

        if count == md {
            // every residue is reachable; read off residue d directly
            let subset = reached[d as usize].clone().ok_or_else(|| {
                AdversaryError::Internal("full reachable set is missing residue d".into())
            })?;
            return finish(subset);
        }
    }

    Err(AdversaryError::Internal(
        "no stabilization and no full reachable set despite md−1 gaps".into(),
    ))
}

/// Independent oracle for the subset selection: lexicographic depth-first
/// enumeration of subsets over the first `m·d` gaps (matching the window the
/// constructive method searches). Returns the first witness or `None`.
pub fn brute_force_delta_subset(
    deltas: &[u64],
    m: u32,
    d: u32,
    subset_cap: u128,
) -> Result<Option<Vec<usize>>, AdversaryError> {
    let (md, _) = validate_selection_parameters(deltas, m, d)?;
    let window = deltas.len().min(md as usize);
    let subsets = 1u128
        .checked_shl(window as u32)
        .ok_or(AdversaryError::SubsetCapExceeded {
            subsets: u128::MAX,
            cap: subset_cap,
        })?;
    if subsets > subset_cap {
        return Err(AdversaryError::SubsetCapExceeded {
            subsets,
            cap: subset_cap,
        });
    }

    fn dfs(
        deltas: &[u64],
        window: usize,
        start: usize,
        prefix: &mut Vec<usize>,
        sum: u64,
        d: u32,
        md: u64,
    ) -> Option<Vec<usize>> {
        for index in start..window {
            prefix.push(index);
            let extended = sum + deltas[index];
            if is_witness(extended, d, md) {
                return Some(prefix.clone());
            }
            if let Some(found) = dfs(deltas, window, index + 1, prefix, extended, d, md) {
                return Some(found);
            }
            prefix.pop();
        }
        None
    }

    Ok(dfs(deltas, window, 0, &mut Vec::new(), 0, d, md))
}

/// Builds a refutation certificate for `p`: walks the stages once keeping a
/// shared transcript, collides every windowed sub-threshold stage at its
/// realized incoming message, completes the promise at stage n, selects the
/// gap subset, and emits both inputs with replayed transcripts. All
/// certificate invariants are checked before returning.
pub fn refute(
    p: &ClassicalProtocol,
    spec: &GameSpec,
    options: RefuteOptions,
) -> Result<RefutationCertificate, AdversaryError> {
    if spec != p.spec() {
        return Err(ProtocolError::SpecMismatch {
            expected: *p.spec(),
            got: *spec,
        }
        .into());
    }
    if !spec.lower_bound_applicable() {
        return Err(AdversaryError::NotApplicable {
            reason: format!(
                "the bound requires d a power of two and m even, got m={}, d={}",
                spec.m, spec.d
            ),
        });
    }
    let md = spec.modulus();
    let all_sub_threshold = sub_threshold_stages(p.budgets(), spec);
    let need = (md - 1) as usize;
    if all_sub_threshold.len() < need {
        return Err(AdversaryError::NotApplicable {
            reason: format!(
                "only {} sub-threshold stages; the construction needs at least {} (m·d − 1)",
                all_sub_threshold.len(),
                need
            ),
        });
    }
    let window: BTreeSet<u32> = all_sub_threshold
        .iter()
        .copied()
        .take(md.min(u64::from(spec.n)) as usize)
        .collect();

    let mut filler_rng = options.filler_seed.map(ChaCha8Rng::seed_from_u64);

    let mut collisions: Vec<CollisionRecord> = Vec::with_capacity(window.len());
    let mut inputs_a: Vec<u32> = Vec::with_capacity(spec.n as usize);
    let mut message = 0u32;
    for stage in 1..=spec.n {
        let x = if stage == spec.n {
            let partial: u64 = inputs_a.iter().map(|&v| u64::from(v)).sum();
            promise_completion(partial, spec.d)
        } else if window.contains(&stage) {
            let collision = find_collision(p, stage, message)?;
            let x = collision.input_low;
            collisions.push(collision);
            x
        } else if let Some(rng) = filler_rng.as_mut() {
            rng.gen_range(0..spec.d)
        } else {
            0
        };
        let (_, outgoing) = p.stage_eval(stage, x, message)?;
        inputs_a.push(x);
        message = outgoing;
    }

    let deltas: Vec<u64> = collisions.iter().map(|c| u64::from(c.delta)).collect();
    let selected = select_delta_subset(&deltas, spec.m, spec.d)?;
    let shifted_stages: Vec<u32> = selected.iter().map(|&i| collisions[i].stage).collect();

    let mut inputs_b = inputs_a.clone();
    for &i in &selected {
        let stage_index = (collisions[i].stage - 1) as usize;
        inputs_b[stage_index] = collisions[i].input_high;
    }

    let input_a = InputVector::new(inputs_a, spec)?;
    let input_b = InputVector::new(inputs_b, spec)?;
    let transcript_a = run_protocol(p, &input_a)?;
    let transcript_b = run_protocol(p, &input_b)?;

    let certificate = RefutationCertificate {
        spec: *spec,
        budgets: p.budgets().clone(),
        collision_stages: window.into_iter().collect(),
        collisions,
        shifted_stages,
        input_a,
        input_b,
        transcript_a,
        transcript_b,
    };
    if !validate_certificate(&certificate, p, spec) {
        return Err(AdversaryError::Internal(
            "constructed certificate failed replay validation".into(),
        ));
    }
    Ok(certificate)
}

/// Independent replay check: re-runs the protocol on both inputs from
/// scratch and confirms every certificate invariant — both inputs on
/// promise, transcripts reproduced exactly, outputs identical, input sums
/// distinct mod m·d, and at least one input losing the game.
pub fn validate_certificate(
    cert: &RefutationCertificate,
    p: &ClassicalProtocol,
    spec: &GameSpec,
) -> bool {
    if spec != p.spec() || cert.spec != *spec {
        return false;
    }
    let on_promise = |x: &InputVector| check_promise(x, spec).unwrap_or(false);
    if !on_promise(&cert.input_a) || !on_promise(&cert.input_b) {
        return false;
    }
    let (replay_a, replay_b) = match (
        run_protocol(p, &cert.input_a),
        run_protocol(p, &cert.input_b),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    if replay_a != cert.transcript_a || replay_b != cert.transcript_b {
        return false;
    }
    if replay_a.output != replay_b.output {
        return false;
    }
    let md = spec.modulus();
    if cert.input_a.sum() % md == cert.input_b.sum() % md {
        return false;
    }
    let wins_a = check_win(&cert.input_a, &replay_a.output, spec).unwrap_or(false);
    let wins_b = check_win(&cert.input_b, &replay_b.output, spec).unwrap_or(false);
    !(wins_a && wins_b)
}
