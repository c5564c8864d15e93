//! Exhaustive search over stage tables for a protocol that wins with
//! certainty, or a proof that none exists within the declared space.
//!
//! The search backtracks stage by stage. After fixing the tables of a prefix
//! of stages, two promise inputs that share the current message and the same
//! remaining inputs are bound to identical future outputs, so they can only
//! both win if their prefix residues `d·ΣY − ΣX (mod md)` agree; a prefix
//! violating that is pruned as unwinnable. Every leaf reached is verified
//! against the full promise set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::games::{enumerate_promise_inputs, GameSpec, InputVector};
use super::{ClassicalProtocol, ProtocolError, StageBudget, StageEntry};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Max stage-table assignments tried before giving up.
    pub node_cap: u64,
    /// Max promise inputs enumerated for verification.
    pub input_cap: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            node_cap: 10_000_000,
            input_cap: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum SearchOutcome {
    /// A protocol winning every promise input, verified exhaustively.
    Winner { protocol: ClassicalProtocol },
    /// The whole space was enumerated (with sound pruning); no winner exists.
    NoneExists,
    /// The node cap was hit first; explicitly a partial result.
    CapExceeded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub spec: GameSpec,
    pub budgets: StageBudget,
    pub outcome: SearchOutcome,
    pub nodes_visited: u64,
    /// log2 of the number of protocols in the declared space.
    pub space_log2: f64,
    pub promise_inputs: u64,
}

/// Enumerates one stage's tables in lexicographic order.
struct TableCounter {
    digits: Vec<u32>,
    choices: u32,
    exhausted: bool,
}

impl TableCounter {
    fn new(slots: usize, choices: u32) -> Self {
        TableCounter {
            digits: vec![0; slots],
            choices,
            exhausted: false,
        }
    }

    fn table(&self, m: u32) -> Vec<StageEntry> {
        self.digits
            .iter()
            .map(|&digit| (digit % m, digit / m))
            .collect()
    }

    fn advance(&mut self) {
        for digit in self.digits.iter_mut().rev() {
            *digit += 1;
            if *digit < self.choices {
                return;
            }
            *digit = 0;
        }
        self.exhausted = true;
    }
}

struct Searcher<'a> {
    spec: GameSpec,
    budgets: &'a StageBudget,
    inputs: Vec<InputVector>,
    nodes: u64,
    node_cap: u64,
}

impl Searcher<'_> {
    /// Runs stages 1..=depth of a partially assigned protocol on one input;
    /// returns the message leaving stage `depth` and the prefix residue
    /// `(d·ΣY − ΣX) mod md`.
    fn prefix_state(&self, tables: &[Vec<StageEntry>], x: &InputVector, depth: usize) -> (u32, u64) {
        let md = self.spec.modulus();
        let d = u64::from(self.spec.d);
        let mut message = 0u32;
        let mut residue = 0u64;
        for stage in 0..depth {
            let incoming_size = self.budgets.incoming_size(stage as u32 + 1);
            let xk = x.values()[stage];
            let (y, outgoing) = tables[stage][(xk * incoming_size + message) as usize];
            message = outgoing;
            residue = (residue + d * u64::from(y) + md - u64::from(xk) % md) % md;
        }
        (message, residue)
    }

    /// A prefix is viable only if inputs sharing (message, remaining inputs)
    /// share their prefix residue; at full depth the residues must all be 0.
    fn viable(&self, tables: &[Vec<StageEntry>], depth: usize) -> bool {
        let full = depth == self.spec.n as usize;
        let mut groups: HashMap<(u32, &[u32]), u64> = HashMap::new();
        for x in &self.inputs {
            let (message, residue) = self.prefix_state(tables, x, depth);
            if full {
                if residue != 0 {
                    return false;
                }
                continue;
            }
            let suffix = &x.values()[depth..];
            match groups.insert((message, suffix), residue) {
                Some(previous) if previous != residue => return false,
                _ => {}
            }
        }
        true
    }

    fn dfs(&mut self, tables: &mut Vec<Vec<StageEntry>>) -> Result<SearchOutcome, ProtocolError> {
        let depth = tables.len();
        if depth == self.spec.n as usize {
            // pruning already established that every promise input wins
            let protocol =
                ClassicalProtocol::new(self.spec, self.budgets.clone(), tables.clone())?;
            return Ok(SearchOutcome::Winner { protocol });
        }
        let stage = depth as u32 + 1;
        let slots = (self.spec.d * self.budgets.incoming_size(stage)) as usize;
        let choices = self.spec.m * self.budgets.outgoing_size(stage);
        let mut counter = TableCounter::new(slots, choices);
        while !counter.exhausted {
            self.nodes += 1;
            if self.nodes > self.node_cap {
                return Ok(SearchOutcome::CapExceeded);
            }
            tables.push(counter.table(self.spec.m));
            if self.viable(tables, depth + 1) {
                match self.dfs(tables)? {
                    SearchOutcome::NoneExists => {}
                    done => {
                        tables.pop();
                        return Ok(done);
                    }
                }
            }
            tables.pop();
            counter.advance();
        }
        Ok(SearchOutcome::NoneExists)
    }
}

/// Searches the full table space for `spec` under `budgets`. Returns a
/// verified winner, an exhaustiveness certificate that none exists, or an
/// explicit cap-exceeded result — never a silent truncation.
pub fn search_protocols(
    spec: &GameSpec,
    budgets: &StageBudget,
    limits: &SearchLimits,
) -> Result<SearchReport, ProtocolError> {
    let inputs = enumerate_promise_inputs(spec, u128::from(limits.input_cap))?;
    let promise_inputs = inputs.len() as u64;

    let space_log2: f64 = (1..=spec.n)
        .map(|stage| {
            let slots = f64::from(spec.d * budgets.incoming_size(stage));
            let choices = f64::from(spec.m * budgets.outgoing_size(stage));
            slots * choices.log2()
        })
        .sum();

    let mut searcher = Searcher {
        spec: *spec,
        budgets,
        inputs,
        nodes: 0,
        node_cap: limits.node_cap,
    };
    let mut tables = Vec::with_capacity(spec.n as usize);
    let outcome = searcher.dfs(&mut tables)?;

    // A claimed winner must survive the independent exhaustive verifier.
    if let SearchOutcome::Winner { protocol } = &outcome {
        let report = super::verify_protocol(
            protocol,
            spec,
            super::VerifyMode::Exhaustive {
                cap: limits.input_cap,
            },
        )?;
        if report.win_rate != 1.0 {
            return Err(ProtocolError::CapExceeded(format!(
                "search returned a non-winner (rate {}); pruning is unsound",
                report.win_rate
            )));
        }
    }

    Ok(SearchReport {
        spec: *spec,
        budgets: budgets.clone(),
        outcome,
        nodes_visited: searcher.nodes,
        space_log2,
        promise_inputs,
    })
}
