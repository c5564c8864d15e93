//! Verification laboratory for sequential modulo-(m,d) games.
//!
//! A single m-level quantum system measured at n points in time wins the
//! sequential modulo-(m,d) game with certainty, while any classical protocol
//! whose forward messages stay at or below the system's Holevo capacity
//! (`log2 m` bits) must fail once `d` and `n` are large enough. This crate
//! makes both halves of that statement executable:
//!
//! * [`games`] — the game itself: promise and winning predicates, input
//!   enumeration and seeded sampling.
//! * [`quantum`] — exact simulation. The spatial route applies local
//!   unitaries to an n-party GHZ state; the temporal route measures a single
//!   m-level system with diagonal Kraus operators derived from the GHZ bond
//!   representation. The two must agree, and an audit compares alternative
//!   closed-form operator tables against the spatial oracle instead of
//!   trusting them.
//! * [`classical`] — bounded-communication protocols as finite stage tables:
//!   runner, verifier, the one-bit carry protocol that wins modulo-(2,2),
//!   Toner–Bacon one-bit simulation of qubit correlation chains, random
//!   protocol generation, and exhaustive protocol search.
//! * [`adversary`] — the refuter: given any deterministic protocol that
//!   under-communicates in enough stages, constructs two promise inputs with
//!   identical transcripts that cannot both win, packaged as a certificate
//!   that validates by independent replay.
//! * [`bounds`] — capacity arithmetic: Holevo bits, non-classical parameter
//!   planning, per-stage requirements, and the large-n scaling sweep.

pub mod adversary;
pub mod bounds;
pub mod classical;
pub mod games;
pub mod quantum;

pub use games::{GameError, GameSpec, InputVector, OutputVector};
