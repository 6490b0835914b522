//! Detection of undesired behavior in cellular control-plane message traces.
//!
//! Signatures come in three forms: past-time LTL formulas, DFAs (one per
//! behavior) and a combined Mealy machine that names the behavior it saw.
//! Each form has an online monitor and a learner that builds it from labeled
//! positive/negative traces.

pub mod api;
pub mod automata;
pub mod harness;
pub mod pltl;
pub mod rpni;
pub mod synth;
pub mod traces;
