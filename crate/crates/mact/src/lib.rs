//! Multi-agent question-answering pipeline with agent-wise test-time scaling.
//!
//! Four role-specialized agents collaborate on each task: a planning agent
//! decomposes the question into a high-level plan, an execution agent carries
//! the plan out step by step with tools, a judgment agent flags mistakes in
//! the plan or the execution without correcting them, and an answer agent
//! summarizes the final execution process into an answer. Flagged mistakes
//! are routed back to the planning or execution agent for bounded correction
//! rounds.
//!
//! Test-time compute is scaled per agent role: parallel paths seeded from
//! independently generated reference plans, best-of-N candidate selection for
//! each execution step under a step scorer, and thinking-token budget forcing
//! for the judgment agent. The answer agent is never scaled.
//!
//! Every backend call, candidate, score, and correction round is recorded in
//! a [`core::PathTrace`] so runs against scripted backends replay
//! byte-identically (modulo wall times).

pub mod agents;
pub mod backends;
pub mod core;
pub mod error;
pub mod eval;
pub mod orchestrator;
pub mod prompting;
pub mod rewards;
pub mod scaling;
pub mod tools;

pub use error::{Error, Result};
