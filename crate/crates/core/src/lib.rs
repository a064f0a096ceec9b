//! A resource-sensitive sequent calculus over curved Kripke frames, with
//! observer valuations, scenario files and small simulation drivers.

pub mod calculus;
pub mod cli;
pub mod dsl;
pub mod formula;
pub mod frame;
pub mod metrics;
pub mod observer;
pub mod sim;

pub use calculus::{
    cost_valid, measure, prove, prove_with_laws, transition, Derivation, FailureReason, Law, ProofResult,
    Sequent, TransitionOutcome,
};
pub use dsl::{parse_formula, parse_scenario, serialize_scenario, ParseError, ScenarioConfig, ScenarioKind};
pub use formula::{coherence, curvature_cost, CostModel, Formula};
pub use frame::{accessible, Frame, World};
pub use observer::{observer_valuation, persistence_check, Observer, Persistence};
