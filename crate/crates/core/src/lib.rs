//! Exact solutions for two-sided, one-to-one dynamic matching markets in which
//! matches are irreversible and agents compare outcomes by discounted payoff.
//!
//! An [`Economy`] lists agents, arrival periods and preferences. A solution
//! concept ([`Concept`]) fixes which continuations an agent expects if it
//! waits; solutions are the dynamic matchings that no agent or pair blocks
//! given those expectations. The [`Engine`] computes solution sets by
//! recursion over continuation states, and [`framework`] cross-checks them
//! against a direct filter over every dynamic matching.
//!
//! ```
//! use dynmatch::{fixtures, solve, Concept, SolverConfig};
//!
//! let econ = fixtures::example2();
//! let report = solve(&econ, Concept::Ds, SolverConfig::default()).unwrap();
//! assert!(report.definitions_agree);
//! assert!(!report.solutions.is_empty());
//! ```

pub mod agents;
pub mod concepts;
pub mod dsl;
pub mod economy;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod framework;
pub mod matching;
pub mod report;
pub mod reproduce;
pub mod stability;

pub use agents::{AgentIx, AgentSet, MAX_AGENTS};
pub use concepts::{solve, Concept, DeferredEconomy, SolveReport};
pub use dsl::{parse, EconomyDocument, ParseError, ParseErrorKind};
pub use economy::{int, ratio, AgentId, Economy, EconomyBuilder, Payoff, Rational, Side};
pub use engine::{ConjectureFamily, ConjectureRule, Engine, Plan, SolverConfig};
pub use error::{Error, Result};
pub use matching::{format_matching, parse_matching, ContinuationKey, DynamicMatching, Formation, History};
pub use stability::{EmptyPolicy, StaticEconomy, Threshold};
