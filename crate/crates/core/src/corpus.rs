//! Built-in worked examples with known outcomes.

use serde::Serialize;

use crate::cli::{gap_of, solve_instance, RunConfig};
use crate::io::parse_instance;
use crate::semilag_dual::GapClass;
use crate::ExtValue;

#[derive(Clone, Copy, Debug)]
pub enum Expected {
    /// Finite primal optimum and gap class.
    Gap { primal: f64, class: GapClass },
    /// Empty feasible set.
    Infeasible,
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub json: &'static str,
    pub expected: Expected,
}

macro_rules! entry {
    ($name:literal, $expected:expr) => {
        CorpusEntry { name: $name, json: include_str!(concat!("../../../data/", $name, ".json")), expected: $expected }
    };
}

use Expected::*;
use GapClass::*;

pub const CORPUS: &[CorpusEntry] = &[
    entry!("e1", Gap { primal: -1.0, class: InfiniteGap }),
    entry!("two_sided", Gap { primal: 0.0, class: ZeroGap }),
    entry!("hyperbola", Gap { primal: 0.0, class: ZeroGap }),
    entry!("indefinite_pair", Gap { primal: -2.0, class: InfiniteGap }),
    entry!("hqp_1d", Gap { primal: -1.0, class: ZeroGap }),
    entry!("hqp_neg_identity", Gap { primal: -1.0, class: ZeroGap }),
    entry!("uniform_identity", Gap { primal: -0.5, class: ZeroGap }),
    entry!("knapsack", Gap { primal: -1.0, class: ZeroGap }),
    entry!("knapsack_product", Gap { primal: 0.0, class: ZeroGap }),
    entry!("robust_toy", Gap { primal: 0.8125, class: ZeroGap }),
    entry!("infeasible", Infeasible),
];

#[derive(Clone, Debug, Serialize)]
pub struct CorpusOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_entry(entry: &CorpusEntry, cfg: &RunConfig) -> CorpusOutcome {
    let outcome = |passed, detail| CorpusOutcome { name: entry.name, passed, detail };
    let inst = match parse_instance::<f64>(entry.json) {
        Ok((inst, _)) => inst,
        Err(e) => return outcome(false, e.to_string()),
    };
    match entry.expected {
        Infeasible => match solve_instance(&inst, cfg) {
            Ok(r) => outcome(r.value == ExtValue::PlusInfinity, format!("primal {}", r.value)),
            Err(e) => outcome(false, e.to_string()),
        },
        Gap { primal, class } => match gap_of(&inst, cfg) {
            Ok(g) => {
                let value_ok = matches!(g.primal_value, ExtValue::Finite(v) if (v - primal).abs() <= 1e-6 + g.primal_error_bar);
                let label = serde_json::to_value(g.classification).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let detail = format!("primal {} dual {} {}", g.primal_value, g.dual_value, label);
                outcome(value_ok && g.classification == class, detail)
            }
            Err(e) => outcome(false, e.to_string()),
        },
    }
}

pub fn run_corpus(cfg: &RunConfig) -> Vec<CorpusOutcome> {
    CORPUS.iter().map(|e| run_entry(e, cfg)).collect()
}
