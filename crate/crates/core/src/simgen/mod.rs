//! Synthetic multiview benchmarks with planted signal features.

mod graph;
mod linear;
mod nonlinear;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use graph::{cluster_graph, gen_graph_scenario, lattice_graph, scale_free_graph, Topology, GRAPH_VERTICES, NOISE_RIDGE};
pub use linear::{compound_symmetric, gen_linear, linear_covariance, CovarianceSpec, LINEAR_SIGNALS};
pub use nonlinear::{gen_nonlinear, signal_count, signal_columns};

/// Independent sample streams drawn from the same scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTruth {
    /// Signal columns per view, ascending.
    pub signals: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub descriptor: ScenarioDescriptor,
}

fn descriptor(name: &str, params: &[(&str, f64)], seed: u64, split: Split) -> ScenarioDescriptor {
    ScenarioDescriptor {
        name: name.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        seed,
        split,
    }
}

fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect()
}
