//! JSON tree files.
//!
//! ```json
//! {
//!   "depth": 2,
//!   "nodes": [
//!     [{"parent": 0, "prob": 0.25}, {"parent": 0, "prob": 0.75}],
//!     [{"parent": 0, "prob": 0.5}, {"parent": 0, "prob": 0.5},
//!      {"parent": 1, "prob": 0.5}, {"parent": 1, "prob": 0.5}]
//!   ],
//!   "Y": [[0.0, 0.0], [1.0, -1.0, 1.0, -1.0]],
//!   "losses": {
//!     "horizon": 1,
//!     "decisions": ["a", "b"],
//!     "values": [[[0.1, 0.9], [0.5, 0.5]]]
//!   }
//! }
//! ```
//!
//! `nodes[d − 1]` lists the depth-`d` nodes grouped by parent, `Y[n − 1]`
//! the values of `Y_n` per depth-`n` node, and `losses.values[n − 1][i]`
//! the loss of decision `i` per depth-`(n + horizon)` node. `Y` and
//! `losses` may be omitted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{AdaptedSequence, Branch, ProbabilityTree};
use crate::decision::{DecisionSpace, LossSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRecord {
    pub horizon: usize,
    pub decisions: Vec<String>,
    pub values: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub depth: usize,
    pub nodes: Vec<Vec<Branch>>,
    #[serde(rename = "Y", default)]
    pub y: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossRecord>,
}

/// Validated contents of a tree file.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDocument {
    pub tree: ProbabilityTree,
    pub sequence: Option<AdaptedSequence>,
    pub losses: Option<LossSpec>,
}

impl TreeFile {
    pub fn from_parts(tree: &ProbabilityTree, sequence: Option<&AdaptedSequence>, losses: Option<&LossSpec>) -> Self {
        Self {
            depth: tree.depth(),
            nodes: tree.levels(),
            y: sequence.map(|s| s.levels().to_vec()).unwrap_or_default(),
            losses: losses.map(|l| LossRecord {
                horizon: l.horizon(),
                decisions: l.space().labels().to_vec(),
                values: l.tables().to_vec(),
            }),
        }
    }

    pub fn validate(self) -> Result<TreeDocument> {
        if self.depth != self.nodes.len() {
            return Err(Error::TreeFile(format!(
                "depth is {} but {} node levels are given",
                self.depth,
                self.nodes.len()
            )));
        }
        let tree = ProbabilityTree::new(self.nodes)?;
        let sequence = if self.y.is_empty() {
            None
        } else {
            Some(AdaptedSequence::new(&tree, self.y)?)
        };
        let losses = self
            .losses
            .map(|l| LossSpec::new(&tree, l.horizon, DecisionSpace::new(l.decisions)?, l.values))
            .transpose()?;
        Ok(TreeDocument { tree, sequence, losses })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::TreeFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree files always serialize")
    }
}

/// Reads and validates a tree file.
pub fn read_tree_file(path: impl AsRef<Path>) -> Result<TreeDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::TreeFile(format!("{}: {e}", path.display())))?;
    TreeFile::from_json(&text)?.validate()
}

pub fn write_tree_file(
    path: impl AsRef<Path>,
    tree: &ProbabilityTree,
    sequence: Option<&AdaptedSequence>,
    losses: Option<&LossSpec>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = TreeFile::from_parts(tree, sequence, losses).to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::TreeFile(format!("{}: {e}", path.display())))
}
