use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dag::LayeredDag;
use super::explore::{Annotations, Gate, Instance};
use crate::error::{domain, Result};

/// On-disk JSON form of an instance. Map keys are vertex ids as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: usize,
    pub root: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub marked: Vec<usize>,
    #[serde(default)]
    pub gates: BTreeMap<String, Gate>,
    #[serde(default)]
    pub leaf_values: BTreeMap<String, u8>,
}

fn parse_id(key: &str, vertices: usize) -> Result<usize> {
    let v: usize = key.parse().map_err(|_| domain(format!("bad vertex key {key:?}")))?;
    if v == 0 || v > vertices {
        return Err(domain(format!("vertex key {v} out of range")));
    }
    Ok(v)
}

impl GraphFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let a = &inst.annotations;
        GraphFile {
            vertices: inst.dag.vertex_count(),
            root: 1,
            edges: inst.dag.edges().iter().map(|&(u, v)| [u, v]).collect(),
            marked: a.marked.iter().copied().collect(),
            gates: a.gates.iter().map(|(v, g)| (v.to_string(), *g)).collect(),
            leaf_values: a.leaf_values.iter().map(|(v, &x)| (v.to_string(), x as u8)).collect(),
        }
    }

    /// Validates the file and rebuilds layers from the edge list.
    pub fn into_instance(self) -> Result<Instance> {
        if self.root != 1 {
            return Err(domain("the root must be vertex 1"));
        }
        let dag = LayeredDag::new(self.vertices, self.edges.iter().map(|e| (e[0], e[1])).collect())?;
        let mut ann = Annotations::default();
        for v in self.marked {
            if !dag.contains(v) {
                return Err(domain(format!("marked vertex {v} out of range")));
            }
            ann.marked.insert(v);
        }
        for (k, g) in self.gates {
            ann.gates.insert(parse_id(&k, self.vertices)?, g);
        }
        for (k, x) in self.leaf_values {
            let v = parse_id(&k, self.vertices)?;
            if x > 1 {
                return Err(domain(format!("leaf value of {v} must be 0 or 1")));
            }
            ann.leaf_values.insert(v, x == 1);
        }
        Ok(Instance { dag, annotations: ann })
    }
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphFile::from_instance(self)).expect("graph file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GraphFile>(text)?.into_instance()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
