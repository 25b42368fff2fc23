use super::dag::{LayeredDag, VertexId};
use super::explore::{Annotations, Instance};
use crate::error::{domain, Result};

/// Result of [`binarize`]: the binary tree and the map back to the input.
#[derive(Clone, Debug)]
pub struct Binarized {
    pub tree: LayeredDag,
    /// `origin[k]` is the input vertex behind vertex `k`, or `None` for an
    /// inserted internal node (index 0 unused).
    pub origin: Vec<Option<VertexId>>,
    /// `image[v]` is the vertex representing input vertex `v`.
    pub image: Vec<VertexId>,
}

/// Replaces every vertex with more than two children by a balanced binary
/// tree of depth `⌈log₂ d⌉` whose leaves are the original children, in order.
pub fn binarize(tree: &LayeredDag) -> Result<Binarized> {
    if !tree.is_tree() {
        return Err(domain("binarize expects a tree"));
    }
    let mut origin: Vec<Option<VertexId>> = vec![None, Some(1)];
    let mut image = vec![0; tree.vertex_count() + 1];
    image[1] = 1;
    let mut edges = Vec::new();
    // Preorder so the output keeps the classical visiting order.
    let mut stack = vec![1usize];
    while let Some(u) = stack.pop() {
        let kids = tree.children(u);
        attach(image[u], kids, &mut origin, &mut image, &mut edges);
        stack.extend(kids.iter().rev());
    }
    let tree = LayeredDag::new(origin.len() - 1, edges)?;
    Ok(Binarized { tree, origin, image })
}

fn attach(
    at: VertexId,
    group: &[VertexId],
    origin: &mut Vec<Option<VertexId>>,
    image: &mut [VertexId],
    edges: &mut Vec<(VertexId, VertexId)>,
) {
    if group.len() <= 2 {
        for &c in group {
            origin.push(Some(c));
            image[c] = origin.len() - 1;
            edges.push((at, image[c]));
        }
        return;
    }
    let mid = group.len().div_ceil(2);
    for half in [&group[..mid], &group[mid..]] {
        if half.len() == 1 {
            attach(at, half, origin, image, edges);
        } else {
            origin.push(None);
            let node = origin.len() - 1;
            edges.push((at, node));
            attach(node, half, origin, image, edges);
        }
    }
}

/// Binarizes a formula or search instance. Inserted nodes copy the gate of
/// the vertex they split; marks and leaf values follow their vertices.
pub fn binarize_instance(inst: &Instance) -> Result<(Instance, Binarized)> {
    let b = binarize(&inst.dag)?;
    let ann = &inst.annotations;
    let mut out = Annotations {
        marked: ann.marked.iter().map(|&v| b.image[v]).collect(),
        leaf_values: ann.leaf_values.iter().map(|(&v, &x)| (b.image[v], x)).collect(),
        gates: ann.gates.iter().map(|(&v, &g)| (b.image[v], g)).collect(),
    };
    for k in 2..b.origin.len() {
        if b.origin[k].is_none() {
            let mut p = b.tree.parent(k).expect("inserted node has a parent");
            while b.origin[p].is_none() {
                p = b.tree.parent(p).expect("chain ends at an original vertex");
            }
            if let Some(&g) = out.gates.get(&p) {
                out.gates.insert(k, g);
            }
        }
    }
    Ok((Instance { dag: b.tree.clone(), annotations: out }, b))
}
