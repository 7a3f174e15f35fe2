//! Random rooted binary trees, leaf distances and Brownian-motion covariance.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{BnrError, Result};

/// Rooted binary tree. Node 0 is the root; every other node has a parent and
/// a branch length to it. Leaves are numbered `0..leaf_count()` separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    parent: Vec<Option<usize>>,
    branch: Vec<f64>,
    leaves: Vec<usize>,
}

impl PhyloTree {
    /// Builds a tree from explicit parts and checks it.
    ///
    /// `parent[0]` must be `None`; `branch[i]` is the length of the edge above
    /// node `i` (ignored for the root); `leaves[j]` is the node of leaf `j`.
    pub fn from_parts(parent: Vec<Option<usize>>, branch: Vec<f64>, leaves: Vec<usize>) -> Result<Self> {
        let n = parent.len();
        if n == 0 || branch.len() != n || parent[0].is_some() {
            return Err(BnrError::invalid("tree needs a root at node 0 and one branch per node"));
        }
        let mut children = vec![0usize; n];
        for (i, p) in parent.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < i => children[*p] += 1,
                _ => {
                    return Err(BnrError::invalid(format!(
                        "node {i} must have an earlier-numbered parent"
                    )))
                }
            }
            if !(branch[i] > 0.0 && branch[i].is_finite()) {
                return Err(BnrError::invalid(format!("branch above node {i} is {}", branch[i])));
            }
        }
        let tips: Vec<usize> = (0..n).filter(|&i| children[i] == 0).collect();
        let mut sorted = leaves.clone();
        sorted.sort_unstable();
        if sorted != tips {
            return Err(BnrError::invalid("leaf list does not match the childless nodes"));
        }
        Ok(Self { parent, branch, leaves })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Edges of the rooted tree, `node_count() - 1`.
    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn branch_length(&self, node: usize) -> f64 {
        self.branch[node]
    }

    pub fn leaf_node(&self, leaf: usize) -> usize {
        self.leaves[leaf]
    }

    /// Path length from the root to every node.
    pub fn depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.parent.len()];
        // parents always precede children
        for i in 1..self.parent.len() {
            depth[i] = depth[self.parent[i].unwrap()] + self.branch[i];
        }
        depth
    }

    fn mrca(&self, a: usize, b: usize, level: &[usize]) -> usize {
        let (mut a, mut b) = (a, b);
        while a != b {
            if level[a] >= level[b] {
                a = self.parent[a].unwrap();
            } else {
                b = self.parent[b].unwrap();
            }
        }
        a
    }

    fn levels(&self) -> Vec<usize> {
        let mut level = vec![0; self.parent.len()];
        for i in 1..self.parent.len() {
            level[i] = level[self.parent[i].unwrap()] + 1;
        }
        level
    }

    /// Root depth of the most recent common ancestor of every leaf pair.
    fn shared_depths(&self) -> DMatrix<f64> {
        let depth = self.depths();
        let level = self.levels();
        let d = self.leaf_count();
        DMatrix::from_fn(d, d, |i, j| depth[self.mrca(self.leaves[i], self.leaves[j], &level)])
    }
}

/// Grows a tree by repeatedly splitting a uniformly chosen edge with a new
/// leaf, starting from a cherry, until there are `leaves` tips. Branch
/// lengths are Uniform on `(low, high]`.
pub fn simulate_tree<R: Rng + ?Sized>(leaves: usize, branch_range: (f64, f64), rng: &mut R) -> Result<PhyloTree> {
    let (low, high) = branch_range;
    if leaves < 2 {
        return Err(BnrError::invalid(format!("a tree needs at least 2 leaves, got {leaves}")));
    }
    if !(low >= 0.0 && high > low && high.is_finite()) {
        return Err(BnrError::invalid(format!("branch length range ({low}, {high}] is empty")));
    }
    // topology with parent links that may point forward while growing
    let mut parent: Vec<Option<usize>> = vec![None, Some(0), Some(0)];
    let mut tips = vec![1, 2];
    while tips.len() < leaves {
        let below = rng.random_range(1..parent.len());
        let mid = parent.len();
        let tip = mid + 1;
        parent.push(parent[below]);
        parent.push(Some(mid));
        parent[below] = Some(mid);
        tips.push(tip);
    }

    // renumber in preorder so parents precede children
    let n = parent.len();
    let mut children = vec![Vec::new(); n];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    while let Some(node) = stack.pop() {
        order.push(node);
        stack.extend(children[node].iter().rev());
    }
    let mut new_id = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    let new_parent = order.iter().map(|&old| parent[old].map(|p| new_id[p])).collect();
    let branch = (0..n)
        .map(|i| if i == 0 { 0.0 } else { high - (high - low) * rng.random::<f64>() })
        .collect();
    let leaves = tips.iter().map(|&t| new_id[t]).collect();
    PhyloTree::from_parts(new_parent, branch, leaves)
}

/// Path lengths between every pair of leaves.
pub fn tree_distances(tree: &PhyloTree) -> DMatrix<f64> {
    let depth = tree.depths();
    let shared = tree.shared_depths();
    let d = tree.leaf_count();
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            depth[tree.leaf_node(i)] + depth[tree.leaf_node(j)] - 2.0 * shared[(i, j)]
        }
    })
}

/// Brownian-motion covariance: shared root-to-ancestor path length.
pub fn phylo_covariance(tree: &PhyloTree) -> DMatrix<f64> {
    tree.shared_depths()
}

/// Sample network on the leaves in `members`: `1 / distance` between
/// every two members, zero elsewhere.
pub fn sample_adjacency(distances: &DMatrix<f64>, members: &[usize]) -> Result<DMatrix<f64>> {
    let d = distances.nrows();
    let mut seen = vec![false; d];
    for &m in members {
        if m >= d {
            return Err(BnrError::invalid(format!("leaf {m} out of range for {d} leaves")));
        }
        if std::mem::replace(&mut seen[m], true) {
            return Err(BnrError::invalid(format!("leaf {m} selected twice")));
        }
    }
    let mut a = DMatrix::zeros(d, d);
    for (x, &p) in members.iter().enumerate() {
        for &q in &members[x + 1..] {
            let dist = distances[(p, q)];
            if !(dist > 0.0) {
                return Err(BnrError::invalid(format!(
                    "leaves {p} and {q} are at distance {dist}"
                )));
            }
            a[(p, q)] = 1.0 / dist;
            a[(q, p)] = 1.0 / dist;
        }
    }
    Ok(a)
}
