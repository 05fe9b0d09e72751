//! Agglomerative hierarchical clustering and the path-difference score
//! between trees.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{kernel_to_distance, DistanceMatrix, KernelMatrix};
use crate::tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    #[default]
    Average,
    Complete,
    Single,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Unknown {
                kind: "linkage",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        })
    }
}

/// One merge step. Node ids `0..n` are leaves; merge `k` creates node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

/// Binary merge tree over `n` labelled leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

/// Relative tolerance under which a child merge is considered to happen at
/// the same height as its parent.
const HEIGHT_TIE: f64 = 1e-9;

pub fn agglomerate(d2: &DistanceMatrix, labels: &[String], linkage: Linkage) -> Result<Dendrogram> {
    let n = d2.n();
    if n == 0 {
        return Err(Error::Insufficient("cannot cluster zero units".into()));
    }
    if labels.len() != n {
        return Err(Error::UnitMismatch(format!("{} labels for {n} units", labels.len())));
    }
    if d2.squared.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("distance matrix (NaN)".into()));
    }
    let mut dist: DMatrix<f64> = d2.distances();
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut active = vec![true; n];
    let mut height_of = vec![0.0f64; 2 * n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[(i, j)];
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dki, dkj) = (dist[(k, i)], dist[(k, j)]);
            let updated = match linkage {
                Linkage::Average => (ni * dki + nj * dkj) / (ni + nj),
                Linkage::Complete => dki.max(dkj),
                Linkage::Single => dki.min(dkj),
            };
            dist[(k, i)] = updated;
            dist[(i, k)] = updated;
        }
        let id = n + step;
        let height = d.max(height_of[node[i]]).max(height_of[node[j]]);
        height_of[id] = height;
        merges.push(Merge {
            left: node[i],
            right: node[j],
            height,
        });
        node[i] = id;
        size[i] += size[j];
        active[j] = false;
    }
    Ok(Dendrogram {
        labels: labels.to_vec(),
        merges,
    })
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    fn height(&self, id: usize) -> f64 {
        if id < self.n() {
            0.0
        } else {
            self.merges[id - self.n()].height
        }
    }

    fn root_id(&self) -> usize {
        self.n() + self.merges.len() - 1
    }

    /// The binary tree with branch lengths equal to height deltas.
    pub fn to_tree(&self) -> Tree {
        self.build_tree(false)
    }

    /// Topology with zero-height-delta internal edges contracted, so that a
    /// run of simultaneous merges becomes one multi-way node.
    pub fn to_contracted_tree(&self) -> Tree {
        self.build_tree(true)
    }

    fn build_tree(&self, contract: bool) -> Tree {
        let n = self.n();
        if n == 1 {
            return Tree::with_root(Some(self.labels[0].clone()));
        }
        let mut tree = Tree::with_root(None);
        let mut stack = vec![(self.root_id(), tree.root())];
        while let Some((id, at)) = stack.pop() {
            let m = self.merges[id - n];
            let mut kids = Vec::new();
            self.expand(m.left, m.height, contract, &mut kids);
            self.expand(m.right, m.height, contract, &mut kids);
            let mut pending = Vec::new();
            for child in kids {
                let length = Some(m.height - self.height(child));
                if child < n {
                    tree.add_child(at, Some(self.labels[child].clone()), length);
                } else {
                    let t = tree.add_child(at, None, length);
                    pending.push((child, t));
                }
            }
            stack.extend(pending.into_iter().rev());
        }
        tree
    }

    fn expand(&self, id: usize, parent_height: f64, contract: bool, out: &mut Vec<usize>) {
        if contract && id >= self.n() {
            let h = self.height(id);
            if parent_height - h <= HEIGHT_TIE * parent_height.abs().max(1.0) {
                let m = self.merges[id - self.n()];
                self.expand(m.left, parent_height, contract, out);
                self.expand(m.right, parent_height, contract, out);
                return;
            }
        }
        out.push(id);
    }

    pub fn to_newick(&self) -> String {
        self.to_tree().to_newick()
    }

    /// Flat assignment into `k` clusters obtained by undoing the last `k-1`
    /// merges. Cluster ids follow the smallest leaf index of each cluster.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("cannot cut {n} units into {k} clusters")));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut rep = (0..n).collect::<Vec<_>>();
        rep.extend(std::iter::repeat_n(0, self.merges.len()));
        for (s, m) in self.merges.iter().take(n - k).enumerate() {
            let (a, b) = (find(&mut parent, rep[m.left]), find(&mut parent, rep[m.right]));
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
            rep[n + s] = lo;
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let mut ids: Vec<usize> = roots.clone();
        ids.sort_unstable();
        ids.dedup();
        Ok(roots
            .into_iter()
            .map(|r| ids.binary_search(&r).expect("root listed"))
            .collect())
    }
}

/// Agglomerates the units of a kernel on its induced distances.
pub fn cluster_kernel(k: &KernelMatrix, labels: &[String], linkage: Linkage) -> Result<Dendrogram> {
    agglomerate(&kernel_to_distance(k)?, labels, linkage)
}

/// Path difference between a dendrogram's topology (ties contracted) and a
/// reference tree.
pub fn pd_against(dendrogram: &Dendrogram, reference: &Tree) -> Result<f64> {
    pd_metric(&dendrogram.to_contracted_tree(), reference)
}

/// Sum over unordered leaf pairs of the absolute difference in path edge
/// counts between the two trees.
pub fn pd_metric(t1: &Tree, t2: &Tree) -> Result<f64> {
    t1.same_leaves(t2)?;
    let index1 = t1.leaf_index()?;
    let index2 = t2.leaf_index()?;
    let mut labels: Vec<&String> = index1.keys().collect();
    labels.sort();
    let leaves1: Vec<usize> = labels.iter().map(|l| index1[*l]).collect();
    let leaves2: Vec<usize> = labels.iter().map(|l| index2[*l]).collect();
    let p1 = t1.leaf_path_lengths(&leaves1);
    let p2 = t2.leaf_path_lengths(&leaves2);
    let k = labels.len();
    let mut total = 0usize;
    for a in 0..k {
        for b in (a + 1)..k {
            total += p1[a * k + b].abs_diff(p2[a * k + b]);
        }
    }
    Ok(total as f64)
}
