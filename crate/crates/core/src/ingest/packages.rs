use std::collections::BTreeMap;

use super::units::UnitIndex;
use crate::tree::Tree;

/// Packages with fewer leaf descendants than this are dissolved.
pub const DEFAULT_MIN_PACKAGE_SIZE: usize = 4;

/// Packages holding more direct units than this are reported as candidates
/// for manual splitting.
pub const OVERSIZED_PACKAGE: usize = 40;

/// The authoritative decomposition: a tree of packages whose leaves are units.
pub type PackageTree = Tree;

#[derive(Default)]
struct Trie {
    children: BTreeMap<String, Trie>,
    units: Vec<String>,
    leaf_count: usize,
}

impl Trie {
    fn insert(&mut self, path: &[&str], unit: &str) {
        self.leaf_count += 1;
        match path.split_first() {
            None => self.units.push(unit.to_string()),
            Some((head, rest)) => self.children.entry((*head).to_string()).or_default().insert(rest, unit),
        }
    }
}

/// Builds the package hierarchy from dot-separated unit names. Packages with
/// fewer than `min_size` leaf descendants are dissolved into their parent.
pub fn build_package_tree(units: &UnitIndex, min_size: usize) -> PackageTree {
    let mut trie = Trie::default();
    for name in units.names() {
        let segments: Vec<&str> = name.split('.').collect();
        let packages = &segments[..segments.len() - 1];
        trie.insert(packages, name);
    }
    let mut tree = Tree::with_root(None);
    let root = tree.root();
    emit(&trie, "", root, min_size, &mut tree);
    for warn in oversized_packages(&tree, OVERSIZED_PACKAGE) {
        log::warn!("package `{}` holds {} units; consider splitting it", warn.0, warn.1);
    }
    tree
}

fn emit(node: &Trie, prefix: &str, out: usize, min_size: usize, tree: &mut Tree) {
    for (segment, child) in &node.children {
        let name = if prefix.is_empty() {
            segment.clone()
        } else {
            format!("{prefix}.{segment}")
        };
        if child.leaf_count >= min_size {
            let id = tree.add_child(out, Some(name.clone()), None);
            emit(child, &name, id, min_size, tree);
        } else {
            emit(child, &name, out, min_size, tree);
        }
    }
    for unit in &node.units {
        tree.add_child(out, Some(unit.clone()), None);
    }
}

/// Internal nodes with more than `limit` direct leaf children.
pub fn oversized_packages(tree: &Tree, limit: usize) -> Vec<(String, usize)> {
    tree.internal_nodes()
        .into_iter()
        .filter_map(|id| {
            let node = tree.node(id);
            let direct = node.children.iter().filter(|&&c| tree.is_leaf(c)).count();
            (direct > limit).then(|| (node.label.clone().unwrap_or_else(|| "<root>".into()), direct))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_package_dissolves_to_root() {
        let units = UnitIndex::new(["a.X", "a.Y", "a.Z", "a.W", "b.Q"]);
        let tree = build_package_tree(&units, 4);
        assert_eq!(tree.to_newick(), "((a.W,a.X,a.Y,a.Z)a,b.Q);");
    }

    #[test]
    fn single_package() {
        let units = UnitIndex::new((0..10).map(|i| format!("p.U{i}")));
        let tree = build_package_tree(&units, 4);
        let root = tree.node(tree.root());
        assert_eq!(root.children.len(), 1);
        assert_eq!(tree.node(root.children[0]).children.len(), 10);
    }

    #[test]
    fn min_size_one_keeps_exact_hierarchy() {
        let units = UnitIndex::new(["org.x.A", "org.x.y.B", "org.C", "D"]);
        let tree = build_package_tree(&units, 1);
        assert_eq!(tree.to_newick(), "((((org.x.y.B)org.x.y,org.x.A)org.x,org.C)org,D);");
    }

    #[test]
    fn nested_dissolution_keeps_grandchildren() {
        // org.small has 1 unit and dissolves into org; org.big keeps its 4.
        let units = UnitIndex::new(["org.big.A", "org.big.B", "org.big.C", "org.big.D", "org.small.E"]);
        let tree = build_package_tree(&units, 4);
        assert_eq!(
            tree.to_newick(),
            "(((org.big.A,org.big.B,org.big.C,org.big.D)org.big,org.small.E)org);"
        );
    }

    #[test]
    fn reports_oversized_packages() {
        let units = UnitIndex::new((0..41).map(|i| format!("p.U{i:02}")));
        let tree = build_package_tree(&units, 4);
        assert_eq!(oversized_packages(&tree, 40), vec![("p".to_string(), 41)]);
    }
}
