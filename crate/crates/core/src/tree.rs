//! Rooted, labelled trees of arbitrary arity with Newick serialization.
//!
//! Both the package hierarchy and the topology of a dendrogram are
//! represented as a [`Tree`]; leaves carry unit names, internal nodes may
//! carry a package name.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub label: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Length of the edge to the parent, if known.
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// A tree holding only a root.
    pub fn with_root(label: Option<String>) -> Self {
        Tree {
            nodes: vec![TreeNode {
                label,
                parent: None,
                children: Vec::new(),
                length: None,
            }],
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_child(&mut self, parent: usize, label: Option<String>, length: Option<f64>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            label,
            parent: Some(parent),
            children: Vec::new(),
            length,
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.children.is_empty() {
                out.push(id);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves()
            .into_iter()
            .map(|id| self.nodes[id].label.clone().unwrap_or_default())
            .collect()
    }

    /// Internal (non-leaf) nodes, root included.
    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&id| !self.is_leaf(id)).collect()
    }

    pub fn depth(&self, mut id: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            d += 1;
            id = p;
        }
        d
    }

    /// Maps leaf label to node id; errors on unlabelled or duplicate leaves.
    pub fn leaf_index(&self) -> Result<HashMap<String, usize>> {
        let mut map = HashMap::new();
        for id in self.leaves() {
            let label = self.nodes[id]
                .label
                .clone()
                .ok_or_else(|| Error::invalid("tree has an unlabelled leaf"))?;
            if map.insert(label.clone(), id).is_some() {
                return Err(Error::invalid(format!("leaf `{label}` appears twice")));
            }
        }
        Ok(map)
    }

    /// Edge counts of the tree paths between every pair of the given leaves,
    /// as a dense row-major `k×k` matrix.
    pub fn leaf_path_lengths(&self, leaves: &[usize]) -> Vec<usize> {
        let ancestors: Vec<Vec<usize>> = leaves
            .iter()
            .map(|&leaf| {
                let mut chain = vec![leaf];
                let mut cur = leaf;
                while let Some(p) = self.nodes[cur].parent {
                    chain.push(p);
                    cur = p;
                }
                chain.reverse();
                chain
            })
            .collect();
        let k = leaves.len();
        let mut out = vec![0usize; k * k];
        for a in 0..k {
            for b in (a + 1)..k {
                let (pa, pb) = (&ancestors[a], &ancestors[b]);
                let common = pa.iter().zip(pb.iter()).take_while(|(x, y)| x == y).count();
                let d = (pa.len() - common) + (pb.len() - common);
                out[a * k + b] = d;
                out[b * k + a] = d;
            }
        }
        out
    }

    pub fn to_newick(&self) -> String {
        let mut s = String::new();
        self.write_newick(self.root(), &mut s);
        s.push(';');
        s
    }

    fn write_newick(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        if !node.children.is_empty() {
            out.push('(');
            for (i, &c) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_newick(c, out);
            }
            out.push(')');
        }
        if let Some(label) = &node.label {
            out.push_str(&quote_label(label));
        }
        if let Some(len) = node.length {
            let _ = write!(out, ":{}", len);
        }
    }

    pub fn from_newick(text: &str) -> Result<Tree> {
        let mut parser = NewickParser {
            chars: text.trim().chars().collect(),
            pos: 0,
        };
        let mut tree = Tree { nodes: Vec::new() };
        parser.parse_subtree(&mut tree, None)?;
        parser.skip_ws();
        if parser.peek() != Some(';') {
            return Err(Error::invalid(format!("newick: expected `;` at offset {}", parser.pos)));
        }
        parser.pos += 1;
        parser.skip_ws();
        if parser.pos != parser.chars.len() {
            return Err(Error::invalid("newick: trailing characters after `;`"));
        }
        Ok(tree)
    }

    /// Checks that both trees have the same set of leaf labels.
    pub fn same_leaves(&self, other: &Tree) -> Result<()> {
        let a: HashSet<String> = self.leaf_labels().into_iter().collect();
        let b: HashSet<String> = other.leaf_labels().into_iter().collect();
        if a == b {
            Ok(())
        } else {
            let mut only_a: Vec<_> = a.difference(&b).cloned().collect();
            let mut only_b: Vec<_> = b.difference(&a).cloned().collect();
            only_a.sort();
            only_b.sort();
            Err(Error::UnitMismatch(format!(
                "leaf sets differ (only in first: {only_a:?}, only in second: {only_b:?})"
            )))
        }
    }
}

fn quote_label(label: &str) -> String {
    let needs_quotes = label.is_empty() || label.chars().any(|c| c.is_whitespace() || "()[]':;,".contains(c));
    if needs_quotes {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
}

impl NewickParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn parse_subtree(&mut self, tree: &mut Tree, parent: Option<usize>) -> Result<usize> {
        self.skip_ws();
        let id = tree.nodes.len();
        tree.nodes.push(TreeNode {
            label: None,
            parent,
            children: Vec::new(),
            length: None,
        });
        if let Some(p) = parent {
            tree.nodes[p].children.push(id);
        }
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                self.parse_subtree(tree, Some(id))?;
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => {
                        return Err(Error::invalid(format!(
                            "newick: expected `,` or `)` at offset {}",
                            self.pos
                        )))
                    }
                }
            }
        }
        self.skip_ws();
        let label = self.parse_label()?;
        tree.nodes[id].label = label;
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            let start = self.pos;
            while matches!(self.peek(), Some(c) if !"(),;:".contains(c) && !c.is_whitespace()) {
                self.pos += 1;
            }
            let raw: String = self.chars[start..self.pos].iter().collect();
            let len = raw
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("newick: bad branch length `{raw}`")))?;
            tree.nodes[id].length = Some(len);
        }
        Ok(id)
    }

    fn parse_label(&mut self) -> Result<Option<String>> {
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.peek() {
                    None => return Err(Error::invalid("newick: unterminated quoted label")),
                    Some('\'') => {
                        if self.chars.get(self.pos + 1) == Some(&'\'') {
                            s.push('\'');
                            self.pos += 2;
                        } else {
                            self.pos += 1;
                            break;
                        }
                    }
                    Some(c) => {
                        s.push(c);
                        self.pos += 1;
                    }
                }
            }
            return Ok(Some(s));
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !"(),;:".contains(c) && !c.is_whitespace()) {
            self.pos += 1;
        }
        if self.pos == start {
            Ok(None)
        } else {
            Ok(Some(self.chars[start..self.pos].iter().collect()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newick_round_trip() {
        let text = "((A:1,B:1)ab:4,'odd name':5,C)root;";
        let tree = Tree::from_newick(text).unwrap();
        assert_eq!(tree.to_newick(), text);
        assert_eq!(tree.leaf_labels(), vec!["A", "B", "odd name", "C"]);
    }

    #[test]
    fn path_lengths_follow_lca() {
        let tree = Tree::from_newick("((A,B),C);").unwrap();
        let idx = tree.leaf_index().unwrap();
        let leaves = [idx["A"], idx["B"], idx["C"]];
        let p = tree.leaf_path_lengths(&leaves);
        assert_eq!(p[1], 2);
        assert_eq!(p[2], 3);
        assert_eq!(p[5], 3);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Tree::from_newick("((A,B),C)").is_err());
        assert!(Tree::from_newick("((A,B;").is_err());
        assert!(Tree::from_newick("(A:x,B);").is_err());
    }

    #[test]
    fn duplicate_leaves_are_reported() {
        let tree = Tree::from_newick("(A,A);").unwrap();
        assert!(tree.leaf_index().is_err());
    }
}
