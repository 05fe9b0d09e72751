use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};

/// The ordered set of software units shared by every view. Order is
/// lexicographic; all matrices are indexed by it.
#[derive(Debug, Clone)]
pub struct UnitIndex {
    ids: Arc<Vec<String>>,
    position: Arc<HashMap<String, usize>>,
}

impl UnitIndex {
    /// Builds an index from arbitrary names: duplicates are merged and the
    /// result is sorted.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let ids: Vec<String> = sorted.into_iter().collect();
        let position = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        UnitIndex {
            ids: Arc::new(ids),
            position: Arc::new(position),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.ids
    }

    pub fn name(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.position.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position.contains_key(name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.position(name).ok_or_else(|| Error::Unknown {
            kind: "unit",
            name: name.to_string(),
        })
    }
}

impl PartialEq for UnitIndex {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ids, &other.ids) || self.ids == other.ids
    }
}

impl Eq for UnitIndex {}

/// Sorted intersection of the unit names seen by each view. `views` pairs a
/// view name with its unit names.
pub fn intersect_views(views: &[(&str, &BTreeSet<String>)]) -> Result<UnitIndex> {
    let Some((_, first)) = views.first() else {
        return Err(Error::invalid("no views to intersect"));
    };
    if let Some((name, _)) = views.iter().find(|(_, set)| set.is_empty()) {
        return Err(Error::EmptyView((*name).to_string()));
    }
    let common: BTreeSet<String> = first
        .iter()
        .filter(|u| views[1..].iter().all(|(_, set)| set.contains(*u)))
        .cloned()
        .collect();
    if common.is_empty() {
        let names: Vec<&str> = views.iter().map(|(n, _)| *n).collect();
        return Err(Error::EmptyIntersection(format!(
            "no unit is present in all of: {}",
            names.join(", ")
        )));
    }
    Ok(UnitIndex::new(common))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn intersection_is_sorted() {
        let a = set(&["C", "A", "B"]);
        let b = set(&["B", "C", "D"]);
        let c = set(&["C", "B"]);
        let idx = intersect_views(&[("calls", &a), ("trans", &b), ("corpus", &c)]).unwrap();
        assert_eq!(idx.names(), &["B".to_string(), "C".to_string()]);
    }

    #[test]
    fn identical_sets_are_identity() {
        let a = set(&["x.A", "x.B"]);
        let idx = intersect_views(&[("calls", &a), ("trans", &a), ("corpus", &a)]).unwrap();
        assert_eq!(idx, UnitIndex::new(["x.B", "x.A"]));
    }

    #[test]
    fn disjoint_sets_name_the_views() {
        let a = set(&["A"]);
        let b = set(&["B"]);
        let err = intersect_views(&[("calls", &a), ("trans", &b), ("corpus", &a)]).unwrap_err();
        match err {
            Error::EmptyIntersection(msg) => {
                assert!(msg.contains("calls") && msg.contains("trans") && msg.contains("corpus"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn positions_follow_lexicographic_order() {
        let idx = UnitIndex::new(["b", "a", "c", "a"]);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.position("a"), Some(0));
        assert_eq!(idx.position("c"), Some(2));
        assert!(idx.require("zzz").is_err());
    }
}
