use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deduplicated `(user, item)` pairs with opaque string ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawInteractions {
    pairs: BTreeSet<(String, String)>,
}

impl RawInteractions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair; returns `false` if it was already present.
    pub fn insert(&mut self, user: impl Into<String>, item: impl Into<String>) -> bool {
        self.pairs.insert((user.into(), item.into()))
    }

    pub fn from_pairs<I, U, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (U, V)>,
        U: Into<String>,
        V: Into<String>,
    {
        let mut raw = Self::new();
        for (u, v) in pairs {
            raw.insert(u, v);
        }
        raw
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(u, v)| (u.as_str(), v.as_str()))
    }

    pub fn contains(&self, user: &str, item: &str) -> bool {
        self.pairs.contains(&(user.to_owned(), item.to_owned()))
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(u, _)| u.as_str()).collect()
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(_, v)| v.as_str()).collect()
    }

    pub(crate) fn retain(&mut self, f: impl FnMut(&(String, String)) -> bool) {
        self.pairs.retain(f);
    }
}

/// Which held-out part of the interactions to evaluate on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }
}

/// Dense-indexed bipartite interaction graph with a per-user split.
///
/// Users occupy node indices `0..num_users` and items
/// `num_users..num_users + num_items` in the combined node space.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionGraph {
    num_users: usize,
    num_items: usize,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    train: Vec<Vec<u32>>,
    val: Vec<Vec<u32>>,
    test: Vec<Vec<u32>>,
    user_degree: Vec<usize>,
    item_degree: Vec<usize>,
}

impl InteractionGraph {
    /// Builds a graph from per-user item lists. Lists are sorted on the way in.
    /// Ids default to the decimal dense index when not supplied.
    pub fn from_splits(
        num_users: usize,
        num_items: usize,
        mut train: Vec<Vec<u32>>,
        mut val: Vec<Vec<u32>>,
        mut test: Vec<Vec<u32>>,
    ) -> Result<Self> {
        for lists in [&mut train, &mut val, &mut test] {
            if lists.len() > num_users {
                return Err(Error::Shape(format!(
                    "{} user lists for {} users",
                    lists.len(),
                    num_users
                )));
            }
            lists.resize(num_users, Vec::new());
            for l in lists.iter_mut() {
                l.sort_unstable();
                if l.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Shape("duplicate item in a user's list".into()));
                }
                if l.iter().any(|&i| i as usize >= num_items) {
                    return Err(Error::Shape(format!(
                        "item index out of range (num_items = {num_items})"
                    )));
                }
            }
        }
        for u in 0..num_users {
            let overlaps = |a: &[u32], b: &[u32]| a.iter().any(|x| b.binary_search(x).is_ok());
            if overlaps(&train[u], &val[u])
                || overlaps(&train[u], &test[u])
                || overlaps(&val[u], &test[u])
            {
                return Err(Error::Shape(format!(
                    "user {u} has overlapping train/val/test items"
                )));
            }
        }
        let user_degree = train.iter().map(Vec::len).collect();
        let mut item_degree = vec![0usize; num_items];
        for l in &train {
            for &i in l {
                item_degree[i as usize] += 1;
            }
        }
        Ok(InteractionGraph {
            num_users,
            num_items,
            user_ids: (0..num_users).map(|u| u.to_string()).collect(),
            item_ids: (0..num_items).map(|i| i.to_string()).collect(),
            train,
            val,
            test,
            user_degree,
            item_degree,
        })
    }

    pub fn with_ids(mut self, user_ids: Vec<String>, item_ids: Vec<String>) -> Result<Self> {
        if user_ids.len() != self.num_users || item_ids.len() != self.num_items {
            return Err(Error::Shape("id map sizes disagree with the graph".into()));
        }
        self.user_ids = user_ids;
        self.item_ids = item_ids;
        Ok(self)
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    #[inline]
    pub fn item_node(&self, item: usize) -> usize {
        self.num_users + item
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn train(&self) -> &[Vec<u32>] {
        &self.train
    }

    pub fn val(&self) -> &[Vec<u32>] {
        &self.val
    }

    pub fn test(&self) -> &[Vec<u32>] {
        &self.test
    }

    pub fn split_lists(&self, split: Split) -> &[Vec<u32>] {
        match split {
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn user_degree(&self) -> &[usize] {
        &self.user_degree
    }

    pub fn item_degree(&self) -> &[usize] {
        &self.item_degree
    }

    pub fn num_train(&self) -> usize {
        self.train.iter().map(Vec::len).sum()
    }

    pub fn num_interactions(&self) -> usize {
        self.num_train()
            + self.val.iter().map(Vec::len).sum::<usize>()
            + self.test.iter().map(Vec::len).sum::<usize>()
    }

    #[inline]
    pub fn is_train_item(&self, user: usize, item: u32) -> bool {
        self.train[user].binary_search(&item).is_ok()
    }

    /// Training-degree of every node in the combined index space.
    pub fn node_degrees(&self) -> Vec<usize> {
        self.user_degree
            .iter()
            .chain(self.item_degree.iter())
            .copied()
            .collect()
    }

    /// Unweighted adjacency lists of the training graph over the combined node space.
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for (u, items) in self.train.iter().enumerate() {
            for &i in items {
                let v = self.item_node(i as usize);
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        adj
    }
}
