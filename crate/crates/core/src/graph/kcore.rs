use std::collections::{HashMap, VecDeque};

use super::RawInteractions;
use crate::error::{Error, Result};

/// Removes users and items of degree `< k` until every survivor has degree `>= k`.
///
/// Peeling is queue-driven, so each pair is touched a constant number of times.
/// The surviving set is the unique maximal subgraph with the degree property and
/// does not depend on the peeling order.
pub fn kcore_filter(raw: &RawInteractions, k: usize) -> Result<RawInteractions> {
    if k == 0 {
        return Err(Error::Config("k-core threshold must be at least 1".into()));
    }

    // Users take ids 0..nu, items nu.. in one node space.
    let mut ids: HashMap<(bool, &str), usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(raw.len());
    for (u, v) in raw.pairs() {
        let next = ids.len();
        let a = *ids.entry((false, u)).or_insert(next);
        let next = ids.len();
        let b = *ids.entry((true, v)).or_insert(next);
        edges.push((a, b));
    }
    let n = ids.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        incident[a].push(e);
        incident[b].push(e);
    }

    let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut edge_alive = vec![true; edges.len()];
    let mut queue: VecDeque<usize> = (0..n).filter(|&x| degree[x] < k).collect();
    for &x in &queue {
        removed[x] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &e in &incident[x] {
            if !edge_alive[e] {
                continue;
            }
            edge_alive[e] = false;
            let (a, b) = edges[e];
            let other = if a == x { b } else { a };
            degree[other] -= 1;
            if !removed[other] && degree[other] < k {
                removed[other] = true;
                queue.push_back(other);
            }
        }
    }

    let mut out = raw.clone();
    let mut e = 0;
    out.retain(|_| {
        let keep = edge_alive[e];
        e += 1;
        keep
    });
    if out.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no interactions survive the {k}-core filter"
        )));
    }
    Ok(out)
}
