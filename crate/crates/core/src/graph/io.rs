//! Text formats: raw edge lists in, prepared split directories out.
//!
//! A prepared directory holds
//!
//! - `train.txt`, `val.txt`, `test.txt`: one line per user with at least one
//!   item, `"user item item ..."` in dense indices;
//! - `user_map.tsv`, `item_map.tsv`: `"original-id<TAB>dense-index"` per line;
//! - `stats.json`: [`PreparedStats`].

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InteractionGraph, RawInteractions};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// Grouped if any line carries more than two tokens, pairs otherwise.
    #[default]
    Auto,
    /// `"user item"`; tokens after the second are ignored.
    Pairs,
    /// `"user item item ..."`.
    Grouped,
}

/// Parses a whitespace-separated edge list. Blank lines and lines starting
/// with `#` are skipped.
pub fn load_interactions(source: impl Read, format: EdgeListFormat) -> Result<RawInteractions> {
    let mut lines: Vec<(usize, Vec<String>)> = Vec::new();
    for (n, line) in BufReader::new(source).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<String> = trimmed.split_whitespace().map(str::to_owned).collect();
        if tokens.len() < 2 {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected at least 2 tokens, found {}", tokens.len()),
            });
        }
        lines.push((n + 1, tokens));
    }
    if lines.is_empty() {
        return Err(Error::EmptyDataset("input contains no interactions".into()));
    }

    let grouped = match format {
        EdgeListFormat::Grouped => true,
        EdgeListFormat::Pairs => false,
        EdgeListFormat::Auto => lines.iter().any(|(_, t)| t.len() > 2),
    };
    let mut raw = RawInteractions::new();
    for (_, tokens) in lines {
        let mut it = tokens.into_iter();
        let user = it.next().unwrap();
        if grouped {
            for item in it {
                raw.insert(user.clone(), item);
            }
        } else {
            raw.insert(user, it.next().unwrap());
        }
    }
    Ok(raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// `1 - interactions / (users * items)`.
    pub sparsity: f64,
    pub kcore: usize,
    pub seed: u64,
}

impl PreparedStats {
    pub fn of(graph: &InteractionGraph, kcore: usize, seed: u64) -> Self {
        let interactions = graph.num_interactions();
        let cells = (graph.num_users() * graph.num_items()) as f64;
        PreparedStats {
            users: graph.num_users(),
            items: graph.num_items(),
            interactions,
            train: graph.num_train(),
            val: graph.val().iter().map(Vec::len).sum(),
            test: graph.test().iter().map(Vec::len).sum(),
            sparsity: 1.0 - interactions as f64 / cells,
            kcore,
            seed,
        }
    }
}

fn grouped_text(lists: &[Vec<u32>]) -> String {
    let mut out = String::new();
    for (u, items) in lists.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        write!(out, "{u}").unwrap();
        for i in items {
            write!(out, " {i}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn map_text(ids: &[String]) -> String {
    ids.iter()
        .enumerate()
        .fold(String::new(), |mut s, (i, id)| {
            writeln!(s, "{id}\t{i}").unwrap();
            s
        })
}

pub fn write_prepared(dir: &Path, graph: &InteractionGraph, stats: &PreparedStats) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("train.txt"), grouped_text(graph.train()))?;
    fs::write(dir.join("val.txt"), grouped_text(graph.val()))?;
    fs::write(dir.join("test.txt"), grouped_text(graph.test()))?;
    fs::write(dir.join("user_map.tsv"), map_text(graph.user_ids()))?;
    fs::write(dir.join("item_map.tsv"), map_text(graph.item_ids()))?;
    let mut json = serde_json::to_string_pretty(stats)?;
    json.push('\n');
    fs::write(dir.join("stats.json"), json)?;
    Ok(())
}

fn read_map(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    let mut ids: Vec<Option<String>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, idx) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("{}: expected 'id<TAB>index'", path.display()),
        })?;
        let idx: usize = idx.trim().parse().map_err(|_| Error::Parse {
            line: n + 1,
            message: format!("{}: bad index '{idx}'", path.display()),
        })?;
        if idx >= ids.len() {
            ids.resize(idx + 1, None);
        }
        ids[idx] = Some(id.to_owned());
    }
    ids.into_iter()
        .enumerate()
        .map(|(i, id)| {
            id.ok_or_else(|| Error::Checkpoint(format!("{}: index {i} missing", path.display())))
        })
        .collect()
}

fn read_grouped(path: &Path, num_users: usize) -> Result<Vec<Vec<u32>>> {
    let text = fs::read_to_string(path)?;
    let mut lists = vec![Vec::new(); num_users];
    for (n, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(user) = tokens.next() else { continue };
        let bad = |what: &str| Error::Parse {
            line: n + 1,
            message: format!("{}: bad {what}", path.display()),
        };
        let u: usize = user.parse().map_err(|_| bad("user index"))?;
        if u >= num_users {
            return Err(bad("user index (out of range)"));
        }
        for t in tokens {
            lists[u].push(t.parse::<u32>().map_err(|_| bad("item index"))?);
        }
    }
    Ok(lists)
}

/// Loads a directory written by [`write_prepared`].
pub fn read_prepared(dir: &Path) -> Result<InteractionGraph> {
    let user_ids = read_map(&dir.join("user_map.tsv"))?;
    let item_ids = read_map(&dir.join("item_map.tsv"))?;
    let nu = user_ids.len();
    let train = read_grouped(&dir.join("train.txt"), nu)?;
    let val = read_grouped(&dir.join("val.txt"), nu)?;
    let test = read_grouped(&dir.join("test.txt"), nu)?;
    InteractionGraph::from_splits(nu, item_ids.len(), train, val, test)?
        .with_ids(user_ids, item_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{split, SplitRatios};

    fn load(s: &str) -> Result<RawInteractions> {
        load_interactions(s.as_bytes(), EdgeListFormat::Auto)
    }

    #[test]
    fn pair_lines() {
        let raw = load("u1 i1\nu1 i2\nu2 i1").unwrap();
        assert_eq!(raw.len(), 3);
        assert_eq!(raw.users().len(), 2);
        assert_eq!(raw.items().len(), 2);
    }

    #[test]
    fn duplicates_dropped() {
        assert_eq!(load("u1 i1\nu1 i1").unwrap().len(), 1);
    }

    #[test]
    fn grouped_line() {
        let raw = load("u1 i1 i2 i3").unwrap();
        assert_eq!(raw.len(), 3);
        assert!(raw.contains("u1", "i3"));
    }

    #[test]
    fn grouped_and_pairs_agree() {
        let pairs = "a x\na y\nb y\nb z\nc x\n";
        let grouped = "a x y\nb y z\nc x\n";
        assert_eq!(load(pairs).unwrap(), load(grouped).unwrap());
        assert_eq!(
            load_interactions(grouped.as_bytes(), EdgeListFormat::Grouped).unwrap(),
            load_interactions(pairs.as_bytes(), EdgeListFormat::Pairs).unwrap()
        );
    }

    #[test]
    fn malformed_line_reports_number() {
        match load("u1 i1\nlonely\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(load(""), Err(Error::EmptyDataset(_))));
        assert!(matches!(load("\n# comment\n"), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn prepared_roundtrip() {
        let raw = RawInteractions::from_pairs(
            (0..60).map(|k| (format!("u{}", k % 5), format!("i{}", k % 17))),
        );
        let g = split(&raw, SplitRatios::default(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_prepared(dir.path(), &g, &PreparedStats::of(&g, 1, 5)).unwrap();
        assert_eq!(read_prepared(dir.path()).unwrap(), g);
    }
}
