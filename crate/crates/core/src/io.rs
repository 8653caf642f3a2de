//! Text formats: graphs, features, labels, coefficient layouts, kept-index
//! lists, and serialized hierarchies.
//!
//! Graph files: first line `n m`, then `m` lines `u v` (0-indexed,
//! whitespace separated, LF endings). Feature files: first line `n c`, then
//! `n` lines of `c` decimal floats. Label files: one integer per line, `-1`
//! for unlabeled.

use std::fmt::Write as _;
use std::path::Path;

use crate::haar::{BlockLayout, HaarHierarchy};
use crate::matching::PairGraph;
use crate::{Error, FeatureMatrix, Graph, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: &str, path: &Path, line: usize, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Parses the graph text format, rejecting self-loops and duplicate edges
/// with the offending line number.
pub fn parse_graph(text: &str, path: &Path) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut it = header.split_whitespace();
    let n = parse_usize(
        it.next()
            .ok_or_else(|| parse_err(path, 1, "missing node count"))?,
        path,
        1,
        "node count",
    )?;
    let m = parse_usize(
        it.next()
            .ok_or_else(|| parse_err(path, 1, "missing edge count"))?,
        path,
        1,
        "edge count",
    )?;
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let u = parse_usize(
            it.next()
                .ok_or_else(|| parse_err(path, lineno, "missing endpoint"))?,
            path,
            lineno,
            "node index",
        )?;
        let v = parse_usize(
            it.next()
                .ok_or_else(|| parse_err(path, lineno, "missing endpoint"))?,
            path,
            lineno,
            "node index",
        )?;
        if u == v {
            return Err(parse_err(
                path,
                lineno,
                format!("self-loop at line {lineno}"),
            ));
        }
        if u >= n || v >= n {
            return Err(parse_err(
                path,
                lineno,
                format!("node index out of range at line {lineno} (n = {n})"),
            ));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate edge at line {lineno}"),
            ));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(
            path,
            1,
            format!("header promises {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    parse_graph(&std::fs::read_to_string(path)?, path)
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses the feature text format.
pub fn parse_features(text: &str, path: &Path) -> Result<FeatureMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut it = header.split_whitespace();
    let n = parse_usize(
        it.next()
            .ok_or_else(|| parse_err(path, 1, "missing row count"))?,
        path,
        1,
        "row count",
    )?;
    let c = parse_usize(
        it.next()
            .ok_or_else(|| parse_err(path, 1, "missing column count"))?,
        path,
        1,
        "column count",
    )?;
    let mut data = Vec::with_capacity(n * c);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid float `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, "non-finite feature value"));
            }
            data.push(v);
            count += 1;
        }
        if count != c {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {c} values, found {count}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(
            path,
            1,
            format!("header promises {n} rows, found {rows}"),
        ));
    }
    FeatureMatrix::from_vec(n, c, data)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_features(&std::fs::read_to_string(path)?, path)
}

/// Writes features with shortest round-trip float formatting.
pub fn format_features(f: &FeatureMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", f.rows(), f.cols());
    for r in 0..f.rows() {
        let row = f.row(r);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_features(f: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_features(f))?;
    Ok(())
}

/// One label per line; `-1` marks an unlabeled node.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: i64 = line
            .trim()
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("invalid label `{}`", line.trim())))?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn save_labels(labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Sidecar describing the coefficient-row layout of a transformed matrix.
pub fn format_layout(layout: &BlockLayout) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n: {}", layout.n());
    let _ = writeln!(out, "levels: {}", layout.detail_blocks().len());
    for (l, &(off, rows)) in layout.detail_blocks().iter().enumerate() {
        let _ = writeln!(out, "detail {} offset {} rows {}", l + 1, off, rows);
    }
    let (off, rows) = layout.final_block();
    let _ = writeln!(out, "final offset {off} rows {rows}");
    out
}

pub fn save_layout(layout: &BlockLayout, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_layout(layout))?;
    Ok(())
}

/// Kept-index list: one integer per line.
pub fn save_indices(kept: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for i in kept {
        let _ = writeln!(out, "{i}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_usize(line.trim(), path, idx + 1, "index")?);
    }
    Ok(out)
}

/// Serializes the pair structure of every level so a compressed signal can
/// be inverted without the original features.
pub fn format_hierarchy(h: &HaarHierarchy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n: {}", h.n());
    let _ = writeln!(out, "levels: {}", h.levels().len());
    for level in h.levels() {
        let pg = level.pair_graph();
        let orphan = pg.orphan().map_or("none".to_string(), |o| o.to_string());
        let _ = writeln!(
            out,
            "level n_fine {} pairs {} orphan {}",
            level.n_fine(),
            pg.pairs().len(),
            orphan
        );
        for &(i, j) in pg.pairs() {
            let _ = writeln!(out, "{i} {j}");
        }
    }
    out
}

pub fn save_hierarchy(h: &HaarHierarchy, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_hierarchy(h))?;
    Ok(())
}

pub fn load_hierarchy(path: impl AsRef<Path>) -> Result<HaarHierarchy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().peekable();

    let mut expect_kv = |key: &str| -> Result<usize> {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("missing `{key}` line")))?;
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| parse_err(path, idx + 1, format!("expected `{key}`")))?;
        parse_usize(rest.trim(), path, idx + 1, key)
    };
    let n = expect_kv("n:")?;
    let levels = expect_kv("levels:")?;

    let mut pair_graphs = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "missing level header"))?;
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 7 || toks[0] != "level" || toks[1] != "n_fine" || toks[3] != "pairs" {
            return Err(parse_err(path, lineno, "malformed level header"));
        }
        let n_fine = parse_usize(toks[2], path, lineno, "n_fine")?;
        let n_pairs = parse_usize(toks[4], path, lineno, "pair count")?;
        let orphan = if toks[6] == "none" {
            None
        } else {
            Some(parse_usize(toks[6], path, lineno, "orphan")?)
        };
        let mut pairs = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| parse_err(path, 0, "missing pair line"))?;
            let lineno = idx + 1;
            let mut it = line.split_whitespace();
            let i = parse_usize(
                it.next()
                    .ok_or_else(|| parse_err(path, lineno, "missing pair"))?,
                path,
                lineno,
                "pair index",
            )?;
            let j = parse_usize(
                it.next()
                    .ok_or_else(|| parse_err(path, lineno, "missing pair"))?,
                path,
                lineno,
                "pair index",
            )?;
            pairs.push((i, j));
        }
        pair_graphs.push(
            PairGraph::from_parts(n_fine, pairs, orphan)
                .map_err(|e| parse_err(path, 0, e.to_string()))?,
        );
    }
    HaarHierarchy::from_levels(n, pair_graphs)
}
