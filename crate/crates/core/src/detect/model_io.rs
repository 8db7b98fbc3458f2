//! Line-oriented text format for trees and forests.
//!
//! ```text
//! epirisk-tree 1
//! features 8
//! nodes 3
//! 0 split 2 0.75 1 2
//! 1 leaf 40 2
//! 2 leaf 3 17
//! ```
//!
//! A forest file starts with `epirisk-forest 1`, a `features` line, a
//! `params` line and then one `tree <seed> <nodes>` block per tree.

use std::io::{BufRead, Write};

use super::forest::{ForestParams, RandomForest};
use super::tree::{DecisionTree, Node, TreeParams};
use crate::error::{Error, Result};

fn write_nodes<W: Write>(out: &mut W, tree: &DecisionTree) -> Result<()> {
    for (i, n) in tree.nodes.iter().enumerate() {
        match *n {
            Node::Split { feature, threshold, left, right } => {
                writeln!(out, "{i} split {feature} {threshold:?} {left} {right}")?
            }
            Node::Leaf { counts } => writeln!(out, "{i} leaf {} {}", counts[0], counts[1])?,
        }
    }
    Ok(())
}

pub fn write_tree<W: Write>(mut out: W, tree: &DecisionTree) -> Result<()> {
    writeln!(out, "epirisk-tree 1")?;
    writeln!(out, "features {}", tree.n_features)?;
    writeln!(out, "nodes {}", tree.nodes.len())?;
    write_nodes(&mut out, tree)
}

pub fn write_forest<W: Write>(mut out: W, forest: &RandomForest) -> Result<()> {
    let p = &forest.params;
    writeln!(out, "epirisk-forest 1")?;
    writeln!(out, "features {}", forest.n_features)?;
    writeln!(
        out,
        "params trees={} max_depth={} min_leaf={} max_features={} bootstrap={} seed={}",
        p.n_trees,
        p.tree.max_depth,
        p.tree.min_leaf,
        p.max_features.map_or_else(|| "auto".to_owned(), |m| m.to_string()),
        p.bootstrap as u8,
        p.seed
    )?;
    for (seed, tree) in forest.seeds.iter().zip(&forest.trees) {
        writeln!(out, "tree {seed} {}", tree.nodes.len())?;
        write_nodes(&mut out, tree)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::ModelFormat { line: self.line, reason: reason.into() }
    }

    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.err("unexpected end of file")),
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}` line")));
        }
        Ok(parts.map(str::to_owned).collect())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }

    fn nodes(&mut self, count: usize, n_features: usize) -> Result<DecisionTree> {
        let mut nodes = Vec::with_capacity(count);
        for i in 0..count {
            let l = self.next_line()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.first().map(|id| self.num::<usize>(id)).transpose()? != Some(i) {
                return Err(self.err(format!("expected node {i}")));
            }
            let node = match (f.get(1).copied(), f.len()) {
                (Some("split"), 6) => Node::Split {
                    feature: self.num(f[2])?,
                    threshold: self.num(f[3])?,
                    left: self.num(f[4])?,
                    right: self.num(f[5])?,
                },
                (Some("leaf"), 4) => Node::Leaf { counts: [self.num(f[2])?, self.num(f[3])?] },
                _ => return Err(self.err("expected `split` or `leaf` node")),
            };
            nodes.push(node);
        }
        let tree = DecisionTree { n_features, nodes };
        tree.validate().map_err(|e| self.err(e.to_string()))?;
        Ok(tree)
    }
}

fn header<R: BufRead>(lines: &mut Lines<R>, magic: &str) -> Result<usize> {
    let mut first = lines.keyed(magic)?;
    if first.pop().as_deref() != Some("1") {
        return Err(lines.err("unsupported model version"));
    }
    let f = lines.keyed("features")?;
    let f = f.first().ok_or_else(|| lines.err("missing feature count"))?;
    lines.num(f)
}

pub fn read_tree<R: BufRead>(input: R) -> Result<DecisionTree> {
    let mut lines = Lines { inner: input.lines(), line: 0 };
    let d = header(&mut lines, "epirisk-tree")?;
    let n = lines.keyed("nodes")?;
    let n = lines.num(n.first().ok_or_else(|| lines.err("missing node count"))?)?;
    lines.nodes(n, d)
}

pub fn read_forest<R: BufRead>(input: R) -> Result<RandomForest> {
    let mut lines = Lines { inner: input.lines(), line: 0 };
    let d = header(&mut lines, "epirisk-forest")?;
    let mut params = ForestParams { tree: TreeParams::default(), ..Default::default() };
    for kv in lines.keyed("params")? {
        let (k, v) = kv.split_once('=').ok_or_else(|| lines.err(format!("bad parameter `{kv}`")))?;
        match k {
            "trees" => params.n_trees = lines.num(v)?,
            "max_depth" => params.tree.max_depth = lines.num(v)?,
            "min_leaf" => params.tree.min_leaf = lines.num(v)?,
            "max_features" if v == "auto" => params.max_features = None,
            "max_features" => params.max_features = Some(lines.num(v)?),
            "bootstrap" => params.bootstrap = lines.num::<u8>(v)? != 0,
            "seed" => params.seed = lines.num(v)?,
            _ => return Err(lines.err(format!("unknown parameter `{k}`"))),
        }
    }
    let mut seeds = Vec::with_capacity(params.n_trees);
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let t = lines.keyed("tree")?;
        if t.len() != 2 {
            return Err(lines.err("expected `tree <seed> <nodes>`"));
        }
        seeds.push(lines.num(&t[0])?);
        let n = lines.num(&t[1])?;
        trees.push(lines.nodes(n, d)?);
    }
    Ok(RandomForest { n_features: d, params, seeds, trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{FeatureMatrix, Label};

    fn data() -> FeatureMatrix {
        let mut m = FeatureMatrix::new(2);
        for i in 0..60 {
            let x = [i as f64 * 0.1, ((i * 7) % 11) as f64 / 3.0];
            let l = if x[0] + x[1] > 4.0 { Label::Confirmed } else { Label::Normal };
            m.push(format!("u{i}"), &x, l, 0.0);
        }
        m
    }

    #[test]
    fn tree_round_trip() {
        let t = DecisionTree::fit(&data(), &TreeParams { max_depth: 4, min_leaf: 2 }).unwrap();
        let mut buf = Vec::new();
        write_tree(&mut buf, &t).unwrap();
        assert_eq!(read_tree(&buf[..]).unwrap(), t);
    }

    #[test]
    fn forest_round_trip() {
        for max_features in [Some(1), None] {
            let p = ForestParams { n_trees: 5, max_features, ..Default::default() };
            let f = RandomForest::fit(&data(), &p).unwrap();
            let mut buf = Vec::new();
            write_forest(&mut buf, &f).unwrap();
            assert_eq!(read_forest(&buf[..]).unwrap(), f);
        }
    }

    #[test]
    fn rejects_bad_feature_index() {
        let text = "epirisk-tree 1\nfeatures 1\nnodes 3\n0 split 4 0.5 1 2\n1 leaf 1 0\n2 leaf 0 1\n";
        assert!(matches!(read_tree(text.as_bytes()), Err(Error::ModelFormat { .. })));
        let truncated = "epirisk-tree 1\nfeatures 1\nnodes 2\n0 leaf 1 0\n";
        assert!(read_tree(truncated.as_bytes()).is_err());
    }
}
