//! Weighted graphs with a pinned vertex, and exhaustions with wired boundary.
//!
//! Vertices carry string ids in files and dense indices internally; the pinned
//! vertex δ is always the last index, so index `i < n_free()` ranges over `V`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite connected weighted graph on `Ṽ = V ∪ {δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    ids: Vec<String>,
    weights: DMatrix<f64>,
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeJson {
    pub i: String,
    pub j: String,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub pinned: String,
    pub edges: Vec<EdgeJson>,
    /// Present only for towers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Vec<String>>>,
}

fn index_ids(ids: &[String]) -> Result<HashMap<&str, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.as_str(), k).is_some() {
            return Err(Error::Graph(format!("duplicate vertex `{id}`")));
        }
    }
    Ok(map)
}

fn weight_matrix(n: usize, edges: &[(usize, usize, f64)]) -> Result<DMatrix<f64>> {
    let mut w = DMatrix::zeros(n, n);
    for &(i, j, x) in edges {
        if i == j {
            return Err(Error::Graph(format!("self-loop at vertex index {i}")));
        }
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Graph(format!("edge weight {x} must be positive and finite")));
        }
        if w[(i, j)] != 0.0 {
            return Err(Error::Graph(format!("parallel edge between indices {i} and {j}")));
        }
        w[(i, j)] = x;
        w[(j, i)] = x;
    }
    Ok(w)
}

impl Graph {
    /// Build from free vertices `V`, the pinned id, and undirected weighted edges.
    pub fn new<S: AsRef<str>>(vertices: &[S], pinned: &str, edges: &[(S, S, f64)]) -> Result<Self> {
        let mut ids: Vec<String> = vertices
            .iter()
            .map(|v| v.as_ref().to_string())
            .filter(|v| v != pinned)
            .collect();
        ids.push(pinned.to_string());
        let index = index_ids(&ids)?;
        let lookup = |v: &str| {
            index.get(v).copied().ok_or_else(|| Error::Graph(format!("edge endpoint `{v}` is not a vertex")))
        };
        let e = edges
            .iter()
            .map(|(a, b, w)| Ok((lookup(a.as_ref())?, lookup(b.as_ref())?, *w)))
            .collect::<Result<Vec<_>>>()?;
        let w = weight_matrix(ids.len(), &e)?;
        Self::from_parts(ids, w)
    }

    /// Build from a symmetric weight matrix over `Ṽ` (pinned vertex last).
    /// Free vertices are named `"1"…"n"` and the pinned one `"delta"`.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        let mut ids: Vec<String> = (1..n).map(|k| k.to_string()).collect();
        ids.push("delta".into());
        Self::from_parts(ids, weights)
    }

    /// Same vertex set, new weight matrix.
    pub fn with_weights(&self, weights: DMatrix<f64>) -> Result<Self> {
        Self::from_parts(self.ids.clone(), weights)
    }

    fn from_parts(ids: Vec<String>, weights: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::Graph("need at least one free vertex besides the pinned one".into()));
        }
        if weights.shape() != (n, n) {
            return Err(Error::Graph("weight matrix does not match the vertex count".into()));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("self-loop at `{}`", ids[i])));
            }
            for j in (i + 1)..n {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if a != b {
                    return Err(Error::Graph(format!("asymmetric weight between `{}` and `{}`", ids[i], ids[j])));
                }
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::Graph(format!("invalid weight {a} between `{}` and `{}`", ids[i], ids[j])));
                }
                if a > 0.0 {
                    edges.push((i, j, a));
                }
            }
        }
        let g = Self { ids, weights, edges };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.n_tilde();
        let mut seen = vec![false; n];
        let mut stack = vec![n - 1];
        seen[n - 1] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.weights[(i, j)] > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(k) => Err(Error::Graph(format!("vertex `{}` is not connected to the pinned vertex", self.ids[k]))),
            None => Ok(()),
        }
    }

    /// `|Ṽ|`.
    pub fn n_tilde(&self) -> usize {
        self.ids.len()
    }

    /// `|V|`.
    pub fn n_free(&self) -> usize {
        self.ids.len() - 1
    }

    /// Index of the pinned vertex (always last).
    pub fn pinned(&self) -> usize {
        self.ids.len() - 1
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn pinned_id(&self) -> &str {
        &self.ids[self.pinned()]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::Graph(format!("unknown vertex `{id}`")))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Edges `(i, j, W_ij)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<(&str, &str, f64)> = json.edges.iter().map(|e| (e.i.as_str(), e.j.as_str(), e.w)).collect();
        let verts: Vec<&str> = json.vertices.iter().map(String::as_str).collect();
        Self::new(&verts, &json.pinned, &edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.ids[..self.n_free()].to_vec(),
            pinned: self.pinned_id().to_string(),
            edges: self
                .edges
                .iter()
                .map(|&(i, j, w)| EdgeJson { i: self.ids[i].clone(), j: self.ids[j].clone(), w })
                .collect(),
            levels: None,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        let json: GraphJson =
            serde_json::from_str(&text).map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }
}

/// Explicit finite description of an infinite graph together with an
/// increasing sequence of finite vertex sets `V_0 ⊂ V_1 ⊂ …`.
#[derive(Debug, Clone)]
pub struct GraphTower {
    ids: Vec<String>,
    weights: DMatrix<f64>,
    levels: Vec<Vec<usize>>,
    pinned_id: String,
}

impl GraphTower {
    pub fn new<S: AsRef<str>>(
        universe: &[S],
        pinned: &str,
        edges: &[(S, S, f64)],
        levels: &[Vec<S>],
    ) -> Result<Self> {
        let ids: Vec<String> = universe.iter().map(|v| v.as_ref().to_string()).collect();
        if ids.iter().any(|v| v == pinned) {
            return Err(Error::Graph("the pinned id must not be a universe vertex".into()));
        }
        let index = index_ids(&ids)?;
        let lookup = |v: &str| {
            index.get(v).copied().ok_or_else(|| Error::Graph(format!("`{v}` is not a universe vertex")))
        };
        let e = edges
            .iter()
            .map(|(a, b, w)| Ok((lookup(a.as_ref())?, lookup(b.as_ref())?, *w)))
            .collect::<Result<Vec<_>>>()?;
        let weights = weight_matrix(ids.len(), &e)?;
        let mut lv: Vec<Vec<usize>> = Vec::with_capacity(levels.len());
        for level in levels {
            let mut set = level.iter().map(|v| lookup(v.as_ref())).collect::<Result<Vec<_>>>()?;
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::Graph("empty level".into()));
            }
            if let Some(prev) = lv.last() {
                let cur: HashSet<usize> = set.iter().copied().collect();
                if !prev.iter().all(|k| cur.contains(k)) {
                    return Err(Error::Graph("levels must be increasing".into()));
                }
            }
            lv.push(set);
        }
        if lv.is_empty() {
            return Err(Error::Graph("a tower needs at least one level".into()));
        }
        Ok(Self { ids, weights, levels: lv, pinned_id: pinned.to_string() })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.ids
    }

    /// Universe indices of `V_n`, ascending.
    pub fn level(&self, n: usize) -> Result<&[usize]> {
        self.levels
            .get(n)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Graph(format!("level {n} out of range (have {})", self.levels.len())))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// The finite graph on `V_n ∪ {δ_n}` with all outside weight wired to `δ_n`.
    pub fn wired_subgraph(&self, n: usize) -> Result<Graph> {
        let level = self.level(n)?;
        let inside: HashSet<usize> = level.iter().copied().collect();
        let m = level.len() + 1;
        let mut w = DMatrix::zeros(m, m);
        for (a, &i) in level.iter().enumerate() {
            let mut outside = 0.0;
            for j in 0..self.ids.len() {
                if !inside.contains(&j) {
                    outside += self.weights[(i, j)];
                }
            }
            if !outside.is_finite() {
                return Err(Error::Graph(format!("vertex `{}` has infinite outside weight", self.ids[i])));
            }
            w[(a, m - 1)] = outside;
            w[(m - 1, a)] = outside;
            for (b, &j) in level.iter().enumerate() {
                w[(a, b)] = self.weights[(i, j)];
            }
        }
        let mut ids: Vec<String> = level.iter().map(|&i| self.ids[i].clone()).collect();
        ids.push(self.pinned_id.clone());
        Graph::from_parts(ids, w).map_err(|e| Error::Graph(format!("level {n}: {e}")))
    }

    /// Extend a nonpositive finitely supported `α` over the universe to `Ṽ_n`,
    /// moving the mass outside `V_n` onto `δ_n`.
    pub fn extend_alpha(&self, alpha: &[f64], n: usize) -> Result<Vec<f64>> {
        if alpha.len() != self.ids.len() {
            return Err(Error::Shape(format!("alpha has {} entries, universe has {}", alpha.len(), self.ids.len())));
        }
        if let Some(x) = alpha.iter().find(|x| !(**x <= 0.0)) {
            return Err(Error::Domain(format!("alpha entries must lie in (-inf, 0], got {x}")));
        }
        let level = self.level(n)?;
        let inside: HashSet<usize> = level.iter().copied().collect();
        let mut out: Vec<f64> = level.iter().map(|&i| alpha[i]).collect();
        let outside: f64 = (0..self.ids.len()).filter(|j| !inside.contains(j)).map(|j| alpha[j]).sum();
        out.push(outside);
        Ok(out)
    }

    /// Position of each vertex of level `n` inside level `m ≥ n`.
    pub fn embedding(&self, n: usize, m: usize) -> Result<Vec<usize>> {
        let small = self.level(n)?;
        let big = self.level(m)?;
        small
            .iter()
            .map(|i| {
                big.iter()
                    .position(|j| j == i)
                    .ok_or_else(|| Error::Graph(format!("level {n} is not contained in level {m}")))
            })
            .collect()
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let levels = json
            .levels
            .as_ref()
            .ok_or_else(|| Error::Fixture("tower file has no `levels`".into()))?;
        let edges: Vec<(&str, &str, f64)> = json.edges.iter().map(|e| (e.i.as_str(), e.j.as_str(), e.w)).collect();
        let verts: Vec<&str> = json.vertices.iter().map(String::as_str).collect();
        let lv: Vec<Vec<&str>> = levels.iter().map(|l| l.iter().map(String::as_str).collect()).collect();
        Self::new(&verts, &json.pinned, &edges, &lv)
    }

    pub fn to_json(&self) -> GraphJson {
        let mut edges = Vec::new();
        for i in 0..self.ids.len() {
            for j in (i + 1)..self.ids.len() {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    edges.push(EdgeJson { i: self.ids[i].clone(), j: self.ids[j].clone(), w });
                }
            }
        }
        GraphJson {
            vertices: self.ids.clone(),
            pinned: self.pinned_id.clone(),
            edges,
            levels: Some(self.levels.iter().map(|l| l.iter().map(|&k| self.ids[k].clone()).collect()).collect()),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        let json: GraphJson =
            serde_json::from_str(&text).map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }
}

/// Small graphs used throughout the checks and tests.
pub mod fixtures {
    use super::*;

    /// `δ — 1` with weight `w`.
    pub fn single_edge(w: f64) -> Graph {
        Graph::new(&["1"], "delta", &[("1", "delta", w)]).expect("valid fixture")
    }

    /// Triangle on `{1, 2, δ}`.
    pub fn triangle(w12: f64, w1d: f64, w2d: f64) -> Graph {
        Graph::new(&["1", "2"], "delta", &[("1", "2", w12), ("1", "delta", w1d), ("2", "delta", w2d)])
            .expect("valid fixture")
    }

    /// Path `δ — 1 — 2 — … — n` with unit weights.
    pub fn path(n: usize) -> Graph {
        let ids: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
        let mut edges = vec![(ids[0].clone(), "delta".to_string(), 1.0)];
        for k in 1..n {
            edges.push((ids[k - 1].clone(), ids[k].clone(), 1.0));
        }
        let e: Vec<(&str, &str, f64)> = edges.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w)).collect();
        let v: Vec<&str> = ids.iter().map(String::as_str).collect();
        Graph::new(&v, "delta", &e).expect("valid fixture")
    }

    /// Half-line `1 — 2 — 3 — 4` (unit weights), levels `{1}`, `{1,2}`, `{1,2,3}`.
    ///
    /// Only the right end of each level touches the outside, so
    /// `W^(n)_{n,δ_n} = 1` and every other vertex is interior.
    pub fn line_tower() -> GraphTower {
        GraphTower::new(
            &["1", "2", "3", "4"],
            "delta",
            &[("1", "2", 1.0), ("2", "3", 1.0), ("3", "4", 1.0)],
            &[vec!["1"], vec!["1", "2"], vec!["1", "2", "3"]],
        )
        .expect("valid fixture")
    }

    /// Segment `−2 … 2` of ℤ (unit weights), levels `{0}`, `{−1,0,1}`.
    /// Both ends of each level are wired.
    pub fn z_tower() -> GraphTower {
        GraphTower::new(
            &["-2", "-1", "0", "1", "2"],
            "delta",
            &[("-2", "-1", 1.0), ("-1", "0", 1.0), ("0", "1", 1.0), ("1", "2", 1.0)],
            &[vec!["0"], vec!["-1", "0", "1"]],
        )
        .expect("valid fixture")
    }

    /// Star with the given leaf weights; a single level containing the center.
    pub fn star_tower(leaf_weights: &[f64]) -> GraphTower {
        let mut universe = vec!["c".to_string()];
        let mut edges = Vec::new();
        for (k, &w) in leaf_weights.iter().enumerate() {
            let leaf = format!("l{k}");
            universe.push(leaf.clone());
            edges.push(("c".to_string(), leaf, w));
        }
        let u: Vec<&str> = universe.iter().map(String::as_str).collect();
        let e: Vec<(&str, &str, f64)> = edges.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w)).collect();
        GraphTower::new(&u, "delta", &e, &[vec!["c"]]).expect("valid fixture")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_bad_graphs() {
        assert!(Graph::new(&["1", "2"], "d", &[("1", "d", 1.0)]).is_err()); // 2 disconnected
        assert!(Graph::new(&["1"], "d", &[("1", "1", 1.0)]).is_err());
        assert!(Graph::new(&["1"], "d", &[("1", "d", -1.0)]).is_err());
        assert!(Graph::new(&["1"], "d", &[("1", "d", 1.0), ("d", "1", 2.0)]).is_err());
        assert!(Graph::new(&["1", "1"], "d", &[("1", "d", 1.0)]).is_err());
    }

    #[test]
    fn pinned_is_last() {
        let g = triangle(1.0, 2.0, 3.0);
        assert_eq!(g.pinned(), 2);
        assert_eq!(g.pinned_id(), "delta");
        assert_eq!(g.weight(0, 2), 2.0);
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn line_tower_boundary() {
        let t = line_tower();
        let g = t.wired_subgraph(2).unwrap();
        // V_2 = {1,2,3}: only 3 touches the outside (vertex 4)
        assert_eq!(g.weight(2, 3), 1.0);
        assert_eq!(g.weight(0, 3), 0.0);
        let g0 = t.wired_subgraph(0).unwrap();
        assert_eq!(g0.weight(0, 1), 1.0);
    }

    #[test]
    fn z_tower_wires_both_ends() {
        let g = z_tower().wired_subgraph(1).unwrap();
        assert_eq!(g.ids(), &["-1", "0", "1", "delta"]);
        assert_eq!(g.weight(0, 3), 1.0);
        assert_eq!(g.weight(2, 3), 1.0);
        assert_eq!(g.weight(1, 3), 0.0);
    }

    #[test]
    fn full_universe_level_is_disconnected() {
        let t = GraphTower::new(&["1", "2"], "d", &[("1", "2", 1.0)], &[vec!["1", "2"]]).unwrap();
        assert!(matches!(t.wired_subgraph(0), Err(Error::Graph(_))));
    }

    #[test]
    fn star_center_collects_all_leaves() {
        let t = star_tower(&[0.5, 1.25, 2.0]);
        let g = t.wired_subgraph(0).unwrap();
        assert_eq!(g.weight(0, 1), 3.75);
    }

    #[test]
    fn alpha_extension() {
        let t = line_tower();
        assert_eq!(t.extend_alpha(&[0.0; 4], 1).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(t.extend_alpha(&[0.0, 0.0, 0.0, -1.0], 1).unwrap(), vec![0.0, 0.0, -1.0]);
        assert_eq!(t.extend_alpha(&[-0.5, 0.0, -2.0, 0.0], 1).unwrap(), vec![-0.5, 0.0, -2.0]);
        assert!(matches!(t.extend_alpha(&[0.1, 0.0, 0.0, 0.0], 0), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip() {
        let t = z_tower();
        let json = serde_json::to_string(&t.to_json()).unwrap();
        let back = GraphTower::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.wired_subgraph(1).unwrap(), t.wired_subgraph(1).unwrap());
        let g = triangle(1.0, 0.5, 2.0);
        let back = Graph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }
}
