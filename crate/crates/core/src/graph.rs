//! Spatial-spectral neighbor graph over image pixels.
//!
//! Each pixel is a node. Its candidate neighbors are the pixels of the
//! `m × m` window centred on it (truncated at the image border); of those,
//! the `⌈q·|candidates|⌉` with the smallest spectral angle are kept. An edge
//! exists when either endpoint kept the other, so the weight matrix `W` is
//! symmetric. `W` is stored in compressed row form and never densified.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::types::{AbundanceMatrix, HyperspectralImage};

/// Default spatial window side.
pub const DEFAULT_WINDOW: usize = 7;
/// Default fraction of window candidates kept as neighbors.
pub const DEFAULT_KEEP_FRACTION: f64 = 0.30;
/// Largest node count accepted when reading an edge list.
pub const MAX_NODES: usize = 1 << 26;

/// Spectral angle between two spectra, in radians.
pub fn sad(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "spectra have {} and {} bands",
            x.len(),
            y.len()
        )));
    }
    let (nx, ny) = (x.dot(&x), y.dot(&y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Degenerate("spectral angle of a zero spectrum".into()));
    }
    let cos = (x.dot(&y) / (nx * ny).sqrt()).clamp(-1.0, 1.0);
    Ok(cos.acos().clamp(0.0, std::f64::consts::PI))
}

/// How a kept neighbor pair is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// `cos(SAD)`, the normalized inner product. A similarity in `[0, 1]`
    /// for nonnegative spectra.
    #[default]
    Cosine,
    /// The spectral angle itself.
    RawSad,
}

impl WeightMode {
    fn weight(self, cosine: f64) -> f64 {
        match self {
            WeightMode::Cosine => cosine,
            WeightMode::RawSad => cosine.acos(),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Cosine => "cosine",
            WeightMode::RawSad => "raw_sad",
        })
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(WeightMode::Cosine),
            "raw_sad" | "raw-sad" => Ok(WeightMode::RawSad),
            other => Err(Error::param(format!("unknown weight mode `{other}`"))),
        }
    }
}

/// Construction parameters of a [`NeighborGraph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Odd window side `m`.
    pub window: usize,
    /// Fraction `q ∈ (0, 1]` of window candidates kept.
    pub keep_fraction: f64,
    pub mode: WeightMode,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            mode: WeightMode::Cosine,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::param(format!(
                "window must be odd and at least 3, got {}",
                self.window
            )));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::param(format!(
                "keep fraction must lie in (0, 1], got {}",
                self.keep_fraction
            )));
        }
        Ok(())
    }
}

/// Sparse symmetric pixel-similarity graph with its degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    params: GraphParams,
    build_seconds: f64,
}

impl NeighborGraph {
    /// Graph with `n` nodes and no edges; makes the graph term vanish.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
            weights: Vec::new(),
            degrees: vec![0.0; n],
            params: GraphParams::default(),
            build_seconds: 0.0,
        }
    }

    /// Builds a graph from undirected edges `(i, j, w)`. Each pair may be
    /// listed once in either orientation; listing it twice with different
    /// weights is an error.
    pub fn from_edges<I>(n: usize, params: GraphParams, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::param(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::param(format!("self loop at node {i}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::param(format!("edge ({i}, {j}) has weight {w}")));
            }
            pairs.push((i.min(j), i.max(j), w));
        }
        pairs.sort_by_key(|p| (p.0, p.1));
        let mut unique: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
        for p in pairs {
            match unique.last() {
                Some(last) if (last.0, last.1) == (p.0, p.1) => {
                    if last.2.to_bits() != p.2.to_bits() {
                        return Err(Error::param(format!(
                            "edge ({}, {}) listed with weights {} and {}",
                            p.0, p.1, last.2, p.2
                        )));
                    }
                }
                _ => unique.push(p),
            }
        }
        Ok(Self::from_unique_pairs(n, params, &unique))
    }

    fn from_unique_pairs(n: usize, params: GraphParams, pairs: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n];
        for &(i, j, _) in pairs {
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(i, j, w) in pairs {
            neighbors[cursor[i]] = j;
            weights[cursor[i]] = w;
            cursor[i] += 1;
            neighbors[cursor[j]] = i;
            weights[cursor[j]] = w;
            cursor[j] += 1;
        }
        // Sort each adjacency row by neighbor index for a canonical layout.
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(usize, f64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|e| e.0);
            for (slot, (j, w)) in row.into_iter().enumerate() {
                neighbors[lo + slot] = j;
                weights[lo + slot] = w;
            }
        }
        let degrees = (0..n)
            .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();
        Self {
            n,
            offsets,
            neighbors,
            weights,
            degrees,
            params,
            build_seconds: 0.0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn params(&self) -> GraphParams {
        self.params
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Wall time spent constructing the graph, zero for graphs not built
    /// from an image.
    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }

    /// Neighbors of node `i` with their weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        self.neighbors[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    /// `W_ij`, zero when `i` and `j` are not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        match self.neighbors[lo..hi].binary_search(&j) {
            Ok(pos) => self.weights[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Dense copy of `W`. Test and debugging aid only.
    pub fn dense_weights(&self) -> Array2<f64> {
        let mut w = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.neighbors(i) {
                w[[i, j]] = v;
            }
        }
        w
    }

    /// Writes the text edge list: a header `n m q mode`, then one `i j w`
    /// line per edge with `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {}",
            self.n, self.params.window, self.params.keep_fraction, self.params.mode
        )?;
        for (i, j, w) in self.edges() {
            writeln!(out, "{i} {j} {w:.16e}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::format("edge list", "missing header")),
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [n, m, q, mode] = fields[..] else {
            return Err(Error::format("edge list", "header must be `n m q mode`"));
        };
        let n: usize = parse_field(n, "node count")?;
        if n > MAX_NODES {
            return Err(Error::format("edge list", format!("{n} nodes exceeds limit")));
        }
        let params = GraphParams {
            window: parse_field(m, "window")?,
            keep_fraction: parse_field(q, "keep fraction")?,
            mode: mode
                .parse()
                .map_err(|_| Error::format("edge list", format!("unknown mode `{mode}`")))?,
        };
        let mut edges = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, w] = fields[..] else {
                return Err(Error::format(
                    "edge list",
                    format!("line {}: expected `i j w`", lineno + 2),
                ));
            };
            let i: usize = parse_field(i, "node index")?;
            let j: usize = parse_field(j, "node index")?;
            if i >= j {
                return Err(Error::format(
                    "edge list",
                    format!("line {}: edge ({i}, {j}) must satisfy i < j", lineno + 2),
                ));
            }
            edges.push((i, j, parse_field(w, "weight")?));
        }
        Self::from_edges(n, params, edges)
            .map_err(|e| Error::format("edge list", e.to_string()))
    }
}

fn parse_field<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format("edge list", format!("bad {what} `{s}`")))
}

/// Builds the neighbor graph of `image`.
pub fn build_neighbor_graph(image: &HyperspectralImage, params: GraphParams) -> Result<NeighborGraph> {
    params.validate()?;
    let n = image.pixels();
    if n == 0 || image.bands() == 0 {
        return Err(Error::Degenerate("empty image".into()));
    }
    let start = Instant::now();
    let (h, w) = (image.height(), image.width());
    let half = params.window / 2;
    let data = image.data();
    // Squared norms; one square root per pair keeps parallel spectra at cos = 1.
    let norms: Vec<f64> = (0..n).map(|i| data.column(i).dot(&data.column(i))).collect();
    let cosine = |i: usize, j: usize| {
        (data.column(i).dot(&data.column(j)) / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0)
    };

    let dead = norms.iter().filter(|v| **v == 0.0).count();
    if dead > 0 {
        log::warn!("{dead} zero-norm pixels left without neighbor edges");
    }

    let mut kept: Vec<(usize, usize)> = Vec::new();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(params.window * params.window);
    for row in 0..h {
        for col in 0..w {
            let i = image.index(row, col);
            if norms[i] == 0.0 {
                continue;
            }
            candidates.clear();
            for r in row.saturating_sub(half)..=(row + half).min(h - 1) {
                for c in col.saturating_sub(half)..=(col + half).min(w - 1) {
                    let j = image.index(r, c);
                    if j != i && norms[j] > 0.0 {
                        candidates.push((cosine(i, j).acos(), j));
                    }
                }
            }
            if candidates.is_empty() {
                continue;
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let keep = ((params.keep_fraction * candidates.len() as f64).ceil() as usize)
                .clamp(1, candidates.len());
            kept.extend(candidates[..keep].iter().map(|&(_, j)| (i.min(j), i.max(j))));
        }
    }
    kept.sort_unstable();
    kept.dedup();
    let pairs: Vec<(usize, usize, f64)> = kept
        .into_iter()
        .map(|(i, j)| (i, j, params.mode.weight(cosine(i, j))))
        .collect();
    let mut graph = NeighborGraph::from_unique_pairs(n, params, &pairs);
    graph.build_seconds = start.elapsed().as_secs_f64();
    Ok(graph)
}

fn check_nodes(a: &AbundanceMatrix, g: &NeighborGraph) -> Result<()> {
    if a.pixels() != g.node_count() {
        return Err(Error::shape(format!(
            "abundances have {} columns, graph has {} nodes",
            a.pixels(),
            g.node_count()
        )));
    }
    Ok(())
}

/// `Tr(A D Aᵀ) − Tr(A W Aᵀ) = Tr(A L Aᵀ)`, accumulated edge by edge as
/// `Σ_i Σ_j W_ij (a_iᵀa_i − a_iᵀa_j)` so constant columns give exactly zero.
pub fn laplacian_quadratic(a: &AbundanceMatrix, g: &NeighborGraph) -> Result<f64> {
    check_nodes(a, g)?;
    Ok(laplacian_form(a.data(), g))
}

pub(crate) fn laplacian_form(a: &Array2<f64>, g: &NeighborGraph) -> f64 {
    let k = a.nrows();
    let cols = pixel_major(a);
    let col = |i: usize| &cols[i * k..(i + 1) * k];
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut total = 0.0;
    for i in 0..g.n {
        let ai = col(i);
        let self_dot = dot(ai, ai);
        for (j, w) in g.neighbors(i) {
            total += w * (self_dot - dot(ai, col(j)));
        }
    }
    total
}

/// Columns of `a` laid out contiguously, one pixel after another.
fn pixel_major(a: &Array2<f64>) -> Vec<f64> {
    a.t().iter().copied().collect()
}

/// `A·W`: column `j` of the result is `Σ_i W_ij a_i`.
pub fn apply_weights(a: &AbundanceMatrix, g: &NeighborGraph) -> Result<Array2<f64>> {
    check_nodes(a, g)?;
    Ok(weights_product(a.data(), g))
}

pub(crate) fn weights_product(a: &Array2<f64>, g: &NeighborGraph) -> Array2<f64> {
    let k = a.nrows();
    let cols = pixel_major(a);
    let mut out = vec![0.0; cols.len()];
    for (j, acc) in out.chunks_exact_mut(k.max(1)).enumerate().take(g.n) {
        for (i, w) in g.neighbors(j) {
            for (o, v) in acc.iter_mut().zip(&cols[i * k..(i + 1) * k]) {
                *o += w * v;
            }
        }
    }
    Array2::from_shape_vec((g.n, k), out)
        .expect("one row per node")
        .reversed_axes()
        .as_standard_layout()
        .into_owned()
}
