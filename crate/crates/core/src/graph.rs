//! Feedback graphs.
//!
//! A feedback model says which arms' outcomes are revealed after an arm is
//! played. Two models are supported:
//!
//! * a deterministic graph `G_t`, known before the decision at round `t`,
//!   where playing `i` reveals every `j` with an edge `(i, j)`;
//! * an Erdős–Rényi graph drawn after the decision, where every arm other
//!   than the one played is revealed independently with probability `r_t`.
//!
//! Both are summarised each round by a [`Matrix`] of observation
//! probabilities with a unit diagonal.

use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest graph accepted by the exhaustive searches.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    k: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn filled(k: usize, value: f64) -> Self {
        Matrix {
            k,
            data: vec![value; k * k],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Matrix::filled(k, 0.0);
        for i in 0..k {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut data = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { k, data })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.k + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    /// Matrix-vector product `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.k, "dimension mismatch");
        (0..self.k)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// A directed 0/1 graph on `k` arms with a self-loop at every arm.
///
/// Row `i` lists the arms revealed when `i` is played.
#[derive(Clone, PartialEq, Eq)]
pub struct Adjacency {
    k: usize,
    edges: Vec<bool>,
}

impl fmt::Debug for Adjacency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Adjacency({})", self.k)?;
        for i in 0..self.k {
            let row: Vec<&str> = (0..self.k)
                .map(|j| if self.has_edge(i, j) { "1" } else { "0" })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Adjacency {
    /// Graph with self-loops only.
    pub fn empty(k: usize) -> Self {
        let mut edges = vec![false; k * k];
        for i in 0..k {
            edges[i * k + i] = true;
        }
        Adjacency { k, edges }
    }

    pub fn complete(k: usize) -> Self {
        Adjacency {
            k,
            edges: vec![true; k * k],
        }
    }

    /// Builds an undirected graph from a list of edges `(i, j)`.
    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Adjacency::empty(k);
        for &(i, j) in edges {
            if i >= k || j >= k {
                return Err(Error::InvalidAdjacency(format!(
                    "edge ({i}, {j}) out of range for {k} arms"
                )));
            }
            g.edges[i * k + j] = true;
            g.edges[j * k + i] = true;
        }
        Ok(g)
    }

    /// Cycle `0 - 1 - ... - (k-1) - 0`.
    pub fn cycle(k: usize) -> Self {
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Adjacency::from_edges(k, &edges).expect("indices in range")
    }

    /// Star with `center` joined to every other arm.
    pub fn star(k: usize, center: usize) -> Self {
        let edges: Vec<_> = (0..k)
            .filter(|&i| i != center)
            .map(|i| (center, i))
            .collect();
        Adjacency::from_edges(k, &edges).expect("indices in range")
    }

    /// The five-arm graph used for the time-invariant deterministic
    /// experiment: two triangles `{1,2,3}` and `{3,4,5}` (1-based) sharing
    /// arm 3. Clique cover number 2, independence number 2, and `{3}`
    /// dominates.
    pub fn two_clique_bowtie() -> Self {
        Adjacency::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])
            .expect("indices in range")
    }

    /// Converts a numeric matrix; entries must be exactly 0 or 1 and the
    /// diagonal must be all ones.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let k = m.dim();
        let mut edges = vec![false; k * k];
        for i in 0..k {
            for j in 0..k {
                let v = m.get(i, j);
                if v == 1.0 {
                    edges[i * k + j] = true;
                } else if v != 0.0 {
                    return Err(Error::InvalidAdjacency(format!(
                        "entry ({i}, {j}) = {v} is not 0 or 1"
                    )));
                }
            }
            if !edges[i * k + i] {
                return Err(Error::InvalidAdjacency(format!(
                    "diagonal entry ({i}, {i}) must be 1"
                )));
            }
        }
        Ok(Adjacency { k, edges })
    }

    /// Parses the plain-text format: first line `K`, then `K` rows of `K`
    /// space-separated 0/1 entries. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let k: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidAdjacency("empty graph file".into()))?
            .parse()
            .map_err(|e| Error::InvalidAdjacency(format!("bad arm count: {e}")))?;
        if k == 0 {
            return Err(Error::InvalidAdjacency("arm count must be positive".into()));
        }
        let mut rows = Vec::with_capacity(k);
        for (i, line) in lines.by_ref().take(k).enumerate() {
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        Error::InvalidAdjacency(format!("row {i}: bad entry `{tok}`: {e}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != k {
            return Err(Error::InvalidAdjacency(format!(
                "expected {k} rows, found {}",
                rows.len()
            )));
        }
        if lines.next().is_some() {
            return Err(Error::InvalidAdjacency("trailing data after matrix".into()));
        }
        let m = Matrix::from_rows(&rows).map_err(|e| Error::InvalidAdjacency(e.to_string()))?;
        Adjacency::from_matrix(&m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Adjacency::parse(&std::fs::read_to_string(path)?)
    }

    /// Serialises to the format read by [`Adjacency::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.k);
        for i in 0..self.k {
            let row: Vec<&str> = (0..self.k)
                .map(|j| if self.has_edge(i, j) { "1" } else { "0" })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn arms(&self) -> usize {
        self.k
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i * self.k + j]
    }

    /// Closed out-neighbourhood of `i`, in index order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.k).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::filled(self.k, 0.0);
        for i in 0..self.k {
            for j in 0..self.k {
                if self.has_edge(i, j) {
                    m.set(i, j, 1.0);
                }
            }
        }
        m
    }

    /// Undirected graph keeping only mutual edges.
    pub fn symmetrized(&self) -> Self {
        let k = self.k;
        let mut edges = self.edges.clone();
        for i in 0..k {
            for j in 0..k {
                edges[i * k + j] = self.has_edge(i, j) && self.has_edge(j, i);
            }
        }
        Adjacency { k, edges }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.k).all(|i| (0..self.k).all(|j| self.has_edge(i, j) == self.has_edge(j, i)))
    }

    /// Samples an undirected G(k, p) graph (self-loops always present).
    pub fn sample_erdos_renyi<R: Rng + ?Sized>(k: usize, p: f64, rng: &mut R) -> Result<Self> {
        check_probability(p)?;
        let mut g = Adjacency::empty(k);
        for i in 0..k {
            for j in i + 1..k {
                if rng.random::<f64>() < p {
                    g.edges[i * k + j] = true;
                    g.edges[j * k + i] = true;
                }
            }
        }
        Ok(g)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// A value per round. Rounds are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    PerRound(Vec<T>),
}

impl<T> Schedule<T> {
    pub fn at(&self, round: usize) -> Result<&T> {
        if round == 0 {
            return Err(Error::InvalidArgument("rounds are numbered from 1".into()));
        }
        match self {
            Schedule::Constant(v) => Ok(v),
            Schedule::PerRound(vs) => vs.get(round - 1).ok_or(Error::ScheduleExhausted {
                round,
                len: vs.len(),
            }),
        }
    }

    /// Whether rounds `1..=horizon` are all defined.
    pub fn covers(&self, horizon: usize) -> bool {
        match self {
            Schedule::Constant(_) => true,
            Schedule::PerRound(vs) => vs.len() >= horizon,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }
}

/// How side observations are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackModel {
    Deterministic(Schedule<Adjacency>),
    ErdosRenyi { arms: usize, r: Schedule<f64> },
}

impl FeedbackModel {
    pub fn fixed_graph(g: Adjacency) -> Self {
        FeedbackModel::Deterministic(Schedule::Constant(g))
    }

    /// Deterministic model over a per-round graph sequence. All graphs must
    /// share one arm count.
    pub fn graph_sequence(graphs: Vec<Adjacency>) -> Result<Self> {
        let k = graphs
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty graph sequence".into()))?
            .arms();
        if graphs.iter().any(|g| g.arms() != k) {
            return Err(Error::InvalidArgument(
                "graphs in a sequence must have the same number of arms".into(),
            ));
        }
        Ok(FeedbackModel::Deterministic(Schedule::PerRound(graphs)))
    }

    pub fn erdos_renyi(arms: usize, r: f64) -> Result<Self> {
        check_probability(r)?;
        Ok(FeedbackModel::ErdosRenyi {
            arms,
            r: Schedule::Constant(r),
        })
    }

    pub fn erdos_renyi_schedule(arms: usize, r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidArgument("empty r schedule".into()));
        }
        for &p in &r {
            check_probability(p)?;
        }
        Ok(FeedbackModel::ErdosRenyi {
            arms,
            r: Schedule::PerRound(r),
        })
    }

    pub fn arms(&self) -> usize {
        match self {
            FeedbackModel::Deterministic(Schedule::Constant(g)) => g.arms(),
            FeedbackModel::Deterministic(Schedule::PerRound(gs)) => gs[0].arms(),
            FeedbackModel::ErdosRenyi { arms, .. } => *arms,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, FeedbackModel::Deterministic(_))
    }

    pub fn covers(&self, horizon: usize) -> bool {
        match self {
            FeedbackModel::Deterministic(s) => s.covers(horizon),
            FeedbackModel::ErdosRenyi { r, .. } => r.covers(horizon),
        }
    }

    /// The graph at round `t` for a deterministic model, `None` otherwise.
    pub fn graph_at(&self, t: usize) -> Result<Option<&Adjacency>> {
        match self {
            FeedbackModel::Deterministic(s) => s.at(t).map(Some),
            FeedbackModel::ErdosRenyi { .. } => Ok(None),
        }
    }

    /// Edge probability at round `t` for an Erdős–Rényi model, `None` otherwise.
    pub fn r_at(&self, t: usize) -> Result<Option<f64>> {
        match self {
            FeedbackModel::Deterministic(_) => Ok(None),
            FeedbackModel::ErdosRenyi { r, .. } => r.at(t).map(|&p| Some(p)),
        }
    }

    /// Matrix whose `(i, j)` entry is the probability of observing `j` when
    /// playing `i` at round `t`.
    pub fn effective_matrix(&self, t: usize) -> Result<Matrix> {
        match self {
            FeedbackModel::Deterministic(s) => Ok(s.at(t)?.to_matrix()),
            FeedbackModel::ErdosRenyi { arms, r } => {
                let p = *r.at(t)?;
                let mut m = Matrix::filled(*arms, p);
                for i in 0..*arms {
                    m.set(i, i, 1.0);
                }
                Ok(m)
            }
        }
    }

    /// Draws the set of arms revealed when `chosen` is played at round `t`.
    ///
    /// The Erdős–Rényi model consumes exactly `K - 1` uniforms per call
    /// regardless of `r_t`; the deterministic model consumes none.
    pub fn realize_observations<R: Rng + ?Sized>(
        &self,
        t: usize,
        chosen: usize,
        rng: &mut R,
    ) -> Result<ObservationSet> {
        let k = self.arms();
        if chosen >= k {
            return Err(Error::InvalidArgument(format!(
                "arm {chosen} out of range for {k} arms"
            )));
        }
        let observed = match self {
            FeedbackModel::Deterministic(s) => s.at(t)?.neighbors(chosen),
            FeedbackModel::ErdosRenyi { r, .. } => {
                let p = *r.at(t)?;
                let mut observed = Vec::new();
                for a in 0..k {
                    // the chosen arm consumes no draw
                    if a == chosen || rng.random::<f64>() < p {
                        observed.push(a);
                    }
                }
                observed
            }
        };
        Ok(ObservationSet { chosen, observed })
    }
}

/// Arms revealed in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSet {
    pub chosen: usize,
    /// Sorted, always contains `chosen`.
    pub observed: Vec<usize>,
}

/// A partition of the arms into cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueCover {
    pub cliques: Vec<Vec<usize>>,
}

impl CliqueCover {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Checks that this is a partition of `0..k` into cliques of `g`
    /// (mutual edges only).
    pub fn is_valid_for(&self, g: &Adjacency) -> bool {
        let sym = g.symmetrized();
        let mut seen = vec![false; g.arms()];
        for clique in &self.cliques {
            if clique.is_empty() {
                return false;
            }
            for &v in clique {
                if v >= seen.len() || seen[v] {
                    return false;
                }
                seen[v] = true;
            }
            for (x, &u) in clique.iter().enumerate() {
                if clique[x + 1..].iter().any(|&w| !sym.has_edge(u, w)) {
                    return false;
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// First-fit clique cover: arms are visited in index order and each joins
/// the first existing clique it is mutually adjacent to.
pub fn greedy_clique_cover(g: &Adjacency) -> CliqueCover {
    let sym = g.symmetrized();
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for v in 0..sym.arms() {
        match cliques
            .iter_mut()
            .find(|c| c.iter().all(|&u| sym.has_edge(u, v)))
        {
            Some(c) => c.push(v),
            None => cliques.push(vec![v]),
        }
    }
    CliqueCover { cliques }
}

/// Size of the smallest clique cover, by exhaustive search (`K <= 12`).
pub fn exact_clique_cover_number(g: &Adjacency) -> Result<usize> {
    let k = g.arms();
    if k > EXHAUSTIVE_LIMIT {
        return Err(Error::SizeLimit {
            what: "exact clique cover (use greedy_clique_cover)",
            limit: EXHAUSTIVE_LIMIT,
            actual: k,
        });
    }
    if k == 0 {
        return Ok(0);
    }
    let sym = g.symmetrized();
    let upper = greedy_clique_cover(&sym).len();
    for target in 1..upper {
        let mut cliques: Vec<Vec<usize>> = Vec::with_capacity(target);
        if place(&sym, 0, target, &mut cliques) {
            return Ok(target);
        }
    }
    Ok(upper)
}

fn place(g: &Adjacency, v: usize, target: usize, cliques: &mut Vec<Vec<usize>>) -> bool {
    if v == g.arms() {
        return true;
    }
    for i in 0..cliques.len() {
        if cliques[i].iter().all(|&u| g.has_edge(u, v)) {
            cliques[i].push(v);
            if place(g, v + 1, target, cliques) {
                return true;
            }
            cliques[i].pop();
        }
    }
    // Opening a new clique is symmetric across its position, so try it once.
    if cliques.len() < target {
        cliques.push(vec![v]);
        if place(g, v + 1, target, cliques) {
            return true;
        }
        cliques.pop();
    }
    false
}

/// Size of the largest set of pairwise non-adjacent arms (`K <= 12`).
pub fn independence_number(g: &Adjacency) -> Result<usize> {
    let k = g.arms();
    if k > EXHAUSTIVE_LIMIT {
        return Err(Error::SizeLimit {
            what: "independence number",
            limit: EXHAUSTIVE_LIMIT,
            actual: k,
        });
    }
    let mut best = 0;
    for mask in 0u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let members: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let independent = members.iter().enumerate().all(|(x, &u)| {
            members[x + 1..]
                .iter()
                .all(|&w| !g.has_edge(u, w) && !g.has_edge(w, u))
        });
        if independent {
            best = size;
        }
    }
    Ok(best)
}
