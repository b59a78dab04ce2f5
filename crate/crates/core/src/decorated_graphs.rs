//! Decorated graphs: 4-regular graphs whose oriented edges carry the labels
//! a^{±1}, b^{±1}, together with a set of coloured vertices.
//!
//! An admissible labelling is the same thing as a pair of permutations of the
//! vertex set (x →a perm_a(x), x →b perm_b(x)), which is how graphs are stored.
//! Self-loops and parallel edges need no special treatment.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::free_groups::{check_permutation, step, GroupError, Letter, SubgroupTable, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("graph has no vertices")]
    Empty,
    #[error("coloured vertex {0} out of range")]
    ColorOutOfRange(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("malformed graph text: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct DecoratedGraph {
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
    colored: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
    colored: Vec<usize>,
}

impl From<DecoratedGraph> for GraphRepr {
    fn from(g: DecoratedGraph) -> Self {
        let colored = g.colored();
        Self {
            perm_a: g.perm_a,
            perm_b: g.perm_b,
            colored,
        }
    }
}

impl TryFrom<GraphRepr> for DecoratedGraph {
    type Error = GraphError;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Self::new(r.perm_a, r.perm_b, &r.colored)
    }
}

impl DecoratedGraph {
    pub fn new(perm_a: Vec<usize>, perm_b: Vec<usize>, colored: &[usize]) -> Result<Self> {
        if perm_a.is_empty() {
            return Err(GraphError::Empty);
        }
        if perm_a.len() != perm_b.len() {
            return Err(GroupError::DegreeMismatch.into());
        }
        check_permutation(&perm_a)?;
        check_permutation(&perm_b)?;
        let mut flags = vec![false; perm_a.len()];
        for &v in colored {
            *flags.get_mut(v).ok_or(GraphError::ColorOutOfRange(v))? = true;
        }
        Ok(Self {
            perm_a,
            perm_b,
            colored: flags,
        })
    }

    /// The Schreier graph of `h` with the given colouring.
    pub fn from_subgroup(h: &SubgroupTable, colored: &[usize]) -> Result<Self> {
        Self::new(h.perm_a().to_vec(), h.perm_b().to_vec(), colored)
    }

    /// The Schreier graph of `h` with only the basepoint coloured.
    pub fn pointed(h: &SubgroupTable) -> Self {
        Self::from_subgroup(h, &[h.basepoint()]).expect("basepoint is a vertex")
    }

    pub fn vertex_count(&self) -> usize {
        self.perm_a.len()
    }

    pub fn perm_a(&self) -> &[usize] {
        &self.perm_a
    }

    pub fn perm_b(&self) -> &[usize] {
        &self.perm_b
    }

    pub fn is_colored(&self, v: usize) -> bool {
        self.colored[v]
    }

    pub fn colored(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.colored[v]).collect()
    }

    pub fn step(&self, v: usize, l: Letter) -> usize {
        step(&self.perm_a, &self.perm_b, v, l)
    }

    pub fn trace(&self, v: usize, w: &Word) -> usize {
        w.letters().iter().fold(v, |x, &l| self.step(x, l))
    }

    /// Vertex sets of the connected components, each sorted, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for l in Letter::ALL {
                    let y = self.step(x, l);
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        members.push(y);
                        queue.push_back(y);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Induced subgraph on a union of components, relabelled in the given order.
    fn induced(&self, vertices: &[usize]) -> Self {
        let mut label = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            label[v] = i;
        }
        let relabel = |p: &[usize]| vertices.iter().map(|&v| label[p[v]]).collect();
        Self {
            perm_a: relabel(&self.perm_a),
            perm_b: relabel(&self.perm_b),
            colored: vertices.iter().map(|&v| self.colored[v]).collect(),
        }
    }
}

/// Line-based text form:
///
/// ```text
/// <vertex count>
/// <perm_a images, space separated>
/// <perm_b images, space separated>
/// <coloured vertices, space separated, possibly empty>
/// ```
impl fmt::Display for DecoratedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        writeln!(f, "{}", self.vertex_count())?;
        writeln!(f, "{}", row(&self.perm_a))?;
        writeln!(f, "{}", row(&self.perm_b))?;
        writeln!(f, "{}", row(&self.colored()))
    }
}

impl FromStr for DecoratedGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_suffix('\n').unwrap_or(s);
        let lines: Vec<&str> = body.split('\n').collect();
        if lines.len() != 4 {
            return Err(GraphError::Parse(format!("expected 4 lines, found {}", lines.len())));
        }
        let parse_row = |line: &str| -> Result<Vec<usize>> {
            line.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| GraphError::Parse(format!("{t:?}: {e}"))))
                .collect()
        };
        let n: usize = lines[0]
            .trim()
            .parse()
            .map_err(|e| GraphError::Parse(format!("vertex count: {e}")))?;
        let perm_a = parse_row(lines[1])?;
        let perm_b = parse_row(lines[2])?;
        if perm_a.len() != n || perm_b.len() != n {
            return Err(GraphError::Parse(format!("rows must have {n} entries")));
        }
        let colored = parse_row(lines[3])?;
        let mut sorted = colored.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != colored {
            return Err(GraphError::Parse("coloured vertices must be strictly increasing".into()));
        }
        Self::new(perm_a, perm_b, &colored)
    }
}

/// A vertex map between decorated graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphMorphism {
    pub vertex_map: Vec<usize>,
}

/// Label- and colour-preserving isomorphism test.
///
/// A label-preserving map of connected graphs is determined by the image of a
/// single vertex, so for each component we try every anchor and propagate.
pub fn is_isomorphic(d1: &DecoratedGraph, d2: &DecoratedGraph) -> bool {
    if d1.vertex_count() != d2.vertex_count() {
        return false;
    }
    let comps2 = d2.components();
    let mut used = vec![false; comps2.len()];
    for c1 in d1.components() {
        let g1 = d1.induced(&c1);
        let hit = comps2.iter().enumerate().find(|(j, c2)| {
            !used[*j] && c2.len() == c1.len() && connected_isomorphic(&g1, &d2.induced(c2))
        });
        match hit {
            Some((j, _)) => used[j] = true,
            None => return false,
        }
    }
    true
}

fn connected_isomorphic(g1: &DecoratedGraph, g2: &DecoratedGraph) -> bool {
    (0..g2.vertex_count())
        .filter(|&v| g2.is_colored(v) == g1.is_colored(0))
        .any(|v| anchored_map(g1, g2, 0, v).is_some_and(|m| is_bijective(&m)))
}

/// The unique label-preserving map from the component of `from` in `g1`
/// sending `from ↦ to`, if one exists and preserves colours. Vertices outside
/// that component map to `usize::MAX`.
fn anchored_map(g1: &DecoratedGraph, g2: &DecoratedGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut map = vec![usize::MAX; g1.vertex_count()];
    map[from] = to;
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if g1.is_colored(x) != g2.is_colored(map[x]) {
            return None;
        }
        for l in Letter::ALL {
            let (y, fy) = (g1.step(x, l), g2.step(map[x], l));
            if map[y] == usize::MAX {
                map[y] = fy;
                queue.push_back(y);
            } else if map[y] != fy {
                return None;
            }
        }
    }
    Some(map)
}

fn is_bijective(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&y| y < map.len() && !std::mem::replace(&mut seen[y], true))
}

/// Is `m` a covering map of decorated graphs from `cover` onto `base`?
///
/// With the permutation encoding every label-commuting map is a local
/// bijection, so it remains to check colours and surjectivity.
pub fn check_cover(cover: &DecoratedGraph, base: &DecoratedGraph, m: &GraphMorphism) -> bool {
    let f = &m.vertex_map;
    if f.len() != cover.vertex_count() || f.iter().any(|&y| y >= base.vertex_count()) {
        return false;
    }
    for x in 0..cover.vertex_count() {
        if cover.is_colored(x) != base.is_colored(f[x]) {
            return false;
        }
        if f[cover.perm_a[x]] != base.perm_a[f[x]] || f[cover.perm_b[x]] != base.perm_b[f[x]] {
            return false;
        }
    }
    let mut hit = vec![false; base.vertex_count()];
    for &y in f {
        hit[y] = true;
    }
    hit.into_iter().all(|h| h)
}

/// Pullback of two labelled graphs. Vertex `(u, v)` has index `u·|V₂| + v`.
#[derive(Debug, Clone)]
pub struct FiberProduct {
    /// Uncoloured product graph.
    pub graph: DecoratedGraph,
    pub components: Vec<Vec<usize>>,
    pub first: GraphMorphism,
    pub second: GraphMorphism,
    n2: usize,
}

impl FiberProduct {
    pub fn pair(&self, index: usize) -> (usize, usize) {
        (index / self.n2, index % self.n2)
    }

    /// Component `i` as a graph of its own, relabelled in increasing order,
    /// with the two projections restricted to it. Vertices take the colour of
    /// their first coordinate.
    pub fn component(&self, i: usize, d1: &DecoratedGraph) -> (DecoratedGraph, GraphMorphism, GraphMorphism) {
        let verts = &self.components[i];
        let mut g = self.graph.induced(verts);
        g.colored = verts.iter().map(|&x| d1.is_colored(self.pair(x).0)).collect();
        let proj = |m: &GraphMorphism| GraphMorphism {
            vertex_map: verts.iter().map(|&x| m.vertex_map[x]).collect(),
        };
        (g, proj(&self.first), proj(&self.second))
    }
}

pub fn fiber_product(d1: &DecoratedGraph, d2: &DecoratedGraph) -> FiberProduct {
    let (n1, n2) = (d1.vertex_count(), d2.vertex_count());
    let idx = |u: usize, v: usize| u * n2 + v;
    let mut perm_a = Vec::with_capacity(n1 * n2);
    let mut perm_b = Vec::with_capacity(n1 * n2);
    for u in 0..n1 {
        for v in 0..n2 {
            perm_a.push(idx(d1.perm_a[u], d2.perm_a[v]));
            perm_b.push(idx(d1.perm_b[u], d2.perm_b[v]));
        }
    }
    let graph = DecoratedGraph {
        perm_a,
        perm_b,
        colored: vec![false; n1 * n2],
    };
    let components = graph.components();
    FiberProduct {
        graph,
        components,
        first: GraphMorphism {
            vertex_map: (0..n1 * n2).map(|x| x / n2).collect(),
        },
        second: GraphMorphism {
            vertex_map: (0..n1 * n2).map(|x| x % n2).collect(),
        },
        n2,
    }
}

/// A connected common decorated cover with its two covering maps.
#[derive(Debug, Clone)]
pub struct CommonCover {
    pub graph: DecoratedGraph,
    pub to_first: GraphMorphism,
    pub to_second: GraphMorphism,
}

/// Decides whether two connected decorated graphs have a common decorated cover.
///
/// Any connected common cover maps into the fibre product by `x ↦ (p₁x, p₂x)`,
/// landing in one component, so it suffices to look for a component on which
/// the two colourings agree. That component, coloured by the common value,
/// is returned as the witness.
pub fn has_common_decorated_cover(d1: &DecoratedGraph, d2: &DecoratedGraph) -> Result<Option<CommonCover>> {
    if !d1.is_connected() || !d2.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let fp = fiber_product(d1, d2);
    for (i, comp) in fp.components.iter().enumerate() {
        let consistent = comp.iter().all(|&x| {
            let (u, v) = fp.pair(x);
            d1.is_colored(u) == d2.is_colored(v)
        });
        if consistent {
            let (graph, to_first, to_second) = fp.component(i, d1);
            debug_assert!(check_cover(&graph, d1, &to_first) && check_cover(&graph, d2, &to_second));
            return Ok(Some(CommonCover {
                graph,
                to_first,
                to_second,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_groups::{distinguishing_word, enumerate_subgroups, word_membership};
    use proptest::prelude::*;

    fn one_vertex(colored: bool) -> DecoratedGraph {
        let c: &[usize] = if colored { &[0] } else { &[] };
        DecoratedGraph::new(vec![0], vec![0], c).unwrap()
    }

    fn swap_a() -> SubgroupTable {
        SubgroupTable::new(vec![1, 0], vec![0, 1]).unwrap()
    }

    fn swap_b() -> SubgroupTable {
        SubgroupTable::new(vec![0, 1], vec![1, 0]).unwrap()
    }

    fn up_to(k: usize) -> Vec<SubgroupTable> {
        (1..=k).flat_map(|i| enumerate_subgroups(i).unwrap()).collect()
    }

    #[test]
    fn from_subgroup_examples() {
        let g = DecoratedGraph::pointed(&SubgroupTable::trivial());
        assert_eq!(g.vertex_count(), 1);
        assert_eq!((g.perm_a(), g.perm_b()), (&[0usize][..], &[0usize][..]));
        assert!(g.is_colored(0));
        let g = DecoratedGraph::pointed(&swap_a());
        assert_eq!(g.colored(), vec![0]);
        assert_eq!(
            DecoratedGraph::from_subgroup(&swap_a(), &[2]),
            Err(GraphError::ColorOutOfRange(2))
        );
        // all 2^k colourings are distinct decorated graphs
        let h = &enumerate_subgroups(3).unwrap()[5];
        let mut all = std::collections::HashSet::new();
        for mask in 0..8usize {
            let c: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            all.insert(DecoratedGraph::from_subgroup(h, &c).unwrap());
        }
        assert_eq!(all.len(), 8);
    }

    #[test]
    fn isomorphism_examples() {
        let g = DecoratedGraph::pointed(&swap_a());
        assert!(is_isomorphic(&g, &g));
        assert!(!is_isomorphic(&g, &DecoratedGraph::pointed(&swap_b())));
        // a-cycle of length 3 with b trivial: rotation moves 0 to 1
        let c0 = DecoratedGraph::new(vec![1, 2, 0], vec![0, 1, 2], &[0]).unwrap();
        let c1 = DecoratedGraph::new(vec![1, 2, 0], vec![0, 1, 2], &[1]).unwrap();
        assert!(is_isomorphic(&c0, &c1));
        let c01 = DecoratedGraph::new(vec![1, 2, 0], vec![0, 1, 2], &[0, 1]).unwrap();
        assert!(!is_isomorphic(&c0, &c01));
    }

    #[test]
    fn isomorphism_of_disconnected_graphs() {
        // two loops, coloured differently, in either order
        let g = DecoratedGraph::new(vec![0, 1], vec![0, 1], &[0]).unwrap();
        let h = DecoratedGraph::new(vec![0, 1], vec![0, 1], &[1]).unwrap();
        assert!(is_isomorphic(&g, &h));
        let both = DecoratedGraph::new(vec![0, 1], vec![0, 1], &[0, 1]).unwrap();
        assert!(!is_isomorphic(&g, &both));
    }

    #[test]
    fn pointed_isomorphism_is_subgroup_equality() {
        let all = up_to(4);
        for h1 in &all {
            for h2 in &all {
                let (g1, g2) = (DecoratedGraph::pointed(h1), DecoratedGraph::pointed(h2));
                assert_eq!(is_isomorphic(&g1, &g2), h1 == h2);
            }
        }
    }

    #[test]
    fn cover_examples() {
        let g = DecoratedGraph::pointed(&swap_a());
        let id = GraphMorphism { vertex_map: vec![0, 1] };
        assert!(check_cover(&g, &g, &id));
        let base = one_vertex(true);
        let double = DecoratedGraph::new(vec![1, 0], vec![1, 0], &[0, 1]).unwrap();
        let collapse = GraphMorphism { vertex_map: vec![0, 0] };
        assert!(check_cover(&double, &base, &collapse));
        let half = DecoratedGraph::new(vec![1, 0], vec![1, 0], &[0]).unwrap();
        assert!(!check_cover(&half, &base, &collapse));
        // does not commute with perm_a
        let wrong = GraphMorphism { vertex_map: vec![0, 0, 1] };
        let tri = DecoratedGraph::new(vec![1, 2, 0], vec![0, 1, 2], &[]).unwrap();
        let two = DecoratedGraph::new(vec![1, 0], vec![0, 1], &[]).unwrap();
        assert!(!check_cover(&tri, &two, &wrong));
    }

    #[test]
    fn fiber_product_examples() {
        let g = DecoratedGraph::pointed(&enumerate_subgroups(3).unwrap()[7]);
        let fp = fiber_product(&g, &g);
        assert_eq!(fp.graph.vertex_count(), 9);
        let diag: Vec<usize> = (0..3).map(|v| v * 3 + v).collect();
        let comp = fp.components.iter().position(|c| c.contains(&0)).unwrap();
        assert_eq!(fp.components[comp], diag);
        let (c, _, _) = fp.component(comp, &g);
        assert!(is_isomorphic(&c, &g));

        let (g1, g2) = (DecoratedGraph::pointed(&swap_a()), DecoratedGraph::pointed(&swap_b()));
        let fp = fiber_product(&g1, &g2);
        assert_eq!(fp.graph.vertex_count(), 4);
        assert_eq!(fp.components, vec![vec![0, 1, 2, 3]]);
        for i in 0..fp.components.len() {
            let (c, p1, p2) = fp.component(i, &g1);
            let mut c2 = c.clone();
            c2.colored = c.colored.iter().map(|_| false).collect();
            let (u1, u2) = (uncolored(&g1), uncolored(&g2));
            assert!(check_cover(&c2, &u1, &p1));
            assert!(check_cover(&c2, &u2, &p2));
        }
    }

    fn uncolored(g: &DecoratedGraph) -> DecoratedGraph {
        DecoratedGraph::new(g.perm_a().to_vec(), g.perm_b().to_vec(), &[]).unwrap()
    }

    #[test]
    fn common_cover_examples() {
        let g = DecoratedGraph::pointed(&swap_a());
        let w = has_common_decorated_cover(&g, &g).unwrap().unwrap();
        assert!(check_cover(&w.graph, &g, &w.to_first));
        let (g1, g2) = (DecoratedGraph::pointed(&swap_a()), DecoratedGraph::pointed(&swap_b()));
        assert!(has_common_decorated_cover(&g1, &g2).unwrap().is_none());
        let all3 = enumerate_subgroups(3).unwrap();
        for h1 in &all3 {
            for h2 in &all3 {
                let c1 = DecoratedGraph::from_subgroup(h1, &[0, 1, 2]).unwrap();
                let c2 = DecoratedGraph::from_subgroup(h2, &[0, 1, 2]).unwrap();
                assert!(has_common_decorated_cover(&c1, &c2).unwrap().is_some());
            }
        }
        let disconnected = DecoratedGraph::new(vec![0, 1], vec![0, 1], &[0]).unwrap();
        assert!(matches!(
            has_common_decorated_cover(&disconnected, &g),
            Err(GraphError::Disconnected)
        ));
    }

    #[test]
    fn no_common_cover_for_distinct_pointed_graphs() {
        let all = up_to(4);
        for h1 in &all {
            for h2 in &all {
                let (g1, g2) = (DecoratedGraph::pointed(h1), DecoratedGraph::pointed(h2));
                let cover = has_common_decorated_cover(&g1, &g2).unwrap();
                assert_eq!(cover.is_some(), h1 == h2);
                if let Some(c) = cover {
                    assert!(check_cover(&c.graph, &g1, &c.to_first));
                    assert!(check_cover(&c.graph, &g2, &c.to_second));
                    continue;
                }
                // the distinguishing word lands on a coloured vertex in one
                // graph and an uncoloured one in the other
                let w = distinguishing_word(h1, h2).unwrap();
                let (e1, e2) = (g1.trace(0, &w), g2.trace(0, &w));
                assert_ne!(g1.is_colored(e1), g2.is_colored(e2));
                assert_eq!(g1.is_colored(e1), word_membership(h1, &w));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let g = DecoratedGraph::new(vec![1, 2, 0], vec![0, 2, 1], &[0]).unwrap();
        let text = g.to_string();
        assert_eq!(text, "3\n1 2 0\n0 2 1\n0\n");
        assert_eq!(text.parse::<DecoratedGraph>().unwrap(), g);
        let empty = DecoratedGraph::new(vec![0], vec![0], &[]).unwrap();
        assert_eq!(empty.to_string(), "1\n0\n0\n\n");
        assert_eq!(empty.to_string().parse::<DecoratedGraph>().unwrap(), empty);
        assert!("2\n0 1\n0\n\n".parse::<DecoratedGraph>().is_err());
        assert!("2\n0 0\n0 1\n\n".parse::<DecoratedGraph>().is_err());
        assert!("1\n0\n0\n".parse::<DecoratedGraph>().is_err());
    }

    fn random_graph() -> impl Strategy<Value = DecoratedGraph> {
        (1usize..6, any::<u64>()).prop_map(|(n, seed)| {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a: Vec<usize> = (0..n).collect();
            let mut b: Vec<usize> = (0..n).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let colored: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            DecoratedGraph::new(a, b, &colored).unwrap()
        })
    }

    /// Relabel by a random permutation; always isomorphic to the input.
    fn shuffled(g: &DecoratedGraph, seed: u64) -> DecoratedGraph {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = g.vertex_count();
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        let mut a = vec![0; n];
        let mut b = vec![0; n];
        for v in 0..n {
            a[sigma[v]] = sigma[g.perm_a[v]];
            b[sigma[v]] = sigma[g.perm_b[v]];
        }
        let c: Vec<usize> = g.colored().iter().map(|&v| sigma[v]).collect();
        DecoratedGraph::new(a, b, &c).unwrap()
    }

    proptest! {
        #[test]
        fn text_format_round_trips(g in random_graph()) {
            let text = g.to_string();
            let back: DecoratedGraph = text.parse().unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn fiber_projections_are_covers(g1 in random_graph(), g2 in random_graph()) {
            let fp = fiber_product(&g1, &g2);
            let (u1, u2) = (uncolored(&g1), uncolored(&g2));
            for i in 0..fp.components.len() {
                let (c, p1, p2) = fp.component(i, &g1);
                let c = uncolored(&c);
                // a component covers the components of the factors it meets
                let image1: Vec<usize> = dedup(&p1.vertex_map);
                let image2: Vec<usize> = dedup(&p2.vertex_map);
                let (b1, b2) = (u1.induced(&image1), u2.induced(&image2));
                let relabel = |m: &GraphMorphism, img: &[usize]| GraphMorphism {
                    vertex_map: m.vertex_map.iter().map(|v| img.binary_search(v).unwrap()).collect(),
                };
                prop_assert!(check_cover(&c, &b1, &relabel(&p1, &image1)));
                prop_assert!(check_cover(&c, &b2, &relabel(&p2, &image2)));
            }
        }

        #[test]
        fn isomorphism_is_an_equivalence(g in random_graph(), s1 in any::<u64>(), s2 in any::<u64>(), other in random_graph()) {
            let h = shuffled(&g, s1);
            let k = shuffled(&h, s2);
            prop_assert!(is_isomorphic(&g, &g));
            prop_assert!(is_isomorphic(&g, &h) && is_isomorphic(&h, &g));
            prop_assert!(is_isomorphic(&h, &k) && is_isomorphic(&g, &k));
            prop_assert_eq!(is_isomorphic(&g, &other), is_isomorphic(&other, &g));
            prop_assert_eq!(is_isomorphic(&g, &other), is_isomorphic(&h, &other));
        }
    }

    fn dedup(v: &[usize]) -> Vec<usize> {
        let mut out = v.to_vec();
        out.sort_unstable();
        out.dedup();
        out
    }
}
