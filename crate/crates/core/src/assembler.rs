//! Graph-of-spaces assembly: a parcel of six building blocks is glued along a
//! decorated graph into a closed manifold descriptor.
//!
//! Geometry is not computed. Volumes are abstract positive rationals and the
//! gluing data is purely combinatorial.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decorated_graphs::{has_common_decorated_cover, is_isomorphic, DecoratedGraph, GraphError};
use crate::exact_arith::{rat, Rational};
use crate::form_families::{
    make_q, make_r, noncommensurability_certificate, FormError, NonCommensurabilityCertificate, QuadraticForm,
};
use crate::free_groups::{enumerate_subgroups, hall_count, GroupError, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("dimension {0} is below 3")]
    DimensionTooSmall(usize),
    #[error("missing certificate for blocks {0} and {1}")]
    MissingCertificate(usize, usize),
    #[error("block volumes must be positive")]
    NonPositiveVolume,
    #[error("descriptor is not closed: {0}")]
    NotClosed(String),
    #[error("malformed descriptor: {0}")]
    Malformed(String),
    #[error("descriptor was built from parcel {descriptor}, not {parcel}")]
    ParcelMismatch { descriptor: String, parcel: String },
    #[error("trace needs exactly one coloured vertex, found {0}")]
    ColoredVertices(usize),
    #[error("volume {v} is below the single-vertex scale {min}")]
    VolumeTooSmall { v: Rational, min: Rational },
    #[error("k = {0} is too large to count")]
    TooLarge(BigUint),
    #[error("descriptor emission is capped at k <= {cap}, got k = {k}")]
    EmissionCap { k: usize, cap: usize },
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, AssemblyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    V0,
    V1,
    APlus,
    AMinus,
    BPlus,
    BMinus,
}

impl BlockKind {
    /// Parcel order.
    pub const ALL: [BlockKind; 6] = [
        BlockKind::V0,
        BlockKind::V1,
        BlockKind::APlus,
        BlockKind::AMinus,
        BlockKind::BPlus,
        BlockKind::BMinus,
    ];

    pub fn boundary_slots(self) -> usize {
        match self {
            BlockKind::V0 | BlockKind::V1 => 4,
            _ => 2,
        }
    }

    pub fn is_vertex(self) -> bool {
        self.boundary_slots() == 4
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::V0 => "V0",
            BlockKind::V1 => "V1",
            BlockKind::APlus => "A+",
            BlockKind::AMinus => "A-",
            BlockKind::BPlus => "B+",
            BlockKind::BMinus => "B-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormFamily {
    /// `q_a` over ℚ, giving non-compact blocks.
    Q,
    /// `r_a` over ℚ(√2), giving compact blocks.
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormId {
    pub family: FormFamily,
    pub parameter: u64,
}

impl FormId {
    pub fn build(&self, n: usize) -> std::result::Result<QuadraticForm, FormError> {
        match self.family {
            FormFamily::Q => make_q(self.parameter, n),
            FormFamily::R => make_r(self.parameter, n),
        }
    }
}

impl fmt::Display for FormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.family {
            FormFamily::Q => "q",
            FormFamily::R => "r",
        };
        write!(f, "{tag}_{}", self.parameter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildingBlock {
    pub kind: BlockKind,
    pub boundary_slots: usize,
    pub volume: Rational,
    pub form_id: FormId,
    pub compact: bool,
}

/// Parameters of the non-compact parcel, in block order.
pub const ISOTROPIC_PARAMETERS: [u64; 6] = [5, 13, 29, 37, 53, 61];
/// Parameters of the compact parcel, in block order.
pub const ANISOTROPIC_PARAMETERS: [u64; 6] = [17, 41, 97, 137, 193, 241];

/// The six building blocks with the certificates that their ambient forms
/// are pairwise non-commensurable.
#[derive(Debug, Clone)]
pub struct Parcel {
    pub blocks: Vec<BuildingBlock>,
    pub max_volume: Rational,
    /// `certificates[i][j]` separates block i from block j; the diagonal is empty.
    pub certificates: Vec<Vec<Option<NonCommensurabilityCertificate>>>,
    pub dimension: usize,
    /// All boundary components are copies of one manifold.
    pub boundary_type: &'static str,
    /// Torsion-freeness and boundary matching are assumed, not computed.
    pub torsion_free_assumed: bool,
    pub parcel_id: String,
}

pub fn default_parcel(n: usize, compact: bool) -> Result<Parcel> {
    if n < 3 {
        return Err(AssemblyError::DimensionTooSmall(n));
    }
    let (family, params) = if compact {
        (FormFamily::R, ANISOTROPIC_PARAMETERS)
    } else {
        (FormFamily::Q, ISOTROPIC_PARAMETERS)
    };
    let ids: Vec<FormId> = params
        .iter()
        .map(|&parameter| FormId { family, parameter })
        .collect();
    let forms = ids
        .iter()
        .map(|id| id.build(n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut certificates = vec![vec![None; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                let cert = noncommensurability_certificate(&forms[i], &forms[j])?
                    .ok_or(AssemblyError::MissingCertificate(i, j))?;
                certificates[i][j] = Some(cert);
            }
        }
    }
    let blocks = BlockKind::ALL
        .iter()
        .zip(&ids)
        .map(|(&kind, &form_id)| BuildingBlock {
            kind,
            boundary_slots: kind.boundary_slots(),
            volume: rat(1),
            form_id,
            compact,
        })
        .collect();
    let names: Vec<String> = ids.iter().map(ToString::to_string).collect();
    Ok(Parcel {
        blocks,
        max_volume: rat(1),
        certificates,
        dimension: n,
        boundary_type: "N",
        torsion_free_assumed: true,
        parcel_id: format!("n{n}:{}", names.join(",")),
    })
}

impl Parcel {
    /// Replace the block volumes, given in parcel order.
    pub fn with_volumes(mut self, volumes: &[Rational]) -> Result<Self> {
        if volumes.len() != 6 {
            return Err(AssemblyError::Malformed(format!("expected 6 volumes, got {}", volumes.len())));
        }
        if volumes.iter().any(|v| *v <= Rational::zero()) {
            return Err(AssemblyError::NonPositiveVolume);
        }
        for (b, v) in self.blocks.iter_mut().zip(volumes) {
            b.volume = v.clone();
        }
        self.max_volume = volumes.iter().max().cloned().expect("six volumes");
        let vs: Vec<String> = volumes.iter().map(ToString::to_string).collect();
        self.parcel_id = format!("{}:vol={}", self.parcel_id.split(":vol=").next().unwrap_or(""), vs.join(","));
        Ok(self)
    }

    pub fn block(&self, kind: BlockKind) -> &BuildingBlock {
        &self.blocks[kind.index()]
    }

    pub fn compact(&self) -> bool {
        self.blocks[0].compact
    }

    /// Checks the structural invariants: order, slot counts, shared compact
    /// flag, positive volumes, and every off-diagonal certificate present.
    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() != 6 {
            return Err(AssemblyError::Malformed("parcel needs six blocks".into()));
        }
        for (b, kind) in self.blocks.iter().zip(BlockKind::ALL) {
            if b.kind != kind || b.boundary_slots != kind.boundary_slots() || b.compact != self.compact() {
                return Err(AssemblyError::Malformed(format!("block {kind} is inconsistent")));
            }
            if b.volume <= Rational::zero() {
                return Err(AssemblyError::NonPositiveVolume);
            }
        }
        let max = self.blocks.iter().map(|b| &b.volume).max().expect("six blocks");
        if *max != self.max_volume {
            return Err(AssemblyError::Malformed("max_volume is stale".into()));
        }
        for i in 0..6 {
            for j in 0..6 {
                if i != j && self.certificates[i][j].is_none() {
                    return Err(AssemblyError::MissingCertificate(i, j));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum GraphElement {
    Vertex { vertex: usize },
    /// The edge `from → to` labelled `label`.
    Edge { label: EdgeLabel, from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInstance {
    pub id: usize,
    pub kind: BlockKind,
    pub serves: GraphElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub instance: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub first: Slot,
    pub second: Slot,
}

pub const SLOT_RULE: &str =
    "vertex slots 0=a-out 1=a-in 2=b-out 3=b-in; edge pair X-[0]=tail, X-[1]=X+[0], X+[1]=head; edges in vertex order, a before b";

const A_OUT: usize = 0;
const A_IN: usize = 1;
const B_OUT: usize = 2;
const B_IN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldDescriptor {
    pub graph: DecoratedGraph,
    pub parcel_id: String,
    pub instances: Vec<BlockInstance>,
    pub gluings: Vec<Gluing>,
    #[serde(with = "rational_string")]
    pub volume_bound: Rational,
    pub slot_rule: String,
}

mod rational_string {
    use super::Rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|e| D::Error::custom(format!("rational {text:?}: {e}")))
    }
}

impl ManifoldDescriptor {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Pretty JSON; keys appear in field order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serialises")
    }

    /// Parses and re-checks closedness.
    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text).map_err(|e| AssemblyError::Json(e.to_string()))?;
        check_closed(&d)?;
        Ok(d)
    }

    /// Partner of every slot, indexed by `slot_offsets()[instance] + slot`.
    fn partners(&self) -> (Vec<usize>, Vec<Slot>) {
        let mut offsets = Vec::with_capacity(self.instances.len());
        let mut total = 0;
        for inst in &self.instances {
            offsets.push(total);
            total += inst.kind.boundary_slots();
        }
        let mut partner = vec![Slot { instance: usize::MAX, slot: 0 }; total];
        for g in &self.gluings {
            partner[offsets[g.first.instance] + g.first.slot] = g.second;
            partner[offsets[g.second.instance] + g.second.slot] = g.first;
        }
        (offsets, partner)
    }
}

/// Every slot of every instance occurs in exactly one gluing, and nothing else does.
pub fn check_closed(d: &ManifoldDescriptor) -> Result<()> {
    for (i, inst) in d.instances.iter().enumerate() {
        if inst.id != i {
            return Err(AssemblyError::Malformed(format!("instance {i} has id {}", inst.id)));
        }
    }
    let mut used: Vec<Vec<u8>> = d
        .instances
        .iter()
        .map(|inst| vec![0; inst.kind.boundary_slots()])
        .collect();
    for g in &d.gluings {
        for s in [g.first, g.second] {
            let cell = used
                .get_mut(s.instance)
                .and_then(|v| v.get_mut(s.slot))
                .ok_or_else(|| AssemblyError::NotClosed(format!("gluing names missing slot {}:{}", s.instance, s.slot)))?;
            *cell += 1;
        }
    }
    for (i, slots) in used.iter().enumerate() {
        for (s, &n) in slots.iter().enumerate() {
            if n != 1 {
                return Err(AssemblyError::NotClosed(format!("slot {i}:{s} used {n} times")));
            }
        }
    }
    Ok(())
}

/// Builds the graph of spaces over a connected decorated graph.
///
/// Instances `0..k` are vertex blocks (V1 when coloured). Then for each vertex
/// u in order come the pairs (A-, A+) for its outgoing a-edge and (B-, B+) for
/// its outgoing b-edge, so instance counts are always 5k.
pub fn assemble(g: &DecoratedGraph, parcel: &Parcel) -> Result<ManifoldDescriptor> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected.into());
    }
    let k = g.vertex_count();
    let mut instances: Vec<BlockInstance> = (0..k)
        .map(|v| BlockInstance {
            id: v,
            kind: if g.is_colored(v) { BlockKind::V1 } else { BlockKind::V0 },
            serves: GraphElement::Vertex { vertex: v },
        })
        .collect();
    let mut gluings = Vec::with_capacity(6 * k);
    let at = |instance, slot| Slot { instance, slot };
    for u in 0..k {
        let edges = [
            (EdgeLabel::A, g.perm_a()[u], BlockKind::AMinus, BlockKind::APlus, A_OUT, A_IN),
            (EdgeLabel::B, g.perm_b()[u], BlockKind::BMinus, BlockKind::BPlus, B_OUT, B_IN),
        ];
        for (label, w, minus, plus, out_slot, in_slot) in edges {
            let serves = GraphElement::Edge { label, from: u, to: w };
            let m = instances.len();
            instances.push(BlockInstance { id: m, kind: minus, serves });
            instances.push(BlockInstance { id: m + 1, kind: plus, serves });
            gluings.push(Gluing { first: at(u, out_slot), second: at(m, 0) });
            gluings.push(Gluing { first: at(m, 1), second: at(m + 1, 0) });
            gluings.push(Gluing { first: at(m + 1, 1), second: at(w, in_slot) });
        }
    }
    let volume_bound = instances
        .iter()
        .map(|inst| parcel.block(inst.kind).volume.clone())
        .fold(Rational::zero(), |acc, v| acc + v);
    let d = ManifoldDescriptor {
        graph: g.clone(),
        parcel_id: parcel.parcel_id.clone(),
        instances,
        gluings,
        volume_bound,
        slot_rule: SLOT_RULE.to_string(),
    };
    check_closed(&d).expect("assembly always closes up");
    Ok(d)
}

/// Exact volume of the assembled descriptor, checked against `5k·𝒱`.
pub fn volume_bound(d: &ManifoldDescriptor, parcel: &Parcel) -> Result<Rational> {
    if d.parcel_id != parcel.parcel_id {
        return Err(AssemblyError::ParcelMismatch {
            descriptor: d.parcel_id.clone(),
            parcel: parcel.parcel_id.clone(),
        });
    }
    let total = d
        .instances
        .iter()
        .map(|inst| parcel.block(inst.kind).volume.clone())
        .fold(Rational::zero(), |acc, v| acc + v);
    let cap = rat(5 * d.vertex_count() as i64) * &parcel.max_volume;
    assert!(total <= cap, "volume {total} exceeds 5k*V = {cap}");
    Ok(total)
}

/// Path of a word through the glued blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// Kinds of the blocks visited, starting with the coloured vertex block.
    pub kinds: Vec<BlockKind>,
    pub crossings: usize,
    pub terminal: BlockKind,
}

fn out_slot(l: Letter) -> usize {
    match l {
        Letter::A => A_OUT,
        Letter::AInv => A_IN,
        Letter::B => B_OUT,
        Letter::BInv => B_IN,
    }
}

/// Follows `w` from the block of the unique coloured vertex. Each letter leaves
/// the current vertex block by its slot and passes through two edge blocks.
pub fn trace_word(d: &ManifoldDescriptor, w: &Word) -> Result<Trace> {
    let colored: Vec<usize> = d
        .instances
        .iter()
        .filter(|inst| inst.kind == BlockKind::V1)
        .map(|inst| inst.id)
        .collect();
    if colored.len() != 1 {
        return Err(AssemblyError::ColoredVertices(colored.len()));
    }
    let (offsets, partner) = d.partners();
    let cross = |s: Slot| partner[offsets[s.instance] + s.slot];
    let mut here = colored[0];
    let mut kinds = vec![d.instances[here].kind];
    let mut crossings = 0;
    for &l in w.letters() {
        let mut s = cross(Slot { instance: here, slot: out_slot(l) });
        crossings += 1;
        for _ in 0..2 {
            let inst = &d.instances[s.instance];
            if inst.kind.is_vertex() {
                return Err(AssemblyError::Malformed(format!("letter {l:?} reached a vertex block early")));
            }
            kinds.push(inst.kind);
            s = cross(Slot { instance: s.instance, slot: 1 - s.slot });
            crossings += 1;
        }
        here = s.instance;
        let kind = d.instances[here].kind;
        if !kind.is_vertex() {
            return Err(AssemblyError::Malformed(format!("letter {l:?} did not return to a vertex block")));
        }
        kinds.push(kind);
    }
    Ok(Trace {
        terminal: d.instances[here].kind,
        kinds,
        crossings,
    })
}

/// Verdict on two assembled descriptors.
///
/// The verdict itself is "commensurable iff the source graphs are isomorphic",
/// which rests on a geometric argument not reproduced here. The remaining
/// fields are the hypotheses that can be checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommensurabilityVerdict {
    pub commensurable: bool,
    pub graphs_isomorphic: bool,
    pub common_decorated_cover: bool,
    pub parcel_certified: bool,
    pub geometric_step_assumed: bool,
}

pub fn commensurability_verdict(
    d1: &ManifoldDescriptor,
    d2: &ManifoldDescriptor,
    parcel: &Parcel,
) -> Result<CommensurabilityVerdict> {
    for d in [d1, d2] {
        if d.parcel_id != parcel.parcel_id {
            return Err(AssemblyError::ParcelMismatch {
                descriptor: d.parcel_id.clone(),
                parcel: parcel.parcel_id.clone(),
            });
        }
    }
    let graphs_isomorphic = is_isomorphic(&d1.graph, &d2.graph);
    let common_decorated_cover = has_common_decorated_cover(&d1.graph, &d2.graph)?.is_some();
    Ok(CommensurabilityVerdict {
        commensurable: graphs_isomorphic,
        graphs_isomorphic,
        common_decorated_cover,
        parcel_certified: parcel.validate().is_ok(),
        geometric_step_assumed: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountReport {
    pub k: usize,
    pub descriptor_count: BigUint,
    /// `⌈k^{k/2}⌉`.
    pub floor_bound: BigUint,
}

/// Above this `k` the Hall recursion is no longer a desk computation.
pub const MAX_COUNT_K: usize = 5000;

/// `⌈k^{k/2}⌉` computed exactly.
pub fn ceil_half_power(k: usize) -> BigUint {
    let full = BigUint::from(k).pow(k as u32);
    let root = full.sqrt();
    if &root * &root == full {
        root
    } else {
        root + BigUint::one()
    }
}

pub fn count_lower_bound(v: &Rational, parcel: &Parcel) -> Result<CountReport> {
    let unit = rat(5) * &parcel.max_volume;
    if *v < unit {
        return Err(AssemblyError::VolumeTooSmall { v: v.clone(), min: unit });
    }
    let k_big = (v / &unit).floor().to_integer();
    let k = usize::try_from(&k_big)
        .ok()
        .filter(|&k| k <= MAX_COUNT_K)
        .ok_or_else(|| AssemblyError::TooLarge(k_big.magnitude().clone()))?;
    let report = CountReport {
        k,
        descriptor_count: hall_count(k),
        floor_bound: ceil_half_power(k),
    };
    assert!(
        report.descriptor_count >= report.floor_bound,
        "a_{k} below k^(k/2)"
    );
    Ok(report)
}

/// Descriptor emission is limited to this many vertices.
pub const MAX_EMIT_K: usize = 5;

/// One descriptor per index-k subgroup, with the basepoint coloured, in
/// enumeration order.
pub fn single_colored_descriptors(k: usize, parcel: &Parcel) -> Result<Vec<ManifoldDescriptor>> {
    enumerate_subgroups(k)?
        .iter()
        .map(|h| assemble(&DecoratedGraph::pointed(h), parcel))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::ratio;
    use crate::free_groups::{distinguishing_word, SubgroupTable};
    use proptest::prelude::*;

    fn parcel() -> Parcel {
        default_parcel(4, false).unwrap()
    }

    fn up_to(k: usize) -> Vec<SubgroupTable> {
        (1..=k).flat_map(|i| enumerate_subgroups(i).unwrap()).collect()
    }

    #[test]
    fn default_parcels() {
        let p = parcel();
        let ids: Vec<String> = p.blocks.iter().map(|b| b.form_id.to_string()).collect();
        assert_eq!(ids, ["q_5", "q_13", "q_29", "q_37", "q_53", "q_61"]);
        assert_eq!(p.max_volume, rat(1));
        assert!(!p.compact());
        p.validate().unwrap();
        let c = default_parcel(4, true).unwrap();
        let ids: Vec<String> = c.blocks.iter().map(|b| b.form_id.to_string()).collect();
        assert_eq!(ids, ["r_17", "r_41", "r_97", "r_137", "r_193", "r_241"]);
        assert!(c.blocks.iter().all(|b| b.compact));
        c.validate().unwrap();
        for n in [3, 5, 6] {
            default_parcel(n, false).unwrap().validate().unwrap();
        }
        assert_eq!(default_parcel(2, false).unwrap_err(), AssemblyError::DimensionTooSmall(2));
    }

    #[test]
    fn slot_counts() {
        for b in &parcel().blocks {
            let expect = if matches!(b.kind, BlockKind::V0 | BlockKind::V1) { 4 } else { 2 };
            assert_eq!(b.boundary_slots, expect);
        }
    }

    #[test]
    fn one_vertex_graph() {
        let g = DecoratedGraph::pointed(&SubgroupTable::trivial());
        let d = assemble(&g, &parcel()).unwrap();
        let kinds: Vec<BlockKind> = d.instances.iter().map(|i| i.kind).collect();
        use BlockKind::*;
        assert_eq!(kinds, [V1, AMinus, APlus, BMinus, BPlus]);
        // 4 + 4·2 = 12 slots, paired up
        assert_eq!(d.gluings.len(), 6);
        let on_vertex: Vec<usize> = d
            .gluings
            .iter()
            .flat_map(|g| [g.first, g.second])
            .filter(|s| s.instance == 0)
            .map(|s| s.slot)
            .collect();
        let mut sorted = on_vertex.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2, 3]);
        assert_eq!(volume_bound(&d, &parcel()).unwrap(), rat(5));
    }

    #[test]
    fn self_loop_attaches_both_ends_to_one_vertex() {
        // a fixes vertex 0, b swaps
        let g = DecoratedGraph::new(vec![0, 1], vec![1, 0], &[0]).unwrap();
        let d = assemble(&g, &parcel()).unwrap();
        let a_pair = &d.gluings[0..3];
        assert_eq!(a_pair[0].first, Slot { instance: 0, slot: 0 });
        assert_eq!(a_pair[2].second, Slot { instance: 0, slot: 1 });
    }

    #[test]
    fn closedness_and_volume_exhaustive() {
        let p = parcel();
        for h in up_to(4) {
            let k = h.degree();
            for colored in [vec![0], vec![]] {
                let g = DecoratedGraph::from_subgroup(&h, &colored).unwrap();
                let d = assemble(&g, &p).unwrap();
                check_closed(&d).unwrap();
                assert_eq!(d.instances.len(), 5 * k);
                assert_eq!(d.gluings.len(), 6 * k);
                assert_eq!(volume_bound(&d, &p).unwrap(), rat(5 * k as i64));
            }
        }
    }

    #[test]
    fn unequal_volumes_stay_below_bound() {
        let vols = [rat(1), rat(1), rat(1), rat(1), rat(1), rat(2)];
        let p = parcel().with_volumes(&vols).unwrap();
        assert_eq!(p.max_volume, rat(2));
        p.validate().unwrap();
        for h in up_to(3) {
            let k = h.degree() as i64;
            let d = assemble(&DecoratedGraph::pointed(&h), &p).unwrap();
            let v = volume_bound(&d, &p).unwrap();
            // k vertex blocks of volume 1, k each of A-, A+, B+, and k of B- at 2
            assert_eq!(v, rat(6 * k));
            assert!(v <= rat(10 * k));
        }
        let d = assemble(&DecoratedGraph::pointed(&SubgroupTable::trivial()), &parcel()).unwrap();
        assert!(matches!(volume_bound(&d, &p), Err(AssemblyError::ParcelMismatch { .. })));
        assert_eq!(
            parcel().with_volumes(&[rat(1), rat(0), rat(1), rat(1), rat(1), rat(1)]).unwrap_err(),
            AssemblyError::NonPositiveVolume
        );
    }

    #[test]
    fn disconnected_rejected() {
        let g = DecoratedGraph::new(vec![0, 1], vec![0, 1], &[0]).unwrap();
        assert!(matches!(assemble(&g, &parcel()), Err(AssemblyError::Graph(GraphError::Disconnected))));
    }

    #[test]
    fn open_descriptor_detected() {
        let mut d = assemble(&DecoratedGraph::pointed(&SubgroupTable::trivial()), &parcel()).unwrap();
        d.gluings.pop();
        assert!(matches!(check_closed(&d), Err(AssemblyError::NotClosed(_))));
        let mut d2 = assemble(&DecoratedGraph::pointed(&SubgroupTable::trivial()), &parcel()).unwrap();
        d2.gluings[0].second.slot = 7;
        assert!(check_closed(&d2).is_err());
    }

    #[test]
    fn trace_examples() {
        let p = parcel();
        let swap_a = SubgroupTable::new(vec![1, 0], vec![0, 1]).unwrap();
        let swap_b = SubgroupTable::new(vec![0, 1], vec![1, 0]).unwrap();
        let d1 = assemble(&DecoratedGraph::pointed(&swap_a), &p).unwrap();
        let d2 = assemble(&DecoratedGraph::pointed(&swap_b), &p).unwrap();
        let t = trace_word(&d1, &Word::identity()).unwrap();
        assert_eq!((t.terminal, t.crossings), (BlockKind::V1, 0));

        let w = distinguishing_word(&swap_a, &swap_b).unwrap();
        let (t1, t2) = (trace_word(&d1, &w).unwrap(), trace_word(&d2, &w).unwrap());
        assert_ne!(t1.terminal, t2.terminal);
        assert_eq!(t1.crossings, 3 * w.len());
        assert_eq!(t2.crossings, 3 * w.len());

        use BlockKind::*;
        let t = trace_word(&d1, &"aB".parse().unwrap()).unwrap();
        assert_eq!(t.kinds, [V1, AMinus, APlus, V0, BPlus, BMinus, V0]);
        assert_eq!(t.crossings, 6);

        let blank = assemble(&DecoratedGraph::from_subgroup(&swap_a, &[]).unwrap(), &p).unwrap();
        assert_eq!(trace_word(&blank, &w), Err(AssemblyError::ColoredVertices(0)));
        let both = assemble(&DecoratedGraph::from_subgroup(&swap_a, &[0, 1]).unwrap(), &p).unwrap();
        assert_eq!(trace_word(&both, &w), Err(AssemblyError::ColoredVertices(2)));
    }

    #[test]
    fn trace_distinguishes_all_pairs_up_to_four() {
        let p = parcel();
        for k in 1..=4 {
            let subs = enumerate_subgroups(k).unwrap();
            let ds: Vec<ManifoldDescriptor> = subs
                .iter()
                .map(|h| assemble(&DecoratedGraph::pointed(h), &p).unwrap())
                .collect();
            for i in 0..subs.len() {
                for j in 0..subs.len() {
                    if i == j {
                        continue;
                    }
                    let w = distinguishing_word(&subs[i], &subs[j]).unwrap();
                    let (t1, t2) = (trace_word(&ds[i], &w).unwrap(), trace_word(&ds[j], &w).unwrap());
                    assert_ne!(t1.terminal, t2.terminal);
                    assert_eq!((t1.crossings, t2.crossings), (3 * w.len(), 3 * w.len()));
                }
            }
        }
    }

    #[test]
    fn trace_matches_graph_walk() {
        let p = parcel();
        for h in enumerate_subgroups(4).unwrap() {
            let g = DecoratedGraph::pointed(&h);
            let d = assemble(&g, &p).unwrap();
            for w in ["a", "A", "ab", "bA", "abAB", "bbb", "aaBa"] {
                let w: Word = w.parse().unwrap();
                let expect = if g.is_colored(g.trace(0, &w)) { BlockKind::V1 } else { BlockKind::V0 };
                assert_eq!(trace_word(&d, &w).unwrap().terminal, expect);
            }
        }
    }

    #[test]
    fn verdicts() {
        let p = parcel();
        let subs = enumerate_subgroups(3).unwrap();
        let ds: Vec<ManifoldDescriptor> = subs
            .iter()
            .map(|h| assemble(&DecoratedGraph::pointed(h), &p).unwrap())
            .collect();
        for i in 0..ds.len() {
            for j in 0..ds.len() {
                let v = commensurability_verdict(&ds[i], &ds[j], &p).unwrap();
                assert_eq!(v.commensurable, i == j);
                assert_eq!(v.common_decorated_cover, i == j);
                assert!(v.parcel_certified && v.geometric_step_assumed);
            }
        }
    }

    #[test]
    fn half_powers() {
        let expect = [1u64, 1, 2, 6, 16, 56, 216, 908, 4096];
        for (k, &e) in expect.iter().enumerate() {
            assert_eq!(ceil_half_power(k), BigUint::from(e), "k = {k}");
        }
    }

    #[test]
    fn count_examples() {
        let p = parcel();
        let r = count_lower_bound(&rat(30), &p).unwrap();
        assert_eq!((r.k, r.descriptor_count.clone(), r.floor_bound.clone()), (6, 3447u32.into(), 216u32.into()));
        let r = count_lower_bound(&rat(5), &p).unwrap();
        assert_eq!((r.k, r.descriptor_count, r.floor_bound), (1, 1u32.into(), 1u32.into()));
        let r = count_lower_bound(&ratio(99, 10), &p).unwrap();
        assert_eq!(r.k, 1);
        assert!(matches!(count_lower_bound(&rat(4), &p), Err(AssemblyError::VolumeTooSmall { .. })));
        let heavy = parcel().with_volumes(&[rat(2), rat(1), rat(1), rat(1), rat(1), rat(1)]).unwrap();
        assert_eq!(count_lower_bound(&rat(30), &heavy).unwrap().k, 3);
        assert!(matches!(count_lower_bound(&rat(10_i64.pow(9)), &p), Err(AssemblyError::TooLarge(_))));
    }

    #[test]
    fn count_matches_enumeration() {
        let p = parcel();
        for k in 1..=6 {
            let r = count_lower_bound(&rat(5 * k as i64), &p).unwrap();
            assert_eq!(r.descriptor_count, BigUint::from(enumerate_subgroups(k).unwrap().len()));
        }
    }

    #[test]
    fn json_round_trip() {
        let p = parcel().with_volumes(&[ratio(1, 2), rat(1), rat(1), rat(1), rat(1), rat(3)]).unwrap();
        for h in enumerate_subgroups(3).unwrap() {
            let d = assemble(&DecoratedGraph::pointed(&h), &p).unwrap();
            let text = d.to_json();
            let back = ManifoldDescriptor::from_json(&text).unwrap();
            assert_eq!(back, d);
            assert_eq!(back.to_json(), text);
        }
        let d = assemble(&DecoratedGraph::pointed(&SubgroupTable::trivial()), &p).unwrap();
        let text = d.to_json();
        let positions: Vec<usize> = ["graph", "parcel_id", "instances", "gluings", "volume_bound", "slot_rule"]
            .iter()
            .map(|k| text.find(&format!("\n  \"{k}\"")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["volume_bound"], "7");
        let broken = d.to_json().replace("\"slot\": 3", "\"slot\": 2");
        assert!(ManifoldDescriptor::from_json(&broken).is_err());
    }

    proptest! {
        #[test]
        fn count_is_monotone(v1 in 5i64..200, dv in 0i64..200) {
            let p = parcel();
            let r1 = count_lower_bound(&rat(v1), &p).unwrap();
            let r2 = count_lower_bound(&rat(v1 + dv), &p).unwrap();
            prop_assert!(r1.k <= r2.k);
            prop_assert!(r1.descriptor_count <= r2.descriptor_count);
        }
    }
}
