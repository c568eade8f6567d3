//! Quipus: rooted automata whose walks spell assembly paths. Vertices carry
//! tiles, arcs carry directions, every cycle is entered once, and no walk
//! meets more than two cycles.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path_algebra::{displacement, Direction, FreePath, Vec2};
use crate::regions_cogrow::Side;
use crate::semilinear::{intersect_terms, SemiLinearTerm, TermIntersection};
use crate::tas_core::{Assembly, Tas, TileId, Window};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuipuError {
    #[error("invalid quipu: {0:?}")]
    InvalidQuipu(Vec<Violation>),
    #[error("no cycle with id {0}")]
    NoSuchCycle(usize),
    #[error("no vertex with id {0}")]
    NoSuchVertex(usize),
    #[error("unknown tile {0:?}")]
    UnknownTile(String),
    #[error("comb with backbone {backbone} has {count} proto-teeth on one side, more than its period {period}")]
    ToothBound { backbone: usize, count: usize, period: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    RootHasIncomingArc,
    RootNotSeed,
    SeedReused(usize),
    GlueMismatch { from: usize, to: usize, dir: Direction },
    Nondeterministic { vertex: usize, dir: Direction },
    Unreachable(usize),
    BadInDegree(usize),
    TangledCycles(usize),
    TooManyCycles(usize),
    NullCycle(usize),
    ColinearCycles(usize),
    CoverOverlap(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    Z0,
    Z1,
    Z2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub tile: TileId,
    pub copy_of: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub dir: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quipu {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    root: usize,
}

/// A cycle listed from its entry vertex; `letters[k]` labels the arc leaving
/// `vertices[k]`. Its id is its smallest vertex id, which unrolling and
/// k-multiples leave unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub id: usize,
    pub vertices: Vec<usize>,
    pub letters: Vec<Direction>,
}

impl Cycle {
    pub fn entry(&self) -> usize {
        self.vertices[0]
    }

    pub fn word(&self) -> FreePath {
        FreePath(self.letters.clone())
    }

    pub fn displacement(&self) -> Vec2 {
        displacement(&self.word())
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.vertices.iter().position(|x| *x == v)
    }
}

/// Derived shape of a quipu.
#[derive(Debug, Clone)]
pub struct Structure {
    pub out: Vec<Vec<(Direction, usize)>>,
    pub cycles: Vec<Cycle>,
    /// Index into `cycles` for cycle vertices.
    pub cycle_of: Vec<Option<usize>>,
    /// Predecessor on the simple root path.
    pub parent: Vec<Option<(usize, Direction)>>,
    /// Displacement of the simple root path.
    pub base: Vec<Vec2>,
    /// Cycles met on the way from the root, as indices into `cycles`.
    pub governing: Vec<Vec<usize>>,
    pub violations: Vec<Violation>,
}

impl Structure {
    pub fn zone(&self, v: usize) -> Zone {
        match self.governing[v].len() {
            0 => Zone::Z0,
            1 => Zone::Z1,
            _ => Zone::Z2,
        }
    }

    pub fn cover(&self, v: usize) -> SemiLinearTerm {
        SemiLinearTerm {
            base: self.base[v],
            gens: self.governing[v].iter().map(|c| self.cycles[*c].displacement()).collect(),
        }
    }

    pub fn cycle_by_id(&self, id: usize) -> Option<&Cycle> {
        self.cycles.iter().find(|c| c.id == id)
    }

    /// Word of the simple root path to `v`.
    pub fn root_word(&self, v: usize) -> FreePath {
        let mut w = Vec::new();
        let mut x = v;
        while let Some((p, d)) = self.parent[x] {
            w.push(d);
            x = p;
        }
        w.reverse();
        FreePath(w)
    }

    /// The vertex of cycle `c` that `v` hangs from (possibly `v` itself).
    pub fn attachment(&self, v: usize, c: usize) -> Option<usize> {
        let mut x = v;
        loop {
            if self.cycle_of[x] == Some(c) {
                return Some(x);
            }
            x = self.parent[x]?.0;
        }
    }

    /// All vertices reachable from `v` without entering cycle `c`, `v` first.
    pub fn hanging(&self, v: usize, skip: Option<usize>) -> Vec<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut order = vec![v];
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            for &(_, y) in &self.out[x] {
                if skip.is_some() && self.cycle_of[y] == skip {
                    continue;
                }
                if seen.insert(y) {
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
        order
    }
}

impl Quipu {
    pub fn root_only(tas: &Tas) -> Quipu {
        Quipu { vertices: vec![Vertex { tile: tas.seed(), copy_of: None }], arcs: Vec::new(), root: 0 }
    }

    pub fn from_parts(vertices: Vec<Vertex>, arcs: Vec<Arc>, root: usize) -> Quipu {
        Quipu { vertices, arcs, root }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn tile(&self, v: usize) -> TileId {
        self.vertices[v].tile
    }

    pub fn add_vertex(&mut self, tile: TileId, copy_of: Option<usize>) -> usize {
        self.vertices.push(Vertex { tile, copy_of });
        self.vertices.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, dir: Direction, to: usize) {
        self.arcs.push(Arc { from, to, dir });
    }

    pub fn successor(&self, v: usize, d: Direction) -> Option<usize> {
        self.arcs.iter().find(|a| a.from == v && a.dir == d).map(|a| a.to)
    }

    pub fn structure(&self) -> Structure {
        analyze(self)
    }

    /// Structure of a quipu satisfying conditions 1 to 6.
    pub fn checked_structure(&self) -> Result<Structure, QuipuError> {
        let s = analyze(self);
        if s.violations.is_empty() {
            Ok(s)
        } else {
            Err(QuipuError::InvalidQuipu(s.violations))
        }
    }

    pub fn cycle_count(&self) -> usize {
        analyze(self).cycles.len()
    }
}

fn analyze(q: &Quipu) -> Structure {
    let n = q.vertices.len();
    let mut violations = Vec::new();
    let mut out: Vec<Vec<(Direction, usize)>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<(usize, Direction)>> = vec![Vec::new(); n];
    for a in &q.arcs {
        out[a.from].push((a.dir, a.to));
        inc[a.to].push((a.from, a.dir));
    }
    for (v, o) in out.iter_mut().enumerate() {
        o.sort_by_key(|(d, _)| d.index());
        for w in o.windows(2) {
            if w[0].0 == w[1].0 {
                violations.push(Violation::Nondeterministic { vertex: v, dir: w[0].0 });
            }
        }
    }
    if !inc[q.root].is_empty() {
        violations.push(Violation::RootHasIncomingArc);
    }

    // reachability sets are small; a vertex is on a cycle iff it reaches itself
    let reach_from = |v: usize| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = out[v].iter().map(|(_, y)| *y).collect();
        while let Some(x) = stack.pop() {
            if !seen[x] {
                seen[x] = true;
                stack.extend(out[x].iter().map(|(_, y)| *y));
            }
        }
        seen
    };
    let reach: Vec<Vec<bool>> = (0..n).map(reach_from).collect();
    let on_cycle: Vec<bool> = (0..n).map(|v| reach[v][v]).collect();

    let mut cycle_of: Vec<Option<usize>> = vec![None; n];
    let mut cycles: Vec<Cycle> = Vec::new();
    for v in 0..n {
        if !on_cycle[v] || cycle_of[v].is_some() {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&u| on_cycle[u] && reach[v][u] && reach[u][v]).collect();
        let internal: Vec<&Arc> =
            q.arcs.iter().filter(|a| members.contains(&a.from) && members.contains(&a.to)).collect();
        if internal.len() != members.len() {
            violations.push(Violation::TangledCycles(v));
            for &u in &members {
                cycle_of[u] = Some(usize::MAX);
            }
            continue;
        }
        let entries: Vec<usize> =
            members.iter().copied().filter(|&u| inc[u].iter().any(|(p, _)| !members.contains(p))).collect();
        let entry = match entries.as_slice() {
            [e] => *e,
            _ => {
                violations.push(Violation::BadInDegree(members[0]));
                members[0]
            }
        };
        let mut verts = vec![entry];
        let mut letters = Vec::new();
        let mut x = entry;
        loop {
            let a = internal.iter().find(|a| a.from == x).expect("cycle arc");
            letters.push(a.dir);
            if a.to == entry {
                break;
            }
            verts.push(a.to);
            x = a.to;
        }
        let idx = cycles.len();
        for &u in &verts {
            cycle_of[u] = Some(idx);
        }
        cycles.push(Cycle { id: *verts.iter().min().expect("non-empty"), vertices: verts, letters });
    }
    for c in cycle_of.iter_mut() {
        if *c == Some(usize::MAX) {
            *c = None;
        }
    }

    // in-degrees: one arc into every vertex but the root and cycle entries
    for v in 0..n {
        if v == q.root {
            continue;
        }
        let want = match cycle_of[v] {
            Some(c) if cycles[c].entry() == v => 2,
            _ => 1,
        };
        if inc[v].len() != want {
            violations.push(Violation::BadInDegree(v));
        }
    }

    let mut parent: Vec<Option<(usize, Direction)>> = vec![None; n];
    let mut base = vec![Vec2::ZERO; n];
    let mut governing: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    seen[q.root] = true;
    if let Some(c) = cycle_of[q.root] {
        governing[q.root].push(c);
    }
    let mut queue = VecDeque::from([q.root]);
    while let Some(x) = queue.pop_front() {
        for &(d, y) in &out[x] {
            if seen[y] {
                continue;
            }
            seen[y] = true;
            parent[y] = Some((x, d));
            base[y] = base[x] + d.vector();
            let mut g = governing[x].clone();
            if let Some(c) = cycle_of[y] {
                if !g.contains(&c) {
                    g.push(c);
                }
            }
            governing[y] = g;
            queue.push_back(y);
        }
    }
    for v in 0..n {
        if !seen[v] {
            violations.push(Violation::Unreachable(v));
        }
        if governing[v].len() > 2 {
            violations.push(Violation::TooManyCycles(v));
        }
        if let [a, b] = governing[v].as_slice() {
            if cycles[*a].displacement().colinear(cycles[*b].displacement()) {
                violations.push(Violation::ColinearCycles(v));
            }
        }
    }
    for c in &cycles {
        if c.displacement().is_zero() {
            violations.push(Violation::NullCycle(c.id));
        }
    }
    Structure { out, cycles, cycle_of, parent, base, governing, violations }
}

/// Conditions 1 to 7. Walks are free paths as soon as covers are disjoint
/// and cycles move, so condition 6 is not checked on its own.
pub fn validate(q: &Quipu, tas: &Tas) -> Result<(), Vec<Violation>> {
    let s = analyze(q);
    let mut v = s.violations.clone();
    if q.tile(q.root) != tas.seed() {
        v.push(Violation::RootNotSeed);
    }
    if !tas.seed_in_tileset() {
        for (i, x) in q.vertices.iter().enumerate() {
            if i != q.root && x.tile == tas.seed() {
                v.push(Violation::SeedReused(i));
            }
        }
    }
    for a in &q.arcs {
        if !tas.bonds(q.tile(a.from), a.dir, q.tile(a.to)) {
            v.push(Violation::GlueMismatch { from: a.from, to: a.to, dir: a.dir });
        }
    }
    if v.is_empty() {
        v.extend(cover_overlaps(q, &s));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn cover_overlaps(q: &Quipu, s: &Structure) -> Vec<Violation> {
    let terms: Vec<SemiLinearTerm> = (0..q.len()).map(|v| s.cover(v)).collect();
    let mut out = Vec::new();
    for a in 0..terms.len() {
        for b in a + 1..terms.len() {
            if !intersect_terms(&terms[a], &terms[b]).is_empty() {
                out.push(Violation::CoverOverlap(a, b));
            }
        }
    }
    out
}

pub fn cover(q: &Quipu, v: usize) -> Result<SemiLinearTerm, QuipuError> {
    if v >= q.len() {
        return Err(QuipuError::NoSuchVertex(v));
    }
    Ok(q.checked_structure()?.cover(v))
}

/// Copies everything reachable from `start` (cycles included) and returns the
/// id map, new ids assigned in breadth-first order.
fn copy_subgraph(q: &mut Quipu, s: &Structure, start: usize) -> BTreeMap<usize, usize> {
    let verts = s.hanging(start, None);
    let mut map = BTreeMap::new();
    for &v in &verts {
        let id = q.add_vertex(q.vertices[v].tile, Some(v));
        map.insert(v, id);
    }
    for &v in &verts {
        for &(d, y) in &s.out[v] {
            q.add_arc(map[&v], d, map[&y]);
        }
    }
    map
}

/// Result of an unrolling: the new quipu and, for every copied vertex, its copy.
#[derive(Debug, Clone)]
pub struct Unrolled {
    pub quipu: Quipu,
    pub copies: BTreeMap<usize, usize>,
}

fn unroll_once(q: &Quipu, cycle: usize) -> Result<Unrolled, QuipuError> {
    let s = q.checked_structure()?;
    let c = s.cycle_by_id(cycle).ok_or(QuipuError::NoSuchCycle(cycle))?.clone();
    let ci = s.cycle_of[c.entry()].expect("cycle vertex");
    let xc = c.entry();
    let z = c.vertices[1 % c.vertices.len()];
    let mut nq = q.clone();
    let x = nq.add_vertex(q.vertices[xc].tile, Some(xc));
    let mut copies = BTreeMap::from([(xc, x)]);
    for &(d, y) in &s.out[xc] {
        if s.cycle_of[y] == Some(ci) {
            continue;
        }
        let m = copy_subgraph(&mut nq, &s, y);
        nq.add_arc(x, d, m[&y]);
        copies.extend(m);
    }
    for a in nq.arcs.iter_mut() {
        if a.to == xc && s.cycle_of[a.from] != Some(ci) {
            a.to = x;
        }
    }
    nq.add_arc(x, c.letters[0], z);
    Ok(Unrolled { quipu: nq, copies })
}

/// `steps` one-step unrollings of the cycle with the given id.
pub fn unroll(q: &Quipu, cycle: usize, steps: usize) -> Result<Quipu, QuipuError> {
    let mut cur = q.clone();
    for _ in 0..steps {
        cur = unroll_once(&cur, cycle)?.quipu;
    }
    Ok(cur)
}

/// Unrolls cycle `cycle` until the vertex `v` (which hangs from it) has been
/// copied; the copy takes over the first element of `v`'s cover.
pub fn peel(q: &Quipu, cycle: usize, v: usize) -> Result<Unrolled, QuipuError> {
    let s = q.checked_structure()?;
    let c = s.cycle_by_id(cycle).ok_or(QuipuError::NoSuchCycle(cycle))?;
    let ci = s.cycle_of[c.entry()].expect("cycle vertex");
    let a = s.attachment(v, ci).ok_or(QuipuError::NoSuchVertex(v))?;
    let steps = c.position(a).expect("on cycle") + 1;
    let mut cur = q.clone();
    for _ in 0..steps {
        let u = unroll_once(&cur, cycle)?;
        cur = u.quipu;
        if let Some(&copy) = u.copies.get(&v) {
            return Ok(Unrolled { quipu: cur, copies: BTreeMap::from([(v, copy)]) });
        }
    }
    unreachable!("the attachment vertex becomes the entry within one turn")
}

/// Replaces the cycle with `k` consecutive copies of itself.
pub fn k_multiple(q: &Quipu, cycle: usize, k: usize) -> Result<Quipu, QuipuError> {
    assert!(k >= 2, "k-multiple needs k >= 2");
    let s = q.checked_structure()?;
    let c = s.cycle_by_id(cycle).ok_or(QuipuError::NoSuchCycle(cycle))?.clone();
    let ci = s.cycle_of[c.entry()].expect("cycle vertex");
    let len = c.vertices.len();
    let mut nq = q.clone();
    let last = c.vertices[len - 1];
    nq.arcs.retain(|a| !(a.from == last && a.to == c.entry() && a.dir == c.letters[len - 1]));
    let mut layers: Vec<Vec<usize>> = vec![c.vertices.clone()];
    for _ in 1..k {
        let mut layer = Vec::with_capacity(len);
        for &x in &c.vertices {
            let id = nq.add_vertex(q.vertices[x].tile, Some(x));
            for &(d, y) in &s.out[x] {
                if s.cycle_of[y] == Some(ci) {
                    continue;
                }
                let m = copy_subgraph(&mut nq, &s, y);
                nq.add_arc(id, d, m[&y]);
            }
            layer.push(id);
        }
        layers.push(layer);
    }
    for (j, layer) in layers.iter().enumerate() {
        for i in 0..len {
            let to = if i + 1 < len {
                layer[i + 1]
            } else if j + 1 < k {
                layers[j + 1][0]
            } else {
                c.entry()
            };
            if j == 0 && i + 1 < len {
                continue; // original arcs stay
            }
            nq.add_arc(layer[i], c.letters[i], to);
        }
    }
    Ok(nq)
}

/// Placements of the quipu's assembly inside the window.
pub fn alpha_within(q: &Quipu, window: &Window) -> Result<Assembly, QuipuError> {
    let s = q.checked_structure()?;
    let mut asm = Assembly::default();
    for v in 0..q.len() {
        for p in s.cover(v).enumerate(window) {
            asm.tiles.entry(p).or_insert(q.tile(v));
        }
    }
    Ok(asm)
}

/// Which vertex places a tile at a point.
#[derive(Debug, Clone)]
pub struct CoverIndex {
    pub terms: Vec<SemiLinearTerm>,
}

impl CoverIndex {
    pub fn new(s: &Structure) -> CoverIndex {
        CoverIndex { terms: (0..s.base.len()).map(|v| s.cover(v)).collect() }
    }

    pub fn covering(&self, p: Vec2) -> Option<usize> {
        self.terms.iter().position(|t| t.contains(p))
    }

    pub fn covers(&self, p: Vec2) -> bool {
        self.covering(p).is_some()
    }

    /// Exact test that no cover meets the term; `None` is never returned for
    /// the shapes the solver handles.
    pub fn disjoint_from(&self, t: &SemiLinearTerm) -> bool {
        self.terms.iter().all(|c| intersect_terms(c, t).is_empty())
    }

    pub fn overlaps(&self, t: &SemiLinearTerm) -> Vec<(usize, TermIntersection)> {
        self.terms.iter().enumerate().map(|(v, c)| (v, intersect_terms(t, c))).filter(|(_, r)| !r.is_empty()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtoTooth {
    pub connector: FreePath,
    pub tooth: FreePath,
    pub entry: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoration {
    pub at: usize,
    pub words: Vec<FreePath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comb {
    pub transient: FreePath,
    pub backbone: FreePath,
    pub entry: usize,
    pub teeth: Vec<ProtoTooth>,
    pub decorations: Vec<Decoration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CombReport {
    pub combs: Vec<Comb>,
    /// Acyclic branches hanging in the cycle-free part.
    pub decorations: Vec<Decoration>,
}

fn leaf_words(s: &Structure, v: usize) -> Vec<FreePath> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<Direction>)> = vec![(v, Vec::new())];
    while let Some((x, w)) = stack.pop() {
        if s.out[x].is_empty() {
            out.push(FreePath(w));
            continue;
        }
        for &(d, y) in s.out[x].iter().rev() {
            let mut w2 = w.clone();
            w2.push(d);
            stack.push((y, w2));
        }
    }
    out
}

pub fn structure_report(q: &Quipu) -> Result<CombReport, QuipuError> {
    let s = q.checked_structure()?;
    let n = q.len();
    // vertices from which some cycle is reachable, cycles included
    let mut leads: Vec<bool> = s.cycle_of.iter().map(Option::is_some).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !leads[v] && s.out[v].iter().any(|(_, y)| leads[*y]) {
                leads[v] = true;
                changed = true;
            }
        }
    }
    let decorations_under = |v: usize| -> Vec<Decoration> {
        s.out[v]
            .iter()
            .filter(|(_, y)| !leads[*y])
            .map(|&(d, y)| Decoration {
                at: v,
                words: leaf_words(&s, y).into_iter().map(|w| FreePath(vec![d]).concat(&w)).collect(),
            })
            .collect()
    };

    let mut report = CombReport::default();
    for v in 0..n {
        if s.zone(v) == Zone::Z0 && leads[v] {
            report.decorations.extend(decorations_under(v));
        }
    }
    for (ci, c) in s.cycles.iter().enumerate() {
        if s.governing[c.entry()].len() != 1 {
            continue;
        }
        let b = c.displacement();
        let mut comb = Comb {
            transient: s.root_word(c.entry()),
            backbone: c.word(),
            entry: c.entry(),
            teeth: Vec::new(),
            decorations: Vec::new(),
        };
        for v in 0..n {
            let g = &s.governing[v];
            if g.first() != Some(&ci) || !leads[v] {
                continue;
            }
            comb.decorations.extend(decorations_under(v));
        }
        for (ti, t) in s.cycles.iter().enumerate() {
            if s.governing[t.entry()] != [ci, ti] {
                continue;
            }
            let attach = s.attachment(t.entry(), ci).expect("hangs from the backbone");
            let full = s.root_word(t.entry());
            let skip = s.root_word(attach).len();
            let side = if b.cross(t.displacement()) > 0 { Side::Left } else { Side::Right };
            comb.teeth.push(ProtoTooth {
                connector: full.slice(skip, full.len()),
                tooth: t.word(),
                entry: t.entry(),
                side,
            });
        }
        for side in [Side::Left, Side::Right] {
            let count = comb.teeth.iter().filter(|t| t.side == side).count();
            if count > c.letters.len() {
                return Err(QuipuError::ToothBound { backbone: c.id, count, period: c.letters.len() });
            }
        }
        report.combs.push(comb);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: usize,
    pub tile: String,
    pub zone: Zone,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverDoc {
    pub vertex: usize,
    pub base: Vec2,
    pub gens: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuipuDocument {
    pub vertices: Vec<VertexDoc>,
    pub arcs: Vec<Arc>,
    pub root: usize,
    pub covers: Vec<CoverDoc>,
}

impl Quipu {
    pub fn to_document(&self, tas: &Tas) -> QuipuDocument {
        let s = self.structure();
        QuipuDocument {
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, v)| VertexDoc {
                    id,
                    tile: tas.name(v.tile).to_string(),
                    zone: s.zone(id),
                    copy_of: v.copy_of,
                })
                .collect(),
            arcs: self.arcs.clone(),
            root: self.root,
            covers: (0..self.len())
                .map(|v| {
                    let t = s.cover(v);
                    CoverDoc { vertex: v, base: t.base, gens: t.gens }
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &QuipuDocument, tas: &Tas) -> Result<Quipu, QuipuError> {
        let mut vs: Vec<&VertexDoc> = doc.vertices.iter().collect();
        vs.sort_by_key(|v| v.id);
        let mut vertices = Vec::with_capacity(vs.len());
        for (i, v) in vs.iter().enumerate() {
            if v.id != i {
                return Err(QuipuError::NoSuchVertex(i));
            }
            let tile = tas.lookup(&v.tile).ok_or_else(|| QuipuError::UnknownTile(v.tile.clone()))?;
            vertices.push(Vertex { tile, copy_of: v.copy_of });
        }
        for a in &doc.arcs {
            if a.from >= vertices.len() || a.to >= vertices.len() {
                return Err(QuipuError::NoSuchVertex(a.from.max(a.to)));
            }
        }
        if doc.root >= vertices.len() {
            return Err(QuipuError::NoSuchVertex(doc.root));
        }
        Ok(Quipu { vertices, arcs: doc.arcs.clone(), root: doc.root })
    }

    /// Graphviz rendering: tile names on nodes, directions on arcs.
    pub fn to_dot(&self, tas: &Tas) -> String {
        let s = self.structure();
        let mut out = String::from("digraph quipu {\n  node [shape=circle];\n");
        for (id, v) in self.vertices.iter().enumerate() {
            let shape = if id == self.root { ", shape=doublecircle" } else { "" };
            let _ = writeln!(
                out,
                "  v{id} [label=\"{}\", xlabel=\"{id} {:?}\"{shape}];",
                tas.name(v.tile).replace('"', "\\\""),
                s.zone(id)
            );
        }
        for a in &self.arcs {
            let _ = writeln!(out, "  v{} -> v{} [label=\"{}\"];", a.from, a.to, a.dir);
        }
        out.push_str("}\n");
        out
    }
}

/// Lookup of vertices by id for tests and tools.
pub fn tile_names(q: &Quipu, tas: &Tas) -> HashMap<usize, String> {
    (0..q.len()).map(|v| (v, tas.name(q.tile(v)).to_string())).collect()
}
