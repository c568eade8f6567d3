//! Temperature-1 tile assembly: tiles, glues, maximal growth in a window.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path_algebra::{displacement, is_simple, pump_check, Direction, FreePath, Vec2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TasError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate tile name {0:?}")]
    DuplicateTileName(String),
    #[error("unknown seed {0:?}")]
    UnknownSeed(String),
    #[error("point {0} is not in the assembly")]
    PointNotInAssembly(Vec2),
    #[error("system is not confluent: {0}")]
    NotConfluent(NotConfluent),
}

/// Rectangle of lattice points, plus a margin of extra room used while growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
    pub margin: i64,
}

impl Window {
    pub const DEFAULT_MARGIN: i64 = 8;

    pub fn new(x_min: i64, x_max: i64, y_min: i64, y_max: i64) -> Self {
        Window { x_min, x_max, y_min, y_max, margin: Self::DEFAULT_MARGIN }
    }

    /// `[-n, n]²`.
    pub fn square(n: i64) -> Self {
        Window::new(-n, n, -n, n)
    }

    pub fn with_margin(mut self, margin: i64) -> Self {
        self.margin = margin;
        self
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn on_boundary(&self, p: Vec2) -> bool {
        self.contains(p) && (p.x == self.x_min || p.x == self.x_max || p.y == self.y_min || p.y == self.y_max)
    }

    /// The window grown by its margin, with margin zero.
    pub fn enlarged(&self) -> Window {
        let m = self.margin;
        Window::new(self.x_min - m, self.x_max + m, self.y_min - m, self.y_max + m).with_margin(0)
    }

    pub fn grow(&self, by: i64) -> Window {
        Window::new(self.x_min - by, self.x_max + by, self.y_min - by, self.y_max + by).with_margin(self.margin)
    }

    pub fn width(&self) -> i64 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> i64 {
        self.y_max - self.y_min + 1
    }

    /// Row-major from the bottom-left corner.
    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        (self.y_min..=self.y_max).flat_map(move |y| (self.x_min..=self.x_max).map(move |x| Vec2::new(x, y)))
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.x_min, self.y_min),
            Vec2::new(self.x_max, self.y_min),
            Vec2::new(self.x_min, self.y_max),
            Vec2::new(self.x_max, self.y_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlueId(pub u32);

impl GlueId {
    pub const NONE: GlueId = GlueId(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileId(pub u32);

impl TileId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileType {
    pub name: String,
    /// Indexed by [`Direction::index`] (N, E, S, W).
    pub glues: [GlueId; 4],
}

impl TileType {
    pub fn glue(&self, d: Direction) -> GlueId {
        self.glues[d.index()]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TileDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub north: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub east: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub south: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub west: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum SeedDoc {
    Name(String),
    Tile(TileDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TasDocument {
    #[serde(default)]
    pub glues: Vec<String>,
    pub tiles: Vec<TileDoc>,
    pub seed: SeedDoc,
    #[serde(default)]
    pub seed_in_tileset: bool,
}

/// A tile assembly system. Tile ids index `types`; the seed is either one of
/// the attachable tiles or an extra type placed only at the origin.
#[derive(Debug, Clone)]
pub struct Tas {
    glue_names: Vec<String>,
    types: Vec<TileType>,
    attachable: Vec<TileId>,
    seed: TileId,
    seed_in_tileset: bool,
    // (tile, direction) -> tiles that bond on that side
    bonders: Vec<[Vec<TileId>; 4]>,
}

impl Tas {
    pub fn from_json(text: &str) -> Result<Tas, TasError> {
        let doc: TasDocument = serde_json::from_str(text).map_err(|e| TasError::Parse(e.to_string()))?;
        load_tas(&doc)
    }

    pub fn types(&self) -> &[TileType] {
        &self.types
    }

    pub fn tile(&self, id: TileId) -> &TileType {
        &self.types[id.index()]
    }

    pub fn name(&self, id: TileId) -> &str {
        &self.types[id.index()].name
    }

    pub fn seed(&self) -> TileId {
        self.seed
    }

    pub fn seed_in_tileset(&self) -> bool {
        self.seed_in_tileset
    }

    pub fn attachable(&self) -> &[TileId] {
        &self.attachable
    }

    pub fn glue_name(&self, g: GlueId) -> Option<&str> {
        if g.is_none() {
            None
        } else {
            Some(&self.glue_names[g.0 as usize - 1])
        }
    }

    pub fn lookup(&self, name: &str) -> Option<TileId> {
        self.types.iter().position(|t| t.name == name).map(|i| TileId(i as u32))
    }

    /// Attachable tiles that bond to `t` across its side `d`, in tile order.
    pub fn bonders(&self, t: TileId, d: Direction) -> &[TileId] {
        &self.bonders[t.index()][d.index()]
    }

    pub fn bonds(&self, t: TileId, d: Direction, t2: TileId) -> bool {
        glues_match(self.tile(t), d, self.tile(t2))
    }

    pub fn to_document(&self) -> TasDocument {
        let doc_of = |t: &TileType| TileDoc {
            name: t.name.clone(),
            north: self.glue_name(t.glue(Direction::N)).map(str::to_string),
            east: self.glue_name(t.glue(Direction::E)).map(str::to_string),
            south: self.glue_name(t.glue(Direction::S)).map(str::to_string),
            west: self.glue_name(t.glue(Direction::W)).map(str::to_string),
        };
        let seed = if self.seed_in_tileset {
            SeedDoc::Name(self.name(self.seed).to_string())
        } else {
            SeedDoc::Tile(doc_of(self.tile(self.seed)))
        };
        TasDocument {
            glues: self.glue_names.clone(),
            tiles: self.attachable.iter().map(|&t| doc_of(self.tile(t))).collect(),
            seed,
            seed_in_tileset: self.seed_in_tileset,
        }
    }
}

pub fn load_tas(doc: &TasDocument) -> Result<Tas, TasError> {
    let mut glue_names: Vec<String> = Vec::new();
    let mut glue_ids: HashMap<String, GlueId> = HashMap::new();
    for g in &doc.glues {
        if g.is_empty() || glue_ids.contains_key(g) {
            continue;
        }
        glue_names.push(g.clone());
        glue_ids.insert(g.clone(), GlueId(glue_names.len() as u32));
    }
    let declared = !doc.glues.is_empty();
    let mut intern = |label: &Option<String>| -> Result<GlueId, TasError> {
        match label.as_deref() {
            None | Some("") => Ok(GlueId::NONE),
            Some(g) => {
                if let Some(id) = glue_ids.get(g) {
                    return Ok(*id);
                }
                if declared {
                    return Err(TasError::Parse(format!("glue {g:?} is not declared")));
                }
                glue_names.push(g.to_string());
                let id = GlueId(glue_names.len() as u32);
                glue_ids.insert(g.to_string(), id);
                Ok(id)
            }
        }
    };
    let mut make = |t: &TileDoc| -> Result<TileType, TasError> {
        Ok(TileType {
            name: t.name.clone(),
            glues: [intern(&t.north)?, intern(&t.east)?, intern(&t.south)?, intern(&t.west)?],
        })
    };

    let mut types = Vec::new();
    let mut names = HashSet::new();
    for t in &doc.tiles {
        if !names.insert(t.name.clone()) {
            return Err(TasError::DuplicateTileName(t.name.clone()));
        }
        types.push(make(t)?);
    }
    let mut attachable: Vec<TileId> = (0..types.len() as u32).map(TileId).collect();

    let seed = match &doc.seed {
        SeedDoc::Name(n) => {
            let i = types.iter().position(|t| &t.name == n);
            match (i, doc.seed_in_tileset) {
                (Some(i), true) => TileId(i as u32),
                (Some(_), false) => {
                    return Err(TasError::Parse(format!("seed {n:?} names a tile but seed_in_tileset is false")))
                }
                (None, _) => return Err(TasError::UnknownSeed(n.clone())),
            }
        }
        SeedDoc::Tile(t) => {
            let st = make(t)?;
            match types.iter().position(|x| x.name == st.name) {
                Some(i) if types[i] == st && doc.seed_in_tileset => TileId(i as u32),
                Some(_) => return Err(TasError::DuplicateTileName(st.name.clone())),
                None => {
                    types.push(st);
                    let id = TileId(types.len() as u32 - 1);
                    if doc.seed_in_tileset {
                        attachable.push(id);
                    }
                    id
                }
            }
        }
    };

    let mut bonders = Vec::with_capacity(types.len());
    for t in &types {
        let mut row: [Vec<TileId>; 4] = Default::default();
        for d in Direction::ALL {
            row[d.index()] = attachable.iter().copied().filter(|c| glues_match(t, d, &types[c.index()])).collect();
        }
        bonders.push(row);
    }

    Ok(Tas { glue_names, types, attachable, seed, seed_in_tileset: doc.seed_in_tileset, bonders })
}

pub fn glues_match(t: &TileType, d: Direction, t2: &TileType) -> bool {
    let g = t.glue(d);
    !g.is_none() && g == t2.glue(d.opposite())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotConfluent {
    pub point: Vec2,
    /// Sorted by name.
    pub tiles: [String; 2],
}

impl std::fmt::Display for NotConfluent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tiles {} and {} both attach at {}", self.tiles[0], self.tiles[1], self.point)
    }
}

fn witness(tas: &Tas, point: Vec2, a: TileId, b: TileId) -> NotConfluent {
    let mut n = [tas.name(a).to_string(), tas.name(b).to_string()];
    n.sort();
    NotConfluent { point, tiles: n }
}

/// Placements keyed by position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assembly {
    pub tiles: BTreeMap<Vec2, TileId>,
}

impl Assembly {
    pub fn get(&self, p: Vec2) -> Option<TileId> {
        self.tiles.get(&p).copied()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn domain(&self) -> BTreeSet<Vec2> {
        self.tiles.keys().copied().collect()
    }

    pub fn crop(&self, w: &Window) -> Assembly {
        Assembly { tiles: self.tiles.iter().filter(|(p, _)| w.contains(**p)).map(|(p, t)| (*p, *t)).collect() }
    }

    /// Neighbors bound to `p` by a matching glue.
    pub fn bound_neighbors(&self, tas: &Tas, p: Vec2) -> Vec<(Direction, Vec2)> {
        let Some(t) = self.get(p) else { return Vec::new() };
        Direction::ALL
            .into_iter()
            .filter_map(|d| {
                let q = p + d.vector();
                let u = self.get(q)?;
                tas.bonds(t, d, u).then_some((d, q))
            })
            .collect()
    }

    /// Breadth-first distance from the origin in the binding graph.
    pub fn distances(&self, tas: &Tas) -> HashMap<Vec2, usize> {
        self.distances_avoiding(tas, None)
    }

    pub(crate) fn distances_avoiding(&self, tas: &Tas, avoid: Option<Vec2>) -> HashMap<Vec2, usize> {
        let mut dist = HashMap::new();
        if self.get(Vec2::ZERO).is_none() || avoid == Some(Vec2::ZERO) {
            return dist;
        }
        let mut queue = VecDeque::from([Vec2::ZERO]);
        dist.insert(Vec2::ZERO, 0);
        while let Some(p) = queue.pop_front() {
            let dp = dist[&p];
            for (_, q) in self.bound_neighbors(tas, p) {
                if Some(q) != avoid && !dist.contains_key(&q) {
                    dist.insert(q, dp + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }
}

/// Maximal growth inside `window.enlarged()`, cropped to `window`.
pub fn grow_max(tas: &Tas, window: &Window) -> Result<Assembly, NotConfluent> {
    grow_full(tas, window).map(|a| a.crop(window))
}

/// Like [`grow_max`] but keeps the margin.
pub fn grow_full(tas: &Tas, window: &Window) -> Result<Assembly, NotConfluent> {
    let area = window.enlarged();
    let mut asm = Assembly::default();
    asm.tiles.insert(Vec2::ZERO, tas.seed());
    let mut queue: VecDeque<Vec2> = VecDeque::new();
    let push_free = |asm: &Assembly, queue: &mut VecDeque<Vec2>, p: Vec2| {
        let t = asm.get(p).expect("placed");
        for d in Direction::ALL {
            let q = p + d.vector();
            if area.contains(q) && asm.get(q).is_none() && !tas.bonders(t, d).is_empty() {
                queue.push_back(q);
            }
        }
    };
    push_free(&asm, &mut queue, Vec2::ZERO);
    while let Some(q) = queue.pop_front() {
        if asm.get(q).is_some() {
            continue;
        }
        let mut options: Vec<TileId> = Vec::new();
        for d in Direction::ALL {
            if let Some(n) = asm.get(q + d.vector()) {
                for &c in tas.bonders(n, d.opposite()) {
                    if !options.contains(&c) {
                        options.push(c);
                    }
                }
            }
        }
        match options.as_slice() {
            [] => {}
            [t] => {
                asm.tiles.insert(q, *t);
                push_free(&asm, &mut queue, q);
            }
            [a, b, ..] => return Err(witness(tas, q, *a, *b)),
        }
    }
    // a placed tile could have been replaced by another one, through a
    // neighbor that is reachable without it
    let cuts = CutOracle::new(tas, &asm);
    for (&p, &t) in &asm.tiles {
        if p == Vec2::ZERO {
            continue;
        }
        for d in Direction::ALL {
            let n = p + d.vector();
            let Some(u) = asm.get(n) else { continue };
            let alt = tas.bonders(u, d.opposite()).iter().copied().find(|&c| c != t);
            if let Some(c) = alt {
                if cuts.reachable_avoiding(n, p) {
                    return Err(witness(tas, p, t, c));
                }
            }
        }
    }
    Ok(asm)
}

/// Depth-first numbering of the binding graph from the origin, answering
/// whether a point stays reachable once another point is removed.
pub struct CutOracle {
    index: HashMap<Vec2, usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    low: Vec<usize>,
    // children sorted by entry time
    children: Vec<Vec<usize>>,
}

impl CutOracle {
    pub fn new(tas: &Tas, asm: &Assembly) -> CutOracle {
        let pts: Vec<Vec2> = asm.tiles.keys().copied().collect();
        let index: HashMap<Vec2, usize> = pts.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let n = pts.len();
        let adj: Vec<Vec<usize>> =
            pts.iter().map(|&p| asm.bound_neighbors(tas, p).into_iter().map(|(_, q)| index[&q]).collect()).collect();
        const UNSEEN: usize = usize::MAX;
        let mut tin = vec![UNSEEN; n];
        let mut tout = vec![0; n];
        let mut low = vec![UNSEEN; n];
        let mut children = vec![Vec::new(); n];
        if let Some(&root) = index.get(&Vec2::ZERO) {
            let mut clock = 0;
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, UNSEEN, 0)];
            tin[root] = clock;
            low[root] = clock;
            while let Some(top) = stack.last_mut() {
                let (v, parent, next) = *top;
                if next < adj[v].len() {
                    let w = adj[v][next];
                    top.2 += 1;
                    if tin[w] == UNSEEN {
                        clock += 1;
                        tin[w] = clock;
                        low[w] = clock;
                        children[v].push(w);
                        stack.push((w, v, 0));
                    } else if w != parent {
                        low[v] = low[v].min(tin[w]);
                    }
                } else {
                    tout[v] = clock;
                    stack.pop();
                    if parent != UNSEEN {
                        low[parent] = low[parent].min(low[v]);
                    }
                }
            }
        }
        CutOracle { index, tin, tout, low, children }
    }

    pub fn reachable(&self, x: Vec2) -> bool {
        self.index.get(&x).is_some_and(|&i| self.tin[i] != usize::MAX)
    }

    /// Whether `x` is reachable from the origin without visiting `y`.
    pub fn reachable_avoiding(&self, x: Vec2, y: Vec2) -> bool {
        if x == y || !self.reachable(x) {
            return false;
        }
        if y == Vec2::ZERO {
            return false;
        }
        let Some(&yi) = self.index.get(&y) else { return true };
        let xi = self.index[&x];
        if self.tin[yi] == usize::MAX || !(self.tin[yi] < self.tin[xi] && self.tin[xi] <= self.tout[yi]) {
            return true;
        }
        let kids = &self.children[yi];
        let pos = kids.partition_point(|&c| self.tin[c] <= self.tin[xi]) - 1;
        self.low[kids[pos]] < self.tin[yi]
    }
}

/// Tiles along the path from the origin, seed excluded.
pub fn path_assembles(tas: &Tas, word: &FreePath) -> Option<Vec<TileId>> {
    if !is_simple(word) {
        return None;
    }
    let n = word.len();
    // feasible[i]: tiles at step i (1-based position) from which the rest assembles
    let mut feasible: Vec<Vec<TileId>> = vec![Vec::new(); n + 1];
    if n == 0 {
        return Some(Vec::new());
    }
    feasible[n] = tas.attachable().to_vec();
    for i in (1..n).rev() {
        let d = word.0[i];
        feasible[i] = tas
            .attachable()
            .iter()
            .copied()
            .filter(|&t| tas.bonders(t, d).iter().any(|c| feasible[i + 1].contains(c)))
            .collect();
    }
    let mut out = Vec::with_capacity(n);
    let mut prev = tas.seed();
    for i in 1..=n {
        let d = word.0[i - 1];
        let next = tas.bonders(prev, d).iter().copied().find(|c| feasible[i].contains(c))?;
        out.push(next);
        prev = next;
    }
    Some(out)
}

/// Tiles of a certified candidate `0.m p^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTiles {
    pub m: FreePath,
    pub p: FreePath,
    /// Tile at every point of `0.m p^reps`, seed first.
    pub tiles: Vec<TileId>,
    pub reps: usize,
    /// Tiles at the period boundaries repeat from period `cycle_start` on,
    /// with period `cycle_periods` (in units of `p`).
    pub cycle_start: usize,
    pub cycle_periods: usize,
}

impl CandidateTiles {
    /// Tile at point index `i` of `0.m p^ω`.
    pub fn tile_at(&self, i: usize) -> TileId {
        let m = self.m.len();
        let lp = self.p.len();
        let start = m + self.cycle_start * lp;
        if i <= start {
            return self.tiles[i];
        }
        let cyc = self.cycle_periods * lp;
        self.tiles[start + (i - start - 1) % cyc + 1]
    }
}

/// Periods of `p` after which `0.m p^ω` cannot come back to the points of `m`.
pub fn separation_periods(m: &FreePath, p: &FreePath) -> usize {
    let v = displacement(p);
    let vv = v.dot(v);
    if vv == 0 {
        return 0;
    }
    let m_pts = m.points_from(Vec2::ZERO);
    let m_end = *m_pts.last().expect("non-empty");
    let m_max = m_pts[..m_pts.len() - 1].iter().map(|q| q.dot(v)).max();
    let Some(m_max) = m_max else { return 1 };
    let min_off = p.points_from(Vec2::ZERO).iter().map(|q| q.dot(v)).min().unwrap_or(0);
    let gap = m_max - m_end.dot(v) - min_off;
    (gap.max(0) / vv + 2) as usize
}

/// Certifies `0.m p^ω ⊑ AlphaMax` for systems where each step has a unique
/// bonding tile: the geometry is checked up to the point where the periodic
/// part has left `m` behind, and the tile sequence up to a repeated tile at a
/// period boundary.
pub fn certify_candidate(tas: &Tas, m: &FreePath, p: &FreePath) -> Option<CandidateTiles> {
    if p.is_empty() || !pump_check(p).ok()? {
        return None;
    }
    let geo = separation_periods(m, p).max(m.len()).max(1);
    if !is_simple(&m.concat(&p.repeat(geo))) {
        return None;
    }
    let reps = geo.max(tas.attachable().len() + 2);
    let w = m.concat(&p.repeat(reps));
    let mut tiles = vec![tas.seed()];
    for d in w.dirs() {
        let prev = *tiles.last().expect("seeded");
        match tas.bonders(prev, *d) {
            [t] => tiles.push(*t),
            _ => return None,
        }
    }
    let mut seen: HashMap<TileId, usize> = HashMap::new();
    for j in 0..=reps {
        let t = tiles[m.len() + j * p.len()];
        if let Some(&i) = seen.get(&t) {
            return Some(CandidateTiles {
                m: m.clone(),
                p: p.clone(),
                tiles,
                reps,
                cycle_start: i,
                cycle_periods: j - i,
            });
        }
        seen.insert(t, j);
    }
    None
}

pub fn candidate_in_alphamax(tas: &Tas, m: &FreePath, p: &FreePath) -> bool {
    certify_candidate(tas, m, p).is_some()
}

/// Points `y` of the window assembly such that some assembly path reaches `x`
/// without visiting `y`, together with `x`.
pub fn non_causal(tas: &Tas, x: Vec2, window: &Window) -> Result<BTreeSet<Vec2>, TasError> {
    let full = grow_full(tas, window).map_err(TasError::NotConfluent)?;
    if !window.contains(x) || full.get(x).is_none() {
        return Err(TasError::PointNotInAssembly(x));
    }
    let cuts = CutOracle::new(tas, &full);
    let out = full
        .tiles
        .keys()
        .copied()
        .filter(|&y| window.contains(y) && (y == x || cuts.reachable_avoiding(x, y)))
        .collect();
    Ok(out)
}
