//! Candidate ordering, the extension steps, grid detection, decorations and
//! the top-level filtration loop.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path_algebra::{displacement, is_simple, rotate, Direction, FreePath, Vec2};
use crate::quipu::{alpha_within, k_multiple, peel, validate, CoverIndex, Quipu, QuipuDocument, QuipuError, Zone};
use crate::semilinear::{intersect_terms, SemiLinearTerm, TermIntersection};
use crate::tas_core::{certify_candidate, grow_max, Assembly, CandidateTiles, NotConfluent, Tas, TileId, Window};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiltrationError {
    #[error("direction order must be a permutation of NESW, got {0:?}")]
    BadOrder(String),
    #[error("tile {tile} does not bond to the vertex tile towards {dir}")]
    GlueMismatch { tile: String, dir: Direction },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("extension budget exhausted")]
    Budget,
    #[error("point {0} stays uncovered")]
    Uncovered(Vec2),
    #[error("quipu disagrees with the window assembly at {0}")]
    Disagreement(Vec2),
    #[error(transparent)]
    Quipu(#[from] QuipuError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateOrder {
    pub dirs: [Direction; 4],
    /// Largest `|m|+|p|`.
    pub cap: usize,
}

impl Default for CandidateOrder {
    fn default() -> Self {
        use Direction::*;
        CandidateOrder { dirs: [S, E, W, N], cap: 12 }
    }
}

impl CandidateOrder {
    pub fn parse(order: &str, cap: usize) -> Result<CandidateOrder, FiltrationError> {
        let bad = || FiltrationError::BadOrder(order.to_string());
        let dirs: Vec<Direction> =
            order.chars().map(Direction::from_letter).collect::<Result<_, _>>().map_err(|_| bad())?;
        let mut seen = [false; 4];
        for d in &dirs {
            seen[d.index()] = true;
        }
        if dirs.len() != 4 || seen.contains(&false) {
            return Err(bad());
        }
        Ok(CandidateOrder { dirs: [dirs[0], dirs[1], dirs[2], dirs[3]], cap })
    }

    pub fn letters(&self) -> String {
        self.dirs.iter().map(|d| d.letter()).collect()
    }
}

fn dfs_words<F>(
    n: usize,
    dirs: &[Direction; 4],
    keep: &mut F,
    word: &mut Vec<Direction>,
    pts: &mut Vec<Vec2>,
    out: &mut Vec<FreePath>,
) where
    F: FnMut(Vec2, Direction, Vec2) -> bool,
{
    if word.len() == n {
        out.push(FreePath(word.clone()));
        return;
    }
    let here = *pts.last().expect("starts at the origin");
    for &d in dirs {
        let next = here + d.vector();
        if pts.contains(&next) || !keep(here, d, next) {
            continue;
        }
        word.push(d);
        pts.push(next);
        dfs_words(n, dirs, keep, word, pts, out);
        word.pop();
        pts.pop();
    }
}

fn dfs_first<F>(
    n: usize,
    dirs: &[Direction; 4],
    found: &mut F,
    word: &mut Vec<Direction>,
    pts: &mut Vec<Vec2>,
) -> Option<FreePath>
where
    F: FnMut(&FreePath) -> bool,
{
    if word.len() == n {
        let w = FreePath(word.clone());
        return found(&w).then_some(w);
    }
    let here = *pts.last().expect("starts at the origin");
    for &d in dirs {
        let next = here + d.vector();
        if pts.contains(&next) {
            continue;
        }
        word.push(d);
        pts.push(next);
        let hit = dfs_first(n, dirs, found, word, pts);
        word.pop();
        pts.pop();
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Position `(|m|, m·p)` of the first candidate of length `n` in the full
/// order that is not certified.
fn first_uncertified(tas: &Tas, n: usize, dirs: &[Direction; 4]) -> Option<(usize, FreePath)> {
    (1..n).find_map(|ml| {
        let mut found =
            |w: &FreePath| split_candidate(w, ml).is_some_and(|(m, p)| certify_candidate(tas, &m, &p).is_none());
        dfs_first(n, dirs, &mut found, &mut Vec::with_capacity(n), &mut vec![Vec2::ZERO]).map(|w| (ml, w))
    })
}

fn word_key(dirs: &[Direction; 4], w: &FreePath) -> Vec<usize> {
    w.dirs().iter().map(|d| dirs.iter().position(|x| x == d).expect("all four")).collect()
}

/// Simple words of length `n` accepted step by step by `keep`, in
/// alphabetical order for `dirs`.
fn words_where<F>(n: usize, dirs: &[Direction; 4], mut keep: F) -> Vec<FreePath>
where
    F: FnMut(Vec2, Direction, Vec2) -> bool,
{
    let mut out = Vec::new();
    dfs_words(n, dirs, &mut keep, &mut Vec::with_capacity(n), &mut vec![Vec2::ZERO], &mut out);
    out
}

fn split_candidate(w: &FreePath, ml: usize) -> Option<(FreePath, FreePath)> {
    let m = w.slice(0, ml);
    let p = w.slice(ml, w.len());
    is_simple(&m.concat(&p.repeat(2))).then_some((m, p))
}

/// All `(m, p)` with `m·p²` simple, by `|m|+|p|`, then `|m|`, then the word `m·p`.
pub fn order_candidates(order: &CandidateOrder) -> impl Iterator<Item = (FreePath, FreePath)> {
    let dirs = order.dirs;
    (2..=order.cap.max(2)).flat_map(move |n| {
        let words = Rc::new(words_where(n, &dirs, |_, _, _| true));
        (1..n).flat_map(move |ml| {
            let words = Rc::clone(&words);
            (0..words.len()).filter_map(move |i| split_candidate(&words[i], ml))
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridWitness {
    pub m: FreePath,
    pub p: FreePath,
    pub q: FreePath,
    pub anchor: String,
    pub verified_in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtensionResult {
    Extended(Quipu),
    GridDetected(GridWitness),
    NoChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    Cycle,
    Decoration,
    Unroll,
    GridCheck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub kind: TraceKind,
    pub candidate: String,
    pub vertices_added: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiltrationResult {
    Halt(Quipu),
    Grid { quipu: Quipu, witness: GridWitness },
    Inconclusive { cap: usize, quipu: Quipu, reason: String },
    NotConfluent(NotConfluent),
}

impl FiltrationResult {
    pub fn label(&self) -> &'static str {
        match self {
            FiltrationResult::Halt(_) => "halt",
            FiltrationResult::Grid { .. } => "grid",
            FiltrationResult::Inconclusive { .. } => "inconclusive",
            FiltrationResult::NotConfluent(_) => "not-confluent",
        }
    }

    pub fn quipu(&self) -> Option<&Quipu> {
        match self {
            FiltrationResult::Halt(q) => Some(q),
            FiltrationResult::Grid { quipu, .. } | FiltrationResult::Inconclusive { quipu, .. } => Some(quipu),
            FiltrationResult::NotConfluent(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiltrationConfig {
    pub window: Window,
    pub order: CandidateOrder,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        let order = CandidateOrder::default();
        FiltrationConfig { window: Window::square(20).with_margin(8.max(order.cap as i64)), order }
    }
}

#[derive(Debug, Clone)]
pub struct FiltrationRun {
    pub result: FiltrationResult,
    pub trace: Vec<TraceEntry>,
    /// Every quipu the run went through, `Q0` first.
    pub history: Vec<Quipu>,
}

struct Note {
    kind: TraceKind,
    added: usize,
    detail: String,
}

/// The window assembly a run is measured against.
pub struct Context<'a> {
    pub tas: &'a Tas,
    pub window: Window,
    pub alpha: Assembly,
    dist: HashMap<Vec2, usize>,
    notes: Vec<Note>,
}

fn letter(cand: &CandidateTiles, i: usize) -> Direction {
    let m = cand.m.len();
    if i < m {
        cand.m.0[i]
    } else {
        cand.p.0[(i - m) % cand.p.len()]
    }
}

/// Point index where the tile sequence turns periodic, and its period.
fn tile_cycle(cand: &CandidateTiles) -> (usize, usize) {
    let lp = cand.p.len();
    (cand.m.len() + cand.cycle_start * lp, cand.cycle_periods * lp)
}

fn path_points(cand: &CandidateTiles, n: usize) -> Vec<Vec2> {
    let mut pts = vec![Vec2::ZERO];
    for i in 0..n {
        let last = *pts.last().expect("non-empty");
        pts.push(last + letter(cand, i).vector());
    }
    pts
}

/// Hangs the tile chain and cycle of `0.m p^ω` that follow index `a_idx` off `xa`.
fn attach_tail(q: &Quipu, xa: usize, cand: &CandidateTiles, a_idx: usize) -> Quipu {
    let (start, l) = tile_cycle(cand);
    let s = (a_idx + 1).max(cand.m.len() + 1).max(start);
    let mut q = q.clone();
    let mut prev = xa;
    for i in a_idx + 1..s {
        let v = q.add_vertex(cand.tile_at(i), None);
        q.add_arc(prev, letter(cand, i - 1), v);
        prev = v;
    }
    let first = q.add_vertex(cand.tile_at(s), None);
    q.add_arc(prev, letter(cand, s - 1), first);
    let mut last = first;
    for i in s + 1..s + l {
        let v = q.add_vertex(cand.tile_at(i), None);
        q.add_arc(last, letter(cand, i - 1), v);
        last = v;
    }
    q.add_arc(last, letter(cand, s + l - 1), first);
    q
}

/// Smallest period, then smallest transient, that explain `flags`.
fn eventual_period(flags: &[bool]) -> Option<(usize, usize)> {
    let n = flags.len();
    for per in 1..=n / 3 {
        for t0 in 0..n {
            if n - t0 < 2 * per + 2 {
                break;
            }
            if (t0..n - per).all(|k| flags[k] == flags[k + per]) {
                return Some((t0, per));
            }
        }
    }
    None
}

/// A bi-infinite tiled periodic path through the origin, anchored at index `k0`.
fn tiled_line(letters: &[Direction], tiles: &[TileId], k0: usize, periods: usize) -> Vec<(Vec2, TileId)> {
    let l = letters.len();
    let mut out = vec![(Vec2::ZERO, tiles[k0])];
    let mut p = Vec2::ZERO;
    for t in 0..periods * l {
        p += letters[(k0 + t) % l].vector();
        out.push((p, tiles[(k0 + t + 1) % l]));
    }
    p = Vec2::ZERO;
    for t in 0..periods * l {
        let k = (k0 + l * (t / l + 1) - t - 1) % l;
        p = p - letters[k].vector();
        out.push((p, tiles[k]));
    }
    out
}

/// Spread of `nu·x` over one period of a cycle's points.
fn spread(letters: &[Direction], nu: Vec2) -> i64 {
    let pts = FreePath(letters.to_vec()).points_from(Vec2::ZERO);
    let vals: Vec<i64> = pts.iter().map(|x| x.dot(nu)).collect();
    vals.iter().max().expect("non-empty") - vals.iter().min().expect("non-empty")
}

/// Whether the two bi-infinite tiled paths crossing at the origin agree on
/// every shared point.
fn crossing_consistent(a: (&[Direction], &[TileId], usize), b: (&[Direction], &[TileId], usize)) -> bool {
    let da = displacement(&FreePath(a.0.to_vec()));
    let db = displacement(&FreePath(b.0.to_vec()));
    let fa = da.dot(db.perp()).unsigned_abs() as i64;
    let fb = db.dot(da.perp()).unsigned_abs() as i64;
    let wa = spread(a.0, db.perp()) + spread(b.0, db.perp());
    let wb = spread(b.0, da.perp()) + spread(a.0, da.perp());
    let ra = (wa / fa + 2) as usize;
    let rb = (wb / fb + 2) as usize;
    let first: HashMap<Vec2, TileId> = tiled_line(a.0, a.1, a.2, ra).into_iter().collect();
    tiled_line(b.0, b.1, b.2, rb).into_iter().all(|(p, t)| first.get(&p).is_none_or(|u| *u == t))
}

/// Checks the five paths `0.m`, `(m).p^ω`, `(m).q^ω`, `(m+p).q` and `(m+q).p`
/// against the assembly inside `window`: every point placed, consecutive
/// tiles bonded, tiles along the infinite ones repeating with the word.
pub fn verify_grid_witness(tas: &Tas, alpha: &Assembly, w: &GridWitness, window: &Window) -> bool {
    let Some(anchor) = tas.lookup(&w.anchor) else { return false };
    if w.p.is_empty() || w.q.is_empty() || displacement(&w.p).colinear(displacement(&w.q)) {
        return false;
    }
    let follow = |start: Vec2, word: &FreePath, steps: Option<usize>| -> Option<Vec2> {
        let mut pts = vec![start];
        let mut tiles = vec![alpha.get(start)?];
        if !window.contains(start) {
            return None;
        }
        let n = steps.unwrap_or(usize::MAX);
        let mut k = 0;
        while k < n {
            let d = word.0[k % word.len()];
            let next = *pts.last().expect("non-empty") + d.vector();
            if !window.contains(next) {
                break;
            }
            let t = alpha.get(next)?;
            if !tas.bonds(*tiles.last().expect("non-empty"), d, t) {
                return None;
            }
            pts.push(next);
            tiles.push(t);
            k += 1;
        }
        if steps.is_some_and(|s| k < s) || k < word.len() {
            return None;
        }
        if steps.is_none() && (word.len()..tiles.len()).any(|i| tiles[i] != tiles[i - word.len()]) {
            return None;
        }
        Some(*pts.last().expect("non-empty"))
    };
    let m_end = if w.m.is_empty() {
        Vec2::ZERO
    } else {
        match follow(Vec2::ZERO, &w.m, Some(w.m.len())) {
            Some(x) => x,
            None => return false,
        }
    };
    let mp = m_end + displacement(&w.p);
    let mq = m_end + displacement(&w.q);
    alpha.get(m_end) == Some(anchor)
        && follow(m_end, &w.p, None).is_some()
        && follow(m_end, &w.q, None).is_some()
        && follow(mp, &w.q, Some(w.q.len())).is_some()
        && follow(mq, &w.p, Some(w.p.len())).is_some()
}

/// The window used to validate grid witnesses.
pub fn witness_window() -> Window {
    Window::new(-15, 14, -15, 14)
}

impl<'a> Context<'a> {
    pub fn new(tas: &'a Tas, window: Window) -> Result<Context<'a>, NotConfluent> {
        let alpha = grow_max(tas, &window)?;
        let dist = alpha.distances(tas);
        Ok(Context { tas, window, alpha, dist, notes: Vec::new() })
    }

    fn note(&mut self, kind: TraceKind, added: usize, detail: String) {
        self.notes.push(Note { kind, added, detail });
    }

    fn peel(&mut self, q: &Quipu, cycle: usize, v: usize) -> Result<(Quipu, usize), FiltrationError> {
        let u = peel(q, cycle, v)?;
        let copy = u.copies[&v];
        self.note(TraceKind::Unroll, u.quipu.len() - q.len(), format!("cycle {cycle} peeled to copy vertex {v}"));
        Ok((u.quipu, copy))
    }

    /// Validity plus placement-wise agreement with the window assembly.
    pub fn agrees(&self, q: &Quipu) -> Result<(), FiltrationError> {
        validate(q, self.tas).map_err(|v| FiltrationError::Quipu(QuipuError::InvalidQuipu(v)))?;
        let mine = alpha_within(q, &self.window)?;
        for (p, t) in &mine.tiles {
            if self.alpha.get(*p) != Some(*t) {
                return Err(FiltrationError::Disagreement(*p));
            }
        }
        Ok(())
    }

    /// The quipu places exactly the window assembly, and every placed point on
    /// the window boundary comes from a periodic term.
    pub fn halted(&self, q: &Quipu) -> Result<bool, FiltrationError> {
        if alpha_within(q, &self.window)? != self.alpha {
            return Ok(false);
        }
        let s = q.checked_structure()?;
        let idx = CoverIndex::new(&s);
        for p in self.alpha.tiles.keys() {
            if self.window.on_boundary(*p) {
                match idx.covering(*p) {
                    Some(v) if s.zone(v) != Zone::Z0 => {}
                    _ => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// Makes `cover(x)+d` part of the quipu cover for every `x` in `xs`, with
    /// tile `t` on the new points.
    pub fn extend_direction(
        &mut self,
        q: &Quipu,
        xs: &[usize],
        d: Direction,
        t: TileId,
    ) -> Result<ExtensionResult, FiltrationError> {
        let mut q = q.clone();
        let mut work: VecDeque<usize> = xs.iter().copied().collect();
        let mut changed = false;
        let mut budget = 256;
        while let Some(x) = work.pop_front() {
            budget -= 1;
            if budget == 0 {
                return Err(FiltrationError::Budget);
            }
            if !self.tas.bonds(q.tile(x), d, t) {
                return Err(FiltrationError::GlueMismatch { tile: self.tas.name(t).to_string(), dir: d });
            }
            let s = q.checked_structure()?;
            let idx = CoverIndex::new(&s);
            let target = s.cover(x).translate(d.vector());
            let overlaps = idx.overlaps(&target);
            if overlaps.is_empty() {
                let y = q.add_vertex(t, None);
                q.add_arc(x, d, y);
                changed = true;
                continue;
            }
            if target.enumerate(&self.window).iter().all(|p| idx.covers(*p)) {
                continue;
            }
            match s.zone(x) {
                Zone::Z0 => continue,
                Zone::Z1 => {
                    let cycle = s.cycles[s.governing[x][0]].id;
                    let b = s.cycles[s.governing[x][0]].displacement();
                    let finite = overlaps.iter().all(|(_, r)| !r.is_infinite());
                    if finite {
                        let kmax = overlaps
                            .iter()
                            .flat_map(|(_, r)| match r {
                                TermIntersection::Finite(v) => v.clone(),
                                _ => Vec::new(),
                            })
                            .filter_map(|p| target.params(p).map(|(k, _)| k))
                            .max()
                            .unwrap_or(0);
                        for _ in 0..=kmax {
                            let (nq, copy) = self.peel(&q, cycle, x)?;
                            q = nq;
                            work.push_back(copy);
                        }
                        work.push_back(x);
                    } else {
                        let mut flags = Vec::new();
                        let mut p = target.base;
                        while self.window.contains(p) && flags.len() < 512 {
                            flags.push(idx.covers(p));
                            p += b;
                        }
                        let (t0, per) = eventual_period(&flags).ok_or(FiltrationError::Budget)?;
                        for _ in 0..t0 {
                            let (nq, copy) = self.peel(&q, cycle, x)?;
                            q = nq;
                            work.push_back(copy);
                        }
                        if per > 1 {
                            let before = q.len();
                            q = k_multiple(&q, cycle, per)?;
                            self.note(
                                TraceKind::Unroll,
                                q.len() - before,
                                format!("cycle {cycle} repeated {per} times"),
                            );
                            work.extend((before..q.len()).filter(|v| q.vertices()[*v].copy_of == Some(x)));
                        }
                        work.push_back(x);
                    }
                }
                Zone::Z2 => {
                    let backbone = s.cycles[s.governing[x][0]].id;
                    let tooth = s.cycles[s.governing[x][1]].id;
                    let [b, c] = [target.gens[0], target.gens[1]];
                    let at = |i: i64, j: i64| {
                        let p = target.base + b * i + c * j;
                        self.window.contains(p).then(|| idx.covers(p))
                    };
                    let n = 24;
                    let row_differs = (0..n).any(|i| matches!((at(i, 0), at(i, 1)), (Some(u), Some(v)) if u != v));
                    let col_differs = (0..n).any(|j| matches!((at(0, j), at(1, j)), (Some(u), Some(v)) if u != v));
                    let cycle = if row_differs {
                        tooth
                    } else if col_differs {
                        backbone
                    } else {
                        return Err(FiltrationError::Budget);
                    };
                    let (nq, copy) = self.peel(&q, cycle, x)?;
                    q = nq;
                    work.push_back(copy);
                    work.push_back(x);
                }
            }
        }
        Ok(if changed { ExtensionResult::Extended(q) } else { ExtensionResult::NoChange })
    }

    /// Largest path index of `0.m p^ω` inside the quipu cover, or `None` when
    /// the path meets the cover infinitely often.
    pub fn last_intersection(&self, idx: &CoverIndex, cand: &CandidateTiles) -> Option<usize> {
        let m = cand.m.len();
        let lp = cand.p.len();
        let pts = path_points(cand, m + lp);
        let mut last = (0..=m).filter(|i| idx.covers(pts[*i])).max().unwrap_or(0);
        let b = displacement(&cand.p);
        for r in 0..lp {
            let line = SemiLinearTerm::line(pts[m + r], b);
            for term in &idx.terms {
                let hits = match intersect_terms(&line, term) {
                    TermIntersection::Empty => Vec::new(),
                    TermIntersection::Finite(v) => v,
                    TermIntersection::Terms(v) if v.iter().all(|t| t.gens.is_empty()) => {
                        v.iter().map(|t| t.base).collect()
                    }
                    _ => return None,
                };
                for h in hits {
                    let (k, _) = line.params(h)?;
                    last = last.max(m + k as usize * lp + r);
                }
            }
        }
        Some(last)
    }

    /// Lays `0.m p^ω` and a quipu cycle as bi-infinite tiled paths crossing at
    /// a common tile and reports a grid when they agree everywhere they meet.
    pub fn grid_check(&self, q: &Quipu, cand: &CandidateTiles) -> Option<GridWitness> {
        let s = q.structure();
        let (start, l) = tile_cycle(cand);
        let p_letters: Vec<Direction> = (start..start + l).map(|i| letter(cand, i)).collect();
        let p_tiles: Vec<TileId> = (start..start + l).map(|i| cand.tile_at(i)).collect();
        let dp = displacement(&cand.p);
        let mut cycles: Vec<_> = s.cycles.iter().collect();
        cycles.sort_by_key(|c| c.id);
        for c in cycles {
            if c.displacement().colinear(dp) {
                continue;
            }
            let c_tiles: Vec<TileId> = c.vertices.iter().map(|v| q.tile(*v)).collect();
            for i in 0..c_tiles.len() {
                for j in 0..l {
                    if c_tiles[i] != p_tiles[j]
                        || !crossing_consistent((&c.letters, &c_tiles, i), (&p_letters, &p_tiles, j))
                    {
                        continue;
                    }
                    let pw = rotate(&FreePath(p_letters.clone()), j);
                    let qw = rotate(&c.word(), i);
                    return Some(self.grid_witness(pw, qw, c_tiles[i]));
                }
            }
        }
        None
    }

    fn grid_witness(&self, p: FreePath, q: FreePath, anchor: TileId) -> GridWitness {
        let win = witness_window();
        let name = self.tas.name(anchor).to_string();
        let mut parent: BTreeMap<Vec2, (Vec2, Direction)> = BTreeMap::new();
        let mut queue = VecDeque::from([Vec2::ZERO]);
        let mut seen = std::collections::BTreeSet::from([Vec2::ZERO]);
        while let Some(x) = queue.pop_front() {
            if self.alpha.get(x) == Some(anchor) {
                let mut word = Vec::new();
                let mut y = x;
                while let Some(&(py, d)) = parent.get(&y) {
                    word.push(d);
                    y = py;
                }
                word.reverse();
                let w = GridWitness {
                    m: FreePath(word),
                    p: p.clone(),
                    q: q.clone(),
                    anchor: name.clone(),
                    verified_in_window: true,
                };
                if verify_grid_witness(self.tas, &self.alpha, &w, &win) {
                    return w;
                }
            }
            for (d, y) in self.alpha.bound_neighbors(self.tas, x) {
                if win.contains(y) && seen.insert(y) {
                    parent.insert(y, (x, d));
                    queue.push_back(y);
                }
            }
        }
        GridWitness { m: FreePath::empty(), p, q, anchor: name, verified_in_window: false }
    }

    fn periodic_step(
        &mut self,
        q: &Quipu,
        cand: &CandidateTiles,
        a_idx: usize,
        a: Vec2,
    ) -> Result<Quipu, FiltrationError> {
        let s = q.checked_structure()?;
        let idx = CoverIndex::new(&s);
        let xa = idx.covering(a).ok_or_else(|| FiltrationError::PreconditionViolated(format!("{a} not covered")))?;
        match s.zone(xa) {
            Zone::Z0 => {
                let out = attach_tail(q, xa, cand, a_idx);
                self.agrees(&out)?;
                Ok(out)
            }
            Zone::Z1 => self.periodic_z1(q, xa, cand, a_idx, a),
            Zone::Z2 => {
                let tooth = s.cycles[s.governing[xa][1]].id;
                let (_, j) = s.cover(xa).params(a).expect("covering term");
                let mut q = q.clone();
                for _ in 0..j {
                    q = self.peel(&q, tooth, xa)?.0;
                }
                let (q, copy) = self.peel(&q, tooth, xa)?;
                self.periodic_z1(&q, copy, cand, a_idx, a)
            }
        }
    }

    fn periodic_z1(
        &mut self,
        q: &Quipu,
        xa: usize,
        cand: &CandidateTiles,
        a_idx: usize,
        a: Vec2,
    ) -> Result<Quipu, FiltrationError> {
        let s = q.checked_structure()?;
        let cycle = s.cycles[s.governing[xa][0]].id;
        let mut q = q.clone();
        let mut guard = 0;
        while q.checked_structure()?.base[xa] != a {
            guard += 1;
            if guard > 4 * (self.window.width() + self.window.height()) {
                return Err(FiltrationError::Budget);
            }
            q = self.peel(&q, cycle, xa)?.0;
        }
        let tooth = attach_tail(&q, xa, cand, a_idx);
        if self.agrees(&tooth).is_ok() {
            return Ok(tooth);
        }
        let (q, copy) = self.peel(&q, cycle, xa)?;
        let out = attach_tail(&q, copy, cand, a_idx);
        self.agrees(&out)?;
        Ok(out)
    }

    /// Adds `0.m p^ω` to the quipu: the periodic part from the last point the
    /// path shares with the cover, then the transient part up to that point.
    pub fn extend_buildup(
        &mut self,
        q: &Quipu,
        m: &FreePath,
        p: &FreePath,
    ) -> Result<ExtensionResult, FiltrationError> {
        let cand = certify_candidate(self.tas, m, p)
            .ok_or_else(|| FiltrationError::PreconditionViolated(format!("{m}|{p} is not certified")))?;
        let s = q.checked_structure()?;
        let idx = CoverIndex::new(&s);
        let a_idx = self.last_intersection(&idx, &cand).ok_or_else(|| {
            FiltrationError::PreconditionViolated(format!("{m}|{p} meets the cover infinitely often"))
        })?;
        let pts = path_points(&cand, a_idx);
        let mut cur = self.periodic_step(q, &cand, a_idx, pts[a_idx])?;
        for i in 0..a_idx {
            let s = cur.checked_structure()?;
            let idx = CoverIndex::new(&s);
            if idx.covers(pts[i + 1]) {
                continue;
            }
            let x = idx.covering(pts[i]).ok_or(FiltrationError::Uncovered(pts[i]))?;
            match self.extend_direction(&cur, &[x], letter(&cand, i), cand.tile_at(i + 1))? {
                ExtensionResult::Extended(nq) => cur = nq,
                _ => return Err(FiltrationError::Uncovered(pts[i + 1])),
            }
        }
        self.agrees(&cur)?;
        if cur.cycle_count() <= q.cycle_count() {
            return Err(FiltrationError::PreconditionViolated(format!("{m}|{p} added no cycle")));
        }
        Ok(ExtensionResult::Extended(cur))
    }

    /// One missing point at a time, nearest to the seed first and, among equal
    /// distances, hanging off the deepest zone.
    pub fn add_decorations(
        &mut self,
        q: &Quipu,
        bound: Option<usize>,
    ) -> Result<(Quipu, Vec<(Vec2, usize)>), FiltrationError> {
        let mut q = q.clone();
        let mut added = Vec::new();
        for _ in 0..self.alpha.len() + 1 {
            let s = q.checked_structure()?;
            let idx = CoverIndex::new(&s);
            let mine = alpha_within(&q, &self.window)?;
            let mut best: Option<((usize, u8, Vec2), usize, Direction)> = None;
            for (&p, &t) in &self.alpha.tiles {
                if mine.get(p).is_some() {
                    continue;
                }
                let Some(&dp) = self.dist.get(&p) else { continue };
                if dp == 0 || bound.is_some_and(|b| dp >= b) {
                    continue;
                }
                for d in Direction::ALL {
                    let pre = p - d.vector();
                    if self.dist.get(&pre) != Some(&(dp - 1)) || !self.tas.bonds(self.alpha.tiles[&pre], d, t) {
                        continue;
                    }
                    if let Some(x) = idx.covering(pre) {
                        let rank = match s.zone(x) {
                            Zone::Z2 => 0,
                            Zone::Z1 => 1,
                            Zone::Z0 => 2,
                        };
                        let key = (dp, rank, p);
                        if best.as_ref().is_none_or(|b| key < b.0) {
                            best = Some((key, x, d));
                        }
                        break;
                    }
                }
            }
            let Some(((_, _, p), x, d)) = best else { return Ok((q, added)) };
            let before = q.len();
            match self.extend_direction(&q, &[x], d, self.alpha.tiles[&p])? {
                ExtensionResult::Extended(nq) => q = nq,
                _ => return Err(FiltrationError::Uncovered(p)),
            }
            self.agrees(&q)?;
            added.push((p, q.len() - before));
        }
        Err(FiltrationError::Budget)
    }
}

struct Runner<'a> {
    ctx: Context<'a>,
    trace: Vec<TraceEntry>,
    history: Vec<Quipu>,
}

impl Runner<'_> {
    fn push(&mut self, kind: TraceKind, candidate: &str, vertices_added: usize, detail: Option<String>) {
        let step = self.trace.len() + 1;
        self.trace.push(TraceEntry { step, kind, candidate: candidate.to_string(), vertices_added, detail });
    }

    fn flush_notes(&mut self, candidate: &str) {
        for n in std::mem::take(&mut self.ctx.notes) {
            self.push(n.kind, candidate, n.added, Some(n.detail));
        }
    }

    fn decorate(&mut self, q: &Quipu, bound: Option<usize>, candidate: &str) -> Result<Quipu, FiltrationError> {
        let (nq, added) = self.ctx.add_decorations(q, bound)?;
        self.flush_notes(candidate);
        for (p, n) in &added {
            self.push(TraceKind::Decoration, candidate, *n, Some(format!("covers {p}")));
        }
        if !added.is_empty() {
            self.history.push(nq.clone());
        }
        Ok(nq)
    }

    fn run(&mut self, cap: usize, dirs: &[Direction; 4]) -> Result<FiltrationResult, (Quipu, FiltrationError)> {
        let mut q = Quipu::root_only(self.ctx.tas);
        self.history.push(q.clone());
        let halted = |ctx: &Context, q: &Quipu| ctx.halted(q).unwrap_or(false);
        if halted(&self.ctx, &q) {
            return Ok(FiltrationResult::Halt(q));
        }
        let mut fired: Option<usize> = None;
        for n in 2..=cap.max(2) {
            let trigger = first_uncertified(self.ctx.tas, n, dirs);
            let (alpha, tas) = (&self.ctx.alpha, self.ctx.tas);
            let words = words_where(n, dirs, |here, d, next| match (alpha.get(here), alpha.get(next)) {
                (Some(a), Some(b)) => tas.bonds(a, d, b),
                _ => false,
            });
            let mut pending = trigger.clone();
            for ml in 1..n {
                for w in &words {
                    if let Some((tm, tw)) = &pending {
                        if (ml, word_key(dirs, w)) >= (*tm, word_key(dirs, tw)) {
                            pending = None;
                            fired = Some(n);
                            q = self.decorate(&q, Some(n), &format!("decorations<{n}")).map_err(|e| (q.clone(), e))?;
                            if halted(&self.ctx, &q) {
                                return Ok(FiltrationResult::Halt(q));
                            }
                        }
                    }
                    let Some((m, p)) = split_candidate(w, ml) else { continue };
                    let Some(cand) = certify_candidate(self.ctx.tas, &m, &p) else { continue };
                    let label = format!("{m}|{p}");
                    if let Some(witness) = self.ctx.grid_check(&q, &cand) {
                        let detail = format!("m={} p={} q={}", witness.m, witness.p, witness.q);
                        self.push(TraceKind::GridCheck, &label, 0, Some(detail));
                        return Ok(FiltrationResult::Grid { quipu: q, witness });
                    }
                    let s = q.checked_structure().map_err(|e| (q.clone(), e.into()))?;
                    if self.ctx.last_intersection(&CoverIndex::new(&s), &cand).is_none() {
                        continue;
                    }
                    let before = q.len();
                    match self.ctx.extend_buildup(&q, &m, &p) {
                        Ok(ExtensionResult::Extended(nq)) => {
                            self.flush_notes(&label);
                            self.push(TraceKind::Cycle, &label, nq.len() - before, None);
                            q = nq;
                            self.history.push(q.clone());
                        }
                        Ok(ExtensionResult::GridDetected(witness)) => {
                            return Ok(FiltrationResult::Grid { quipu: q, witness });
                        }
                        Ok(ExtensionResult::NoChange) => continue,
                        Err(e) => return Err((q, e)),
                    }
                    if let Some(b) = fired {
                        q = self.decorate(&q, Some(b), &label).map_err(|e| (q.clone(), e))?;
                    }
                    if halted(&self.ctx, &q) {
                        return Ok(FiltrationResult::Halt(q));
                    }
                }
            }
            if pending.is_some() {
                fired = Some(n);
                q = self.decorate(&q, Some(n), &format!("decorations<{n}")).map_err(|e| (q.clone(), e))?;
                if halted(&self.ctx, &q) {
                    return Ok(FiltrationResult::Halt(q));
                }
            }
        }
        let bound = cap.max(2) + 1;
        q = self.decorate(&q, Some(bound), &format!("decorations<{bound}")).map_err(|e| (q.clone(), e))?;
        if halted(&self.ctx, &q) {
            return Ok(FiltrationResult::Halt(q));
        }
        Ok(FiltrationResult::Inconclusive { cap, quipu: q, reason: "candidate cap reached".into() })
    }
}

/// Builds the quipu of `tas` candidate by candidate until it halts, detects a
/// grid, or runs out of candidates.
pub fn run_filtration(tas: &Tas, config: &FiltrationConfig) -> FiltrationRun {
    let ctx = match Context::new(tas, config.window) {
        Ok(c) => c,
        Err(w) => {
            return FiltrationRun { result: FiltrationResult::NotConfluent(w), trace: Vec::new(), history: Vec::new() }
        }
    };
    let mut runner = Runner { ctx, trace: Vec::new(), history: Vec::new() };
    let result = match runner.run(config.order.cap, &config.order.dirs) {
        Ok(r) => r,
        Err((quipu, e)) => FiltrationResult::Inconclusive { cap: config.order.cap, quipu, reason: e.to_string() },
    };
    FiltrationRun { result, trace: runner.trace, history: runner.history }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub soundness: String,
    pub window: Window,
    pub cap: usize,
    pub order: String,
}

/// Quipu document plus the outcome and the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultDocument {
    #[serde(flatten)]
    pub quipu: Option<QuipuDocument>,
    pub result: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_witness: Option<GridWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<NotConfluent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub trace: Vec<TraceEntry>,
    pub metadata: Metadata,
}

impl ResultDocument {
    pub fn new(run: &FiltrationRun, tas: &Tas, config: &FiltrationConfig) -> ResultDocument {
        ResultDocument {
            quipu: run.result.quipu().map(|q| q.to_document(tas)),
            result: run.result.label().to_string(),
            grid_witness: match &run.result {
                FiltrationResult::Grid { witness, .. } => Some(witness.clone()),
                _ => None,
            },
            witness: match &run.result {
                FiltrationResult::NotConfluent(w) => Some(w.clone()),
                _ => None,
            },
            reason: match &run.result {
                FiltrationResult::Inconclusive { reason, .. } => Some(reason.clone()),
                _ => None,
            },
            trace: run.trace.clone(),
            metadata: Metadata {
                soundness: "window-sound".into(),
                window: config.window,
                cap: config.order.cap,
                order: config.order.letters(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_algebra::word;
    use crate::testdata::{BAD1, EX1, GRID1};
    use Direction::*;

    fn cycles(run: &FiltrationRun) -> Vec<String> {
        run.trace.iter().filter(|e| e.kind == TraceKind::Cycle).map(|e| e.candidate.clone()).collect()
    }

    #[test]
    fn first_candidates() {
        let first: Vec<String> =
            order_candidates(&CandidateOrder::default()).take(6).map(|(m, p)| format!("{m}|{p}")).collect();
        assert_eq!(first, ["S|S", "S|E", "S|W", "E|S", "E|E", "E|N"]);
        let order = CandidateOrder { cap: 6, ..CandidateOrder::default() };
        assert!(order_candidates(&order).all(|(m, p)| !(m == word("S") && p == word("N"))));
        let a: Vec<_> = order_candidates(&order).collect();
        let b: Vec<_> = order_candidates(&order).collect();
        assert_eq!(a, b);
        let parsed = CandidateOrder::parse("NESW", 4).unwrap();
        assert_eq!(parsed.dirs, [N, E, S, W]);
        assert!(CandidateOrder::parse("NESN", 4).is_err());
    }

    #[test]
    fn eventual_periods() {
        assert_eq!(eventual_period(&[true, false, false, false, false, false, false, false]), Some((1, 1)));
        let alt: Vec<bool> = (0..12).map(|k| k % 2 == 0).collect();
        assert_eq!(eventual_period(&alt), Some((0, 2)));
    }

    #[test]
    fn ex1_halts_with_seven_cycles() {
        let tas = Tas::from_json(EX1).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        assert_eq!(run.result.label(), "halt", "{:?}", run.result);
        assert_eq!(cycles(&run), ["S|S", "S|E", "S|W", "SE|S", "SW|S", "SEE|S", "SWW|S"]);
        let q = run.result.quipu().unwrap();
        let w = Window::new(-20, 20, -20, 1);
        assert_eq!(alpha_within(q, &w).unwrap(), grow_max(&tas, &w).unwrap());
    }

    #[test]
    fn ex1_second_quipu_hangs_the_row_cycle_off_a() {
        let tas = Tas::from_json(EX1).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        let q2 = &run.history[2];
        let names: Vec<&str> = q2.vertices().iter().map(|v| tas.name(v.tile)).collect();
        assert_eq!(names, ["Σ", "A", "C", "B", "A"]);
        assert_eq!(q2.successor(1, E), Some(3));
        assert_eq!(q2.successor(3, E), Some(4));
        assert_eq!(q2.successor(4, E), Some(3));
    }

    #[test]
    fn grid1_is_a_grid() {
        let tas = Tas::from_json(GRID1).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        let FiltrationResult::Grid { witness, quipu } = &run.result else { panic!("{:?}", run.result) };
        assert_eq!(cycles(&run), ["S|S"]);
        assert_eq!(
            (witness.m.to_string(), witness.p.to_string(), witness.q.to_string()),
            (String::new(), "E".into(), "S".into())
        );
        assert!(witness.verified_in_window);
        assert_eq!(quipu.len(), 3);
        let alpha = grow_max(&tas, &witness_window()).unwrap();
        assert!(verify_grid_witness(&tas, &alpha, witness, &witness_window()));
    }

    #[test]
    fn ex1_crossings_disagree() {
        let tas = Tas::from_json(EX1).unwrap();
        let mut ctx = Context::new(&tas, Window::square(12)).unwrap();
        let q0 = Quipu::root_only(&tas);
        let ExtensionResult::Extended(q1) = ctx.extend_buildup(&q0, &word("S"), &word("S")).unwrap() else { panic!() };
        let cand = certify_candidate(&tas, &word("S"), &word("E")).unwrap();
        assert_eq!(ctx.grid_check(&q1, &cand), None);
        let colinear = certify_candidate(&tas, &word("S"), &word("SS")).unwrap();
        assert_eq!(ctx.grid_check(&q1, &colinear), None);
    }

    #[test]
    fn bad1_is_not_confluent() {
        let tas = Tas::from_json(BAD1).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        let FiltrationResult::NotConfluent(w) = &run.result else { panic!("{:?}", run.result) };
        assert_eq!(w.point, Vec2::new(0, 1));
        assert_eq!(w.tiles, ["B".to_string(), "D".to_string()]);
    }

    #[test]
    fn extend_direction_in_z0() {
        let tas = Tas::from_json(EX1).unwrap();
        let mut ctx = Context::new(&tas, Window::square(8)).unwrap();
        let mut q = Quipu::root_only(&tas);
        let a = q.add_vertex(tas.lookup("A").unwrap(), None);
        q.add_arc(0, S, a);
        let c = tas.lookup("C").unwrap();
        let ExtensionResult::Extended(q2) = ctx.extend_direction(&q, &[a], S, c).unwrap() else { panic!() };
        assert_eq!(q2.successor(a, S).map(|v| q2.tile(v)), Some(c));
        assert_eq!(ctx.extend_direction(&q2, &[a], S, c).unwrap(), ExtensionResult::NoChange);
        assert!(matches!(ctx.extend_direction(&q, &[a], E, c), Err(FiltrationError::GlueMismatch { .. })));
    }

    #[test]
    fn stub_off_a_backbone_is_decorated_in_z1() {
        let doc = r#"{
            "tiles": [
                {"name": "R", "east": "r", "west": "r", "south": "x"},
                {"name": "T", "north": "x"}
            ],
            "seed": {"name": "O", "east": "r"},
            "seed_in_tileset": false
        }"#;
        let tas = Tas::from_json(doc).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        assert_eq!(run.result.label(), "halt", "{:?}", run.result);
        let q = run.result.quipu().unwrap();
        let s = q.structure();
        let t = tas.lookup("T").unwrap();
        assert!((0..q.len()).any(|v| q.tile(v) == t && s.zone(v) == Zone::Z1));
        assert!(run.trace.iter().any(|e| e.kind == TraceKind::Decoration));
    }

    #[test]
    fn decoration_bound_one_adds_nothing() {
        let tas = Tas::from_json(EX1).unwrap();
        let mut ctx = Context::new(&tas, Window::square(8)).unwrap();
        let (q, added) = ctx.add_decorations(&Quipu::root_only(&tas), Some(1)).unwrap();
        assert!(added.is_empty());
        assert_eq!(q.len(), 1);
        let (_, added) = ctx.add_decorations(&Quipu::root_only(&tas), Some(2)).unwrap();
        assert_eq!(added.len(), 1);
    }

    #[test]
    fn lonely_seed_halts_at_once() {
        let doc = r#"{"tiles":[{"name":"X","north":"a"}],"seed":{"name":"O","east":"z"},"seed_in_tileset":false}"#;
        let tas = Tas::from_json(doc).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        assert_eq!(run.result, FiltrationResult::Halt(Quipu::root_only(&tas)));
    }

    #[test]
    fn result_documents_round_trip() {
        let tas = Tas::from_json(EX1).unwrap();
        let cfg = FiltrationConfig::default();
        let run = run_filtration(&tas, &cfg);
        let doc = ResultDocument::new(&run, &tas, &cfg);
        let text = serde_json::to_string(&doc).unwrap();
        let back: ResultDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert!(text.contains("\"kind\":\"cycle\""));
    }
}
