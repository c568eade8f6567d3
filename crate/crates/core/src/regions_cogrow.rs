//! Left and right regions of bi-infinite paths, co-growth of two paths, and
//! paths that leave a horizontal wall and come back to it.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path_algebra::{up, BiInfinitePath, Direction, FreePath, GroundedPath, UltimatelyPeriodic, Vec2};
use crate::tas_core::Window;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("window too small to separate the two sides of the path")]
    WindowTooSmall,
    #[error("co-growth blocked at step {0}")]
    Blocked(usize),
    #[error("wall valuations differ")]
    ValuationMismatch,
    #[error("path is not off-the-wall at this height")]
    NotOffTheWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    On,
}

/// Side of every window point with respect to a path that crosses the window.
#[derive(Debug, Clone)]
pub struct RegionMap {
    window: Window,
    sides: HashMap<Vec2, Side>,
}

impl RegionMap {
    /// `pts` lists the path in order; it must enter and leave the window.
    pub fn new(pts: &[Vec2], window: &Window) -> Result<RegionMap, RegionError> {
        let on: HashSet<Vec2> = pts.iter().copied().filter(|p| window.contains(*p)).collect();
        let mut sides: HashMap<Vec2, Side> = on.iter().map(|p| (*p, Side::On)).collect();
        let mut seeds: Vec<(Vec2, Side)> = Vec::new();
        for w in pts.windows(2) {
            let d = Direction::from_vector(w[1] - w[0]).expect("unit steps");
            for p in [w[0], w[1]] {
                seeds.push((p + d.left().vector(), Side::Left));
                seeds.push((p + d.right().vector(), Side::Right));
            }
        }
        let mut queue = VecDeque::new();
        for (p, side) in seeds {
            if !window.contains(p) || on.contains(&p) {
                continue;
            }
            match sides.get(&p) {
                Some(s) if *s != side => return Err(RegionError::WindowTooSmall),
                Some(_) => {}
                None => {
                    sides.insert(p, side);
                    queue.push_back(p);
                }
            }
        }
        while let Some(p) = queue.pop_front() {
            let side = sides[&p];
            for d in Direction::ALL {
                let q = p + d.vector();
                if !window.contains(q) {
                    continue;
                }
                match sides.get(&q) {
                    Some(Side::On) => {}
                    Some(s) if *s != side => return Err(RegionError::WindowTooSmall),
                    Some(_) => {}
                    None => {
                        sides.insert(q, side);
                        queue.push_back(q);
                    }
                }
            }
        }
        Ok(RegionMap { window: *window, sides })
    }

    pub fn for_path(bp: &BiInfinitePath, window: &Window) -> Result<RegionMap, RegionError> {
        let r =
            window.corners().iter().map(|c| (*c - bp.anchor).x.abs().max((*c - bp.anchor).y.abs())).max().unwrap_or(0)
                + 1;
        RegionMap::new(&bp.materialize(r), window)
    }

    pub fn side(&self, p: Vec2) -> Result<Side, RegionError> {
        if !self.window.contains(p) {
            return Err(RegionError::WindowTooSmall);
        }
        self.sides.get(&p).copied().ok_or(RegionError::WindowTooSmall)
    }

    /// Points on the given side or on the path.
    pub fn closed(&self, side: Side) -> impl Iterator<Item = Vec2> + '_ {
        self.sides.iter().filter(move |(_, s)| **s == side || **s == Side::On).map(|(p, _)| *p)
    }
}

pub fn side_of(bp: &BiInfinitePath, point: Vec2, window: &Window) -> Result<Side, RegionError> {
    RegionMap::for_path(bp, window)?.side(point)
}

/// Result of a co-growth run; `blocked` is the step at which no edge was left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoGrowth {
    pub word: FreePath,
    pub blocked: Option<usize>,
}

fn last_letter(b: &UltimatelyPeriodic) -> Direction {
    *b.transient.0.last().or(b.period.0.last()).expect("non-empty period")
}

/// Position of `d` when sweeping the cyclic order from the reverse of `heading`.
fn turn_rank(heading: Direction, d: Direction) -> usize {
    let start = heading.opposite().cyclic_index();
    (d.cyclic_index() + 4 - start) % 4
}

/// Co-growth inside an explicit window around the origin.
pub fn cogrow_in(
    b1: &UltimatelyPeriodic,
    f1: &UltimatelyPeriodic,
    b2: &UltimatelyPeriodic,
    f2: &UltimatelyPeriodic,
    side: Side,
    max_steps: usize,
    window: &Window,
) -> Result<CoGrowth, RegionError> {
    let p1 = BiInfinitePath::new(b1.clone(), Vec2::ZERO, f1.clone());
    let p2 = BiInfinitePath::new(b2.clone(), Vec2::ZERO, f2.clone());
    let r1 = RegionMap::for_path(&p1, window)?;
    let r2 = RegionMap::for_path(&p2, window)?;
    let reach = window.corners().iter().map(|c| c.x.abs().max(c.y.abs())).max().unwrap_or(0) + 1;
    let index = |f: &UltimatelyPeriodic| -> HashMap<Vec2, usize> {
        let pts = f.prefix(f.escape_length(reach)).points_from(Vec2::ZERO);
        pts.into_iter().enumerate().map(|(i, p)| (p, i)).collect()
    };
    let (i1, i2) = (index(f1), index(f2));
    let fits =
        |p: Vec2| -> bool { [&r1, &r2].iter().all(|r| matches!(r.side(p), Ok(s) if s == side || s == Side::On)) };

    let mut heading = last_letter(b1);
    let mut cur = Vec2::ZERO;
    let mut seen = HashSet::from([cur]);
    let mut out = Vec::new();
    for step in 0..max_steps {
        let mut best: Option<(usize, Direction)> = None;
        for (idx, f) in [(&i1, f1), (&i2, f2)] {
            let Some(&k) = idx.get(&cur) else { continue };
            let d = f.letter(k);
            let next = cur + d.vector();
            if seen.contains(&next) || !fits(next) {
                continue;
            }
            let rank = turn_rank(heading, d);
            let better = match (best, side) {
                (None, _) => true,
                (Some((r, _)), Side::Left) => rank < r,
                (Some((r, _)), _) => rank > r,
            };
            if better {
                best = Some((rank, d));
            }
        }
        let Some((_, d)) = best else {
            return Ok(CoGrowth { word: FreePath(out), blocked: Some(step) });
        };
        cur += d.vector();
        seen.insert(cur);
        out.push(d);
        heading = d;
    }
    Ok(CoGrowth { word: FreePath(out), blocked: None })
}

/// First `max_steps` letters of the co-growth of `b1.0.f1` and `b2.0.f2`.
pub fn cogrow(
    b1: &UltimatelyPeriodic,
    f1: &UltimatelyPeriodic,
    b2: &UltimatelyPeriodic,
    f2: &UltimatelyPeriodic,
    side: Side,
    max_steps: usize,
) -> Result<FreePath, RegionError> {
    let r = max_steps as i64 + 2;
    let g = cogrow_in(b1, f1, b2, f2, side, max_steps, &Window::square(r))?;
    match g.blocked {
        Some(n) => Err(RegionError::Blocked(n)),
        None => Ok(g.word),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallCell {
    pub present: bool,
    pub tile: Option<String>,
    pub edges: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallValuation(pub Vec<WallCell>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffTheWallReport {
    pub i: usize,
    pub l: usize,
    pub x_w: i64,
    pub delta: i64,
    pub y0: i64,
    pub valuation: WallValuation,
    pub area_above: usize,
    pub height: i64,
}

/// `^ωW.Π[i,l].W^ω` as a bi-infinite path anchored at `Π_i`.
fn wall_path(pts: &[Vec2], i: usize, l: usize) -> BiInfinitePath {
    let seg: Vec<Direction> =
        pts[i..=l].windows(2).map(|w| Direction::from_vector(w[1] - w[0]).expect("unit")).collect();
    BiInfinitePath::new(
        up("|W"),
        pts[i],
        UltimatelyPeriodic::new(FreePath(seg), FreePath(vec![Direction::W])).expect("period"),
    )
}

fn analysis_window(pts: &[Vec2]) -> Window {
    let (mut x0, mut x1, mut y0, mut y1) = (0, 0, 0, 0);
    for p in pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    Window::new(x0 - 2, x1 + 2, y0 - 2, y1 + 2)
}

pub fn off_the_wall_analyze(path: &GroundedPath, y0: i64) -> Option<OffTheWallReport> {
    off_the_wall_labeled(path, None, y0)
}

/// Same as [`off_the_wall_analyze`], with one tile name per path point.
pub fn off_the_wall_labeled(path: &GroundedPath, labels: Option<&[String]>, y0: i64) -> Option<OffTheWallReport> {
    let pts = path.points();
    let l = pts.len() - 1;
    if l == 0 || pts[l].y != y0 {
        return None;
    }
    let x_w = pts[l].x;
    let window = analysis_window(&pts);
    for i in 1..l {
        let a = pts[i];
        if a.y != y0 || a.x <= x_w {
            continue;
        }
        let seg = &pts[i..=l];
        let east_ok = seg[1..].iter().all(|p| !(p.y == y0 && p.x >= a.x));
        let west_ok = seg[..seg.len() - 1].iter().all(|p| !(p.y == y0 && p.x <= x_w));
        if !east_ok || !west_ok {
            continue;
        }
        let bp = wall_path(&pts, i, l);
        let Ok(map) = RegionMap::for_path(&bp, &window) else { continue };
        if !pts[..i].iter().all(|p| map.side(*p) == Ok(Side::Left)) {
            continue;
        }
        let delta = a.x - x_w;
        let height = seg.iter().map(|p| p.y).max().unwrap_or(y0) - y0;
        let area_above =
            map.closed(Side::Left).filter(|p| p.y > y0 || (p.y == y0 && (x_w..=x_w + delta).contains(&p.x))).count();
        let valuation = wall_valuation(&pts, labels, x_w, delta, y0);
        return Some(OffTheWallReport { i, l, x_w, delta, y0, valuation, area_above, height });
    }
    None
}

fn wall_valuation(pts: &[Vec2], labels: Option<&[String]>, x_w: i64, delta: i64, y0: i64) -> WallValuation {
    let at: HashMap<Vec2, usize> = pts.iter().enumerate().map(|(k, p)| (*p, k)).collect();
    WallValuation(
        (x_w..=x_w + delta)
            .map(|x| {
                let q = Vec2::new(x, y0);
                match at.get(&q) {
                    None => WallCell { present: false, tile: None, edges: Vec::new() },
                    Some(&k) => {
                        let mut edges = Vec::new();
                        if k > 0 {
                            edges.push(Direction::from_vector(pts[k - 1] - q).expect("unit"));
                        }
                        if k + 1 < pts.len() {
                            edges.push(Direction::from_vector(pts[k + 1] - q).expect("unit"));
                        }
                        edges.sort();
                        WallCell { present: true, tile: labels.map(|ls| ls[k].clone()), edges }
                    }
                }
            })
            .collect(),
    )
}

pub fn points_of_interest(path: &GroundedPath, y0: i64) -> Vec<usize> {
    let pts = path.points();
    (1..pts.len())
        .filter(|&k| {
            let p = pts[k];
            p.y >= y0 && !pts.iter().any(|q| q.y == p.y && q.x > p.x)
        })
        .collect()
}

pub fn combine_off_the_wall(
    p1: &GroundedPath,
    p2: &GroundedPath,
    y0: i64,
    max_steps: usize,
) -> Result<FreePath, RegionError> {
    combine_labeled(p1, None, p2, None, y0, max_steps)
}

pub fn combine_labeled(
    p1: &GroundedPath,
    l1: Option<&[String]>,
    p2: &GroundedPath,
    l2: Option<&[String]>,
    y0: i64,
    max_steps: usize,
) -> Result<FreePath, RegionError> {
    let r1 = off_the_wall_labeled(p1, l1, y0).ok_or(RegionError::NotOffTheWall)?;
    let r2 = off_the_wall_labeled(p2, l2, y0).ok_or(RegionError::NotOffTheWall)?;
    if r1.valuation != r2.valuation {
        return Err(RegionError::ValuationMismatch);
    }
    let f1 = wall_path(&p1.points(), r1.i, r1.l).forward;
    let f2 = wall_path(&p2.points(), r2.i, r2.l).forward;
    let span = (f1.transient.len() + f2.transient.len()) as i64;
    let r = span.max(max_steps as i64) + 2;
    let b = up("|W");
    let g = cogrow_in(&b, &f1, &b, &f2, Side::Right, max_steps, &Window::square(r))?;
    match g.blocked {
        Some(n) => Err(RegionError::Blocked(n)),
        None => Ok(g.word),
    }
}

/// `Π[0,i]` followed by `f` up to its return to the west end of the wall
/// segment.
pub fn splice_off_the_wall(path: &GroundedPath, report: &OffTheWallReport, f: &FreePath) -> Option<GroundedPath> {
    let target = Vec2::new(report.x_w, report.y0);
    let mut word = path.word.slice(0, report.i);
    let mut p = path.points()[report.i];
    for d in f.dirs() {
        if p == target {
            return Some(GroundedPath::new(path.anchor, word));
        }
        word.0.push(*d);
        p += d.vector();
    }
    (p == target).then(|| GroundedPath::new(path.anchor, word))
}
