//! Sets of the form `a`, `a + N·b`, `a + N·b + N·c` and their intersections.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::path_algebra::Vec2;
use crate::tas_core::Window;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemiLinearTerm {
    pub base: Vec2,
    pub gens: Vec<Vec2>,
}

impl SemiLinearTerm {
    pub fn point(base: Vec2) -> Self {
        SemiLinearTerm { base, gens: Vec::new() }
    }

    pub fn line(base: Vec2, b: Vec2) -> Self {
        assert!(!b.is_zero(), "null generator");
        SemiLinearTerm { base, gens: vec![b] }
    }

    pub fn plane(base: Vec2, b: Vec2, c: Vec2) -> Self {
        assert!(!b.colinear(c), "colinear generators");
        SemiLinearTerm { base, gens: vec![b, c] }
    }

    /// Checks the shape invariants.
    pub fn is_valid(&self) -> bool {
        match self.gens.as_slice() {
            [] => true,
            [b] => !b.is_zero(),
            [b, c] => !b.colinear(*c),
            _ => false,
        }
    }

    pub fn translate(&self, d: Vec2) -> Self {
        SemiLinearTerm { base: self.base + d, gens: self.gens.clone() }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.params(p).is_some()
    }

    /// Coefficients `(k, j)` with `p = base + k·b + j·c`.
    pub fn params(&self, p: Vec2) -> Option<(i64, i64)> {
        let r = p - self.base;
        match self.gens.as_slice() {
            [] => r.is_zero().then_some((0, 0)),
            [b] => {
                if r.cross(*b) != 0 {
                    return None;
                }
                let t = r.dot(*b);
                let bb = b.dot(*b);
                (t >= 0 && t % bb == 0).then_some((t / bb, 0))
            }
            [u, v] => {
                let d = u.cross(*v);
                let kn = r.cross(*v);
                let jn = u.cross(r);
                if kn % d != 0 || jn % d != 0 {
                    return None;
                }
                let (k, j) = (kn / d, jn / d);
                (k >= 0 && j >= 0).then_some((k, j))
            }
            _ => None,
        }
    }

    pub fn enumerate(&self, w: &Window) -> BTreeSet<Vec2> {
        let mut out = BTreeSet::new();
        match self.gens.as_slice() {
            [] => {
                if w.contains(self.base) {
                    out.insert(self.base);
                }
            }
            [b] => {
                if let Some((lo, hi)) = line_range(self.base, *b, w) {
                    for k in lo..=hi {
                        out.insert(self.base + *b * k);
                    }
                }
            }
            [u, v] => {
                let d = u.cross(*v);
                let (mut kl, mut kh, mut jl, mut jh) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
                for c in w.corners() {
                    let r = c - self.base;
                    let (kn, jn) = (r.cross(*v), u.cross(r));
                    kl = kl.min(div_floor(kn, d));
                    kh = kh.max(div_ceil(kn, d));
                    jl = jl.min(div_floor(jn, d));
                    jh = jh.max(div_ceil(jn, d));
                }
                for k in kl.max(0)..=kh {
                    for j in jl.max(0)..=jh {
                        let p = self.base + *u * k + *v * j;
                        if w.contains(p) {
                            out.insert(p);
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }
}

impl fmt::Display for SemiLinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for g in &self.gens {
            write!(f, "+N{g}")?;
        }
        Ok(())
    }
}

/// Range of `k >= 0` with `a + k·b` inside the window.
fn line_range(a: Vec2, b: Vec2, w: &Window) -> Option<(i64, i64)> {
    let mut lo = 0i64;
    let mut hi = i64::MAX;
    for (ac, bc, mn, mx) in [(a.x, b.x, w.x_min, w.x_max), (a.y, b.y, w.y_min, w.y_max)] {
        if bc == 0 {
            if ac < mn || ac > mx {
                return None;
            }
        } else if bc > 0 {
            lo = lo.max(div_ceil(mn - ac, bc));
            hi = hi.min(div_floor(mx - ac, bc));
        } else {
            lo = lo.max(div_ceil(ac - mx, -bc));
            hi = hi.min(div_floor(ac - mn, -bc));
        }
    }
    (lo <= hi).then_some((lo, hi))
}

pub fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

pub fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        0
    } else {
        (a / gcd(a, b) * b).abs()
    }
}

/// Finite union of terms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SemiLinearSet {
    pub terms: Vec<SemiLinearTerm>,
}

impl SemiLinearSet {
    pub fn new(terms: Vec<SemiLinearTerm>) -> Self {
        SemiLinearSet { terms }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.terms.iter().any(|t| t.contains(p))
    }

    pub fn enumerate(&self, w: &Window) -> BTreeSet<Vec2> {
        self.terms.iter().flat_map(|t| t.enumerate(w)).collect()
    }
}

pub fn contains(s: &SemiLinearSet, p: Vec2) -> bool {
    s.contains(p)
}

pub fn enumerate(s: &SemiLinearSet, w: &Window) -> BTreeSet<Vec2> {
    s.enumerate(w)
}

/// An infinite intersection the solver could not put in term form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unresolved {
    pub left: SemiLinearTerm,
    pub right: SemiLinearTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermIntersection {
    Empty,
    Finite(Vec<Vec2>),
    Terms(Vec<SemiLinearTerm>),
    /// Known to be infinite; enumerate by filtering.
    Unknown(Unresolved),
}

impl TermIntersection {
    pub fn is_empty(&self) -> bool {
        match self {
            TermIntersection::Empty => true,
            TermIntersection::Finite(v) => v.is_empty(),
            TermIntersection::Terms(v) => v.is_empty(),
            TermIntersection::Unknown(_) => false,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, TermIntersection::Terms(v) if !v.is_empty()) || matches!(self, TermIntersection::Unknown(_))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            TermIntersection::Empty => false,
            TermIntersection::Finite(v) => v.contains(&p),
            TermIntersection::Terms(v) => v.iter().any(|t| t.contains(p)),
            TermIntersection::Unknown(u) => u.left.contains(p) && u.right.contains(p),
        }
    }

    pub fn enumerate(&self, w: &Window) -> BTreeSet<Vec2> {
        match self {
            TermIntersection::Empty => BTreeSet::new(),
            TermIntersection::Finite(v) => v.iter().copied().filter(|p| w.contains(*p)).collect(),
            TermIntersection::Terms(v) => v.iter().flat_map(|t| t.enumerate(w)).collect(),
            TermIntersection::Unknown(u) => u.left.enumerate(w).into_iter().filter(|p| u.right.contains(*p)).collect(),
        }
    }
}

fn finite(mut pts: Vec<Vec2>) -> TermIntersection {
    pts.sort();
    pts.dedup();
    if pts.is_empty() {
        TermIntersection::Empty
    } else {
        TermIntersection::Finite(pts)
    }
}

pub fn intersect_terms(t1: &SemiLinearTerm, t2: &SemiLinearTerm) -> TermIntersection {
    match (t1.gens.as_slice(), t2.gens.as_slice()) {
        ([], _) => finite(if t2.contains(t1.base) { vec![t1.base] } else { vec![] }),
        (_, []) => finite(if t1.contains(t2.base) { vec![t2.base] } else { vec![] }),
        ([b1], [b2]) => line_line(t1.base, *b1, t2.base, *b2),
        ([b], [u, v]) => line_plane(t1.base, *b, t2.base, *u, *v),
        ([u, v], [b]) => line_plane(t2.base, *b, t1.base, *u, *v),
        ([u1, v1], [u2, v2]) => {
            if (u1, v1) == (u2, v2) || (u1, v1) == (v2, u2) {
                same_plane(t1.base, *u1, *v1, t2.base)
            } else {
                plane_plane(t1, t2)
            }
        }
        _ => TermIntersection::Unknown(Unresolved { left: t1.clone(), right: t2.clone() }),
    }
}

/// `{k >= lo, k <= hi} ∩ {k mod modulus ∈ residues}` mapped through `a + k·b`.
fn progression(a: Vec2, b: Vec2, lo: i64, hi: Option<i64>, modulus: i64, residues: &[i64]) -> TermIntersection {
    let lo = lo.max(0);
    if residues.is_empty() {
        return TermIntersection::Empty;
    }
    if let Some(hi) = hi {
        let pts = (lo..=hi).filter(|k| residues.contains(&k.rem_euclid(modulus))).map(|k| a + b * k).collect();
        return finite(pts);
    }
    // smallest period of the residue pattern
    let period = (1..=modulus)
        .filter(|p| modulus % p == 0)
        .find(|&p| residues.iter().all(|r| residues.contains(&((r + p) % modulus))))
        .unwrap_or(modulus);
    let mut reduced: Vec<i64> = residues.iter().map(|r| r % period).collect();
    reduced.sort();
    reduced.dedup();
    let mut starts: Vec<i64> = reduced.into_iter().map(|r| lo + (r - lo).rem_euclid(period)).collect();
    starts.sort();
    TermIntersection::Terms(starts.into_iter().map(|k0| SemiLinearTerm::line(a + b * k0, b * period)).collect())
}

fn line_line(a1: Vec2, b1: Vec2, a2: Vec2, b2: Vec2) -> TermIntersection {
    let r = a2 - a1;
    let d = b2.cross(b1);
    if d != 0 {
        // k·b1 - l·b2 = r
        let kn = b2.cross(r);
        let ln = b1.cross(r);
        if kn % d != 0 || ln % d != 0 {
            return TermIntersection::Empty;
        }
        let (k, l) = (kn / d, ln / d);
        if k < 0 || l < 0 {
            return TermIntersection::Empty;
        }
        return finite(vec![a1 + b1 * k]);
    }
    if r.cross(b1) != 0 {
        return TermIntersection::Empty;
    }
    let g = gcd(b1.x, b1.y);
    let dir = Vec2::new(b1.x / g, b1.y / g);
    let s1 = g;
    let s2 = if dir.x != 0 { b2.x / dir.x } else { b2.y / dir.y };
    let t = if dir.x != 0 { r.x / dir.x } else { r.y / dir.y };
    // k·s1 = t + l·s2 with k, l >= 0
    let modulus = s2.abs();
    let residues: Vec<i64> = (0..modulus).filter(|k| (k * s1 - t).rem_euclid(modulus) == 0).collect();
    if s2 > 0 {
        progression(a1, b1, div_ceil(t, s1), None, modulus, &residues)
    } else {
        let hi = div_floor(t, s1);
        if hi < 0 {
            return TermIntersection::Empty;
        }
        progression(a1, b1, 0, Some(hi), modulus, &residues)
    }
}

/// Solves `k` for `a + k·b ∈ c + N·u + N·v`.
fn line_plane(a: Vec2, b: Vec2, c: Vec2, u: Vec2, v: Vec2) -> TermIntersection {
    let d = u.cross(v);
    let s = d.signum();
    let r0 = a - c;
    // i·d = al0 + k·al1, j·d = be0 + k·be1
    let (al0, al1) = (r0.cross(v), b.cross(v));
    let (be0, be1) = (u.cross(r0), u.cross(b));
    let mut lo = 0i64;
    let mut hi: Option<i64> = None;
    for (c0, c1) in [(s * al0, s * al1), (s * be0, s * be1)] {
        // c0 + k·c1 >= 0
        if c1 > 0 {
            lo = lo.max(div_ceil(-c0, c1));
        } else if c1 < 0 {
            let h = div_floor(c0, -c1);
            hi = Some(hi.map_or(h, |x: i64| x.min(h)));
        } else if c0 < 0 {
            return TermIntersection::Empty;
        }
    }
    if matches!(hi, Some(h) if h < lo) {
        return TermIntersection::Empty;
    }
    let m = d.abs();
    let residues: Vec<i64> =
        (0..m).filter(|k| (al0 + k * al1).rem_euclid(m) == 0 && (be0 + k * be1).rem_euclid(m) == 0).collect();
    progression(a, b, lo, hi, m, &residues)
}

fn same_plane(a1: Vec2, u: Vec2, v: Vec2, a2: Vec2) -> TermIntersection {
    let r = a2 - a1;
    let d = u.cross(v);
    let (sn, tn) = (r.cross(v), u.cross(r));
    if sn % d != 0 || tn % d != 0 {
        return TermIntersection::Empty;
    }
    let (s, t) = (sn / d, tn / d);
    TermIntersection::Terms(vec![SemiLinearTerm::plane(a1 + u * s.max(0) + v * t.max(0), u, v)])
}

/// Exact rational `n / d` with `d > 0`.
#[derive(Clone, Copy, Debug)]
struct Frac {
    n: i128,
    d: i128,
}

impl Frac {
    fn floor(self) -> i64 {
        self.n.div_euclid(self.d) as i64
    }
    fn ceil(self) -> i64 {
        -((-self.n).div_euclid(self.d)) as i64
    }
}

/// Two planes with different generators: the parameter set of the first plane
/// that lands in the second is a polygon intersected with a lattice coset.
fn plane_plane(t1: &SemiLinearTerm, t2: &SemiLinearTerm) -> TermIntersection {
    let (a1, u1, v1) = (t1.base, t1.gens[0], t1.gens[1]);
    let (a2, u2, v2) = (t2.base, t2.gens[0], t2.gens[1]);
    let d2 = u2.cross(v2);
    let s = d2.signum();
    let r0 = a1 - a2;
    // constraints c0 + c1·i + c2·j >= 0
    let cons: [(i64, i64, i64); 4] = [
        (0, 1, 0),
        (0, 0, 1),
        (s * r0.cross(v2), s * u1.cross(v2), s * v1.cross(v2)),
        (s * u2.cross(r0), s * u2.cross(u1), s * u2.cross(v1)),
    ];
    let m = d2.abs();
    let member = |i: i64, j: i64| {
        cons.iter().all(|&(c0, c1, c2)| c0 + c1 * i + c2 * j >= 0)
            && (cons[2].0 + cons[2].1 * i + cons[2].2 * j).rem_euclid(m) == 0
            && (cons[3].0 + cons[3].1 * i + cons[3].2 * j).rem_euclid(m) == 0
    };
    let feasible = |x: (Frac, Frac)| {
        cons.iter().all(|&(c0, c1, c2)| {
            // c0 + c1·xi + c2·xj >= 0 with common denominator
            let (xi, xj) = x;
            let val = c0 as i128 * xi.d * xj.d + c1 as i128 * xi.n * xj.d + c2 as i128 * xj.n * xi.d;
            val >= 0
        })
    };
    let mut verts: Vec<(Frac, Frac)> = Vec::new();
    for p in 0..4 {
        for q in p + 1..4 {
            let (a0, a_1, a_2) = cons[p];
            let (b0, b_1, b_2) = cons[q];
            let det = a_1 as i128 * b_2 as i128 - a_2 as i128 * b_1 as i128;
            if det == 0 {
                continue;
            }
            // a_1 i + a_2 j = -a0 ; b_1 i + b_2 j = -b0
            let ni = (-(a0 as i128)) * b_2 as i128 - a_2 as i128 * (-(b0 as i128));
            let nj = a_1 as i128 * (-(b0 as i128)) - (-(a0 as i128)) * b_1 as i128;
            let (ni, nj, det) = if det < 0 { (-ni, -nj, -det) } else { (ni, nj, det) };
            let v = (Frac { n: ni, d: det }, Frac { n: nj, d: det });
            if feasible(v) {
                verts.push(v);
            }
        }
    }
    if verts.is_empty() {
        return TermIntersection::Empty;
    }
    // rays of the recession cone lie on boundary directions
    let mut rays: Vec<(i64, i64)> = Vec::new();
    for &(_, c1, c2) in &cons {
        for r in [(-c2, c1), (c2, -c1)] {
            if r == (0, 0) {
                continue;
            }
            if cons.iter().all(|&(_, e1, e2)| e1 * r.0 + e2 * r.1 >= 0) {
                let g = gcd(r.0, r.1);
                let r = (r.0 / g * m, r.1 / g * m);
                if !rays.contains(&r) {
                    rays.push(r);
                }
            }
        }
    }
    let (mut il, mut ih, mut jl, mut jh) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for (vi, vj) in &verts {
        il = il.min(vi.floor());
        ih = ih.max(vi.ceil());
        jl = jl.min(vj.floor());
        jh = jh.max(vj.ceil());
    }
    let (mut ei, mut ej) = (0, 0);
    for r in &rays {
        ei += r.0.max(0);
        ej += r.1.max(0);
    }
    let mut pts = Vec::new();
    for i in il.max(0)..=ih + ei {
        for j in jl.max(0)..=jh + ej {
            if member(i, j) {
                if !rays.is_empty() {
                    return TermIntersection::Unknown(Unresolved { left: t1.clone(), right: t2.clone() });
                }
                pts.push(a1 + u1 * i + v1 * j);
            }
        }
    }
    finite(pts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finiteness {
    Yes(Vec<Vec2>),
    No,
    Unknown,
}

pub fn intersection_finite(s1: &SemiLinearSet, s2: &SemiLinearSet) -> Finiteness {
    let mut pts = Vec::new();
    for a in &s1.terms {
        for b in &s2.terms {
            match intersect_terms(a, b) {
                TermIntersection::Empty => {}
                TermIntersection::Finite(v) => pts.extend(v),
                TermIntersection::Terms(v) if v.is_empty() => {}
                TermIntersection::Terms(_) | TermIntersection::Unknown(_) => return Finiteness::No,
            }
        }
    }
    pts.sort();
    pts.dedup();
    Finiteness::Yes(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64, y: i64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn membership() {
        assert!(SemiLinearTerm::line(v(0, -2), v(0, -1)).contains(v(0, -5)));
        assert!(SemiLinearTerm::plane(v(2, -2), v(2, 0), v(0, -1)).contains(v(6, -4)));
        assert!(!SemiLinearTerm::line(v(0, -2), v(0, -1)).contains(v(1, -2)));
        assert!(!SemiLinearTerm::line(v(0, 0), v(2, 0)).contains(v(3, 0)));
        assert!(!SemiLinearTerm::line(v(0, 0), v(2, 0)).contains(v(-2, 0)));
    }

    #[test]
    fn term_intersections() {
        let row = SemiLinearTerm::line(v(0, 0), v(1, 0));
        assert_eq!(
            intersect_terms(&row, &SemiLinearTerm::line(v(5, 0), v(2, 0))),
            TermIntersection::Terms(vec![SemiLinearTerm::line(v(5, 0), v(2, 0))])
        );
        assert_eq!(intersect_terms(&row, &SemiLinearTerm::line(v(0, 1), v(1, 0))), TermIntersection::Empty);
        assert_eq!(
            intersect_terms(&row, &SemiLinearTerm::line(v(3, 3), v(0, -1))),
            TermIntersection::Finite(vec![v(3, 0)])
        );
        let opp = intersect_terms(&row, &SemiLinearTerm::line(v(3, 0), v(-1, 0)));
        assert_eq!(opp, TermIntersection::Finite(vec![v(0, 0), v(1, 0), v(2, 0), v(3, 0)]));
        let lcm_case =
            intersect_terms(&SemiLinearTerm::line(v(0, 0), v(2, 0)), &SemiLinearTerm::line(v(1, 0), v(3, 0)));
        assert_eq!(lcm_case, TermIntersection::Terms(vec![SemiLinearTerm::line(v(4, 0), v(6, 0))]));
    }

    #[test]
    fn finiteness() {
        let row = SemiLinearSet::new(vec![SemiLinearTerm::line(v(0, 0), v(1, 0))]);
        assert_eq!(intersection_finite(&row, &row), Finiteness::No);
        let quad = SemiLinearSet::new(vec![SemiLinearTerm::plane(v(0, 0), v(1, 0), v(0, 1))]);
        let ray = SemiLinearSet::new(vec![SemiLinearTerm::line(v(10, 10), v(1, 0))]);
        assert_eq!(intersection_finite(&quad, &ray), Finiteness::No);
        let col = SemiLinearSet::new(vec![SemiLinearTerm::line(v(0, -2), v(0, -1))]);
        let pts = SemiLinearSet::new((-3..=3).map(|x| SemiLinearTerm::point(v(x, -1))).collect());
        assert_eq!(intersection_finite(&col, &pts), Finiteness::Yes(vec![]));
    }

    #[test]
    fn plane_pairs() {
        let q1 = SemiLinearTerm::plane(v(0, 0), v(1, 0), v(0, 1));
        let q2 = SemiLinearTerm::plane(v(5, 5), v(-1, 0), v(0, -1));
        let r = intersect_terms(&q1, &q2);
        assert_eq!(r.enumerate(&Window::square(10)).len(), 36);
        assert!(matches!(r, TermIntersection::Finite(_)));
        let q3 = SemiLinearTerm::plane(v(3, 1), v(1, 1), v(0, 1));
        assert!(intersect_terms(&q1, &q3).is_infinite());
        let q4 = SemiLinearTerm::plane(v(-1, -1), v(-1, 0), v(-1, -1));
        assert!(intersect_terms(&q1, &q4).is_empty());
        let same = intersect_terms(&q1, &SemiLinearTerm::plane(v(-2, 3), v(0, 1), v(1, 0)));
        assert_eq!(same, TermIntersection::Terms(vec![SemiLinearTerm::plane(v(0, 3), v(1, 0), v(0, 1))]));
    }

    #[test]
    fn enumeration() {
        let w = Window::new(-2, 2, -4, 0);
        let got = SemiLinearTerm::line(v(0, -2), v(0, -1)).enumerate(&w);
        assert_eq!(got.into_iter().collect::<Vec<_>>(), vec![v(0, -4), v(0, -3), v(0, -2)]);
        assert!(SemiLinearSet::default().enumerate(&w).is_empty());
        let got = SemiLinearTerm::plane(v(2, -2), v(2, 0), v(0, -1)).enumerate(&Window::new(0, 6, -3, 0));
        let want: BTreeSet<_> = [v(2, -2), v(4, -2), v(6, -2), v(2, -3), v(4, -3), v(6, -3)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn serializes_as_documented() {
        let t = SemiLinearTerm::line(v(0, -2), v(0, -1));
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"base":[0,-2],"gens":[[0,-1]]}"#);
    }
}
