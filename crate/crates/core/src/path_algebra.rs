//! Directions, lattice vectors and words over `{E, N, S, W}`.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("empty word")]
    EmptyWord,
    #[error("invalid direction letter {0:?}")]
    BadLetter(char),
    #[error("ultimately periodic path needs a non-empty period")]
    EmptyPeriod,
}

/// Integer lattice vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Vec2 {
    pub x: i64,
    pub y: i64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Vec2 { x, y }
    }

    pub fn cross(self, o: Vec2) -> i64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Vec2) -> i64 {
        self.x * o.x + self.y * o.y
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn colinear(self, o: Vec2) -> bool {
        self.cross(o) == 0
    }

    /// Rotated a quarter turn counter-clockwise.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn l1(self) -> i64 {
        self.x.abs() + self.y.abs()
    }
}

impl From<[i64; 2]> for Vec2 {
    fn from(a: [i64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [i64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl From<(i64, i64)> for Vec2 {
    fn from(a: (i64, i64)) -> Self {
        Vec2::new(a.0, a.1)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<i64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: i64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    E,
    N,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::E, Direction::N, Direction::S, Direction::W];
    /// Cyclic order used for turning decisions.
    pub const CYCLIC: [Direction; 4] = [Direction::W, Direction::N, Direction::E, Direction::S];

    pub fn vector(self) -> Vec2 {
        match self {
            Direction::E => Vec2::new(1, 0),
            Direction::N => Vec2::new(0, 1),
            Direction::S => Vec2::new(0, -1),
            Direction::W => Vec2::new(-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::E => Direction::W,
            Direction::N => Direction::S,
            Direction::S => Direction::N,
            Direction::W => Direction::E,
        }
    }

    /// Quarter turn to the left of a heading.
    pub fn left(self) -> Direction {
        match self {
            Direction::E => Direction::N,
            Direction::N => Direction::W,
            Direction::W => Direction::S,
            Direction::S => Direction::E,
        }
    }

    pub fn right(self) -> Direction {
        self.left().opposite()
    }

    pub fn letter(self) -> char {
        match self {
            Direction::E => 'E',
            Direction::N => 'N',
            Direction::S => 'S',
            Direction::W => 'W',
        }
    }

    pub fn from_letter(c: char) -> Result<Direction, PathError> {
        match c {
            'E' => Ok(Direction::E),
            'N' => Ok(Direction::N),
            'S' => Ok(Direction::S),
            'W' => Ok(Direction::W),
            other => Err(PathError::BadLetter(other)),
        }
    }

    pub fn from_vector(v: Vec2) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.vector() == v)
    }

    /// Index in [`Direction::CYCLIC`].
    pub fn cyclic_index(self) -> usize {
        match self {
            Direction::W => 0,
            Direction::N => 1,
            Direction::E => 2,
            Direction::S => 3,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::N => 0,
            Direction::E => 1,
            Direction::S => 2,
            Direction::W => 3,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A finite word over the four directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FreePath(pub Vec<Direction>);

impl FreePath {
    pub fn new(dirs: Vec<Direction>) -> Self {
        FreePath(dirs)
    }

    pub fn empty() -> Self {
        FreePath(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dirs(&self) -> &[Direction] {
        &self.0
    }

    pub fn concat(&self, other: &FreePath) -> FreePath {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FreePath(v)
    }

    pub fn repeat(&self, k: usize) -> FreePath {
        FreePath(self.0.repeat(k))
    }

    pub fn slice(&self, from: usize, to: usize) -> FreePath {
        FreePath(self.0[from..to].to_vec())
    }

    /// Points visited when the word is read from `start`, `start` included.
    pub fn points_from(&self, start: Vec2) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(self.0.len() + 1);
        let mut p = start;
        pts.push(p);
        for d in &self.0 {
            p += d.vector();
            pts.push(p);
        }
        pts
    }
}

impl fmt::Display for FreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{}", d.letter())?;
        }
        Ok(())
    }
}

impl FromStr for FreePath {
    type Err = PathError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(Direction::from_letter)
            .collect::<Result<Vec<_>, _>>()
            .map(FreePath)
    }
}

impl Serialize for FreePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FreePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a word, panicking on bad letters. Handy in tests and literals.
pub fn word(s: &str) -> FreePath {
    s.parse().expect("valid direction word")
}

/// `m·p^ω`, written `m|p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UltimatelyPeriodic {
    pub transient: FreePath,
    pub period: FreePath,
}

impl UltimatelyPeriodic {
    pub fn new(transient: FreePath, period: FreePath) -> Result<Self, PathError> {
        if period.is_empty() {
            return Err(PathError::EmptyPeriod);
        }
        Ok(UltimatelyPeriodic { transient, period })
    }

    /// First `n` letters.
    pub fn prefix(&self, n: usize) -> FreePath {
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            v.push(self.letter(i));
        }
        FreePath(v)
    }

    pub fn letter(&self, i: usize) -> Direction {
        let m = self.transient.len();
        if i < m {
            self.transient.0[i]
        } else {
            self.period.0[(i - m) % self.period.len()]
        }
    }

    /// Number of letters after which the path has left the Chebyshev ball of
    /// radius `r` around its start for good.
    pub fn escape_length(&self, r: i64) -> usize {
        let v = displacement(&self.period);
        let m = self.transient.len();
        if v.is_zero() {
            return m + 4 * self.period.len();
        }
        // every period advances the projection on v by |v|^2
        let vv = v.dot(v);
        let spread = self.period.len() as i64 * (v.x.abs() + v.y.abs());
        let reach = (m as i64) * (v.x.abs() + v.y.abs());
        let need = (r * (v.x.abs() + v.y.abs()) + reach + spread) / vv + 2;
        m + need.max(1) as usize * self.period.len()
    }
}

impl fmt::Display for UltimatelyPeriodic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.transient, self.period)
    }
}

impl FromStr for UltimatelyPeriodic {
    type Err = PathError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('|') {
            Some((m, p)) => UltimatelyPeriodic::new(m.parse()?, p.parse()?),
            None => UltimatelyPeriodic::new(FreePath::empty(), s.parse()?),
        }
    }
}

impl Serialize for UltimatelyPeriodic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for UltimatelyPeriodic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn up(s: &str) -> UltimatelyPeriodic {
    s.parse().expect("valid ultimately periodic word")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundedPath {
    pub anchor: Vec2,
    pub word: FreePath,
}

impl GroundedPath {
    pub fn new(anchor: Vec2, word: FreePath) -> Self {
        GroundedPath { anchor, word }
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.word.points_from(self.anchor)
    }

    pub fn end(&self) -> Vec2 {
        self.anchor + displacement(&self.word)
    }
}

/// `b.A.f` where `b` is the word arriving at the anchor: the period of `b`
/// repeats infinitely to the left and its transient sits right before `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiInfinitePath {
    pub backward: UltimatelyPeriodic,
    pub anchor: Vec2,
    pub forward: UltimatelyPeriodic,
}

impl BiInfinitePath {
    pub fn new(backward: UltimatelyPeriodic, anchor: Vec2, forward: UltimatelyPeriodic) -> Self {
        BiInfinitePath { backward, anchor, forward }
    }

    /// Letter `i` steps before the anchor, `i >= 1`.
    pub fn backward_letter(&self, i: usize) -> Direction {
        let t = &self.backward.transient.0;
        if i <= t.len() {
            t[t.len() - i]
        } else {
            let p = &self.backward.period.0;
            let j = (i - t.len() - 1) % p.len();
            p[p.len() - 1 - j]
        }
    }

    /// Points from `back` steps before the anchor to `fwd` steps after it,
    /// in path order.
    pub fn segment(&self, back: usize, fwd: usize) -> Vec<Vec2> {
        let mut before = Vec::with_capacity(back);
        let mut p = self.anchor;
        for i in 1..=back {
            p = p - self.backward_letter(i).vector();
            before.push(p);
        }
        before.reverse();
        let mut pts = before;
        let mut q = self.anchor;
        pts.push(q);
        for i in 0..fwd {
            q += self.forward.letter(i).vector();
            pts.push(q);
        }
        pts
    }

    /// Segment long enough that both tails stay outside the Chebyshev ball of
    /// radius `r` around the anchor beyond its ends.
    pub fn materialize(&self, r: i64) -> Vec<Vec2> {
        let back_up = UltimatelyPeriodic {
            transient: reverse_backward(&self.backward.transient),
            period: reverse_backward(&self.backward.period),
        };
        self.segment(back_up.escape_length(r), self.forward.escape_length(r))
    }
}

pub fn displacement(w: &FreePath) -> Vec2 {
    w.0.iter().fold(Vec2::ZERO, |acc, d| acc + d.vector())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    Reverse,
    Backward,
    ReverseBackward,
}

pub fn transform(w: &FreePath, t: Transform) -> FreePath {
    match t {
        Transform::Reverse => FreePath(w.0.iter().rev().copied().collect()),
        Transform::Backward => FreePath(w.0.iter().map(|d| d.opposite()).collect()),
        Transform::ReverseBackward => reverse_backward(w),
    }
}

/// The same walk traversed from its end to its start.
pub fn reverse_backward(w: &FreePath) -> FreePath {
    FreePath(w.0.iter().rev().map(|d| d.opposite()).collect())
}

pub fn is_simple_points(pts: &[Vec2]) -> bool {
    let mut seen = HashSet::with_capacity(pts.len());
    pts.iter().all(|p| seen.insert(*p))
}

pub fn is_simple(w: &FreePath) -> bool {
    is_simple_points(&w.points_from(Vec2::ZERO))
}

/// `true` iff `p^n` is simple for every `n`, decided by checking `p^2`.
pub fn pump_check(p: &FreePath) -> Result<bool, PathError> {
    if p.is_empty() {
        return Err(PathError::EmptyWord);
    }
    Ok(is_simple(&p.repeat(2)))
}

/// Distinct cyclic rotations, in order of rotation offset.
pub fn rotations(p: &FreePath) -> Vec<FreePath> {
    let n = p.len();
    let mut out: Vec<FreePath> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = p.0[i..].to_vec();
        v.extend_from_slice(&p.0[..i]);
        let r = FreePath(v);
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

pub fn rotate(p: &FreePath, i: usize) -> FreePath {
    let n = p.len();
    if n == 0 {
        return FreePath::empty();
    }
    let i = i % n;
    let mut v = p.0[i..].to_vec();
    v.extend_from_slice(&p.0[..i]);
    FreePath(v)
}

/// Strip of points `x` with `a <= nu·x <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ribbon {
    pub a: i64,
    pub b: i64,
    pub nu: Vec2,
}

pub fn in_ribbon(x: Vec2, r: &Ribbon) -> bool {
    let t = r.nu.dot(x);
    r.a <= t && t <= r.b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displacement_examples() {
        assert_eq!(displacement(&word("NNE")), Vec2::new(1, 2));
        assert_eq!(displacement(&word("ENEE")), Vec2::new(3, 1));
    }

    #[test]
    fn transforms() {
        let w = word("NNE");
        assert_eq!(transform(&w, Transform::Reverse), word("ENN"));
        assert_eq!(transform(&w, Transform::Backward), word("SSW"));
        assert_eq!(transform(&w, Transform::ReverseBackward), word("WSS"));
    }

    #[test]
    fn simplicity() {
        assert!(is_simple(&word("NES")));
        assert!(!is_simple(&word("NESNES")));
        assert!(!is_simple(&word("EW")));
    }

    #[test]
    fn pumping() {
        assert!(pump_check(&word("E")).unwrap());
        assert!(!pump_check(&word("NES")).unwrap());
        assert!(pump_check(&word("NNE")).unwrap());
        assert!(is_simple(&word("NNE").repeat(10)));
        assert_eq!(pump_check(&FreePath::empty()), Err(PathError::EmptyWord));
    }

    #[test]
    fn rotation_sets() {
        assert_eq!(rotations(&word("EEN")), vec![word("EEN"), word("ENE"), word("NEE")]);
        assert_eq!(rotations(&word("EE")), vec![word("EE")]);
        let r: HashSet<_> = rotations(&word("ENEE")).into_iter().collect();
        let want: HashSet<_> = ["ENEE", "NEEE", "EEEN", "EENE"].iter().map(|s| word(s)).collect();
        assert_eq!(r, want);
    }

    #[test]
    fn ribbon() {
        let r = Ribbon { a: 0, b: 2, nu: Vec2::new(0, 1) };
        assert!(in_ribbon(Vec2::new(0, 0), &r));
        assert!(!in_ribbon(Vec2::new(0, 3), &r));
        assert!(in_ribbon(Vec2::new(5, 1), &r));
    }

    #[test]
    fn parse_roundtrip() {
        let u = up("NEEN|N");
        assert_eq!(u.to_string(), "NEEN|N");
        assert_eq!(u.prefix(6), word("NEENNN"));
        assert!("NX".parse::<FreePath>().is_err());
        assert!("E|".parse::<UltimatelyPeriodic>().is_err());
    }

    #[test]
    fn bi_infinite_segment() {
        let bp = BiInfinitePath::new(up("|E"), Vec2::ZERO, up("|N"));
        assert_eq!(
            bp.segment(2, 2),
            vec![Vec2::new(-2, 0), Vec2::new(-1, 0), Vec2::ZERO, Vec2::new(0, 1), Vec2::new(0, 2)]
        );
        let bp = BiInfinitePath::new(up("N|W"), Vec2::ZERO, up("|E"));
        assert_eq!(bp.segment(3, 0), vec![Vec2::new(2, -1), Vec2::new(1, -1), Vec2::new(0, -1), Vec2::ZERO]);
    }
}
