use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use quipu_core::path_algebra::{is_simple, pump_check, BiInfinitePath, Direction, FreePath, UltimatelyPeriodic, Vec2};
use quipu_core::regions_cogrow::{cogrow_in, RegionMap, Side};
use quipu_core::semilinear::{intersect_terms, SemiLinearTerm};
use quipu_core::Window;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn all_words(max_len: usize) -> Vec<FreePath> {
    let mut out = vec![FreePath::empty()];
    let mut frontier = vec![FreePath::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for d in Direction::ALL {
                let mut v = w.0.clone();
                v.push(d);
                next.push(FreePath(v));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn brute_simple(w: &FreePath) -> bool {
    let mut seen = HashSet::from([Vec2::ZERO]);
    let mut p = Vec2::ZERO;
    w.dirs().iter().all(|d| {
        p += d.vector();
        seen.insert(p)
    })
}

#[test]
fn pumpable_iff_ten_copies_are_simple() {
    let mut checked = 0;
    for w in all_words(7).into_iter().filter(|w| !w.is_empty() && is_simple(w)) {
        assert_eq!(pump_check(&w).unwrap(), brute_simple(&w.repeat(10)), "{w}");
        checked += 1;
    }
    assert!(checked > 2000);
}

fn word_strategy(max: usize) -> impl Strategy<Value = FreePath> {
    prop::collection::vec(prop::sample::select(Direction::ALL.to_vec()), 0..max).prop_map(FreePath)
}

fn vec_strategy() -> impl Strategy<Value = Vec2> {
    (-8i64..=8, -8i64..=8).prop_map(|(x, y)| Vec2::new(x, y))
}

fn term_strategy() -> impl Strategy<Value = SemiLinearTerm> {
    (vec_strategy(), prop::collection::vec(vec_strategy(), 0..=2)).prop_filter_map("valid term", |(base, gens)| {
        let t = SemiLinearTerm { base, gens };
        t.is_valid().then_some(t)
    })
}

fn window40() -> Window {
    Window::new(-20, 19, -20, 19)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn simple_matches_brute_force(w in word_strategy(24)) {
        prop_assert_eq!(is_simple(&w), brute_simple(&w));
    }

    #[test]
    fn intersections_match_the_window(a in term_strategy(), b in term_strategy()) {
        let w = window40();
        let got = intersect_terms(&a, &b);
        let want: BTreeSet<Vec2> = w.points().filter(|p| a.contains(*p) && b.contains(*p)).collect();
        prop_assert_eq!(got.enumerate(&w), want.clone());
        for p in w.points() {
            prop_assert_eq!(got.contains(p), want.contains(&p));
        }
        let own: BTreeSet<Vec2> = w.points().filter(|p| a.contains(*p)).collect();
        prop_assert_eq!(a.enumerate(&w), own);
    }
}

const PERIODS: [&str; 12] = ["E", "N", "W", "S", "EN", "NE", "WS", "SW", "ES", "NW", "EEN", "SSW"];

fn random_up(rng: &mut impl Rng) -> UltimatelyPeriodic {
    let n = rng.gen_range(0..5);
    let transient: Vec<Direction> = (0..n).map(|_| Direction::ALL[rng.gen_range(0..4)]).collect();
    let period: FreePath = PERIODS[rng.gen_range(0..PERIODS.len())].parse().unwrap();
    UltimatelyPeriodic::new(FreePath(transient), period).unwrap()
}

fn random_path(rng: &mut impl Rng, w: &Window) -> Option<(BiInfinitePath, RegionMap, Vec<Vec2>)> {
    let bp = BiInfinitePath::new(random_up(rng), Vec2::ZERO, random_up(rng));
    let pts = bp.materialize(24);
    if !brute_simple_points(&pts) {
        return None;
    }
    let map = RegionMap::new(&pts, w).ok()?;
    Some((bp, map, pts))
}

fn brute_simple_points(pts: &[Vec2]) -> bool {
    let set: HashSet<Vec2> = pts.iter().copied().collect();
    set.len() == pts.len()
}

fn edges(pts: &[Vec2]) -> HashSet<(Vec2, Vec2)> {
    pts.windows(2).map(|e| if e[0] < e[1] { (e[0], e[1]) } else { (e[1], e[0]) }).collect()
}

#[test]
fn cogrowth_stays_simple_inside_both_regions() {
    let w = Window::new(-8, 7, -8, 7);
    let mut rng = StdRng::seed_from_u64(7);
    let mut pairs = 0;
    let mut attempts = 0;
    while pairs < 1000 {
        attempts += 1;
        assert!(attempts < 200_000, "too few valid input pairs");
        let Some((p1, r1, pts1)) = random_path(&mut rng, &w) else { continue };
        let Some((p2, r2, pts2)) = random_path(&mut rng, &w) else { continue };
        let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
        let Ok(g) = cogrow_in(&p1.backward, &p1.forward, &p2.backward, &p2.forward, side, 40, &w) else { continue };
        pairs += 1;
        let pts = g.word.points_from(Vec2::ZERO);
        assert!(brute_simple_points(&pts), "{}", g.word);
        for p in &pts {
            for r in [&r1, &r2] {
                let s = r.side(*p).unwrap();
                assert!(s == side || s == Side::On, "{} leaves a region at {p}", g.word);
            }
        }
        let allowed: HashSet<_> = edges(&pts1).union(&edges(&pts2)).copied().collect();
        assert!(edges(&pts).is_subset(&allowed), "{}", g.word);

        let same = cogrow_in(&p1.backward, &p1.forward, &p1.backward, &p1.forward, side, 40, &w).unwrap();
        assert!(!same.word.is_empty());
        assert_eq!(same.word, p1.forward.prefix(same.word.len()));
    }
}
