use std::collections::{BTreeSet, HashSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use quipu_core::filtration::{
    run_filtration, verify_grid_witness, witness_window, FiltrationConfig, FiltrationResult, TraceKind,
};
use quipu_core::path_algebra::{is_simple, pump_check, BiInfinitePath, Direction, FreePath, UltimatelyPeriodic, Vec2};
use quipu_core::quipu::{alpha_within, k_multiple, unroll, validate, Quipu};
use quipu_core::regions_cogrow::{cogrow_in, RegionMap, Side};
use quipu_core::semilinear::{intersect_terms, SemiLinearTerm};
use quipu_core::tas_core::grow_max;
use quipu_core::testdata::{BAD1, EX1, GRID1};
use quipu_core::{Tas, Window};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    check(took < limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{out} in {took:.2?}"))
}

fn ex1_run() -> (Tas, quipu_core::filtration::FiltrationRun) {
    let tas = Tas::from_json(EX1).unwrap();
    let run = run_filtration(&tas, &FiltrationConfig::default());
    (tas, run)
}

fn criterion1() -> Outcome {
    timed(Duration::from_secs(10), || {
        let (tas, run) = ex1_run();
        let FiltrationResult::Halt(q) = &run.result else {
            return Err(format!("expected halt, got {}", run.result.label()));
        };
        let cycles: Vec<&str> =
            run.trace.iter().filter(|e| e.kind == TraceKind::Cycle).map(|e| e.candidate.as_str()).collect();
        let want = ["S|S", "S|E", "S|W", "SE|S", "SW|S", "SEE|S", "SWW|S"];
        check(cycles == want, format!("trace {cycles:?}"))?;
        let w = Window::new(-20, 20, -20, 1);
        let alpha = grow_max(&tas, &w).map_err(|e| e.to_string())?;
        let mine = alpha_within(q, &w).map_err(|e| e.to_string())?;
        check(alpha.tiles == mine.tiles, "window assemblies differ")?;
        Ok(format!("7 cycles, {} tiles equal", alpha.len()))
    })
}

fn criterion2() -> Outcome {
    timed(Duration::from_secs(5), || {
        let tas = Tas::from_json(GRID1).unwrap();
        let run = run_filtration(&tas, &FiltrationConfig::default());
        let FiltrationResult::Grid { witness, .. } = &run.result else {
            return Err(format!("GRID1 gave {}", run.result.label()));
        };
        let ww = witness_window();
        check(ww.width() == 30 && ww.height() == 30, "witness window is not 30x30")?;
        let alpha = grow_max(&tas, &ww).map_err(|e| e.to_string())?;
        check(witness.verified_in_window && verify_grid_witness(&tas, &alpha, witness, &ww), "witness not verified")?;
        let (_, ex1) = ex1_run();
        check(!matches!(ex1.result, FiltrationResult::Grid { .. }), "EX1 classified as grid")?;
        check(ex1.trace.iter().all(|e| e.kind != TraceKind::GridCheck), "EX1 grid check fired")?;
        Ok(format!("witness m={} p={} q={}", witness.m, witness.p, witness.q))
    })
}

fn criterion3() -> Outcome {
    let tas = Tas::from_json(BAD1).unwrap();
    let run = run_filtration(&tas, &FiltrationConfig::default());
    let FiltrationResult::NotConfluent(w) = &run.result else {
        return Err(format!("BAD1 gave {}", run.result.label()));
    };
    check(w.point == Vec2::new(0, 1) && w.tiles == ["B".to_string(), "D".to_string()], format!("witness {w}"))?;
    Ok(format!("witness {w}"))
}

fn all_words(max_len: usize) -> Vec<FreePath> {
    let mut out = Vec::new();
    let mut frontier = vec![FreePath::empty()];
    for _ in 0..max_len {
        let next: Vec<FreePath> = frontier
            .iter()
            .flat_map(|w| {
                Direction::ALL.into_iter().map(move |d| {
                    let mut v = w.0.clone();
                    v.push(d);
                    FreePath(v)
                })
            })
            .collect();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn brute_simple_points(pts: &[Vec2]) -> bool {
    pts.iter().collect::<HashSet<_>>().len() == pts.len()
}

fn brute_simple(w: &FreePath) -> bool {
    brute_simple_points(&w.points_from(Vec2::ZERO))
}

fn criterion4() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut n = 0;
        for w in all_words(7).into_iter().filter(is_simple) {
            let got = pump_check(&w).map_err(|e| e.to_string())?;
            check(got == brute_simple(&w.repeat(10)), format!("disagreement on {w}"))?;
            n += 1;
        }
        Ok(format!("{n} simple words, 0 disagreements"))
    })
}

const PERIODS: [&str; 12] = ["E", "N", "W", "S", "EN", "NE", "WS", "SW", "ES", "NW", "EEN", "SSW"];

fn random_up(rng: &mut StdRng) -> UltimatelyPeriodic {
    let n = rng.gen_range(0..5);
    let transient: Vec<Direction> = (0..n).map(|_| Direction::ALL[rng.gen_range(0..4)]).collect();
    let period: FreePath = PERIODS[rng.gen_range(0..PERIODS.len())].parse().unwrap();
    UltimatelyPeriodic::new(FreePath(transient), period).unwrap()
}

fn random_path(rng: &mut StdRng, w: &Window) -> Option<(BiInfinitePath, RegionMap, Vec<Vec2>)> {
    let bp = BiInfinitePath::new(random_up(rng), Vec2::ZERO, random_up(rng));
    let pts = bp.materialize(24);
    if !brute_simple_points(&pts) {
        return None;
    }
    let map = RegionMap::new(&pts, w).ok()?;
    Some((bp, map, pts))
}

fn edges(pts: &[Vec2]) -> HashSet<(Vec2, Vec2)> {
    pts.windows(2).map(|e| if e[0] < e[1] { (e[0], e[1]) } else { (e[1], e[0]) }).collect()
}

fn criterion5() -> Outcome {
    let w = Window::new(-8, 7, -8, 7);
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut pairs, mut attempts) = (0, 0);
    while pairs < 1000 {
        attempts += 1;
        check(attempts < 200_000, "too few valid input pairs")?;
        let Some((p1, r1, pts1)) = random_path(&mut rng, &w) else { continue };
        let Some((p2, r2, pts2)) = random_path(&mut rng, &w) else { continue };
        let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
        let Ok(g) = cogrow_in(&p1.backward, &p1.forward, &p2.backward, &p2.forward, side, 40, &w) else { continue };
        pairs += 1;
        let pts = g.word.points_from(Vec2::ZERO);
        check(brute_simple_points(&pts), format!("{} not simple", g.word))?;
        for p in &pts {
            for r in [&r1, &r2] {
                let s = r.side(*p).map_err(|e| e.to_string())?;
                check(s == side || s == Side::On, format!("{} leaves a region at {p}", g.word))?;
            }
        }
        let allowed: HashSet<_> = edges(&pts1).union(&edges(&pts2)).copied().collect();
        check(edges(&pts).is_subset(&allowed), format!("{} uses a foreign edge", g.word))?;
        let same =
            cogrow_in(&p1.backward, &p1.forward, &p1.backward, &p1.forward, side, 40, &w).map_err(|e| e.to_string())?;
        check(
            !same.word.is_empty() && same.word == p1.forward.prefix(same.word.len()),
            format!("identical inputs gave {}", same.word),
        )?;
    }
    Ok(format!("{pairs} pairs"))
}

fn random_term(rng: &mut StdRng) -> SemiLinearTerm {
    loop {
        let k = rng.gen_range(0..=2);
        let mut v = || Vec2::new(rng.gen_range(-8..=8), rng.gen_range(-8..=8));
        let base = v();
        let gens = (0..k).map(|_| v()).collect();
        let t = SemiLinearTerm { base, gens };
        if t.is_valid() {
            return t;
        }
    }
}

fn criterion6() -> Outcome {
    let w = Window::new(-20, 19, -20, 19);
    let mut rng = StdRng::seed_from_u64(99);
    let mut nonempty = 0;
    for _ in 0..1000 {
        let (a, b) = (random_term(&mut rng), random_term(&mut rng));
        let got = intersect_terms(&a, &b);
        let want: BTreeSet<Vec2> = w.points().filter(|p| a.contains(*p) && b.contains(*p)).collect();
        let listed = got.enumerate(&w);
        check(listed == want, format!("enumerate differs for {a:?} and {b:?}"))?;
        for p in w.points() {
            check(got.contains(p) == listed.contains(&p), format!("contains differs at {p}"))?;
        }
        nonempty += usize::from(!want.is_empty());
    }
    Ok(format!("1000 pairs, {nonempty} with points in the window"))
}

fn algebra(q: &Quipu, tas: &Tas, w: &Window) -> Result<(), String> {
    validate(q, tas).map_err(|v| format!("invalid quipu: {v:?}"))?;
    let s = q.checked_structure().map_err(|e| e.to_string())?;
    let mut seen = HashSet::new();
    for v in 0..q.len() {
        for p in s.cover(v).enumerate(w) {
            check(seen.insert(p), format!("covers overlap at {p}"))?;
        }
    }
    let base = alpha_within(q, w).map_err(|e| e.to_string())?;
    for c in &s.cycles {
        for (name, r) in [("unroll", unroll(q, c.id, 1)), ("k_multiple", k_multiple(q, c.id, 2))] {
            let r = r.map_err(|e| e.to_string())?;
            validate(&r, tas).map_err(|v| format!("{name} on cycle {} is invalid: {v:?}", c.id))?;
            let got = alpha_within(&r, w).map_err(|e| e.to_string())?;
            check(got.tiles == base.tiles, format!("{name} on cycle {} changes the assembly", c.id))?;
        }
    }
    Ok(())
}

fn criterion7() -> Outcome {
    let (tas, run) = ex1_run();
    let w = Window::square(30);
    for (i, q) in run.history.iter().enumerate() {
        algebra(q, &tas, &w).map_err(|e| format!("history[{i}]: {e}"))?;
    }
    Ok(format!("{} quipus", run.history.len()))
}

fn criterion8() -> Outcome {
    let dir = std::env::temp_dir().join(format!("quipu-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let tas = dir.join("ex1.json");
    std::fs::write(&tas, EX1).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_quipu"))
            .arg("build")
            .arg(&tas)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        check(status.code() == Some(0), format!("build exited with {status}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(outputs[0] == outputs[1], "documents differ")?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [fn() -> Outcome; 8] =
        [criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        match c() {
            Ok(msg) => println!("criterion {}: PASS ({msg})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL ({msg})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
