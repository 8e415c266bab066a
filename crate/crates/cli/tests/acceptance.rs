//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines land in the test log
//! verbatim. Exits non-zero when any criterion fails, except those listed in
//! `KNOWN_UNATTAINABLE`, which still print FAIL with the reason.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowd_psyche::analysis::pearson;
use crowd_psyche::emotion::map_emotions;
use crowd_psyche::features::{collectivity_term, extract_features, frame_states, FrameAgent, FrameState, ProxemicsConfig};
use crowd_psyche::groups::{detect_groups, pair_test, GroupRuleConfig};
use crowd_psyche::homography::{estimate_homography, Homography};
use crowd_psyche::ocean::{invert_items, ItemAnswers, PersonalityVector};
use crowd_psyche::pipeline::{analyze, PipelineConfig};
use crowd_psyche::synth::{generate, mixed_scene, random_scene, ScenarioKind, ScenarioSpec, CORRIDOR_LENGTH};
use crowd_psyche::trajectory::{write_trajectories, Correspondence, Sample, SceneDataset, Trajectory};
use crowd_psyche::{PersonId, Point2};

/// Criteria that cannot hold as stated; see the detail printed with them.
const KNOWN_UNATTAINABLE: &[u32] = &[4, 7];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(budget: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < budget, format!("took {took:?}, budget {budget:?}"))?;
    Ok(took)
}

fn isolation_exactness() -> Outcome {
    let start = Instant::now();
    let cfg = ProxemicsConfig::default();
    let alone = extract_features(&generate(&ScenarioSpec::new(ScenarioKind::LoneWalker, 1)).unwrap(), &cfg).unwrap();
    let pair_spec = ScenarioSpec {
        spacing: 1.8,
        ..ScenarioSpec::new(ScenarioKind::LockstepPair, 2)
    };
    let pair = extract_features(&generate(&pair_spec).unwrap(), &cfg).unwrap();
    let took = within(Duration::from_secs(1), start)?;
    for f in &alone.frames {
        ensure((f.isolation - 1.0).abs() <= 1e-12, format!("alone: isolation {}", f.isolation))?;
    }
    for f in &pair.frames {
        ensure((f.isolation - 0.5).abs() <= 1e-12, format!("pair at 1.8 m: isolation {}", f.isolation))?;
    }
    Ok(format!("{} + {} person-frames, {took:?}", alone.frames.len(), pair.frames.len()))
}

fn agent(speed: f64, heading: f64) -> FrameAgent {
    let r = heading.to_radians();
    FrameAgent {
        person_id: 0,
        position: Point2::new(0.0, 0.0),
        velocity: Point2::new(speed * r.cos(), speed * r.sin()),
        speed,
        alpha: heading.abs(),
        heading,
        heading_change: None,
    }
}

fn collectivity_exactness() -> Outcome {
    let cfg = ProxemicsConfig::default();
    let same = collectivity_term(&agent(1.2, 30.0), &agent(1.2, 30.0), &cfg);
    ensure((same - 1.0).abs() <= 1e-12, format!("lockstep term {same}"))?;
    let gap = collectivity_term(&agent(0.5, 0.0), &agent(1.5, 0.0), &cfg);
    let expected = (-0.3f64).exp();
    ensure((gap - expected).abs() <= 1e-12, format!("ds=1 term {gap}, expected {expected}"))?;

    // the same through the pipeline: two walkers in lockstep
    let set = extract_features(&generate(&ScenarioSpec::new(ScenarioKind::LockstepPair, 2)).unwrap(), &cfg).unwrap();
    for f in &set.frames {
        ensure((f.collectivity - 1.0).abs() <= 1e-12, format!("pipeline lockstep collectivity {}", f.collectivity))?;
    }
    Ok(format!("lockstep {same}, ds=1 {gap}"))
}

/// Connected components of the pair graph by depth-first search from
/// every unvisited agent.
fn closure_oracle(state: &FrameState, cfg: &GroupRuleConfig) -> BTreeSet<Vec<PersonId>> {
    let agents = &state.agents;
    let n = agents.len();
    let adjacent = |i: usize, j: usize| i != j && pair_test(&agents[i], &agents[j], cfg);
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(agents[i].person_id);
            for j in 0..n {
                if !seen[j] && adjacent(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if members.len() >= 2 {
            members.sort_unstable();
            out.insert(members);
        }
    }
    out
}

fn detected(state: &FrameState, cfg: &GroupRuleConfig) -> BTreeSet<Vec<PersonId>> {
    detect_groups(state, cfg).into_iter().map(|g| g.members).collect()
}

fn walker(id: PersonId, x: f64, y: f64) -> Trajectory {
    Trajectory::new(
        id,
        (0..3)
            .map(|f| Sample {
                frame: f,
                position: Point2::new(x + 0.05 * f as f64, y),
            })
            .collect(),
    )
    .unwrap()
}

fn group_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = GroupRuleConfig::default();

    // A-B and B-C within 1.2 m, A-C at 2 m: one group of three
    let chain = SceneDataset::new(
        Default::default(),
        vec![walker(1, 0.0, 0.0), walker(2, 1.0, 0.0), walker(3, 2.0, 0.0)],
    )
    .unwrap();
    for s in frame_states(&chain).unwrap() {
        let got = detected(&s, &cfg);
        ensure(got == BTreeSet::from([vec![1, 2, 3]]), format!("chain merge gave {got:?}"))?;
    }

    let (mut frames, mut groups, mut merged) = (0usize, 0usize, 0usize);
    for seed in 0..200 {
        let scene = random_scene(seed, 20, 50);
        ensure(scene.person_count() <= 20, "scene too large")?;
        for s in frame_states(&scene).unwrap() {
            let got = detected(&s, &cfg);
            let want = closure_oracle(&s, &cfg);
            ensure(got == want, format!("seed {seed} frame {}: {got:?} != {want:?}", s.frame))?;
            frames += 1;
            groups += got.len();
            merged += got.iter().filter(|g| g.len() >= 3).count();
        }
    }
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!("{frames} frames, {groups} groups ({merged} of size >= 3), {took:?}"))
}

/// Emotion table restated as rules: (factor index, high?, [fear, happiness, sadness, anger]).
const EMOTION_TABLE_RULES: [(usize, bool, [i32; 4]); 10] = [
    (0, true, [0, 0, 0, -1]),
    (0, false, [0, 0, 0, 1]),
    (1, true, [-1, 0, 0, 0]),
    (1, false, [1, 0, 0, 0]),
    (2, true, [-1, 1, -1, -1]),
    (2, false, [1, 0, 0, 0]),
    (3, true, [0, 0, 0, -1]),
    (3, false, [0, 0, 0, 1]),
    (4, true, [1, -1, 1, 1]),
    (4, false, [-1, 1, -1, -1]),
];

fn emotion_table_enumeration() -> Outcome {
    let mut lo = [i32::MAX; 4];
    let mut hi = [i32::MIN; 4];
    for pattern in 0u32..32 {
        let high: Vec<bool> = (0..5).map(|f| pattern & (1 << f) != 0).collect();
        let dims: Vec<f64> = high.iter().map(|&h| if h { 0.75 } else { 0.25 }).collect();
        let mut expected = [0i32; 4];
        for (factor, want_high, delta) in EMOTION_TABLE_RULES {
            if high[factor] == want_high {
                for e in 0..4 {
                    expected[e] += delta[e];
                }
            }
        }
        let r = map_emotions(&PersonalityVector::from_array([dims[0], dims[1], dims[2], dims[3], dims[4]]));
        let got = [r.fear, r.happiness, r.sadness, r.anger];
        ensure(got == expected, format!("pattern {pattern:05b}: {got:?} != {expected:?}"))?;
        for e in 0..4 {
            lo[e] = lo[e].min(got[e]);
            hi[e] = hi[e].max(got[e]);
        }
    }
    let ranges: Vec<(i32, i32)> = (0..4).map(|e| (lo[e], hi[e])).collect();
    // E adds to Happiness and Sadness from one side only, so the table cannot
    // reach Happiness -2 or Sadness +2
    ensure(
        ranges == [(-3, 3), (-2, 2), (-2, 2), (-4, 3)],
        format!(
            "all 32 patterns match the brute-force sums, but observed ranges are \
             F{:?} H{:?} S{:?} A{:?}, not F(-3, 3) H(-2, 2) S(-2, 2) A(-4, 3)",
            ranges[0], ranges[1], ranges[2], ranges[3]
        ),
    )?;
    Ok(format!("32 patterns, ranges F{:?} H{:?} S{:?} A{:?}", ranges[0], ranges[1], ranges[2], ranges[3]))
}

fn ocean_bounds_and_involution() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut vectors = 0;
    for seed in 0..100 {
        let a = analyze(&random_scene(1000 + seed, 20, 50), &cfg).map_err(|e| e.to_string())?;
        for p in a.ocean.per_person.values().chain(a.ocean.per_frame.iter().map(|f| &f.personality)) {
            ensure(
                p.to_array().iter().all(|v| (0.0..=1.0).contains(v)),
                format!("seed {seed}: {p:?} outside [0,1]"),
            )?;
            vectors += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let q = ItemAnswers(std::array::from_fn(|_| rng.gen_range(0.0..=4.0)));
        let back = invert_items(&invert_items(&q));
        ensure(
            q.0.iter().zip(back.0).all(|(a, b)| (a - b).abs() <= 1e-12),
            "invert(invert(q)) != q",
        )?;
    }
    Ok(format!("{vectors} personality vectors in [0,1], 1000 involutions"))
}

fn cluster_more_extraverted() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut margins = Vec::new();
    for seed in 0..5 {
        let a = analyze(&mixed_scene(seed, 100), &cfg).map_err(|e| e.to_string())?;
        let e = |id: PersonId| a.ocean.per_person[&id].extraversion;
        let cluster_min = (1..=4).map(e).fold(f64::INFINITY, f64::min);
        let wander_max = (5..=8).map(e).fold(f64::NEG_INFINITY, f64::max);
        ensure(
            cluster_min > wander_max,
            format!("seed {seed}: cluster min E {cluster_min} <= wanderer max E {wander_max}"),
        )?;
        margins.push(cluster_min - wander_max);
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("5 scenes, smallest margin {worst:.4}"))
}

fn anger_claim() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counter = Vec::new();
    for _ in 0..100 {
        let p = PersonalityVector::from_array([
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.5..=1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..0.5),
        ]);
        let r = map_emotions(&p);
        if r.anger >= 0 {
            counter.push((p, r.anger));
        }
    }
    match counter.first() {
        None => Ok("100 vectors with E >= 0.5, N < 0.5 all have Anger < 0".into()),
        Some((p, anger)) => Err(format!(
            "{} of 100 vectors have Anger >= 0, e.g. O={:.2} A={:.2} gives Anger {anger}; \
             with O and A both low the table yields +1 +1 -1 -1 = 0",
            counter.len(),
            p.openness,
            p.agreeableness
        )),
    }
}

fn homography_accuracy() -> Outcome {
    let truth = Homography::from_matrix(Matrix3::new(
        0.9, -0.2, 3.0, //
        0.15, 1.1, -2.0, //
        4e-4, -2e-4, 1.0,
    ))
    .unwrap();
    let image: Vec<Point2> = [(0.0, 0.0), (640.0, 0.0), (640.0, 480.0), (0.0, 480.0), (320.0, 240.0), (100.0, 400.0)]
        .iter()
        .map(|&(x, y)| Point2::new(x, y))
        .collect();
    let pairs: Vec<Correspondence> = image
        .iter()
        .map(|&p| Correspondence {
            image: p,
            world: truth.apply(p).unwrap(),
        })
        .collect();
    let h = estimate_homography(&pairs).map_err(|e| e.to_string())?;
    let inv = h.inverse().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for c in &pairs {
        let fwd = h.apply(c.image).unwrap();
        let back = inv.apply(fwd).unwrap();
        worst = worst.max(fwd.distance(c.world)).max(back.distance(c.image));
    }
    ensure(worst < 1e-9, format!("round-trip error {worst:e}"))?;

    let unit: Vec<Point2> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        .iter()
        .map(|&(x, y)| Point2::new(x, y))
        .collect();
    for (scale, label) in [(1.0, "identity"), (2.0, "scale x2")] {
        let pairs: Vec<Correspondence> = unit
            .iter()
            .map(|&p| Correspondence {
                image: p,
                world: Point2::new(scale * p.x, scale * p.y),
            })
            .collect();
        let h = estimate_homography(&pairs).map_err(|e| e.to_string())?;
        let want = Matrix3::new(scale, 0.0, 0.0, 0.0, scale, 0.0, 0.0, 0.0, 1.0);
        let err = (h.matrix() - want).abs().max();
        ensure(err <= 1e-9, format!("{label}: matrix error {err:e}"))?;
    }
    Ok(format!("max round-trip error {worst:.2e}"))
}

fn pearson_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.gen_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let self_r = pearson(&x, &x).map_err(|e| e.to_string())?;
        ensure((self_r - 1.0).abs() <= 1e-12, format!("series {k}: pearson(x,x) = {self_r}"))?;
        let a = if rng.gen_bool(0.5) { rng.gen_range(0.1..5.0) } else { -rng.gen_range(0.1..5.0) };
        let b = rng.gen_range(-20.0..20.0);
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        let r2 = pearson(&ax, &y).map_err(|e| e.to_string())?;
        let err = (r2 - a.signum() * r).abs();
        ensure(err <= 1e-9, format!("series {k}: affine error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("50 series, worst affine error {worst:.1e}"))
}

fn corridor(n: usize) -> SceneDataset {
    generate(&ScenarioSpec::new(ScenarioKind::CorridorLoop, n)).unwrap()
}

fn corridor_preferred_distance() -> Outcome {
    let a = analyze(&corridor(15), &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let d = a.preferred_distance.video_mean.ok_or("no frontal neighbors found")?;
    let want = CORRIDOR_LENGTH / 15.0;
    ensure((d - want).abs() <= 1e-9, format!("preferred distance {d}, expected {want}"))?;
    Ok(format!("{d:.12} m vs {want:.12} m"))
}

fn run_analyze(bin: &str, input: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(bin)
        .args(["analyze", "--input"])
        .arg(input)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), format!("analyze exited with {status}"))
}

fn end_to_end_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_crowd-psyche");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("scene.csv");
    let mut buf = Vec::new();
    write_trajectories(&random_scene(42, 20, 200), &mut buf).map_err(|e| e.to_string())?;
    fs::write(&input, buf).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let (a, b) = (dir.path().join("run-a"), dir.path().join("run-b"));
    run_analyze(bin, &input, &a)?;
    let took = within(Duration::from_secs(10), start)?;
    run_analyze(bin, &input, &b)?;
    let mut bytes = 0;
    for name in ["features.csv", "groups.json", "ocean.json", "emotions.json", "summary.json"] {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, format!("{name} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("5 reports, {bytes} bytes identical, one run {took:?}"))
}

fn density_response() -> Outcome {
    let cfg = ProxemicsConfig::default();
    let mut rows = Vec::new();
    for n in [15, 25, 34] {
        let set = extract_features(&corridor(n), &cfg).map_err(|e| e.to_string())?;
        let count = set.frames.len() as f64;
        let soc = set.frames.iter().map(|f| f.socialization).sum::<f64>() / count;
        let iso = set.frames.iter().map(|f| f.isolation).sum::<f64>() / count;
        rows.push((n, soc, iso));
    }
    for w in rows.windows(2) {
        ensure(w[1].1 > w[0].1, format!("socialization N={} {} !> N={} {}", w[1].0, w[1].1, w[0].0, w[0].1))?;
        ensure(w[1].2 <= w[0].2, format!("isolation N={} {} > N={} {}", w[1].0, w[1].2, w[0].0, w[0].2))?;
    }
    Ok(rows
        .iter()
        .map(|(n, s, i)| format!("N={n}: soc {s:.4} iso {i:.4}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "isolation exactness", isolation_exactness),
        (2, "collectivity exactness", collectivity_exactness),
        (3, "group detection equals transitive-closure oracle", group_oracle_equivalence),
        (4, "emotion table enumeration", emotion_table_enumeration),
        (5, "OCEAN bounds and inversion involution", ocean_bounds_and_involution),
        (6, "cluster members more extraverted than wanderers", cluster_more_extraverted),
        (7, "E high and N low implies negative anger", anger_claim),
        (8, "homography DLT accuracy", homography_accuracy),
        (9, "pearson properties", pearson_properties),
        (10, "corridor preferred distance", corridor_preferred_distance),
        (11, "end-to-end determinism", end_to_end_determinism),
        (12, "density response of features", density_response),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS [{id:>2}] {name}: {detail}"),
            Err(detail) => {
                let known = KNOWN_UNATTAINABLE.contains(&id);
                let tag = if known { " (known unattainable)" } else { "" };
                println!("FAIL [{id:>2}] {name}{tag}: {detail}");
                unexpected += usize::from(!known);
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
