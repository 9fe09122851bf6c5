//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use r3eval::geometry::{d_crit, existence_region, obb_overlap, OrientedBox, Vec2};
use r3eval::ingest::{load_rank_records, GroundTruthObject, LoadedFrame};
use r3eval::matching::{match_frame, ImageBox, Prediction};
use r3eval::metrics::{evaluate, EvalThresholds};
use r3eval::risk::{
    is_imminent, is_potential, rank_object, time_to_stop, RiskParams, RiskRank, WorldState,
};

fn pass(name: &str) {
    println!("PASS: {name}");
}

// --- criterion: TTS formula ---

#[test]
fn criterion_tts_formula() {
    let params = RiskParams::default();
    let highway = time_to_stop(Vec2::new(20.0, 0.0), &params);
    assert!(
        (highway - 2.8666666666666667).abs() < 1e-9,
        "tts(20 m/s) = {highway}"
    );
    let stationary = time_to_stop(Vec2::new(0.0, 0.0), &params);
    assert_eq!(stationary, 0.2, "tts(0) must be exactly 0.2 s");
    pass("TTS formula: 2.866666... s at 20 m/s (1e-9), 0.2 s exactly at rest");
}

// --- criterion: existence-region radius ---

#[test]
fn criterion_existence_region_radius() {
    let region = existence_region(Vec2::ZERO, Vec2::ZERO, 1.0, 7.5).unwrap();
    assert_eq!(region.radius, 3.75);
    pass("existence region radius at t=1 s, a_max=7.5 is exactly 3.75 m");
}

// --- criterion: d_crit closed form ---

#[test]
fn criterion_d_crit_two_vehicles() {
    let a = OrientedBox::new(Vec2::ZERO, 0.0, 4.0, 2.0);
    let b = OrientedBox::new(Vec2::new(30.0, 0.0), 1.2, 4.0, 2.0);
    let d = d_crit(&a, &b).unwrap();
    assert!((d - 20f64.sqrt()).abs() < 1e-12, "d_crit = {d}");
    pass("d_crit(4x2, 4x2) = sqrt(20) within 1e-12");
}

// --- criterion: geometry oracle over 1000 seeded pairs ---

/// Point-in-box with precomputed trig, closed boundaries.
struct LocalFrame {
    center: Vec2,
    cos: f64,
    sin: f64,
    half_length: f64,
    half_width: f64,
}

impl LocalFrame {
    fn of(b: &OrientedBox) -> Self {
        let (sin, cos) = b.heading.sin_cos();
        LocalFrame {
            center: b.center,
            cos,
            sin,
            half_length: b.length * 0.5,
            half_width: b.width * 0.5,
        }
    }

    fn contains(&self, p: Vec2) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let u = self.cos * dx + self.sin * dy;
        let v = -self.sin * dx + self.cos * dy;
        u.abs() <= self.half_length && v.abs() <= self.half_width
    }
}

fn aabb(b: &OrientedBox) -> (Vec2, Vec2) {
    let corners = b.corners();
    let mut lo = corners[0];
    let mut hi = corners[0];
    for c in &corners[1..] {
        lo.x = lo.x.min(c.x);
        lo.y = lo.y.min(c.y);
        hi.x = hi.x.max(c.x);
        hi.y = hi.y.max(c.y);
    }
    (lo, hi)
}

/// Dense sampling oracle: an inclusive n×n lattice over the overlap of
/// the two AABBs (which contains any intersection region), tested for
/// joint containment; run in both directions.
fn sampling_overlap(a: &OrientedBox, b: &OrientedBox, n: usize) -> bool {
    let fa = LocalFrame::of(a);
    let fb = LocalFrame::of(b);
    let (alo, ahi) = aabb(a);
    let (blo, bhi) = aabb(b);
    let lo = Vec2::new(alo.x.max(blo.x), alo.y.max(blo.y));
    let hi = Vec2::new(ahi.x.min(bhi.x), ahi.y.min(bhi.y));
    if lo.x > hi.x || lo.y > hi.y {
        return false;
    }
    let steps = (n - 1) as f64;
    for i in 0..n {
        let x = lo.x + (hi.x - lo.x) * (i as f64 / steps);
        for j in 0..n {
            let y = lo.y + (hi.y - lo.y) * (j as f64 / steps);
            let p = Vec2::new(x, y);
            if fa.contains(p) && fb.contains(p) {
                return true;
            }
        }
    }
    false
}

/// Signed clearance proxy: the largest per-axis gap over the four SAT
/// axes (positive = separated, negative = smallest axis penetration).
fn signed_clearance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let project = |corners: &[Vec2; 4], axis: Vec2| {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for c in corners {
            let p = c.dot(axis);
            min = min.min(p);
            max = max.max(p);
        }
        (min, max)
    };
    let ca = a.corners();
    let cb = b.corners();
    let [a0, a1] = a.axes();
    let [b0, b1] = b.axes();
    let mut margin = f64::NEG_INFINITY;
    for axis in [a0, a1, b0, b1] {
        let (a_min, a_max) = project(&ca, axis);
        let (b_min, b_max) = project(&cb, axis);
        margin = margin.max((b_min - a_max).max(a_min - b_max));
    }
    margin
}

#[test]
fn criterion_geometry_oracle_agreement() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B0);
    let mut compared = 0usize;
    let mut total = 0usize;
    while total < 1000 {
        total += 1;
        let random_box = |rng: &mut ChaCha8Rng| {
            OrientedBox::new(
                Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)),
                rng.gen_range(-3.2..3.2),
                rng.gen_range(0.5..10.0),
                rng.gen_range(0.5..10.0),
            )
        };
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        if signed_clearance(&a, &b).abs() <= 1e-3 {
            continue;
        }
        compared += 1;
        assert_eq!(
            obb_overlap(&a, &b).unwrap(),
            sampling_overlap(&a, &b, 200),
            "disagreement on pair #{total}: a={a:?} b={b:?}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "oracle sweep took {elapsed:?}"
    );
    assert!(compared > 900, "only {compared} pairs compared");
    pass(&format!(
        "geometry oracle: SAT agrees with dense sampling on {compared}/{total} \
         pairs with |clearance| > 1e-3 ({elapsed:?})"
    ));
}

// --- criterion: scenario oracle suite through the CLI ---

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_r3eval"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_scenario_oracle_suite() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["head_on", "parked_near", "parked_far", "crossing", "cut_in"] {
        let out_dir = dir.path().join(kind);
        let generate = run_cli(&[
            "generate",
            "--kind",
            kind,
            "--seed",
            "9",
            "--frames",
            "8",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(generate.status.success(), "generate {kind} failed");
        let frames_path = out_dir.join(format!("{kind}.frames.jsonl"));
        let ranks_path = out_dir.join(format!("{kind}.ranks.jsonl"));
        let rank = run_cli(&[
            "rank",
            "--frames",
            frames_path.to_str().unwrap(),
            "--out",
            ranks_path.to_str().unwrap(),
        ]);
        assert!(rank.status.success(), "rank {kind} failed");

        let expected = load_rank_records(out_dir.join(format!("{kind}.expected.jsonl"))).unwrap();
        let actual = load_rank_records(&ranks_path).unwrap();
        let key = |records: &[r3eval::ingest::RankRecord]| -> BTreeMap<(String, String), RiskRank> {
            records
                .iter()
                .map(|r| ((r.frame_id.clone(), r.object_id.clone()), r.rank))
                .collect()
        };
        let expected_map = key(&expected);
        let actual_map = key(&actual);
        assert_eq!(expected_map.len(), 8, "{kind}: sidecar size");
        assert_eq!(
            actual_map, expected_map,
            "{kind}: rank output diverges from the analytic sidecar"
        );
    }
    pass("scenario oracle suite: cmd_rank reproduces every analytic sidecar");
}

// --- criterion: imminent => potential over 500 seeded pairs ---

fn random_state(rng: &mut ChaCha8Rng) -> WorldState {
    WorldState::new(
        Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)),
        Vec2::new(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0)),
        rng.gen_range(-3.2..3.2),
        rng.gen_range(0.5..6.0),
        rng.gen_range(0.5..3.0),
    )
}

#[test]
fn criterion_imminent_implies_potential() {
    let params = RiskParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51EE7);
    let mut imminent_seen = 0usize;
    for i in 0..500 {
        let ego = random_state(&mut rng);
        let obj = random_state(&mut rng);
        if is_imminent(&ego, &obj, &params).unwrap() {
            imminent_seen += 1;
            assert!(
                is_potential(&ego, &obj, &params).unwrap(),
                "counterexample at pair #{i}: ego={ego:?} obj={obj:?}"
            );
        }
    }
    assert!(imminent_seen > 0, "sample contained no imminent pairs");
    pass(&format!(
        "implication: is_imminent => is_potential on 500 pairs ({imminent_seen} imminent)"
    ));
}

// --- criterion: rigid-motion invariance over 200 seeded scenarios ---

#[test]
fn criterion_rigid_motion_invariance() {
    let params = RiskParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0FF5E7);
    for i in 0..200 {
        let ego = random_state(&mut rng);
        let obj = random_state(&mut rng);
        let angle = rng.gen_range(-3.2..3.2);
        let shift = Vec2::new(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0));
        let moved = |s: &WorldState| {
            WorldState::new(
                s.position.rotated(angle) + shift,
                s.velocity.rotated(angle),
                s.heading + angle,
                s.length,
                s.width,
            )
        };
        assert_eq!(
            rank_object(&ego, &obj, &params).unwrap(),
            rank_object(&moved(&ego), &moved(&obj), &params).unwrap(),
            "rank changed under rigid motion at scenario #{i}"
        );
    }
    pass("rigid-motion invariance: 200 scenarios, all ranks unchanged");
}

// --- criterion: the 4-objects/2-detections recall fixture ---

fn far_object(i: usize) -> GroundTruthObject {
    GroundTruthObject {
        object_id: format!("obj-{i}"),
        class_label: "Vehicle".to_string(),
        world: WorldState::new(
            Vec2::new(250.0 + 80.0 * i as f64, 120.0),
            Vec2::ZERO,
            0.0,
            4.0,
            2.0,
        ),
        image_box: ImageBox::new(60.0 * i as f64, 0.0, 60.0 * i as f64 + 40.0, 40.0),
        velocity_known: true,
        heading_known: true,
    }
}

#[test]
fn criterion_recall_fixture() {
    let objects: Vec<GroundTruthObject> = (0..4).map(far_object).collect();
    let preds = vec![
        Prediction {
            image_box: objects[0].image_box,
            confidence: 0.9,
            class_label: None,
        },
        Prediction {
            image_box: objects[1].image_box,
            confidence: 0.9,
            class_label: None,
        },
    ];
    let frame = LoadedFrame {
        frame: r3eval::ingest::Frame {
            frame_id: "f0".into(),
            timestamp: 0.0,
            ego: WorldState::new(Vec2::ZERO, Vec2::ZERO, 0.0, 4.0, 2.0),
            objects,
        },
        warnings: vec![],
    };
    let mut predictions = BTreeMap::new();
    predictions.insert("f0".to_string(), preds);
    let thresholds = EvalThresholds {
        sweep: vec![0.5],
        ..EvalThresholds::default()
    };
    let report = evaluate(
        vec![Ok(frame)],
        predictions,
        &RiskParams::default(),
        &thresholds,
        None,
    )
    .unwrap();
    assert_eq!(report.totals.other, 4);
    assert_eq!(report.sweep[0].recall, Some(0.5));
    assert_eq!(report.sweep[0].r3_3, Some(0.5));
    pass("recall fixture: 4 ground truths, 2 exact detections -> recall = r3_3 = 0.5");
}

// --- criterion: IoG vs IoU divergence on adjacent actors ---

#[test]
fn criterion_iog_vs_iou_divergence() {
    let gts = vec![
        ("left".to_string(), ImageBox::new(0.0, 0.0, 10.0, 10.0)),
        ("right".to_string(), ImageBox::new(10.0, 0.0, 20.0, 10.0)),
    ];
    // One prediction spanning both actors; per-actor IoU < 0.5.
    let preds = vec![Prediction {
        image_box: ImageBox::new(0.0, 0.0, 21.0, 10.0),
        confidence: 0.9,
        class_label: None,
    }];
    let result = match_frame(&gts, &preds, 0.5, 0.8, 0.5).unwrap();
    let tp_iog = result.per_gt.values().filter(|m| m.is_tp_iog).count();
    let tp_iou = result.per_gt.values().filter(|m| m.is_tp_iou).count();
    assert!(result.per_gt.values().all(|m| m.best_iou < 0.5));
    assert_eq!(tp_iog, 2);
    assert!(tp_iou <= 1);
    pass(&format!(
        "IoG/IoU divergence: spanning prediction gives tp_iog = 2, tp_iou = {tp_iou} <= 1"
    ));
}

// --- criterion: sweep monotonicity on the bundled mini dataset ---

#[test]
fn criterion_sweep_monotonicity_on_mini_dataset() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini");
    let predictions =
        r3eval::ingest::load_predictions(data.join("mini.predictions.jsonl")).unwrap();
    let frames = r3eval::ingest::read_frames(data.join("mini.frames.jsonl")).unwrap();
    let report = evaluate(
        frames,
        predictions,
        &RiskParams::default(),
        &EvalThresholds::default(),
        None,
    )
    .unwrap();
    assert_eq!(report.sweep.len(), 10);
    for series in [
        report.sweep.iter().map(|p| p.r3_1).collect::<Vec<_>>(),
        report.sweep.iter().map(|p| p.r3_2).collect::<Vec<_>>(),
        report.sweep.iter().map(|p| p.r3_3).collect::<Vec<_>>(),
    ] {
        for w in series.windows(2) {
            match (w[0], w[1]) {
                (Some(a), Some(b)) => assert!(b <= a, "r3 increased along the sweep"),
                (None, None) => {}
                other => panic!("definedness changed along the sweep: {other:?}"),
            }
        }
    }
    pass("sweep monotonicity: per-rank r3 non-increasing across the 10-point sweep");
}

// --- criterion: CLI defaults echo the reference configuration ---

#[test]
fn criterion_cli_defaults_config_echo() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini");
    let output = run_cli(&[
        "evaluate",
        "--frames",
        data.join("mini.frames.jsonl").to_str().unwrap(),
        "--predictions",
        data.join("mini.predictions.jsonl").to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let config = &report["config"];
    assert_eq!(config["a_max"], 7.5);
    assert_eq!(config["l_comp"], 0.1);
    assert_eq!(config["dt"], 0.1);
    assert_eq!(config["tau_iog"], 0.8);
    assert_eq!(config["tau_iou"], 0.8);
    let sweep: Vec<f64> = config["sweep"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(
        sweep,
        vec![0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
    );
    assert_eq!(config["class_filter"], serde_json::Value::Null);
    pass("CLI defaults: a_max=7.5, l_comp=0.1, dt=0.1, iog=iou=0.8, sweep 0.5..0.95/0.05");
}
