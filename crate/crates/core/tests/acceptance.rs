//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails for a reason other than the host.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use orbitforge::assess::{apply_filter, FilterPolicy, ScoreReport};
use orbitforge::camera::rng::XorShift64Star;
use orbitforge::camera::{build_orbit, project, CameraPose, Intrinsics, FINE_RADIUS_RANGE};
use orbitforge::caption::{
    content_f1, f1_score, parse_annotation, pattern_metric, reward, tokens, PatternLexicon, DEFAULT_TAU,
};
use orbitforge::geometry::{normalize, AxisRotation};
use orbitforge::math::{Axis, Vec3};
use orbitforge::mesh::{compute_bounds, load_mesh, Mesh};
use orbitforge::pipeline::{
    compute_savings_report, ingest, run_stage, two_pass_speedup, Manifest, PipelineConfig, ScorerSelection, Stage,
    Status,
};
use orbitforge::raster::{default_lighting, render_asset, shade, visibility, RenderPreset};

enum Outcome {
    Pass(String),
    Fail(String),
    /// Cannot be evaluated on this host; reported red, not counted as a regression.
    Blocked(String),
}

type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

// 1
fn orbit_geometry() -> Outcome {
    outcome((|| {
        let rig = build_orbit(85, FINE_RADIUS_RANGE, 7, Intrinsics::square(512)).map_err(|e| e.to_string())?;
        let expected = 360.0 / 85.0;
        let mut worst = 0.0f64;
        for i in 0..85 {
            let a = rig.poses[i].position;
            let b = rig.poses[(i + 1) % 85].position;
            let step = a.cross(b).y.atan2(a.dot(b)).to_degrees();
            worst = worst.max((step - expected).abs());
            ensure(step < 5.0, format!("step {i} is {step} deg"))?;
        }
        ensure(worst <= 1e-9, format!("spacing error {worst:e}"))?;
        Ok(format!("spacing {expected:.6} deg, max error {worst:.1e}"))
    })())
}

// 2
fn normalization() -> Outcome {
    outcome((|| {
        let mut rng = XorShift64Star::new(2);
        let (mut worst_c, mut worst_e, mut worst_i) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..200 {
            let nv = 3 + (rng.next_u64() % 60) as usize;
            let mesh = common::random_mesh(&mut rng, nv, 1 + nv);
            let rotation = (k % 3 == 0).then(|| AxisRotation {
                axis: [Axis::X, Axis::Y, Axis::Z][k % 3],
                degrees: 360.0 * rng.next_unit(),
            });
            let (n, _) = normalize(&mesh, rotation).map_err(|e| e.to_string())?;
            let c = n.vertices.iter().fold(Vec3::ZERO, |a, &v| a + v) / n.vertices.len() as f64;
            worst_c = worst_c.max(c.dot(c).sqrt());
            let extent = compute_bounds(&n).map_err(|e| e.to_string())?.extent();
            worst_e = worst_e.max((extent.max_element() - 1.0).abs());
            let (again, _) = normalize(&n, None).map_err(|e| e.to_string())?;
            for (a, b) in n.vertices.iter().zip(&again.vertices) {
                let d = *a - *b;
                worst_i = worst_i.max(d.x.abs().max(d.y.abs()).max(d.z.abs()));
            }
        }
        ensure(worst_c <= 1e-9, format!("centroid {worst_c:e}"))?;
        ensure(worst_e <= 1e-9, format!("extent error {worst_e:e}"))?;
        ensure(worst_i <= 1e-9, format!("idempotence error {worst_i:e}"))?;
        Ok(format!("200 meshes: |centroid| {worst_c:.1e}, extent error {worst_e:.1e}, rerun drift {worst_i:.1e}"))
    })())
}

/// Nearest front-facing hit along the ray through a pixel centre.
fn ray_oracle(mesh: &Mesh, pose: &CameraPose, intr: &Intrinsics, x: u32, y: u32) -> Option<u32> {
    let f = (pose.target - pose.position) / (pose.target - pose.position).dot(pose.target - pose.position).sqrt();
    let r = f.cross(pose.up);
    let r = r / r.dot(r).sqrt();
    let u = r.cross(f);
    let t = (intr.fov_y_deg.to_radians() / 2.0).tan();
    let nx = (x as f64 + 0.5) / intr.width as f64 * 2.0 - 1.0;
    let ny = 1.0 - (y as f64 + 0.5) / intr.height as f64 * 2.0;
    let dir = f + r * (nx * t * intr.aspect) + u * (ny * t);
    let mut best: Option<(f64, u32)> = None;
    for (i, tri) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|k| mesh.vertices[k as usize]);
        let (e1, e2) = (b - a, c - a);
        let p = dir.cross(e2);
        let det = e1.dot(p);
        if det <= 1e-14 {
            continue;
        }
        let s = pose.position - a;
        let bu = s.dot(p) / det;
        let q = s.cross(e1);
        let bv = dir.dot(q) / det;
        if bu < 0.0 || bv < 0.0 || bu + bv > 1.0 {
            continue;
        }
        let dist = e2.dot(q) / det;
        if dist > 0.0 && best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, i as u32));
        }
    }
    best.map(|(_, i)| i)
}

// 3
fn rasterizer_oracle() -> Outcome {
    outcome((|| {
        let mut rng = XorShift64Star::new(3);
        let intr = Intrinsics::square(64);
        let (mut covered, mut agree, mut worst_scene) = (0usize, 0usize, 1.0f64);
        for _ in 0..50 {
            let vertices: Vec<Vec3> = (0..60)
                .map(|_| Vec3::new(rng.next_unit() - 0.5, rng.next_unit() - 0.5, rng.next_unit() - 0.5) * 1.2)
                .collect();
            let triangles = (0..20).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
            let mesh = Mesh::from_triangles(vertices, triangles);
            let az = 2.0 * std::f64::consts::PI * rng.next_unit();
            let el = rng.next_unit() - 0.5;
            let pose = CameraPose {
                position: Vec3::new(az.sin() * el.cos(), el.sin(), az.cos() * el.cos()) * 2.5,
                target: Vec3::ZERO,
                up: Vec3::UNIT_Y,
                frame_index: 0,
            };
            let vis = visibility(&mesh, &pose, &intr).map_err(|e| e.to_string())?;
            let (mut c, mut a) = (0, 0);
            for y in 0..64 {
                for x in 0..64 {
                    let got = vis[(y * 64 + x) as usize];
                    let want = ray_oracle(&mesh, &pose, &intr, x, y);
                    if got.is_some() || want.is_some() {
                        c += 1;
                        a += (got == want) as usize;
                    }
                }
            }
            covered += c;
            agree += a;
            if c > 0 {
                worst_scene = worst_scene.min(a as f64 / c as f64);
            }
        }
        let rate = agree as f64 / covered as f64;
        ensure(covered > 10_000, format!("only {covered} covered pixels"))?;
        ensure(rate >= 0.999, format!("agreement {rate:.5}"))?;
        Ok(format!(
            "agreement {:.4}% over {covered} covered pixels (worst scene {:.4}%)",
            100.0 * rate,
            100.0 * worst_scene
        ))
    })())
}

// 4
fn camera_raster_consistency() -> Outcome {
    outcome((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mesh = load_mesh(&common::write_textured_cube(dir.path())).map_err(|e| e.to_string())?;
        let (mesh, _) = normalize(&mesh, None).map_err(|e| e.to_string())?;
        let preset = RenderPreset::fine();
        let rig = preset.build_rig(11).map_err(|e| e.to_string())?;
        let frames = render_asset(&mesh, &rig, &preset, &default_lighting()).map_err(|e| e.to_string())?;
        let intr = rig.intrinsics;
        let (mut worst, mut checked, mut off_frame) = (0.0f64, 0, 0);
        for (pose, img) in rig.poses.iter().zip(&frames) {
            for &v in &mesh.vertices {
                let p = project(v, pose, &intr).map_err(|e| e.to_string())?.pixel;
                // a corner outside the viewport has no pixel to land on
                if p[0] < 0.0 || p[1] < 0.0 || p[0] > intr.width as f64 || p[1] > intr.height as f64 {
                    off_frame += 1;
                    continue;
                }
                checked += 1;
                let mut nearest = f64::INFINITY;
                for y in (p[1] - 2.0).floor().max(0.0) as u32..((p[1] + 2.0).ceil() as u32).min(intr.height) {
                    for x in (p[0] - 2.0).floor().max(0.0) as u32..((p[0] + 2.0).ceil() as u32).min(intr.width) {
                        if img.alpha(x, y) > 0 {
                            let d = (x as f64 + 0.5 - p[0]).abs().max((y as f64 + 0.5 - p[1]).abs());
                            nearest = nearest.min(d);
                        }
                    }
                }
                worst = worst.max(nearest);
                ensure(
                    nearest <= 1.0,
                    format!("frame {} vertex {v:?} at {p:?} is {nearest} px from foreground", pose.frame_index),
                )?;
            }
        }
        let textured = frames.iter().any(|f| f.rgba.chunks_exact(4).any(|p| p[3] > 0 && p[2] as u16 > p[0] as u16 + 60));
        ensure(textured, "texture colours not visible")?;
        Ok(format!(
            "radius {:.3}: {checked} in-frame vertex projections within {worst:.3} px, {off_frame} outside the viewport",
            rig.radius
        ))
    })())
}

// 5
fn lighting_constants() -> Outcome {
    outcome((|| {
        let l = default_lighting();
        ensure(l.ambient_intensity == 2.0, format!("ambient {}", l.ambient_intensity))?;
        ensure(l.point_lights.len() == 3, "expected three point lights")?;
        let mut values = Vec::new();
        for light in &l.point_lights {
            ensure(light.intensity == 8.0, format!("intensity {}", light.intensity))?;
            let d = light.position.dot(light.position).sqrt();
            ensure(d == 2.0, format!("light distance {d}"))?;
            let normal = light.position / d;
            let v = shade([1.0; 3], Vec3::ZERO, normal, &l);
            ensure(v == [1.0; 3], format!("plane facing light at {:?} shades to {v:?}", light.position))?;
            values.push(v[0]);
        }
        // clamp(0.25 * (2.0 + 8.0 / 2^2))
        let expected = (0.25f64 * (2.0 + 8.0 / 4.0)).clamp(0.0, 1.0);
        ensure(values.iter().all(|&v| v == expected), "mismatch with hand value")?;
        Ok("ambient 2.0, 3 x 8.0 at distance 2, facing-plane radiance 1.0".into())
    })())
}

// 6
fn filter_semantics() -> Outcome {
    outcome((|| {
        let p = FilterPolicy::default();
        let report = |a: f64, q: f64| ScoreReport {
            asset_id: String::new(),
            aesthetic: a,
            quality: q,
            scorer_id: String::new(),
            per_view: None,
        };
        for (a, q, keep) in [(4.5, 4.2, true), (4.5, 3.9, false), (4.0, 4.0, false), (4.0, 4.5, false), (4.0001, 4.0001, true)] {
            let d = apply_filter(&report(a, q), &p);
            ensure(d.keep == keep, format!("({a}, {q}) keep={}", d.keep))?;
        }
        Ok("(4.5,4.2) keep, (4.5,3.9) reject, (4.0,4.0) reject".into())
    })())
}

/// Independent P/R: vocabulary count vectors, exhaustive pairwise cosine,
/// plain left-to-right sums.
fn pr_oracle(pred: &[String], refs: &[String], tau: f64) -> (f64, f64) {
    let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
    let vecs = |ss: &[String], vocab: &mut BTreeMap<String, usize>| -> Vec<Vec<u64>> {
        ss.iter()
            .map(|s| {
                let mut v = vec![0u64; 64];
                for t in s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
                    let n = vocab.len();
                    let id = *vocab.entry(t.to_lowercase()).or_insert(n);
                    v[id] += 1;
                }
                v
            })
            .collect()
    };
    let pv = vecs(pred, &mut vocab);
    let rv = vecs(refs, &mut vocab);
    let cos = |a: &Vec<u64>, b: &Vec<u64>| {
        let dot: u64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: u64 = a.iter().map(|x| x * x).sum();
        let nb: u64 = b.iter().map(|x| x * x).sum();
        if na == 0 || nb == 0 {
            0.0
        } else {
            dot as f64 / ((na * nb) as f64).sqrt()
        }
    };
    let side = |xs: &Vec<Vec<u64>>, ys: &Vec<Vec<u64>>| {
        let mut total = 0.0;
        for x in xs {
            let mut best = 0.0f64;
            for y in ys {
                best = best.max(cos(x, y));
            }
            if best >= tau {
                total += best;
            }
        }
        total / xs.len() as f64
    };
    (side(&pv, &rv), side(&rv, &pv))
}

const VOCAB: &[&str] = &[
    "the", "car", "red", "front", "back", "side", "appear", "360", "degree", "self", "rotation", "wheel", "mug",
    "blue", "A", "Circle", "around",
];

fn random_sentence(rng: &mut XorShift64Star, max_tokens: u64) -> String {
    let n = rng.next_u64() % (max_tokens + 1);
    let words: Vec<&str> = (0..n).map(|_| VOCAB[(rng.next_u64() % VOCAB.len() as u64) as usize]).collect();
    let mut s = words.join(if rng.next_u64() % 4 == 0 { "-" } else { " " });
    s.push('.');
    s
}

// 7
fn reward_formulas() -> Outcome {
    outcome((|| {
        let s = vec!["A red car.".to_string(), "It turns around.".to_string()];
        let c = content_f1(&s, &s, DEFAULT_TAU).map_err(|e| e.to_string())?;
        ensure(c.f1 == 1.0, format!("identical F1 {}", c.f1))?;
        let c = content_f1(&["A red car."], &["A red car.", "Blue sky overhead."], DEFAULT_TAU).map_err(|e| e.to_string())?;
        ensure((c.precision, c.recall) == (1.0, 0.5), "P=1,R=0.5 fixture")?;
        ensure((c.f1 - 2.0 / 3.0).abs() < 1e-15 && f1_score(1.0, 0.5) == c.f1, format!("F1 {}", c.f1))?;
        let lex = PatternLexicon::default();
        ensure(pattern_metric("Seen from the front, then the back.", &lex).metric == 0.4, "2-keyword M")?;
        ensure(
            pattern_metric("front side back 360-degree appear self-rotation", &lex).metric == 1.0,
            "saturated M",
        )?;

        let mut rng = XorShift64Star::new(7);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..10_000 {
            let n = 1 + rng.next_u64() % 6;
            let answer: Vec<String> = (0..n).map(|_| random_sentence(&mut rng, 8)).collect();
            let m = 1 + rng.next_u64() % 6;
            let refs: Vec<String> = (0..m).map(|_| random_sentence(&mut rng, 8)).collect();
            let text = format!("<think>Subject: x</think><answer>{}</answer>", answer.join(" "));
            let Ok(ann) = parse_annotation(&text) else { continue };
            let r = reward(&ann, &refs, &lex, rng.next_unit()).map_err(|e| e.to_string())?;
            for v in [r.precision, r.recall, r.f1, r.pattern_metric] {
                ensure((0.0..=1.0).contains(&v), format!("component {v} out of range"))?;
            }
            ensure((r.reward - (r.f1 + r.pattern_metric)).abs() == 0.0, "reward != F1 + M")?;
            lo = lo.min(r.reward);
            hi = hi.max(r.reward);
        }
        ensure((0.0..=2.0).contains(&lo) && (0.0..=2.0).contains(&hi), format!("reward range [{lo}, {hi}]"))?;

        let mut worst = 0.0f64;
        let mut instances = 0;
        for n in 1..=5u64 {
            for m in 1..=5u64 {
                for _ in 0..200 {
                    let pred: Vec<String> = (0..n).map(|_| random_sentence(&mut rng, 6)).collect();
                    let refs: Vec<String> = (0..m).map(|_| random_sentence(&mut rng, 6)).collect();
                    let tau = rng.next_unit();
                    let got = content_f1(&pred, &refs, tau).map_err(|e| e.to_string())?;
                    let (p, r) = pr_oracle(&pred, &refs, tau);
                    worst = worst.max((got.precision - p).abs()).max((got.recall - r).abs());
                    instances += 1;
                }
            }
        }
        ensure(worst <= 1e-12, format!("oracle deviation {worst:e}"))?;
        ensure(tokens("A-b").len() == 2, "tokenizer")?;
        Ok(format!(
            "F1 fixtures exact, M 0.4/1.0, 10000 fuzzed rewards in [{lo:.3}, {hi:.3}], {instances} oracle instances max dev {worst:.1e}"
        ))
    })())
}

fn write_meshes(dir: &Path, meshes: &[(&str, String)]) {
    for (name, text) in meshes {
        std::fs::write(dir.join(name), text).unwrap();
    }
}

fn prepared(input: &Path, out: &Path, workers: usize, scorer: ScorerSelection, policy: FilterPolicy) -> (PipelineConfig, Manifest) {
    let mut cfg = PipelineConfig::new(input, out);
    cfg.workers = workers;
    cfg.seed = 42;
    cfg.scorer = scorer;
    cfg.policy = policy;
    let m = Manifest::open(&cfg.manifest_path()).unwrap();
    (cfg, m)
}

fn all_stages(cfg: &PipelineConfig, m: &Manifest) -> Result<(), String> {
    ingest(cfg, m).map_err(|e| e.to_string())?;
    for s in [Stage::Coarse, Stage::Filter, Stage::Fine] {
        let summary = run_stage(s, cfg, m).map_err(|e| e.to_string())?;
        ensure(summary.failed == 0, format!("{s:?} had failures"))?;
    }
    Ok(())
}

// 8
fn pipeline_end_to_end() -> Outcome {
    outcome((|| {
        let started = Instant::now();
        let input = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_meshes(
            input.path(),
            &[
                ("a_cube.obj", common::cube_obj(1.0)),
                ("b_tetra.obj", common::tetra_obj()),
                ("c_ball.obj", common::sphere_obj(12, 24, 5, 0.2)),
            ],
        );
        let b_id = orbitforge::pipeline::asset_id_for(common::tetra_obj().as_bytes());
        let mut ext = orbitforge::assess::ExternalScorerConfig::new(common::echo_scorer());
        ext.process.args = vec!["--override".into(), format!("{b_id}=1.0")];
        let scorer = ScorerSelection::External(ext);

        let mut runs = Vec::new();
        for workers in [1, 4] {
            let out = tempfile::tempdir().map_err(|e| e.to_string())?;
            let (cfg, m) = prepared(input.path(), out.path(), workers, scorer.clone(), FilterPolicy::default());
            all_stages(&cfg, &m)?;
            let fine: Vec<String> = m.with_status(Status::FineRendered).into_iter().map(|r| r.asset_id).collect();
            ensure(fine.len() == 2, format!("{} fine-rendered assets", fine.len()))?;
            ensure(!fine.contains(&b_id), "rejected asset was fine-rendered")?;
            ensure(m.get(&b_id).map(|r| r.status) == Some(Status::Rejected), "B not rejected")?;
            let kept: Vec<String> = m
                .records()
                .into_iter()
                .filter(|r| r.decision.is_some_and(|d| d.keep))
                .map(|r| r.asset_id)
                .collect();
            ensure(kept == fine, "fine set differs from keep decisions")?;

            let before = std::fs::read(m.path()).map_err(|e| e.to_string())?;
            drop(m);
            let m = Manifest::open(&cfg.manifest_path()).map_err(|e| e.to_string())?;
            all_stages(&cfg, &m)?;
            ensure(std::fs::read(m.path()).map_err(|e| e.to_string())? == before, "rerun changed the manifest")?;
            runs.push((common::png_bytes(out.path()), out));
        }
        ensure(runs[0].0.len() == 3 * 9 + 2 * 86, format!("{} images", runs[0].0.len()))?;
        ensure(runs[0].0 == runs[1].0, "image bytes differ between 1 and 4 workers")?;
        let elapsed = started.elapsed();
        ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
        Ok(format!(
            "2 of 3 fine-rendered, rerun no-op, {} images identical across 1/4 workers, {:.1} s",
            runs[0].0.len(),
            elapsed.as_secs_f64()
        ))
    })())
}

// 9
fn two_pass_economics() -> Outcome {
    outcome((|| {
        let started = Instant::now();
        let input = tempfile::tempdir().map_err(|e| e.to_string())?;
        let meshes: Vec<(String, String)> =
            (0..10).map(|i| (format!("ball_{i}.obj"), common::sphere_obj(50, 100, 100 + i, 0.15))).collect();
        let refs: Vec<(&str, String)> = meshes.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
        write_meshes(input.path(), &refs);
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let keep_all = FilterPolicy {
            aesthetic_threshold: -1.0,
            quality_threshold: -1.0,
        };
        let (cfg, m) = prepared(input.path(), out.path(), 1, ScorerSelection::Builtin, keep_all);
        all_stages(&cfg, &m)?;
        let records = m.records();
        ensure(records.iter().all(|r| r.triangles == 9800), "unexpected triangle count")?;
        let report = compute_savings_report(&records).map_err(|e| e.to_string())?;
        let ratio = report.fine_ms_mean / report.coarse_ms_mean;
        ensure(report.coarse_assets == 10 && report.fine_assets == 10, "expected 10 assets per pass")?;
        ensure(report.coarse_ms_mean <= report.fine_ms_mean / 10.0, format!("fine/coarse cost ratio {ratio:.1}"))?;

        let (coarse_px, fine_px) = (8u64 * 256 * 256, 85u64 * 512 * 512);
        ensure(coarse_px == 524_288 && fine_px == 22_282_240, "pixel budgets")?;
        ensure(fine_px as f64 / coarse_px as f64 == 42.5, "pixel ratio")?;
        let (c_c, c_f) = (report.coarse_ms_mean, report.fine_ms_mean);
        ensure((two_pass_speedup(1e-12, c_f, 0.0) - 1.0).abs() < 1e-9, "r=0 limit")?;
        ensure((two_pass_speedup(c_c, c_f, 1.0) - c_f / c_c).abs() < 1e-9 * (c_f / c_c), "r=1 limit")?;
        ensure(report.speedup == c_f / (c_c + (1.0 - report.rejection_fraction) * c_f), "reported S")?;
        let elapsed = started.elapsed();
        ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
        Ok(format!(
            "coarse {c_c:.0} ms vs fine {c_f:.0} ms per asset ({ratio:.1}x), S(r=1) = {:.1}, {:.1} s",
            c_f / c_c,
            elapsed.as_secs_f64()
        ))
    })())
}

// 10
fn parallel_scaling() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = (|| {
        let input = tempfile::tempdir().map_err(|e| e.to_string())?;
        let meshes: Vec<(String, String)> =
            (0..8).map(|i| (format!("ball_{i}.obj"), common::sphere_obj(20, 40, 200 + i, 0.2))).collect();
        let refs: Vec<(&str, String)> = meshes.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
        write_meshes(input.path(), &refs);
        let keep_all = FilterPolicy {
            aesthetic_threshold: -1.0,
            quality_threshold: -1.0,
        };
        let mut timings = Vec::new();
        let mut images = Vec::new();
        let mut dirs = Vec::new();
        for workers in [1, 4] {
            let out = tempfile::tempdir().map_err(|e| e.to_string())?;
            let (cfg, m) = prepared(input.path(), out.path(), workers, ScorerSelection::Builtin, keep_all);
            ingest(&cfg, &m).map_err(|e| e.to_string())?;
            run_stage(Stage::Coarse, &cfg, &m).map_err(|e| e.to_string())?;
            run_stage(Stage::Filter, &cfg, &m).map_err(|e| e.to_string())?;
            let t = Instant::now();
            let s = run_stage(Stage::Fine, &cfg, &m).map_err(|e| e.to_string())?;
            timings.push(t.elapsed().as_secs_f64());
            ensure(s.advanced == 8, format!("{} assets fine-rendered", s.advanced))?;
            images.push(common::png_bytes(&out.path().join("fine")));
            dirs.push(out);
        }
        ensure(images[0] == images[1], "fine images differ between 1 and 4 workers")?;
        Ok(timings[0] / timings[1])
    })();
    match result {
        Err(e) => Outcome::Fail(e),
        Ok(speedup) if speedup >= 3.0 => Outcome::Pass(format!("{speedup:.2}x with 4 workers on {cores} cores, outputs identical")),
        Ok(speedup) if cores < 4 => Outcome::Blocked(format!(
            "{speedup:.2}x with 4 workers; host exposes {cores} core(s), the 4-core requirement cannot be evaluated; outputs identical"
        )),
        Ok(speedup) => Outcome::Fail(format!("{speedup:.2}x with 4 workers on {cores} cores")),
    }
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("orbit geometry", orbit_geometry),
        ("normalization", normalization),
        ("rasterizer oracle", rasterizer_oracle),
        ("camera/raster consistency", camera_raster_consistency),
        ("lighting constants", lighting_constants),
        ("filter semantics", filter_semantics),
        ("reward formulas", reward_formulas),
        ("pipeline end-to-end", pipeline_end_to_end),
        ("two-pass economics", two_pass_economics),
        ("parallel scaling", parallel_scaling),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Outcome::Pass(d) => println!("criterion {n:>2} [{name}]: PASS ({secs:.1} s) {d}"),
            Outcome::Fail(d) => {
                failures += 1;
                println!("criterion {n:>2} [{name}]: FAIL ({secs:.1} s) {d}");
            }
            Outcome::Blocked(d) => println!("criterion {n:>2} [{name}]: FAIL (blocked by host) ({secs:.1} s) {d}"),
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
