//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use readorder::geometry::{iou_quad, segment_pair_distance, Point, Quad};
use readorder::metrics::{eval_detection, eval_lines, eval_text};
use readorder::pipeline::dataset::{batch_spec, oracle_line_records};
use readorder::pipeline::{extract_lines, process_page, Config};
use readorder::rescore::{edit_distance, edit_script, fuse, EditKind, FuseRule, ScoredSequence};
use readorder::synth::{corrupt, generate, render_mask, SynthSpec};
use readorder::LineSegment;

const ORDER_PAGES: usize = 200;
const ORDER_TIME_LIMIT: Duration = Duration::from_secs(30);
const HOUGH_MASKS: usize = 100;
const HOUGH_BAND: f64 = 20.0;
const HOUGH_MAX_ENDPOINT_ERROR: f64 = 6.0;
const HOUGH_DIST_THRESHOLD: f64 = 50.0;
const EDIT_PAIRS: usize = 1000;
const EDIT_MAX_LEN: usize = 8;
const EDIT_ALPHABET: &[u8] = b"abcd";
const QUAD_PAIRS: usize = 200;
const QUAD_SAMPLES: usize = 1_000_000;
const QUAD_TOLERANCE: f64 = 0.01;
const RESCORE_TRIALS: usize = 100;
const ORACLE_CONFIDENCE: f64 = 0.95;
const METRIC_PAIRS: usize = 1000;
const NOISY_PAGES: usize = 50;
const IOU_SWEEP: [f64; 3] = [0.5, 0.6, 0.7];
const SMALL_JITTER: f64 = 3.0;
const LARGE_JITTER_FRAC: f64 = 0.25;
const LARGE_JITTER_MIN_MATCH: f64 = 0.95;
const SPECKS: usize = 40;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mixed_base() -> SynthSpec {
    SynthSpec {
        seed: 1000,
        columns_per_region: (3, 8),
        double_column_prob: 0.3,
        ..SynthSpec::default()
    }
}

/// Fraction of mixed-layout pages whose pipeline text equals the ground
/// truth, after degrading each page with `degrade`.
fn order_match_count(pages: usize, degrade: impl Fn(&SynthSpec) -> SynthSpec + Sync) -> usize {
    let base = mixed_base();
    (0..pages)
        .into_par_iter()
        .filter(|&i| {
            let spec = degrade(&batch_spec(&base, i, true));
            let clean = generate(&spec).expect("generate");
            let page = corrupt(&clean, &spec);
            let r = process_page("p", &page.detections, &page.mask, None, &Config::default())
                .expect("pipeline");
            r.text == clean.transcript
        })
        .count()
}

fn end_to_end_order() -> Outcome {
    let start = Instant::now();
    let ok = order_match_count(ORDER_PAGES, SynthSpec::clone);
    let elapsed = start.elapsed();
    outcome(
        ok == ORDER_PAGES && elapsed < ORDER_TIME_LIMIT,
        format!("{ok}/{ORDER_PAGES} pages exact in {:.1}s", elapsed.as_secs_f64()),
    )
}

/// K axis-parallel lines at random positions, spanning the page.
fn random_lines(rng: &mut ChaCha8Rng, k: usize, w: f64, h: f64) -> Vec<LineSegment> {
    let n_h = rng.gen_range(k.saturating_sub(2)..=k.min(2));
    let n_v = k - n_h;
    let mut lines = Vec::new();
    let mut place = |n: usize, extent: f64, span: f64, horizontal: bool, rng: &mut ChaCha8Rng| {
        let spacing = extent / (n + 1) as f64;
        for i in 1..=n {
            let at = i as f64 * spacing + rng.gen_range(-0.1..0.1) * spacing;
            let seg = if horizontal {
                LineSegment::new(Point::new(30.0, at), Point::new(span - 30.0, at))
            } else {
                LineSegment::new(Point::new(at, 30.0), Point::new(at, span - 30.0))
            };
            lines.push(seg.unwrap());
        }
    };
    place(n_h, h, w, true, rng);
    place(n_v, w, h, false, rng);
    lines
}

fn hough_recovery() -> Outcome {
    let (w, h) = (1400usize, 1800usize);
    let failures: Vec<String> = (0..HOUGH_MASKS)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + i as u64);
            let k = 1 + i % 4;
            let src = random_lines(&mut rng, k, w as f64, h as f64);
            let mask = render_mask(&src, w, h, 4, HOUGH_BAND).unwrap();
            let found = extract_lines(&mask, &Config::default()).unwrap();
            let report = eval_lines(&found, &src, HOUGH_DIST_THRESHOLD);
            let worst = src
                .iter()
                .map(|s| {
                    found
                        .iter()
                        .map(|f| segment_pair_distance(f, s))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            let ok = found.len() == k
                && worst <= HOUGH_MAX_ENDPOINT_ERROR
                && report.precision == 1.0
                && report.recall == 1.0;
            (!ok).then(|| format!("mask {i}: K={k} found {} worst {worst:.2}px", found.len()))
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!(
            "{}/{HOUGH_MASKS} masks recovered{}",
            HOUGH_MASKS - failures.len(),
            failures.first().map(|f| format!(" (first failure: {f})")).unwrap_or_default()
        ),
    )
}

fn levenshtein_oracle(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len() + b.len();
    }
    if let Some(&d) = memo.get(&(a.len(), b.len())) {
        return d;
    }
    let sub = levenshtein_oracle(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
    let del = levenshtein_oracle(&a[1..], b, memo) + 1;
    let ins = levenshtein_oracle(a, &b[1..], memo) + 1;
    let d = sub.min(del).min(ins);
    memo.insert((a.len(), b.len()), d);
    d
}

fn random_word(rng: &mut ChaCha8Rng, max: usize) -> Vec<u8> {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| EDIT_ALPHABET[rng.gen_range(0..EDIT_ALPHABET.len())])
        .collect()
}

fn edit_distance_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let mut mismatches = 0;
    for _ in 0..EDIT_PAIRS {
        let (a, b) = (random_word(&mut rng, EDIT_MAX_LEN), random_word(&mut rng, EDIT_MAX_LEN));
        let ops = edit_script(&a, &b);
        let expected = levenshtein_oracle(&a, &b, &mut HashMap::new());
        if edit_distance(&ops) != expected {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{}/{EDIT_PAIRS} pairs match exhaustive Levenshtein", EDIT_PAIRS - mismatches),
    )
}

fn random_convex_quad(rng: &mut ChaCha8Rng, cx: f64, cy: f64) -> Quad {
    loop {
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut angles: Vec<f64> = (0..4)
            .map(|_| phase + rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let v = angles.map_points(|a| {
            let r = rng.gen_range(10.0..50.0);
            Point::new(cx + r * a.cos(), cy + r * a.sin())
        });
        if let Ok(q) = Quad::new(v) {
            if q.area() > 50.0 {
                return q;
            }
        }
    }
}

trait MapPoints {
    fn map_points(&self, f: impl FnMut(f64) -> Point) -> [Point; 4];
}

impl MapPoints for Vec<f64> {
    fn map_points(&self, mut f: impl FnMut(f64) -> Point) -> [Point; 4] {
        [f(self[0]), f(self[1]), f(self[2]), f(self[3])]
    }
}

fn inside(q: &Quad, x: f64, y: f64) -> bool {
    let v = q.vertices();
    (0..4).all(|i| {
        let (a, b) = (v[i], v[(i + 1) % 4]);
        (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0.0
    })
}

fn monte_carlo_iou(a: &Quad, b: &Quad, seed: u64) -> f64 {
    let (ba, bb) = (a.bounding_box(), b.bounding_box());
    let bx = ba.union(&bb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..QUAD_SAMPLES {
        let x = rng.gen_range(bx.x_left..bx.x_right);
        let y = rng.gen_range(bx.y_top..bx.y_bottom);
        let (ia, ib) = (inside(a, x, y), inside(b, x, y));
        both += u64::from(ia && ib);
        either += u64::from(ia || ib);
    }
    both as f64 / either as f64
}

fn quad_iou_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let pairs: Vec<(Quad, Quad)> = (0..QUAD_PAIRS)
        .map(|_| {
            let a = random_convex_quad(&mut rng, 100.0, 100.0);
            let (dx, dy) = (rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
            let b = random_convex_quad(&mut rng, 100.0 + dx, 100.0 + dy);
            (a, b)
        })
        .collect();
    let worst = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| (iou_quad(a, b) - monte_carlo_iou(a, b, 5000 + i as u64)).abs())
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= QUAD_TOLERANCE,
        format!("max |IoU - Monte-Carlo| = {worst:.4} over {QUAD_PAIRS} pairs"),
    )
}

fn scored(items: &[(&str, f64)]) -> ScoredSequence {
    ScoredSequence::new(
        items.iter().map(|(s, _)| s.to_string()).collect(),
        items.iter().map(|(_, p)| *p).collect(),
    )
    .unwrap()
}

fn rescore_behaviour() -> Outcome {
    let chars = scored(&[("A", 0.9), ("B", 0.9)]);
    let line = scored(&[("A", 0.95)]);
    let script = edit_script(&line.symbols, &chars.symbols);
    let delete_only = script.iter().all(|o| matches!(o.kind, EditKind::Equal | EditKind::Insert | EditKind::Delete));
    let fused = fuse(&chars, &line);
    let case_i = delete_only && fused.rule == FuseRule::IndelOnly && fused.sequence == chars;

    let mut violations = Vec::new();
    let mut strict_trials = 0;
    for t in 0..RESCORE_TRIALS {
        let spec = SynthSpec {
            seed: 6000 + t as u64,
            label_flip_prob: 0.1,
            ..SynthSpec::default()
        };
        let clean = generate(&spec).unwrap();
        let page = corrupt(&clean, &spec);
        let flipped_low = page
            .detections
            .iter()
            .zip(&clean.detections)
            .filter(|(d, c)| d.label != c.label && d.score < ORACLE_CONFIDENCE)
            .count();
        let records = oracle_line_records(&clean, ORACLE_CONFIDENCE);
        let r = process_page("p", &page.detections, &page.mask, Some(&records), &Config::default())
            .unwrap();
        let before = eval_text(&r.text, &clean.transcript).unwrap().cr;
        let after = eval_text(r.final_text(), &clean.transcript).unwrap().cr;
        let ok = after >= before && (flipped_low == 0 || after > before);
        strict_trials += usize::from(flipped_low > 0);
        if !ok {
            violations.push(t);
        }
    }
    outcome(
        case_i && violations.is_empty(),
        format!(
            "delete-only case keeps characters: {case_i}; {}/{RESCORE_TRIALS} trials CR non-decreasing, {strict_trials} with flips all strictly improved: {}",
            RESCORE_TRIALS - violations.len(),
            violations.is_empty()
        ),
    )
}

fn metric_identities() -> Outcome {
    let same = eval_text("天地玄黃", "天地玄黃").unwrap();
    let identity = same.cr == 1.0 && same.ar == 1.0;
    let extra = eval_text("abcde", "abcd").unwrap();
    let insertion = extra.cr == 1.0 && extra.ar == 0.75;

    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    let mut ordered = 0;
    for _ in 0..METRIC_PAIRS {
        let pred = String::from_utf8(random_word(&mut rng, 12)).unwrap();
        let mut gt = random_word(&mut rng, 12);
        if gt.is_empty() {
            gt.push(b'a');
        }
        let r = eval_text(&pred, &String::from_utf8(gt).unwrap()).unwrap();
        ordered += usize::from(r.cr >= r.ar);
    }

    let base = mixed_base();
    let sweeps: Vec<Vec<f64>> = (0..NOISY_PAGES)
        .into_par_iter()
        .map(|i| {
            let spec = SynthSpec {
                jitter: 12.0,
                label_flip_prob: 0.05,
                speck_count: 20,
                ..batch_spec(&base, 500 + i, true)
            };
            let clean = generate(&spec).unwrap();
            let page = corrupt(&clean, &spec);
            let r = process_page("p", &page.detections, &page.mask, None, &Config::default()).unwrap();
            let pred: Vec<Quad> = r.document.columns().map(|c| c.quad()).collect();
            eval_detection(&pred, &clean.line_quads(), &IOU_SWEEP)
                .unwrap()
                .thresholds
                .iter()
                .map(|t| t.h_mean)
                .collect()
        })
        .collect();
    let monotone = sweeps.iter().filter(|h| h.windows(2).all(|w| w[0] >= w[1])).count();
    let below_one = sweeps.iter().filter(|h| h[2] < 1.0).count();
    outcome(
        identity && insertion && ordered == METRIC_PAIRS && monotone == NOISY_PAGES,
        format!(
            "identity {identity}, abcd/abcde {insertion}, CR>=AR {ordered}/{METRIC_PAIRS}, \
             H-mean non-increasing {monotone}/{NOISY_PAGES} ({below_one} pages below 1 at IoU 0.7)"
        ),
    )
}

fn robustness() -> Outcome {
    let mild = order_match_count(ORDER_PAGES, |s| SynthSpec {
        jitter: SMALL_JITTER,
        speck_count: SPECKS,
        ..s.clone()
    });
    let heavy = order_match_count(ORDER_PAGES, |s| SynthSpec {
        jitter: LARGE_JITTER_FRAC * s.glyph_size,
        speck_count: SPECKS,
        ..s.clone()
    });
    let heavy_frac = heavy as f64 / ORDER_PAGES as f64;
    outcome(
        mild == ORDER_PAGES && heavy_frac >= LARGE_JITTER_MIN_MATCH,
        format!(
            "specks + {SMALL_JITTER}px jitter: {mild}/{ORDER_PAGES}; specks + {}px jitter: {heavy}/{ORDER_PAGES}",
            LARGE_JITTER_FRAC * SynthSpec::default().glyph_size
        ),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_readorder"))
        .args(args)
        .current_dir(cwd)
        .env_remove("READORDER_CONFIG")
        .output()
        .expect("run readorder");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

/// Every file under `dir`, sorted by path, with contents.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn cli_session(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut outputs = Vec::new();
    let mut step = |name: &str, args: &[&str]| {
        outputs.push((format!("stdout:{name}"), run_cli(args, dir)));
    };
    step(
        "synth",
        &["synth", "--out-dir", "s", "--pages", "4", "--seed", "77", "--mixed-layout", "--line-confidence", "0.95"],
    );
    fs::write(
        dir.join("windows.json"),
        r#"[{"offset":{"x":0,"y":0},"detections":[{"box":[100,10,140,50],"label":"a","score":0.9}]},
            {"offset":{"x":80,"y":0},"detections":[{"box":[22,10,62,50],"label":"a","score":0.8}]}]"#,
    )
    .unwrap();
    fs::write(dir.join("chars.json"), r#"{"symbols":["a","x","c"],"probs":[0.9,0.3,0.8]}"#).unwrap();
    fs::write(dir.join("line.json"), r#"{"symbols":["a","b","c"],"probs":[0.9,0.9,0.9]}"#).unwrap();
    step("config", &["config"]);
    step("lines", &["lines", "--list", "s/manifests.txt"]);
    step("parse", &["parse", "--list", "s/manifests.txt"]);
    step("parse-dir", &["parse", "--list", "s/manifests.txt", "--out-dir", "out"]);
    step("rescore", &["rescore", "--chars", "chars.json", "--line", "line.json"]);
    step("eval", &["eval", "--list", "s/manifests.txt"]);
    step("merge-windows", &["merge-windows", "windows.json"]);
    step("render-debug", &["render-debug", "s/page0002.manifest.json", "--out", "debug.png"]);
    outputs.extend(snapshot(dir));
    outputs
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ra, rb) = (cli_session(a.path()), cli_session(b.path()));
    let differing: Vec<&str> = ra
        .iter()
        .zip(&rb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        ra.len() == rb.len() && differing.is_empty(),
        format!(
            "{} outputs across 8 subcommands byte-identical{}",
            ra.len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {differing:?}") }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("end-to-end reading order", end_to_end_order),
        ("Hough line recovery", hough_recovery),
        ("edit distance oracle", edit_distance_oracle),
        ("quad IoU oracle", quad_iou_oracle),
        ("re-score behaviour", rescore_behaviour),
        ("metric identities", metric_identities),
        ("robustness to noise", robustness),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "acceptance {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
