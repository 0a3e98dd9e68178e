//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use relight_core::blur::gaussian_kernel;
use relight_core::engine::{
    degrade, read_manifest, run_batch, PipelineConfig, RunOptions, MANIFEST_FILE, PARTIAL_FILE,
    SPLITS_FILE,
};
use relight_core::filtering::Split;
use relight_core::image::{encode_png, load_image, load_mask};
use relight_core::intrinsic::{color_normalize, extract_albedo, msr_reflectance, MsrConfig};
use relight_core::metrics::{ssim, Direction, MetricReport, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
use relight_core::relight::{depth_to_normals, lambertian_shade, sample_light, shading_field, LightSample};
use relight_core::rng::{rng_from_seed, unit, uniform};
use relight_core::shadowgen::{composite_shadow, generate_pattern, place_on_gray, PatternKind, ShadowParams};
use relight_core::{DepthMap, ImageRgb, Mask};

use common::{copy_tree, fixture_dir, snapshot, synthetic_face, write_dataset};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn random_image(w: usize, h: usize, seed: u64, lo: f32) -> ImageRgb {
    let mut rng = rng_from_seed(seed);
    ImageRgb::from_fn(w, h, |_, _| {
        let mut s = || lo + (1.0 - lo) * unit(&mut rng) as f32;
        [s(), s(), s()]
    })
}

fn relight_bin(args: &[&str], cwd: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relight"));
    cmd.args(args).current_dir(cwd).stdout(Stdio::null()).stderr(Stdio::null());
    cmd
}

// ---------------------------------------------------------------------------

fn filter_gate() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let mut scores = std::fs::File::create(dir.join("scores.jsonl")).unwrap();
    let mut expected: HashSet<String> = HashSet::new();
    let mut rng = rng_from_seed(11);
    // 12,000 clear passes plus 3,000 rows at, just above and just below the threshold.
    for i in 0..15_000 {
        let id = format!("id_{i:05}");
        let row: Vec<f64> = match i {
            0..=11_999 if i % 1000 == 0 => vec![0.21 + 1e-12; 7],
            0..=11_999 => (0..7).map(|_| uniform(&mut rng, 0.22, 0.35)).collect(),
            _ if i % 3 == 0 => vec![0.21; 7],
            _ if i % 3 == 1 => {
                let mut r = vec![0.0; 7];
                r[6] = 1.47;
                r
            }
            _ => (0..7).map(|_| uniform(&mut rng, 0.1, 0.2099)).collect(),
        };
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        if mean > 0.21 {
            expected.insert(id.clone());
        }
        writeln!(scores, "{}", serde_json::json!({ "image_id": id, "prompt_scores": row })).unwrap();
    }
    drop(scores);
    std::fs::write(
        dir.join("config.toml"),
        "global_seed = 3\n[paths]\nscores = \"scores.jsonl\"\noutput = \"out\"\n",
    )
    .unwrap();

    let start = Instant::now();
    let status = relight_bin(&["filter", "--config", "config.toml"], dir).status().unwrap();
    let elapsed = start.elapsed();
    ensure(status.success(), || format!("filter exited with {status}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:.2?}, limit 1s"))?;

    let text = std::fs::read_to_string(dir.join("out").join(SPLITS_FILE)).unwrap();
    let mut counts: BTreeMap<Split, usize> = BTreeMap::new();
    let mut kept = HashSet::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let split: Split = v["split"].as_str().unwrap().parse().map_err(|e| format!("{e}"))?;
        *counts.entry(split).or_default() += 1;
        kept.insert(v["image_id"].as_str().unwrap().to_owned());
    }
    ensure(kept == expected, || {
        format!("kept {} ids, expected {}", kept.len(), expected.len())
    })?;
    let got = (counts.get(&Split::Train), counts.get(&Split::Val), counts.get(&Split::Test));
    ensure(got == (Some(&10_000), Some(&1_000), Some(&1_000)), || format!("split counts {counts:?}"))?;
    ensure(!counts.contains_key(&Split::Unassigned), || format!("split counts {counts:?}"))?;
    Ok(format!(
        "{} of 15000 kept (strict > 0.21), splits 10000/1000/1000 in {elapsed:.2?}",
        kept.len()
    ))
}

/// Clamped 1-D kernel folded onto source indices: `fold[x][j]` is the weight
/// sample `x` takes from index `j`.
fn folded_weights(n: usize, sigma: f64) -> Vec<Vec<f64>> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    (0..n as i64)
        .map(|x| {
            let mut row = vec![0.0; n];
            for (i, w) in k.iter().enumerate() {
                let j = (x + i as i64 - r).clamp(0, n as i64 - 1) as usize;
                row[j] += w;
            }
            row
        })
        .collect()
}

/// Dense clamped blur plus log-ratio, evaluated naively per pixel.
fn msr_oracle(img: &ImageRgb, mask: &Mask, cfg: &MsrConfig) -> Vec<f64> {
    let (w, h) = img.dims();
    let fg: Vec<f64> = img
        .data()
        .chunks_exact(3)
        .zip(mask.data())
        .flat_map(|(p, &m)| p.iter().map(move |&v| (v * m) as f64).collect::<Vec<_>>())
        .collect();
    let mut out = vec![0.0; fg.len()];
    for (&sigma, &weight) in cfg.scales.iter().zip(&cfg.weights) {
        let (fx, fy) = (folded_weights(w, sigma), folded_weights(h, sigma));
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut s = 0.0;
                    for j in 0..h {
                        for i in 0..w {
                            s += fy[y][j] * fx[x][i] * fg[(j * w + i) * 3 + c];
                        }
                    }
                    let v = fg[(y * w + x) * 3 + c];
                    out[(y * w + x) * 3 + c] += weight * ((v + cfg.epsilon).ln() - (s + cfg.epsilon).ln());
                }
            }
        }
    }
    out
}

fn msr_oracle_check() -> Outcome {
    let start = Instant::now();
    let cfg = MsrConfig::default();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let img = random_image(32, 32, seed, 0.0);
        let mut rng = rng_from_seed(seed + 100);
        let (cx, cy, r) = (uniform(&mut rng, 10.0, 22.0), uniform(&mut rng, 10.0, 22.0), uniform(&mut rng, 8.0, 14.0));
        let mask = Mask::from_fn(32, 32, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d < r { 1.0 } else { 0.0 }
        });
        let got = msr_reflectance(&img, &mask, &cfg).map_err(|e| e.to_string())?;
        let want = msr_oracle(&img, &mask, &cfg);
        for (a, b) in got.data().iter().zip(&want) {
            worst = worst.max((*a as f64 - b).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max |error| {worst:e} > 1e-6"))?;
    for v in [0.0f32, 0.37, 1.0] {
        let img = ImageRgb::filled(32, 32, v);
        let mask = Mask::filled(32, 32, 1.0);
        let r = msr_reflectance(&img, &mask, &cfg).map_err(|e| e.to_string())?;
        let n = color_normalize(&r, &mask, cfg.norm_percentiles).map_err(|e| e.to_string())?;
        ensure(n.data().iter().all(|&x| x == 0.5), || format!("constant {v} did not normalize to 0.5"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("20 images, max |error| {worst:.1e}; constants map to 0.5 ({:.2?})", start.elapsed()))
}

fn retinex_invariance() -> Outcome {
    let cfg = MsrConfig { epsilon: 0.0, ..MsrConfig::default() };
    let mut compared = 0usize;
    for seed in 0..10u64 {
        let (w, h) = (24 + seed as usize * 3, 40 - seed as usize);
        let img = random_image(w, h, 500 + seed, 0.1);
        let mask = Mask::filled(w, h, 1.0);
        let base = msr_reflectance(&img, &mask, &cfg).map_err(|e| e.to_string())?;
        for k in [0.5f32, 2.0] {
            let scaled = ImageRgb::new(w, h, img.data().iter().map(|v| v * k).collect()).unwrap();
            let r = msr_reflectance(&scaled, &mask, &cfg).map_err(|e| e.to_string())?;
            ensure(r.data() == base.data(), || format!("seed {seed}, k = {k}: reflectance changed"))?;
            compared += r.data().len();
        }
    }
    Ok(format!("10 images, k in {{0.5, 2}}, {compared} samples bit-identical"))
}

fn shading_bounds() -> Outcome {
    let mut rng = rng_from_seed(77);
    for t in 0..100 {
        let (w, h) = (8 + t % 17, 8 + (t * 7) % 13);
        let albedo = random_image(w, h, 900 + t as u64, 0.0);
        let (fx, fy, amp) = (uniform(&mut rng, 0.05, 0.6), uniform(&mut rng, 0.05, 0.6), uniform(&mut rng, 0.0, 3.0));
        let depth = DepthMap::from_fn(w, h, |x, y| (amp * ((x as f64 * fx).sin() * (y as f64 * fy).cos())) as f32);
        let light = sample_light(&mut rng, (0.25, 0.45));
        let normals = depth_to_normals(&depth, uniform(&mut rng, 0.5, 8.0)).map_err(|e| e.to_string())?;
        let field = shading_field(&normals, &light);
        ensure(field.iter().all(|&s| s >= light.ambient && s <= 1.0), || {
            format!("triple {t}: shading outside [{}, 1]", light.ambient)
        })?;
        let mask = Mask::filled(w, h, 1.0);
        let shaded = lambertian_shade(&albedo, &normals, &light, &mask).map_err(|e| e.to_string())?;
        ensure(shaded.data().iter().zip(albedo.data()).all(|(s, a)| s <= a), || {
            format!("triple {t}: output exceeds albedo")
        })?;
    }
    let albedo = random_image(16, 16, 3, 0.0);
    let flat = depth_to_normals(&DepthMap::filled(16, 16, 0.4), 4.0).map_err(|e| e.to_string())?;
    let overhead = LightSample { direction: [0.0, 0.0, 1.0], ambient: 0.3 };
    let shaded = lambertian_shade(&albedo, &flat, &overhead, &Mask::filled(16, 16, 1.0)).map_err(|e| e.to_string())?;
    let err = shaded.data().iter().zip(albedo.data()).map(|(s, a)| (s - a).abs()).fold(0.0f32, f32::max);
    ensure(err <= 1e-6, || format!("n·l = 1 differs from albedo by {err}"))?;
    Ok(format!("100 triples within [ambient, 1] and below albedo; n·l = 1 error {err:.1e}"))
}

fn hemisphere_sampling() -> Outcome {
    let mut rng = rng_from_seed(2024);
    let zs: Vec<f64> = (0..10_000).map(|_| sample_light(&mut rng, (0.25, 0.45)).direction[2]).collect();
    ensure(zs.iter().all(|&z| z >= 0.0), || "negative z drawn".into())?;
    let mean = zs.iter().sum::<f64>() / zs.len() as f64;
    ensure((mean - 0.5).abs() <= 0.02, || format!("E[z] = {mean:.4}"))?;
    Ok(format!("10000 draws, all z >= 0, E[z] = {mean:.4}"))
}

fn shadow_ranges() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = write_dataset(tmp.path(), 1250, 64, 64);
    let cfg = PipelineConfig::load(&data.config).map_err(|e| e.to_string())?;
    let summary = run_batch(&cfg, &RunOptions { workers: 4, ..RunOptions::default() }).map_err(|e| e.to_string())?;
    let out = tmp.path().join("out");
    let records = read_manifest(&out.join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
    ensure(records.len() == 1000 && summary.failed.is_empty(), || {
        format!("{} records, {} failures", records.len(), summary.failed.len())
    })?;
    for r in &records {
        let p = &r.params;
        ensure((0.35..=0.6).contains(&p.opacity), || format!("{}: opacity {}", r.image_id, p.opacity))?;
        ensure((0.15..=0.25).contains(&p.alpha), || format!("{}: alpha {}", r.image_id, p.alpha))?;
    }

    // Rebuild the pre-shadow image of 20 records and check the darkening bound.
    for r in records.iter().step_by(50) {
        let gt = load_image(tmp.path().join("images").join(format!("{}.png", r.image_id))).unwrap();
        let mask = load_mask(tmp.path().join("masks").join(format!("{}.png", r.image_id))).unwrap();
        let depth = relight_core::image::load_depth(tmp.path().join("depth").join(format!("{}.png", r.image_id))).unwrap();
        let mut rng = rng_from_seed(r.seed);
        let (albedo, alpha) = extract_albedo(&gt, &mask, &cfg.msr, &mut rng).map_err(|e| e.to_string())?;
        let light = sample_light(&mut rng, cfg.ambient_range);
        ensure(alpha == r.params.alpha && light.direction == r.params.light_direction, || {
            format!("{}: replay diverged from manifest", r.image_id)
        })?;
        let normals = depth_to_normals(&depth, cfg.gradient_scale).map_err(|e| e.to_string())?;
        let before = lambertian_shade(&albedo, &normals, &light, &mask).map_err(|e| e.to_string())?;
        let params = ShadowParams {
            kind: r.params.pattern_kind,
            opacity: r.params.opacity,
            blur_sigma: r.params.blur_sigma,
            pattern_seed: r.params.pattern_seed,
        };
        let pattern = generate_pattern(params.kind, 64, 64, params.pattern_seed).map_err(|e| e.to_string())?;
        let after = composite_shadow(&before, &pattern, &mask, &params).map_err(|e| e.to_string())?;
        for (o, i) in after.data().iter().zip(before.data()) {
            let bound = (1.0 - params.opacity) * *i as f64;
            ensure(*o as f64 >= bound - 1e-7, || format!("{}: {o} < (1 - opacity)·{i}", r.image_id))?;
        }
        let final_img = place_on_gray(&after, &mask, cfg.shadow.gray).unwrap().clamp01();
        let written = std::fs::read(out.join(&r.input_path)).unwrap();
        ensure(encode_png(&final_img).unwrap() == written, || {
            format!("{}: replayed image differs from the written one", r.image_id)
        })?;
    }
    Ok("1000 records: opacity in [0.35, 0.6], alpha in [0.15, 0.25]; darkening bound holds on 20 replayed images".into())
}

fn pattern_sanity() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for kind in PatternKind::ALL {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..100u64 {
            let a = generate_pattern(kind, 64, 64, seed).map_err(|e| e.to_string())?;
            let b = generate_pattern(kind, 64, 64, seed).map_err(|e| e.to_string())?;
            let same = a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
            ensure(same, || format!("{kind} seed {seed} not repeatable"))?;
            let mean = a.mean();
            ensure(mean > 0.05 && mean < 0.95, || format!("{kind} seed {seed}: mean occlusion {mean:.3}"))?;
            lo = lo.min(mean);
            hi = hi.max(mean);
        }
        lines.push(format!("{kind} {lo:.2}-{hi:.2}"));
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("10 kinds x 100 seeds repeatable, occlusion {} ({:.2?})", lines.join(", "), start.elapsed()))
}

fn end_to_end_determinism() -> Outcome {
    let start = Instant::now();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        copy_tree(&fixture_dir(), d.path());
    }
    let run = |dir: &Path, workers: &str, extra: &[&str]| {
        let mut args = vec!["run", "--config", "config.toml", "--workers", workers];
        args.extend_from_slice(extra);
        relight_bin(&args, dir).status().unwrap()
    };
    ensure(run(dirs[0].path(), "1", &[]).success(), || "1-worker run failed".into())?;
    ensure(run(dirs[1].path(), "8", &[]).success(), || "8-worker run failed".into())?;
    let (one, eight) = (snapshot(&dirs[0].path().join("out")), snapshot(&dirs[1].path().join("out")));
    let manifest = Path::new(MANIFEST_FILE);
    ensure(one.contains_key(manifest) && one.get(manifest) == eight.get(manifest), || {
        "manifests differ between 1 and 8 workers".into()
    })?;
    let degraded = one.keys().filter(|p| p.starts_with("degraded")).count();
    ensure(degraded == 40 && one == eight, || "output files differ between 1 and 8 workers".into())?;

    let third = dirs[2].path();
    let mut child = relight_bin(&["run", "--config", "config.toml", "--workers", "2"], third).spawn().unwrap();
    let partial = third.join("out").join(PARTIAL_FILE);
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut rows = 0;
    while rows < 5 && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(20));
        rows = std::fs::read_to_string(&partial).map(|t| t.lines().count()).unwrap_or(0);
    }
    child.kill().unwrap();
    child.wait().unwrap();
    ensure(!third.join("out").join(MANIFEST_FILE).exists(), || "run finished before the kill".into())?;
    ensure(run(third, "4", &["--resume"]).success(), || "resumed run failed".into())?;
    let resumed = std::fs::read(third.join("out").join(MANIFEST_FILE)).unwrap();
    ensure(Some(&resumed) == one.get(manifest), || "resumed manifest differs".into())?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "40 triplets byte-identical for 1 vs 8 workers; killed after {rows} rows, resumed manifest identical ({:.2?})",
        start.elapsed()
    ))
}

/// Direct 2-D window sums at every valid position.
fn naive_ssim(a: &ImageRgb, b: &ImageRgb) -> f64 {
    let (w, h) = a.dims();
    let (la, lb) = (a.luma(), b.luma());
    let r = (SSIM_WINDOW / 2) as i64;
    let mut win = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            win.push((dx, dy, (-((dx * dx + dy * dy) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()));
        }
    }
    let total: f64 = win.iter().map(|t| t.2).sum();
    let (c1, c2) = (SSIM_K1 * SSIM_K1, SSIM_K2 * SSIM_K2);
    let mut sum = 0.0;
    let mut count = 0;
    for y in r..h as i64 - r {
        for x in r..w as i64 - r {
            let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(dx, dy, wt) in &win {
                let i = ((y + dy) * w as i64 + x + dx) as usize;
                let wt = wt / total;
                mx += wt * la[i];
                my += wt * lb[i];
                xx += wt * la[i] * la[i];
                yy += wt * lb[i] * lb[i];
                xy += wt * la[i] * lb[i];
            }
            let (vx, vy, cov) = (xx - mx * mx, yy - my * my, xy - mx * my);
            sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

fn ssim_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let a = random_image(64, 64, 3000 + seed, 0.0);
        let noise = random_image(64, 64, 4000 + seed, 0.0);
        let t = seed as f32 / 20.0;
        let b = ImageRgb::new(64, 64, a.data().iter().zip(noise.data()).map(|(x, n)| (1.0 - t) * x + t * n).collect()).unwrap();
        let got = ssim(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((got - naive_ssim(&a, &b)).abs());
        let same = ssim(&a, &a).map_err(|e| e.to_string())?;
        ensure(same == 1.0, || format!("ssim(x, x) = {same}"))?;
    }
    ensure(worst <= 1e-6, || format!("max |Δ| {worst:e}"))?;
    let report = MetricReport { name: "LPIPS".into(), mean: 0.3002, std: 0.0904, n: 100, direction: Direction::LowerBetter };
    let text = report.formatted();
    ensure(text == "0.3002 ± 0.0904", || format!("formatted as {text:?}"))?;
    Ok(format!("20 pairs, max |Δ| {worst:.1e}; ssim(x, x) = 1; renders \"{text}\""))
}

fn throughput() -> Outcome {
    const TARGET: f64 = 20.0;
    const CORES: usize = 8;
    let cfg = PipelineConfig::default();
    let inputs: Vec<(Vec<u8>, Mask, DepthMap)> = (0..24u64)
        .map(|i| {
            let face = synthetic_face(512, 7000 + i);
            (encode_png(&face.image).unwrap(), face.mask, face.depth)
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(CORES).build().unwrap();
    let start = Instant::now();
    let failures = pool.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .filter(|(i, (png, mask, depth))| {
                let gt = image::load_from_memory(png).unwrap().to_rgb32f();
                let gt = ImageRgb::new(512, 512, gt.into_raw()).unwrap();
                match degrade(&format!("t{i}"), &gt, mask, depth, *i as u64, &cfg) {
                    Ok(d) => encode_png(&d.degraded).and(encode_png(&d.ground_truth)).is_err(),
                    Err(_) => true,
                }
            })
            .count()
    });
    let rate = inputs.len() as f64 / start.elapsed().as_secs_f64();
    ensure(failures == 0, || format!("{failures} degrade failures"))?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores >= CORES {
        ensure(rate >= TARGET, || format!("{rate:.1} img/s on {cores} cores, target {TARGET}"))?;
        Ok(format!("{rate:.1} img/s at 512x512 with {CORES} workers on {cores} cores"))
    } else {
        let projected = rate * CORES as f64 / cores as f64;
        ensure(projected >= TARGET, || {
            format!("{rate:.1} img/s on {cores} core(s), {projected:.1} img/s projected at {CORES}, target {TARGET}")
        })?;
        Ok(format!(
            "{rate:.1} img/s measured on {cores} core(s); {projected:.1} img/s projected at {CORES} cores (host has fewer than {CORES} cores, not measured directly)"
        ))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("filter gate", filter_gate),
        ("MSR oracle", msr_oracle_check),
        ("Retinex illumination invariance", retinex_invariance),
        ("shading bounds", shading_bounds),
        ("hemisphere sampling", hemisphere_sampling),
        ("shadow ranges", shadow_ranges),
        ("pattern determinism and sanity", pattern_sanity),
        ("end-to-end determinism", end_to_end_determinism),
        ("SSIM oracle", ssim_oracle),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
