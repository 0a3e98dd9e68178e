//! Synthetic portrait datasets for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use relight_core::image::{save_depth, save_gray, save_image};
use relight_core::rng::{rng_from_seed, uniform};
use relight_core::{DepthMap, ImageRgb, Mask};

pub const PROMPT_COUNT: usize = 7;

const INSTRUCTIONS: [&str; 6] = [
    "Soft natural daylight illuminating the face from the front-left.",
    "Warm sunset light coming from the right side.",
    "Even overcast light from above.",
    "Gentle window light from the left with soft shadows.",
    "Bright studio key light from the upper right.",
    "Diffuse light that evenly illuminates the whole face.",
];

/// A lit head on a graded background with its mask and depth.
pub struct Face {
    pub image: ImageRgb,
    pub mask: Mask,
    pub depth: DepthMap,
}

pub fn synthetic_face(size: usize, seed: u64) -> Face {
    let mut rng = rng_from_seed(seed);
    let s = size as f64;
    let cx = s * uniform(&mut rng, 0.4, 0.6);
    let cy = s * uniform(&mut rng, 0.4, 0.6);
    let rx = s * uniform(&mut rng, 0.22, 0.32);
    let ry = s * uniform(&mut rng, 0.28, 0.4);
    let skin = [
        uniform(&mut rng, 0.55, 0.9),
        uniform(&mut rng, 0.4, 0.7),
        uniform(&mut rng, 0.3, 0.6),
    ];
    let bg = [
        uniform(&mut rng, 0.1, 0.9),
        uniform(&mut rng, 0.1, 0.9),
        uniform(&mut rng, 0.1, 0.9),
    ];
    let light = uniform(&mut rng, -0.8, 0.8);

    let radial = |x: usize, y: usize| {
        let dx = (x as f64 + 0.5 - cx) / rx;
        let dy = (y as f64 + 0.5 - cy) / ry;
        (dx, dx * dx + dy * dy)
    };
    let image = ImageRgb::from_fn(size, size, |x, y| {
        let (dx, r2) = radial(x, y);
        if r2 < 1.0 {
            let eye = [(-0.35, -0.2), (0.35, -0.2)].iter().any(|&(ex, ey)| {
                let ex = (x as f64 + 0.5 - (cx + ex * rx)) / (0.12 * rx);
                let ey = (y as f64 + 0.5 - (cy + ey * ry)) / (0.07 * ry);
                ex * ex + ey * ey < 1.0
            });
            let k = if eye { 0.3 } else { 0.75 + 0.25 * (light * dx + 0.5 * (1.0 - r2).sqrt()) };
            skin.map(|c| (c * k).clamp(0.0, 1.0) as f32)
        } else {
            let t = (x + y) as f64 / (2.0 * s);
            bg.map(|c| (c * (0.7 + 0.3 * t)) as f32)
        }
    });
    let mask = Mask::from_fn(size, size, |x, y| if radial(x, y).1 < 1.0 { 1.0 } else { 0.0 });
    let depth = DepthMap::from_fn(size, size, |x, y| (1.0 - radial(x, y).1).max(0.0).sqrt() as f32);
    Face { image, mask, depth }
}

pub struct Dataset {
    pub root: PathBuf,
    pub config: PathBuf,
    pub ids: Vec<String>,
    /// Ids whose mean score is above the threshold.
    pub kept: Vec<String>,
}

pub fn image_id(i: usize) -> String {
    format!("img_{i:04}")
}

/// Writes images, masks, depth, scores, instructions and `config.toml`
/// under `root`. Every fifth image scores below the threshold.
pub fn write_dataset(root: &Path, n: usize, size: usize, resolution: usize) -> Dataset {
    for dir in ["images", "masks", "depth"] {
        std::fs::create_dir_all(root.join(dir)).unwrap();
    }
    let mut scores = std::fs::File::create(root.join("scores.jsonl")).unwrap();
    let mut instructions = std::fs::File::create(root.join("instructions.jsonl")).unwrap();
    let mut ids = Vec::new();
    let mut kept = Vec::new();
    for i in 0..n {
        let id = image_id(i);
        let face = synthetic_face(size, 1000 + i as u64);
        save_image(&face.image, root.join("images").join(format!("{id}.png"))).unwrap();
        save_gray(size, size, face.mask.data(), root.join("masks").join(format!("{id}.png"))).unwrap();
        save_depth(&face.depth, root.join("depth").join(format!("{id}.png"))).unwrap();

        let mean = if i % 5 == 4 { 0.18 } else { 0.25 };
        let row: Vec<f64> = (0..PROMPT_COUNT).map(|p| mean + 0.01 * (p as f64 - 3.0)).collect();
        writeln!(scores, "{}", serde_json::json!({ "image_id": id, "prompt_scores": row })).unwrap();
        let text = INSTRUCTIONS[i % INSTRUCTIONS.len()];
        writeln!(instructions, "{}", serde_json::json!({ "image_id": id, "instruction": text })).unwrap();
        if mean > 0.21 {
            kept.push(id.clone());
        }
        ids.push(id);
    }
    let val = kept.len() / 10;
    let config = root.join("config.toml");
    std::fs::write(
        &config,
        format!(
            r#"target_resolution = {resolution}
global_seed = 7

[paths]
images = "images"
scores = "scores.jsonl"
masks = "masks"
depth = "depth"
instructions = "instructions.jsonl"
output = "out"

[splits]
train = {}
val = {val}
test = {val}
"#,
            kept.len() - 2 * val
        ),
    )
    .unwrap();
    Dataset { root: root.to_path_buf(), config, ids, kept }
}

/// Committed 50-image fixture with sidecars.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/portraits50")
}

pub const FIXTURE_SIZE: usize = 96;
pub const FIXTURE_IMAGES: usize = 50;

/// Copies a directory tree so runs never write into the fixture.
pub fn copy_tree(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let target = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Byte contents of every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
