//! Deterministic synthetic dataset used by the integration and acceptance
//! suites: five 481x321 scenes with exact region ground truth.
#![allow(dead_code)] // each test target uses a different subset

use dsr_core::raster::{save_image, write_label_map, GroundTruth, LabelMap, RasterImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

pub const SCENE_W: usize = 481;
pub const SCENE_H: usize = 321;

#[derive(Clone, Copy)]
enum Shape {
    Ellipse,
    Rect,
}

#[derive(Clone, Copy)]
struct Object {
    shape: Shape,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
}

impl Object {
    fn contains(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 - self.cx;
        let dy = y as f64 - self.cy;
        match self.shape {
            Shape::Ellipse => {
                (dx / self.rx).powi(2) + (dy / self.ry).powi(2) <= 1.0
            }
            Shape::Rect => dx.abs() <= self.rx && dy.abs() <= self.ry,
        }
    }
}

pub struct Scene {
    pub name: &'static str,
    pub img: RasterImage,
    pub gt: GroundTruth,
}

/// One scene: a smoothly shaded, textured background with a set of disjoint
/// high-contrast objects under a low-frequency lighting modulation. The
/// exact object masks are the ground truth (label 0 = background). Objects
/// must be pairwise disjoint (first-hit wins would otherwise corrupt the
/// ground truth), which is asserted up front via their bounding boxes.
fn scene(
    name: &'static str,
    seed: u64,
    bg_from: [f64; 3],
    bg_to: [f64; 3],
    diag: bool,
    objects: &[Object],
) -> Scene {
    for (i, a) in objects.iter().enumerate() {
        for b in &objects[i + 1..] {
            let apart = (a.cx - b.cx).abs() > a.rx + b.rx || (a.cy - b.cy).abs() > a.ry + b.ry;
            assert!(apart, "{name}: objects at ({},{}) and ({},{}) overlap", a.cx, a.cy, b.cx, b.cy);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (SCENE_W, SCENE_H);
    let mut rgb = Vec::with_capacity(w * h * 3);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let hit = objects
                .iter()
                .enumerate()
                .find(|(_, o)| o.contains(x, y));
            let (label, base) = match hit {
                Some((i, o)) => ((i + 1) as u32, o.color),
                None => {
                    let t = if diag {
                        (x as f64 / (w - 1) as f64 + y as f64 / (h - 1) as f64) / 2.0
                    } else {
                        x as f64 / (w - 1) as f64
                    };
                    let mix = [
                        bg_from[0] + t * (bg_to[0] - bg_from[0]),
                        bg_from[1] + t * (bg_to[1] - bg_from[1]),
                        bg_from[2] + t * (bg_to[2] - bg_from[2]),
                    ];
                    (0u32, mix)
                }
            };
            // gentle multi-scale shading keeps cluster centers hunting for a
            // few iterations, the way real photographs do
            let shade = 7.0 * (x as f64 / 53.0 + 0.7).sin()
                + 6.0 * (y as f64 / 31.0 + 1.3).sin()
                + 5.0 * ((x + y) as f64 / 83.0 + 2.1).sin();
            labels.push(label);
            for &c in &base {
                // texture keeps every spectral bin above the log floor
                let v = c + shade + rng.gen_range(-6.0..6.0);
                rgb.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    let img = RasterImage::from_srgb_bytes(w, h, &rgb).unwrap();
    let regions = LabelMap::new(w, h, objects.len() + 1, labels).unwrap();
    Scene {
        name,
        img,
        gt: GroundTruth { regions },
    }
}

/// The five bundled scenes, deterministic across runs.
pub fn desk_scenes() -> Vec<Scene> {
    let el = |cx: f64, cy: f64, rx: f64, ry: f64, color: [f64; 3]| Object {
        shape: Shape::Ellipse,
        cx,
        cy,
        rx,
        ry,
        color,
    };
    let rc = |cx: f64, cy: f64, rx: f64, ry: f64, color: [f64; 3]| Object {
        shape: Shape::Rect,
        cx,
        cy,
        rx,
        ry,
        color,
    };
    vec![
        scene(
            "meadow",
            11,
            [96.0, 128.0, 72.0],
            [150.0, 180.0, 120.0],
            false,
            &[
                el(62.0, 58.0, 30.0, 24.0, [205.0, 60.0, 50.0]),
                el(176.0, 62.0, 34.0, 26.0, [235.0, 200.0, 60.0]),
                el(296.0, 55.0, 26.0, 22.0, [60.0, 70.0, 180.0]),
                el(412.0, 66.0, 30.0, 26.0, [230.0, 230.0, 225.0]),
                el(70.0, 162.0, 26.0, 30.0, [35.0, 35.0, 40.0]),
                el(188.0, 168.0, 40.0, 30.0, [245.0, 150.0, 40.0]),
                el(320.0, 162.0, 34.0, 28.0, [150.0, 50.0, 170.0]),
                el(95.0, 262.0, 34.0, 24.0, [60.0, 190.0, 200.0]),
                el(232.0, 258.0, 30.0, 26.0, [25.0, 90.0, 35.0]),
                el(392.0, 255.0, 44.0, 30.0, [215.0, 65.0, 140.0]),
            ],
        ),
        scene(
            "harbor",
            12,
            [70.0, 90.0, 130.0],
            [140.0, 160.0, 190.0],
            false,
            &[
                rc(78.0, 64.0, 36.0, 26.0, [200.0, 40.0, 40.0]),
                rc(206.0, 58.0, 40.0, 24.0, [240.0, 240.0, 235.0]),
                rc(344.0, 70.0, 34.0, 30.0, [250.0, 170.0, 40.0]),
                rc(440.0, 150.0, 30.0, 34.0, [30.0, 30.0, 35.0]),
                el(92.0, 170.0, 30.0, 28.0, [60.0, 170.0, 80.0]),
                rc(226.0, 166.0, 44.0, 34.0, [170.0, 60.0, 160.0]),
                el(352.0, 180.0, 28.0, 24.0, [230.0, 220.0, 90.0]),
                rc(86.0, 272.0, 40.0, 28.0, [45.0, 110.0, 45.0]),
                rc(232.0, 270.0, 34.0, 26.0, [220.0, 120.0, 160.0]),
                el(384.0, 266.0, 36.0, 28.0, [160.0, 45.0, 40.0]),
            ],
        ),
        scene(
            "dunes",
            13,
            [180.0, 150.0, 100.0],
            [220.0, 195.0, 140.0],
            true,
            &[
                el(64.0, 56.0, 26.0, 20.0, [40.0, 90.0, 40.0]),
                el(170.0, 64.0, 30.0, 24.0, [45.0, 45.0, 120.0]),
                el(282.0, 58.0, 24.0, 20.0, [150.0, 40.0, 110.0]),
                el(396.0, 62.0, 34.0, 24.0, [40.0, 40.0, 40.0]),
                el(78.0, 158.0, 24.0, 30.0, [90.0, 30.0, 30.0]),
                el(196.0, 166.0, 36.0, 28.0, [30.0, 110.0, 130.0]),
                el(330.0, 160.0, 44.0, 36.0, [200.0, 60.0, 30.0]),
                el(70.0, 258.0, 28.0, 24.0, [120.0, 40.0, 150.0]),
                el(196.0, 262.0, 34.0, 22.0, [35.0, 70.0, 35.0]),
                el(356.0, 258.0, 40.0, 28.0, [60.0, 60.0, 190.0]),
            ],
        ),
        scene(
            "orchard",
            14,
            [120.0, 110.0, 95.0],
            [170.0, 160.0, 140.0],
            false,
            &[
                el(88.0, 72.0, 32.0, 26.0, [220.0, 70.0, 60.0]),
                el(218.0, 66.0, 28.0, 30.0, [70.0, 160.0, 60.0]),
                el(340.0, 74.0, 30.0, 24.0, [230.0, 210.0, 70.0]),
                el(438.0, 62.0, 26.0, 22.0, [90.0, 50.0, 140.0]),
                el(100.0, 172.0, 30.0, 28.0, [80.0, 80.0, 200.0]),
                el(236.0, 168.0, 34.0, 26.0, [40.0, 40.0, 45.0]),
                el(374.0, 176.0, 32.0, 28.0, [235.0, 140.0, 50.0]),
                el(92.0, 268.0, 28.0, 26.0, [50.0, 130.0, 140.0]),
                el(226.0, 266.0, 30.0, 24.0, [200.0, 50.0, 120.0]),
                el(382.0, 262.0, 36.0, 28.0, [235.0, 235.0, 230.0]),
            ],
        ),
        scene(
            "cliffs",
            15,
            [90.0, 95.0, 105.0],
            [165.0, 170.0, 175.0],
            true,
            &[
                rc(116.0, 96.0, 62.0, 44.0, [190.0, 120.0, 50.0]),
                rc(294.0, 66.0, 40.0, 30.0, [240.0, 230.0, 220.0]),
                rc(424.0, 84.0, 30.0, 26.0, [60.0, 140.0, 60.0]),
                rc(352.0, 204.0, 52.0, 48.0, [50.0, 110.0, 130.0]),
                rc(66.0, 222.0, 30.0, 34.0, [25.0, 25.0, 30.0]),
                rc(180.0, 214.0, 38.0, 30.0, [210.0, 170.0, 60.0]),
                el(118.0, 292.0, 26.0, 20.0, [170.0, 50.0, 50.0]),
                rc(268.0, 288.0, 32.0, 22.0, [120.0, 60.0, 170.0]),
                el(434.0, 290.0, 28.0, 22.0, [230.0, 90.0, 40.0]),
            ],
        ),
    ]
}

/// Ground truth serialized in the segmentation text format: a header and
/// one `label row start end` run per maximal row run.
pub fn to_seg(gt: &GroundTruth) -> String {
    let map = &gt.regions;
    let (w, h) = (map.width(), map.height());
    let mut out = format!(
        "format ascii cr\nwidth {w}\nheight {h}\nsegments {}\ndata\n",
        map.num_labels()
    );
    for y in 0..h {
        let mut x = 0;
        while x < w {
            let label = map.get(x, y);
            let start = x;
            while x < w && map.get(x, y) == label {
                x += 1;
            }
            out.push_str(&format!("{label} {y} {start} {}\n", x - 1));
        }
    }
    out
}

/// Write the dataset as `img/<name>.png` plus ground truth under `gt/`,
/// mixing the two supported ground-truth formats.
pub fn write_dataset(root: &Path, scenes: &[Scene]) {
    let img_dir = root.join("img");
    let gt_dir = root.join("gt");
    std::fs::create_dir_all(&img_dir).unwrap();
    std::fs::create_dir_all(&gt_dir).unwrap();
    for (i, scene) in scenes.iter().enumerate() {
        save_image(&scene.img, &img_dir.join(format!("{}.png", scene.name))).unwrap();
        if i % 2 == 0 {
            std::fs::write(gt_dir.join(format!("{}.seg", scene.name)), to_seg(&scene.gt))
                .unwrap();
        } else {
            write_label_map(&scene.gt.regions, &gt_dir.join(format!("{}.png", scene.name)))
                .unwrap();
        }
    }
}
