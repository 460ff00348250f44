//! Seeded synthetic detection corpus with planted occlusions.
//!
//! Each image holds a few isolated objects plus, with some probability, a
//! pair of same-class objects overlapping at IoU 0.32 to 0.48. Every object
//! receives one well-localised detection and a few jittered duplicates, and
//! each image gets low-score false positives scattered at random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsqs_core::eval::GroundTruth;
use qsqs_core::geometry::iou;
use qsqs_core::BoundingBox;

use crate::io::{DetectionFile, GroundTruthFile, ImageDetections};
use crate::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAIR_IOU: (f64, f64) = (0.32, 0.48);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub images: usize,
    pub seed: u64,
    pub classes: u32,
    /// Probability that an image contains an occluded pair.
    pub pair_probability: f64,
    pub max_isolated: usize,
    pub max_duplicates: usize,
    pub max_noise: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            images: 200,
            seed: 0,
            classes: 3,
            pair_probability: 0.7,
            max_isolated: 3,
            max_duplicates: 2,
            max_noise: 3,
        }
    }
}

struct Planted {
    corners: [f64; 4],
    class_id: u32,
    occluded: bool,
}

fn clamp_box(mut c: [f64; 4]) -> [f64; 4] {
    c[0] = c[0].clamp(0.0, WIDTH - 2.0);
    c[1] = c[1].clamp(0.0, HEIGHT - 2.0);
    c[2] = c[2].clamp(c[0] + 1.0, WIDTH);
    c[3] = c[3].clamp(c[1] + 1.0, HEIGHT);
    c
}

fn random_object(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let w: f64 = rng.random_range(30.0..110.0);
    let h = (w * rng.random_range(1.2..2.4)).min(HEIGHT - 10.0);
    let x = rng.random_range(0.0..WIDTH - w);
    let y = rng.random_range(0.0..HEIGHT - h);
    [x, y, x + w, y + h]
}

fn box_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let a = BoundingBox::new(*a, 1.0, 0, 0).expect("valid box");
    let b = BoundingBox::new(*b, 1.0, 0, 0).expect("valid box");
    iou(&a, &b)
}

/// Partner of `front` shifted sideways so the pair overlaps within `PAIR_IOU`.
fn occluded_partner(rng: &mut ChaCha8Rng, front: &[f64; 4]) -> Option<[f64; 4]> {
    let (w, h) = (front[2] - front[0], front[3] - front[1]);
    for _ in 0..32 {
        let target = rng.random_range(PAIR_IOU.0..PAIR_IOU.1);
        let scale = rng.random_range(0.9..1.1);
        let (bw, bh) = (w * scale, h * scale);
        // equal boxes shifted by d overlap at (w - d) / (w + d)
        let d = w * (1.0 - target) / (1.0 + target);
        let dx = if rng.random_bool(0.5) { d } else { -d };
        let dy = rng.random_range(-0.05..0.05) * h;
        let x = front[0] + dx;
        let y = front[1] + dy;
        let cand = [x, y, x + bw, y + bh];
        if cand[0] < 0.0 || cand[1] < 0.0 || cand[2] > WIDTH || cand[3] > HEIGHT {
            continue;
        }
        let v = box_iou(front, &cand);
        if (PAIR_IOU.0..=PAIR_IOU.1).contains(&v) {
            return Some(cand);
        }
    }
    None
}

fn jitter(rng: &mut ChaCha8Rng, c: &[f64; 4], frac: f64) -> [f64; 4] {
    let (w, h) = (c[2] - c[0], c[3] - c[1]);
    clamp_box([
        c[0] + rng.random_range(-frac..frac) * w,
        c[1] + rng.random_range(-frac..frac) * h,
        c[2] + rng.random_range(-frac..frac) * w,
        c[3] + rng.random_range(-frac..frac) * h,
    ])
}

fn plant(rng: &mut ChaCha8Rng, p: &SynthParams) -> Vec<Planted> {
    let mut objects = Vec::new();
    for _ in 0..rng.random_range(1..=p.max_isolated.max(1)) {
        objects.push(Planted {
            corners: random_object(rng),
            class_id: rng.random_range(0..p.classes),
            occluded: false,
        });
    }
    if rng.random_bool(p.pair_probability) {
        let front = random_object(rng);
        if let Some(back) = occluded_partner(rng, &front) {
            let class_id = rng.random_range(0..p.classes);
            objects.push(Planted {
                corners: front,
                class_id,
                occluded: false,
            });
            objects.push(Planted {
                corners: back,
                class_id,
                occluded: true,
            });
        }
    }
    objects
}

fn synth_image(index: usize, p: &SynthParams) -> Result<(ImageDetections, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(index as u64);
    let image_id = format!("img{index:04}");
    let objects = plant(&mut rng, p);

    let mut gt_boxes = Vec::with_capacity(objects.len());
    let mut dets = Vec::new();
    for (k, o) in objects.iter().enumerate() {
        gt_boxes.push(BoundingBox::new(o.corners, 1.0, o.class_id, k)?);
        let score = if o.occluded {
            rng.random_range(0.45..0.85)
        } else {
            rng.random_range(0.7..0.99)
        };
        dets.push((jitter(&mut rng, &o.corners, 0.04), score, o.class_id));
        for _ in 0..rng.random_range(0..=p.max_duplicates) {
            let dup_score = score * rng.random_range(0.3..0.8);
            dets.push((jitter(&mut rng, &o.corners, 0.12), dup_score, o.class_id));
        }
    }
    for _ in 0..rng.random_range(0..=p.max_noise) {
        let corners = random_object(&mut rng);
        dets.push((corners, rng.random_range(0.01..0.35), rng.random_range(0..p.classes)));
    }

    let detections = dets
        .into_iter()
        .enumerate()
        .map(|(k, (c, s, cls))| BoundingBox::new(c, s, cls, k))
        .collect::<qsqs_core::Result<Vec<_>>>()?;
    let ignore = vec![false; gt_boxes.len()];
    let ground_truth = GroundTruth::new(image_id.clone(), gt_boxes, ignore)?;
    Ok((ImageDetections { image_id, detections }, ground_truth))
}

/// Generates the detection and ground-truth files; identical for equal params.
pub fn generate(p: &SynthParams) -> Result<(DetectionFile, GroundTruthFile)> {
    let mut dets = Vec::with_capacity(p.images);
    let mut gts = Vec::with_capacity(p.images);
    for i in 0..p.images {
        let (d, g) = synth_image(i, p)?;
        dets.push(d);
        gts.push(g);
    }
    Ok((DetectionFile { images: dets }, GroundTruthFile { images: gts }))
}
