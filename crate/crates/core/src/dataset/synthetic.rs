//! Seeded moving-shapes videos.
//!
//! Each video has a smoothly striped background that is either still or
//! scrolls slowly, and one to `max_shapes` solid squares or circles moving at
//! constant velocity with elastic wall bounces. Pixels are the area coverage
//! of a 4×4 supersampling grid, so sub-pixel motion still changes the image,
//! and are quantised to 8-bit levels like a decoded image would be.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{denormalize_u8, mix64, normalize_u8, DataSource, DatasetManifest, Frame, Motion, Video, CHANNELS};
use crate::error::{DgganError, Result};

const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug)]
enum Outline {
    Square,
    Circle,
}

#[derive(Clone, Debug)]
struct Shape {
    outline: Outline,
    half: f32,
    pos: [f32; 2],
    vel: [f32; 2],
    color: [f32; CHANNELS],
}

impl Shape {
    /// Centre at time `t`, reflecting off the frame borders.
    fn centre(&self, t: f32, extent: [f32; 2]) -> [f32; 2] {
        let mut c = [0.0; 2];
        for a in 0..2 {
            let lo = self.half;
            let span = (extent[a] - 2.0 * self.half).max(0.0);
            if span == 0.0 {
                c[a] = extent[a] * 0.5;
                continue;
            }
            let u = (self.pos[a] - lo + self.vel[a] * t).rem_euclid(2.0 * span);
            c[a] = lo + if u > span { 2.0 * span - u } else { u };
        }
        c
    }

    fn covers(&self, centre: [f32; 2], x: f32, y: f32) -> bool {
        let (dx, dy) = (x - centre[0], y - centre[1]);
        match self.outline {
            Outline::Square => dx.abs() <= self.half && dy.abs() <= self.half,
            Outline::Circle => dx * dx + dy * dy <= self.half * self.half,
        }
    }
}

#[derive(Clone, Debug)]
struct Background {
    base: [f32; CHANNELS],
    tint: [f32; CHANNELS],
    dir: [f32; 2],
    period: f32,
    scroll: f32,
}

impl Background {
    fn at(&self, x: f32, y: f32, t: f32) -> [f32; CHANNELS] {
        let phase = (x * self.dir[0] + y * self.dir[1] + self.scroll * t) / self.period;
        let wave = (phase * std::f32::consts::TAU).sin();
        std::array::from_fn(|c| self.base[c] + self.tint[c] * wave)
    }
}

struct Scene {
    background: Background,
    shapes: Vec<Shape>,
}

fn random_color(rng: &mut ChaCha8Rng, lo: f32, hi: f32) -> [f32; CHANNELS] {
    [rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi)]
}

fn sample_speed(rng: &mut ChaCha8Rng, lo: f32, hi: f32) -> f32 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn random_scene(rng: &mut ChaCha8Rng, h: usize, w: usize, motion: &Motion) -> Scene {
    let angle = rng.random_range(0.0..std::f32::consts::TAU);
    let scroll = if rng.random_bool(0.5) { sample_speed(rng, 0.0, motion.scroll_speed_max) } else { 0.0 };
    let background = Background {
        base: random_color(rng, -0.8, -0.2),
        tint: random_color(rng, 0.05, 0.2),
        dir: [angle.cos(), angle.sin()],
        period: rng.random_range(0.5..1.0) * w.max(h) as f32,
        scroll,
    };
    let n = rng.random_range(1..=motion.max_shapes);
    let side = h.min(w) as f32;
    let shapes = (0..n)
        .map(|_| {
            let half = rng.random_range(side / 10.0..=side / 5.0);
            let speed = sample_speed(rng, motion.speed_min, motion.speed_max);
            let heading = rng.random_range(0.0..std::f32::consts::TAU);
            Shape {
                outline: if rng.random_bool(0.5) { Outline::Square } else { Outline::Circle },
                half,
                pos: [rng.random_range(half..=(w as f32 - half)), rng.random_range(half..=(h as f32 - half))],
                vel: [speed * heading.cos(), speed * heading.sin()],
                color: random_color(rng, -0.2, 1.0),
            }
        })
        .collect();
    Scene { background, shapes }
}

fn render(scene: &Scene, h: usize, w: usize, t: f32) -> Frame {
    let extent = [w as f32, h as f32];
    let centres: Vec<[f32; 2]> = scene.shapes.iter().map(|s| s.centre(t, extent)).collect();
    let mut pixels = vec![0.0f32; CHANNELS * h * w];
    let step = 1.0 / SUPERSAMPLE as f32;
    let norm = 1.0 / (SUPERSAMPLE * SUPERSAMPLE) as f32;
    for py in 0..h {
        for px in 0..w {
            let mut acc = [0.0f32; CHANNELS];
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let x = px as f32 + (sx as f32 + 0.5) * step;
                    let y = py as f32 + (sy as f32 + 0.5) * step;
                    let top = scene.shapes.iter().zip(&centres).rev().find(|(s, c)| s.covers(**c, x, y));
                    let color = match top {
                        Some((s, _)) => s.color,
                        None => scene.background.at(x, y, t),
                    };
                    for (a, v) in acc.iter_mut().zip(color) {
                        *a += v;
                    }
                }
            }
            for (c, a) in acc.iter().enumerate() {
                let v = (a * norm).clamp(-1.0, 1.0);
                pixels[(c * h + py) * w + px] = normalize_u8(denormalize_u8(v));
            }
        }
    }
    Frame::new(h, w, pixels)
}

/// Video number `index` of the synthetic set described by `manifest`. Each
/// video has its own random stream, so it does not depend on how many
/// others are generated.
pub fn generate_video(manifest: &DatasetManifest, index: usize) -> Video {
    let (h, w) = manifest.resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(manifest.seed, index as u64));
    let scene = random_scene(&mut rng, h, w, &manifest.motion);
    (0..manifest.frames_per_sequence).map(|t| render(&scene, h, w, t as f32)).collect()
}

pub fn generate_synthetic(manifest: &DatasetManifest) -> Result<Vec<Video>> {
    if manifest.source != DataSource::Synthetic {
        return Err(DgganError::Config("generate_synthetic needs source = synthetic".into()));
    }
    manifest.validate()?;
    Ok((0..manifest.num_sequences).map(|i| generate_video(manifest, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize, frames: usize) -> DatasetManifest {
        DatasetManifest { num_sequences: n, frames_per_sequence: frames, ..Default::default() }
    }

    #[test]
    fn frames_are_in_range_and_moving() {
        let videos = generate_synthetic(&manifest(1, 8)).unwrap();
        assert_eq!(videos.len(), 1);
        let v = &videos[0];
        assert_eq!(v.len(), 8);
        for (i, a) in v.iter().enumerate() {
            assert!(a.in_range());
            assert_eq!((a.height(), a.width()), (32, 32));
            for b in &v[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn generation_is_bit_identical_per_seed() {
        let m = manifest(3, 4);
        let a = generate_synthetic(&m).unwrap();
        let b = generate_synthetic(&m).unwrap();
        for (va, vb) in a.iter().zip(&b) {
            for (fa, fb) in va.iter().zip(vb) {
                let ba: Vec<u32> = fa.pixels().iter().map(|v| v.to_bits()).collect();
                let bb: Vec<u32> = fb.pixels().iter().map(|v| v.to_bits()).collect();
                assert_eq!(ba, bb);
            }
        }
        let other = generate_synthetic(&DatasetManifest { seed: 1, ..m }).unwrap();
        assert_ne!(a[0][0], other[0][0]);
    }

    #[test]
    fn still_motion_gives_identical_frames() {
        let m = DatasetManifest { motion: Motion::still(), ..manifest(4, 8) };
        for v in generate_synthetic(&m).unwrap() {
            assert!(v.iter().all(|f| *f == v[0]));
        }
    }

    #[test]
    fn bounce_stays_inside() {
        let s = Shape { outline: Outline::Square, half: 3.0, pos: [5.0, 5.0], vel: [7.3, -4.1], color: [0.0; 3] };
        for t in 0..100 {
            let c = s.centre(t as f32, [32.0, 24.0]);
            assert!((3.0..=29.0).contains(&c[0]) && (3.0..=21.0).contains(&c[1]), "{c:?}");
        }
    }

    #[test]
    fn rejects_bad_resolution() {
        let m = DatasetManifest { resolution: (30, 30), ..manifest(1, 4) };
        assert!(matches!(generate_synthetic(&m), Err(DgganError::Config(_))));
    }
}
