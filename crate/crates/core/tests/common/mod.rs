//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use dggan::dataset::Frame;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Mean over channels and window positions of the textbook SSIM, with the
/// 11×11 Gaussian weights built directly in 2-D.
pub fn brute_force_ssim(a: &Frame, b: &Frame) -> f64 {
    let (h, w) = (a.height(), a.width());
    let (k, sigma, c1, c2) = (11usize, 1.5f64, 0.01f64.powi(2), 0.03f64.powi(2));
    let mut weights = vec![vec![0.0; k]; k];
    let mut total = 0.0;
    for (u, row) in weights.iter_mut().enumerate() {
        for (v, wt) in row.iter_mut().enumerate() {
            let (du, dv) = (u as f64 - 5.0, v as f64 - 5.0);
            *wt = (-(du * du + dv * dv) / (2.0 * sigma * sigma)).exp();
            total += *wt;
        }
    }
    let unit = |f: &Frame, c: usize, y: usize, x: usize| (f.pixels()[(c * h + y) * w + x] as f64 + 1.0) / 2.0;
    let mut per_channel = 0.0;
    for c in 0..3 {
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..=h - k {
            for j in 0..=w - k {
                let (mut ma, mut mb) = (0.0, 0.0);
                for u in 0..k {
                    for v in 0..k {
                        let wt = weights[u][v] / total;
                        ma += wt * unit(a, c, i + u, j + v);
                        mb += wt * unit(b, c, i + u, j + v);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for u in 0..k {
                    for v in 0..k {
                        let wt = weights[u][v] / total;
                        let (da, db) = (unit(a, c, i + u, j + v) - ma, unit(b, c, i + u, j + v) - mb);
                        va += wt * da * da;
                        vb += wt * db * db;
                        cov += wt * da * db;
                    }
                }
                sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        per_channel += sum / count as f64;
    }
    per_channel / 3.0
}

pub fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Frame {
    Frame::new(h, w, (0..3 * h * w).map(|_| rng.random_range(-1.0f32..=1.0)).collect())
}

