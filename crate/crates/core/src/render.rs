//! Qualitative grids: the input frames on top, then ground truth, coarse
//! prediction, guide-shifted frame, refined prediction and the guide itself.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::dataset::{denormalize_u8, Frame, Grid};
use crate::error::{DgganError, Result};
use crate::inference::Prediction;

pub const GUTTER: u32 = 2;
const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

/// Guide values shown as `(g + 1)/2`, so zero difference is mid-grey.
pub fn guide_frame(g: &Grid) -> Frame {
    Frame::new(g.height(), g.width(), g.values().iter().map(|&v| v.clamp(-1.0, 1.0) as f32).collect())
}

fn blit(img: &mut RgbImage, f: &Frame, x0: u32, y0: u32) {
    let (h, w) = (f.height(), f.width());
    let p = f.pixels();
    for y in 0..h {
        for x in 0..w {
            let px: [u8; 3] = std::array::from_fn(|c| denormalize_u8(p[c * h * w + y * w + x]));
            img.put_pixel(x0 + x as u32, y0 + y as u32, Rgb(px));
        }
    }
}

/// Lays out `rows` of optional frames on a white background; missing cells
/// stay blank.
pub fn grid_image(rows: &[Vec<Option<&Frame>>]) -> RgbImage {
    let first = rows.iter().flatten().flatten().next().expect("grid needs at least one frame");
    let (h, w) = (first.height() as u32, first.width() as u32);
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0) as u32;
    let mut img = RgbImage::from_pixel(GUTTER + cols * (w + GUTTER), GUTTER + rows.len() as u32 * (h + GUTTER), BACKGROUND);
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if let Some(f) = cell {
                assert!(f.height() as u32 == h && f.width() as u32 == w, "grid frames must share one size");
                blit(&mut img, f, GUTTER + c as u32 * (w + GUTTER), GUTTER + r as u32 * (h + GUTTER));
            }
        }
    }
    img
}

/// Inputs on the first row; then GT | G_c | Î | G_r | guide.
pub fn prediction_grid(inputs: &[Frame], truth: Option<&Frame>, p: &Prediction) -> RgbImage {
    let guide = p.guide.as_ref().map(guide_frame);
    let rows = vec![
        inputs.iter().map(Some).collect(),
        vec![truth, p.coarse.as_ref(), p.guided_frame.as_ref(), Some(&p.refined), guide.as_ref()],
    ];
    grid_image(&rows)
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| DgganError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) })
}

/// Frames side by side, one row.
pub fn strip(frames: &[Frame]) -> RgbImage {
    grid_image(&[frames.iter().map(Some).collect()])
}
