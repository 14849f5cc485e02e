use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::RgbImage;

use super::{normalize_u8, DatasetManifest, Frame, Video, CHANNELS};
use crate::error::{DgganError, Result};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(DgganError::io(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(DgganError::io(dir))?;
    entries.sort();
    Ok(entries)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Largest centred crop with the aspect ratio `h:w`, resized to `h×w`.
pub(crate) fn fit_to(img: &RgbImage, h: usize, w: usize) -> RgbImage {
    let (iw, ih) = (img.width() as u64, img.height() as u64);
    let (cw, ch) = if iw * h as u64 > ih * w as u64 {
        ((ih * w as u64 / h as u64).max(1), ih)
    } else {
        (iw, (iw * h as u64 / w as u64).max(1))
    };
    let (x0, y0) = ((iw - cw) / 2, (ih - ch) / 2);
    let crop = imageops::crop_imm(img, x0 as u32, y0 as u32, cw as u32, ch as u32).to_image();
    if crop.width() as usize == w && crop.height() as usize == h {
        crop
    } else {
        imageops::resize(&crop, w as u32, h as u32, FilterType::Triangle)
    }
}

pub(crate) fn frame_from_rgb(img: &RgbImage) -> Frame {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut pixels = vec![0.0; CHANNELS * h * w];
    for (x, y, p) in img.enumerate_pixels() {
        for c in 0..CHANNELS {
            pixels[(c * h + y as usize) * w + x as usize] = normalize_u8(p.0[c]);
        }
    }
    Frame::new(h, w, pixels)
}

fn load_video(dir: &Path, h: usize, w: usize) -> std::result::Result<Video, String> {
    let files = sorted_entries(dir).map_err(|e| e.to_string())?;
    files
        .iter()
        .filter(|p| p.is_file() && is_image(p))
        .map(|p| {
            let img = image::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(frame_from_rgb(&fit_to(&img.to_rgb8(), h, w)))
        })
        .collect()
}

/// Reads one video per subdirectory of `path`, frames in filename order.
/// Videos with an unreadable image are skipped with a warning.
pub fn load_frame_directory(path: &Path, manifest: &DatasetManifest) -> Result<Vec<Video>> {
    manifest.validate()?;
    let (h, w) = manifest.resolution;
    let mut videos = Vec::new();
    for dir in sorted_entries(path)?.into_iter().filter(|p| p.is_dir()) {
        match load_video(&dir, h, w) {
            Ok(v) if !v.is_empty() => videos.push(v),
            Ok(_) => log::warn!("{}: no image files, skipped", dir.display()),
            Err(e) => log::warn!("skipping video {}: {e}", dir.display()),
        }
    }
    if videos.is_empty() {
        return Err(DgganError::Data(format!("no readable videos under {}", path.display())));
    }
    Ok(videos)
}
