use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetManifest, Frame, Video, CHANNELS};
use crate::error::{DgganError, Result};

pub const CACHE_MANIFEST: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct CacheSidecar {
    manifest: DatasetManifest,
    count: usize,
    frames: usize,
    channels: usize,
    height: usize,
    width: usize,
    dtype: String,
    layout: String,
}

fn video_file(i: usize) -> String {
    format!("video_{i:05}.bin")
}

/// One raw little-endian `f32` file per video plus a JSON sidecar. Output is
/// a pure function of the inputs, byte for byte.
pub fn write_cache(dir: &Path, manifest: &DatasetManifest, videos: &[Video]) -> Result<()> {
    fs::create_dir_all(dir).map_err(DgganError::io(dir))?;
    let (height, width) = manifest.resolution;
    for (i, video) in videos.iter().enumerate() {
        let mut bytes = Vec::with_capacity(video.len() * CHANNELS * height * width * 4);
        for f in video {
            if (f.height(), f.width()) != (height, width) {
                return Err(DgganError::Data(format!("video {i} has frames of size {}x{}", f.height(), f.width())));
            }
            bytes.extend(f.pixels().iter().flat_map(|v| v.to_le_bytes()));
        }
        let path = dir.join(video_file(i));
        fs::write(&path, bytes).map_err(DgganError::io(path))?;
    }
    let sidecar = CacheSidecar {
        manifest: manifest.clone(),
        count: videos.len(),
        frames: manifest.frames_per_sequence,
        channels: CHANNELS,
        height,
        width,
        dtype: "f32le".into(),
        layout: "frame, channel, row, column".into(),
    };
    let path = dir.join(CACHE_MANIFEST);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    fs::write(&path, text + "\n").map_err(DgganError::io(path))
}

pub fn read_cache(dir: &Path) -> Result<(DatasetManifest, Vec<Video>)> {
    let path = dir.join(CACHE_MANIFEST);
    let text = fs::read_to_string(&path).map_err(DgganError::io(&path))?;
    let side: CacheSidecar =
        serde_json::from_str(&text).map_err(|e| DgganError::Data(format!("{}: {e}", path.display())))?;
    let frame_len = side.channels * side.height * side.width;
    if side.channels != CHANNELS || side.dtype != "f32le" {
        return Err(DgganError::Data(format!("{}: unsupported layout", path.display())));
    }
    let mut videos = Vec::with_capacity(side.count);
    for i in 0..side.count {
        let path = dir.join(video_file(i));
        let bytes = fs::read(&path).map_err(DgganError::io(&path))?;
        if bytes.len() % (frame_len * 4) != 0 {
            return Err(DgganError::Data(format!("{}: truncated", path.display())));
        }
        let values: Vec<f32> =
            bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4"))).collect();
        videos.push(values.chunks(frame_len).map(|c| Frame::new(side.height, side.width, c.to_vec())).collect());
    }
    Ok((side.manifest, videos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;

    #[test]
    fn cache_round_trip_is_exact_and_reproducible() {
        let m = DatasetManifest { num_sequences: 3, frames_per_sequence: 5, ..Default::default() };
        let videos = generate_synthetic(&m).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_cache(a.path(), &m, &videos).unwrap();
        write_cache(b.path(), &m, &generate_synthetic(&m).unwrap()).unwrap();
        let (m2, back) = read_cache(a.path()).unwrap();
        assert_eq!(m2, m);
        assert_eq!(back, videos);
        for name in [CACHE_MANIFEST, "video_00000.bin", "video_00002.bin"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
    }
}
