//! Generates the synthetic moving-shapes set, writes it as a PNG cache and
//! saves one sequence as an image strip.
//!
//! ```text
//! cargo run --release --example generate_data -- /tmp/shapes
//! ```

use std::path::PathBuf;

use dggan::dataset::{generate_synthetic, read_cache, write_cache, DatasetManifest};
use dggan::render::{save_png, strip};

fn main() -> dggan::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("dggan_shapes"));
    let manifest = DatasetManifest { num_sequences: 50, ..Default::default() };
    let videos = generate_synthetic(&manifest)?;
    write_cache(&out, &manifest, &videos)?;
    let (back, reread) = read_cache(&out)?;
    assert_eq!(back, manifest);
    assert_eq!(reread, videos);
    save_png(&strip(&videos[0]), &out.join("sequence_0.png"))?;
    println!("{} videos of {} frames in {}", videos.len(), videos[0].len(), out.display());
    Ok(())
}
