//! Write a series, mask and belt trace to disk and read them back bit-exactly.

use csfdyn::ingest::{read_mask, read_physio, read_series, write_mask, write_physio, write_series, PhysioKind};
use csfdyn::phantom::{generate, PhantomSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = PhantomSpec::aqueduct();
    spec.acquisition.duration = 8_000.0;
    let d = generate(&spec)?;
    let dir = tempfile::tempdir()?;

    let series_path = dir.path().join("series.csfd");
    write_series(&d.series, &series_path)?;
    let back = read_series(&series_path)?;
    println!(
        "series {}x{}x{} frames, {} bytes, identical: {}",
        back.header.width,
        back.header.height,
        back.header.n_frames,
        std::fs::metadata(&series_path)?.len(),
        back == d.series
    );

    let mask_path = dir.path().join("roi.pgm");
    write_mask(&d.lumen_mask, &mask_path)?;
    let mask = read_mask(&mask_path)?;
    println!("mask {:?} with {} pixels, identical: {}", mask.label, mask.count(), mask == d.lumen_mask);

    let belt_path = dir.path().join("belt.csv");
    write_physio(&d.belt, &belt_path)?;
    let belt = read_physio(&belt_path, PhysioKind::RespBelt)?;
    println!("belt {} samples every {} ms, identical: {}", belt.len(), belt.sample_interval, belt == d.belt);

    let mut truncated = std::fs::read(&series_path)?;
    truncated.truncate(truncated.len() - 3);
    match csfdyn::ingest::VelocitySeries::from_bytes(&truncated) {
        Err(e) => println!("truncated file refused: {e}"),
        Ok(_) => println!("truncated file unexpectedly accepted"),
    }
    Ok(())
}
