use std::io::{self, Write};

use super::Spectrogram;
use crate::num::Real;

/// Writes the power matrix as comma-separated text.
///
/// Row 1 is `bin_freqs_hz` followed by every bin frequency, row 2 is
/// `frame_times_s` followed by every frame time, then one row per frame:
/// the frame time followed by that frame's power in dB.
pub fn write_csv<T: Real, W: Write>(spec: &Spectrogram<T>, mut out: W) -> io::Result<()> {
    write!(out, "bin_freqs_hz")?;
    for f in &spec.bin_freqs {
        write!(out, ",{:.4}", f.to_f64_lossy())?;
    }
    write!(out, "\nframe_times_s")?;
    for t in &spec.frame_times {
        write!(out, ",{:.6}", t.to_f64_lossy())?;
    }
    writeln!(out)?;
    for (f, t) in spec.frame_times.iter().enumerate() {
        write!(out, "{:.6}", t.to_f64_lossy())?;
        for p in spec.frame(f) {
            write!(out, ",{:.3}", p.to_f64_lossy())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a binary 8-bit PGM: time runs left to right, frequency bottom to
/// top, and power is mapped linearly from the matrix minimum (0) to its
/// maximum (255).
pub fn write_pgm<T: Real, W: Write>(spec: &Spectrogram<T>, mut out: W) -> io::Result<()> {
    let (width, height) = (spec.n_frames(), spec.n_bins());
    let (lo, hi) = spec
        .power_db
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let p = p.to_f64_lossy();
            (lo.min(p), hi.max(p))
        });
    let span = hi - lo;
    write!(out, "P5\n{width} {height}\n255\n")?;
    let mut row = vec![0u8; width];
    for bin in (0..height).rev() {
        for (f, px) in row.iter_mut().enumerate() {
            *px = if span > 0.0 {
                (255.0 * (spec.at(f, bin).to_f64_lossy() - lo) / span).round() as u8
            } else {
                0
            };
        }
        out.write_all(&row)?;
    }
    Ok(())
}
