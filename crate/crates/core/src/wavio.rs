//! RIFF/WAVE reading and writing for 16-bit PCM capture files.
//!
//! Only integer PCM at 16 bits is accepted. Chunks other than `fmt ` and
//! `data` (LIST/INFO, fact, ...) are skipped. Stereo input keeps channel 0.

use std::fs;
use std::path::Path;

use crate::num::Real;

const FORMAT_PCM: u16 = 1;
const HEADER_LEN: usize = 44;

/// Mono 16-bit recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recording {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl Recording {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Self {
        Recording {
            samples,
            sample_rate,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples scaled so that full scale maps to ±1.
    pub fn to_float<T: Real>(&self) -> Vec<T> {
        let scale = T::lit(1.0 / 32768.0);
        self.samples
            .iter()
            .map(|&s| T::from_i16(s).unwrap() * scale)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WavError {
    #[error("truncated input: {field} needs {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        field: &'static str,
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("bad {field} at offset {offset}: expected {expected:?}, found {found:?}")]
    BadMagic {
        field: &'static str,
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unsupported format: audio_format {code} at offset {offset} (only PCM = 1)")]
    UnsupportedFormat { code: u16, offset: usize },
    #[error("unsupported bits_per_sample {bits} at offset {offset} (only 16)")]
    UnsupportedBitDepth { bits: u16, offset: usize },
    #[error("unsupported num_channels {channels} at offset {offset} (1 or 2)")]
    UnsupportedChannels { channels: u16, offset: usize },
    #[error("invalid sample_rate 0 at offset {offset}")]
    ZeroSampleRate { offset: usize },
    #[error("fmt chunk at offset {offset} too short: {size} bytes")]
    ShortFmt { offset: usize, size: u32 },
    #[error("data chunk at offset {offset}: size {size} is not a multiple of block_align {block_align}")]
    RaggedData {
        offset: usize,
        size: u32,
        block_align: usize,
    },
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&self, field: &'static str, offset: usize, len: usize) -> Result<&'a [u8], WavError> {
        let available = self.bytes.len().saturating_sub(offset);
        if available < len {
            return Err(WavError::Truncated {
                field,
                offset,
                needed: len,
                available,
            });
        }
        Ok(&self.bytes[offset..offset + len])
    }

    fn u16(&self, field: &'static str, offset: usize) -> Result<u16, WavError> {
        let b = self.take(field, offset, 2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&self, field: &'static str, offset: usize) -> Result<u32, WavError> {
        let b = self.take(field, offset, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(
        &self,
        field: &'static str,
        offset: usize,
        expected: &'static str,
    ) -> Result<(), WavError> {
        let b = self.take(field, offset, 4)?;
        if b != expected.as_bytes() {
            return Err(WavError::BadMagic {
                field,
                offset,
                expected,
                found: String::from_utf8_lossy(b).into_owned(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Format {
    channels: u16,
    sample_rate: u32,
}

fn parse_fmt(r: &Reader<'_>, body: usize, size: u32) -> Result<Format, WavError> {
    if size < 16 {
        return Err(WavError::ShortFmt {
            offset: body - 8,
            size,
        });
    }
    let code = r.u16("audio_format", body)?;
    if code != FORMAT_PCM {
        return Err(WavError::UnsupportedFormat { code, offset: body });
    }
    let channels = r.u16("num_channels", body + 2)?;
    if !(1..=2).contains(&channels) {
        return Err(WavError::UnsupportedChannels {
            channels,
            offset: body + 2,
        });
    }
    let sample_rate = r.u32("sample_rate", body + 4)?;
    if sample_rate == 0 {
        return Err(WavError::ZeroSampleRate { offset: body + 4 });
    }
    let bits = r.u16("bits_per_sample", body + 14)?;
    if bits != 16 {
        return Err(WavError::UnsupportedBitDepth {
            bits,
            offset: body + 14,
        });
    }
    Ok(Format {
        channels,
        sample_rate,
    })
}

/// Parses a RIFF/WAVE byte buffer into a mono recording.
pub fn read_wav(bytes: &[u8]) -> Result<Recording, WavError> {
    let r = Reader { bytes };
    r.magic("riff_id", 0, "RIFF")?;
    let riff_size = r.u32("riff_size", 4)? as usize;
    r.magic("wave_id", 8, "WAVE")?;
    // Chunks are only looked for inside the declared RIFF payload.
    let riff_end = (8 + riff_size).min(bytes.len());

    let mut format: Option<Format> = None;
    let mut data: Option<(usize, u32)> = None;
    let mut pos = 12;
    while pos + 8 <= riff_end && (format.is_none() || data.is_none()) {
        let id = r.take("chunk_id", pos, 4)?;
        let size = r.u32("chunk_size", pos + 4)?;
        let body = pos + 8;
        match id {
            b"fmt " => format = Some(parse_fmt(&r, body, size)?),
            b"data" => {
                r.take("data", body, size as usize)?;
                data = Some((body, size));
            }
            other => log::debug!(
                "skipping chunk {:?} ({} bytes) at offset {}",
                String::from_utf8_lossy(other),
                size,
                pos
            ),
        }
        // chunks are word aligned
        pos = body + size as usize + (size as usize & 1);
    }

    let format = format.ok_or(WavError::MissingChunk("fmt "))?;
    let (data_offset, data_size) = data.ok_or(WavError::MissingChunk("data"))?;
    let block_align = 2 * format.channels as usize;
    if data_size as usize % block_align != 0 {
        return Err(WavError::RaggedData {
            offset: data_offset - 8,
            size: data_size,
            block_align,
        });
    }

    let data_end = data_offset + data_size as usize;
    if pos.max(data_end) < bytes.len() {
        log::warn!(
            "ignoring {} trailing bytes after offset {}",
            bytes.len() - pos.max(data_end),
            pos.max(data_end)
        );
    }

    let samples = bytes[data_offset..data_end]
        .chunks_exact(block_align)
        .map(|frame| i16::from_le_bytes([frame[0], frame[1]]))
        .collect();
    Ok(Recording {
        samples,
        sample_rate: format.sample_rate,
    })
}

/// Serializes a recording as a canonical 44-byte-header mono PCM file.
pub fn write_wav(rec: &Recording) -> Vec<u8> {
    let data_len = rec.samples.len() * 2;
    let mut out = Vec::with_capacity(HEADER_LEN + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rec.sample_rate.to_le_bytes());
    out.extend_from_slice(&(rec.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &rec.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum WavFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: WavError },
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<Recording, WavFileError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| WavFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_wav(&bytes).map_err(|source| WavFileError::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_wav_file(path: impl AsRef<Path>, rec: &Recording) -> std::io::Result<()> {
    fs::write(path, write_wav(rec))
}
