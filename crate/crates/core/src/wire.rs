//! PKECG1 waveform file format.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 8    | magic `b"PKECG1\0\0"`         |
//! | 8      | 2    | version (u16, currently 1)    |
//! | 10     | 4    | sampling rate in Hz (u32)     |
//! | 14     | 4    | sample count (u32)            |
//! | 18     | 14   | reserved, zero                |
//! | 32     | 4·n  | samples, f32 millivolts       |

use std::fs;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"PKECG1\0\0";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("file shorter than the {HEADER_LEN}-byte header ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("bad magic: expected PKECG1")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid sampling rate: fs_hz = {0}")]
    InvalidSamplingRate(u32),
    #[error("length mismatch: header declares {declared} samples, payload holds {actual} bytes")]
    LengthMismatch { declared: u32, actual: usize },
    #[error("too many samples for the format: {0}")]
    TooManySamples(usize),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A decoded lead-I waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub fs_hz: u32,
    pub samples: Vec<f32>,
}

impl Waveform {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs_hz as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

pub fn encode(waveform: &Waveform) -> Result<Vec<u8>, WireError> {
    if waveform.fs_hz == 0 {
        return Err(WireError::InvalidSamplingRate(0));
    }
    let n = u32::try_from(waveform.samples.len())
        .map_err(|_| WireError::TooManySamples(waveform.samples.len()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * waveform.samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&waveform.fs_hz.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.resize(HEADER_LEN, 0);
    for s in &waveform.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Waveform, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::TruncatedHeader(bytes.len()));
    }
    if &bytes[0..8] != MAGIC {
        return Err(WireError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let fs_hz = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    if fs_hz == 0 {
        return Err(WireError::InvalidSamplingRate(fs_hz));
    }
    let declared = u32::from_le_bytes(bytes[14..18].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != declared as usize * 4 {
        return Err(WireError::LengthMismatch {
            declared,
            actual: payload.len(),
        });
    }
    let samples = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Waveform { fs_hz, samples })
}

pub fn write_file(path: &Path, waveform: &Waveform) -> Result<(), WireError> {
    let bytes = encode(waveform)?;
    fs::write(path, bytes).map_err(|source| WireError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<Waveform, WireError> {
    let bytes = fs::read(path).map_err(|source| WireError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(fs: u32, n: usize) -> Waveform {
        Waveform {
            fs_hz: fs,
            samples: (0..n).map(|i| (i as f32 * 0.01).sin()).collect(),
        }
    }

    #[test]
    fn thirty_second_file_parses() {
        let w = sample(500, 30 * 500);
        let bytes = encode(&w).unwrap();
        assert_eq!(bytes.len(), 32 + 4 * 15000);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.samples.len(), 15000);
        assert_eq!(back, w);
    }

    #[test]
    fn truncated_payload_is_length_mismatch() {
        let mut bytes = encode(&sample(500, 100)).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            decode(&bytes),
            Err(WireError::LengthMismatch { declared: 100, .. })
        ));
    }

    #[test]
    fn zero_fs_rejected() {
        let mut bytes = encode(&sample(500, 10)).unwrap();
        bytes[10..14].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(WireError::InvalidSamplingRate(0))));
    }

    #[test]
    fn bad_magic_and_version() {
        let good = encode(&sample(250, 4)).unwrap();
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(decode(&b), Err(WireError::BadMagic)));
        let mut b = good;
        b[8] = 9;
        assert!(matches!(decode(&b), Err(WireError::UnsupportedVersion(9))));
        assert!(matches!(decode(&[0u8; 5]), Err(WireError::TruncatedHeader(5))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(fs in 1u32..5000, bits in proptest::collection::vec(any::<u32>(), 0..200)) {
            let w = Waveform { fs_hz: fs, samples: bits.iter().map(|b| f32::from_bits(*b)).collect() };
            let bytes = encode(&w).unwrap();
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(back.fs_hz, fs);
            let a: Vec<u32> = w.samples.iter().map(|s| s.to_bits()).collect();
            let b: Vec<u32> = back.samples.iter().map(|s| s.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(encode(&back).unwrap(), bytes);
        }
    }
}
