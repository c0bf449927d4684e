//! Binary and CSV persistence of coefficient lists.
//!
//! Binary layout (all little-endian, 64-bit fields):
//!
//! ```text
//! offset  field
//!      0  magic  b"LOGSP1\0\0"
//!      8  d      u64
//!     16  K      u64
//!     24  seed   u64
//!     32  s      f64
//!     40  beta   f64
//!     48  (re, im) f64 pairs for k in K_K^d, natural row-major order
//! ```

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{mode_count, wave_vector, SpectralField};
use crate::error::{Error, Result};
use crate::output::{atomic_write, fmt_f64};

pub const MAGIC: [u8; 8] = *b"LOGSP1\0\0";
const HEADER_LEN: usize = 48;

/// Metadata stored alongside a coefficient list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientHeader {
    pub dim: usize,
    pub modes: usize,
    pub seed: u64,
    pub s: f64,
    pub beta: f64,
}

pub fn encode(field: &SpectralField, seed: u64, s: f64, beta: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * field.coeffs().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(field.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(field.modes() as u64).to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&s.to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(CoefficientHeader, SpectralField)> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if bytes[..8] != MAGIC {
        return Err(bad("missing LOGSP1 magic".into()));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let dim = u64::from_le_bytes(word(1)) as usize;
    let modes = u64::from_le_bytes(word(2)) as usize;
    let seed = u64::from_le_bytes(word(3));
    let s = f64::from_le_bytes(word(4));
    let beta = f64::from_le_bytes(word(5));
    if dim == 0 || dim > 8 {
        return Err(bad(format!("unsupported dimension {dim}")));
    }
    let count = mode_count(dim, modes);
    let expected = HEADER_LEN + 16 * count;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes for d={dim}, K={modes}, found {}", bytes.len())));
    }
    let coeffs = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("re")),
                f64::from_le_bytes(c[8..].try_into().expect("im")),
            )
        })
        .collect();
    let field = SpectralField::new(dim, modes, coeffs).map_err(|e| bad(e.to_string()))?;
    Ok((
        CoefficientHeader {
            dim,
            modes,
            seed,
            s,
            beta,
        },
        field,
    ))
}

pub fn write_coefficients(path: &Path, field: &SpectralField, seed: u64, s: f64, beta: f64) -> Result<()> {
    atomic_write(path, &encode(field, seed, s, beta))
}

pub fn read_coefficients(path: &Path) -> Result<(CoefficientHeader, SpectralField)> {
    let bytes = std::fs::read(path)?;
    decode(&bytes, path)
}

/// Inspection export: `k,re,im` (or `k0,..,k{d-1},re,im` for `d > 1`).
pub fn write_coefficients_csv(path: &Path, field: &SpectralField) -> Result<()> {
    let mut out = String::new();
    if field.dim() == 1 {
        out.push_str("k,re,im\n");
    } else {
        for axis in 0..field.dim() {
            let _ = write!(out, "k{axis},");
        }
        out.push_str("re,im\n");
    }
    for (flat, c) in field.coeffs().iter().enumerate() {
        for k in wave_vector(field.dim(), field.modes(), flat) {
            let _ = write!(out, "{k},");
        }
        let _ = writeln!(out, "{},{}", fmt_f64(c.re), fmt_f64(c.im));
    }
    atomic_write(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let f = SpectralField::single_mode(1, 1, &[-1], Complex64::new(1.5, -2.0)).unwrap();
        let bytes = encode(&f, 42, 0.8, 0.51);
        assert_eq!(&bytes[..6], b"LOGSP1");
        assert_eq!(bytes.len(), 48 + 3 * 16);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 42);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.8);
        // k = -1 comes first
        assert_eq!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[56..64].try_into().unwrap()), -2.0);
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let p = Path::new("x.bin");
        assert!(matches!(decode(b"LOGSP1", p), Err(Error::Format { .. })));
        let f = SpectralField::zeros(1, 2);
        let mut bytes = encode(&f, 0, 0.0, 0.0);
        bytes.pop();
        assert!(matches!(decode(&bytes, p), Err(Error::Format { .. })));
        let mut bytes = encode(&f, 0, 0.0, 0.0);
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes, p), Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn binary_round_trip(
            dim in 1usize..3,
            modes in 0usize..6,
            seed in any::<u64>(),
            vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 121),
        ) {
            let count = mode_count(dim, modes);
            let coeffs = vals[..count].iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let f = SpectralField::new(dim, modes, coeffs).unwrap();
            let (h, g) = decode(&encode(&f, seed, 0.3, 0.7), Path::new("mem")).unwrap();
            prop_assert_eq!(g, f);
            prop_assert_eq!(h.seed, seed);
            prop_assert_eq!(h.dim, dim);
        }
    }
}
