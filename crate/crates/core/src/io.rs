//! Signal and pattern files.
//!
//! Binary signal layout, little-endian: magic `HNKZ`, `u32` version, `u64`
//! n, `u32` n1, then n `(re, im)` pairs of `f64` holding the raw values
//! `x = W z`. Weights are recomputed on load. CSV signals have the header
//! `index,re,im`, also holding raw values.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hankel::{winv, wmap, HankelShape, WeightedSignal};
use crate::sampling::{Mode, ObservationPattern};

pub const MAGIC: &[u8; 4] = b"HNKZ";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4;

pub fn encode_signal(signal: &WeightedSignal) -> Vec<u8> {
    let x = wmap(signal);
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * x.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(x.len() as u64).to_le_bytes());
    out.extend_from_slice(&(signal.shape.n1() as u32).to_le_bytes());
    for v in &x {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_signal(bytes: &[u8]) -> Result<WeightedSignal> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing HNKZ header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let n1 = u32_at(16) as usize;
    if n == 0 || n1 == 0 || n1 > n {
        return Err(Error::Format(format!("invalid dimensions n = {n}, n1 = {n1}")));
    }
    let expected = n.checked_mul(16).and_then(|b| b.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "payload of {} bytes does not hold {n} complex values",
            bytes.len() - HEADER_LEN
        )));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let x: Vec<C64> = (0..n)
        .map(|i| {
            let o = HEADER_LEN + 16 * i;
            C64::new(f64_at(o), f64_at(o + 8))
        })
        .collect();
    winv(&x, HankelShape::new(n1, n - n1 + 1)?)
}

pub fn write_signal(path: &Path, signal: &WeightedSignal) -> Result<()> {
    fs::write(path, encode_signal(signal))?;
    Ok(())
}

pub fn read_signal(path: &Path) -> Result<WeightedSignal> {
    decode_signal(&fs::read(path)?)
}

pub fn signal_to_csv(signal: &WeightedSignal) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, v) in wmap(signal).iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", v.re, v.im));
    }
    out
}

/// Parses `index,re,im` rows. Indices must run `0..n` in order; the Hankel
/// shape is the square default for `n`.
pub fn signal_from_csv(text: &str) -> Result<WeightedSignal> {
    let mut x = Vec::new();
    for (line_no, line) in data_lines(text, "index,re,im")? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!("line {line_no}: expected 3 fields")));
        }
        let index: usize = parse_field(fields[0], line_no)?;
        if index != x.len() {
            return Err(Error::Format(format!("line {line_no}: index {index} out of order")));
        }
        x.push(C64::new(parse_field(fields[1], line_no)?, parse_field(fields[2], line_no)?));
    }
    winv(&x, HankelShape::square(x.len())?)
}

/// Header `index,count` with one row per distinct observed index.
pub fn pattern_to_csv(pattern: &ObservationPattern) -> String {
    let mode = match pattern.mode() {
        Mode::WithReplacement => "with_replacement",
        Mode::WithoutReplacement => "without_replacement",
    };
    let mut out = format!("# n={} mode={mode}\nindex,count\n", pattern.n());
    for (i, c) in pattern.distinct().iter().zip(pattern.multiplicity()) {
        out.push_str(&format!("{i},{c}\n"));
    }
    out
}

pub fn pattern_from_csv(text: &str) -> Result<ObservationPattern> {
    let first = text.lines().next().unwrap_or_default();
    let mut n = None;
    let mut mode = None;
    for token in first.trim_start_matches('#').split_whitespace() {
        match token.split_once('=') {
            Some(("n", v)) => n = Some(parse_field::<usize>(v, 1)?),
            Some(("mode", "with_replacement")) => mode = Some(Mode::WithReplacement),
            Some(("mode", "without_replacement")) => mode = Some(Mode::WithoutReplacement),
            _ => return Err(Error::Format(format!("line 1: unrecognized token {token:?}"))),
        }
    }
    let (n, mode) = match (n, mode) {
        (Some(n), Some(mode)) => (n, mode),
        _ => return Err(Error::Format("line 1: expected '# n=<n> mode=<mode>'".into())),
    };
    let mut indices = Vec::new();
    let rest = text.split_once('\n').map(|(_, r)| r).unwrap_or_default();
    for (line_no, line) in data_lines(rest, "index,count")? {
        let (i, c) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected 2 fields", line_no + 1)))?;
        let i: usize = parse_field(i, line_no + 1)?;
        let c: usize = parse_field(c, line_no + 1)?;
        indices.extend(std::iter::repeat_n(i, c));
    }
    ObservationPattern::new(n, indices, mode)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn data_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)> + 'a> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(Error::Format(format!("expected header {header:?}"))),
    }
    Ok(lines.filter(|(_, l)| !l.is_empty()))
}

fn parse_field<T: std::str::FromStr>(s: &str, line_no: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("line {line_no}: cannot parse {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_pattern;
    use crate::synth::spectral_signal;

    #[test]
    fn binary_roundtrip_is_exact() {
        let (z, _) = spectral_signal(255, 5, 10.0, 7).unwrap();
        let bytes = encode_signal(&z);
        assert_eq!(&bytes[..4], b"HNKZ");
        assert_eq!(bytes.len(), 20 + 16 * 255);
        let back = decode_signal(&bytes).unwrap();
        assert_eq!(back.shape, z.shape);
        assert_eq!(encode_signal(&back), bytes);
        for (a, b) in back.z.iter().zip(&z.z) {
            assert!((a - b).norm() <= 1e-15 * b.norm().max(1.0));
        }
    }

    #[test]
    fn binary_rejects_corruption() {
        let (z, _) = spectral_signal(31, 2, 1.0, 0).unwrap();
        let bytes = encode_signal(&z);
        assert!(decode_signal(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_signal(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 2;
        assert!(decode_signal(&bad).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let (z, _) = spectral_signal(64, 3, 3.0, 1).unwrap();
        let text = signal_to_csv(&z);
        assert!(text.starts_with("index,re,im\n"));
        let back = signal_from_csv(&text).unwrap();
        assert_eq!(signal_to_csv(&back), text);
        assert!(signal_from_csv("index,re,im\n1,0,0\n").is_err());
        assert!(signal_from_csv("i,re,im\n").is_err());
    }

    #[test]
    fn pattern_roundtrip() {
        for mode in [Mode::WithReplacement, Mode::WithoutReplacement] {
            let p = sample_pattern(100, 60, mode, 3).unwrap();
            assert_eq!(pattern_from_csv(&pattern_to_csv(&p)).unwrap(), p);
        }
        assert!(pattern_from_csv("index,count\n").is_err());
    }
}
