//! Plain-text matrices, 16-bit PGM images, kernels and patch-atom files.
//!
//! Matrix text: a `rows cols` header line, then `rows` lines of `cols`
//! whitespace-separated values. Values are written in shortest round-trip
//! form, so a write/read cycle is bit exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::array::Image;
use crate::error::{Error, Result};
use crate::operators::{ConvKernel, PatchAtoms};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers; `#` starts a comment.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_usize(name: &str, line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::parse(name, line, format!("expected a non-negative integer, found {tok:?}")))
}

fn parse_value(name: &str, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::parse(name, line, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(name, line, format!("value {v} is not finite and non-negative")));
    }
    Ok(v)
}

/// Parses matrix text into `(rows, cols, row-major values)`.
pub fn parse_matrix(text: &str, name: &str) -> Result<(usize, usize, Vec<f64>)> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(name, 1, "missing `rows cols` header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::parse(name, hl, "header must be `rows cols`"));
    }
    let rows = parse_usize(name, hl, dims[0])?;
    let cols = parse_usize(name, hl, dims[1])?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions { rows, cols });
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_value(name, ln, tok)?);
        }
        if data.len() - before != cols {
            return Err(Error::parse(name, ln, format!("expected {cols} values, found {}", data.len() - before)));
        }
        seen += 1;
        if seen > rows {
            return Err(Error::parse(name, ln, format!("more than {rows} rows")));
        }
    }
    if seen != rows {
        return Err(Error::parse(name, hl, format!("expected {rows} rows, found {seen}")));
    }
    Ok((rows, cols, data))
}

pub fn format_matrix(rows: usize, cols: usize, data: &[f64]) -> String {
    let mut out = format!("{rows} {cols}\n");
    for row in data.chunks(cols) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let (rows, cols, data) = parse_matrix(&read_text(path)?, &path.display().to_string())?;
    Image::new(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    write_text(path.as_ref(), &format_matrix(image.rows(), image.cols(), image.as_slice()))
}

/// The `min max` sidecar of a PGM file.
pub fn scale_sidecar(path: &Path) -> PathBuf {
    path.with_extension("scale")
}

const PGM_MAX: f64 = 65535.0;

/// Writes a 16-bit binary PGM quantized over `[min, max]` of the image and
/// a sidecar text file holding `min max`.
pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let min = image.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let max = image.max();
    let range = max - min;
    let mut bytes = format!("P5\n{} {}\n65535\n", image.cols(), image.rows()).into_bytes();
    for &v in image.as_slice() {
        let q = if range > 0.0 { ((v - min) / range * PGM_MAX).round() as u16 } else { 0 };
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    write_text(&scale_sidecar(path), &format!("{min} {max}\n"))
}

/// Reads an 8- or 16-bit binary PGM. With a sidecar, grey levels are mapped
/// back to `[min, max]`; otherwise the raw grey levels are returned.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(&name, 1, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::parse(&name, 1, format!("unsupported PGM magic {:?}", fields[0])));
    }
    let cols = parse_usize(&name, 1, &fields[1])?;
    let rows = parse_usize(&name, 1, &fields[2])?;
    let maxval = parse_usize(&name, 1, &fields[3])?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions { rows, cols });
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let width = match maxval {
        1..=255 => 1,
        256..=65535 => 2,
        _ => return Err(Error::parse(&name, 1, format!("invalid maxval {maxval}"))),
    };
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != rows * cols * width {
        return Err(Error::DataLength { len: raster.len(), expected: rows * cols * width });
    }
    let levels: Vec<f64> = if width == 1 {
        raster.iter().map(|&b| b as f64).collect()
    } else {
        raster.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64).collect()
    };
    let sidecar = scale_sidecar(path);
    let data = if sidecar.exists() {
        let text = read_text(&sidecar)?;
        let sname = sidecar.display().to_string();
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(&sname, 1, "expected `min max`"));
        }
        let min = parse_value(&sname, 1, toks[0])?;
        let max = parse_value(&sname, 1, toks[1])?;
        levels.iter().map(|q| min + q / maxval as f64 * (max - min)).collect()
    } else {
        levels
    };
    Image::new(rows, cols, data)
}

/// Reads an image by extension: `.pgm` as PGM, anything else as matrix text.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_matrix(path),
    }
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<ConvKernel> {
    let path = path.as_ref();
    let (rows, cols, taps) = parse_matrix(&read_text(path)?, &path.display().to_string())?;
    ConvKernel::new(rows, cols, taps)
}

pub fn write_kernel(path: impl AsRef<Path>, kernel: &ConvKernel) -> Result<()> {
    write_text(path.as_ref(), &format_matrix(kernel.rows(), kernel.cols(), kernel.taps()))
}

/// Parses an atom file: a `patch_rows patch_cols num_atoms stride` header,
/// then one atom per line in row-major order.
pub fn parse_atoms(text: &str, name: &str) -> Result<PatchAtoms> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "missing `patch_rows patch_cols num_atoms stride` header"))?;
    let fields: Vec<usize> = header.split_whitespace().map(|t| parse_usize(name, hl, t)).collect::<Result<_>>()?;
    let [pr, pc, n, stride] = fields[..] else {
        return Err(Error::parse(name, hl, "header must be `patch_rows patch_cols num_atoms stride`"));
    };
    let mut atoms = Vec::with_capacity(n);
    for (ln, line) in lines {
        let atom: Vec<f64> = line.split_whitespace().map(|t| parse_value(name, ln, t)).collect::<Result<_>>()?;
        if atom.len() != pr * pc {
            return Err(Error::parse(name, ln, format!("atom has {} values, expected {}", atom.len(), pr * pc)));
        }
        atoms.push(atom);
    }
    if atoms.len() != n {
        return Err(Error::parse(name, hl, format!("expected {n} atoms, found {}", atoms.len())));
    }
    PatchAtoms::new(pr, pc, stride, atoms)
}

pub fn read_atoms(path: impl AsRef<Path>) -> Result<PatchAtoms> {
    let path = path.as_ref();
    parse_atoms(&read_text(path)?, &path.display().to_string())
}

pub fn format_atoms(atoms: &PatchAtoms) -> String {
    let (pr, pc) = atoms.patch_size();
    let mut out = format!("{pr} {pc} {} {}\n", atoms.num_atoms(), atoms.stride());
    for a in 0..atoms.num_atoms() {
        let values: Vec<String> = atoms.atom(a).iter().map(|v| v.to_string()).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_atoms(path: impl AsRef<Path>, atoms: &PatchAtoms) -> Result<()> {
    write_text(path.as_ref(), &format_atoms(atoms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_parse_errors() {
        assert!(parse_matrix("", "x").is_err());
        assert!(parse_matrix("2 2\n1 2\n3\n", "x").is_err());
        assert!(parse_matrix("2 2\n1 2\n3 4\n5 6\n", "x").is_err());
        assert!(parse_matrix("1 2\n1 -2\n", "x").is_err());
        assert!(parse_matrix("1 2\n1 nan\n", "x").is_err());
        match parse_matrix("2 1\n1\nx\n", "m.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let (r, c, d) = parse_matrix("# kernel\n1 3\n0.25 0.5 0.25 # taps\n", "x").unwrap();
        assert_eq!((r, c, d), (1, 3, vec![0.25, 0.5, 0.25]));
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(5, 7, |r, c| (r * 7 + c) as f64 * 0.37 + 1.0).unwrap();
        let p = dir.path().join("img.pgm");
        write_pgm(&p, &img).unwrap();
        assert!(dir.path().join("img.scale").exists());
        let back = read_image(&p).unwrap();
        assert_eq!(back.shape(), (5, 7));
        let step = (img.max() - 1.0) / 65535.0;
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            assert!((a - b).abs() <= step);
        }
    }

    #[test]
    fn eight_bit_pgm_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("small.pgm");
        let mut bytes = b"P5\n# comment\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 10, 20, 30, 40, 255]);
        fs::write(&p, bytes).unwrap();
        let img = read_pgm(&p).unwrap();
        assert_eq!(img.shape(), (2, 3));
        assert_eq!(img.as_slice(), &[0.0, 10.0, 20.0, 30.0, 40.0, 255.0]);
        fs::write(&p, b"P5\n3 2\n255\n\x00\x01").unwrap();
        assert!(read_pgm(&p).is_err());
    }

    #[test]
    fn kernel_and_atoms_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let k = ConvKernel::inverse_quadratic_2d();
        write_kernel(dir.path().join("k.txt"), &k).unwrap();
        assert_eq!(read_kernel(dir.path().join("k.txt")).unwrap().taps(), k.taps());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atoms = PatchAtoms::synthetic(4, 4, 6, 2, &mut rng).unwrap();
        write_atoms(dir.path().join("a.txt"), &atoms).unwrap();
        assert_eq!(read_atoms(dir.path().join("a.txt")).unwrap(), atoms);
        assert!(parse_atoms("2 2 1 1\n1 2 3\n", "a").is_err());
        assert!(parse_atoms("2 2 2 1\n1 2 3 4\n", "a").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_matrix("/nonexistent/f.txt"), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn matrix_text_round_trip_is_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Image::from_fn(rows, cols, |_, _| rand::Rng::random::<f64>(&mut rng) * 1e6).unwrap();
            let (r, c, d) = parse_matrix(&format_matrix(rows, cols, img.as_slice()), "p").unwrap();
            prop_assert_eq!((r, c), (rows, cols));
            prop_assert!(d.iter().zip(img.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
