//! Binary grayscale PGM (`P5`) frames, 8- or 16-bit.

use std::fs;
use std::path::{Path, PathBuf};

use crate::background::{ForegroundMaskSequence, MaskFrame};
use crate::dmd::SnapshotMatrix;
use crate::{Error, Matrix, Result};

/// Raw samples of one PGM image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub height: usize,
    pub width: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl PgmImage {
    pub fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.maxval as f64;
        self.samples.iter().map(move |s| *s as f64 / m)
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse().ok()
    }
}

pub fn decode_pgm(bytes: &[u8], origin: &Path) -> Result<PgmImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::format(origin, "not a PNM file"));
    }
    if bytes[1] != b'5' {
        return Err(Error::format(
            origin,
            format!("unsupported PNM variant P{}; only binary grayscale (P5) is read", bytes[1] as char),
        ));
    }
    let mut h = Header { bytes, pos: 2 };
    let (Some(width), Some(height), Some(maxval)) = (h.number(), h.number(), h.number()) else {
        return Err(Error::format(origin, "malformed header"));
    };
    if width == 0 || height == 0 {
        return Err(Error::format(origin, "zero-sized image"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(origin, format!("maxval {maxval} outside 1..=65535")));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::format(origin, "missing separator after maxval"));
    }
    let body = &bytes[h.pos + 1..];
    let depth = if maxval < 256 { 1 } else { 2 };
    let count = width * height;
    if body.len() < count * depth {
        return Err(Error::format(origin, format!("expected {} sample bytes, found {}", count * depth, body.len())));
    }
    let samples: Vec<u16> = if depth == 1 {
        body[..count].iter().map(|b| *b as u16).collect()
    } else {
        body[..2 * count].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(s) = samples.iter().find(|s| **s as usize > maxval) {
        return Err(Error::format(origin, format!("sample {s} exceeds maxval {maxval}")));
    }
    Ok(PgmImage { height, width, maxval: maxval as u16, samples })
}

pub fn encode_pgm(img: &PgmImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval < 256 {
        out.extend(img.samples.iter().map(|s| *s as u8));
    } else {
        for s in &img.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &PgmImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Files matched by a glob pattern, or every `*.pgm` inside a directory,
/// sorted lexicographically by file name.
pub fn resolve_frames(pattern: &str) -> Result<Vec<PathBuf>> {
    let dir = Path::new(pattern);
    let pattern = if dir.is_dir() {
        dir.join("*.pgm").to_string_lossy().into_owned()
    } else {
        pattern.to_string()
    };
    let paths = glob::glob(&pattern).map_err(|e| Error::Config(format!("bad frame pattern {pattern:?}: {e}")))?;
    let mut files = Vec::new();
    for p in paths {
        let p = p.map_err(|e| Error::io(e.path().to_path_buf(), e.into()))?;
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// A loaded frame sequence with the file stems it came from.
#[derive(Debug, Clone)]
pub struct FrameSet {
    pub snapshots: SnapshotMatrix,
    pub stems: Vec<String>,
    pub maxval: u16,
}

pub fn load_frame_set(pattern: &str) -> Result<FrameSet> {
    let files = resolve_frames(pattern)?;
    if files.len() < 2 {
        return Err(Error::Input(format!("pattern {pattern:?} matched {} frames, need at least 2", files.len())));
    }
    let first = read_pgm(&files[0])?;
    let (h, w) = (first.height, first.width);
    let mut data = Matrix::zeros(h * w, files.len());
    let mut maxval = first.maxval;
    for (j, f) in files.iter().enumerate() {
        let img = if j == 0 { first.clone() } else { read_pgm(f)? };
        if (img.height, img.width) != (h, w) {
            return Err(Error::Input(format!(
                "{} is {}×{}, expected {h}×{w}",
                f.display(),
                img.height,
                img.width
            )));
        }
        maxval = maxval.max(img.maxval);
        for (dst, v) in data.column_mut(j).iter_mut().zip(img.normalized()) {
            *dst = v;
        }
    }
    Ok(FrameSet { snapshots: SnapshotMatrix::new(data, h, w)?, stems: files.iter().map(|p| stem(p)).collect(), maxval })
}

/// Column `j` is the row-major flattening of the `j`-th file in lexicographic
/// order, scaled by its maxval.
pub fn load_frames(pattern: &str) -> Result<SnapshotMatrix> {
    Ok(load_frame_set(pattern)?.snapshots)
}

/// Writes `stems[j].pgm` for every frame, quantized to `maxval` levels.
pub fn save_frames(d: &SnapshotMatrix, dir: impl AsRef<Path>, stems: &[String], maxval: u16) -> Result<()> {
    let dir = dir.as_ref();
    if stems.len() != d.frames() {
        return Err(Error::Input(format!("{} names for {} frames", stems.len(), d.frames())));
    }
    if maxval == 0 {
        return Err(Error::Config("maxval must be positive".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (j, s) in stems.iter().enumerate() {
        let samples = d.data().column(j).iter().map(|v| (v * maxval as f64).round() as u16).collect();
        let img = PgmImage { height: d.height(), width: d.width(), maxval, samples };
        write_pgm(dir.join(format!("{s}.pgm")), &img)?;
    }
    Ok(())
}

/// `frame_0000`, `frame_0001`, ...
pub fn numbered_stems(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("frame_{i:04}")).collect()
}

pub fn write_mask(path: impl AsRef<Path>, m: &MaskFrame) -> Result<()> {
    let samples = m.pixels.iter().map(|p| if *p { 255 } else { 0 }).collect();
    write_pgm(path, &PgmImage { height: m.height, width: m.width, maxval: 255, samples })
}

/// Any nonzero sample is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskFrame> {
    let img = read_pgm(path)?;
    MaskFrame::new(img.height, img.width, img.samples.iter().map(|s| *s != 0).collect())
}

pub fn save_masks(seq: &ForegroundMaskSequence, dir: impl AsRef<Path>, stems: &[String]) -> Result<()> {
    let dir = dir.as_ref();
    if stems.len() != seq.len() {
        return Err(Error::Input(format!("{} names for {} masks", stems.len(), seq.len())));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (m, s) in seq.frames.iter().zip(stems) {
        write_mask(dir.join(format!("{s}.pgm")), m)?;
    }
    Ok(())
}

pub fn load_masks(pattern: &str) -> Result<(ForegroundMaskSequence, Vec<String>)> {
    let files = resolve_frames(pattern)?;
    if files.is_empty() {
        return Err(Error::Input(format!("pattern {pattern:?} matched no masks")));
    }
    let frames = files.iter().map(read_mask).collect::<Result<Vec<_>>>()?;
    Ok((ForegroundMaskSequence { frames, tau: None }, files.iter().map(|p| stem(p)).collect()))
}
