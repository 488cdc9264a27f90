//! Low-rank dynamic mode decomposition of a video snapshot matrix.
//!
//! Frames are stacked as columns of `D`. The shifted sequences `X = D[:, 0..n−1]`
//! and `Y = D[:, 1..n]` are linked by a linear operator whose projection onto the
//! leading left singular vectors of `X` is `M̃ = UᵀYVΣ⁻¹`. Eigenpairs of `M̃`
//! give the DMD eigenvalues and, lifted through `YVΣ⁻¹`, the dynamic modes.
//! Amplitudes are fitted to an anchor frame by least squares.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use crate::linalg::{self, matfile, SketchConfig, SvdFactors};
use crate::{Complex64, ComplexMatrix, Error, Matrix, Result};

/// Relative cutoff below which singular values of `X` are not inverted.
pub const DEFAULT_RCOND: f64 = 1e-12;

/// Columns are consecutive grayscale frames, flattened row-major, with
/// intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: Matrix,
    height: usize,
    width: usize,
    dt: f64,
}

impl SnapshotMatrix {
    pub fn new(data: Matrix, height: usize, width: usize) -> Result<Self> {
        if height * width != data.nrows() || height == 0 || width == 0 {
            return Err(Error::Input(format!(
                "frame geometry {height}×{width} does not match {} pixels",
                data.nrows()
            )));
        }
        if data.ncols() < 2 {
            return Err(Error::Input(format!("need at least 2 frames, got {}", data.ncols())));
        }
        if let Some(bad) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Input(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(SnapshotMatrix { data, height, width, dt: 1.0 })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn pixels(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame(&self, t: usize) -> Vec<f64> {
        self.data.column(t).iter().copied().collect()
    }

    /// Frames `range` as a new snapshot matrix with the same geometry and `dt`.
    pub fn slice(&self, range: Range<usize>) -> Result<SnapshotMatrix> {
        if range.end > self.frames() || range.len() < 2 {
            return Err(Error::Input(format!("frame range {range:?} invalid for {} frames", self.frames())));
        }
        let data = self.data.columns(range.start, range.len()).into_owned();
        Ok(SnapshotMatrix { data, height: self.height, width: self.width, dt: self.dt })
    }
}

/// Which frame the amplitudes are fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeAnchor {
    FirstFrame,
    /// Per-pixel median over the left sequence `X`.
    #[default]
    MedianFrame,
    Frame(usize),
}

impl fmt::Display for AmplitudeAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmplitudeAnchor::FirstFrame => write!(f, "first"),
            AmplitudeAnchor::MedianFrame => write!(f, "median"),
            AmplitudeAnchor::Frame(i) => write!(f, "frame:{i}"),
        }
    }
}

impl FromStr for AmplitudeAnchor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(AmplitudeAnchor::FirstFrame),
            "median" => Ok(AmplitudeAnchor::MedianFrame),
            _ => s
                .strip_prefix("frame:")
                .and_then(|i| i.parse().ok())
                .map(AmplitudeAnchor::Frame)
                .ok_or_else(|| Error::Config(format!("unknown amplitude anchor {s:?} (first | median | frame:<i>)"))),
        }
    }
}

/// How the modes are lifted from the reduced eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeFormula {
    /// `Φ = YVΣ⁻¹W`
    #[default]
    Exact,
    /// `Φ = UW`
    Projected,
}

/// Which SVD feeds the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdMethod {
    Randomized(SketchConfig),
    Deterministic { rank: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmdOptions {
    pub anchor: AmplitudeAnchor,
    pub mode_formula: ModeFormula,
    pub rcond: f64,
    /// Refit amplitudes on consecutive sub-chunks of this many frames.
    pub amplitude_chunk: Option<usize>,
}

impl Default for DmdOptions {
    fn default() -> Self {
        DmdOptions {
            anchor: AmplitudeAnchor::default(),
            mode_formula: ModeFormula::default(),
            rcond: DEFAULT_RCOND,
            amplitude_chunk: None,
        }
    }
}

/// Amplitudes refitted on frames `start..start + len`; inside the chunk the
/// time origin is `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeChunk {
    pub start: usize,
    pub len: usize,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmdDecomposition {
    /// m×k dynamic modes.
    pub modes: ComplexMatrix,
    /// Sorted by `|ln λ|` ascending, ties by ascending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub amplitudes: Vec<Complex64>,
    /// Empty unless amplitudes were refitted per sub-chunk.
    pub amplitude_chunks: Vec<AmplitudeChunk>,
    pub n_frames: usize,
    pub dt: f64,
    pub height: usize,
    pub width: usize,
    pub anchor: AmplitudeAnchor,
    pub seed: Option<u64>,
}

impl DmdDecomposition {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Amplitudes in effect at frame `t` and the exponent to raise `λ` to.
    pub fn amplitudes_at(&self, t: usize) -> (&[Complex64], usize) {
        match self.amplitude_chunks.iter().find(|c| t >= c.start && t < c.start + c.len) {
            Some(c) => (&c.amplitudes, t - c.start),
            None => (&self.amplitudes, t),
        }
    }
}

/// `X` = frames `0..n−1`, `Y` = frames `1..n`.
pub fn split_snapshots(d: &SnapshotMatrix) -> Result<(Matrix, Matrix)> {
    let n = d.frames();
    if n < 2 {
        return Err(Error::Input(format!("need at least 2 frames, got {n}")));
    }
    Ok((d.data.columns(0, n - 1).into_owned(), d.data.columns(1, n - 1).into_owned()))
}

/// Drop singular triplets with `σ_i < rcond·σ₁`.
pub fn truncate_for_inversion(svd: &SvdFactors, rcond: f64) -> Result<SvdFactors> {
    let r = svd.effective_rank(rcond);
    if r == 0 {
        return Err(Error::Degenerate("all singular values of X fall below the inversion cutoff".into()));
    }
    Ok(svd.truncate(r))
}

/// `M̃ = UᵀYVΣ⁻¹`, after dropping singular values below the default cutoff.
pub fn reduced_operator(svd: &SvdFactors, y: &Matrix) -> Result<Matrix> {
    let svd = truncate_for_inversion(svd, DEFAULT_RCOND)?;
    if svd.u.nrows() != y.nrows() || svd.v.nrows() != y.ncols() {
        return Err(Error::Dimension(format!(
            "factors {}×{} / {}×{} do not fit Y {}×{}",
            svd.u.nrows(),
            svd.rank(),
            svd.v.nrows(),
            svd.rank(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(svd.u.tr_mul(&scaled_yv(y, &svd.v, &svd.singular_values)))
}

/// `YVΣ⁻¹`
fn scaled_yv(y: &Matrix, v: &Matrix, sigma: &[f64]) -> Matrix {
    let mut yv = y * v;
    for (j, s) in sigma.iter().enumerate() {
        yv.column_mut(j).scale_mut(1.0 / s);
    }
    yv
}

/// Exact DMD modes `Φ = YVΣ⁻¹W`, unnormalized.
pub fn dmd_modes(y: &Matrix, v: &Matrix, sigma: &[f64], w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = sigma.len();
    if v.nrows() != y.ncols() || v.ncols() != k || w.nrows() != k {
        return Err(Error::Dimension(format!(
            "mode lift: Y {}×{}, V {}×{}, σ {k}, W {}×{}",
            y.nrows(),
            y.ncols(),
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Degenerate("mode lift needs strictly positive singular values".into()));
    }
    Ok(real_times_complex(&scaled_yv(y, v, sigma), w))
}

/// Projected DMD modes `Φ = UW`.
pub fn projected_modes(u: &Matrix, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    if u.ncols() != w.nrows() {
        return Err(Error::Dimension(format!("U has {} columns, W has {} rows", u.ncols(), w.nrows())));
    }
    Ok(real_times_complex(u, w))
}

fn real_times_complex(a: &Matrix, w: &ComplexMatrix) -> ComplexMatrix {
    let re = a * w.map(|z| z.re);
    let im = a * w.map(|z| z.im);
    ComplexMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// Per-pixel median over the columns of `a` (mean of the middle pair for an
/// even count).
pub fn median_frame(a: &Matrix) -> Vec<f64> {
    let n = a.ncols();
    let mut buf = vec![0.0; n];
    (0..a.nrows())
        .map(|i| {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = a[(i, j)];
            }
            buf.sort_by(f64::total_cmp);
            if n % 2 == 1 {
                buf[n / 2]
            } else {
                0.5 * (buf[n / 2 - 1] + buf[n / 2])
            }
        })
        .collect()
}

fn anchor_frame(d: &SnapshotMatrix, anchor: AmplitudeAnchor) -> Result<Vec<f64>> {
    let n = d.frames();
    match anchor {
        AmplitudeAnchor::FirstFrame => Ok(d.frame(0)),
        AmplitudeAnchor::MedianFrame => Ok(median_frame(&d.data.columns(0, n - 1).into_owned())),
        AmplitudeAnchor::Frame(i) if i + 1 < n => Ok(d.frame(i)),
        AmplitudeAnchor::Frame(i) => {
            Err(Error::Input(format!("anchor frame {i} outside the left sequence 0..{}", n - 1)))
        }
    }
}

/// Least-squares amplitudes `b` with `Φb ≈ f_anchor`.
pub fn dmd_amplitudes(phi: &ComplexMatrix, d: &SnapshotMatrix, anchor: AmplitudeAnchor) -> Result<Vec<Complex64>> {
    if phi.nrows() != d.pixels() {
        return Err(Error::Dimension(format!("modes have {} rows, video has {} pixels", phi.nrows(), d.pixels())));
    }
    let f: Vec<Complex64> = anchor_frame(d, anchor)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    linalg::least_squares(phi, &f)
}

/// `k × n` matrix with entry `(i, t) = λ_i^t`, `t = 0..n−1`.
pub fn vandermonde(lambda: &[Complex64], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(lambda.len(), n);
    for (i, l) in lambda.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for t in 0..n {
            out[(i, t)] = p;
            p *= l;
        }
    }
    out
}

/// Randomized DMD with the given sketch and amplitude anchor.
pub fn rdmd(d: &SnapshotMatrix, cfg: &SketchConfig, anchor: AmplitudeAnchor) -> Result<DmdDecomposition> {
    dmd(d, SvdMethod::Randomized(*cfg), &DmdOptions { anchor, ..DmdOptions::default() })
}

/// DMD pipeline: split, truncated SVD of `X`, reduced operator, eigenpairs,
/// modes, amplitudes.
pub fn dmd(d: &SnapshotMatrix, method: SvdMethod, opts: &DmdOptions) -> Result<DmdDecomposition> {
    let (x, y) = split_snapshots(d)?;
    let (svd, seed) = match method {
        SvdMethod::Randomized(cfg) => (linalg::rsvd(&x, &cfg)?, Some(cfg.seed)),
        SvdMethod::Deterministic { rank } => (linalg::deterministic_svd(&x, rank)?, None),
    };
    let svd = truncate_for_inversion(&svd, opts.rcond)?;
    let reduced = svd.u.tr_mul(&scaled_yv(&y, &svd.v, &svd.singular_values));
    let eigen = linalg::eig(&reduced)?;

    let mut order: Vec<usize> = (0..eigen.values.len()).collect();
    let keys: Vec<f64> = eigen.values.iter().map(|l| log_modulus(*l)).collect();
    order.sort_by(|&a, &b| {
        keys[a].total_cmp(&keys[b]).then(eigen.values[a].im.total_cmp(&eigen.values[b].im))
    });
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| eigen.values[i]).collect();
    let w = ComplexMatrix::from_fn(eigen.vectors.nrows(), order.len(), |r, c| eigen.vectors[(r, order[c])]);

    let modes = match opts.mode_formula {
        ModeFormula::Exact => dmd_modes(&y, &svd.v, &svd.singular_values, &w)?,
        ModeFormula::Projected => projected_modes(&svd.u, &w)?,
    };
    if modes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite dynamic modes".into()));
    }
    let amplitudes = dmd_amplitudes(&modes, d, opts.anchor)?;

    let mut amplitude_chunks = Vec::new();
    if let Some(size) = opts.amplitude_chunk {
        if size < 2 {
            return Err(Error::Config(format!("amplitude chunk must span at least 2 frames, got {size}")));
        }
        if size < d.frames() {
            let mut start = 0;
            while start < d.frames() {
                let mut end = (start + size).min(d.frames());
                // absorb a trailing single frame into the previous chunk
                if d.frames() - end < 2 {
                    end = d.frames();
                }
                let part = d.slice(start..end)?;
                let b = match opts.anchor {
                    AmplitudeAnchor::MedianFrame => {
                        let f = median_frame(part.data());
                        linalg::least_squares(&modes, &f.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>())?
                    }
                    AmplitudeAnchor::FirstFrame | AmplitudeAnchor::Frame(_) => {
                        dmd_amplitudes(&modes, &part, AmplitudeAnchor::FirstFrame)?
                    }
                };
                amplitude_chunks.push(AmplitudeChunk { start, len: end - start, amplitudes: b });
                start = end;
            }
        }
    }

    Ok(DmdDecomposition {
        modes,
        eigenvalues,
        amplitudes,
        amplitude_chunks,
        n_frames: d.frames(),
        dt: d.dt(),
        height: d.height(),
        width: d.width(),
        anchor: opts.anchor,
        seed,
    })
}

/// `|ln λ|` on the principal branch; `+∞` for `λ = 0`.
pub(crate) fn log_modulus(l: Complex64) -> f64 {
    if l.norm() == 0.0 {
        f64::INFINITY
    } else {
        l.ln().norm()
    }
}

/// `Σ_{i∈indices} b_i φ_i λ_i^t` for every `t` in `t_range`, one column per `t`.
/// An empty index set yields zeros.
pub fn reconstruct(dec: &DmdDecomposition, indices: &[usize], t_range: Range<usize>) -> Result<ComplexMatrix> {
    let k = dec.rank();
    if let Some(bad) = indices.iter().find(|&&i| i >= k) {
        return Err(Error::Input(format!("mode index {bad} out of range for rank {k}")));
    }
    if t_range.end > dec.n_frames || t_range.start > t_range.end {
        return Err(Error::Input(format!("time range {t_range:?} outside 0..{}", dec.n_frames)));
    }
    let m = dec.modes.nrows();
    let mut out = ComplexMatrix::zeros(m, t_range.len());
    for (col, t) in t_range.enumerate() {
        let (b, exponent) = dec.amplitudes_at(t);
        for &i in indices {
            let coeff = b[i] * dec.eigenvalues[i].powu(exponent as u32);
            let mut dst = out.column_mut(col);
            dst.axpy(coeff, &dec.modes.column(i), Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

const MANIFEST: &str = "manifest.txt";

/// Write `manifest.txt`, `modes.cpx`, `eigenvalues.cpx`, `amplitudes.cpx` and,
/// for chunked fits, `amplitude_chunks.cpx` into `dir`.
pub fn save_decomposition(dec: &DmdDecomposition, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("rdmd-decomposition 1\n");
    manifest.push_str(&format!("rank={}\n", dec.rank()));
    manifest.push_str(&format!("pixels={}\n", dec.modes.nrows()));
    manifest.push_str(&format!("n_frames={}\n", dec.n_frames));
    manifest.push_str(&format!("dt={:?}\n", dec.dt));
    manifest.push_str(&format!("height={}\nwidth={}\n", dec.height, dec.width));
    manifest.push_str(&format!("anchor={}\n", dec.anchor));
    match dec.seed {
        Some(s) => manifest.push_str(&format!("seed={s}\n")),
        None => manifest.push_str("seed=none\n"),
    }
    if !dec.amplitude_chunks.is_empty() {
        let spans: Vec<String> = dec.amplitude_chunks.iter().map(|c| format!("{}+{}", c.start, c.len)).collect();
        manifest.push_str(&format!("amplitude_chunks={}\n", spans.join(",")));
        let k = dec.rank();
        let table = ComplexMatrix::from_fn(dec.amplitude_chunks.len(), k, |r, c| dec.amplitude_chunks[r].amplitudes[c]);
        matfile::write_complex_matrix(dir.join("amplitude_chunks.cpx"), &table)?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    matfile::write_complex_matrix(dir.join("modes.cpx"), &dec.modes)?;
    matfile::write_complex_matrix(dir.join("eigenvalues.cpx"), &column(&dec.eigenvalues))?;
    matfile::write_complex_matrix(dir.join("amplitudes.cpx"), &column(&dec.amplitudes))?;
    Ok(())
}

fn column(v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(v.len(), 1, v)
}

pub fn load_decomposition(dir: impl AsRef<Path>) -> Result<DmdDecomposition> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("rdmd-decomposition 1") {
        return Err(Error::format(&path, "missing manifest header"));
    }
    let mut fields = std::collections::HashMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::format(&path, format!("bad line {line:?}")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| fields.get(key).ok_or_else(|| Error::format(&path, format!("missing {key}")));
    fn num<T: FromStr>(path: &Path, key: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::format(path, format!("bad value for {key}: {v:?}")))
    }
    let rank: usize = num(&path, "rank", get("rank")?)?;
    let n_frames = num(&path, "n_frames", get("n_frames")?)?;
    let dt = num(&path, "dt", get("dt")?)?;
    let height = num(&path, "height", get("height")?)?;
    let width = num(&path, "width", get("width")?)?;
    let anchor = get("anchor")?.parse()?;
    let seed = match get("seed")?.as_str() {
        "none" => None,
        s => Some(num(&path, "seed", s)?),
    };
    let modes = matfile::read_complex_matrix(dir.join("modes.cpx"))?;
    let eigenvalues: Vec<Complex64> = matfile::read_complex_matrix(dir.join("eigenvalues.cpx"))?.iter().copied().collect();
    let amplitudes: Vec<Complex64> = matfile::read_complex_matrix(dir.join("amplitudes.cpx"))?.iter().copied().collect();
    if modes.ncols() != rank || eigenvalues.len() != rank || amplitudes.len() != rank {
        return Err(Error::format(dir, "component sizes disagree with manifest rank"));
    }
    let mut amplitude_chunks = Vec::new();
    if let Some(spans) = fields.get("amplitude_chunks") {
        let table = matfile::read_complex_matrix(dir.join("amplitude_chunks.cpx"))?;
        for (r, span) in spans.split(',').enumerate() {
            let (s, l) = span.split_once('+').ok_or_else(|| Error::format(&path, "bad chunk span"))?;
            if r >= table.nrows() || table.ncols() != rank {
                return Err(Error::format(dir, "amplitude chunk table does not match manifest"));
            }
            amplitude_chunks.push(AmplitudeChunk {
                start: num(&path, "chunk start", s)?,
                len: num(&path, "chunk length", l)?,
                amplitudes: table.row(r).iter().copied().collect(),
            });
        }
    }
    Ok(DmdDecomposition { modes, eigenvalues, amplitudes, amplitude_chunks, n_frames, dt, height, width, anchor, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn snapshots(data: Matrix) -> SnapshotMatrix {
        let m = data.nrows();
        SnapshotMatrix::new(data, m, 1).unwrap()
    }

    /// Real video `f_t = Σ Re(b_i φ_i λ_i^t)` from planted conjugate-closed
    /// modes; the spatial vectors are random orthonormal so the data has
    /// exact rank `len(eigs)`.
    fn planted(m: usize, n: usize, offset: f64) -> (SnapshotMatrix, Vec<Complex64>) {
        let basis = linalg::random_orthonormal(m, 3, 77).unwrap();
        let l = c(0.95 * 0.3f64.cos(), 0.95 * 0.3f64.sin());
        let data = Matrix::from_fn(m, n, |j, t| {
            let osc = l.powu(t as u32);
            offset + 0.3 * basis[(j, 0)] + 0.2 * (osc.re * basis[(j, 1)] + osc.im * basis[(j, 2)])
        });
        (snapshots(data), vec![c(1.0, 0.0), l, l.conj()])
    }

    fn set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let one = |x: &[Complex64], y: &[Complex64]| {
            x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        one(a, b).max(one(b, a))
    }

    #[test]
    fn split_definition_and_overlap() {
        let d = snapshots(Matrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]));
        let (x, y) = split_snapshots(&d).unwrap();
        assert_eq!(x, Matrix::from_row_slice(2, 2, &[0.1, 0.2, 0.4, 0.5]));
        assert_eq!(y, Matrix::from_row_slice(2, 2, &[0.2, 0.3, 0.5, 0.6]));
        assert_eq!(x.column(1), y.column(0));

        let d2 = snapshots(Matrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]));
        let (x, y) = split_snapshots(&d2).unwrap();
        assert_eq!((x.ncols(), y.ncols()), (1, 1));
    }

    #[test]
    fn snapshot_validation() {
        assert!(SnapshotMatrix::new(Matrix::zeros(4, 1), 2, 2).is_err());
        assert!(SnapshotMatrix::new(Matrix::zeros(4, 3), 3, 2).is_err());
        assert!(SnapshotMatrix::new(Matrix::from_element(4, 3, 1.5), 2, 2).is_err());
        assert!(SnapshotMatrix::new(Matrix::zeros(4, 3), 2, 2).unwrap().with_dt(0.0).is_err());
    }

    #[test]
    fn static_video_operator_is_identity() {
        let frame: Vec<f64> = (0..10).map(|i| 0.1 + 0.05 * i as f64).collect();
        let d = snapshots(Matrix::from_fn(10, 6, |j, _| frame[j]));
        let (x, y) = split_snapshots(&d).unwrap();
        let svd = linalg::deterministic_svd(&x, 3).unwrap();
        let m = reduced_operator(&svd, &y).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_spectrum_and_scale_invariance() {
        let (d, eigs) = planted(40, 30, 0.5);
        let (x, y) = split_snapshots(&d).unwrap();
        let svd = linalg::deterministic_svd(&x, 3).unwrap();
        let m = reduced_operator(&svd, &y).unwrap();
        let e = linalg::eig(&m).unwrap();
        assert!(set_distance(&e.values, &eigs) < 1e-8);

        let scaled = snapshots(d.data() * 0.5);
        let (xs, ys) = split_snapshots(&scaled).unwrap();
        let ms = reduced_operator(&linalg::deterministic_svd(&xs, 3).unwrap(), &ys).unwrap();
        assert!((ms - m).abs().max() < 1e-10);
    }

    #[test]
    fn all_below_cutoff_is_degenerate() {
        let svd = SvdFactors { u: Matrix::zeros(3, 1), singular_values: vec![0.0], v: Matrix::zeros(2, 1) };
        assert!(matches!(reduced_operator(&svd, &Matrix::zeros(3, 2)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn modes_align_with_operator_eigenvectors() {
        // f_{t+1} = A f_t for an explicit 4×4 operator of rank 3
        let p = linalg::random_orthonormal(4, 3, 5).unwrap();
        let lam = [1.0, 0.8, 0.5];
        let mut a = Matrix::zeros(4, 4);
        for (i, l) in lam.iter().enumerate() {
            a += p.column(i) * p.column(i).transpose() * *l;
        }
        let mut data = Matrix::zeros(4, 12);
        let mut f = p.column(0) * 0.6 + p.column(1) * 0.3 + p.column(2) * 0.2;
        for t in 0..12 {
            data.set_column(t, &f);
            f = &a * f;
        }
        let x = data.columns(0, 11).into_owned();
        let y = data.columns(1, 11).into_owned();
        let svd = linalg::deterministic_svd(&x, 3).unwrap();
        let m = reduced_operator(&svd, &y).unwrap();
        let e = linalg::eig(&m).unwrap();
        let phi = dmd_modes(&y, &svd.v, &svd.singular_values, &e.vectors).unwrap();
        for i in 0..3 {
            let target = (0..3).min_by(|&a, &b| {
                (e.values[i].re - lam[a]).abs().total_cmp(&(e.values[i].re - lam[b]).abs())
            }).unwrap();
            let col = phi.column(i);
            let dir = p.column(target);
            let dot: Complex64 = col.iter().zip(dir.iter()).map(|(z, r)| z * r).sum();
            assert!(dot.norm() / col.norm() >= 1.0 - 1e-6);
        }

        // projected and exact agree on exactly low-rank data
        let projected = projected_modes(&svd.u, &e.vectors).unwrap();
        for i in 0..3 {
            let a = phi.column(i);
            let b = projected.column(i);
            let dot: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
            assert!(dot.norm() / (a.norm() * b.norm()) >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn amplitudes_single_mode() {
        let d = snapshots(Matrix::from_fn(5, 4, |j, _| 0.1 * (j + 1) as f64));
        let phi = ComplexMatrix::from_fn(5, 1, |j, _| c(0.1 * (j + 1) as f64, 0.0));
        for anchor in [AmplitudeAnchor::FirstFrame, AmplitudeAnchor::MedianFrame, AmplitudeAnchor::Frame(2)] {
            let b = dmd_amplitudes(&phi, &d, anchor).unwrap();
            assert!((b[0] - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(dmd_amplitudes(&phi, &d, AmplitudeAnchor::Frame(3)).is_err());
    }

    #[test]
    fn planted_amplitudes_are_recovered() {
        let phi = ComplexMatrix::from_fn(6, 2, |j, i| c(if i == 0 { 0.1 } else { 0.05 * j as f64 }, 0.0));
        let lam = [c(1.0, 0.0), c(0.9, 0.0)];
        let b = [c(2.0, 0.0), c(0.5, 0.0)];
        let data = Matrix::from_fn(6, 5, |j, t| {
            (0..2).map(|i| (b[i] * phi[(j, i)] * lam[i].powu(t as u32)).re).sum()
        });
        let d = snapshots(data);
        let got = dmd_amplitudes(&phi, &d, AmplitudeAnchor::FirstFrame).unwrap();
        for i in 0..2 {
            assert!((got[i] - b[i]).norm() / b[i].norm() < 1e-6);
        }
    }

    #[test]
    fn vandermonde_rows() {
        let v = vandermonde(&[c(1.0, 0.0)], 4);
        assert!(v.iter().all(|z| *z == c(1.0, 0.0)));
        let v = vandermonde(&[c(2.0, 0.0)], 3);
        assert_eq!(v.row(0).iter().copied().collect::<Vec<_>>(), vec![c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let v = vandermonde(&[c(0.0, 1.0)], 5);
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)];
        for (a, b) in v.row(0).iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn static_video_rdmd() {
        let frame: Vec<f64> = (0..100).map(|i| (i % 17) as f64 / 17.0).collect();
        let d = snapshots(Matrix::from_fn(100, 20, |j, _| frame[j]));
        let dec = rdmd(&d, &SketchConfig::new(1, 2, 1, 3), AmplitudeAnchor::MedianFrame).unwrap();
        assert_eq!(dec.rank(), 1);
        assert!((dec.eigenvalues[0] - c(1.0, 0.0)).norm() < 1e-8);
        let rec = reconstruct(&dec, &[0], 0..20).unwrap();
        for t in 0..20 {
            for j in 0..100 {
                assert!((rec[(j, t)] - c(frame[j], 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn planted_spectrum_recovered_and_sorted() {
        let (d, eigs) = planted(200, 60, 0.5);
        for (p, q) in [(0, 0), (2, 1), (4, 2)] {
            let dec = rdmd(&d, &SketchConfig::new(3, p, q, 11), AmplitudeAnchor::FirstFrame).unwrap();
            assert!(set_distance(&dec.eigenvalues, &eigs) < 1e-6, "p={p} q={q}");
            assert!((dec.eigenvalues[0] - c(1.0, 0.0)).norm() < 1e-6);
            assert!(dec.eigenvalues[1].im < 0.0 && dec.eigenvalues[2].im > 0.0);
        }
        let det = dmd(&d, SvdMethod::Deterministic { rank: 3 }, &DmdOptions::default()).unwrap();
        let ran = dmd(&d, SvdMethod::Randomized(SketchConfig::new(3, 2, 1, 5)), &DmdOptions::default()).unwrap();
        assert!(set_distance(&det.eigenvalues, &ran.eigenvalues) < 1e-4);
    }

    #[test]
    fn conjugate_modes_and_amplitudes() {
        let (d, _) = planted(80, 40, 0.5);
        let dec = rdmd(&d, &SketchConfig::new(3, 2, 1, 4), AmplitudeAnchor::FirstFrame).unwrap();
        let (a, b) = (1, 2);
        assert_eq!(dec.eigenvalues[a], dec.eigenvalues[b].conj());
        let diff = dec.modes.column(a) - dec.modes.column(b).map(|z| z.conj());
        assert!(diff.norm() < 1e-8);
        assert!((dec.amplitudes[a] - dec.amplitudes[b].conj()).norm() < 1e-8);
    }

    #[test]
    fn full_reconstruction_round_trip() {
        let (d, _) = planted(120, 50, 0.5);
        let dec = rdmd(&d, &SketchConfig::new(3, 2, 1, 8), AmplitudeAnchor::FirstFrame).unwrap();
        let rec = reconstruct(&dec, &[0, 1, 2], 0..50).unwrap();
        let err = (rec.map(|z| z.re) - d.data()).norm();
        assert!(err <= 1e-6 * d.data().norm(), "err {err}");
        assert!(reconstruct(&dec, &[], 0..50).unwrap().iter().all(|z| *z == c(0.0, 0.0)));
        assert!(reconstruct(&dec, &[3], 0..5).is_err());
        assert!(reconstruct(&dec, &[0], 0..51).is_err());
    }

    #[test]
    fn shift_moves_only_static_content() {
        let (d, _) = planted(100, 40, 0.4);
        let (d2, _) = planted(100, 40, 0.5);
        let a = rdmd(&d, &SketchConfig::new(4, 2, 1, 8), AmplitudeAnchor::FirstFrame).unwrap();
        let b = rdmd(&d2, &SketchConfig::new(4, 2, 1, 8), AmplitudeAnchor::FirstFrame).unwrap();
        let moving = |dec: &DmdDecomposition| {
            dec.eigenvalues.iter().copied().filter(|l| (l - c(1.0, 0.0)).norm() > 1e-3).collect::<Vec<_>>()
        };
        let (ma, mb) = (moving(&a), moving(&b));
        assert_eq!(ma.len(), 2);
        assert!(set_distance(&ma, &mb) < 1e-6);
    }

    #[test]
    fn chunked_amplitudes_cover_sequence() {
        let (d, _) = planted(60, 41, 0.5);
        let opts = DmdOptions { amplitude_chunk: Some(10), anchor: AmplitudeAnchor::FirstFrame, ..DmdOptions::default() };
        let dec = dmd(&d, SvdMethod::Randomized(SketchConfig::new(3, 2, 1, 1)), &opts).unwrap();
        let spans: Vec<(usize, usize)> = dec.amplitude_chunks.iter().map(|c| (c.start, c.len)).collect();
        assert_eq!(spans, vec![(0, 10), (10, 10), (20, 10), (30, 11)]);
        // exact dynamics: refitting at each chunk start reproduces the data
        let rec = reconstruct(&dec, &[0, 1, 2], 0..41).unwrap();
        assert!((rec.map(|z| z.re) - d.data()).norm() < 1e-6 * d.data().norm());
    }

    #[test]
    fn save_load_round_trip() {
        let (d, _) = planted(30, 20, 0.5);
        let opts = DmdOptions { amplitude_chunk: Some(8), ..DmdOptions::default() };
        let dec = dmd(&d, SvdMethod::Randomized(SketchConfig::new(3, 1, 1, 2)), &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_decomposition(&dec, dir.path()).unwrap();
        assert_eq!(load_decomposition(dir.path()).unwrap(), dec);
    }

    #[test]
    fn anchor_parse_display() {
        for a in [AmplitudeAnchor::FirstFrame, AmplitudeAnchor::MedianFrame, AmplitudeAnchor::Frame(12)] {
            assert_eq!(a.to_string().parse::<AmplitudeAnchor>().unwrap(), a);
        }
        assert!("mean".parse::<AmplitudeAnchor>().is_err());
    }
}
