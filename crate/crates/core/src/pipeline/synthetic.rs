//! Synthetic fixed-camera videos with exact ground truth.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::background::{ForegroundMaskSequence, MaskFrame};
use crate::dmd::SnapshotMatrix;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.height && c >= self.col && c < self.col + self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    /// Smooth diagonal gradient, constant in time.
    Static,
    /// Static gradient plus a travelling wave inside `region`:
    /// `amplitude · cos(2π(t/period − c/wavelength))`. The wave has rank 2,
    /// so it contributes a conjugate eigenvalue pair `e^{±2πi/period}`.
    Texture { amplitude: f64, period: f64, wavelength: f64, region: Rect },
}

/// A rectangle of constant intensity moving in a straight line. Positions
/// are rounded to whole pixels; parts outside the frame are clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingObject {
    pub height: usize,
    pub width: usize,
    pub intensity: f64,
    /// `(row, col)` of the top-left corner at frame 0.
    pub start: (f64, f64),
    /// Pixels per frame, `(rows, cols)`.
    pub velocity: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub background: Background,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    pub objects: Vec<MovingObject>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// A 64×64, 200-frame video with one 12×12 square crossing a noisy
    /// static scene.
    pub fn moving_square(seed: u64) -> Self {
        SyntheticSpec {
            height: 64,
            width: 64,
            frames: 200,
            background: Background::Static,
            noise_sigma: 0.05,
            objects: vec![MovingObject {
                height: 12,
                width: 12,
                intensity: 0.65,
                start: (6.0, -12.0),
                velocity: (0.25, 0.4),
            }],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Config("frame geometry must be nonzero".into()));
        }
        if self.frames < 2 {
            return Err(Error::Config(format!("need at least 2 frames, got {}", self.frames)));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!("noise σ must be finite and nonnegative, got {}", self.noise_sigma)));
        }
        if let Background::Texture { amplitude, period, wavelength, region } = self.background {
            if !(amplitude >= 0.0 && amplitude <= 0.5) {
                return Err(Error::Config(format!("texture amplitude {amplitude} outside [0, 0.5]")));
            }
            if !(period > 0.0) || !(wavelength > 0.0) {
                return Err(Error::Config("texture period and wavelength must be positive".into()));
            }
            if region.height == 0
                || region.width == 0
                || region.row + region.height > self.height
                || region.col + region.width > self.width
            {
                return Err(Error::Config(format!("texture region {region:?} not inside the frame")));
            }
        }
        for o in &self.objects {
            if o.height == 0 || o.width == 0 {
                return Err(Error::Config("object size must be nonzero".into()));
            }
            if !(0.0..=1.0).contains(&o.intensity) {
                return Err(Error::Config(format!("object intensity {} outside [0, 1]", o.intensity)));
            }
            if ![o.start.0, o.start.1, o.velocity.0, o.velocity.1].iter().all(|v| v.is_finite()) {
                return Err(Error::Config("object motion must be finite".into()));
            }
        }
        Ok(())
    }

    fn background_at(&self, r: usize, c: usize, t: usize) -> f64 {
        let base = 0.3 + 0.2 * (r as f64 / self.height as f64 + c as f64 / self.width as f64) / 2.0;
        match self.background {
            Background::Static => base,
            Background::Texture { amplitude, period, wavelength, region } => {
                if region.contains(r, c) {
                    base + amplitude * (2.0 * PI * (t as f64 / period - c as f64 / wavelength)).cos()
                } else {
                    base
                }
            }
        }
    }
}

/// Renders the video and its truth masks. Truth is set exactly where an
/// object overwrites the background; noise is added afterwards and values
/// are clamped to `[0, 1]`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SnapshotMatrix, ForegroundMaskSequence)> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut data = Matrix::zeros(h * w, spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut col = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                col[r * w + c] = spec.background_at(r, c, t);
            }
        }
        let mut mask = vec![false; h * w];
        for o in &spec.objects {
            let r0 = (o.start.0 + o.velocity.0 * t as f64).round() as i64;
            let c0 = (o.start.1 + o.velocity.1 * t as f64).round() as i64;
            for r in r0.max(0)..(r0 + o.height as i64).min(h as i64) {
                for c in c0.max(0)..(c0 + o.width as i64).min(w as i64) {
                    let i = r as usize * w + c as usize;
                    col[i] = o.intensity;
                    mask[i] = true;
                }
            }
        }
        for (dst, v) in data.column_mut(t).iter_mut().zip(col) {
            let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            *dst = (v + n).clamp(0.0, 1.0);
        }
        truth.push(MaskFrame::new(h, w, mask)?);
    }
    Ok((SnapshotMatrix::new(data, h, w)?, ForegroundMaskSequence { frames: truth, tau: None }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{rdmd, AmplitudeAnchor};
    use crate::linalg::SketchConfig;

    fn blank(background: Background) -> SyntheticSpec {
        SyntheticSpec { height: 16, width: 16, frames: 40, background, noise_sigma: 0.0, objects: vec![], seed: 1 }
    }

    #[test]
    fn static_scene_has_no_truth_and_constant_frames() {
        let (d, truth) = generate_synthetic(&blank(Background::Static)).unwrap();
        assert_eq!(truth.count_ones(), 0);
        for t in 1..d.frames() {
            assert_eq!(d.data().column(t), d.data().column(0));
        }
    }

    #[test]
    fn square_covers_sixteen_pixels_inside_frame() {
        let mut spec = blank(Background::Static);
        spec.objects.push(MovingObject { height: 4, width: 4, intensity: 1.0, start: (2.0, 1.0), velocity: (0.0, 1.0) });
        spec.frames = 10;
        let (d, truth) = generate_synthetic(&spec).unwrap();
        for (t, m) in truth.frames.iter().enumerate() {
            assert_eq!(m.count_ones(), 16);
            assert!(m.get(2, 1 + t) && m.get(5, 4 + t) && !m.get(6, 1 + t));
            assert_eq!(d.data()[(2 * 16 + 1 + t, t)], 1.0);
        }
    }

    #[test]
    fn objects_clip_at_borders() {
        let mut spec = blank(Background::Static);
        spec.objects.push(MovingObject { height: 4, width: 4, intensity: 0.8, start: (-2.0, 14.0), velocity: (0.0, 0.0) });
        let (_, truth) = generate_synthetic(&spec).unwrap();
        assert_eq!(truth.frames[0].count_ones(), 4);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut spec = SyntheticSpec::moving_square(9);
        spec.frames = 5;
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.0, b.0);
        spec.seed = 10;
        assert_ne!(generate_synthetic(&spec).unwrap().0, a.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = blank(Background::Static);
        spec.objects.push(MovingObject { height: 1, width: 1, intensity: 1.5, start: (0.0, 0.0), velocity: (0.0, 0.0) });
        assert!(matches!(generate_synthetic(&spec), Err(Error::Config(_))));
        let region = Rect { row: 10, col: 10, height: 10, width: 2 };
        let spec = blank(Background::Texture { amplitude: 0.1, period: 20.0, wavelength: 8.0, region });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn texture_period_shows_up_as_eigenvalue_pair() {
        let region = Rect { row: 0, col: 0, height: 16, width: 16 };
        let spec = SyntheticSpec { frames: 60, ..blank(Background::Texture { amplitude: 0.15, period: 20.0, wavelength: 8.0, region }) };
        let (d, _) = generate_synthetic(&spec).unwrap();
        let dec = rdmd(&d, &SketchConfig::new(3, 2, 1, 3), AmplitudeAnchor::MedianFrame).unwrap();
        let target = 2.0 * PI / 20.0;
        let mut hits = 0;
        for l in &dec.eigenvalues {
            if (l.norm() - 1.0).abs() < 1e-3 && (l.arg().abs() - target).abs() < 1e-3 {
                hits += 1;
            }
        }
        assert_eq!(hits, 2, "{:?}", dec.eigenvalues);
    }
}
