//! Orthonormal 2-D Haar transform and the three-level pyramid built on it.
//!
//! For a 2x2 block `[[a, b], [c, d]]` (top row first):
//!
//! ```text
//! LL = (a + b + c + d) / 2     LH = (a + b - c - d) / 2
//! HL = (a - b + c - d) / 2     HH = (a - b - c + d) / 2
//! ```

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::image::Plane;

pub const LEVELS: usize = 3;

/// Dimensions must be divisible by this for a full pyramid.
pub const PYRAMID_ALIGN: usize = 1 << LEVELS;

#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

pub fn dwt_forward(image: ArrayView2<'_, f64>) -> Result<Subbands> {
    let (rows, cols) = image.dim();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::dim(format!(
            "Haar transform needs even dimensions, got {cols}x{rows}"
        )));
    }
    let shape = (rows / 2, cols / 2);
    let mut ll = Array2::zeros(shape);
    let mut lh = Array2::zeros(shape);
    let mut hl = Array2::zeros(shape);
    let mut hh = Array2::zeros(shape);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let a = image[(2 * i, 2 * j)];
            let b = image[(2 * i, 2 * j + 1)];
            let c = image[(2 * i + 1, 2 * j)];
            let d = image[(2 * i + 1, 2 * j + 1)];
            ll[(i, j)] = (a + b + c + d) / 2.0;
            lh[(i, j)] = (a + b - c - d) / 2.0;
            hl[(i, j)] = (a - b + c - d) / 2.0;
            hh[(i, j)] = (a - b - c + d) / 2.0;
        }
    }
    Ok(Subbands { ll, lh, hl, hh })
}

pub fn dwt_inverse(bands: &Subbands) -> Result<Plane> {
    let shape = bands.ll.dim();
    if bands.lh.dim() != shape || bands.hl.dim() != shape || bands.hh.dim() != shape {
        return Err(Error::dim(format!(
            "subband shapes differ: LL {:?}, LH {:?}, HL {:?}, HH {:?}",
            shape,
            bands.lh.dim(),
            bands.hl.dim(),
            bands.hh.dim()
        )));
    }
    Ok(inverse_parts(
        bands.ll.view(),
        bands.lh.view(),
        bands.hl.view(),
        bands.hh.view(),
    ))
}

fn inverse_parts(
    ll: ArrayView2<'_, f64>,
    lh: ArrayView2<'_, f64>,
    hl: ArrayView2<'_, f64>,
    hh: ArrayView2<'_, f64>,
) -> Plane {
    let (rows, cols) = ll.dim();
    let mut out = Array2::zeros((rows * 2, cols * 2));
    for i in 0..rows {
        for j in 0..cols {
            let (s, v, h, g) = (ll[(i, j)], lh[(i, j)], hl[(i, j)], hh[(i, j)]);
            out[(2 * i, 2 * j)] = (s + v + h + g) / 2.0;
            out[(2 * i, 2 * j + 1)] = (s + v - h - g) / 2.0;
            out[(2 * i + 1, 2 * j)] = (s - v + h - g) / 2.0;
            out[(2 * i + 1, 2 * j + 1)] = (s - v - h + g) / 2.0;
        }
    }
    out
}

/// LH, HL and HH of one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

impl DetailBands {
    pub fn dim(&self) -> (usize, usize) {
        self.lh.dim()
    }

    pub fn bands(&self) -> [&Plane; 3] {
        [&self.lh, &self.hl, &self.hh]
    }

    pub fn bands_mut(&mut self) -> [&mut Plane; 3] {
        [&mut self.lh, &mut self.hl, &mut self.hh]
    }
}

/// Three cascaded Haar levels. Level `n` has subbands of size
/// `(height / 2^(n+1), width / 2^(n+1))`; only level 2 keeps its LL band.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub details: [DetailBands; LEVELS],
    pub ll: Plane,
}

impl WaveletPyramid {
    pub fn build(image: ArrayView2<'_, f64>) -> Result<Self> {
        let (rows, cols) = image.dim();
        if rows % PYRAMID_ALIGN != 0 || cols % PYRAMID_ALIGN != 0 || rows == 0 || cols == 0 {
            return Err(Error::dim(format!(
                "pyramid needs dimensions divisible by {PYRAMID_ALIGN}, got {cols}x{rows}"
            )));
        }
        let l0 = dwt_forward(image)?;
        let l1 = dwt_forward(l0.ll.view())?;
        let l2 = dwt_forward(l1.ll.view())?;
        let detail = |s: Subbands| DetailBands {
            lh: s.lh,
            hl: s.hl,
            hh: s.hh,
        };
        Ok(Self {
            ll: l2.ll.clone(),
            details: [detail(l0), detail(l1), detail(l2)],
        })
    }

    /// Inverse of [`WaveletPyramid::build`].
    pub fn collapse(&self) -> Plane {
        self.ll_at(0)
    }

    /// LL band feeding level `n` from below, i.e. the level-`n` input image
    /// reconstructed from levels `n..=2`. `ll_at(0)` is the full image and
    /// `ll_at(3)` is the stored deepest LL.
    pub fn ll_at(&self, level: usize) -> Plane {
        let mut ll = self.ll.clone();
        for n in (level..LEVELS).rev() {
            ll = self.inverse_level(n, ll.view());
        }
        ll
    }

    /// Inverse transform of level `n` with a caller-supplied LL band.
    pub fn inverse_level(&self, level: usize, ll: ArrayView2<'_, f64>) -> Plane {
        let d = &self.details[level];
        inverse_parts(ll, d.lh.view(), d.hl.view(), d.hh.view())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.ll.dim() == other.ll.dim()
    }

    /// Image dimensions `(width, height)` this pyramid reconstructs to.
    pub fn image_dims(&self) -> (usize, usize) {
        let (r, c) = self.ll.dim();
        (c * PYRAMID_ALIGN, r * PYRAMID_ALIGN)
    }

    /// Applies `f(self_coeff, other_coeff)` to every coefficient pair.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::dim("pyramids have different shapes"));
        }
        let zip = |a: &Plane, b: &Plane| Zip::from(a).and(b).map_collect(|&x, &y| f(x, y));
        let details = std::array::from_fn(|n| {
            let (a, b) = (&self.details[n], &other.details[n]);
            DetailBands {
                lh: zip(&a.lh, &b.lh),
                hl: zip(&a.hl, &b.hl),
                hh: zip(&a.hh, &b.hh),
            }
        });
        Ok(Self {
            details,
            ll: zip(&self.ll, &other.ll),
        })
    }

    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.ll
            .iter()
            .chain(
                self.details
                    .iter()
                    .flat_map(|d| d.bands().into_iter().flat_map(|b| b.iter())),
            )
            .copied()
    }

    pub fn energy(&self) -> f64 {
        self.coefficients().map(|c| c * c).sum()
    }
}

pub fn build_pyramid(image: ArrayView2<'_, f64>) -> Result<WaveletPyramid> {
    WaveletPyramid::build(image)
}

pub fn collapse_pyramid(pyramid: &WaveletPyramid) -> Plane {
    pyramid.collapse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn constant_image_has_no_detail() {
        let img = Array2::from_elem((4, 4), 8.0);
        let s = dwt_forward(img.view()).unwrap();
        assert!(s.ll.iter().all(|&v| v == 16.0));
        for b in [&s.lh, &s.hl, &s.hh] {
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn two_by_two_block() {
        let s = dwt_forward(array![[1.0, 2.0], [3.0, 4.0]].view()).unwrap();
        assert_eq!(s.ll[(0, 0)], 5.0);
        assert_eq!(s.lh[(0, 0)], -2.0);
        assert_eq!(s.hl[(0, 0)], -1.0);
        assert_eq!(s.hh[(0, 0)], 0.0);
        let back = dwt_inverse(&s).unwrap();
        assert_eq!(back, array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn zero_in_zero_out() {
        let s = dwt_forward(Array2::zeros((6, 4)).view()).unwrap();
        assert!(s.ll.iter().chain(s.hh.iter()).all(|&v| v == 0.0));
        let z = Subbands {
            ll: Array2::zeros((2, 3)),
            lh: Array2::zeros((2, 3)),
            hl: Array2::zeros((2, 3)),
            hh: Array2::zeros((2, 3)),
        };
        assert!(dwt_inverse(&z).unwrap().iter().all(|&v| v == 0.0));
        let p = WaveletPyramid::build(Array2::zeros((8, 16)).view()).unwrap();
        assert!(p.coefficients().all(|c| c == 0.0));
    }

    #[test]
    fn odd_and_mismatched_dimensions() {
        assert!(matches!(
            dwt_forward(Array2::zeros((3, 4)).view()),
            Err(Error::Dimension(_))
        ));
        let bad = Subbands {
            ll: Array2::zeros((2, 2)),
            lh: Array2::zeros((2, 2)),
            hl: Array2::zeros((2, 3)),
            hh: Array2::zeros((2, 2)),
        };
        assert!(matches!(dwt_inverse(&bad), Err(Error::Dimension(_))));
        assert!(matches!(
            WaveletPyramid::build(Array2::zeros((12, 16)).view()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn constant_pyramid() {
        let p = WaveletPyramid::build(Array2::from_elem((16, 24), 3.0).view()).unwrap();
        assert_eq!(p.ll.dim(), (2, 3));
        assert!(p.ll.iter().all(|&v| v == 24.0));
        for (n, d) in p.details.iter().enumerate() {
            assert_eq!(d.dim(), (16 >> (n + 1), 24 >> (n + 1)));
            assert!(d.bands().iter().all(|b| b.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn ll_at_matches_forward_cascade() {
        let img = Array2::from_shape_fn((16, 16), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let p = WaveletPyramid::build(img.view()).unwrap();
        let l0 = dwt_forward(img.view()).unwrap();
        let l1 = dwt_forward(l0.ll.view()).unwrap();
        let max_err = |a: &Plane, b: &Plane| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        assert!(max_err(&p.ll_at(1), &l0.ll) < 1e-12);
        assert!(max_err(&p.ll_at(2), &l1.ll) < 1e-12);
        assert_eq!(p.ll_at(3), p.ll);
    }

    proptest! {
        #[test]
        fn pyramid_round_trip_and_parseval(values in proptest::collection::vec(0.0f64..255.0, 16 * 16)) {
            let img = Array2::from_shape_vec((16, 16), values).unwrap();
            let p = WaveletPyramid::build(img.view()).unwrap();
            let back = p.collapse();
            let err = img.iter().zip(back.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9);
            let e_img: f64 = img.iter().map(|v| v * v).sum();
            if e_img > 0.0 {
                prop_assert!(((p.energy() - e_img) / e_img).abs() < 1e-6);
            }
        }
    }
}
