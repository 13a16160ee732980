//! Full-reference image quality metrics.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * MAX_INTENSITY) * (0.01 * MAX_INTENSITY);
const C2: f64 = (0.03 * MAX_INTENSITY) * (0.03 * MAX_INTENSITY);

fn same_dims(a: &IntensityImage, b: &IntensityImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dim(format!(
            "images are {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

pub fn mse(a: &IntensityImage, b: &IntensityImage) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = Zip::from(a.as_array())
        .and(b.as_array())
        .fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y));
    Ok(sum / a.as_array().len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak 255; `f64::INFINITY` for
/// identical images.
pub fn psnr(a: &IntensityImage, b: &IntensityImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (MAX_INTENSITY * MAX_INTENSITY / m).log10())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.map(|t| t / sum)
}

/// Separable Gaussian filter over the fully covered ("valid") region.
fn filter_valid(img: ArrayView2<'_, f64>, taps: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (h, w) = img.dim();
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let rows = Array2::from_shape_fn((h, ow), |(y, x)| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * img[(y, x + k)])
            .sum::<f64>()
    });
    Array2::from_shape_fn((oh, ow), |(y, x)| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * rows[(y + k, x)])
            .sum::<f64>()
    })
}

/// Mean SSIM over an 11x11 Gaussian window (sigma 1.5), valid region only.
pub fn ssim(a: &IntensityImage, b: &IntensityImage) -> Result<f64> {
    same_dims(a, b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::dim(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let taps = gaussian_taps();
    let (x, y) = (a.as_array(), b.as_array());
    let mu_x = filter_valid(x.view(), &taps);
    let mu_y = filter_valid(y.view(), &taps);
    let xx = filter_valid((x * x).view(), &taps);
    let yy = filter_valid((y * y).view(), &taps);
    let xy = filter_valid((x * y).view(), &taps);
    let mut total = 0.0;
    Zip::from(&mu_x)
        .and(&mu_y)
        .and(&xx)
        .and(&yy)
        .and(&xy)
        .for_each(|&mx, &my, &exx, &eyy, &exy| {
            let (vx, vy, cxy) = (exx - mx * mx, eyy - my * my, exy - mx * my);
            let num = (2.0 * mx * my + C1) * (2.0 * cxy + C2);
            let den = (mx * mx + my * my + C1) * (vx + vy + C2);
            total += num / den;
        });
    Ok(total / mu_x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> IntensityImage {
        IntensityImage::from_fn(w, h, |x, y| ((x * 7 + y * 3) % 200) as f64).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = ramp(16, 16);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = IntensityImage::from_fn(16, 16, |x, y| a.get(x, y) + 16.0).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0 * (255.0f64 / 16.0).log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 24.0484).abs() < 1e-3);
        let z = IntensityImage::filled(4, 4, 0.0).unwrap();
        let half = IntensityImage::from_fn(4, 4, |x, _| if x < 2 { 255.0 } else { 0.0 }).unwrap();
        assert!((psnr(&z, &half).unwrap() - 3.0103).abs() < 1e-4);
        assert!(psnr(&z, &a).is_err());
    }

    #[test]
    fn ssim_examples() {
        let a = ramp(32, 24);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let inv = IntensityImage::from_fn(32, 24, |x, y| 255.0 - a.get(x, y)).unwrap();
        assert!(ssim(&a, &inv).unwrap() < 1.0);
        let small = ramp(10, 20);
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn ssim_of_constants_is_luminance_term() {
        let (ma, mb) = (100.0, 130.0);
        let a = IntensityImage::filled(16, 16, ma).unwrap();
        let b = IntensityImage::filled(16, 16, mb).unwrap();
        let expected = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn taps_sum_to_one() {
        let t = gaussian_taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0], t[10]);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            a in proptest::collection::vec(0.0..255.0f64, 144),
            b in proptest::collection::vec(0.0..255.0f64, 144),
        ) {
            let x = IntensityImage::from_vec(12, 12, a).unwrap();
            let y = IntensityImage::from_vec(12, 12, b).unwrap();
            prop_assert_eq!(psnr(&x, &y).unwrap(), psnr(&y, &x).unwrap());
            let s = ssim(&x, &y).unwrap();
            prop_assert_eq!(s, ssim(&y, &x).unwrap());
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!(psnr(&x, &y).unwrap() >= 0.0);
        }

        #[test]
        fn psnr_permutation_invariant(
            a in proptest::collection::vec(0.0..255.0f64, 64),
            b in proptest::collection::vec(0.0..255.0f64, 64),
            shift in 1usize..63,
        ) {
            let perm = |v: &[f64]| {
                let mut v = v.to_vec();
                v.rotate_left(shift);
                v.reverse();
                v
            };
            let x = IntensityImage::from_vec(8, 8, a.clone()).unwrap();
            let y = IntensityImage::from_vec(8, 8, b.clone()).unwrap();
            let px = IntensityImage::from_vec(8, 8, perm(&a)).unwrap();
            let py = IntensityImage::from_vec(8, 8, perm(&b)).unwrap();
            let (p, q) = (psnr(&x, &y).unwrap(), psnr(&px, &py).unwrap());
            prop_assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
        }
    }
}
