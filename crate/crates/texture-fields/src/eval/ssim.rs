//! Image metrics: SSIM, PSNR, mean-l1.
//!
//! SSIM follows the classic formulation on unit dynamic range with 8x8
//! uniform windows at stride 1 and stabilization constants C1 = 0.01^2,
//! C2 = 0.03^2, averaged over channels. Window statistics come from
//! summed-area tables, so the cost is linear in pixels.

use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 8;
const C1: f64 = 1e-4; // (0.01)^2
const C2: f64 = 9e-4; // (0.03)^2

struct Sat {
    w: usize,
    data: Vec<f64>, // (w+1) x (h+1)
}

impl Sat {
    fn build(values: impl Iterator<Item = f64>, w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        let mut iter = values;
        for y in 1..=h {
            let mut row_sum = 0.0;
            for x in 1..=w {
                row_sum += iter.next().expect("enough values for the image");
                data[y * stride + x] = data[(y - 1) * stride + x] + row_sum;
            }
        }
        Self { w, data }
    }

    /// Sum over the window with top-left (x, y), side `k`.
    fn window(&self, x: usize, y: usize, k: usize) -> f64 {
        let s = self.w + 1;
        self.data[(y + k) * s + (x + k)] + self.data[y * s + x]
            - self.data[y * s + (x + k)]
            - self.data[(y + k) * s + x]
    }
}

fn check_dims(op: &'static str, a: &[f32], b: &[f32], w: usize, h: usize) -> Result<()> {
    if a.len() != w * h * 3 || b.len() != w * h * 3 {
        return Err(Error::ShapeMismatch {
            op,
            lhs: vec![a.len()],
            rhs: vec![w * h * 3],
        });
    }
    Ok(())
}

/// Mean local SSIM between two RGB images in [0,1].
pub fn ssim(a: &[f32], b: &[f32], w: usize, h: usize) -> Result<f64> {
    check_dims("ssim", a, b, w, h)?;
    let k = SSIM_WINDOW;
    if w < k || h < k {
        return Err(Error::Contract(format!(
            "ssim needs images of at least {k}x{k}, got {w}x{h}"
        )));
    }
    let inv_n = 1.0 / (k * k) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for c in 0..3 {
        let xs = Sat::build(a.iter().skip(c).step_by(3).map(|&v| v as f64), w, h);
        let ys = Sat::build(b.iter().skip(c).step_by(3).map(|&v| v as f64), w, h);
        let xxs = Sat::build(
            a.iter().skip(c).step_by(3).map(|&v| (v as f64) * (v as f64)),
            w,
            h,
        );
        let yys = Sat::build(
            b.iter().skip(c).step_by(3).map(|&v| (v as f64) * (v as f64)),
            w,
            h,
        );
        let xys = Sat::build(
            a.iter()
                .skip(c)
                .step_by(3)
                .zip(b.iter().skip(c).step_by(3))
                .map(|(&x, &y)| (x as f64) * (y as f64)),
            w,
            h,
        );
        for y in 0..=(h - k) {
            for x in 0..=(w - k) {
                let mu_x = xs.window(x, y, k) * inv_n;
                let mu_y = ys.window(x, y, k) * inv_n;
                let var_x = (xxs.window(x, y, k) * inv_n - mu_x * mu_x).max(0.0);
                let var_y = (yys.window(x, y, k) * inv_n - mu_y * mu_y).max(0.0);
                let cov = xys.window(x, y, k) * inv_n - mu_x * mu_y;
                let num = (2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2);
                let den = (mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2);
                total += num / den;
                windows += 1;
            }
        }
    }
    Ok(total / windows as f64)
}

/// Peak signal-to-noise ratio on unit dynamic range; +inf for identical
/// images.
pub fn psnr(a: &[f32], b: &[f32], w: usize, h: usize) -> Result<f64> {
    check_dims("psnr", a, b, w, h)?;
    let mse: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

/// Mean absolute difference over every channel of every pixel.
pub fn mean_l1(a: &[f32], b: &[f32], w: usize, h: usize) -> Result<f64> {
    check_dims("mean_l1", a, b, w, h)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum::<f64>()
        / a.len() as f64)
}

/// Mean absolute difference restricted to mask-true pixels.
pub fn mean_l1_masked(a: &[f32], b: &[f32], mask: &[bool]) -> Result<f64> {
    if a.len() != b.len() || a.len() != mask.len() * 3 {
        return Err(Error::ShapeMismatch {
            op: "mean_l1_masked",
            lhs: vec![a.len()],
            rhs: vec![mask.len() * 3],
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        for c in 0..3 {
            sum += (a[i * 3 + c] as f64 - b[i * 3 + c] as f64).abs();
        }
        count += 3;
    }
    if count == 0 {
        return Err(Error::Domain("mask has no foreground pixels".into()));
    }
    Ok(sum / count as f64)
}
