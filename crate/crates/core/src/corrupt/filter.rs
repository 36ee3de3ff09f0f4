//! Image kernels shared by the corruptions. Buffers are row-major and
//! channel-interleaved with `ch` channels.

use alloc::vec;
use alloc::vec::Vec;

/// Half-sample symmetric boundary (`dcba|abcd|dcba`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Normalized 1-D Gaussian truncated at four standard deviations.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let radius = libm::ceil(4.0 * sigma).max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| {
            let x = i as f64;
            libm::exp(-(x * x) / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

pub(crate) fn gaussian_blur(data: &[f64], h: usize, w: usize, ch: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return data.to_vec();
    }
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sx = reflect(x as isize + j as isize - r, w);
                    acc += kv * data[(row + sx) * ch + c];
                }
                tmp[(row + x) * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sy = reflect(y as isize + j as isize - r, h);
                    acc += kv * tmp[(sy * w + x) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }
    out
}

/// Dense 2-D correlation with an odd `ksize x ksize` kernel.
pub(crate) fn convolve2d(
    data: &[f64],
    h: usize,
    w: usize,
    ch: usize,
    kernel: &[f64],
    ksize: usize,
) -> Vec<f64> {
    debug_assert_eq!(kernel.len(), ksize * ksize);
    let r = (ksize / 2) as isize;
    let taps: Vec<(isize, isize, f64)> = kernel
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| ((i / ksize) as isize - r, (i % ksize) as isize - r, v))
        .collect();
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let o = (y * w + x) * ch;
            for &(dy, dx, kv) in &taps {
                let sy = reflect(y as isize + dy, h);
                let sx = reflect(x as isize + dx, w);
                let s = (sy * w + sx) * ch;
                for c in 0..ch {
                    out[o + c] += kv * data[s + c];
                }
            }
        }
    }
    out
}

/// Bilinear sample at fractional coordinates, clamping to the border.
#[inline]
pub(crate) fn sample_bilinear(
    data: &[f64],
    h: usize,
    w: usize,
    ch: usize,
    y: f64,
    x: f64,
    c: usize,
) -> f64 {
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y0 = libm::floor(y) as usize;
    let x0 = libm::floor(x) as usize;
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let at = |yy: usize, xx: usize| data[(yy * w + xx) * ch + c];
    let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
    let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Magnifies the centre of the image by `factor`, keeping the size.
pub(crate) fn zoom_center(data: &[f64], h: usize, w: usize, ch: usize, factor: f64) -> Vec<f64> {
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        let sy = cy + (y as f64 - cy) / factor;
        for x in 0..w {
            let sx = cx + (x as f64 - cx) / factor;
            for c in 0..ch {
                out[(y * w + x) * ch + c] = sample_bilinear(data, h, w, ch, sy, sx, c);
            }
        }
    }
    out
}

/// One-sided Gaussian-weighted streak along `angle_deg`, sampled at
/// `2 * radius + 1` integer offsets with edge replication.
pub(crate) fn motion_blur(
    data: &[f64],
    h: usize,
    w: usize,
    ch: usize,
    radius: f64,
    sigma: f64,
    angle_deg: f64,
) -> Vec<f64> {
    let taps = 2 * libm::round(radius).max(0.0) as usize + 1;
    let sigma = sigma.max(1e-6);
    let mut weights: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64;
            libm::exp(-(x * x) / (2.0 * sigma * sigma))
        })
        .collect();
    let theta = angle_deg.to_radians();
    let (sy, sx) = (libm::sin(theta), libm::cos(theta));
    let mut offsets = Vec::with_capacity(taps);
    for i in 0..taps {
        let dy = -(libm::ceil(i as f64 * sy - 0.5)) as isize;
        let dx = -(libm::ceil(i as f64 * sx - 0.5)) as isize;
        if dy.unsigned_abs() >= h || dx.unsigned_abs() >= w {
            break;
        }
        offsets.push((dy, dx));
    }
    weights.truncate(offsets.len());
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);

    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let o = (y * w + x) * ch;
            for (&(dy, dx), &kv) in offsets.iter().zip(&weights) {
                let yy = (y as isize - dy).clamp(0, h as isize - 1) as usize;
                let xx = (x as isize - dx).clamp(0, w as isize - 1) as usize;
                let s = (yy * w + xx) * ch;
                for c in 0..ch {
                    out[o + c] += kv * data[s + c];
                }
            }
        }
    }
    out
}

/// RGB in `[0,1]` to HSV with hue in `[0,1)`.
pub(crate) fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        let t = (g - b) / delta;
        (if t < 0.0 { t + 6.0 } else { t }) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [h, s, v]
}

pub(crate) fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let h6 = h * 6.0;
    let sector = libm::floor(h6);
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match (sector as i64).rem_euclid(6) {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

#[inline]
pub(crate) fn luma([r, g, b]: [f64; 3]) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_half_sample_symmetric() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, [2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect(0, 1), 0);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn blur_preserves_constant_and_mass() {
        let data = vec![0.25; 9 * 7 * 3];
        let out = gaussian_blur(&data, 9, 7, 3, 2.0);
        assert!(out.iter().all(|v| (v - 0.25).abs() < 1e-12));
        let k = gaussian_kernel(1.3);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(k.len(), 2 * 6 + 1);
    }

    #[test]
    fn hsv_round_trip() {
        for &rgb in &[
            [0.1, 0.5, 0.9],
            [0.9, 0.2, 0.3],
            [0.4, 0.4, 0.4],
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.7],
        ] {
            let back = hsv_to_rgb(rgb_to_hsv(rgb));
            for c in 0..3 {
                assert!((back[c] - rgb[c]).abs() < 1e-12, "{rgb:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn zoom_by_one_is_identity() {
        let data: Vec<f64> = (0..5 * 4).map(|i| i as f64 / 20.0).collect();
        let out = zoom_center(&data, 5, 4, 1, 1.0);
        for (a, b) in data.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn motion_blur_of_constant_is_constant() {
        let data = vec![0.6; 10 * 10];
        let out = motion_blur(&data, 10, 10, 1, 5.0, 3.0, 30.0);
        assert!(out.iter().all(|v| (v - 0.6).abs() < 1e-12));
    }
}
