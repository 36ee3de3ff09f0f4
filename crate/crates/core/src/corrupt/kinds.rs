//! One function per corruption kind. Each returns the unclipped buffer; the
//! caller clips into `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use super::filter::{
    convolve2d, gaussian_blur, gaussian_kernel, hsv_to_rgb, luma, motion_blur, rgb_to_hsv,
    sample_bilinear, zoom_center,
};
use super::schedule::*;
use crate::error::Result;
use crate::rng::SeededStream;
use crate::ImageTensor;

const CH: usize = ImageTensor::CHANNELS;

pub(crate) fn gaussian_noise(img: &ImageTensor, p: &GaussianNoise, rng: &mut SeededStream) -> Vec<f64> {
    img.data().iter().map(|&v| v + p.sigma * rng.normal()).collect()
}

pub(crate) fn shot_noise(img: &ImageTensor, p: &ShotNoise, rng: &mut SeededStream) -> Vec<f64> {
    img.data()
        .iter()
        .map(|&v| rng.poisson(v * p.photons) as f64 / p.photons)
        .collect()
}

pub(crate) fn impulse_noise(img: &ImageTensor, p: &ImpulseNoise, rng: &mut SeededStream) -> Vec<f64> {
    img.data()
        .iter()
        .map(|&v| {
            if rng.uniform() < p.amount {
                if rng.uniform() < 0.5 {
                    0.0
                } else {
                    1.0
                }
            } else {
                v
            }
        })
        .collect()
}

pub(crate) fn speckle_noise(img: &ImageTensor, p: &SpeckleNoise, rng: &mut SeededStream) -> Vec<f64> {
    img.data().iter().map(|&v| v + v * p.sigma * rng.normal()).collect()
}

pub(crate) fn motion(img: &ImageTensor, p: &MotionBlur) -> Vec<f64> {
    motion_blur(img.data(), img.height(), img.width(), CH, p.radius, p.sigma, p.angle_deg)
}

pub(crate) fn defocus(img: &ImageTensor, p: &DefocusBlur) -> Vec<f64> {
    let r = libm::ceil(p.radius).max(1.0) as isize;
    // room for the anti-aliasing blur around the disk
    let pad = libm::ceil(3.0 * p.alias_sigma) as isize;
    let half = r + pad;
    let size = (2 * half + 1) as usize;
    let mut disk = vec![0.0; size * size];
    for y in -half..=half {
        for x in -half..=half {
            if ((x * x + y * y) as f64) <= p.radius * p.radius {
                disk[((y + half) as usize) * size + (x + half) as usize] = 1.0;
            }
        }
    }
    let mut kernel = gaussian_blur(&disk, size, size, 1, p.alias_sigma);
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);
    convolve2d(img.data(), img.height(), img.width(), CH, &kernel, size)
}

pub(crate) fn glass(img: &ImageTensor, p: &GlassBlur, rng: &mut SeededStream) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut buf = gaussian_blur(img.data(), h, w, CH, p.sigma);
    let d = p.max_delta as usize;
    for _ in 0..p.iterations {
        // sweep bottom-right to top-left, swapping each pixel with a random
        // neighbour in [-d, d) along both axes
        let mut y = h.saturating_sub(d);
        while y > d {
            let mut x = w.saturating_sub(d);
            while x > d {
                let dx = rng.int_in(-(d as i64), d as i64);
                let dy = rng.int_in(-(d as i64), d as i64);
                let yy = (y as i64 + dy) as usize;
                let xx = (x as i64 + dx) as usize;
                let a = (y * w + x) * CH;
                let b = (yy * w + xx) * CH;
                for c in 0..CH {
                    buf.swap(a + c, b + c);
                }
                x -= 1;
            }
            y -= 1;
        }
    }
    gaussian_blur(&buf, h, w, CH, p.sigma)
}

pub(crate) fn zoom(img: &ImageTensor, p: &ZoomBlur) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut acc = img.data().to_vec();
    let mut count = 1.0;
    let mut i = 0u32;
    loop {
        let z = 1.0 + f64::from(i) * p.step;
        if z > p.max_zoom + 1e-9 {
            break;
        }
        let zoomed = zoom_center(img.data(), h, w, CH, z);
        acc.iter_mut().zip(&zoomed).for_each(|(a, b)| *a += b);
        count += 1.0;
        i += 1;
    }
    acc.iter_mut().for_each(|v| *v /= count);
    acc
}

pub(crate) fn gaussian(img: &ImageTensor, p: &GaussianBlur) -> Vec<f64> {
    gaussian_blur(img.data(), img.height(), img.width(), CH, p.sigma)
}

pub(crate) fn snow(img: &ImageTensor, p: &Snow, rng: &mut SeededStream) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let n = h * w;
    let mut layer: Vec<f64> = (0..n).map(|_| rng.normal_with(p.mean, p.std)).collect();
    layer = zoom_center(&layer, h, w, 1, p.zoom);
    for v in &mut layer {
        *v = if *v < p.threshold { 0.0 } else { v.clamp(0.0, 1.0) };
    }
    let angle = rng.uniform_in(-135.0, -45.0);
    let layer = motion_blur(&layer, h, w, 1, p.motion_radius, p.motion_sigma, angle);

    let data = img.data();
    let mut out = vec![0.0; data.len()];
    for i in 0..n {
        let px = [data[i * CH], data[i * CH + 1], data[i * CH + 2]];
        let haze = luma(px) * 1.5 + 0.5;
        // the layer is added twice, once rotated by 180 degrees
        let flake = layer[i] + layer[n - 1 - i];
        for c in 0..CH {
            let v = p.blend * px[c] + (1.0 - p.blend) * px[c].max(haze);
            out[i * CH + c] = v + flake;
        }
    }
    out
}

fn map_hsv(img: &ImageTensor, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(CH) {
        out.extend_from_slice(&hsv_to_rgb(f(rgb_to_hsv([px[0], px[1], px[2]]))));
    }
    out
}

pub(crate) fn brightness(img: &ImageTensor, p: &Brightness) -> Vec<f64> {
    map_hsv(img, |[h, s, v]| [h, s, (v + p.shift).clamp(0.0, 1.0)])
}

pub(crate) fn saturate(img: &ImageTensor, p: &Saturate) -> Vec<f64> {
    map_hsv(img, |[h, s, v]| [h, (s * p.scale + p.offset).clamp(0.0, 1.0), v])
}

pub(crate) fn contrast(img: &ImageTensor, p: &Contrast) -> Vec<f64> {
    let data = img.data();
    let n = (img.height() * img.width()) as f64;
    let mut means = [0.0; CH];
    for px in data.chunks_exact(CH) {
        for c in 0..CH {
            means[c] += px[c];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    data.iter()
        .enumerate()
        .map(|(i, &v)| {
            let m = means[i % CH];
            (v - m) * p.factor + m
        })
        .collect()
}

pub(crate) fn elastic(img: &ImageTensor, p: &ElasticTransform, rng: &mut SeededStream) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let side = h.min(w) as f64;
    let alpha = p.alpha * side;
    let sigma = p.sigma * side;
    let mut field = |_| -> Vec<f64> {
        let raw: Vec<f64> = (0..h * w).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut f = gaussian_blur(&raw, h, w, 1, sigma);
        f.iter_mut().for_each(|v| *v *= alpha);
        f
    };
    let dy = field(0);
    let dx = field(1);
    let data = img.data();
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let sy = y as f64 + dy[i];
            let sx = x as f64 + dx[i];
            for c in 0..CH {
                out[i * CH + c] = sample_bilinear(data, h, w, CH, sy, sx, c);
            }
        }
    }
    out
}

pub(crate) fn pixelate(img: &ImageTensor, p: &Pixelate) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let sh = (libm::floor(h as f64 * p.factor) as usize).clamp(1, h);
    let sw = (libm::floor(w as f64 * p.factor) as usize).clamp(1, w);
    // cell (i, j) of the small image covers rows [i*h/sh, (i+1)*h/sh)
    let data = img.data();
    let mut small = vec![0.0; sh * sw * CH];
    for i in 0..sh {
        let (y0, y1) = (i * h / sh, ((i + 1) * h / sh).max(i * h / sh + 1));
        for j in 0..sw {
            let (x0, x1) = (j * w / sw, ((j + 1) * w / sw).max(j * w / sw + 1));
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            for c in 0..CH {
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        acc += data[(y * w + x) * CH + c];
                    }
                }
                small[(i * sw + j) * CH + c] = acc / count;
            }
        }
    }
    // each pixel takes the mean of the very cell it was averaged into
    let owner = |n: usize, cells: usize| -> Vec<usize> {
        let mut o = vec![0; n];
        for c in 0..cells {
            let (a, b) = (c * n / cells, ((c + 1) * n / cells).max(c * n / cells + 1));
            o[a..b.min(n)].fill(c);
        }
        o
    };
    let (row, col) = (owner(h, sh), owner(w, sw));
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let cell = (row[y] * sw + col[x]) * CH;
            out[(y * w + x) * CH..(y * w + x + 1) * CH].copy_from_slice(&small[cell..cell + CH]);
        }
    }
    out
}

pub(crate) fn jpeg(img: &ImageTensor, p: &JpegCompression) -> Result<Vec<f64>> {
    Ok(super::jpeg::round_trip(img, p.quality)?.into_data())
}

const WATER: [f64; 3] = [175.0 / 255.0, 238.0 / 255.0, 238.0 / 255.0];
const MUD: [f64; 3] = [63.0 / 255.0, 42.0 / 255.0, 20.0 / 255.0];
const WATER_OPACITY: f64 = 0.5;

pub(crate) fn spatter(img: &ImageTensor, p: &Spatter, rng: &mut SeededStream) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let liquid: Vec<f64> = (0..h * w).map(|_| rng.normal_with(p.mean, p.std)).collect();
    let liquid = gaussian_blur(&liquid, h, w, 1, p.sigma);
    let mask: Vec<f64> = liquid
        .iter()
        .map(|&v| if v >= p.threshold { 1.0 } else { 0.0 })
        .collect();
    let mask = if gaussian_kernel(p.mask_sigma).len() > 1 {
        gaussian_blur(&mask, h, w, 1, p.mask_sigma)
    } else {
        mask
    };
    let (color, opacity) = if p.mud { (MUD, 1.0) } else { (WATER, WATER_OPACITY) };
    let data = img.data();
    let mut out = vec![0.0; data.len()];
    for (i, &m) in mask.iter().enumerate() {
        let a = m * opacity;
        for c in 0..CH {
            out[i * CH + c] = data[i * CH + c] * (1.0 - a) + color[c] * a;
        }
    }
    out
}
