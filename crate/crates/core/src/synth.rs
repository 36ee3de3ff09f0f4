//! Procedural face-like test images: a shaded skin-toned ellipse with eyes,
//! brows and a mouth over a gradient background, plus low-frequency texture.
//! Used for fixtures and smoke runs where real photographs are unavailable.

use alloc::vec::Vec;

use crate::rng::SeededStream;
use crate::ImageTensor;

struct Wave {
    fy: f64,
    fx: f64,
    phase: f64,
    amp: f64,
}

pub fn synthetic_face(seed: u64, height: usize, width: usize) -> ImageTensor {
    let mut rng = SeededStream::new(seed ^ 0x5eed_face_0000_0001);
    let bg_a = [rng.uniform(), rng.uniform(), rng.uniform()];
    let bg_b = [rng.uniform(), rng.uniform(), rng.uniform()];
    let skin = [
        rng.uniform_in(0.55, 0.95),
        rng.uniform_in(0.40, 0.75),
        rng.uniform_in(0.30, 0.60),
    ];
    let hair = [rng.uniform_in(0.0, 0.4), rng.uniform_in(0.0, 0.3), rng.uniform_in(0.0, 0.25)];
    let cy = rng.uniform_in(0.45, 0.55);
    let cx = rng.uniform_in(0.42, 0.58);
    let ry = rng.uniform_in(0.30, 0.40);
    let rx = rng.uniform_in(0.22, 0.30);
    let eye_dy = rng.uniform_in(0.08, 0.12);
    let eye_dx = rng.uniform_in(0.08, 0.12);
    let smile = rng.uniform_in(-0.08, 0.08);
    let light = rng.uniform_in(-1.0, 1.0);
    let waves: Vec<Wave> = (0..4)
        .map(|_| Wave {
            fy: rng.uniform_in(1.0, 9.0),
            fx: rng.uniform_in(1.0, 9.0),
            phase: rng.uniform_in(0.0, 6.3),
            amp: rng.uniform_in(0.01, 0.05),
        })
        .collect();

    let mut data = Vec::with_capacity(height * width * 3);
    for y in 0..height {
        let v = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let t = 0.5 * (u + v);
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = bg_a[c] * (1.0 - t) + bg_b[c] * t;
            }

            let ny = (v - cy) / ry;
            let nx = (u - cx) / rx;
            let r2 = ny * ny + nx * nx;
            // hair cap slightly larger than the face, upper half only
            if ny < -0.2 && (ny * ny) / 1.25 + (nx * nx) / 1.3 < 1.0 {
                px = hair;
            }
            if r2 < 1.0 {
                let shade = 0.75 + 0.25 * (1.0 - r2) + 0.1 * light * nx;
                for c in 0..3 {
                    px[c] = skin[c] * shade;
                }
                let in_eye = |ex: f64| {
                    let ey = (v - (cy - eye_dy)) / 0.035;
                    let exn = (u - ex) / 0.05;
                    ey * ey + exn * exn < 1.0
                };
                if in_eye(cx - eye_dx) || in_eye(cx + eye_dx) {
                    px = [0.08, 0.06, 0.05];
                }
                let brow_y = cy - eye_dy - 0.06;
                if (v - brow_y).abs() < 0.012 && ((u - cx).abs() - eye_dx).abs() < 0.06 {
                    px = hair;
                }
                let mx = (u - cx) / 0.12;
                let mouth_y = cy + 0.18 + smile * (1.0 - mx * mx);
                if mx.abs() < 1.0 && (v - mouth_y).abs() < 0.015 {
                    px = [0.55, 0.15, 0.18];
                }
            }
            let tex: f64 = waves
                .iter()
                .map(|w| w.amp * libm::sin(core::f64::consts::TAU * (w.fy * v + w.fx * u) + w.phase))
                .sum();
            data.extend(px.iter().map(|c| (c + tex).clamp(0.0, 1.0)));
        }
    }
    ImageTensor::new(height, width, data).expect("synthetic pixels lie in [0, 1]")
}
