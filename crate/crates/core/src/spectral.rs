//! 2-D DFT helpers over single image planes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Complex 2-D DFT of a real `h x w` plane, row-major, DC at index 0.
pub fn fft2(plane: &[f64], h: usize, w: usize) -> Vec<Complex<f64>> {
    assert_eq!(plane.len(), h * w, "plane length");
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = plane.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
    buf
}

pub fn fft2_magnitude(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    fft2(plane, h, w).into_iter().map(|c| c.norm()).collect()
}

/// Move the DC bin to `(h/2, w/2)`.
pub fn fftshift<T: Copy>(map: &[T], h: usize, w: usize) -> Vec<T> {
    let mut out = map.to_vec();
    for y in 0..h {
        for x in 0..w {
            out[((y + h / 2) % h) * w + (x + w / 2) % w] = map[y * w + x];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_of_impulse_is_flat() {
        let mut p = vec![0.0; 12];
        p[0] = 1.0;
        assert!(fft2_magnitude(&p, 3, 4).iter().all(|m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn matches_direct_dft() {
        let (h, w) = (3, 5);
        let p: Vec<f64> = (0..h * w).map(|i| ((i * 7) % 11) as f64 - 4.0).collect();
        let f = fft2(&p, h, w);
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let ang = -2.0 * std::f64::consts::PI * ((u * y) as f64 / h as f64 + (v * x) as f64 / w as f64);
                        acc += Complex::from_polar(p[y * w + x], ang);
                    }
                }
                assert!((acc - f[u * w + v]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn shift_centers_dc() {
        let m: Vec<usize> = (0..16).collect();
        let s = fftshift(&m, 4, 4);
        assert_eq!(s[2 * 4 + 2], 0);
    }
}
