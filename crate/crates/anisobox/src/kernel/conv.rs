//! FFT-based full linear convolution of rasters (used to compose sampled
//! kernels; the discrete result must be scaled by the sampling pitch squared
//! by callers working with densities).

use crate::raster::Raster;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Full linear convolution: output size (wa + wb - 1) x (ha + hb - 1).
pub fn convolve_full(a: &Raster, b: &Raster) -> Raster {
    let out_w = a.width() + b.width() - 1;
    let out_h = a.height() + b.height() - 1;
    let fw = out_w.next_power_of_two();
    let fh = out_h.next_power_of_two();

    let fa = forward(a, fw, fh);
    let fb = forward(b, fw, fh);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    inverse(&mut prod, fw, fh);

    let norm = 1.0 / (fw as f64 * fh as f64);
    let mut out = Raster::zeros(out_w, out_h);
    for y in 0..out_h {
        for x in 0..out_w {
            out[(x, y)] = prod[y * fw + x].re * norm;
        }
    }
    out
}

fn forward(r: &Raster, fw: usize, fh: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); fw * fh];
    for y in 0..r.height() {
        for (x, &v) in r.row(y).iter().enumerate() {
            buf[y * fw + x] = Complex::new(v, 0.0);
        }
    }
    fft_2d(&mut buf, fw, fh, false);
    buf
}

fn inverse(buf: &mut [Complex<f64>], fw: usize, fh: usize) {
    fft_2d(buf, fw, fh, true);
}

fn fft_2d(buf: &mut [Complex<f64>], fw: usize, fh: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft_row = if inverse {
        planner.plan_fft_inverse(fw)
    } else {
        planner.plan_fft_forward(fw)
    };
    for y in 0..fh {
        fft_row.process(&mut buf[y * fw..(y + 1) * fw]);
    }

    let fft_col = if inverse {
        planner.plan_fft_inverse(fh)
    } else {
        planner.plan_fft_forward(fh)
    };
    let mut col = vec![Complex::new(0.0, 0.0); fh];
    for x in 0..fw {
        for y in 0..fh {
            col[y] = buf[y * fw + x];
        }
        fft_col.process(&mut col);
        for y in 0..fh {
            buf[y * fw + x] = col[y];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let a = Raster::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Raster::from_vec(2, 2, vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let fast = convolve_full(&a, &b);
        assert_eq!(fast.width(), 4);
        assert_eq!(fast.height(), 3);
        for oy in 0..3 {
            for ox in 0..4 {
                let mut direct = 0.0;
                for ay in 0..2usize {
                    for ax in 0..3usize {
                        let bx = ox as i64 - ax as i64;
                        let by = oy as i64 - ay as i64;
                        direct += a.get(ax, ay) * b.get_zero(bx, by);
                    }
                }
                assert!(
                    (fast.get(ox, oy) - direct).abs() < 1e-10,
                    "mismatch at ({ox},{oy})"
                );
            }
        }
    }
}
