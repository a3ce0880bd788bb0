//! Ground-truth kernel mathematics: analytic box-spline evaluation via
//! rectangle clipping, Gaussian densities, numeric moments, error metrics,
//! the central-limit convergence demo and the brute-force space-variant
//! filtering oracle.

pub mod clip;
pub mod conv;

use crate::error::{Error, Result};
use crate::raster::{EdgePolicy, Raster};
use crate::shape::{Basis, Covariance, ScaleVector};
use clip::{rect_intersection_area, segment_rect_length, Rect};
use rayon::prelude::*;

/// A box-spline kernel: a basis plus the four box widths.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub basis: Basis,
    pub scales: ScaleVector,
}

impl KernelSpec {
    /// Half-widths of the support bounding box: (sum_k a_k |u_k . e|)/2 for
    /// each coordinate axis e.
    pub fn support_half_widths(&self) -> [f64; 2] {
        support_half_widths(&self.scales, self.basis)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        eval_box_spline(&self.scales, self.basis, x, y)
    }
}

pub fn support_half_widths(a: &ScaleVector, basis: Basis) -> [f64; 2] {
    let u = basis.directions();
    let mut h = [0.0; 2];
    for k in 0..4 {
        h[0] += a.a[k] * u[k][0].abs() / 2.0;
        h[1] += a.a[k] * u[k][1].abs() / 2.0;
    }
    h
}

/// Value of the four-directional box spline at (x, y).
///
/// The four directions split into two orthogonal pairs (u1 with u3, u2 with
/// u4 on both bases), so the kernel is the convolution of two uniform
/// rectangles and its value is Area(R1 ^ R2)/(a1 a2 a3 a4). A single zero
/// scale degenerates one rectangle to a segment, handled by chord-length
/// clipping.
pub fn eval_box_spline(a: &ScaleVector, basis: Basis, x: f64, y: f64) -> f64 {
    let u = basis.directions();
    let zero = a.a.iter().position(|v| *v == 0.0);
    match zero {
        None => {
            let r1 = Rect {
                center: [0.0, 0.0],
                axis1: u[0],
                axis2: u[2],
                half1: a.a[0] / 2.0,
                half2: a.a[2] / 2.0,
            };
            let r2 = Rect {
                center: [x, y],
                axis1: u[1],
                axis2: u[3],
                half1: a.a[1] / 2.0,
                half2: a.a[3] / 2.0,
            };
            rect_intersection_area(&r1, &r2) / a.product()
        }
        Some(k) => {
            // Partner of the degenerate direction in its orthogonal pair and
            // the surviving full rectangle pair.
            let (seg_dir, seg_len, rect_pair) = match k {
                0 => (u[2], a.a[2], (1usize, 3usize)),
                1 => (u[3], a.a[3], (0, 2)),
                2 => (u[0], a.a[0], (1, 3)),
                _ => (u[1], a.a[1], (0, 2)),
            };
            let rect = Rect {
                center: [x, y],
                axis1: u[rect_pair.0],
                axis2: u[rect_pair.1],
                half1: a.a[rect_pair.0] / 2.0,
                half2: a.a[rect_pair.1] / 2.0,
            };
            let p0 = [-seg_dir[0] * seg_len / 2.0, -seg_dir[1] * seg_len / 2.0];
            let p1 = [seg_dir[0] * seg_len / 2.0, seg_dir[1] * seg_len / 2.0];
            let nonzero_product: f64 = a
                .a
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, v)| *v)
                .product();
            segment_rect_length(p0, p1, &rect) / nonzero_product
        }
    }
}

pub fn eval_beta(a: &ScaleVector, x: f64, y: f64) -> f64 {
    eval_box_spline(a, Basis::Theta, x, y)
}

pub fn eval_beta_prime(a: &ScaleVector, x: f64, y: f64) -> f64 {
    eval_box_spline(a, Basis::ThetaPrime, x, y)
}

/// Bivariate normal density with covariance `c`, centered at the origin.
pub fn gaussian_eval(c: &Covariance, x: f64, y: f64) -> f64 {
    let det = c.det();
    let q = (c.c22 * x * x - 2.0 * c.c12 * x * y + c.c11 * y * y) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

/// Origin-centered raster of kernel samples on a square grid of the given
/// pitch; `radius` samples on each side of the center.
#[derive(Debug, Clone)]
pub struct SampledKernel {
    pub pitch: f64,
    pub radius: usize,
    pub data: Raster,
}

impl SampledKernel {
    pub fn from_fn(radius: usize, pitch: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = 2 * radius + 1;
        let mut data = Raster::zeros(n, n);
        for j in 0..n {
            let y = (j as f64 - radius as f64) * pitch;
            for i in 0..n {
                let x = (i as f64 - radius as f64) * pitch;
                data[(i, j)] = f(x, y);
            }
        }
        SampledKernel {
            pitch,
            radius,
            data,
        }
    }

    pub fn sample_box_spline(a: &ScaleVector, basis: Basis, pitch: f64) -> Self {
        let h = support_half_widths(a, basis);
        let radius = (h[0].max(h[1]) / pitch).ceil() as usize + 2;
        SampledKernel::from_fn(radius, pitch, |x, y| eval_box_spline(a, basis, x, y))
    }

    pub fn sample_gaussian(c: &Covariance, pitch: f64, radius: usize) -> Self {
        SampledKernel::from_fn(radius, pitch, |x, y| gaussian_eval(c, x, y))
    }

    /// Re-sample on a larger grid (same pitch); values outside the original
    /// radius are zero.
    pub fn embedded(&self, radius: usize) -> Self {
        assert!(radius >= self.radius);
        let pad = radius - self.radius;
        SampledKernel {
            pitch: self.pitch,
            radius,
            data: self.data.padded(pad, 0.0),
        }
    }

    pub fn mass(&self) -> f64 {
        self.data.data().iter().sum::<f64>() * self.pitch * self.pitch
    }

    /// Discrete convolution of two densities at the same pitch; the result's
    /// radius is the sum of the factors' radii.
    pub fn convolve(&self, other: &SampledKernel) -> Result<SampledKernel> {
        if (self.pitch - other.pitch).abs() > 1e-12 * self.pitch {
            return Err(Error::InvalidArgument(format!(
                "pitch mismatch: {} vs {}",
                self.pitch, other.pitch
            )));
        }
        let full = conv::convolve_full(&self.data, &other.data);
        let scaled = full.map(|v| v * self.pitch * self.pitch);
        Ok(SampledKernel {
            pitch: self.pitch,
            radius: self.radius + other.radius,
            data: scaled,
        })
    }
}

/// Mass, centroid and central second moments of a sampled density.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mass: f64,
    pub mean: [f64; 2],
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

pub fn numeric_moments(k: &SampledKernel) -> Moments {
    raster_moments(&k.data, k.radius as f64, k.radius as f64, k.pitch)
}

/// Moments of an arbitrary raster treated as a density with the given origin
/// (in samples) and pitch.
pub fn raster_moments(data: &Raster, ox: f64, oy: f64, pitch: f64) -> Moments {
    let p2 = pitch * pitch;
    let (mut mass, mut mx, mut my) = (0.0, 0.0, 0.0);
    for j in 0..data.height() {
        let y = (j as f64 - oy) * pitch;
        for (i, &v) in data.row(j).iter().enumerate() {
            let x = (i as f64 - ox) * pitch;
            mass += v;
            mx += v * x;
            my += v * y;
        }
    }
    mass *= p2;
    mx = mx * p2 / mass;
    my = my * p2 / mass;
    let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
    for j in 0..data.height() {
        let y = (j as f64 - oy) * pitch - my;
        for (i, &v) in data.row(j).iter().enumerate() {
            let x = (i as f64 - ox) * pitch - mx;
            c11 += v * x * x;
            c12 += v * x * y;
            c22 += v * y * y;
        }
    }
    Moments {
        mass,
        mean: [mx, my],
        c11: c11 * p2 / mass,
        c12: c12 * p2 / mass,
        c22: c22 * p2 / mass,
    }
}

/// ||f - g||_2 / ||g||_2 over identical grids.
pub fn normalized_l2_error(f: &SampledKernel, g: &SampledKernel) -> Result<f64> {
    if f.radius != g.radius || (f.pitch - g.pitch).abs() > 1e-12 * f.pitch {
        return Err(Error::InvalidArgument(
            "normalized_l2_error requires identical grids".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in f.data.data().iter().zip(g.data.data()) {
        num += (a - b) * (a - b);
        den += b * b;
    }
    Ok((num / den).sqrt())
}

/// Convolve `n` equal-width box distributions spread uniformly over the
/// half-circle and measure the worst pointwise deviation from the isotropic
/// Gaussian of variance sigma^2, as a fraction of the Gaussian peak.
pub fn clt_demo(n: usize, sigma: f64, pitch: f64) -> Result<(SampledKernel, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgument("clt_demo requires N >= 2".into()));
    }
    if pitch > 0.05 * sigma {
        return Err(Error::InvalidArgument(format!(
            "pitch {pitch} too coarse for sigma {sigma} (need <= 0.05 sigma)"
        )));
    }
    let width = sigma * (24.0 / n as f64).sqrt();
    let mut acc: Option<SampledKernel> = None;
    for k in 0..n {
        let theta = k as f64 * std::f64::consts::PI / n as f64;
        let box_k = thin_box(width, theta, pitch);
        acc = Some(match acc {
            None => box_k,
            Some(prev) => prev.convolve(&box_k)?,
        });
    }
    let kernel = acc.unwrap();
    let peak = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
    let c = Covariance::isotropic(sigma * sigma);
    let mut max_err = 0.0f64;
    let r = kernel.radius as f64;
    for j in 0..kernel.data.height() {
        let y = (j as f64 - r) * pitch;
        for (i, &v) in kernel.data.row(j).iter().enumerate() {
            let x = (i as f64 - r) * pitch;
            max_err = max_err.max((v - gaussian_eval(&c, x, y)).abs());
        }
    }
    Ok((kernel, max_err / peak))
}

/// Unit-mass box distribution of the given width along direction `theta`,
/// rasterized as a rectangle one pitch thick with exact per-cell coverage.
fn thin_box(width: f64, theta: f64, pitch: f64) -> SampledKernel {
    let (sin, cos) = theta.sin_cos();
    let rect = Rect {
        center: [0.0, 0.0],
        axis1: [cos, sin],
        axis2: [-sin, cos],
        half1: width / 2.0,
        half2: pitch / 2.0,
    };
    let half = (width / 2.0) * cos.abs().max(sin.abs()) + pitch;
    let radius = (half / pitch).ceil() as usize + 1;
    let p2 = pitch * pitch;
    SampledKernel::from_fn(radius, pitch, |x, y| {
        let cell = Rect {
            center: [x, y],
            axis1: [1.0, 0.0],
            axis2: [0.0, 1.0],
            half1: pitch / 2.0,
            half2: pitch / 2.0,
        };
        rect_intersection_area(&rect, &cell) / (p2 * width * pitch)
    })
}

/// Direct space-variant filtering: at every output pixel the analytically
/// evaluated kernel is sampled at integer offsets over its support,
/// re-normalized to unit discrete mass, and dotted with the image. O(size)
/// per pixel — the slow reference the O(1) engine is tested against.
pub fn brute_force_filter<F>(image: &Raster, kernel_at: F, edge: EdgePolicy) -> Result<Raster>
where
    F: Fn(usize, usize) -> Result<KernelSpec> + Sync,
{
    let w = image.width();
    let h = image.height();
    let mut out = Raster::zeros(w, h);
    out.data_mut()
        .par_chunks_mut(w)
        .enumerate()
        .try_for_each(|(y, row)| -> Result<()> {
            for (x, slot) in row.iter_mut().enumerate() {
                let spec = kernel_at(x, y).map_err(|e| Error::InfeasiblePixel {
                    x,
                    y,
                    reason: e.to_string(),
                })?;
                let hw = spec.support_half_widths();
                let rx = hw[0].ceil() as i64;
                let ry = hw[1].ceil() as i64;
                let mut weight_sum = 0.0;
                let mut acc = 0.0;
                for dy in -ry..=ry {
                    for dx in -rx..=rx {
                        let k = spec.eval(dx as f64, dy as f64);
                        if k > 0.0 {
                            weight_sum += k;
                            acc += k * image.sample(x as i64 - dx, y as i64 - dy, edge);
                        }
                    }
                }
                *slot = acc / weight_sum;
            }
            Ok(())
        })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{beta_covariance, beta_prime_covariance};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn beta_prime_peak_and_support() {
        let a = ScaleVector::equal(5f64.sqrt()).unwrap();
        assert_close(eval_beta_prime(&a, 0.0, 0.0), 1.0 / 6.0, 1e-12);
        assert_eq!(eval_beta_prime(&a, 3.01, 0.0), 0.0);
        assert_eq!(eval_beta_prime(&a, 0.0, -3.01), 0.0);
        // Central symmetry at an asymmetric probe point.
        let a = ScaleVector::new(2.0, 1.0, 1.5, 0.7).unwrap();
        for (x, y) in [(0.3, 0.8), (1.1, -0.2), (0.05, 0.55)] {
            assert_close(
                eval_beta_prime(&a, x, y),
                eval_beta_prime(&a, -x, -y),
                1e-12,
            );
            assert_close(eval_beta(&a, x, y), eval_beta(&a, -x, -y), 1e-12);
        }
    }

    #[test]
    fn beta_matches_separable_product_on_axes_only_scales() {
        // With a2 = a4 = 0 not allowed; instead use tiny diagonal scales and
        // check the pure-axis case against the separable box product.
        let a = ScaleVector::new(2.0, 0.0, 3.0, 1.0).unwrap();
        let v = eval_beta(&a, 0.0, 0.0);
        assert!(v > 0.0);
        // Degenerate kernels keep unit mass.
        let s = SampledKernel::sample_box_spline(&a, Basis::Theta, 0.01);
        assert_close(s.mass(), 1.0, 1e-3);
    }

    #[test]
    fn sampled_masses_and_moments() {
        let a = ScaleVector::equal(1.0).unwrap();
        for basis in [Basis::Theta, Basis::ThetaPrime] {
            let s = SampledKernel::sample_box_spline(&a, basis, 0.01);
            assert_close(s.mass(), 1.0, 1e-4);
            let m = numeric_moments(&s);
            assert_close(m.mean[0], 0.0, 1e-6);
            assert_close(m.mean[1], 0.0, 1e-6);
            assert_close(m.c11, 1.0 / 6.0, 1e-3);
            assert_close(m.c12, 0.0, 1e-3);
            assert_close(m.c22, 1.0 / 6.0, 1e-3);
        }
    }

    #[test]
    fn analytic_covariances_match_moment_oracle() {
        let cases = [
            ScaleVector::new(2.0, 1.0, 3.0, 1.0).unwrap(),
            ScaleVector::new(1.5, 2.5, 0.8, 1.2).unwrap(),
        ];
        for a in cases {
            let s = SampledKernel::sample_box_spline(&a, Basis::Theta, 0.01);
            let m = numeric_moments(&s);
            let c = beta_covariance(&a);
            assert_close(m.c11, c.c11, 2e-3 * c.c11.max(1.0));
            assert_close(m.c12, c.c12, 2e-3);
            assert_close(m.c22, c.c22, 2e-3 * c.c22.max(1.0));

            let s = SampledKernel::sample_box_spline(&a, Basis::ThetaPrime, 0.01);
            let m = numeric_moments(&s);
            let c = beta_prime_covariance(&a);
            assert_close(m.c11, c.c11, 2e-3 * c.c11.max(1.0));
            assert_close(m.c12, c.c12, 2e-3);
            assert_close(m.c22, c.c22, 2e-3 * c.c22.max(1.0));
        }
    }

    #[test]
    fn reflection_and_rotation_symmetries() {
        let a = ScaleVector::new(2.0, 1.0, 1.5, 0.7).unwrap();
        let swapped = ScaleVector::new(0.7, 1.5, 1.0, 2.0).unwrap();
        for (x, y) in [(0.4, 0.9), (1.3, -0.6)] {
            // x-mirror swaps u1<->u4 and u2<->u3 on ThetaPrime.
            assert_close(
                eval_beta_prime(&swapped, x, y),
                eval_beta_prime(&a, -x, y),
                1e-12,
            );
            // 45-degree rotation advances the Theta direction set by one.
            let shifted = ScaleVector::new(0.7, 2.0, 1.0, 1.5).unwrap();
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let (rx, ry) = (s * (x - y), s * (x + y));
            assert_close(eval_beta(&shifted, rx, ry), eval_beta(&a, x, y), 1e-12);
        }
    }

    #[test]
    fn gaussian_density() {
        let c = Covariance::isotropic(1.0);
        assert_close(
            gaussian_eval(&c, 0.0, 0.0),
            1.0 / (2.0 * std::f64::consts::PI),
            1e-15,
        );
        let g = SampledKernel::sample_gaussian(&Covariance::new(1.5, 0.4, 0.8).unwrap(), 0.02, 300);
        let m = numeric_moments(&g);
        assert_close(m.mass, 1.0, 1e-4);
        assert_close(m.c11, 1.5, 1e-3);
        assert_close(m.c12, 0.4, 1e-3);
        assert_close(m.c22, 0.8, 1e-3);
    }

    #[test]
    fn self_convolution_doubles_covariance() {
        let a = ScaleVector::new(1.5, 1.0, 2.0, 0.8).unwrap();
        let s = SampledKernel::sample_box_spline(&a, Basis::Theta, 0.02);
        let ss = s.convolve(&s).unwrap();
        let m1 = numeric_moments(&s);
        let m2 = numeric_moments(&ss);
        assert_close(m2.mass, 1.0, 1e-3);
        assert_close(m2.c11, 2.0 * m1.c11, 2e-3 * m1.c11.max(1.0));
        assert_close(m2.c12, 2.0 * m1.c12, 2e-3);
        assert_close(m2.c22, 2.0 * m1.c22, 2e-3 * m1.c22.max(1.0));
    }

    #[test]
    fn brute_force_dc_gain_and_impulse() {
        let image = Raster::filled(17, 17, 3.0);
        let a = ScaleVector::equal(2.0).unwrap();
        let out = brute_force_filter(
            &image,
            |_, _| {
                Ok(KernelSpec {
                    basis: Basis::Theta,
                    scales: a,
                })
            },
            EdgePolicy::Replicate,
        )
        .unwrap();
        for &v in out.data() {
            assert_close(v, 3.0, 1e-12);
        }

        let impulse = Raster::impulse(17, 17, 8, 8);
        let resp = brute_force_filter(
            &impulse,
            |_, _| {
                Ok(KernelSpec {
                    basis: Basis::Theta,
                    scales: a,
                })
            },
            EdgePolicy::Zero,
        )
        .unwrap();
        // Response equals the re-normalized sampled kernel.
        let mut sum = 0.0;
        for dy in -2i64..=2 {
            for dx in -2i64..=2 {
                sum += eval_beta(&a, dx as f64, dy as f64);
            }
        }
        assert_close(resp.get(8, 8), eval_beta(&a, 0.0, 0.0) / sum, 1e-12);
        assert_close(resp.get(9, 8), eval_beta(&a, 1.0, 0.0) / sum, 1e-12);
    }
}
