//! The O(1) filtering machinery: four nested running sums along the basis
//! directions, a 16-tap finite-difference mesh per output pixel, and a fixed
//! interpolation window — per-pixel cost independent of kernel size.

use crate::error::{Error, Result};
use crate::kernel::eval_box_spline;
use crate::raster::{EdgePolicy, Raster};
use crate::shape::{Basis, ScaleVector};
use rayon::prelude::*;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Smallest admissible box width. The mesh weight 1/(a1 a2 a3 a4) amplifies
/// interpolation error without bound as widths shrink; below roughly a third
/// of a pixel the discrete approximation is meaningless.
pub const MIN_SCALE: f64 = 0.3;

/// Interpolation window half-size in integer samples per basis.
fn window_reach(basis: Basis) -> (i64, i64) {
    // Sample offsets d with K(f - d) possibly nonzero for f in [0,1):
    // ThetaPrime kernel has support half-width 3, Theta 1.5.
    match basis {
        Basis::Theta => (-1, 2),
        Basis::ThetaPrime => (-2, 3),
    }
}

/// Unit-grid interpolation kernel of a basis: the box spline with every
/// scale equal to the basis step length.
pub fn interpolation_kernel(basis: Basis) -> ScaleVector {
    match basis {
        Basis::Theta => ScaleVector::new(1.0, std::f64::consts::SQRT_2, 1.0, std::f64::consts::SQRT_2)
            .unwrap(),
        Basis::ThetaPrime => ScaleVector::equal(5f64.sqrt()).unwrap(),
    }
}

/// Four nested running sums over a padded image. `g4` is the quadruply
/// pre-integrated image the mesh differences; `g1..g3` are kept for
/// spot-checking the recursions.
pub struct RunningSumStack {
    pub basis: Basis,
    pub margin: usize,
    pub g: [Raster; 4],
    /// Dimensions of the originating (unpadded) image.
    pub image_width: usize,
    pub image_height: usize,
}

impl RunningSumStack {
    pub fn g4(&self) -> &Raster {
        &self.g[3]
    }
}

/// Compute the four running sums of `image` after padding it by `margin`
/// pixels per side under `edge`. Each direction k applies
/// g_k(p) = h_k * g_{k-1}(p) + g_k(p - step_k) with zero initial conditions
/// outside the padded domain.
pub fn compute_running_sums(
    image: &Raster,
    basis: Basis,
    margin: usize,
    edge: EdgePolicy,
) -> RunningSumStack {
    let padded = image.padded_edge(margin, edge);
    running_sums_of_padded(&padded, basis, margin, image.width(), image.height())
}

fn running_sums_of_padded(
    padded: &Raster,
    basis: Basis,
    margin: usize,
    image_width: usize,
    image_height: usize,
) -> RunningSumStack {
    let steps = basis.steps();
    let lens = basis.step_lengths();
    let w = padded.width();
    let h = padded.height();

    let mut prev = padded.clone();
    let mut g: Vec<Raster> = Vec::with_capacity(4);
    for k in 0..4 {
        let [sx, sy] = steps[k];
        let hk = lens[k];
        let mut cur = Raster::zeros(w, h);
        for y in 0..h as i64 {
            // When the step has no vertical component the dependency is the
            // previous sample in the same row; scan in dependency order.
            let xs: Box<dyn Iterator<Item = i64>> = if sx >= 0 {
                Box::new(0..w as i64)
            } else {
                Box::new((0..w as i64).rev())
            };
            for x in xs {
                let v = hk * prev.get(x as usize, y as usize) + cur.get_zero(x - sx, y - sy);
                cur[(x as usize, y as usize)] = v;
            }
        }
        prev = cur.clone();
        g.push(cur);
    }
    let g: [Raster; 4] = g.try_into().unwrap();
    RunningSumStack {
        basis,
        margin,
        g,
        image_width,
        image_height,
    }
}

/// The 16 signed taps differencing g4 into a box-spline convolution, plus
/// the sub-pixel shift recentering the result on the output pixel.
#[derive(Debug, Clone)]
pub struct MeshSpec {
    /// (offset, signed weight) per tap; offsets are the subset sums of the
    /// displacement vectors d_k = a_k u_k, weights (-1)^|subset| / (a1 a2 a3 a4).
    pub taps: [([f64; 2], f64); 16],
    pub tau: [f64; 2],
}

/// Build the finite-difference mesh for `scales` on `basis`. The shift is
/// tau = (1/2) sum_k a_k u_k - (1/2) sum_k step_k, which recenters the mesh
/// so the impulse-response centroid lands on the output pixel.
pub fn build_mesh(scales: &ScaleVector, basis: Basis) -> Result<MeshSpec> {
    for (i, &a) in scales.a.iter().enumerate() {
        if a < MIN_SCALE {
            return Err(Error::InvalidArgument(format!(
                "scale a{} = {a} below the engine minimum {MIN_SCALE}",
                i + 1
            )));
        }
    }
    let u = basis.directions();
    let steps = basis.steps();
    let w = 1.0 / scales.product();
    let d: Vec<[f64; 2]> = (0..4)
        .map(|k| [scales.a[k] * u[k][0], scales.a[k] * u[k][1]])
        .collect();

    let mut taps = [([0.0; 2], 0.0); 16];
    for (mask, tap) in taps.iter_mut().enumerate() {
        let mut off = [0.0; 2];
        for k in 0..4 {
            if mask & (1 << k) != 0 {
                off[0] += d[k][0];
                off[1] += d[k][1];
            }
        }
        let sign = if (mask as u32).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        *tap = (off, sign * w);
    }

    let mut tau = [0.0; 2];
    for k in 0..4 {
        tau[0] += 0.5 * (d[k][0] - steps[k][0] as f64);
        tau[1] += 0.5 * (d[k][1] - steps[k][1] as f64);
    }
    Ok(MeshSpec { taps, tau })
}

/// Largest |tau - tap offset| coordinate over the mesh, i.e. how far the
/// interpolation sites stray from the output pixel.
fn mesh_reach(m: &MeshSpec) -> f64 {
    let mut r = 0.0f64;
    for (off, _) in &m.taps {
        r = r.max((m.tau[0] - off[0]).abs());
        r = r.max((m.tau[1] - off[1]).abs());
    }
    r
}

/// Interpolate the 4-fold running sum at a real position (image coordinates:
/// (0,0) is the first image pixel). Reference path, no caching.
pub fn interpolate(stack: &RunningSumStack, x: f64, y: f64) -> Result<f64> {
    let (d_lo, d_hi) = window_reach(stack.basis);
    let kernel = interpolation_kernel(stack.basis);
    let m = stack.margin as f64;
    let (px, py) = (x + m, y + m);
    let (xi, yi) = (px.floor(), py.floor());
    let (ix, iy) = (xi as i64, yi as i64);
    if ix + d_lo < 0
        || iy + d_lo < 0
        || ix + d_hi >= stack.g4().width() as i64
        || iy + d_hi >= stack.g4().height() as i64
    {
        return Err(Error::InvalidArgument(format!(
            "interpolation window at ({x}, {y}) leaves the padded domain"
        )));
    }
    let (fx, fy) = (px - xi, py - yi);
    let mut num = 0.0;
    let mut den = 0.0;
    for dy in d_lo..=d_hi {
        for dx in d_lo..=d_hi {
            let k = eval_box_spline(&kernel, stack.basis, fx - dx as f64, fy - dy as f64);
            if k != 0.0 {
                num += k * stack.g4().get((ix + dx) as usize, (iy + dy) as usize);
                den += k;
            }
        }
    }
    Ok(num / den)
}

/// Window memoization cap per thread; beyond this the cache is dropped and
/// rebuilt (smoothly varying scale maps produce mostly-unique offsets).
const WINDOW_CACHE_CAP: usize = 1 << 17;

thread_local! {
    static WINDOW_CACHE: RefCell<HashMap<(u8, u64, u64), Rc<Vec<f64>>>> =
        RefCell::new(HashMap::new());
}

/// Normalized interpolation window weights for the fractional offset
/// (fx, fy) in [0,1)^2, memoized per thread on the exact offset bits. The
/// mesh difference is very sensitive to per-tap positional perturbation, so
/// the weights must be evaluated at the exact offsets — only identical
/// offsets share cache entries.
fn window_weights(basis: Basis, fx: f64, fy: f64) -> Rc<Vec<f64>> {
    let key = (
        match basis {
            Basis::Theta => 0u8,
            Basis::ThetaPrime => 1u8,
        },
        fx.to_bits(),
        fy.to_bits(),
    );
    WINDOW_CACHE.with(|cache| {
        if let Some(w) = cache.borrow().get(&key) {
            return w.clone();
        }
        let (d_lo, d_hi) = window_reach(basis);
        let n = (d_hi - d_lo + 1) as usize;
        let kernel = interpolation_kernel(basis);
        let mut w = vec![0.0; n * n];
        let mut sum = 0.0;
        for dy in d_lo..=d_hi {
            for dx in d_lo..=d_hi {
                let v = eval_box_spline(&kernel, basis, fx - dx as f64, fy - dy as f64);
                w[((dy - d_lo) * n as i64 + (dx - d_lo)) as usize] = v;
                sum += v;
            }
        }
        for v in &mut w {
            *v /= sum;
        }
        let w = Rc::new(w);
        let mut cache = cache.borrow_mut();
        if cache.len() >= WINDOW_CACHE_CAP {
            cache.clear();
        }
        cache.insert(key, w.clone());
        w
    })
}

/// Cached-window interpolation used by the hot loop; `px`, `py` are padded
/// coordinates, assumed in range (the caller sized the margin).
#[inline]
fn interpolate_fast(g4: &Raster, basis: Basis, px: f64, py: f64) -> f64 {
    let (d_lo, d_hi) = window_reach(basis);
    let n = (d_hi - d_lo + 1) as usize;
    let (xi, yi) = (px.floor() as i64, py.floor() as i64);
    let w = window_weights(basis, px - xi as f64, py - yi as f64);
    let mut acc = 0.0;
    for dy in 0..n {
        let row = g4.row((yi + d_lo + dy as i64) as usize);
        let base = (xi + d_lo) as usize;
        for dx in 0..n {
            acc += w[dy * n + dx] * row[base + dx];
        }
    }
    acc
}

/// Space-variant filtering with a per-pixel scale vector and basis: the
/// output pixel approximates (f * box_spline(scales(m,n)))(m,n), at O(1)
/// cost per pixel. A final gain pass (the same mesh applied to an all-ones
/// image) divides out the residual DC error of the interpolation step.
pub fn filter_space_variant_mixed(
    image: &Raster,
    specs: &[(ScaleVector, Basis)],
    edge: EdgePolicy,
) -> Result<Raster> {
    let w = image.width();
    let h = image.height();
    if specs.len() != w * h {
        return Err(Error::ShapeMismatch(w, h, specs.len(), 1));
    }

    // Meshes up front: validates every pixel and fixes the margin.
    let meshes: Vec<MeshSpec> = specs
        .iter()
        .enumerate()
        .map(|(i, (a, basis))| {
            build_mesh(a, *basis).map_err(|e| Error::InfeasiblePixel {
                x: i % w,
                y: i / w,
                reason: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;

    let mut reach = 0.0f64;
    for m in &meshes {
        reach = reach.max(mesh_reach(m));
    }
    let (d_lo, d_hi) = (-2i64, 3i64); // widest window of the two bases
    let margin = reach.ceil() as usize + d_hi.max(-d_lo) as usize + 1;

    let padded = image.padded_edge(margin, edge);
    let ones = Raster::filled(padded.width(), padded.height(), 1.0);

    let need = |b: Basis| specs.iter().any(|(_, sb)| *sb == b);
    let mut stacks: HashMap<u8, (RunningSumStack, RunningSumStack)> = HashMap::new();
    for (tag, basis) in [(0u8, Basis::Theta), (1u8, Basis::ThetaPrime)] {
        if need(basis) {
            let sig = running_sums_of_padded(&padded, basis, margin, w, h);
            let gain = running_sums_of_padded(&ones, basis, margin, w, h);
            stacks.insert(tag, (sig, gain));
        }
    }

    let mut out = Raster::zeros(w, h);
    out.data_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, slot) in row.iter_mut().enumerate() {
                let (_, basis) = specs[y * w + x];
                let mesh = &meshes[y * w + x];
                let tag = match basis {
                    Basis::Theta => 0u8,
                    Basis::ThetaPrime => 1u8,
                };
                let (sig, gain) = &stacks[&tag];
                let cx = x as f64 + margin as f64 + mesh.tau[0];
                let cy = y as f64 + margin as f64 + mesh.tau[1];
                let mut num = 0.0;
                let mut den = 0.0;
                for (off, wt) in &mesh.taps {
                    let px = cx - off[0];
                    let py = cy - off[1];
                    num += wt * interpolate_fast(sig.g4(), basis, px, py);
                    den += wt * interpolate_fast(gain.g4(), basis, px, py);
                }
                *slot = num / den;
            }
        });
    Ok(out)
}

/// Single-basis convenience wrapper over [`filter_space_variant_mixed`].
pub fn filter_space_variant(
    image: &Raster,
    scalemap: &[ScaleVector],
    basis: Basis,
    edge: EdgePolicy,
) -> Result<Raster> {
    let specs: Vec<(ScaleVector, Basis)> = scalemap.iter().map(|a| (*a, basis)).collect();
    filter_space_variant_mixed(image, &specs, edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::raster_moments;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn running_sum_impulse_unrolls_along_direction() {
        // Impulse at image (0,0); margin 4 puts it at padded (4,4).
        let image = Raster::impulse(9, 9, 0, 0);
        let stack = compute_running_sums(&image, Basis::ThetaPrime, 4, EdgePolicy::Zero);
        let root = 5f64.sqrt();
        // g1 recursion steps by (2,1): nonzero exactly at (4+2k, 4+k).
        for k in 0..2i64 {
            assert_close(stack.g[0].get((4 + 2 * k) as usize, (4 + k) as usize), root, 1e-12);
        }
        assert_eq!(stack.g[0].get(5, 5), 0.0);
        assert_eq!(stack.g[0].get(3, 4), 0.0);
    }

    #[test]
    fn running_sum_constant_grows_affinely() {
        let image = Raster::filled(8, 8, 1.0);
        let stack = compute_running_sums(&image, Basis::Theta, 2, EdgePolicy::Zero);
        // Direction 1 steps by (1,0) with multiplier 1: cumulative count of
        // ones from the left edge of the padded domain.
        let y = 6; // interior row (image row 4)
        for x in 2..10 {
            assert_close(stack.g[0].get(x, y), (x - 1) as f64, 1e-12);
        }
    }

    #[test]
    fn mesh_taps_and_shifts() {
        let root5 = 5f64.sqrt();
        let a = ScaleVector::equal(root5).unwrap();
        let mesh = build_mesh(&a, Basis::ThetaPrime).unwrap();
        assert_close(mesh.tau[0], 0.0, 1e-12);
        assert_close(mesh.tau[1], 0.0, 1e-12);
        // Singleton subset {1}: offset (2,1), weight -1/25.
        let (off, w) = mesh.taps[1];
        assert_close(off[0], 2.0, 1e-12);
        assert_close(off[1], 1.0, 1e-12);
        assert_close(w, -1.0 / 25.0, 1e-12);
        // Full subset: offset (0,6), weight +1/25.
        let (off, w) = mesh.taps[15];
        assert_close(off[0], 0.0, 1e-12);
        assert_close(off[1], 6.0, 1e-12);
        assert_close(w, 1.0 / 25.0, 1e-12);
        // Weight sum is zero.
        let sum: f64 = mesh.taps.iter().map(|(_, w)| w).sum();
        assert_close(sum, 0.0, 1e-12);
    }

    #[test]
    fn theta_prime_shift_formula() {
        // tau must reproduce the closed form
        // tau1 = (2a1 + a2 - a3 - 2a4)/(2 sqrt 5),
        // tau2 = (a1 + 2a2 + 2a3 + a4 - 6 sqrt 5)/(2 sqrt 5).
        let a = ScaleVector::new(2.0, 3.0, 1.5, 4.0).unwrap();
        let mesh = build_mesh(&a, Basis::ThetaPrime).unwrap();
        let r = 5f64.sqrt();
        assert_close(
            mesh.tau[0],
            (2.0 * 2.0 + 3.0 - 1.5 - 2.0 * 4.0) / (2.0 * r),
            1e-12,
        );
        assert_close(
            mesh.tau[1],
            (2.0 + 2.0 * 3.0 + 2.0 * 1.5 + 4.0 - 6.0 * r) / (2.0 * r),
            1e-12,
        );
    }

    #[test]
    fn mesh_annihilates_affine_functions() {
        for basis in [Basis::Theta, Basis::ThetaPrime] {
            let a = ScaleVector::new(1.7, 2.3, 0.9, 3.1).unwrap();
            let mesh = build_mesh(&a, basis).unwrap();
            // Bilinear probe c0 + c1 x + c2 y + c3 x y.
            let probe = |x: f64, y: f64| 0.7 + 1.3 * x - 2.1 * y + 0.5 * x * y;
            let mut acc = 0.0;
            for (off, w) in &mesh.taps {
                acc += w * probe(off[0], off[1]);
            }
            assert_close(acc, 0.0, 1e-9);
        }
    }

    #[test]
    fn rejects_sub_minimum_scales() {
        let a = ScaleVector::new(0.2, 1.0, 1.0, 1.0).unwrap();
        assert!(build_mesh(&a, Basis::Theta).is_err());
    }

    #[test]
    fn constant_image_dc_gain() {
        let image = Raster::filled(24, 24, 2.5);
        for basis in [Basis::Theta, Basis::ThetaPrime] {
            let map = vec![ScaleVector::new(2.0, 1.4, 3.0, 0.9).unwrap(); 24 * 24];
            let out = filter_space_variant(&image, &map, basis, EdgePolicy::Replicate).unwrap();
            for &v in out.data() {
                assert_close(v, 2.5, 1e-6);
            }
        }
    }

    #[test]
    fn interpolate_constant_stack() {
        // interpolate() on the running sums of a zero image is zero.
        let image = Raster::zeros(10, 10);
        let stack = compute_running_sums(&image, Basis::ThetaPrime, 6, EdgePolicy::Zero);
        assert_close(interpolate(&stack, 4.3, 5.7).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn impulse_response_moments_theta_prime() {
        let n = 33;
        let image = Raster::impulse(n, n, 16, 16);
        let a = ScaleVector::equal(5f64.sqrt()).unwrap();
        let map = vec![a; n * n];
        let out = filter_space_variant(&image, &map, Basis::ThetaPrime, EdgePolicy::Zero).unwrap();
        let m = raster_moments(&out, 16.0, 16.0, 1.0);
        assert_close(m.mean[0], 0.0, 0.1);
        assert_close(m.mean[1], 0.0, 0.1);
        // Target covariance (5/6) I within 3%.
        assert_close(m.c11, 5.0 / 6.0, 0.03 * 5.0 / 6.0);
        assert_close(m.c22, 5.0 / 6.0, 0.03 * 5.0 / 6.0);
        assert_close(m.c12, 0.0, 0.03 * 5.0 / 6.0);
    }

    #[test]
    fn impulse_response_moments_theta() {
        let n = 41;
        let image = Raster::impulse(n, n, 20, 20);
        let a = ScaleVector::new(4.0, 2.5, 3.0, 2.0).unwrap();
        let map = vec![a; n * n];
        let out = filter_space_variant(&image, &map, Basis::Theta, EdgePolicy::Zero).unwrap();
        let m = raster_moments(&out, 20.0, 20.0, 1.0);
        let c = crate::shape::beta_covariance(&a);
        assert_close(m.mean[0], 0.0, 0.1);
        assert_close(m.mean[1], 0.0, 0.1);
        assert_close(m.c11, c.c11, 0.03 * c.c11);
        assert_close(m.c22, c.c22, 0.03 * c.c22);
        assert_close(m.c12, c.c12, 0.03 * c.c11.max(c.c22));
    }

    #[test]
    fn linearity() {
        let mut f = Raster::zeros(16, 16);
        let mut g = Raster::zeros(16, 16);
        for i in 0..256 {
            f.data_mut()[i] = ((i * 37) % 101) as f64 / 101.0;
            g.data_mut()[i] = ((i * 53) % 97) as f64 / 97.0;
        }
        let map = vec![ScaleVector::equal(2.0).unwrap(); 256];
        let combo = Raster::from_vec(
            16,
            16,
            f.data()
                .iter()
                .zip(g.data())
                .map(|(a, b)| 2.0 * a - 0.5 * b)
                .collect(),
        )
        .unwrap();
        let ff = filter_space_variant(&f, &map, Basis::Theta, EdgePolicy::Zero).unwrap();
        let fg = filter_space_variant(&g, &map, Basis::Theta, EdgePolicy::Zero).unwrap();
        let fc = filter_space_variant(&combo, &map, Basis::Theta, EdgePolicy::Zero).unwrap();
        for i in 0..256 {
            let expect = 2.0 * ff.data()[i] - 0.5 * fg.data()[i];
            assert_close(fc.data()[i], expect, 1e-9 * (1.0 + expect.abs()));
        }
    }
}
