//! Composed filtering pipelines: single-pass space-variant filtering, the
//! two-stage accuracy variant (isotropic convolution plus a residual
//! space-variant pass), the dual-basis elongation variant, and up-front
//! covariance-map validation.

use crate::engine::{filter_space_variant_mixed, MIN_SCALE};
use crate::error::{Error, Result};
use crate::raster::{EdgePolicy, Raster};
use crate::shape::{
    covariance_from_shape, elongation_bound, sector_select, shape_from_covariance,
    sigma_bound_elongation, Basis, Covariance, ScaleVector, ShapeParams,
};
use crate::solver::solve_scales;

/// Per-pixel covariance map. Entries are stored raw (c11, c12, c22) so maps
/// loaded from files can be validated explicitly rather than at load time.
#[derive(Debug, Clone)]
pub struct CovarianceMap {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl CovarianceMap {
    pub fn from_raw(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "covariance map data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(CovarianceMap {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, c: Covariance) -> Self {
        CovarianceMap {
            width,
            height,
            data: vec![[c.c11, c.c12, c.c22]; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Covariance) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y);
                data.push([c.c11, c.c12, c.c22]);
            }
        }
        CovarianceMap {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn raw(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn entries(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn cov(&self, x: usize, y: usize) -> Result<Covariance> {
        let [c11, c12, c22] = self.raw(x, y);
        Covariance::new(c11, c12, c22)
    }
}

/// Which basis (or bases) a pipeline may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisPolicy {
    Single(Basis),
    /// Per pixel, the basis with the larger elongation bound at the pixel's
    /// orientation; near-isotropic pixels (rho < 1.01) go to `Theta`.
    Dual,
}

/// What to do with pixels the selected basis cannot realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasiblePolicy {
    Reject,
    /// Replace the pixel's covariance by one with elongation reduced to
    /// 0.95 x the applicable bound, same size and orientation.
    Clamp,
}

#[derive(Debug, Clone, Copy)]
pub struct PipelinePolicy {
    pub sigma_fraction: f64,
    pub basis: BasisPolicy,
    pub edge: EdgePolicy,
    pub infeasible: InfeasiblePolicy,
}

impl Default for PipelinePolicy {
    fn default() -> Self {
        PipelinePolicy {
            sigma_fraction: 0.5,
            basis: BasisPolicy::Single(Basis::Theta),
            edge: EdgePolicy::Zero,
            infeasible: InfeasiblePolicy::Reject,
        }
    }
}

/// Validation outcome for one covariance-map pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFlag {
    Ok,
    NotPositiveDefinite,
    ExceedsElongationBound(Basis),
    SplitInfeasible,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub width: usize,
    pub height: usize,
    pub flags: Vec<PixelFlag>,
    pub ok: usize,
    pub not_positive_definite: usize,
    pub exceeds_bound: usize,
    pub split_infeasible: usize,
    /// Map with flagged-but-clampable pixels replaced (elongation reduced to
    /// 0.95 x the bound); `None` when every pixel is ok.
    pub clamped: Option<CovarianceMap>,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.ok == self.flags.len()
    }

    pub fn first_offending(&self) -> Option<(usize, usize, PixelFlag)> {
        self.flags
            .iter()
            .position(|f| *f != PixelFlag::Ok)
            .map(|i| (i % self.width, i / self.width, self.flags[i]))
    }

    pub fn summary(&self) -> String {
        format!(
            "{} ok, {} not positive definite, {} exceed the elongation bound, {} split-infeasible",
            self.ok, self.not_positive_definite, self.exceeds_bound, self.split_infeasible
        )
    }
}

fn pixel_basis(shape: &ShapeParams, policy: &PipelinePolicy) -> Basis {
    match policy.basis {
        BasisPolicy::Single(b) => b,
        BasisPolicy::Dual => {
            if shape.rho < 1.01 {
                Basis::Theta
            } else {
                sector_select(shape.theta)
            }
        }
    }
}

/// Check every pixel of a covariance map against the policy. When
/// `require_split` is set (two-stage filtering), a pixel must additionally
/// admit a positive isotropic split, which excludes targets sitting exactly
/// on the elongation bound.
pub fn validate_covmap(
    covmap: &CovarianceMap,
    policy: &PipelinePolicy,
    require_split: bool,
) -> FeasibilityReport {
    let n = covmap.width * covmap.height;
    let mut flags = vec![PixelFlag::Ok; n];
    let mut clamped = covmap.data.clone();
    let mut any_clamped = false;
    let (mut ok, mut npd, mut exceeds, mut split) = (0usize, 0usize, 0usize, 0usize);

    for i in 0..n {
        let [c11, c12, c22] = covmap.data[i];
        let c = match Covariance::new(c11, c12, c22) {
            Ok(c) => c,
            Err(_) => {
                flags[i] = PixelFlag::NotPositiveDefinite;
                npd += 1;
                continue;
            }
        };
        let shape = shape_from_covariance(&c);
        let basis = pixel_basis(&shape, policy);
        let bound = elongation_bound(shape.theta, basis);
        let feasible = if require_split {
            sigma_bound_elongation(&c, basis) > 0.0
        } else {
            shape.rho <= bound
        };
        if feasible {
            ok += 1;
            continue;
        }
        if shape.rho > bound {
            flags[i] = PixelFlag::ExceedsElongationBound(basis);
            exceeds += 1;
        } else {
            flags[i] = PixelFlag::SplitInfeasible;
            split += 1;
        }
        if bound.is_finite() {
            let rho = (0.95 * bound).max(1.0);
            let replacement = covariance_from_shape(&ShapeParams {
                s: shape.s,
                rho,
                theta: shape.theta,
            });
            clamped[i] = [replacement.c11, replacement.c12, replacement.c22];
            any_clamped = true;
        }
    }

    FeasibilityReport {
        width: covmap.width,
        height: covmap.height,
        flags,
        ok,
        not_positive_definite: npd,
        exceeds_bound: exceeds,
        split_infeasible: split,
        clamped: if any_clamped {
            Some(CovarianceMap {
                width: covmap.width,
                height: covmap.height,
                data: clamped,
            })
        } else {
            None
        },
    }
}

/// Apply the infeasibility policy to a validation report: either the map to
/// actually filter with, or an error naming the first offending pixel.
fn resolve_map<'a>(
    covmap: &'a CovarianceMap,
    report: &'a FeasibilityReport,
    policy: &PipelinePolicy,
) -> Result<&'a CovarianceMap> {
    if report.all_ok() {
        return Ok(covmap);
    }
    if report.not_positive_definite > 0 || policy.infeasible == InfeasiblePolicy::Reject {
        let (x, y, flag) = report.first_offending().unwrap();
        return Err(Error::InfeasiblePixel {
            x,
            y,
            reason: format!("{flag:?} ({})", report.summary()),
        });
    }
    Ok(report.clamped.as_ref().unwrap_or(covmap))
}

fn check_image(image: &Raster, covmap: &CovarianceMap) -> Result<()> {
    if image.width() != covmap.width || image.height() != covmap.height {
        return Err(Error::ShapeMismatch(
            image.width(),
            image.height(),
            covmap.width,
            covmap.height,
        ));
    }
    Ok(())
}

/// Engine scales never drop below [`MIN_SCALE`]; boundary minimizers of the
/// solver (one zero width) are nudged onto the smallest admissible box.
fn clamp_scales(a: ScaleVector) -> ScaleVector {
    let mut v = a.a;
    for e in &mut v {
        if *e < MIN_SCALE {
            *e = MIN_SCALE;
        }
    }
    ScaleVector { a: v }
}

fn specs_for(
    covmap: &CovarianceMap,
    policy: &PipelinePolicy,
    subtract: f64,
) -> Result<Vec<(ScaleVector, Basis)>> {
    let mut specs = Vec::with_capacity(covmap.data.len());
    for i in 0..covmap.data.len() {
        let (x, y) = (i % covmap.width, i / covmap.width);
        let infeasible = |reason: String| Error::InfeasiblePixel { x, y, reason };
        let [c11, c12, c22] = covmap.data[i];
        let c = Covariance::new(c11 - subtract, c12, c22 - subtract)
            .map_err(|e| infeasible(e.to_string()))?;
        let basis = pixel_basis(&shape_from_covariance(&c), policy);
        let a = solve_scales(&c, basis).map_err(|e| infeasible(e.to_string()))?;
        specs.push((clamp_scales(a), basis));
    }
    Ok(specs)
}

/// Single-pass space-variant filtering: per-pixel scale solve followed by
/// the O(1) engine.
pub fn filter_basic(
    image: &Raster,
    covmap: &CovarianceMap,
    basis: Basis,
    policy: &PipelinePolicy,
) -> Result<Raster> {
    check_image(image, covmap)?;
    let policy = PipelinePolicy {
        basis: BasisPolicy::Single(basis),
        ..*policy
    };
    let report = validate_covmap(covmap, &policy, false);
    let map = resolve_map(covmap, &report, &policy)?;
    let specs = specs_for(map, &policy, 0.0)?;
    filter_space_variant_mixed(image, &specs, policy.edge)
}

/// Two-stage filtering: a global isotropic convolution of variance sigma^2
/// (the policy fraction of the map-wide minimum split bound) followed by a
/// space-variant pass on the residual covariances C - sigma^2 I. The two
/// kernel covariances add, so the composite matches the target while each
/// stage works on a fatter, easier kernel.
pub fn filter_accurate(
    image: &Raster,
    covmap: &CovarianceMap,
    policy: &PipelinePolicy,
) -> Result<Raster> {
    check_image(image, covmap)?;
    let report = validate_covmap(covmap, policy, true);
    let map = resolve_map(covmap, &report, policy)?;

    let mut min_bound = f64::INFINITY;
    for i in 0..map.data.len() {
        let [c11, c12, c22] = map.data[i];
        let c = Covariance::new(c11, c12, c22)?;
        let basis = pixel_basis(&shape_from_covariance(&c), policy);
        min_bound = min_bound.min(sigma_bound_elongation(&c, basis));
    }
    let sigma2 = policy.sigma_fraction * min_bound;
    let iso_scale = (6.0 * sigma2).sqrt();

    // A split too thin to realize as a box kernel degenerates to the
    // single-pass method.
    if iso_scale < MIN_SCALE {
        let specs = specs_for(map, policy, 0.0)?;
        return filter_space_variant_mixed(image, &specs, policy.edge);
    }

    let iso = vec![(ScaleVector::equal(iso_scale)?, Basis::Theta); map.data.len()];
    let stage_a = filter_space_variant_mixed(image, &iso, policy.edge)?;
    let specs = specs_for(map, policy, sigma2)?;
    filter_space_variant_mixed(&stage_a, &specs, policy.edge)
}

/// Dual-basis filtering: per pixel, the basis with the larger elongation
/// bound at the pixel's orientation; a single space-variant pass drawing on
/// both running-sum stacks.
pub fn filter_dual(
    image: &Raster,
    covmap: &CovarianceMap,
    policy: &PipelinePolicy,
) -> Result<Raster> {
    check_image(image, covmap)?;
    let policy = PipelinePolicy {
        basis: BasisPolicy::Dual,
        ..*policy
    };
    let report = validate_covmap(covmap, &policy, false);
    let map = resolve_map(covmap, &report, &policy)?;
    let specs = specs_for(map, &policy, 0.0)?;
    filter_space_variant_mixed(image, &specs, policy.edge)
}
