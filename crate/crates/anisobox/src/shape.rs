//! Closed-form relations between scale vectors, covariance matrices and shape
//! parameters, plus the feasibility bounds that govern covariance splitting
//! and basis selection.

use crate::error::{Error, Result};

/// Maximum eigenvalue ratio accepted by [`Covariance::new`]. Sliver matrices
/// beyond this are far outside any basis's feasible set and only blow up the
/// solver numerically.
const MAX_EIGEN_RATIO: f64 = 1e6;

/// Symmetric positive-definite 2x2 matrix of second moments (squared pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

impl Covariance {
    pub fn new(c11: f64, c12: f64, c22: f64) -> Result<Self> {
        if !(c11 > 0.0 && c22 > 0.0 && c11 * c22 - c12 * c12 > 0.0)
            || !(c11.is_finite() && c12.is_finite() && c22.is_finite())
        {
            return Err(Error::NotPositiveDefinite { c11, c12, c22 });
        }
        let c = Covariance { c11, c12, c22 };
        let (lmax, lmin) = c.eigenvalues();
        if lmax / lmin > MAX_EIGEN_RATIO {
            return Err(Error::InvalidArgument(format!(
                "covariance eigenvalue ratio {:.3e} exceeds {MAX_EIGEN_RATIO:.0e}",
                lmax / lmin
            )));
        }
        Ok(c)
    }

    pub fn isotropic(variance: f64) -> Self {
        Covariance {
            c11: variance,
            c12: 0.0,
            c22: variance,
        }
    }

    /// Eigenvalues as `(lambda_max, lambda_min)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.c11 + self.c22;
        let d = ((self.c11 - self.c22).powi(2) + 4.0 * self.c12 * self.c12).sqrt();
        ((tr + d) / 2.0, (tr - d) / 2.0)
    }

    pub fn det(&self) -> f64 {
        self.c11 * self.c22 - self.c12 * self.c12
    }

    pub fn trace(&self) -> f64 {
        self.c11 + self.c22
    }

    /// Frobenius norm of the difference to `other`.
    pub fn frobenius_distance(&self, other: &Covariance) -> f64 {
        let d11 = self.c11 - other.c11;
        let d12 = self.c12 - other.c12;
        let d22 = self.c22 - other.c22;
        (d11 * d11 + 2.0 * d12 * d12 + d22 * d22).sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.c11 * self.c11 + 2.0 * self.c12 * self.c12 + self.c22 * self.c22).sqrt()
    }
}

/// Size / elongation / orientation of an elliptical kernel:
/// `s` = sum of covariance eigenvalues, `rho` = eigenvalue ratio >= 1,
/// `theta` = orientation of the major axis in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    pub s: f64,
    pub rho: f64,
    pub theta: f64,
}

impl ShapeParams {
    pub fn new(s: f64, rho: f64, theta: f64) -> Result<Self> {
        if !(s > 0.0) || !(rho >= 1.0) || !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "invalid shape parameters: s={s}, rho={rho}, theta={theta}"
            )));
        }
        Ok(ShapeParams { s, rho, theta })
    }
}

/// Four nonnegative box widths along the basis directions (pixels).
/// At most one width may be zero; two or more zeros collapse the kernel onto
/// a measure-zero support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleVector {
    pub a: [f64; 4],
}

impl ScaleVector {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let a = [a1, a2, a3, a4];
        if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale entries must be finite and nonnegative: ({a1}, {a2}, {a3}, {a4})"
            )));
        }
        if a.iter().filter(|v| **v == 0.0).count() > 1 {
            return Err(Error::DegenerateScales(a1, a2, a3, a4));
        }
        Ok(ScaleVector { a })
    }

    pub fn equal(a: f64) -> Result<Self> {
        ScaleVector::new(a, a, a, a)
    }

    /// Product of the four widths (the mesh weight is its reciprocal).
    pub fn product(&self) -> f64 {
        self.a.iter().product()
    }

    pub fn max(&self) -> f64 {
        self.a.iter().cloned().fold(0.0, f64::max)
    }
}

/// The two four-direction bases. `Theta` uses the axes and diagonals of the
/// pixel grid; `ThetaPrime` uses the directions with tangents
/// {1/2, 2, -2, -1/2}, whose grid steps all have length sqrt(5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Theta,
    ThetaPrime,
}

impl Basis {
    pub fn name(&self) -> &'static str {
        match self {
            Basis::Theta => "theta",
            Basis::ThetaPrime => "theta-prime",
        }
    }

    /// Integer grid step along each direction.
    pub fn steps(&self) -> [[i64; 2]; 4] {
        match self {
            Basis::Theta => [[1, 0], [1, 1], [0, 1], [-1, 1]],
            Basis::ThetaPrime => [[2, 1], [1, 2], [-1, 2], [-2, 1]],
        }
    }

    /// Step lengths |step_k|.
    pub fn step_lengths(&self) -> [f64; 4] {
        match self {
            Basis::Theta => [1.0, std::f64::consts::SQRT_2, 1.0, std::f64::consts::SQRT_2],
            Basis::ThetaPrime => [5f64.sqrt(); 4],
        }
    }

    /// Unit direction vectors u_k = step_k / |step_k|.
    pub fn directions(&self) -> [[f64; 2]; 4] {
        let steps = self.steps();
        let lens = self.step_lengths();
        let mut u = [[0.0; 2]; 4];
        for k in 0..4 {
            u[k] = [steps[k][0] as f64 / lens[k], steps[k][1] as f64 / lens[k]];
        }
        u
    }
}

/// Covariance of the four-directional box spline on `Theta` with the given
/// scales: (1/24)[[2a1^2+a2^2+a4^2, a2^2-a4^2], [., 2a3^2+a2^2+a4^2]].
pub fn beta_covariance(a: &ScaleVector) -> Covariance {
    let [u1, u2, u3, u4] = squares(a);
    Covariance {
        c11: (2.0 * u1 + u2 + u4) / 24.0,
        c12: (u2 - u4) / 24.0,
        c22: (2.0 * u3 + u2 + u4) / 24.0,
    }
}

/// Covariance of the box spline on `ThetaPrime`:
/// (1/60)[[4a1^2+a2^2+a3^2+4a4^2, 2(a1^2+a2^2-a3^2-a4^2)], [., a1^2+4a2^2+4a3^2+a4^2]].
pub fn beta_prime_covariance(a: &ScaleVector) -> Covariance {
    let [u1, u2, u3, u4] = squares(a);
    Covariance {
        c11: (4.0 * u1 + u2 + u3 + 4.0 * u4) / 60.0,
        c12: 2.0 * (u1 + u2 - u3 - u4) / 60.0,
        c22: (u1 + 4.0 * u2 + 4.0 * u3 + u4) / 60.0,
    }
}

/// Covariance of the box spline with scales `a` on `basis`; both cases reduce
/// to sum_k (a_k^2 / 12) u_k u_k^T.
pub fn box_spline_covariance(a: &ScaleVector, basis: Basis) -> Covariance {
    match basis {
        Basis::Theta => beta_covariance(a),
        Basis::ThetaPrime => beta_prime_covariance(a),
    }
}

fn squares(a: &ScaleVector) -> [f64; 4] {
    [
        a.a[0] * a.a[0],
        a.a[1] * a.a[1],
        a.a[2] * a.a[2],
        a.a[3] * a.a[3],
    ]
}

/// Size, elongation and orientation of a covariance matrix. Isotropic inputs
/// get the deterministic tie-break theta = 0.
pub fn shape_from_covariance(c: &Covariance) -> ShapeParams {
    let (lmax, lmin) = c.eigenvalues();
    let rho = lmax / lmin;
    let theta = if 2.0 * c.c12 == 0.0 && c.c11 == c.c22 {
        0.0
    } else {
        normalize_angle(0.5 * (2.0 * c.c12).atan2(c.c11 - c.c22))
    };
    ShapeParams {
        s: c.trace(),
        rho,
        theta,
    }
}

/// Inverse of [`shape_from_covariance`]:
/// R(theta) diag(s rho/(1+rho), s/(1+rho)) R(theta)^T.
pub fn covariance_from_shape(p: &ShapeParams) -> Covariance {
    let lmax = p.s * p.rho / (1.0 + p.rho);
    let lmin = p.s / (1.0 + p.rho);
    let (sin, cos) = p.theta.sin_cos();
    Covariance {
        c11: lmax * cos * cos + lmin * sin * sin,
        c12: (lmax - lmin) * sin * cos,
        c22: lmax * sin * sin + lmin * cos * cos,
    }
}

/// Reduce an angle to `[0, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta % pi;
    if t < 0.0 {
        t += pi;
    }
    if t >= pi {
        t = 0.0;
    }
    t
}

/// Fraction of the eigenvalue gap realizable at orientation `phi`:
/// the largest r such that covariances with (lmax-lmin)/(lmax+lmin) <= r are
/// feasible on the basis. The elongation bound is (1+r)/(1-r).
fn gap_ratio(phi: f64, basis: Basis) -> f64 {
    let (s2, c2) = (2.0 * phi).sin_cos();
    match basis {
        // Theta feasibility: |C12| <= min(C11, C22), i.e. the gap fraction
        // is bounded by 1/(|sin 2phi| + |cos 2phi|).
        Basis::Theta => 1.0 / (s2.abs() + c2.abs()),
        // ThetaPrime feasibility: |20(C11-C22)| and |30 C12| are both
        // bounded by 12(C11+C22).
        Basis::ThetaPrime => 12.0 / (20.0 * c2.abs()).max(15.0 * s2.abs()),
    }
}

/// Maximum elongation (eigenvalue ratio) realizable at orientation `phi`,
/// `f64::INFINITY` exactly on the basis's own axes. On `Theta` this equals
/// (1+t+sqrt(1+t^2))/(1+t-sqrt(1+t^2)) with t = |tan phi - cot phi|/2.
pub fn elongation_bound(phi: f64, basis: Basis) -> f64 {
    let r = gap_ratio(phi, basis);
    // The ratio reaches 1 exactly on the basis's own axes; absorb the
    // round-off of sin/cos there so the sentinel is returned exactly.
    if r >= 1.0 - 1e-9 {
        f64::INFINITY
    } else {
        (1.0 + r) / (1.0 - r)
    }
}

/// Supremum of admissible sigma^2 keeping C - sigma^2 I positive definite
/// (the smaller eigenvalue of C).
pub fn sigma_bound_pd(c: &Covariance) -> f64 {
    c.eigenvalues().1
}

/// Supremum of sigma^2 such that C - sigma^2 I stays within the basis's
/// elongation capability at the orientation of C:
/// (1/2)(C11 + C22 - ((e+1)/(e-1)) sqrt((C11-C22)^2 + 4 C12^2)).
/// When the bound e is infinite the coefficient degenerates to 1 and this
/// equals [`sigma_bound_pd`]. May be <= 0 for targets too elongated for the
/// basis; the caller must handle that.
pub fn sigma_bound_elongation(c: &Covariance, basis: Basis) -> f64 {
    let phi = shape_from_covariance(c).theta;
    let e = elongation_bound(phi, basis);
    let coef = if e.is_infinite() {
        1.0
    } else {
        (e + 1.0) / (e - 1.0)
    };
    let gap = ((c.c11 - c.c22).powi(2) + 4.0 * c.c12 * c.c12).sqrt();
    0.5 * (c.trace() - coef * gap)
}

/// Split C = sigma^2 I + dC with sigma^2 = fraction x the elongation bound,
/// so that dC is positive definite and feasible on `basis`.
pub fn split_covariance(
    c: &Covariance,
    fraction: f64,
    basis: Basis,
) -> Result<(f64, Covariance)> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma fraction must lie in (0,1), got {fraction}"
        )));
    }
    let bound = sigma_bound_elongation(c, basis);
    if !(bound > 0.0) {
        return Err(Error::InfeasibleSplit { bound });
    }
    let sigma2 = fraction * bound;
    let dc = Covariance {
        c11: c.c11 - sigma2,
        c12: c.c12,
        c22: c.c22 - sigma2,
    };
    Ok((sigma2, dc))
}

/// The basis with the larger elongation bound at orientation `phi`; ties go
/// to `Theta`.
pub fn sector_select(phi: f64) -> Basis {
    let e_theta = elongation_bound(phi, Basis::Theta);
    let e_prime = elongation_bound(phi, Basis::ThetaPrime);
    if e_prime > e_theta {
        Basis::ThetaPrime
    } else {
        Basis::Theta
    }
}
