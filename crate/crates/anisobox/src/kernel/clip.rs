//! Allocation-free convex clipping primitives: rectangle/rectangle
//! intersection area and segment/rectangle chord length.

/// An oriented rectangle: center, two orthonormal axes and half-extents.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub center: [f64; 2],
    pub axis1: [f64; 2],
    pub axis2: [f64; 2],
    pub half1: f64,
    pub half2: f64,
}

impl Rect {
    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let c = self.center;
        let e1 = [self.axis1[0] * self.half1, self.axis1[1] * self.half1];
        let e2 = [self.axis2[0] * self.half2, self.axis2[1] * self.half2];
        [
            [c[0] + e1[0] + e2[0], c[1] + e1[1] + e2[1]],
            [c[0] - e1[0] + e2[0], c[1] - e1[1] + e2[1]],
            [c[0] - e1[0] - e2[0], c[1] - e1[1] - e2[1]],
            [c[0] + e1[0] - e2[0], c[1] + e1[1] - e2[1]],
        ]
    }

    /// The four half-planes whose intersection is the rectangle, as
    /// (inward unit normal, offset) with the constraint n.p >= d.
    fn half_planes(&self) -> [([f64; 2], f64); 4] {
        let c = self.center;
        let mut out = [([0.0; 2], 0.0); 4];
        for (i, (axis, half)) in [(self.axis1, self.half1), (self.axis2, self.half2)]
            .into_iter()
            .enumerate()
        {
            let proj = axis[0] * c[0] + axis[1] * c[1];
            out[2 * i] = (axis, proj - half);
            out[2 * i + 1] = ([-axis[0], -axis[1]], -(proj + half));
        }
        out
    }
}

/// Fixed-capacity convex polygon; rectangle/rectangle clipping never needs
/// more than eight vertices, the extra slots absorb intermediates.
#[derive(Debug, Clone, Copy)]
struct Poly {
    pts: [[f64; 2]; 12],
    len: usize,
}

impl Poly {
    fn from_rect(r: &Rect) -> Self {
        let mut pts = [[0.0; 2]; 12];
        pts[..4].copy_from_slice(&r.corners());
        Poly { pts, len: 4 }
    }

    fn clip_half_plane(&self, normal: [f64; 2], offset: f64) -> Poly {
        let mut out = Poly {
            pts: [[0.0; 2]; 12],
            len: 0,
        };
        for i in 0..self.len {
            let p = self.pts[i];
            let q = self.pts[(i + 1) % self.len];
            let dp = normal[0] * p[0] + normal[1] * p[1] - offset;
            let dq = normal[0] * q[0] + normal[1] * q[1] - offset;
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
                let t = dp / (dp - dq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        out
    }

    fn push(&mut self, p: [f64; 2]) {
        if self.len < self.pts.len() {
            self.pts[self.len] = p;
            self.len += 1;
        }
    }

    fn area(&self) -> f64 {
        if self.len < 3 {
            return 0.0;
        }
        let mut twice = 0.0;
        for i in 0..self.len {
            let p = self.pts[i];
            let q = self.pts[(i + 1) % self.len];
            twice += p[0] * q[1] - q[0] * p[1];
        }
        twice.abs() / 2.0
    }
}

/// Area of the intersection of two rectangles (shoelace over the clipped
/// convex polygon).
pub fn rect_intersection_area(a: &Rect, b: &Rect) -> f64 {
    let mut poly = Poly::from_rect(a);
    for (normal, offset) in b.half_planes() {
        poly = poly.clip_half_plane(normal, offset);
        if poly.len == 0 {
            return 0.0;
        }
    }
    poly.area()
}

/// Length of the part of the segment `p0..p1` inside the rectangle.
pub fn segment_rect_length(p0: [f64; 2], p1: [f64; 2], r: &Rect) -> f64 {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let (mut t_lo, mut t_hi) = (0.0f64, 1.0f64);
    for (normal, offset) in r.half_planes() {
        let num = normal[0] * p0[0] + normal[1] * p0[1] - offset;
        let den = normal[0] * d[0] + normal[1] * d[1];
        if den.abs() < 1e-300 {
            if num < 0.0 {
                return 0.0;
            }
        } else {
            let t = -num / den;
            if den > 0.0 {
                t_lo = t_lo.max(t);
            } else {
                t_hi = t_hi.min(t);
            }
        }
        if t_lo >= t_hi {
            return 0.0;
        }
    }
    (t_hi - t_lo) * (d[0] * d[0] + d[1] * d[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis_rect(cx: f64, cy: f64, w: f64, h: f64) -> Rect {
        Rect {
            center: [cx, cy],
            axis1: [1.0, 0.0],
            axis2: [0.0, 1.0],
            half1: w / 2.0,
            half2: h / 2.0,
        }
    }

    #[test]
    fn axis_aligned_overlap() {
        let a = axis_rect(0.0, 0.0, 2.0, 2.0);
        let b = axis_rect(1.0, 1.0, 2.0, 2.0);
        assert!((rect_intersection_area(&a, &b) - 1.0).abs() < 1e-12);
        let c = axis_rect(5.0, 0.0, 2.0, 2.0);
        assert_eq!(rect_intersection_area(&a, &c), 0.0);
    }

    #[test]
    fn rotated_square_in_square() {
        // Unit square vs the same square rotated 45 degrees: regular octagon
        // of area 8(sqrt(2) - 1) for side 2... use side 2 squares.
        let a = axis_rect(0.0, 0.0, 2.0, 2.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = Rect {
            center: [0.0, 0.0],
            axis1: [s, s],
            axis2: [-s, s],
            half1: 1.0,
            half2: 1.0,
        };
        let expect = 8.0 * (2f64.sqrt() - 1.0);
        assert!((rect_intersection_area(&a, &b) - expect).abs() < 1e-12);
    }

    #[test]
    fn segment_chord() {
        let r = axis_rect(0.0, 0.0, 2.0, 2.0);
        let len = segment_rect_length([-5.0, 0.0], [5.0, 0.0], &r);
        assert!((len - 2.0).abs() < 1e-12);
        assert_eq!(segment_rect_length([-5.0, 3.0], [5.0, 3.0], &r), 0.0);
        let diag = segment_rect_length([-5.0, -5.0], [5.0, 5.0], &r);
        assert!((diag - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
