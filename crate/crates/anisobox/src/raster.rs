use crate::error::{Error, Result};

/// A 2-D array of real samples, row-major, origin at the top-left.
/// `x` indexes columns, `y` indexes rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "raster data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    /// Unit impulse at `(x, y)` on a zero background.
    pub fn impulse(width: usize, height: usize, x: usize, y: usize) -> Self {
        let mut r = Raster::zeros(width, height);
        r[(x, y)] = 1.0;
        r
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with signed coordinates; zero outside the domain.
    #[inline]
    pub fn get_zero(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    /// Sample with signed coordinates; clamp to the nearest edge pixel.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copy `self` into the middle of a larger raster with `margin` pixels on
    /// every side, the margin filled with `fill`.
    pub fn padded(&self, margin: usize, fill: f64) -> Raster {
        let mut out = Raster::filled(self.width + 2 * margin, self.height + 2 * margin, fill);
        for y in 0..self.height {
            let dst = (y + margin) * out.width + margin;
            out.data[dst..dst + self.width].copy_from_slice(self.row(y));
        }
        out
    }

    /// Copy `self` into a larger raster, the margin filled by replicating the
    /// nearest edge pixel.
    pub fn padded_replicate(&self, margin: usize) -> Raster {
        let w = self.width + 2 * margin;
        let h = self.height + 2 * margin;
        let m = margin as i64;
        let mut out = Raster::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                out.data[y * w + x] = self.get_clamped(x as i64 - m, y as i64 - m);
            }
        }
        out
    }

    /// Root-mean-square of the elementwise difference over a centered window
    /// that excludes `border` pixels on every side, relative to the RMS of
    /// `other` over the same window.
    pub fn relative_rms(&self, other: &Raster, border: usize) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for y in border..self.height - border {
            for x in border..self.width - border {
                let d = self.get(x, y) - other.get(x, y);
                num += d * d;
                den += other.get(x, y) * other.get(x, y);
            }
        }
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

/// How samples outside the image domain are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgePolicy {
    /// Treat the outside as zero (matches the brute-force oracle exactly).
    Zero,
    /// Replicate the nearest edge pixel.
    Replicate,
}

impl Raster {
    /// Sample with signed coordinates under an edge policy.
    #[inline]
    pub fn sample(&self, x: i64, y: i64, edge: EdgePolicy) -> f64 {
        match edge {
            EdgePolicy::Zero => self.get_zero(x, y),
            EdgePolicy::Replicate => self.get_clamped(x, y),
        }
    }

    /// Pad by `margin` pixels per side according to the edge policy.
    pub fn padded_edge(&self, margin: usize, edge: EdgePolicy) -> Raster {
        match edge {
            EdgePolicy::Zero => self.padded(margin, 0.0),
            EdgePolicy::Replicate => self.padded_replicate(margin),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Raster {
    type Output = f64;
    #[inline]
    fn index(&self, (x, y): (usize, usize)) -> &f64 {
        &self.data[y * self.width + x]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Raster {
    #[inline]
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_and_index() {
        let mut r = Raster::zeros(3, 2);
        r[(2, 1)] = 5.0;
        let p = r.padded(2, 0.0);
        assert_eq!(p.width(), 7);
        assert_eq!(p.height(), 6);
        assert_eq!(p.get(4, 3), 5.0);
        assert_eq!(p.get_zero(-1, 0), 0.0);
    }

    #[test]
    fn replicate_padding_extends_edges() {
        let r = Raster::from_vec(2, 1, vec![3.0, 7.0]).unwrap();
        let p = r.padded_replicate(1);
        assert_eq!(p.get(0, 0), 3.0);
        assert_eq!(p.get(3, 2), 7.0);
    }
}
