//! Rectangular regions of the plane and scalar fields sampled on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[re_min, re_max] x [im_min, im_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn square(center: Complex64, half_width: f64) -> Self {
        Rect::new(
            center.re - half_width,
            center.re + half_width,
            center.im - half_width,
            center.im + half_width,
        )
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Counter-clockwise corners starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// A rectangle with a sampling resolution; points include both edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Self {
        GridSpec { rect, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axis(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n <= 1 {
            0.5 * (min + max)
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    /// Point at column `i` (real axis) and row `j` (imaginary axis).
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            Self::axis(self.rect.re_min, self.rect.re_max, self.nx, i),
            Self::axis(self.rect.im_min, self.rect.im_max, self.ny, j),
        )
    }

    /// Point at row-major flat index.
    pub fn point_at(&self, idx: usize) -> Complex64 {
        self.point(idx % self.nx, idx / self.nx)
    }

    /// Spacing along the real and imaginary axes.
    pub fn spacing(&self) -> (f64, f64) {
        let step = |min: f64, max: f64, n: usize| {
            if n <= 1 {
                0.0
            } else {
                (max - min) / (n - 1) as f64
            }
        };
        (
            step(self.rect.re_min, self.rect.re_max, self.nx),
            step(self.rect.im_min, self.rect.im_max, self.ny),
        )
    }

    /// Evaluates `f` at every grid point in parallel; output is row-major and
    /// independent of the thread count.
    pub fn evaluate<F>(&self, f: F) -> GridField
    where
        F: Fn(Complex64) -> Option<f64> + Sync,
    {
        let samples: Vec<Option<f64>> = (0..self.len())
            .into_par_iter()
            .map(|idx| f(self.point_at(idx)).filter(|v| v.is_finite()))
            .collect();
        let mask = samples.iter().map(Option::is_some).collect();
        let values = samples.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        GridField {
            spec: *self,
            values,
            mask,
        }
    }
}

/// Scalar field on a grid; `mask[i]` marks valid (finite, certified) entries.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != spec.len() || mask.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} entries, got {} values and {} mask flags",
                spec.len(),
                values.len(),
                mask.len()
            )));
        }
        if values.iter().zip(&mask).any(|(v, &m)| m && !v.is_finite()) {
            return Err(Error::InvalidInput("valid grid entry is not finite".into()));
        }
        Ok(GridField { spec, values, mask })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let idx = j * self.spec.nx + i;
        self.mask[idx].then(|| self.values[idx])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Same grid, values shifted by a constant.
    pub fn offset(&self, c: f64) -> GridField {
        GridField {
            spec: self.spec,
            values: self.values.iter().map(|v| v + c).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Min and max over valid entries.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}
