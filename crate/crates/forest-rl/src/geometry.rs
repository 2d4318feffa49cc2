//! Axis-aligned boxes over the input space.
//!
//! Trees, policies and knownness structures all reason about axis-aligned
//! hyperrectangles: tree domains, leaf cells, and the degenerate "state slice"
//! rectangles used when maximizing a Q function over actions. Degenerate
//! rectangles (zero width in some dimension) are deliberately legal; callers
//! that weight by volume treat them as weight zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HyperRectangle {
    bounds: Vec<(f64, f64)>,
}

impl HyperRectangle {
    /// Build from ordered (min, max) pairs. Fails on an empty list, on
    /// min > max, or on non-finite bounds.
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::EmptyRectangle);
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite {
                    context: "rectangle bounds",
                });
            }
            if lo > hi {
                return Err(Error::InvalidRectangle {
                    dim: d,
                    min: lo,
                    max: hi,
                });
            }
        }
        Ok(Self { bounds })
    }

    /// The unit cube [0,1]^k.
    pub fn unit(dims: usize) -> Self {
        Self::new(vec![(0.0, 1.0); dims]).expect("unit cube")
    }

    /// Degenerate rectangle holding exactly one point.
    pub fn point(p: &[f64]) -> Result<Self> {
        Self::new(p.iter().map(|&x| (x, x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn min(&self, d: usize) -> f64 {
        self.bounds[d].0
    }

    pub fn max(&self, d: usize) -> f64 {
        self.bounds[d].1
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn edge(&self, d: usize) -> f64 {
        self.bounds[d].1 - self.bounds[d].0
    }

    /// Product of edge lengths; zero for degenerate rectangles.
    pub fn size(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }

    /// Longest edge length.
    pub fn max_edge(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Closed-interval membership in every dimension.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }

    pub fn contains_rect(&self, other: &HyperRectangle) -> bool {
        other.dim() == self.dim()
            && other
                .bounds
                .iter()
                .zip(&self.bounds)
                .all(|(&(olo, ohi), &(lo, hi))| olo >= lo && ohi <= hi)
    }

    /// Clamp a point coordinate-wise into the rectangle.
    pub fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.bounds)
            .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
            .collect()
    }

    /// Cut along dimension `d` at `value`, returning (lower, upper). The cut
    /// value must lie inside the closed interval of that dimension; children
    /// may be degenerate, which callers tolerate (volume weights then vanish).
    pub fn split(&self, d: usize, value: f64) -> Result<(Self, Self)> {
        if d >= self.dim() {
            return Err(Error::DimOutOfRange {
                dim: d,
                dims: self.dim(),
            });
        }
        let (lo, hi) = self.bounds[d];
        if !(value >= lo && value <= hi) {
            return Err(Error::SplitOutOfRange {
                dim: d,
                value,
                min: lo,
                max: hi,
            });
        }
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.bounds[d].1 = value;
        upper.bounds[d].0 = value;
        Ok((lower, upper))
    }

    /// Shrink one bound in place; used by tree walks that track the current
    /// cell without reallocating.
    pub fn set_min(&mut self, d: usize, v: f64) {
        self.bounds[d].0 = v;
    }

    pub fn set_max(&mut self, d: usize, v: f64) {
        self.bounds[d].1 = v;
    }
}
