//! Radial cascade geometry: circle radii, equal-volume boxes and arc
//! indexing. Everything here is a pure function of immutable inputs.

use std::f64::consts::{PI, TAU};

use crate::error::{CascadeError, Result};
use crate::params::Variant;

/// How to count the obstacles potentially crossed by a link of length `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageMode {
    /// Count circles with radius strictly below `r` (consistent with the
    /// cascade circle placement).
    Geometric,
    /// Literal unit-width convention: `floor(r)` obstacles.
    UnitFloor,
}

impl StageMode {
    pub fn name(self) -> &'static str {
        match self {
            StageMode::Geometric => "geometric",
            StageMode::UnitFloor => "unit_floor",
        }
    }
}

/// The concentric-circle skeleton of the cascade.
///
/// Circle `n` sits at radius `R * sqrt(2^n - 1)`, which makes every box
/// (annular region between adjacent circles bounded by two arcs) carry the
/// same area `V = pi R^2 / 2`.
#[derive(Debug, Clone)]
pub struct CascadeGeometry {
    base_radius: f64,
    max_stage: Option<u32>,
}

impl CascadeGeometry {
    pub fn new(base_radius: f64, max_stage: Option<u32>) -> Result<Self> {
        if !base_radius.is_finite() || base_radius <= 0.0 {
            return Err(CascadeError::InvalidParams(format!(
                "base_radius must be > 0, got {base_radius}"
            )));
        }
        if max_stage == Some(0) {
            return Err(CascadeError::InvalidParams("max_stage must be >= 1".into()));
        }
        Ok(Self::new_unchecked(base_radius, max_stage))
    }

    pub(crate) fn new_unchecked(base_radius: f64, max_stage: Option<u32>) -> Self {
        Self {
            base_radius,
            max_stage,
        }
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    /// `None` marks the unbounded model.
    pub fn max_stage(&self) -> Option<u32> {
        self.max_stage
    }

    /// Radius of the `n`-th circle; `radius(0) = 0`.
    pub fn radius(&self, n: u32) -> f64 {
        self.base_radius * (2f64.powi(n as i32) - 1.0).sqrt()
    }

    /// Outer radius of the service region for a finite model.
    pub fn outer_radius(&self) -> Option<f64> {
        self.max_stage.map(|n| self.radius(n))
    }

    /// Area of one box after `beam_split` binary angular subdivisions.
    /// The less-correlated variant halves the box once more.
    pub fn box_volume(&self, variant: Variant, beam_split: u32) -> f64 {
        let v = PI * self.base_radius * self.base_radius / 2.0;
        let split = match variant {
            Variant::LessCorrelated => beam_split + 1,
            _ => beam_split,
        };
        v / 2f64.powi(split as i32)
    }

    /// Number of potential blockage arcs on circle `stage`.
    pub fn arc_count(&self, variant: Variant, stage: u32) -> u64 {
        match variant {
            Variant::LessCorrelated => 1u64 << (stage + 1),
            _ => 1u64 << stage,
        }
    }

    /// Index of the half-open arc `[lo, hi)` containing `phi` on circle
    /// `stage`. Rejects angles outside `[0, 2pi)`.
    pub fn arc_index(&self, stage: u32, phi: f64, variant: Variant) -> Result<u64> {
        if !(0.0..TAU).contains(&phi) {
            return Err(CascadeError::AngleOutOfRange(phi));
        }
        let count = self.arc_count(variant, stage);
        let idx = (phi / TAU * count as f64) as u64;
        // phi just below 2pi can round up to `count` in the division.
        Ok(idx.min(count - 1))
    }

    /// Number of circles a radial link of length `r` crosses.
    pub fn stage_of_radius(&self, r: f64, mode: StageMode) -> u32 {
        debug_assert!(r > 0.0);
        match mode {
            StageMode::Geometric => {
                let mut n = 0u32;
                loop {
                    if let Some(max) = self.max_stage {
                        if n >= max {
                            return max;
                        }
                    }
                    if self.radius(n + 1) < r {
                        n += 1;
                    } else {
                        return n;
                    }
                }
            }
            StageMode::UnitFloor => r.floor() as u32,
        }
    }
}

/// Wraps an arbitrary angle into `[0, 2pi)`.
pub fn normalize_angle(phi: f64) -> f64 {
    let t = phi.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}
