use std::fmt;

use crate::error::{CascadeError, Result};
use crate::geometry::CascadeGeometry;

/// Which blockage environment the cascade describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Binary cascade with i.i.d. blockage marks on full-width arcs.
    Basic,
    /// Each half of a basic arc is blocked independently (half-width arcs).
    LessCorrelated,
    /// Exactly one arc of every sibling pair is blocked.
    Periodic,
    /// No shared geometry; each link draws its own blockage count.
    Independent,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::LessCorrelated => "less_correlated",
            Variant::Periodic => "periodic",
            Variant::Independent => "independent",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stage budget of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stages {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Stages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stages::Finite(n) => write!(f, "{n}"),
            Stages::Infinite => f.write_str("inf"),
        }
    }
}

/// Description of one blockage environment.
///
/// `lambda` is the base-station density, `base_radius` the first-circle
/// radius, `p` the per-arc blockage probability, `penetration` the power
/// attenuation factor applied per blocked arc crossed.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub lambda: f64,
    pub base_radius: f64,
    pub p: f64,
    pub penetration: f64,
    pub stages: Stages,
    pub variant: Variant,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        base_radius: f64,
        p: f64,
        penetration: f64,
        stages: Stages,
        variant: Variant,
    ) -> Result<Self> {
        let params = Self {
            lambda,
            base_radius,
            p,
            penetration,
            stages,
            variant,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CascadeError::InvalidParams(msg));
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        if !self.base_radius.is_finite() || self.base_radius <= 0.0 {
            return bad(format!("base_radius must be > 0, got {}", self.base_radius));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(0.0..=1.0).contains(&self.penetration) {
            return bad(format!(
                "penetration factor must lie in [0, 1], got {}",
                self.penetration
            ));
        }
        match self.stages {
            Stages::Finite(0) => return bad("stage count must be >= 1".into()),
            Stages::Finite(n) if n > 60 => {
                return bad(format!("stage count {n} too large (max 60)"));
            }
            Stages::Infinite => {
                if self.p <= 0.5 || self.p.is_nan() {
                    return bad(format!(
                        "infinite stage budget requires p > 1/2, got p = {}",
                        self.p
                    ));
                }
                if self.penetration >= 1.0 {
                    return bad("infinite stage budget requires penetration < 1".into());
                }
            }
            _ => {}
        }
        if self.variant == Variant::Periodic && self.stages == Stages::Infinite {
            return bad("the periodic variant requires a finite stage count".into());
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Per-stage growth factor of the mean interference contribution.
    /// The infinite-depth solvers require this to be < 1.
    pub fn contraction_factor(&self) -> f64 {
        2.0 * (self.q() + self.p * self.penetration)
    }

    pub fn finite_stages(&self) -> Option<u32> {
        match self.stages {
            Stages::Finite(n) => Some(n),
            Stages::Infinite => None,
        }
    }

    pub fn geometry(&self) -> CascadeGeometry {
        CascadeGeometry::new_unchecked(self.base_radius, self.finite_stages())
    }

    /// Convenience constructor for the common test setup: returns a copy
    /// with a different variant, other fields untouched.
    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }
}
