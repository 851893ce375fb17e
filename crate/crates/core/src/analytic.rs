//! Laplace transforms of total interference for every model variant, and
//! their conversion to coverage probabilities.
//!
//! All cascade variants reduce to a backward two-branch recursion over the
//! stages. The only evaluation points ever needed for a root argument `s`
//! are `K^m s`, so a full evaluation costs `O(N^2)` rather than `O(2^N)`.

use std::f64::consts::PI;

use crate::error::{CascadeError, Result};
use crate::geometry::StageMode;
use crate::params::{ModelParams, Stages, Variant};

/// Laplace transform of the interference created inside a single box of
/// area `volume`: Poisson transmitters with unit-mean exponential fades.
pub fn box_lt(s: f64, volume: f64, lambda: f64) -> f64 {
    (-lambda * volume * s / (1.0 + s)).exp()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Memoized evaluator of the cascade functional equations.
///
/// Construction is cheap; evaluation is a pure function of the parameters,
/// so a solver can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct AnalyticSolver {
    params: ModelParams,
    tolerance: f64,
    max_iterations: usize,
    stage_mode: StageMode,
}

impl AnalyticSolver {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            tolerance: 1e-9,
            max_iterations: 200,
            stage_mode: StageMode::Geometric,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    /// Obstacle-count convention used by the independent model.
    pub fn with_stage_mode(mut self, mode: StageMode) -> Self {
        self.stage_mode = mode;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn volume(&self) -> f64 {
        PI * self.params.base_radius * self.params.base_radius / 2.0
    }

    /// Transform of the interference in one half-plane of the basic model.
    pub fn half_plane_lt(&self, s: f64) -> Result<f64> {
        self.stage_lt(s, 1)
    }

    /// Transform of the interference seen in a stage-`stage` cone of the
    /// basic model (the cone of one stage-`stage` arc, everything beyond
    /// circle `stage - 1`).
    pub fn stage_lt(&self, s: f64, stage: u32) -> Result<f64> {
        match self.params.stages {
            Stages::Finite(n) => {
                if stage < 1 || stage > n {
                    return Err(CascadeError::InvalidParams(format!(
                        "stage {stage} outside 1..={n}"
                    )));
                }
                Ok(self.finite_two_branch(s, self.volume(), n - stage))
            }
            // The cone transform satisfies the same fixed-point equation at
            // every stage of the unbounded model.
            Stages::Infinite => Ok(self.infinite_fixed_point(s, self.volume())?.0),
        }
    }

    /// Unbounded-model solver; also reports the iteration count.
    pub fn half_plane_lt_infinite(&self, s: f64) -> Result<(f64, usize)> {
        self.infinite_fixed_point(s, self.volume())
    }

    /// Quarter-plane transform of the less-correlated variant.
    pub fn lc_lt(&self, s: f64) -> Result<f64> {
        let volume = self.volume() / 2.0;
        match self.params.stages {
            Stages::Finite(n) => Ok(self.finite_two_branch(s, volume, n - 1)),
            Stages::Infinite => Ok(self.infinite_fixed_point(s, volume)?.0),
        }
    }

    /// Half-plane transform of the periodic variant (finite stages only).
    pub fn periodic_lt(&self, s: f64) -> Result<f64> {
        let n = self.params.finite_stages().ok_or_else(|| {
            CascadeError::Unsupported("the periodic variant requires finite stages".into())
        })?;
        let depth = (n - 1) as usize;
        let k = self.params.penetration;
        let lambda = self.params.lambda;
        let v = self.volume();
        let args: Vec<f64> = (0..=depth).map(|m| s * k.powi(m as i32)).collect();
        let a: Vec<f64> = args.iter().map(|&t| box_lt(t, v, lambda)).collect();
        let mut vals = a.clone();
        for step in 1..=depth {
            let top = depth - step;
            for m in 0..=top {
                // old vals[m + 1] is still untouched when scanning upward
                vals[m] = vals[m + 1] * vals[m] * a[m];
            }
        }
        Ok(vals[0])
    }

    /// Full-plane transform of the independent (per-link) blockage model.
    pub fn independent_lt(&self, s: f64, mode: StageMode) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        let p = self.params.p;
        let q = self.params.q();
        let k = self.params.penetration;
        let r0 = self.params.base_radius;
        let lambda = self.params.lambda;
        let geom = self.params.geometry();

        // Mean of 1/(1 + s K^L) with L ~ Binomial(n, p).
        let mean_inverse = |n: u32| -> f64 {
            let mut binom = 1.0f64;
            let mut total = 0.0;
            for l in 0..=n {
                let weight = binom * p.powi(l as i32) * q.powi((n - l) as i32);
                total += weight / (1.0 + s * k.powi(l as i32));
                if l < n {
                    binom *= (n - l) as f64 / (l + 1) as f64;
                }
            }
            total
        };

        let exponent = match (mode, self.params.stages) {
            (StageMode::Geometric, Stages::Finite(n_max)) => {
                // n(r) is constant on each annulus, so the radial integral
                // collapses to a finite sum over annuli.
                let mut total = 0.0;
                for n in 1..=n_max {
                    let area = PI * 2f64.powi(n as i32 - 1) * r0 * r0;
                    total += area * (1.0 - mean_inverse(n - 1));
                }
                total
            }
            (StageMode::Geometric, Stages::Infinite) => {
                let factor = self.params.contraction_factor();
                if factor >= 1.0 {
                    return Err(CascadeError::DivergentRegime { factor });
                }
                let mut total = 0.0;
                let mut n = 1u32;
                loop {
                    let area = PI * 2f64.powi(n as i32 - 1) * r0 * r0;
                    let inc = area * (1.0 - mean_inverse(n - 1));
                    total += inc;
                    if n > 4 && inc < 1e-15 * total {
                        break;
                    }
                    if n > 5000 {
                        return Err(CascadeError::IterationBudget(5000));
                    }
                    n += 1;
                }
                total
            }
            (StageMode::UnitFloor, stages) => {
                let outer = match stages {
                    Stages::Finite(n) => Some(geom.radius(n)),
                    Stages::Infinite => None,
                };
                let mut total = 0.0;
                let mut j = 0u32;
                loop {
                    let lo = j as f64;
                    let hi_full = lo + 1.0;
                    let hi = match outer {
                        Some(r_max) => {
                            if lo >= r_max {
                                break;
                            }
                            hi_full.min(r_max)
                        }
                        None => hi_full,
                    };
                    let area = PI * (hi * hi - lo * lo);
                    let inc = area * (1.0 - mean_inverse(j));
                    total += inc;
                    if outer.is_none() && j > 4 && inc.abs() < 1e-12 * total {
                        break;
                    }
                    if j > 100_000 {
                        return Err(CascadeError::IterationBudget(100_000));
                    }
                    j += 1;
                }
                total
            }
        };
        Ok((-lambda * exponent).exp())
    }

    /// Laplace transform of the total interference seen at the origin,
    /// dispatched by variant.
    pub fn total_lt(&self, s: f64) -> Result<f64> {
        match self.params.variant {
            Variant::Basic => {
                let half = self.half_plane_lt(s)?;
                Ok(half * half)
            }
            Variant::LessCorrelated => {
                let quarter = self.lc_lt(s)?;
                Ok(quarter.powi(4))
            }
            Variant::Periodic => {
                let half = self.periodic_lt(s)?;
                Ok(half * half)
            }
            Variant::Independent => self.independent_lt(s, self.stage_mode),
        }
    }

    /// Probability that the SIR of the virtual serving link exceeds
    /// `theta` (linear) under antenna gain `gain`.
    pub fn coverage(&self, theta: f64, gain: f64) -> Result<f64> {
        self.total_lt(theta / gain)
    }

    /// Finite backward recursion for the two-branch variants. `depth` is
    /// the number of recursion steps below the target stage.
    fn finite_two_branch(&self, s: f64, volume: f64, depth: u32) -> f64 {
        let p = self.params.p;
        let q = self.params.q();
        let k = self.params.penetration;
        let lambda = self.params.lambda;
        let depth = depth as usize;
        let args: Vec<f64> = (0..=depth).map(|m| s * k.powi(m as i32)).collect();
        let a: Vec<f64> = args.iter().map(|&t| box_lt(t, volume, lambda)).collect();
        let mut vals = a.clone();
        for step in 1..=depth {
            let top = depth - step;
            for m in 0..=top {
                let child_scaled = vals[m + 1];
                let child_plain = vals[m];
                vals[m] = (p * child_scaled * child_scaled + q * child_plain * child_plain) * a[m];
            }
        }
        vals[0]
    }

    /// Iterates the depth-truncated recursion until the whole evaluation
    /// set `{K^m s}` is stable to within the tolerance.
    fn infinite_fixed_point(&self, s: f64, volume: f64) -> Result<(f64, usize)> {
        let factor = self.params.contraction_factor();
        if self.params.p <= 0.5 || factor >= 1.0 {
            return Err(CascadeError::DivergentRegime { factor });
        }
        let p = self.params.p;
        let q = self.params.q();
        let k = self.params.penetration;
        let lambda = self.params.lambda;
        let cap = self.max_iterations;
        let args: Vec<f64> = (0..=cap).map(|m| s * k.powi(m as i32)).collect();
        let a: Vec<f64> = args.iter().map(|&t| box_lt(t, volume, lambda)).collect();
        let mut vals = a.clone();
        for iter in 1..=cap {
            let top = cap - iter;
            let mut diff = 0.0f64;
            for m in 0..=top {
                let next = (p * vals[m + 1] * vals[m + 1] + q * vals[m] * vals[m]) * a[m];
                diff = diff.max((next - vals[m]).abs());
                vals[m] = next;
            }
            if diff < self.tolerance {
                return Ok((vals[0], iter));
            }
        }
        Err(CascadeError::IterationBudget(cap))
    }
}

/// A coverage curve over a threshold grid, thresholds kept both in dB and
/// linear.
#[derive(Debug, Clone)]
pub struct CoverageCurve {
    pub theta_db: Vec<f64>,
    pub theta_lin: Vec<f64>,
    pub values: Vec<f64>,
}

impl CoverageCurve {
    pub fn analytic(solver: &AnalyticSolver, theta_db: &[f64], gain: f64) -> Result<Self> {
        let theta_lin: Vec<f64> = theta_db.iter().map(|&db| db_to_lin(db)).collect();
        let values = theta_lin
            .iter()
            .map(|&t| solver.coverage(t, gain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            theta_db: theta_db.to_vec(),
            theta_lin,
            values,
        })
    }
}
