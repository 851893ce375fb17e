//! Simulation oracle: Poisson base stations, exponential fades and sampled
//! blockage trees, reduced to empirical coverage estimates.
//!
//! Determinism contract: every realization draws from its own substream
//! derived from `(seed, realization index)`, and all reductions are exact
//! integer counts, so results are byte-identical for any worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::beams::BeamConfig;
use crate::blockage::{independent_penetration, sample_tree, BlockageTree};
use crate::error::{CascadeError, Result};
use crate::geometry::{CascadeGeometry, StageMode};
use crate::params::{ModelParams, Variant};

/// Beam-selection strategy under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Omni,
    BestBeam,
    RandomBeam,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Omni => "omni",
            Strategy::BestBeam => "best_beam",
            Strategy::RandomBeam => "random_beam",
        }
    }
}

/// One sampled network snapshot inside the disk of radius `radius(N)`.
#[derive(Debug, Clone)]
pub struct Realization {
    /// Base stations as `(r, phi)` pairs.
    pub points: Vec<(f64, f64)>,
    /// One unit-mean exponential fade per base station.
    pub fades: Vec<f64>,
    /// Fade of the virtual serving link.
    pub serving_fade: f64,
    /// Shared blockage tree (absent for the independent variant).
    pub tree: Option<BlockageTree>,
    /// Per-link attenuations of the independent variant.
    pub attenuations: Option<Vec<f64>>,
}

/// Draws one network realization. Requires a finite stage budget.
pub fn sample_realization(params: &ModelParams, rng: &mut impl Rng) -> Result<Realization> {
    let stages = params.finite_stages().ok_or_else(|| {
        CascadeError::Unsupported(
            "simulation requires a finite stage budget; pick a truncation stage".into(),
        )
    })?;
    let geom = params.geometry();
    let outer = geom.radius(stages);
    let mean = params.lambda * std::f64::consts::PI * outer * outer;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| CascadeError::InvalidParams(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let r = outer * rng.gen::<f64>().sqrt();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        points.push((r, phi));
    }
    let fades: Vec<f64> = (0..count).map(|_| Exp1.sample(rng)).collect();
    let serving_fade = Exp1.sample(rng);
    let (tree, attenuations) = match params.variant {
        Variant::Independent => {
            let atten = points
                .iter()
                .map(|&(r, _)| independent_penetration(params, r, StageMode::Geometric, rng))
                .collect();
            (None, Some(atten))
        }
        _ => (Some(sample_tree(params, rng)?), None),
    };
    Ok(Realization {
        points,
        fades,
        serving_fade,
        tree,
        attenuations,
    })
}

fn link_attenuation(
    real: &Realization,
    geom: &CascadeGeometry,
    params: &ModelParams,
    idx: usize,
) -> f64 {
    match (&real.tree, &real.attenuations) {
        (Some(tree), _) => {
            let (r, phi) = real.points[idx];
            tree.attenuation(geom, r, phi, params.penetration)
                .expect("angles are normalized at sampling time")
        }
        (None, Some(atten)) => atten[idx],
        (None, None) => 1.0,
    }
}

/// Total interference, optionally restricted to one beam cone (0-based).
pub fn interference(
    real: &Realization,
    params: &ModelParams,
    beam: Option<u32>,
    config: &BeamConfig,
) -> f64 {
    let geom = params.geometry();
    let mut total = 0.0;
    for idx in 0..real.points.len() {
        if let Some(beam) = beam {
            if beam_of(real.points[idx].1, config.k) != beam {
                continue;
            }
        }
        total += real.fades[idx] * link_attenuation(real, &geom, params, idx);
    }
    total
}

/// Per-beam interference buckets; their sum is the total interference.
pub fn interference_per_beam(
    real: &Realization,
    params: &ModelParams,
    config: &BeamConfig,
) -> Vec<f64> {
    let geom = params.geometry();
    let mut buckets = vec![0.0; config.beam_count() as usize];
    for idx in 0..real.points.len() {
        let beam = beam_of(real.points[idx].1, config.k) as usize;
        buckets[beam] += real.fades[idx] * link_attenuation(real, &geom, params, idx);
    }
    buckets
}

fn beam_of(phi: f64, k: u32) -> u32 {
    let count = 1u32 << k;
    let idx = (phi / std::f64::consts::TAU * count as f64) as u32;
    idx.min(count - 1)
}

/// An empirical probability with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub sample_count: u64,
    pub seed: u64,
}

fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

fn check_sampling(params: &ModelParams, n_samples: u64) -> Result<()> {
    params.validate()?;
    if params.finite_stages().is_none() {
        return Err(CascadeError::Unsupported(
            "simulation requires a finite stage budget; pick a truncation stage".into(),
        ));
    }
    if n_samples < 100 {
        return Err(CascadeError::InvalidParams(format!(
            "n_samples = {n_samples} too small for a meaningful confidence interval (min 100)"
        )));
    }
    Ok(())
}

/// Empirical coverage probability for every threshold of `theta_lin`.
pub fn estimate_coverage(
    params: &ModelParams,
    config: &BeamConfig,
    theta_lin: &[f64],
    strategy: Strategy,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    check_sampling(params, n_samples)?;
    let counts = (0..n_samples)
        .into_par_iter()
        .fold(
            || vec![0u64; theta_lin.len()],
            |mut acc, i| {
                let mut rng = substream(seed, i);
                let real = sample_realization(params, &mut rng).expect("params validated");
                match strategy {
                    Strategy::Omni => {
                        let total = interference(&real, params, None, config);
                        for (slot, &theta) in acc.iter_mut().zip(theta_lin) {
                            *slot += (real.serving_fade >= theta * total) as u64;
                        }
                    }
                    Strategy::BestBeam | Strategy::RandomBeam => {
                        let per_beam = interference_per_beam(&real, params, config);
                        let fades: Vec<f64> =
                            (0..per_beam.len()).map(|_| Exp1.sample(&mut rng)).collect();
                        let gain = config.gain;
                        for (slot, &theta) in acc.iter_mut().zip(theta_lin) {
                            let covered = match strategy {
                                Strategy::RandomBeam => gain * fades[0] >= theta * per_beam[0],
                                _ => per_beam
                                    .iter()
                                    .zip(&fades)
                                    .any(|(&i_l, &h_l)| gain * h_l >= theta * i_l),
                            };
                            *slot += covered as u64;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; theta_lin.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts
        .into_iter()
        .map(|c| bernoulli_estimate(c, n_samples, seed))
        .collect())
}

fn bernoulli_estimate(count: u64, n: u64, seed: u64) -> Estimate {
    let mean = count as f64 / n as f64;
    // sample standard deviation of a 0/1 variable over n draws
    let var = if n > 1 {
        mean * (1.0 - mean) * n as f64 / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        sample_count: n,
        seed,
    }
}

/// Empirical conditional coverage of beam `target` (1-based) given the
/// first beam is covered, with a delta-method standard error for the
/// ratio of the two correlated frequencies.
pub fn estimate_conditional(
    params: &ModelParams,
    config: &BeamConfig,
    theta_lin: f64,
    target: u32,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_sampling(params, n_samples)?;
    let beams = config.beam_count();
    if target < 1 || target > beams {
        return Err(CascadeError::InvalidParams(format!(
            "target beam {target} outside 1..={beams}"
        )));
    }
    let (joint, marginal) = (0..n_samples)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(mut joint, mut marginal), i| {
                let mut rng = substream(seed, i);
                let real = sample_realization(params, &mut rng).expect("params validated");
                let per_beam = interference_per_beam(&real, params, config);
                let fades: Vec<f64> = (0..per_beam.len()).map(|_| Exp1.sample(&mut rng)).collect();
                let gain = config.gain;
                let covered = |l: usize| gain * fades[l] >= theta_lin * per_beam[l];
                let source = covered(0);
                marginal += source as u64;
                joint += (source && covered((target - 1) as usize)) as u64;
                (joint, marginal)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if marginal == 0 {
        return Err(CascadeError::NegligibleConditioning);
    }
    let n = n_samples as f64;
    let a = joint as f64 / n;
    let b = marginal as f64 / n;
    let ratio = a / b;
    // joint implies marginal, so cov(a, b) = a(1 - b)
    let var_a = a * (1.0 - a);
    let var_b = b * (1.0 - b);
    let cov = a * (1.0 - b);
    let rel_var = if a > 0.0 {
        var_a / (a * a) + var_b / (b * b) - 2.0 * cov / (a * b)
    } else {
        0.0
    };
    Ok(Estimate {
        mean: ratio,
        std_error: ratio * (rel_var.max(0.0) / n).sqrt(),
        sample_count: n_samples,
        seed,
    })
}

/// Upper bound on the mean interference discarded by truncating the
/// unbounded model at `truncation_stage`.
pub fn tail_mean_bound(params: &ModelParams, truncation_stage: u32) -> f64 {
    let v = std::f64::consts::PI * params.base_radius * params.base_radius / 2.0;
    let per_stage = params.q() + params.p * params.penetration;
    let factor = 2.0 * per_stage;
    if factor >= 1.0 {
        return f64::INFINITY;
    }
    // stage n contributes lambda 2^n V (q + pK)^(n-1); geometric tail
    let n = truncation_stage as i32;
    let first = params.lambda * 2f64.powi(n + 1) * v * per_stage.powi(n);
    first / (1.0 - factor)
}
