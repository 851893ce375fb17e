//! Multi-beam joint interference transforms, best-beam selection coverage
//! and conditional beam-switch coverage.
//!
//! The user terminal carries `2^k` ideal sector beams aligned with the
//! stage-`k` obstacle arcs. The joint Laplace transform of the per-beam
//! interference vector is assembled level by level from the stage-`k`
//! cone transform. Best-beam coverage expands into an alternating sum over
//! beam subsets; because every argument vector that appears there has a
//! single shared scale `c K^m` on a support set, the subset expansion is
//! memoized on `(level, support mask, m)`.

use std::collections::HashMap;

use crate::analytic::{box_lt, AnalyticSolver};
use crate::error::{CascadeError, Result};
use crate::params::{ModelParams, Stages, Variant};

/// Sector-beam layout: `2^k` beams of width `2 pi / 2^k`, main-lobe gain
/// `2^k` by default.
#[derive(Debug, Clone, Copy)]
pub struct BeamConfig {
    pub k: u32,
    pub gain: f64,
}

impl BeamConfig {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            gain: 2f64.powi(k as i32),
        }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn beam_count(&self) -> u32 {
        1 << self.k
    }
}

/// Number of cascade stages whose blockage arc is shared by two beams
/// (1-based indices). Equal beams share all `k` stages; beams in opposite
/// half-planes share none.
pub fn shared_depth(l1: u32, l2: u32, k: u32) -> u32 {
    assert!(l1 >= 1 && l1 <= 1 << k && l2 >= 1 && l2 <= 1 << k);
    let x = (l1 - 1) ^ (l2 - 1);
    if x == 0 {
        return k;
    }
    let highest = 31 - x.leading_zeros();
    k - highest - 1
}

/// Joint evaluator for the per-beam interference transforms of the basic
/// cascade.
#[derive(Debug, Clone)]
pub struct BeamSolver {
    params: ModelParams,
    config: BeamConfig,
    solver: AnalyticSolver,
    max_k: u32,
}

impl BeamSolver {
    pub fn new(params: ModelParams, config: BeamConfig) -> Result<Self> {
        if params.variant != Variant::Basic {
            return Err(CascadeError::Unsupported(
                "beam analysis is defined on the basic cascade variant".into(),
            ));
        }
        if let Stages::Finite(n) = params.stages {
            if config.k > n {
                return Err(CascadeError::InvalidParams(format!(
                    "beam order k = {} exceeds the stage count {n}",
                    config.k
                )));
            }
        }
        if config.k > 5 {
            return Err(CascadeError::InvalidParams(format!(
                "beam order k = {} not supported (max 5)",
                config.k
            )));
        }
        let solver = AnalyticSolver::new(params.clone());
        Ok(Self {
            params,
            config,
            solver,
            max_k: 4,
        })
    }

    /// Raises the subset-enumeration ceiling for best-beam coverage. The
    /// term count is `2^(2^k)`, so anything beyond 5 is out of reach.
    pub fn with_max_k(mut self, max_k: u32) -> Self {
        self.max_k = max_k.min(5);
        self
    }

    pub fn config(&self) -> &BeamConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn volume(&self) -> f64 {
        std::f64::consts::PI * self.params.base_radius * self.params.base_radius / 2.0
    }

    /// Single-beam transform at the deepest level: the interference of one
    /// stage-`k` cone.
    pub fn h_base(&self, s: f64) -> Result<f64> {
        if self.config.k == 0 {
            return self.solver.total_lt(s);
        }
        self.solver.stage_lt(s, self.config.k)
    }

    /// Joint transform of the `2^(k - level)` beams inside one stage-`level`
    /// cone, evaluated at an explicit argument vector.
    pub fn h_level(&self, level: u32, args: &[f64]) -> Result<f64> {
        if level < 1 || level > self.config.k {
            return Err(CascadeError::InvalidParams(format!(
                "level {level} outside 1..={}",
                self.config.k
            )));
        }
        let expected = 1usize << (self.config.k - level);
        if args.len() != expected {
            return Err(CascadeError::WrongArity {
                expected,
                got: args.len(),
            });
        }
        self.h_rec(level, args)
    }

    fn h_rec(&self, level: u32, args: &[f64]) -> Result<f64> {
        if args.iter().all(|&t| t == 0.0) {
            return Ok(1.0);
        }
        if level == self.config.k {
            return self.h_base(args[0]);
        }
        let p = self.params.p;
        let q = self.params.q();
        let pen = self.params.penetration;
        let half = args.len() / 2;
        let (lo, hi) = args.split_at(half);
        let scaled_lo: Vec<f64> = lo.iter().map(|&t| pen * t).collect();
        let scaled_hi: Vec<f64> = hi.iter().map(|&t| pen * t).collect();
        let blocked = self.h_rec(level + 1, &scaled_lo)? * self.h_rec(level + 1, &scaled_hi)?;
        let clear = self.h_rec(level + 1, lo)? * self.h_rec(level + 1, hi)?;
        let vol = self.volume() / 2f64.powi((self.config.k - level) as i32);
        let mut boxes = 1.0;
        for &t in args {
            boxes *= box_lt(t, vol, self.params.lambda);
        }
        Ok((p * blocked + q * clear) * boxes)
    }

    /// Joint Laplace transform of the full per-beam interference vector.
    pub fn joint_lt(&self, args: &[f64]) -> Result<f64> {
        let expected = self.config.beam_count() as usize;
        if args.len() != expected {
            return Err(CascadeError::WrongArity {
                expected,
                got: args.len(),
            });
        }
        if self.config.k == 0 {
            return if args[0] == 0.0 {
                Ok(1.0)
            } else {
                self.solver.total_lt(args[0])
            };
        }
        let half = expected / 2;
        let (north, south) = args.split_at(half);
        Ok(self.h_rec(1, north)? * self.h_rec(1, south)?)
    }

    /// Coverage probability when the terminal picks the beam with the
    /// maximal SIR, by inclusion-exclusion over beam subsets.
    pub fn best_beam_coverage(&self, theta: f64) -> Result<f64> {
        Ok(self.best_beam_alternating_sum(theta)?.clamp(0.0, 1.0))
    }

    /// The raw alternating subset sum behind best-beam coverage, without
    /// clamping (exposed so the cancellation behavior itself is testable).
    pub fn best_beam_alternating_sum(&self, theta: f64) -> Result<f64> {
        let k = self.config.k;
        if k == 0 {
            return self.solver.total_lt(theta / self.config.gain);
        }
        if k > self.max_k {
            return Err(CascadeError::BeamOrderTooLarge {
                k,
                max_k: self.max_k,
            });
        }
        let beams = self.config.beam_count();
        let mut eval = MaskedJointLt::new(self, theta / self.config.gain);
        // Per-size compensated partial sums, combined smallest subsets
        // first; the alternating sum cancels badly at large thresholds.
        let mut by_size = vec![KahanSum::default(); beams as usize];
        let full: u64 = if beams == 64 {
            u64::MAX
        } else {
            (1u64 << beams) - 1
        };
        for mask in 1..=full {
            let size = mask.count_ones() as usize;
            by_size[size - 1].add(eval.joint(mask)?);
        }
        let mut total = KahanSum::default();
        for (i, partial) in by_size.iter().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            total.add(sign * partial.value());
        }
        Ok(total.value())
    }

    /// Baseline: coverage of an arbitrarily fixed beam.
    pub fn random_beam_coverage(&self, theta: f64) -> Result<f64> {
        if self.config.k == 0 {
            return self.solver.total_lt(theta / self.config.gain);
        }
        MaskedJointLt::new(self, theta / self.config.gain).joint(1)
    }

    /// Probability that beam `target` (1-based) is covered given the first
    /// beam is covered, both at threshold `theta`.
    pub fn conditional_switch_coverage(&self, theta: f64, target: u32) -> Result<f64> {
        let (joint, source, _) = self.switch_transforms(theta, target)?;
        let denominator = source;
        if denominator < 1e-300 {
            return Err(CascadeError::NegligibleConditioning);
        }
        Ok(joint / denominator)
    }

    /// Probability that beam `target` is covered given the first beam is in
    /// outage.
    pub fn conditional_given_outage(&self, theta: f64, target: u32) -> Result<f64> {
        let (joint, source, target_marginal) = self.switch_transforms(theta, target)?;
        let denominator = 1.0 - source;
        if denominator < 1e-300 {
            return Err(CascadeError::NegligibleConditioning);
        }
        Ok((target_marginal - joint) / denominator)
    }

    fn switch_transforms(&self, theta: f64, target: u32) -> Result<(f64, f64, f64)> {
        let beams = self.config.beam_count();
        if target < 1 || target > beams {
            return Err(CascadeError::InvalidParams(format!(
                "target beam {target} outside 1..={beams}"
            )));
        }
        let c = theta / self.config.gain;
        if self.config.k == 0 {
            let v = self.solver.total_lt(c)?;
            return Ok((v, v, v));
        }
        let mut eval = MaskedJointLt::new(self, c);
        let source_bit = 1u64;
        let target_bit = 1u64 << (target - 1);
        let joint = eval.joint(source_bit | target_bit)?;
        let source = eval.joint(source_bit)?;
        let target_marginal = eval.joint(target_bit)?;
        Ok((joint, source, target_marginal))
    }
}

/// Memoized joint-transform evaluator for argument vectors of the form
/// `c K^m` on a support set.
struct MaskedJointLt<'a> {
    bs: &'a BeamSolver,
    c: f64,
    memo: HashMap<(u32, u64, u32), f64>,
}

impl<'a> MaskedJointLt<'a> {
    fn new(bs: &'a BeamSolver, c: f64) -> Self {
        Self {
            bs,
            c,
            memo: HashMap::new(),
        }
    }

    /// Joint transform with value `c` on the beams of `beam_mask`.
    fn joint(&mut self, beam_mask: u64) -> Result<f64> {
        let k = self.bs.config.k;
        debug_assert!(k >= 1);
        let half = 1u32 << (k - 1); // beams per half-plane
        let lo = beam_mask & ((1u64 << half) - 1);
        let hi = beam_mask >> half;
        Ok(self.eval(1, lo, 0)? * self.eval(1, hi, 0)?)
    }

    fn eval(&mut self, level: u32, mask: u64, m: u32) -> Result<f64> {
        if mask == 0 {
            return Ok(1.0);
        }
        let arg = self.c * self.bs.params.penetration.powi(m as i32);
        if arg == 0.0 {
            return Ok(1.0);
        }
        if let Some(&v) = self.memo.get(&(level, mask, m)) {
            return Ok(v);
        }
        let k = self.bs.config.k;
        let v = if level == k {
            self.bs.h_base(arg)?
        } else {
            let width = 1u32 << (k - level);
            let half = width / 2;
            let lo = mask & ((1u64 << half) - 1);
            let hi = mask >> half;
            let blocked = self.eval(level + 1, lo, m + 1)? * self.eval(level + 1, hi, m + 1)?;
            let clear = self.eval(level + 1, lo, m)? * self.eval(level + 1, hi, m)?;
            let vol = self.bs.volume() / 2f64.powi((k - level) as i32);
            let boxes = box_lt(arg, vol, self.bs.params.lambda).powi(mask.count_ones() as i32);
            (self.bs.params.p * blocked + self.bs.params.q() * clear) * boxes
        };
        self.memo.insert((level, mask, m), v);
        Ok(v)
    }
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::db_to_lin;
    use crate::params::Stages;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(lambda: f64, p: f64, k: f64, n: u32) -> ModelParams {
        ModelParams::new(lambda, 1.0, p, k, Stages::Finite(n), Variant::Basic).unwrap()
    }

    fn reference_beam_solver(k: u32) -> BeamSolver {
        BeamSolver::new(params(1.0, 0.5, 0.1, 5), BeamConfig::new(k)).unwrap()
    }

    #[test]
    fn shared_depth_examples() {
        assert_eq!(shared_depth(1, 2, 4), 3);
        assert_eq!(shared_depth(1, 9, 4), 0);
        assert_eq!(shared_depth(1, 5, 4), 1);
        assert_eq!(shared_depth(7, 7, 4), 4);
        assert_eq!(shared_depth(3, 4, 4), 3);
    }

    #[test]
    fn h_base_at_the_deepest_stage_is_one_box() {
        let bs = BeamSolver::new(params(0.1, 0.5, 0.1, 5), BeamConfig::new(5)).unwrap();
        for &s in &[0.3, 1.0, 4.0] {
            assert_relative_eq!(
                bs.h_base(s).unwrap(),
                box_lt(s, PI / 2.0, 0.1),
                max_relative = 1e-14
            );
        }
        assert_eq!(bs.h_base(0.0).unwrap(), 1.0);
    }

    #[test]
    fn single_beam_at_k1_is_the_half_plane() {
        let bs = BeamSolver::new(params(1.0, 0.5, 0.1, 5), BeamConfig::new(1)).unwrap();
        let solver = AnalyticSolver::new(params(1.0, 0.5, 0.1, 5));
        for &s in &[0.5, 1.0, 10.0] {
            assert_relative_eq!(
                bs.h_base(s).unwrap(),
                solver.half_plane_lt(s).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn beams_tile_the_half_plane() {
        // Summing all beams of one half recovers the omnidirectional
        // half-plane transform.
        for k in 1..=3u32 {
            let bs = reference_beam_solver(k);
            let solver = AnalyticSolver::new(params(1.0, 0.5, 0.1, 5));
            for &s in &[0.5, 2.0] {
                let args = vec![s; 1 << (k - 1)];
                assert_relative_eq!(
                    bs.h_level(1, &args).unwrap(),
                    solver.half_plane_lt(s).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn joint_lt_trivial_cases() {
        let bs = reference_beam_solver(2);
        assert_eq!(bs.joint_lt(&[0.0; 4]).unwrap(), 1.0);
        // opposite halves factorize
        let s = 1.3;
        let joint = bs.joint_lt(&[s, 0.0, s, 0.0]).unwrap();
        let m1 = bs.joint_lt(&[s, 0.0, 0.0, 0.0]).unwrap();
        let m3 = bs.joint_lt(&[0.0, 0.0, s, 0.0]).unwrap();
        assert_relative_eq!(joint, m1 * m3, max_relative = 1e-12);
    }

    #[test]
    fn marginals_are_beam_symmetric() {
        let bs = reference_beam_solver(3);
        let s = 0.8;
        let mut reference = None;
        for pos in 0..8usize {
            let mut args = [0.0; 8];
            args[pos] = s;
            let v = bs.joint_lt(&args).unwrap();
            match reference {
                None => reference = Some(v),
                Some(r) => assert!((v - r).abs() <= 1e-12 * r),
            }
        }
    }

    #[test]
    fn joint_lt_invariant_under_subtree_swap() {
        let bs = reference_beam_solver(2);
        let args = [0.7, 0.2, 0.9, 0.05];
        let base = bs.joint_lt(&args).unwrap();
        // swap the two children of the northern half
        let swapped = bs.joint_lt(&[0.2, 0.7, 0.9, 0.05]).unwrap();
        assert_relative_eq!(base, swapped, max_relative = 1e-12);
        // swap the two halves of the plane
        let halves = bs.joint_lt(&[0.9, 0.05, 0.7, 0.2]).unwrap();
        assert_relative_eq!(base, halves, max_relative = 1e-12);
    }

    #[test]
    fn masked_and_general_paths_agree() {
        let bs = reference_beam_solver(3);
        let c = 0.9;
        let mut eval = MaskedJointLt::new(&bs, c);
        for mask in 1u64..256 {
            let mut args = [0.0; 8];
            for (bit, slot) in args.iter_mut().enumerate() {
                if mask & (1 << bit) != 0 {
                    *slot = c;
                }
            }
            let general = bs.joint_lt(&args).unwrap();
            let masked = eval.joint(mask).unwrap();
            assert_relative_eq!(general, masked, max_relative = 1e-12);
        }
    }

    #[test]
    fn arity_is_checked() {
        let bs = reference_beam_solver(2);
        assert!(matches!(
            bs.joint_lt(&[1.0, 2.0]),
            Err(CascadeError::WrongArity {
                expected: 4,
                got: 2
            })
        ));
        assert!(bs.h_level(1, &[1.0]).is_err());
    }

    #[test]
    fn hand_expansion_at_two_beams() {
        // k = 2, level 1, args (s, 0): expand the two-branch step by hand.
        let bs = reference_beam_solver(2);
        let s = 1.1;
        let p = 0.5;
        let q = 0.5;
        let pen = 0.1;
        let v = PI / 2.0;
        let expected =
            (p * bs.h_base(pen * s).unwrap() + q * bs.h_base(s).unwrap()) * box_lt(s, v / 2.0, 1.0);
        assert_relative_eq!(
            bs.h_level(1, &[s, 0.0]).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn best_beam_closed_form_under_full_blockage() {
        // p = 1, K = 0: each beam sees only its own sector of the inner
        // disk, independently across beams.
        for k in 1..=3u32 {
            let bs = BeamSolver::new(params(0.1, 1.0, 0.0, 5), BeamConfig::new(k)).unwrap();
            let theta = 1.0;
            let s = theta / bs.config().gain;
            let beams = 1u32 << k;
            // each beam keeps its own sector of the inner disk: area pi/2^k
            let per_beam = (-0.1 * (PI / 2f64.powi(k as i32)) * s / (1.0 + s)).exp();
            let expected = 1.0 - (1.0 - per_beam).powi(beams as i32);
            assert_relative_eq!(
                bs.best_beam_coverage(theta).unwrap(),
                expected,
                max_relative = 1e-9
            );
        }
        // spot value from the k = 1 closed form
        let bs = BeamSolver::new(params(0.1, 1.0, 0.0, 5), BeamConfig::new(1)).unwrap();
        assert_relative_eq!(
            bs.best_beam_coverage(1.0).unwrap(),
            0.997398,
            max_relative = 1e-4
        );
    }

    #[test]
    fn k_zero_reduces_to_omnidirectional() {
        let bs = BeamSolver::new(params(1.0, 0.5, 0.1, 5), BeamConfig::new(0)).unwrap();
        let solver = AnalyticSolver::new(params(1.0, 0.5, 0.1, 5));
        for &theta in &[0.5, 1.0, 10.0] {
            let omni = solver.coverage(theta, 1.0).unwrap();
            assert!((bs.best_beam_coverage(theta).unwrap() - omni).abs() <= 1e-12);
            assert!((bs.random_beam_coverage(theta).unwrap() - omni).abs() <= 1e-12);
        }
    }

    #[test]
    fn best_dominates_random() {
        for k in 1..=3u32 {
            let bs = reference_beam_solver(k);
            for db in [-10.0, 0.0, 10.0, 20.0] {
                let theta = db_to_lin(db);
                let best = bs.best_beam_coverage(theta).unwrap();
                let random = bs.random_beam_coverage(theta).unwrap();
                assert!(best >= random - 1e-12, "k={k} theta={theta}");
            }
        }
    }

    #[test]
    fn alternating_sum_stays_in_unit_interval() {
        for k in 1..=4u32 {
            let bs = reference_beam_solver(k);
            for db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
                let raw = bs.best_beam_alternating_sum(db_to_lin(db)).unwrap();
                assert!(
                    (-1e-9..=1.0 + 1e-9).contains(&raw),
                    "k={k} db={db} raw={raw}"
                );
            }
        }
    }

    #[test]
    fn subset_ceiling_is_enforced() {
        let bs = BeamSolver::new(params(1.0, 0.5, 0.1, 5), BeamConfig::new(5)).unwrap();
        assert!(matches!(
            bs.best_beam_coverage(1.0),
            Err(CascadeError::BeamOrderTooLarge { k: 5, max_k: 4 })
        ));
        let raised = BeamSolver::new(params(1.0, 0.5, 0.1, 5), BeamConfig::new(3))
            .unwrap()
            .with_max_k(3);
        assert!(raised.best_beam_coverage(1.0).is_ok());
    }

    #[test]
    fn conditional_on_itself_is_one() {
        let bs = reference_beam_solver(2);
        assert_relative_eq!(
            bs.conditional_switch_coverage(1.0, 1).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn opposite_half_targets_decouple() {
        let bs = reference_beam_solver(3);
        let theta = db_to_lin(0.0);
        let unconditional = bs.random_beam_coverage(theta).unwrap();
        for target in 5..=8u32 {
            let cond = bs.conditional_switch_coverage(theta, target).unwrap();
            assert!((cond - unconditional).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditional_depends_only_on_shared_depth() {
        let bs = reference_beam_solver(4).with_max_k(4);
        let theta = db_to_lin(0.0);
        let mut by_depth: HashMap<u32, f64> = HashMap::new();
        for target in 2..=16u32 {
            let depth = shared_depth(1, target, 4);
            let cond = bs.conditional_switch_coverage(theta, target).unwrap();
            match by_depth.get(&depth) {
                None => {
                    by_depth.insert(depth, cond);
                }
                Some(&v) => assert!((cond - v).abs() <= 1e-12, "target {target}"),
            }
        }
        // deeper sharing means higher conditional coverage
        let mut depths: Vec<u32> = by_depth.keys().copied().collect();
        depths.sort_unstable();
        for w in depths.windows(2) {
            assert!(by_depth[&w[0]] <= by_depth[&w[1]] + 1e-12);
        }
    }
}
