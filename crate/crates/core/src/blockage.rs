//! Sampled blockage realizations. A [`BlockageTree`] holds one draw of the
//! blockage states on every arc of the cascade; it is the geometric ground
//! truth against which the analytic transforms are validated.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{CascadeError, Result};
use crate::geometry::{CascadeGeometry, StageMode};
use crate::params::{ModelParams, Variant};

/// One realization of the blockage states on all arcs, stage by stage.
/// Bit `true` means the arc is blocked.
#[derive(Debug, Clone)]
pub struct BlockageTree {
    variant: Variant,
    stage_bits: Vec<Vec<bool>>,
}

impl BlockageTree {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn stage_count(&self) -> u32 {
        self.stage_bits.len() as u32
    }

    /// Blockage state of arc `arc` on circle `stage` (1-based stages).
    pub fn is_blocked(&self, stage: u32, arc: u64) -> bool {
        self.stage_bits[(stage - 1) as usize][arc as usize]
    }

    /// Builds a tree from explicit per-stage bit rows (used by tests and
    /// hand-constructed scenarios). Row `n` must hold the arc count of
    /// stage `n + 1` for the given variant.
    pub fn from_bits(variant: Variant, stage_bits: Vec<Vec<bool>>) -> Result<Self> {
        let geom = CascadeGeometry::new(1.0, None)?;
        for (i, row) in stage_bits.iter().enumerate() {
            let expected = geom.arc_count(variant, i as u32 + 1) as usize;
            if row.len() != expected {
                return Err(CascadeError::InvalidParams(format!(
                    "stage {} holds {} bits, expected {expected}",
                    i + 1,
                    row.len()
                )));
            }
        }
        Ok(Self {
            variant,
            stage_bits,
        })
    }

    /// Number of blocked arcs crossed by the radial segment from the origin
    /// to `(r, phi)`.
    pub fn blockage_count(&self, geom: &CascadeGeometry, r: f64, phi: f64) -> Result<u32> {
        let mut count = 0;
        for stage in 1..=self.stage_count() {
            if geom.radius(stage) >= r {
                break;
            }
            let arc = geom.arc_index(stage, phi, self.variant)?;
            if self.is_blocked(stage, arc) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Power attenuation of the link to `(r, phi)`: `K^N` with `N` the
    /// blockage count. `0^0` is 1, so an unblocked link is unaffected
    /// even at full blockage loss.
    pub fn attenuation(&self, geom: &CascadeGeometry, r: f64, phi: f64, k: f64) -> Result<f64> {
        let n = self.blockage_count(geom, r, phi)?;
        Ok(k.powi(n as i32))
    }

    /// One line per stage, arcs as `0`/`1` characters.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for row in &self.stage_bits {
            for &bit in row {
                out.push(if bit { '1' } else { '0' });
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Samples a blockage tree for any tree-based variant. The independent
/// variant has no shared tree; use [`independent_penetration`] per link.
pub fn sample_tree(params: &ModelParams, rng: &mut impl Rng) -> Result<BlockageTree> {
    let stages = params.finite_stages().ok_or_else(|| {
        CascadeError::Unsupported(
            "sampling requires a finite stage count; pick a truncation stage first".into(),
        )
    })?;
    if stages > 22 {
        return Err(CascadeError::InvalidParams(format!(
            "tree with {stages} stages is too large to store densely"
        )));
    }
    let geom = params.geometry();
    let mut stage_bits = Vec::with_capacity(stages as usize);
    for stage in 1..=stages {
        let count = geom.arc_count(params.variant, stage) as usize;
        let row = match params.variant {
            Variant::Basic | Variant::LessCorrelated => {
                (0..count).map(|_| rng.gen_bool(params.p)).collect()
            }
            Variant::Periodic => {
                let mut row = vec![false; count];
                for pair in 0..count / 2 {
                    let blocked_first: bool = rng.gen();
                    row[2 * pair] = blocked_first;
                    row[2 * pair + 1] = !blocked_first;
                }
                row
            }
            Variant::Independent => {
                return Err(CascadeError::Unsupported(
                    "the independent variant has no blockage tree".into(),
                ))
            }
        };
        stage_bits.push(row);
    }
    Ok(BlockageTree {
        variant: params.variant,
        stage_bits,
    })
}

/// Independent-model per-link attenuation: draws a binomial number of
/// blockages over the `n(r)` obstacles in range and returns `K` to that
/// power.
pub fn independent_penetration(
    params: &ModelParams,
    r: f64,
    mode: StageMode,
    rng: &mut impl Rng,
) -> f64 {
    let geom = params.geometry();
    let n = geom.stage_of_radius(r, mode);
    let mut blocked = 0u32;
    for _ in 0..n {
        if rng.gen_bool(params.p) {
            blocked += 1;
        }
    }
    params.penetration.powi(blocked as i32)
}
