//! Resolution levels and block layout.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::meyer::{max_support_freq, AtomKind};

/// Level range and block size before any clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormulaLevels {
    pub j1: i64,
    pub j2: i64,
    pub block_size: i64,
}

/// Records which practical adjustments were applied to the formula values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampFlags {
    /// `ρ_n < e`: the formulas are undefined and a grid-driven plan was used.
    pub rho_below_e: bool,
    pub j1_clamped: bool,
    pub j2_raised_to_j1: bool,
    pub j2_nyquist: bool,
    pub block_size_clamped: bool,
    /// Levels or block size came from explicit overrides.
    pub overridden: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.rho_below_e
            || self.j1_clamped
            || self.j2_raised_to_j1
            || self.j2_nyquist
            || self.block_size_clamped
            || self.overridden
    }

    /// Short `a|b|c` summary for metadata columns.
    pub fn describe(&self) -> String {
        let names = [
            (self.rho_below_e, "rho_below_e"),
            (self.j1_clamped, "j1"),
            (self.j2_raised_to_j1, "j2_raised"),
            (self.j2_nyquist, "j2_nyquist"),
            (self.block_size_clamped, "block_size"),
            (self.overridden, "override"),
        ];
        let parts: Vec<&str> = names
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("|")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPlan {
    pub j1: u32,
    pub j2: u32,
    pub block_size: usize,
    /// The `ρ` the formulas were evaluated at.
    pub rho_n: f64,
    /// Formula values, present when `ρ_n >= e`.
    pub formula: Option<FormulaLevels>,
    pub clamps: ClampFlags,
    /// Finest level whose atoms the grid can resolve.
    pub max_level: u32,
}

/// Finest level `j` with `2·max|C_j| + 1 <= T`.
pub fn max_level_for_grid(grid: usize) -> u32 {
    let mut j = 0;
    while 2 * max_support_freq(AtomKind::Mother, j + 1) < grid as i64 {
        j += 1;
    }
    j
}

/// `j1 = ⌊log₂ log ρ⌋`, `j2 = ⌊log₂(ρ/log ρ)/(2δ+2d+1)⌋`, `L = ⌊log ρ⌋`, then clamped
/// so that `0 <= j1 <= j2 <= j_max(T)` and `1 <= L <= 2^{j1}`.
///
/// Below `ρ_n = e` the formulas do not apply; the plan is then `j1 = 0`, `L = 1`
/// and `j2 = j_max(T)`. An infinite `ρ_n` (no noise) puts every level the grid
/// resolves into the approximation space.
pub fn level_plan(rho_n: f64, delta: f64, d: u32, grid: usize) -> LevelPlan {
    let max_level = max_level_for_grid(grid);
    let mut clamps = ClampFlags::default();
    if rho_n == f64::INFINITY {
        clamps.j1_clamped = true;
        return LevelPlan {
            j1: max_level,
            j2: max_level,
            block_size: 1 << max_level,
            rho_n,
            formula: None,
            clamps,
            max_level,
        };
    }
    if !(rho_n >= std::f64::consts::E) {
        clamps.rho_below_e = true;
        return LevelPlan {
            j1: 0,
            j2: max_level,
            block_size: 1,
            rho_n,
            formula: None,
            clamps,
            max_level,
        };
    }
    let log_rho = rho_n.ln();
    let formula = FormulaLevels {
        j1: log_rho.log2().floor() as i64,
        j2: ((rho_n / log_rho).log2() / (2.0 * delta + 2.0 * d as f64 + 1.0)).floor() as i64,
        block_size: log_rho.floor() as i64,
    };
    let mut j1 = formula.j1;
    if j1 < 0 {
        j1 = 0;
        clamps.j1_clamped = true;
    }
    if j1 > max_level as i64 {
        j1 = max_level as i64;
        clamps.j1_clamped = true;
    }
    let mut j2 = formula.j2;
    if j2 < j1 {
        j2 = j1;
        clamps.j2_raised_to_j1 = true;
    }
    if j2 > max_level as i64 {
        j2 = max_level as i64;
        clamps.j2_nyquist = true;
    }
    let mut block_size = formula.block_size;
    let cap = 1i64 << j1;
    if block_size < 1 || block_size > cap {
        block_size = block_size.clamp(1, cap);
        clamps.block_size_clamped = true;
    }
    LevelPlan {
        j1: j1 as u32,
        j2: j2 as u32,
        block_size: block_size as usize,
        rho_n,
        formula: Some(formula),
        clamps,
        max_level,
    }
}

impl LevelPlan {
    /// Replaces any of `(j1, j2, L)`; the result must still be a valid plan for the grid.
    pub fn with_overrides(
        mut self,
        j1: Option<u32>,
        j2: Option<u32>,
        block_size: Option<usize>,
    ) -> Result<Self> {
        if j1.is_none() && j2.is_none() && block_size.is_none() {
            return Ok(self);
        }
        self.j1 = j1.unwrap_or(self.j1);
        self.j2 = j2.unwrap_or(self.j2.max(self.j1));
        self.block_size = block_size.unwrap_or(self.block_size.min(1 << self.j1));
        self.clamps.overridden = true;
        if self.j1 > self.j2 {
            return Err(Error::arg(format!(
                "j1 = {} exceeds j2 = {}",
                self.j1, self.j2
            )));
        }
        if self.j2 > self.max_level {
            return Err(Error::arg(format!(
                "j2 = {} exceeds the finest level {} the grid resolves",
                self.j2, self.max_level
            )));
        }
        if self.block_size < 1 || self.block_size > 1 << self.j1 {
            return Err(Error::arg(format!(
                "block size {} outside [1, 2^j1 = {}]",
                self.block_size,
                1usize << self.j1
            )));
        }
        Ok(self)
    }

    /// Number of detail coefficients over `j1..=j2`.
    pub fn detail_count(&self) -> usize {
        (self.j1..=self.j2).map(|j| 1usize << j).sum()
    }
}

/// Disjoint blocks covering `0..2^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub level: u32,
    pub blocks: Vec<Range<usize>>,
}

impl BlockLayout {
    /// Index of the block containing `k`.
    pub fn block_of(&self, k: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&k))
            .expect("blocks cover the level")
    }
}

/// Consecutive blocks of `L` indices; a remainder shorter than `L` joins the last block.
pub fn block_layout(j: u32, block_size: usize) -> Result<BlockLayout> {
    let len = 1usize << j;
    if block_size == 0 || block_size > len {
        return Err(Error::arg(format!(
            "block size {block_size} outside [1, 2^{j} = {len}]"
        )));
    }
    let count = len / block_size;
    let blocks = (0..count)
        .map(|b| {
            let end = if b + 1 == count {
                len
            } else {
                (b + 1) * block_size
            };
            b * block_size..end
        })
        .collect();
    Ok(BlockLayout { level: j, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_rho_uses_finest_level() {
        let p = level_plan(f64::INFINITY, 2.0, 0, 256);
        assert_eq!((p.j1, p.j2, p.block_size), (6, 6, 64));
    }

    #[test]
    fn formula_values_at_e20() {
        let p = level_plan(20f64.exp(), 2.0, 0, 4096);
        let f = p.formula.unwrap();
        assert_eq!((f.j1, f.j2, f.block_size), (4, 4, 20));
        assert_eq!((p.j1, p.j2), (4, 4));
        // L = 20 exceeds the 16 coefficients of level 4
        assert_eq!(p.block_size, 16);
        assert!(p.clamps.block_size_clamped);
        assert!(!p.clamps.rho_below_e);
    }

    #[test]
    fn boundary_rho_equal_e() {
        let p = level_plan(std::f64::consts::E, 2.0, 0, 4096);
        assert_eq!(p.j1, 0);
        assert_eq!(p.block_size, 1);
        assert_eq!(p.j2, 0);
    }

    #[test]
    fn monochannel_regime_uses_grid() {
        let p = level_plan(0.5, 2.0, 0, 4096);
        assert_eq!((p.j1, p.block_size), (0, 1));
        assert_eq!(p.j2, 10);
        assert!(p.clamps.rho_below_e);
        assert!(p.formula.is_none());
        assert!(p.clamps.any());
    }

    #[test]
    fn grid_caps_levels() {
        assert_eq!(max_level_for_grid(4096), 10);
        assert_eq!(max_level_for_grid(256), 6);
        assert_eq!(max_level_for_grid(16), 2);
        let p = level_plan(1e40, 1.1, 0, 256);
        assert!(p.j2 <= 6);
        assert!(p.clamps.j2_nyquist);
    }

    #[test]
    fn plan_invariants_over_range() {
        for i in 0..200 {
            let rho = 0.1 * 1.15f64.powi(i);
            for d in 0..3 {
                let p = level_plan(rho, 2.0, d, 1024);
                assert!(p.j1 <= p.j2);
                assert!(p.j2 <= p.max_level);
                assert!(p.block_size >= 1 && p.block_size <= 1 << p.j1);
            }
        }
    }

    #[test]
    fn overrides_are_validated() {
        let p = level_plan(0.5, 2.0, 0, 4096);
        let o = p.with_overrides(Some(3), Some(8), Some(4)).unwrap();
        assert_eq!((o.j1, o.j2, o.block_size), (3, 8, 4));
        assert!(o.clamps.overridden);
        assert!(p.with_overrides(Some(5), Some(4), None).is_err());
        assert!(p.with_overrides(None, Some(11), None).is_err());
        assert!(p.with_overrides(Some(2), None, Some(5)).is_err());
        assert_eq!(p.with_overrides(None, None, None).unwrap(), p);
    }

    #[test]
    fn layouts_from_examples() {
        let l = block_layout(3, 2).unwrap();
        assert_eq!(l.blocks, vec![0..2, 2..4, 4..6, 6..8]);
        let l = block_layout(3, 3).unwrap();
        assert_eq!(l.blocks, vec![0..3, 3..8]);
        let l = block_layout(2, 4).unwrap();
        assert_eq!(l.blocks, vec![0..4]);
        assert!(block_layout(2, 5).is_err());
        assert!(block_layout(2, 0).is_err());
    }

    #[test]
    fn layouts_cover_disjointly() {
        for j in 0..9 {
            for size in 1..=(1usize << j) {
                let l = block_layout(j, size).unwrap();
                let mut next = 0;
                for b in &l.blocks {
                    assert_eq!(b.start, next);
                    assert!(b.len() >= size && b.len() < 2 * size);
                    next = b.end;
                }
                assert_eq!(next, 1 << j);
                assert_eq!(l.blocks.len(), (1 << j) / size);
            }
        }
    }
}
