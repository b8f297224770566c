//! Shrinkage rules applied to one resolution level of detail coefficients.
//!
//! Block rules use the mean block energy `E = |B|^{-1} Σ_{k∈B} |β̂_k|²` with the
//! actual block cardinality. All rules multiply each coefficient by a factor in
//! `[0, 1]`, so phases are preserved and magnitudes never grow.

use num_complex::Complex64;

use super::plan::BlockLayout;

fn mean_energy(block: &[Complex64]) -> f64 {
    block.iter().map(|b| b.norm_sqr()).sum::<f64>() / block.len() as f64
}

/// James-Stein factor `(1 - base/E)_+`; a block with `E <= base` (including the
/// zero block) gets factor 0.
pub fn blockjs_factor(energy: f64, threshold_base: f64) -> f64 {
    if energy <= threshold_base {
        0.0
    } else {
        1.0 - threshold_base / energy
    }
}

fn apply_blockwise(
    beta: &[Complex64],
    layout: &BlockLayout,
    factor: impl Fn(f64) -> f64,
) -> Vec<Complex64> {
    assert_eq!(beta.len(), 1 << layout.level, "level length mismatch");
    let mut out = beta.to_vec();
    for block in &layout.blocks {
        let f = factor(mean_energy(&beta[block.clone()]));
        for b in &mut out[block.clone()] {
            *b *= f;
        }
    }
    out
}

/// Block James-Stein shrinkage of one level.
pub fn blockjs_shrink(
    beta: &[Complex64],
    layout: &BlockLayout,
    threshold_base: f64,
) -> Vec<Complex64> {
    apply_blockwise(beta, layout, |e| blockjs_factor(e, threshold_base))
}

/// Keep-or-kill on the same block statistic: a block survives iff `E > base`.
pub fn blockhard_shrink(
    beta: &[Complex64],
    layout: &BlockLayout,
    threshold_base: f64,
) -> Vec<Complex64> {
    apply_blockwise(beta, layout, |e| if e > threshold_base { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermRule {
    Hard,
    /// Non-negative garrote `β(1 - t²/|β|²)_+`.
    Garrote,
}

/// Coefficient-by-coefficient thresholding at level threshold `t`.
pub fn term_shrink(beta: &[Complex64], threshold: f64, rule: TermRule) -> Vec<Complex64> {
    beta.iter()
        .map(|&b| {
            let m = b.norm();
            if m <= threshold {
                return Complex64::default();
            }
            match rule {
                TermRule::Hard => b,
                TermRule::Garrote => b * (1.0 - threshold * threshold / (m * m)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::plan::block_layout;

    fn re(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn blockjs_reference_block() {
        let layout = block_layout(2, 4).unwrap();
        let out = blockjs_shrink(&re(&[2.0, 0.0, 0.0, 0.0]), &layout, 0.5);
        assert_eq!(out, re(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn zero_base_is_identity() {
        let layout = block_layout(3, 3).unwrap();
        let beta = vec![
            Complex64::new(0.3, -1.0),
            Complex64::new(2.0, 0.5),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        ];
        assert_eq!(blockjs_shrink(&beta, &layout, 0.0), beta);
        assert_eq!(blockhard_shrink(&beta, &layout, 0.0), beta);
    }

    #[test]
    fn zero_block_stays_zero() {
        let layout = block_layout(2, 2).unwrap();
        let zeros = vec![Complex64::default(); 4];
        assert_eq!(blockjs_shrink(&zeros, &layout, 0.0), zeros);
        assert_eq!(blockjs_shrink(&zeros, &layout, 1.0), zeros);
        assert_eq!(blockjs_factor(0.0, 0.0), 0.0);
    }

    #[test]
    fn blockhard_reference_block() {
        let layout = block_layout(2, 4).unwrap();
        let beta = re(&[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(blockhard_shrink(&beta, &layout, 0.5), beta);
        assert_eq!(blockhard_shrink(&beta, &layout, 2.0), re(&[0.0; 4]));
    }

    #[test]
    fn remainder_block_uses_its_own_cardinality() {
        // blocks {0,1,2} and {3..8}; second block energy = 5*1/5 = 1
        let layout = block_layout(3, 3).unwrap();
        let beta = re(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let out = blockjs_shrink(&beta, &layout, 0.5);
        assert_eq!(out[3..], re(&[0.5; 5])[..]);
    }

    #[test]
    fn garrote_and_hard_reference_values() {
        let t = 1.5;
        let b = Complex64::from_polar(2.0 * t, 0.7);
        let g = term_shrink(&[b], t, TermRule::Garrote)[0];
        assert!((g - b * 0.75).norm() < 1e-15);
        let small = Complex64::from_polar(t, 1.1);
        assert_eq!(
            term_shrink(&[small], t, TermRule::Garrote)[0],
            Complex64::default()
        );
        assert_eq!(
            term_shrink(&[small], t, TermRule::Hard)[0],
            Complex64::default()
        );
        assert_eq!(term_shrink(&[b], t, TermRule::Hard)[0], b);
    }

    #[test]
    fn zero_term_threshold_is_identity() {
        let beta = vec![
            Complex64::new(0.1, 0.2),
            Complex64::default(),
            Complex64::new(-3.0, 0.0),
        ];
        assert_eq!(term_shrink(&beta, 0.0, TermRule::Hard), beta);
        assert_eq!(term_shrink(&beta, 0.0, TermRule::Garrote), beta);
        assert!(term_shrink(&beta, f64::INFINITY, TermRule::Hard)
            .iter()
            .all(|b| b.norm() == 0.0));
    }

    #[test]
    fn blockjs_factor_is_monotone_in_energy() {
        let base = 0.8;
        let mut prev = 0.0;
        for i in 0..1000 {
            let f = blockjs_factor(i as f64 * 0.01, base);
            assert!(f >= prev && (0.0..1.0).contains(&f));
            prev = f;
        }
    }
}
