//! Rayleigh channel generation, received signals and distance-threshold sparsification.

use rand_distr::{Distribution, Normal};

use crate::error::{DncError, Result};
use crate::linalg::{CMat, C64};
use crate::netgen::{pairwise_distance, NetworkLayout};
use crate::rng;
use crate::sparse::CscMatrix;

/// Whether a link of (clamped) length `d` survives sparsification. Links at
/// the clamp distance `r0` always survive, matching the point mass that the
/// truncated moment includes at `r0`.
#[inline]
pub fn link_kept(d: f64, d0: f64, r0: f64) -> bool {
    d < d0 || d <= r0
}

#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Dense `N×K` channel.
    pub h: CMat,
    /// Column-major `N×K`: `mask[k * N + n]` is true when the link is kept.
    pub mask: Vec<bool>,
    pub d0: f64,
    pub powers: Vec<f64>,
    pub n0: f64,
    pub alpha: f64,
}

impl ChannelSet {
    /// Assemble from explicit parts (hand-built instances and tests).
    pub fn from_parts(
        h: CMat,
        mask: Vec<bool>,
        d0: f64,
        powers: Vec<f64>,
        n0: f64,
        alpha: f64,
    ) -> Result<Self> {
        let (n, k) = h.shape();
        if mask.len() != n * k {
            return Err(DncError::SizeMismatch {
                expected: n * k,
                got: mask.len(),
            });
        }
        if powers.len() != k {
            return Err(DncError::SizeMismatch {
                expected: k,
                got: powers.len(),
            });
        }
        if powers.iter().any(|&p| !(p > 0.0)) || !(n0 > 0.0) {
            return Err(DncError::InvalidArgument(
                "powers and noise must be positive".into(),
            ));
        }
        Ok(ChannelSet {
            h,
            mask,
            d0,
            powers,
            n0,
            alpha,
        })
    }

    pub fn n_rrh(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_user(&self) -> usize {
        self.h.ncols()
    }

    pub fn kept(&self, n: usize, k: usize) -> bool {
        self.mask[k * self.n_rrh() + n]
    }

    /// Fraction of kept links.
    pub fn mask_density(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len().max(1) as f64
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.n_rrh();
        match self
            .h
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            Some(i) => Err(DncError::NonFinite {
                row: i % n,
                col: i / n,
            }),
            None => Ok(()),
        }
    }

    /// Replace the threshold and recompute the mask from the layout.
    pub fn with_threshold(&self, layout: &NetworkLayout, d0: f64) -> ChannelSet {
        let mut out = self.clone();
        out.d0 = d0;
        out.mask = build_mask(layout, d0);
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReceivedSignal {
    pub y: Vec<C64>,
    pub x_true: Vec<C64>,
    pub noise_seed: u64,
}

fn build_mask(layout: &NetworkLayout, d0: f64) -> Vec<bool> {
    let (n, k) = (layout.n_rrh(), layout.n_user());
    let r0 = layout.geometry.r0;
    let mut mask = vec![false; n * k];
    for u in 0..k {
        for r in 0..n {
            mask[u * n + r] = link_kept(pairwise_distance(layout, r, u), d0, r0);
        }
    }
    mask
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub(crate) fn cn01<R: rand::Rng>(rng: &mut R) -> C64 {
    let g = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    C64::new(g.sample(rng), g.sample(rng))
}

/// `H[n,k] = γ d^{-α/2}` with unit-variance Rayleigh `γ`. Each user column
/// draws from its own sub-stream, so columns can be generated independently.
pub fn generate_channel(
    layout: &NetworkLayout,
    alpha: f64,
    d0: f64,
    powers: &[f64],
    n0: f64,
    seed: u64,
) -> Result<ChannelSet> {
    if !(alpha > 2.0) {
        return Err(DncError::InvalidArgument(format!(
            "path-loss exponent must exceed 2, got {alpha}"
        )));
    }
    if d0 < layout.geometry.r0 {
        return Err(DncError::InvalidArgument(format!(
            "threshold {d0} below r0 {}",
            layout.geometry.r0
        )));
    }
    let (n, k) = (layout.n_rrh(), layout.n_user());
    if powers.len() != k {
        return Err(DncError::SizeMismatch {
            expected: k,
            got: powers.len(),
        });
    }
    let mut h = CMat::zeros(n, k);
    for u in 0..k {
        let mut col_rng = rng::stream(rng::derive(seed, u as u64));
        for r in 0..n {
            let d = pairwise_distance(layout, r, u);
            h[(r, u)] = cn01(&mut col_rng) * d.powf(-alpha / 2.0);
        }
    }
    ChannelSet::from_parts(h, build_mask(layout, d0), d0, powers.to_vec(), n0, alpha)
}

/// Split `H = Ĥ + H̃`: returns sparse `Ĥ` and the mask of discarded entries.
pub fn sparsify(ch: &ChannelSet) -> (CscMatrix, Vec<bool>) {
    let n = ch.n_rrh();
    let mut t = Vec::new();
    for k in 0..ch.n_user() {
        for r in 0..n {
            if ch.mask[k * n + r] {
                t.push((r, k, ch.h[(r, k)]));
            }
        }
    }
    let residual = ch.mask.iter().map(|m| !m).collect();
    (CscMatrix::from_triplets(n, ch.n_user(), t), residual)
}

/// `y = H P^{1/2} x + n` with unit-variance Gaussian symbols and `CN(0, N0 I)` noise.
pub fn transmit(ch: &ChannelSet, seed: u64) -> ReceivedSignal {
    let mut sym_rng = rng::stream(rng::derive(seed, 0x5e1d));
    let noise_seed = rng::derive(seed, 0x0153);
    let mut noise_rng = rng::stream(noise_seed);
    let x_true: Vec<C64> = (0..ch.n_user()).map(|_| cn01(&mut sym_rng)).collect();
    let sn0 = ch.n0.sqrt();
    let mut y: Vec<C64> = (0..ch.n_rrh())
        .map(|_| cn01(&mut noise_rng) * sn0)
        .collect();
    for (k, xk) in x_true.iter().enumerate() {
        let s = xk * ch.powers[k].sqrt();
        for (n, yn) in y.iter_mut().enumerate() {
            *yn += ch.h[(n, k)] * s;
        }
    }
    ReceivedSignal {
        y,
        x_true,
        noise_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{generate_layout, AreaGeometry};

    fn small() -> (NetworkLayout, ChannelSet) {
        let g = AreaGeometry::circle(1000.0, 1.0).unwrap();
        let l = generate_layout(g, 20, 30, 5).unwrap();
        let ch = generate_channel(&l, 3.7, 300.0, &vec![1e8; 30], 1.0, 9).unwrap();
        (l, ch)
    }

    #[test]
    fn full_threshold_keeps_everything() {
        let (l, ch) = small();
        let ch = ch.with_threshold(&l, 2000.0 + 1.0);
        let (hh, residual) = sparsify(&ch);
        assert!(residual.iter().all(|r| !r));
        assert_eq!(hh.to_dense(), ch.h);
    }

    #[test]
    fn split_is_exact() {
        let (_, ch) = small();
        let (hh, residual) = sparsify(&ch);
        let dense = hh.to_dense();
        let n = ch.n_rrh();
        for k in 0..ch.n_user() {
            for r in 0..n {
                let tilde = if residual[k * n + r] {
                    ch.h[(r, k)]
                } else {
                    C64::new(0.0, 0.0)
                };
                assert_eq!(dense[(r, k)] + tilde, ch.h[(r, k)]);
            }
        }
        assert!(hh.frobenius() <= crate::linalg::frobenius(&ch.h));
    }

    #[test]
    fn minimal_threshold_keeps_only_clamped_pairs() {
        let g = AreaGeometry::rectangle(100.0, 100.0, 1.0).unwrap();
        let l = NetworkLayout::from_positions(
            g,
            vec![[10.0, 10.0], [50.0, 50.0]],
            vec![[10.5, 10.0], [80.0, 80.0]],
            0,
        )
        .unwrap();
        let ch = generate_channel(&l, 3.7, 1.0, &[1.0, 1.0], 1.0, 1).unwrap();
        let (hh, _) = sparsify(&ch);
        assert_eq!(hh.nnz(), 1);
        assert_ne!(hh.get(0, 0), C64::new(0.0, 0.0));
    }

    #[test]
    fn noiseless_scalar_transmission() {
        let h = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let ch = ChannelSet::from_parts(h, vec![true], 10.0, vec![1.0], 1e-300, 3.7).unwrap();
        let s = transmit(&ch, 4);
        assert!((s.y[0] - s.x_true[0]).norm() < 1e-140);
    }

    #[test]
    fn transmission_is_reproducible() {
        let (_, ch) = small();
        let a = transmit(&ch, 21);
        let b = transmit(&ch, 21);
        assert_eq!(a.y, b.y);
        assert_eq!(a.x_true, b.x_true);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (l, _) = small();
        assert!(generate_channel(&l, 2.0, 300.0, &vec![1.0; 30], 1.0, 1).is_err());
        assert!(generate_channel(&l, 3.7, 0.5, &vec![1.0; 30], 1.0, 1).is_err());
        assert!(generate_channel(&l, 3.7, 300.0, &vec![1.0; 29], 1.0, 1).is_err());
    }

    #[test]
    fn non_finite_detected() {
        let (_, mut ch) = small();
        ch.h[(3, 4)] = C64::new(f64::NAN, 0.0);
        assert_eq!(
            ch.check_finite(),
            Err(DncError::NonFinite { row: 3, col: 4 })
        );
    }
}
