//! Full and sparsified MMSE detection, SINR evaluation and the Monte Carlo
//! SINR-ratio estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channel, link_kept, sparsify, ChannelSet, ReceivedSignal};
use crate::error::{DncError, Result};
use crate::linalg::{self, CMat, CholeskyFactor, Flops, C64};
use crate::netgen::{generate_layout, pairwise_distance, pathloss_moment, AreaGeometry, PdfKind};
use crate::rng;
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Full,
    Sparsified,
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub x_hat: Vec<C64>,
    /// Linear-scale SINR per user.
    pub sinr: Vec<f64>,
    pub detector_kind: DetectorKind,
}

/// `G Gᴴ + σ I` for a dense `G`, exactly Hermitian.
fn gram_plus_diag(g: &CMat, sigma: f64) -> CMat {
    let n = g.nrows();
    let mut a = linalg::mul_adjoint(g, g, &mut Flops::default());
    for c in 0..n {
        a[(c, c)] = C64::new(a[(c, c)].re + sigma, 0.0);
        for r in c + 1..n {
            a[(c, r)] = a[(r, c)].conj();
        }
    }
    a
}

/// `G Gᴴ + σ I` where only the entries with `kept(r, u)` of `G` are nonzero.
/// Each column touches only its kept rows, so the cost follows the density.
fn masked_gram(g: &CMat, kept: impl Fn(usize, usize) -> bool, sigma: f64) -> CMat {
    let (n, k) = g.shape();
    let mut a = CMat::zeros(n, n);
    let data = a.as_mut_slice();
    let mut idx = Vec::with_capacity(n);
    for u in 0..k {
        idx.clear();
        idx.extend((0..n).filter(|&r| kept(r, u)));
        for (p, &c) in idx.iter().enumerate() {
            let f = g[(c, u)].conj();
            let col = &mut data[c * n..(c + 1) * n];
            for &r in &idx[p..] {
                col[r] += g[(r, u)] * f;
            }
        }
    }
    for c in 0..n {
        a[(c, c)] = C64::new(a[(c, c)].re + sigma, 0.0);
        for r in c + 1..n {
            a[(c, r)] = a[(r, c)].conj();
        }
    }
    a
}

/// `A = H P Hᴴ + N0 I`, dense.
pub fn full_covariance(ch: &ChannelSet) -> CMat {
    let g = CMat::from_fn(ch.n_rrh(), ch.n_user(), |r, k| {
        ch.h[(r, k)] * ch.powers[k].sqrt()
    });
    gram_plus_diag(&g, ch.n0)
}

/// `Â = Ĥ P Ĥᴴ + (N1 + N0) I` as a sparse Hermitian matrix in original RRH order.
/// Contributions are accumulated user by user, so the result is deterministic.
pub fn build_a_hat(h_hat: &CscMatrix, powers: &[f64], n0: f64, n1: f64) -> CscMatrix {
    let n = h_hat.nrows();
    let mut t: Vec<(usize, usize, C64)> = (0..n).map(|i| (i, i, C64::new(n1 + n0, 0.0))).collect();
    for (k, &p) in powers.iter().enumerate() {
        let col: Vec<(usize, C64)> = h_hat.col(k).collect();
        for &(r1, v1) in &col {
            for &(r2, v2) in &col {
                t.push((r1, r2, v1 * v2.conj() * p));
            }
        }
    }
    CscMatrix::from_triplets(n, n, t)
}

/// Residual interference power `N1 = (μ − μ̂(d0)) Σ_j P_j`.
pub fn compute_n1(
    d0: f64,
    alpha: f64,
    geometry: &AreaGeometry,
    powers: &[f64],
    pdf: PdfKind,
) -> Result<f64> {
    let mu = pathloss_moment(f64::INFINITY, alpha, geometry, pdf)?;
    let mu_hat = pathloss_moment(d0, alpha, geometry, pdf)?;
    Ok((mu - mu_hat).max(0.0) * powers.iter().sum::<f64>())
}

/// SINR of users `users` for detector columns `v` (one column per listed user),
/// evaluated against the true channel `h`.
pub fn sinr_for_detectors(
    h: &CMat,
    powers: &[f64],
    n0: f64,
    v: &CMat,
    users: &[usize],
) -> Vec<f64> {
    let mut flops = Flops::default();
    // g[(j, s)] = h_jᴴ v_s
    let g = linalg::adjoint_mul(h, v, &mut flops);
    users
        .iter()
        .enumerate()
        .map(|(s, &k)| {
            let signal = powers[k] * g[(k, s)].norm_sqr();
            let mut interference = 0.0;
            for (j, &pj) in powers.iter().enumerate() {
                if j != k {
                    interference += pj * g[(j, s)].norm_sqr();
                }
            }
            let noise = n0 * v.column(s).norm_squared();
            let den = interference + noise;
            if signal == 0.0 {
                0.0
            } else {
                signal / den
            }
        })
        .collect()
}

fn columns_scaled(h: &CMat, powers: &[f64], users: &[usize]) -> CMat {
    CMat::from_fn(h.nrows(), users.len(), |r, s| {
        h[(r, users[s])] * powers[users[s]].sqrt()
    })
}

/// MMSE detector columns `V[:, users]` for covariance `a` and signal matrix `h`.
fn detector_columns(
    a: CMat,
    h: &CMat,
    powers: &[f64],
    users: &[usize],
) -> Result<(CholeskyFactor, CMat)> {
    let mut flops = Flops::default();
    let factor = CholeskyFactor::new(a, &mut flops)
        .map_err(|_| DncError::InvalidArgument("covariance is not positive definite".into()))?;
    let mut v = columns_scaled(h, powers, users);
    factor.solve_in_place(&mut v, &mut flops);
    Ok((factor, v))
}

fn apply_detector(factor: &CholeskyFactor, h: &CMat, powers: &[f64], y: &[C64]) -> Vec<C64> {
    let mut flops = Flops::default();
    let mut w = CMat::from_column_slice(y.len(), 1, y);
    factor.solve_in_place(&mut w, &mut flops);
    (0..h.ncols())
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (hv, wv) in h.column(k).iter().zip(w.iter()) {
                acc += hv.conj() * wv;
            }
            acc * powers[k].sqrt()
        })
        .collect()
}

/// Full-channel MMSE detection `x̂ = P^{1/2} Hᴴ A⁻¹ y`.
pub fn mmse_full(ch: &ChannelSet, y: &ReceivedSignal) -> Result<DetectionResult> {
    ch.check_finite()?;
    let users: Vec<usize> = (0..ch.n_user()).collect();
    let (factor, v) = detector_columns(full_covariance(ch), &ch.h, &ch.powers, &users)?;
    Ok(DetectionResult {
        x_hat: apply_detector(&factor, &ch.h, &ch.powers, &y.y),
        sinr: sinr_for_detectors(&ch.h, &ch.powers, ch.n0, &v, &users),
        detector_kind: DetectorKind::Full,
    })
}

/// Sparsified MMSE detection with `V̂ = Â⁻¹ Ĥ P^{1/2}`; SINR evaluated with the true columns of `H`.
pub fn mmse_sparsified(ch: &ChannelSet, y: &ReceivedSignal, n1: f64) -> Result<DetectionResult> {
    ch.check_finite()?;
    let (h_hat, _) = sparsify(ch);
    let a_hat = build_a_hat(&h_hat, &ch.powers, ch.n0, n1).to_dense();
    let h_hat_dense = h_hat.to_dense();
    let users: Vec<usize> = (0..ch.n_user()).collect();
    let (factor, v) = detector_columns(a_hat, &h_hat_dense, &ch.powers, &users)?;
    Ok(DetectionResult {
        x_hat: apply_detector(&factor, &h_hat_dense, &ch.powers, &y.y),
        sinr: sinr_for_detectors(&ch.h, &ch.powers, ch.n0, &v, &users),
        detector_kind: DetectorKind::Sparsified,
    })
}

/// Randomised network used by the Monte Carlo estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: AreaGeometry,
    pub n_rrh: usize,
    pub n_user: usize,
    pub alpha: f64,
    /// Per-user transmit power (linear).
    pub power: f64,
    pub n0: f64,
    #[serde(default)]
    pub pdf: PdfKind,
    /// Users evaluated per trial (uniform random subset); `None` evaluates all.
    #[serde(default)]
    pub users_per_trial: Option<usize>,
}

impl Scenario {
    pub fn powers(&self) -> Vec<f64> {
        vec![self.power; self.n_user]
    }
}

/// Ratio-of-means estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub d0: f64,
    pub ratio: f64,
    pub std_error: f64,
    pub mean_sinr_full: f64,
    pub mean_sinr_hat: f64,
    pub trials: usize,
}

/// One per-user SINR observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrRecord {
    pub trial: usize,
    pub d0: f64,
    pub user: usize,
    pub sinr_full: f64,
    pub sinr_hat: f64,
}

struct TrialOutcome {
    records: Vec<SinrRecord>,
}

fn run_trial(
    scenario: &Scenario,
    d0s: &[f64],
    n1s: &[f64],
    trial: usize,
    seed: u64,
) -> Result<TrialOutcome> {
    let trial_seed = rng::derive(seed, trial as u64);
    let layout = generate_layout(
        scenario.geometry,
        scenario.n_rrh,
        scenario.n_user,
        rng::derive(trial_seed, 1),
    )?;
    let powers = scenario.powers();
    let d_max = d0s.iter().copied().fold(scenario.geometry.r0, f64::max);
    let ch = generate_channel(
        &layout,
        scenario.alpha,
        d_max,
        &powers,
        scenario.n0,
        rng::derive(trial_seed, 2),
    )?;
    let users: Vec<usize> = match scenario.users_per_trial {
        Some(s) if s < scenario.n_user => {
            let mut r = rng::stream(rng::derive(trial_seed, 3));
            let mut picked = rand::seq::index::sample(&mut r, scenario.n_user, s).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..scenario.n_user).collect(),
    };
    let (_, v_full) = detector_columns(full_covariance(&ch), &ch.h, &powers, &users)?;
    let sinr_full = sinr_for_detectors(&ch.h, &powers, ch.n0, &v_full, &users);

    let (n, k) = (layout.n_rrh(), layout.n_user());
    let dist: Vec<f64> = (0..k)
        .flat_map(|u| (0..n).map(move |r| (r, u)))
        .map(|(r, u)| pairwise_distance(&layout, r, u))
        .collect();
    let r0 = layout.geometry.r0;
    let mut records = Vec::with_capacity(users.len() * d0s.len());
    for (&d0, &n1) in d0s.iter().zip(n1s) {
        let kept = |r: usize, u: usize| link_kept(dist[u * n + r], d0, r0);
        let sinr_hat = if n1 == 0.0 && dist.iter().all(|&d| link_kept(d, d0, r0)) {
            sinr_full.clone()
        } else {
            let g = CMat::from_fn(n, k, |r, u| {
                if kept(r, u) {
                    ch.h[(r, u)] * powers[u].sqrt()
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let a_hat = masked_gram(&g, |r, u| kept(r, u), ch.n0 + n1);
            let mut v = CMat::from_fn(n, users.len(), |r, s| g[(r, users[s])]);
            let mut flops = Flops::default();
            let factor = CholeskyFactor::new(a_hat, &mut flops)?;
            factor.solve_in_place(&mut v, &mut flops);
            sinr_for_detectors(&ch.h, &powers, ch.n0, &v, &users)
        };
        for (s, &u) in users.iter().enumerate() {
            records.push(SinrRecord {
                trial,
                d0,
                user: u,
                sinr_full: sinr_full[s],
                sinr_hat: sinr_hat[s],
            });
        }
    }
    Ok(TrialOutcome { records })
}

/// Monte Carlo SINR ratio for several thresholds using common random numbers:
/// each trial draws one layout and channel and evaluates every threshold on it.
/// Returns per-threshold estimates and the raw per-user records.
pub fn sinr_ratio_sweep(
    scenario: &Scenario,
    d0s: &[f64],
    n_trials: usize,
    seed: u64,
) -> Result<(Vec<RatioEstimate>, Vec<SinrRecord>)> {
    if n_trials == 0 {
        return Err(DncError::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let powers = scenario.powers();
    let n1s = d0s
        .iter()
        .map(|&d0| {
            compute_n1(
                d0,
                scenario.alpha,
                &scenario.geometry,
                &powers,
                scenario.pdf,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<TrialOutcome> = (0..n_trials)
        .into_par_iter()
        .map(|t| run_trial(scenario, d0s, &n1s, t, seed))
        .collect::<Result<Vec<_>>>()?;

    let estimates = d0s
        .iter()
        .map(|&d0| {
            // Per-trial means, reduced in trial order.
            let per_trial: Vec<(f64, f64)> = outcomes
                .iter()
                .map(|o| {
                    let recs: Vec<&SinrRecord> = o.records.iter().filter(|r| r.d0 == d0).collect();
                    let m = recs.len().max(1) as f64;
                    (
                        rng::compensated_sum(recs.iter().map(|r| r.sinr_hat)) / m,
                        rng::compensated_sum(recs.iter().map(|r| r.sinr_full)) / m,
                    )
                })
                .collect();
            ratio_of_means(d0, &per_trial)
        })
        .collect();
    let records = outcomes.into_iter().flat_map(|o| o.records).collect();
    Ok((estimates, records))
}

fn ratio_of_means(d0: f64, pairs: &[(f64, f64)]) -> RatioEstimate {
    let n = pairs.len() as f64;
    let a = rng::compensated_sum(pairs.iter().map(|p| p.0)) / n;
    let b = rng::compensated_sum(pairs.iter().map(|p| p.1)) / n;
    let ratio = if b > 0.0 { a / b } else { 0.0 };
    let std_error = if pairs.len() < 2 {
        f64::INFINITY
    } else {
        let ss = rng::compensated_sum(pairs.iter().map(|&(x, y)| (x - ratio * y).powi(2)));
        (ss / (n * (n - 1.0))).sqrt() / b
    };
    RatioEstimate {
        d0,
        ratio,
        std_error,
        mean_sinr_full: b,
        mean_sinr_hat: a,
        trials: pairs.len(),
    }
}

/// Monte Carlo estimate of `E[SINR̂_k(d0)] / E[SINR_k]` over channel draws and users.
pub fn sinr_ratio_empirical(
    scenario: &Scenario,
    d0: f64,
    n_trials: usize,
    seed: u64,
) -> Result<RatioEstimate> {
    Ok(sinr_ratio_sweep(scenario, &[d0], n_trials, seed)?.0[0])
}
