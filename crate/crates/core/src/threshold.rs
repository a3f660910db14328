//! Analytic SINR-ratio lower bound and distance-threshold selection.
//!
//! The bound is `μ̂ N0 / (μ (P (μ − μ̂)(K − 1) + N0))`, where `μ` and `μ̂`
//! are the full and truncated path-loss moments of the RRH–user distance.
//! It is nondecreasing in the threshold, so the smallest admissible
//! threshold is found by bisection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DncError, Result};
use crate::netgen::{pathloss_moment, AreaGeometry, PdfKind};

/// Bisection stops once the bracket is narrower than this (meters).
pub const BISECTION_TOL_M: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserLoad {
    /// Exact user count `K`.
    Count(usize),
    /// Users per km².
    Density(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPdf {
    Exact,
    #[default]
    Approx,
    /// Closed form in the infinite-network limit.
    Asymptotic,
}

impl ThresholdPdf {
    fn moment_pdf(self) -> PdfKind {
        match self {
            ThresholdPdf::Exact => PdfKind::Exact,
            ThresholdPdf::Approx | ThresholdPdf::Asymptotic => PdfKind::Approx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub rho_star: f64,
    pub alpha: f64,
    pub r0: f64,
    /// Network radius (meters).
    pub r: f64,
    pub users: UserLoad,
    pub p: f64,
    pub n0: f64,
    #[serde(default)]
    pub pdf: ThresholdPdf,
}

impl ThresholdQuery {
    /// The defaults used throughout: α = 3.7, r0 = 1 m, P/N0 = 80 dB with N0 = 1.
    pub fn standard(rho_star: f64, r: f64, users: UserLoad) -> Self {
        ThresholdQuery {
            rho_star,
            alpha: 3.7,
            r0: 1.0,
            r,
            users,
            p: 1e8,
            n0: 1.0,
            pdf: ThresholdPdf::Approx,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_star > 0.0 && self.rho_star < 1.0) {
            return Err(DncError::InvalidArgument(format!(
                "target ratio {} outside (0, 1)",
                self.rho_star
            )));
        }
        if !(self.alpha > 2.0) {
            return Err(DncError::InvalidArgument(format!(
                "path-loss exponent {} must exceed 2",
                self.alpha
            )));
        }
        if !(self.p >= 0.0 && self.n0 > 0.0) {
            return Err(DncError::InvalidArgument(
                "power must be nonnegative and noise positive".into(),
            ));
        }
        self.geometry().map(|_| ())
    }

    pub fn geometry(&self) -> Result<AreaGeometry> {
        AreaGeometry::circle(self.r, self.r0)
    }

    /// Number of interfering users, `K − 1`. A density is converted with `K − 1 ≈ β_K π r²`.
    pub fn interferers(&self) -> f64 {
        match self.users {
            UserLoad::Count(k) => k.saturating_sub(1) as f64,
            UserLoad::Density(beta) => beta * 1e-6 * PI * self.r * self.r,
        }
    }

    /// User density per m².
    pub fn beta_k_per_m2(&self) -> f64 {
        match self.users {
            UserLoad::Count(k) => k.saturating_sub(1) as f64 / (PI * self.r * self.r),
            UserLoad::Density(beta) => beta * 1e-6,
        }
    }
}

fn bound_from_moments(mu: f64, mu_hat: f64, interference_power: f64, n0: f64) -> f64 {
    mu_hat * n0 / (mu * ((mu - mu_hat).max(0.0) * interference_power + n0))
}

/// Equal-power lower bound on the SINR ratio at threshold `d0`.
pub fn sinr_ratio_lower_bound(d0: f64, q: &ThresholdQuery) -> Result<f64> {
    let g = q.geometry()?;
    let kind = q.pdf.moment_pdf();
    let mu = pathloss_moment(f64::INFINITY, q.alpha, &g, kind)?;
    let mu_hat = pathloss_moment(d0, q.alpha, &g, kind)?;
    Ok(bound_from_moments(mu, mu_hat, q.p * q.interferers(), q.n0))
}

/// Lower bound for user `k` with arbitrary powers: the interference term uses `Σ_{j≠k} P_j`.
pub fn sinr_ratio_lower_bound_general(
    d0: f64,
    alpha: f64,
    geometry: &AreaGeometry,
    powers: &[f64],
    k: usize,
    n0: f64,
    pdf: PdfKind,
) -> Result<f64> {
    if k >= powers.len() {
        return Err(DncError::InvalidArgument(format!("user {k} out of range")));
    }
    let mu = pathloss_moment(f64::INFINITY, alpha, geometry, pdf)?;
    let mu_hat = pathloss_moment(d0, alpha, geometry, pdf)?;
    let others: f64 = powers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, p)| p)
        .sum();
    Ok(bound_from_moments(mu, mu_hat, others, n0))
}

/// Smallest threshold whose lower bound reaches `ρ*`.
pub fn solve_threshold(q: &ThresholdQuery) -> Result<f64> {
    q.validate()?;
    if q.pdf == ThresholdPdf::Asymptotic {
        return Ok(threshold_large_r(q)?.infinite_r);
    }
    let (lo0, hi0) = (q.r0, 2.0 * q.r);
    let top = sinr_ratio_lower_bound(hi0, q)?;
    if top < q.rho_star {
        return Err(DncError::Unachievable {
            target: q.rho_star,
            bound: top,
        });
    }
    if sinr_ratio_lower_bound(lo0, q)? >= q.rho_star {
        return Ok(lo0);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > BISECTION_TOL_M {
        let mid = 0.5 * (lo + hi);
        if sinr_ratio_lower_bound(mid, q)? >= q.rho_star {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Closed-form thresholds for large networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeRThreshold {
    /// Finite-radius approximation (outer exponent `−1/(α−2)`).
    pub finite_r: f64,
    /// Infinite-network limit (outer exponent `1/(α−2)`), evaluated as written
    /// with the factor `r0^{α−2}` in the numerator.
    pub infinite_r: f64,
}

pub fn threshold_large_r(q: &ThresholdQuery) -> Result<LargeRThreshold> {
    q.validate()?;
    let a = q.alpha;
    let rho = q.rho_star;
    let (r, r0, p, n0) = (q.r, q.r0, q.p, q.n0);
    let m = a * r0.powf(2.0 - a) - 2.0 * r.powf(2.0 - a);
    let inner = r.powf(2.0 - a)
        + m * (1.0 - rho) * n0
            / (2.0 * n0 + 2.0 * rho * m * q.interferers() * p / ((a - 2.0) * r * r));
    let finite_r = inner.powf(-1.0 / (a - 2.0));

    let beta = q.beta_k_per_m2();
    let num = 2.0 * n0 * (a - 2.0) + 2.0 * a * r0.powf(a - 2.0) * rho * PI * beta * p;
    let den = a * r0.powf(2.0 - a) * n0 * (1.0 - rho) * (a - 2.0);
    let infinite_r = (num / den).powf(1.0 / (a - 2.0));
    Ok(LargeRThreshold {
        finite_r,
        infinite_r,
    })
}

/// Expected fraction of nonzero channel entries, `d0² / r²`.
pub fn expected_sparsity(d0: f64, r: f64) -> f64 {
    d0 * d0 / (r * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rho: f64, r: f64) -> ThresholdQuery {
        ThresholdQuery::standard(rho, r, UserLoad::Density(10.0))
    }

    #[test]
    fn bound_is_one_without_truncation() {
        let b = sinr_ratio_lower_bound(f64::INFINITY, &q(0.9, 5000.0)).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noise_limited_bound_is_moment_ratio() {
        let mut qq = q(0.9, 5000.0);
        qq.p = 0.0;
        let g = qq.geometry().unwrap();
        let mu = pathloss_moment(f64::INFINITY, 3.7, &g, PdfKind::Approx).unwrap();
        let mu_hat = pathloss_moment(50.0, 3.7, &g, PdfKind::Approx).unwrap();
        let b = sinr_ratio_lower_bound(50.0, &qq).unwrap();
        assert!((b - mu_hat / mu).abs() < 1e-15);
    }

    #[test]
    fn general_form_reduces_to_equal_power() {
        let qq = ThresholdQuery::standard(0.9, 3000.0, UserLoad::Count(50));
        let g = qq.geometry().unwrap();
        let a = sinr_ratio_lower_bound(400.0, &qq).unwrap();
        let b = sinr_ratio_lower_bound_general(400.0, 3.7, &g, &[1e8; 50], 7, 1.0, PdfKind::Approx)
            .unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn vanishing_target_gives_minimal_threshold() {
        let d0 = solve_threshold(&q(1e-9, 5000.0)).unwrap();
        assert_eq!(d0, 1.0);
    }

    #[test]
    fn unachievable_target_is_an_error() {
        let mut qq = q(0.999_999, 5000.0);
        qq.pdf = ThresholdPdf::Exact;
        // the bound at full coverage is 1, so push the target past it via μ̂ < μ at 2r
        qq.rho_star = 0.999_999_999_999;
        match solve_threshold(&qq) {
            Ok(d) => assert!(d <= 2.0 * qq.r),
            Err(e) => assert!(matches!(e, DncError::Unachievable { .. })),
        }
        let mut qq = q(0.5, 5000.0);
        qq.rho_star = 1.5;
        assert!(solve_threshold(&qq).is_err());
    }

    #[test]
    fn sparsity_formula() {
        assert!((expected_sparsity(705.0, 10_000.0) - 0.004_970_25).abs() < 1e-12);
        assert_eq!(expected_sparsity(10.0, 10.0), 1.0);
    }

    #[test]
    fn density_and_count_conversions() {
        let qq = q(0.9, 10_000.0);
        assert!((qq.interferers() - 1e-5 * PI * 1e8).abs() < 1e-9);
        let qc = ThresholdQuery::standard(0.9, 10_000.0, UserLoad::Count(3142));
        assert!((qc.beta_k_per_m2() - 3141.0 / (PI * 1e8)).abs() < 1e-18);
    }
}
