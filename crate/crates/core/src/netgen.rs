//! Synthetic network layouts and the RRH–user distance distribution.
//!
//! Circle layouts live in their bounding square: a disk of radius `r` is
//! centred at `(r, r)` so every coordinate is in `[0, 2r]`. Rectangles span
//! `[0, a_x] × [0, a_y]`. Both conventions match the grid used by the
//! labelling in [`crate::cluster`].

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DncError, Result};
use crate::quadrature;
use crate::rng;

/// Absolute tolerance of every distance-pdf integral (on an O(1)-normalised integrand).
pub const PDF_ABS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle { radius: f64 },
    Rectangle { a_x: f64, a_y: f64 },
}

/// Coverage area plus the minimum RRH–user distance `r0` (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaGeometry {
    pub shape: Shape,
    pub r0: f64,
}

impl AreaGeometry {
    pub fn circle(radius: f64, r0: f64) -> Result<Self> {
        let g = AreaGeometry {
            shape: Shape::Circle { radius },
            r0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn rectangle(a_x: f64, a_y: f64, r0: f64) -> Result<Self> {
        let g = AreaGeometry {
            shape: Shape::Rectangle { a_x, a_y },
            r0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(DncError::InvalidGeometry(format!(
                "r0 must be positive, got {}",
                self.r0
            )));
        }
        match self.shape {
            Shape::Circle { radius } if !(radius > self.r0) => Err(DncError::InvalidGeometry(
                format!("radius {radius} must exceed r0 {}", self.r0),
            )),
            Shape::Rectangle { a_x, a_y } if !(a_x > 2.0 * self.r0 && a_y > 2.0 * self.r0) => {
                Err(DncError::InvalidGeometry(format!(
                    "sides {a_x}x{a_y} must exceed 2·r0 = {}",
                    2.0 * self.r0
                )))
            }
            _ => Ok(()),
        }
    }

    /// Area in square meters.
    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius } => PI * radius * radius,
            Shape::Rectangle { a_x, a_y } => a_x * a_y,
        }
    }

    /// Side lengths of the (bounding) rectangle used for labelling.
    pub fn extent(&self) -> (f64, f64) {
        match self.shape {
            Shape::Circle { radius } => (2.0 * radius, 2.0 * radius),
            Shape::Rectangle { a_x, a_y } => (a_x, a_y),
        }
    }

    pub fn radius(&self) -> Result<f64> {
        match self.shape {
            Shape::Circle { radius } => Ok(radius),
            Shape::Rectangle { .. } => Err(DncError::InvalidGeometry(
                "distance distribution is only available for circular areas".into(),
            )),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.shape {
            Shape::Circle { radius } => {
                let dx = p[0] - radius;
                let dy = p[1] - radius;
                dx * dx + dy * dy <= radius * radius * (1.0 + 1e-12)
            }
            Shape::Rectangle { a_x, a_y } => {
                (0.0..=a_x).contains(&p[0]) && (0.0..=a_y).contains(&p[1])
            }
        }
    }

    /// Expected node count for a density given per km².
    pub fn count_for_density(&self, per_km2: f64) -> usize {
        (per_km2 * self.area() / 1e6).round() as usize
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        match self.shape {
            Shape::Circle { radius } => {
                let rho = radius * rng.gen::<f64>().sqrt();
                let theta = 2.0 * PI * rng.gen::<f64>();
                [radius + rho * theta.cos(), radius + rho * theta.sin()]
            }
            Shape::Rectangle { a_x, a_y } => [a_x * rng.gen::<f64>(), a_y * rng.gen::<f64>()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub rrh_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub geometry: AreaGeometry,
    pub seed: u64,
    /// RRHs per km².
    pub beta_n: f64,
    /// Users per km².
    pub beta_k: f64,
}

/// On-disk form of a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub geometry: AreaGeometry,
    pub seed: u64,
    pub rrh: Vec<[f64; 2]>,
    pub user: Vec<[f64; 2]>,
}

impl NetworkLayout {
    /// Build a layout from explicit coordinates.
    pub fn from_positions(
        geometry: AreaGeometry,
        rrh_positions: Vec<[f64; 2]>,
        user_positions: Vec<[f64; 2]>,
        seed: u64,
    ) -> Result<Self> {
        geometry.validate()?;
        if rrh_positions.is_empty() || user_positions.is_empty() {
            return Err(DncError::EmptyNetwork);
        }
        if let Some(p) = rrh_positions
            .iter()
            .chain(&user_positions)
            .find(|p| !geometry.contains(**p))
        {
            return Err(DncError::InvalidGeometry(format!(
                "position {p:?} outside the area"
            )));
        }
        let km2 = geometry.area() / 1e6;
        Ok(NetworkLayout {
            beta_n: rrh_positions.len() as f64 / km2,
            beta_k: user_positions.len() as f64 / km2,
            rrh_positions,
            user_positions,
            geometry,
            seed,
        })
    }

    pub fn n_rrh(&self) -> usize {
        self.rrh_positions.len()
    }

    pub fn n_user(&self) -> usize {
        self.user_positions.len()
    }

    pub fn to_file(&self) -> LayoutFile {
        LayoutFile {
            geometry: self.geometry,
            seed: self.seed,
            rrh: self.rrh_positions.clone(),
            user: self.user_positions.clone(),
        }
    }

    pub fn from_file(file: LayoutFile) -> Result<Self> {
        Self::from_positions(file.geometry, file.rrh, file.user, file.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

/// Place `n_rrh` RRHs and `n_user` users i.i.d. uniformly over the area.
pub fn generate_layout(
    geometry: AreaGeometry,
    n_rrh: usize,
    n_user: usize,
    seed: u64,
) -> Result<NetworkLayout> {
    if n_rrh == 0 || n_user == 0 {
        return Err(DncError::EmptyNetwork);
    }
    geometry.validate()?;
    let mut rrh_rng = rng::stream(rng::derive(seed, 1));
    let mut user_rng = rng::stream(rng::derive(seed, 2));
    let rrh = (0..n_rrh).map(|_| geometry.sample(&mut rrh_rng)).collect();
    let user = (0..n_user)
        .map(|_| geometry.sample(&mut user_rng))
        .collect();
    NetworkLayout::from_positions(geometry, rrh, user, seed)
}

/// Euclidean distance between RRH `n` and user `k`, clamped below at `r0`.
pub fn pairwise_distance(layout: &NetworkLayout, n: usize, k: usize) -> f64 {
    let a = layout.rrh_positions[n];
    let b = layout.user_positions[k];
    (a[0] - b[0]).hypot(a[1] - b[1]).max(layout.geometry.r0)
}

/// Which distance density to integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PdfKind {
    Exact,
    #[default]
    Approx,
}

/// Density of the distance between two uniform points in a disk of radius `r`,
/// without the clamp at `r0`. Defined on `[0, 2r]`.
fn disk_density(x: f64, r: f64) -> f64 {
    if !(0.0..=2.0 * r).contains(&x) {
        return 0.0;
    }
    let t = x / (2.0 * r);
    (2.0 * x / (r * r)) * ((2.0 / PI) * t.acos() - (x / (PI * r)) * (1.0 - t * t).max(0.0).sqrt())
}

/// CDF of the unclamped disk distance, `t = x / r ∈ [0, 2]`.
fn disk_cdf(x: f64, r: f64) -> f64 {
    let t = (x / r).clamp(0.0, 2.0);
    let half = t / 2.0;
    1.0 + (2.0 / PI) * (t * t - 1.0) * half.acos()
        - (t / PI) * (1.0 + t * t / 2.0) * (1.0 - half * half).sqrt()
}

/// Probability mass accumulated at `r0` by clamping.
pub fn point_mass(geometry: &AreaGeometry, kind: PdfKind) -> Result<f64> {
    let r = geometry.radius()?;
    let r0 = geometry.r0;
    Ok(match kind {
        PdfKind::Exact => disk_cdf(r0, r),
        PdfKind::Approx => (r0 * r0) / (r * r),
    })
}

/// Exact clamped distance distribution: the density for `r0 < x < 2r`, the
/// point-mass weight at `x = r0`, and zero elsewhere.
pub fn distance_pdf(x: f64, geometry: &AreaGeometry) -> Result<f64> {
    let r = geometry.radius()?;
    let r0 = geometry.r0;
    if x == r0 {
        return point_mass(geometry, PdfKind::Exact);
    }
    if x < r0 || x >= 2.0 * r {
        return Ok(0.0);
    }
    Ok(disk_density(x, r))
}

/// Large-radius approximation: mass `r0²/r²` at `r0`, then `2x/r²` up to `r`.
pub fn distance_pdf_approx(x: f64, geometry: &AreaGeometry) -> Result<f64> {
    let r = geometry.radius()?;
    let r0 = geometry.r0;
    if x == r0 {
        return Ok(r0 * r0 / (r * r));
    }
    if x > r0 && x < r {
        Ok(2.0 * x / (r * r))
    } else {
        Ok(0.0)
    }
}

/// Continuous part of the chosen density (no point mass).
pub fn continuous_density(x: f64, geometry: &AreaGeometry, kind: PdfKind) -> Result<f64> {
    let r = geometry.radius()?;
    if x <= geometry.r0 {
        return Ok(0.0);
    }
    Ok(match kind {
        PdfKind::Exact => disk_density(x, r),
        PdfKind::Approx if x < r => 2.0 * x / (r * r),
        PdfKind::Approx => 0.0,
    })
}

/// Upper end of the density's support.
pub fn support_end(geometry: &AreaGeometry, kind: PdfKind) -> Result<f64> {
    let r = geometry.radius()?;
    Ok(match kind {
        PdfKind::Exact => 2.0 * r,
        PdfKind::Approx => r,
    })
}

/// Path-loss moment `∫_0^{d_hi} x^{-α} f(x) dx`, point mass at `r0` included.
/// `d_hi = f64::INFINITY` gives the full moment μ.
pub fn pathloss_moment(
    d_hi: f64,
    alpha: f64,
    geometry: &AreaGeometry,
    kind: PdfKind,
) -> Result<f64> {
    let r = geometry.radius()?;
    let r0 = geometry.r0;
    if !(alpha > 0.0) || alpha.is_nan() {
        return Err(DncError::InvalidArgument(format!(
            "path-loss exponent {alpha}"
        )));
    }
    if d_hi < r0 {
        return Ok(0.0);
    }
    let mass = point_mass(geometry, kind)? * r0.powf(-alpha);
    let hi = d_hi.min(support_end(geometry, kind)?);
    if hi <= r0 {
        return Ok(mass);
    }
    // Normalise by r² so the integrand is O(1) at r0 and the absolute tolerance is meaningful.
    let norm = r * r * r0.powf(alpha - 1.0);
    let integrand =
        |x: f64| norm * x.powf(-alpha) * continuous_density(x, geometry, kind).unwrap_or(0.0);
    // Geometric breakpoints keep the steep power law well resolved.
    let mut total = 0.0;
    let mut lo = r0;
    while lo < hi {
        let next = (lo * 10.0).min(hi);
        let (v, _) = quadrature::integrate(&integrand, lo, next, PDF_ABS_TOL, 1e-13);
        total += v;
        lo = next;
    }
    let value = mass + total / norm;
    if !value.is_finite() {
        return Err(DncError::DivergentTail);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(r: f64) -> AreaGeometry {
        AreaGeometry::circle(r, 1.0).unwrap()
    }

    #[test]
    fn single_point_layout() {
        let l = generate_layout(disk(5000.0), 1, 1, 7).unwrap();
        assert_eq!(l.n_rrh(), 1);
        assert_eq!(l.n_user(), 1);
        assert!(l.geometry.contains(l.rrh_positions[0]));
        assert!(l.geometry.contains(l.user_positions[0]));
    }

    #[test]
    fn user_count_from_density() {
        assert_eq!(disk(5000.0).count_for_density(10.0), 785);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_layout(disk(2000.0), 50, 80, 11).unwrap();
        let b = generate_layout(disk(2000.0), 50, 80, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_layout(disk(2000.0), 50, 80, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_network_rejected() {
        assert_eq!(
            generate_layout(disk(100.0), 0, 3, 1),
            Err(DncError::EmptyNetwork)
        );
        assert_eq!(
            generate_layout(disk(100.0), 3, 0, 1),
            Err(DncError::EmptyNetwork)
        );
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(AreaGeometry::circle(0.5, 1.0).is_err());
        assert!(AreaGeometry::rectangle(1.5, 10.0, 1.0).is_err());
        assert!(AreaGeometry::circle(10.0, 0.0).is_err());
    }

    #[test]
    fn distance_three_four_five() {
        let g = AreaGeometry::rectangle(10.0, 10.0, 1.0).unwrap();
        let l = NetworkLayout::from_positions(g, vec![[0.0, 0.0]], vec![[3.0, 4.0]], 0).unwrap();
        assert_eq!(pairwise_distance(&l, 0, 0), 5.0);
    }

    #[test]
    fn coincident_points_clamp_to_r0() {
        let g = AreaGeometry::rectangle(10.0, 10.0, 1.0).unwrap();
        let l = NetworkLayout::from_positions(g, vec![[2.0, 2.0]], vec![[2.0, 2.0]], 0).unwrap();
        assert_eq!(pairwise_distance(&l, 0, 0), 1.0);
    }

    #[test]
    fn pdf_vanishes_at_diameter() {
        let g = disk(5000.0);
        assert_eq!(distance_pdf(10_000.0, &g).unwrap(), 0.0);
        assert!(disk_density(10_000.0, 5000.0).abs() < 1e-20);
        assert_eq!(distance_pdf(0.5, &g).unwrap(), 0.0);
    }

    #[test]
    fn cdf_is_antiderivative_of_density() {
        let r = 3.0;
        for &x in &[0.1, 0.7, 1.9, 3.3, 5.2] {
            let h = 1e-5;
            let fd = (disk_cdf(x + h, r) - disk_cdf(x - h, r)) / (2.0 * h);
            assert!((fd - disk_density(x, r)).abs() < 1e-8, "x={x}");
        }
        assert!(disk_cdf(0.0, r).abs() < 1e-15);
        assert!((disk_cdf(2.0 * r, r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn approx_point_mass() {
        let g = disk(5000.0);
        let m = distance_pdf_approx(1.0, &g).unwrap();
        assert!((m - 4e-8).abs() < 1e-20);
        assert_eq!(distance_pdf_approx(5000.0, &g).unwrap(), 0.0);
        assert!((distance_pdf_approx(100.0, &g).unwrap() - 200.0 / 25e6).abs() < 1e-18);
    }

    #[test]
    fn moment_at_r0_is_point_mass_only() {
        let g = disk(5000.0);
        let a = 3.7;
        let m = pathloss_moment(1.0, a, &g, PdfKind::Approx).unwrap();
        assert!((m - 1.0f64.powf(2.0 - a) / 25e6).abs() < 1e-22);
    }

    #[test]
    fn moment_requires_circle() {
        let g = AreaGeometry::rectangle(100.0, 100.0, 1.0).unwrap();
        assert!(pathloss_moment(10.0, 3.7, &g, PdfKind::Exact).is_err());
    }

    #[test]
    fn layout_json_round_trip() {
        let l = generate_layout(disk(800.0), 5, 7, 3).unwrap();
        let s = l.to_json().unwrap();
        assert!(s.contains("\"rrh\"") && s.contains("\"user\"") && s.contains("\"seed\""));
        assert_eq!(NetworkLayout::from_json(&s).unwrap(), l);
    }
}
