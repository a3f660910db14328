//! Experiment harness behind the `dnc` binary: configuration, the table
//! reproductions and the end-to-end detection pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{generate_channel, link_kept, sparsify, transmit};
use crate::cluster::{
    label_rrhs, nest_labelling, permute_to_dbbd, verify_dbbd, BlockStructure, LayerStats,
};
use crate::detect::{build_a_hat, compute_n1, sinr_ratio_sweep, Scenario};
use crate::error::{DncError, Result};
use crate::netgen::{
    generate_layout, pairwise_distance, AreaGeometry, NetworkLayout, PdfKind, Shape,
};
use crate::planner::{self, ClusterPlan, CostQuery, CostReport, Mode, PoolProfile};
use crate::solver::{self, TraceExport};
use crate::threshold::{
    expected_sparsity, sinr_ratio_lower_bound, solve_threshold, ThresholdPdf, ThresholdQuery,
    UserLoad,
};

fn default_alpha() -> f64 {
    3.7
}
fn default_snr_db() -> f64 {
    80.0
}
fn default_r0() -> f64 {
    1.0
}
fn default_trials() -> usize {
    200
}
fn default_layers() -> usize {
    1
}
fn default_workers() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_oracle_max_n() -> usize {
    2000
}

/// Scenario and pipeline settings. Densities are per km², powers in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shape: Shape,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default)]
    pub n_rrh: Option<usize>,
    #[serde(default)]
    pub beta_n: Option<f64>,
    #[serde(default)]
    pub n_user: Option<usize>,
    #[serde(default)]
    pub beta_k: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Transmit SNR `P/N0` in dB (`N0 = 1`).
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    #[serde(default)]
    pub rho_star: Option<f64>,
    #[serde(default)]
    pub d0: Option<f64>,
    #[serde(default)]
    pub pdf: ThresholdPdf,

    /// Extra radii (meters) for threshold sweeps; defaults to the configured circle.
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Extra targets for threshold sweeps; defaults to `rho_star`.
    #[serde(default)]
    pub rho_values: Vec<f64>,

    /// Thresholds for the Monte Carlo sweep; defaults to eight points up to `2r`.
    #[serde(default)]
    pub d0_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub users_per_trial: Option<usize>,

    #[serde(default = "default_layers")]
    pub layers: usize,
    /// Grid sides per layer; when absent they come from `z` or the planner.
    #[serde(default)]
    pub sides: Vec<f64>,
    #[serde(default)]
    pub z: Vec<f64>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub profile: PoolProfile,
    #[serde(default)]
    pub units_cap: Option<usize>,
    #[serde(default = "default_oracle_max_n")]
    pub oracle_max_n: usize,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn exactly_one<A, B>(a: &Option<A>, b: &Option<B>, what: &str) -> Result<()> {
    match (a.is_some(), b.is_some()) {
        (true, false) | (false, true) => Ok(()),
        _ => Err(DncError::InvalidArgument(format!(
            "exactly one of {what} must be given"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        exactly_one(&self.rho_star, &self.d0, "rho_star, d0")?;
        exactly_one(&self.n_rrh, &self.beta_n, "n_rrh, beta_n")?;
        exactly_one(&self.n_user, &self.beta_k, "n_user, beta_k")?;
        self.geometry()?;
        if !(self.alpha > 2.0) {
            return Err(DncError::InvalidArgument("alpha must exceed 2".into()));
        }
        if self.layers == 0 || self.layers > 2 {
            return Err(DncError::InvalidArgument(format!(
                "layers must be 1 or 2, got {}",
                self.layers
            )));
        }
        if let Some(m) = self.mode {
            m.check_layers(self.layers)?;
        }
        self.profile.validate()
    }

    pub fn geometry(&self) -> Result<AreaGeometry> {
        let g = AreaGeometry {
            shape: self.shape,
            r0: self.r0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Transmit power `P` in linear scale (`N0 = 1`).
    pub fn power(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn n0(&self) -> f64 {
        1.0
    }

    pub fn n_rrh_for(&self, g: &AreaGeometry) -> usize {
        self.n_rrh
            .unwrap_or_else(|| g.count_for_density(self.beta_n.unwrap_or(0.0)))
    }

    pub fn n_user_for(&self, g: &AreaGeometry) -> usize {
        self.n_user
            .unwrap_or_else(|| g.count_for_density(self.beta_k.unwrap_or(0.0)))
    }

    /// RRH density per km² implied by the configuration.
    pub fn beta_n_km2(&self) -> Result<f64> {
        let g = self.geometry()?;
        Ok(self
            .beta_n
            .unwrap_or_else(|| self.n_rrh.unwrap_or(0) as f64 / (g.area() / 1e6)))
    }

    fn user_load(&self, g: &AreaGeometry) -> UserLoad {
        match self.beta_k {
            Some(b) => UserLoad::Density(b),
            None => UserLoad::Count(self.n_user_for(g)),
        }
    }

    fn query(&self, rho_star: f64, r: f64) -> ThresholdQuery {
        let g = AreaGeometry {
            shape: Shape::Circle { radius: r },
            r0: self.r0,
        };
        ThresholdQuery {
            rho_star,
            alpha: self.alpha,
            r0: self.r0,
            r,
            users: self.user_load(&g),
            p: self.power(),
            n0: self.n0(),
            pdf: self.pdf,
        }
    }

    /// Short hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        Sha256::digest(json.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Radius used by the analytic threshold (circle radius, or the radius of
    /// the disk with the same area).
    pub fn radius(&self) -> Result<f64> {
        let g = self.geometry()?;
        Ok(match g.shape {
            Shape::Circle { radius } => radius,
            Shape::Rectangle { .. } => (g.area() / std::f64::consts::PI).sqrt(),
        })
    }

    /// Threshold from `d0` or, failing that, from `rho_star`.
    pub fn resolve_d0(&self) -> Result<f64> {
        match (self.d0, self.rho_star) {
            (Some(d0), _) => Ok(d0),
            (None, Some(rho)) => solve_threshold(&self.query(rho, self.radius()?)),
            _ => Err(DncError::InvalidArgument(
                "neither d0 nor rho_star given".into(),
            )),
        }
    }
}

/// CSV text with a fingerprint comment line and a header row.
pub fn csv(fingerprint: &str, header: &str, rows: &[String]) -> String {
    let mut s = format!("# config fingerprint {fingerprint}\n{header}\n");
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn write(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let p = out_dir.join(name);
    fs::write(&p, content)?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub r: f64,
    pub rho_star: f64,
    pub d0: f64,
    pub predicted_sparsity: f64,
    pub measured_sparsity: f64,
}

/// Fraction of RRH–user pairs within `d0` on a random circle layout.
pub fn measured_sparsity(
    r: f64,
    r0: f64,
    n_rrh: usize,
    n_user: usize,
    d0: f64,
    seed: u64,
) -> Result<f64> {
    let g = AreaGeometry::circle(r, r0)?;
    let l = generate_layout(g, n_rrh, n_user, seed)?;
    let mut kept = 0usize;
    for n in 0..l.n_rrh() {
        for k in 0..l.n_user() {
            kept += link_kept(pairwise_distance(&l, n, k), d0, r0) as usize;
        }
    }
    Ok(kept as f64 / (l.n_rrh() * l.n_user()) as f64)
}

/// Threshold rows over `radii × rho_values`; with `d0` configured the row
/// reports the bound reached at that threshold instead.
pub fn threshold_rows(cfg: &ExperimentConfig) -> Result<Vec<ThresholdRow>> {
    cfg.validate()?;
    let radii = if cfg.radii.is_empty() {
        vec![cfg.radius()?]
    } else {
        cfg.radii.clone()
    };
    let rhos = if !cfg.rho_values.is_empty() {
        cfg.rho_values.clone()
    } else {
        cfg.rho_star.into_iter().collect()
    };
    let mut rows = Vec::new();
    for &r in &radii {
        let g = AreaGeometry::circle(r, cfg.r0)?;
        let n_rrh = cfg.n_rrh_for(&g).max(1);
        let n_user = cfg.n_user_for(&g).max(1);
        let targets: Vec<(f64, f64)> = match cfg.d0 {
            Some(d0) => vec![(sinr_ratio_lower_bound(d0, &cfg.query(0.5, r))?, d0)],
            None => rhos
                .iter()
                .map(|&rho| {
                    if rho <= 0.0 {
                        Ok((rho, cfg.r0))
                    } else {
                        solve_threshold(&cfg.query(rho, r)).map(|d| (rho, d))
                    }
                })
                .collect::<Result<_>>()?,
        };
        for (rho, d0) in targets {
            rows.push(ThresholdRow {
                r,
                rho_star: rho,
                d0,
                predicted_sparsity: expected_sparsity(d0, r),
                measured_sparsity: measured_sparsity(r, cfg.r0, n_rrh, n_user, d0, cfg.seed)?,
            });
        }
    }
    Ok(rows)
}

fn threshold_csv(cfg: &ExperimentConfig, rows: &[ThresholdRow]) -> String {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{:.3},{:.6},{:.6}",
                r.r, r.rho_star, r.d0, r.predicted_sparsity, r.measured_sparsity
            )
        })
        .collect();
    csv(
        &cfg.fingerprint(),
        "r,rho_star,d0,predicted_sparsity,measured_sparsity",
        &lines,
    )
}

pub fn cmd_threshold(cfg: &ExperimentConfig) -> Result<Vec<ThresholdRow>> {
    let rows = threshold_rows(cfg)?;
    write(&cfg.out_dir, "threshold.csv", &threshold_csv(cfg, &rows))?;
    Ok(rows)
}

fn table_config(base: &ExperimentConfig, radius: f64) -> ExperimentConfig {
    ExperimentConfig {
        shape: Shape::Circle { radius },
        r0: 1.0,
        n_rrh: None,
        beta_n: Some(base.beta_n.unwrap_or(1.0)),
        n_user: None,
        beta_k: Some(10.0),
        alpha: 3.7,
        snr_db: 80.0,
        pdf: ThresholdPdf::Approx,
        ..base.clone()
    }
}

/// Thresholds for `r ∈ {5, 10, 15, 20}` km at `ρ* = 0.95`, `β_K = 10/km²`.
pub fn repro_table1(base: &ExperimentConfig) -> Result<Vec<ThresholdRow>> {
    let cfg = ExperimentConfig {
        radii: vec![5e3, 10e3, 15e3, 20e3],
        rho_values: vec![],
        rho_star: Some(0.95),
        d0: None,
        ..table_config(base, 5e3)
    };
    let rows = threshold_rows(&cfg)?;
    write(&base.out_dir, "table1.csv", &threshold_csv(&cfg, &rows))?;
    Ok(rows)
}

/// Thresholds for `ρ* ∈ {0.90, 0.93, 0.96, 0.99}` at `r = 10` km, `β_K = 10/km²`.
pub fn repro_table2(base: &ExperimentConfig) -> Result<Vec<ThresholdRow>> {
    let cfg = ExperimentConfig {
        radii: vec![10e3],
        rho_values: vec![0.90, 0.93, 0.96, 0.99],
        rho_star: Some(0.90),
        d0: None,
        ..table_config(base, 10e3)
    };
    let rows = threshold_rows(&cfg)?;
    write(&base.out_dir, "table2.csv", &threshold_csv(&cfg, &rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectRow {
    pub d0: f64,
    pub rho_hat: f64,
    pub bound: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte Carlo SINR ratio against the analytic bound over a threshold grid.
pub fn cmd_detect(cfg: &ExperimentConfig) -> Result<Vec<DetectRow>> {
    cfg.validate()?;
    let g = cfg.geometry()?;
    let r = g.radius()?;
    let grid = if cfg.d0_grid.is_empty() {
        (1..=8).map(|i| 2.0 * r * i as f64 / 8.0).collect()
    } else {
        cfg.d0_grid.clone()
    };
    let scenario = Scenario {
        geometry: g,
        n_rrh: cfg.n_rrh_for(&g),
        n_user: cfg.n_user_for(&g),
        alpha: cfg.alpha,
        power: cfg.power(),
        n0: cfg.n0(),
        pdf: match cfg.pdf {
            ThresholdPdf::Exact => PdfKind::Exact,
            _ => PdfKind::Approx,
        },
        users_per_trial: cfg.users_per_trial,
    };
    let (est, records) = sinr_ratio_sweep(&scenario, &grid, cfg.trials, cfg.seed)?;
    let mut q = cfg.query(0.5, r);
    q.users = UserLoad::Count(scenario.n_user);
    let rows = est
        .iter()
        .map(|e| {
            Ok(DetectRow {
                d0: e.d0,
                rho_hat: e.ratio,
                bound: sinr_ratio_lower_bound(e.d0, &q)?,
                std_error: e.std_error,
                trials: e.trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fp = cfg.fingerprint();
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.d0, r.rho_hat, r.bound, r.std_error, r.trials
            )
        })
        .collect();
    write(
        &cfg.out_dir,
        "detect.csv",
        &csv(&fp, "d0,rho_hat,bound,std_error,trials", &lines),
    )?;
    let rec: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.trial, r.d0, r.user, r.sinr_full, r.sinr_hat
            )
        })
        .collect();
    write(
        &cfg.out_dir,
        "sinr_records.csv",
        &csv(&fp, "trial,d0,user,sinr_full,sinr_hat", &rec),
    )?;
    Ok(rows)
}

/// Grid sides for the configured layers: explicit sides, else from `z`,
/// else from the optimal plan at the configured pool profile.
pub fn resolve_sides(cfg: &ExperimentConfig, n: usize, d0: f64) -> Result<(Vec<f64>, Mode)> {
    let beta = cfg.beta_n_km2()?;
    let plan = if cfg.layers == 1 {
        planner::plan_single_layer(planner::rational(cfg.profile.s1)?, n, d0, beta)
    } else {
        planner::plan_two_layer(
            planner::rational(cfg.profile.s1)?,
            planner::rational(cfg.profile.s2)?,
            n,
            d0,
            beta,
        )
    };
    let mode = cfg.mode.unwrap_or(match &plan {
        Ok(p) => p.mode,
        Err(_) => Mode::Mode1,
    });
    if !cfg.sides.is_empty() {
        if cfg.sides.len() != cfg.layers {
            return Err(DncError::SizeMismatch {
                expected: cfg.layers,
                got: cfg.sides.len(),
            });
        }
        return Ok((cfg.sides.clone(), mode));
    }
    if !cfg.z.is_empty() {
        if cfg.z.len() != cfg.layers {
            return Err(DncError::SizeMismatch {
                expected: cfg.layers,
                got: cfg.z.len(),
            });
        }
        return Ok((planner::realize_layers(&cfg.z, n, d0, beta)?.0, mode));
    }
    Ok((plan?.sides, mode))
}

/// Label a layout with one grid side per layer.
pub fn build_structure(layout: &NetworkLayout, sides: &[f64], d0: f64) -> Result<BlockStructure> {
    let mut s = label_rrhs(layout, sides[0], d0)?;
    for &r in &sides[1..] {
        s = nest_labelling(&s, layout, r, d0)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n_rrh: usize,
    pub n_user: usize,
    pub d0: f64,
    pub n1: f64,
    pub sides: Vec<f64>,
    pub layers: usize,
    pub mode: Mode,
    pub workers: usize,
    pub layer_stats: Vec<LayerStats>,
    pub dbbd_ok: bool,
    pub nnz: usize,
    pub omega_checksum: String,
    pub x_hat_checksum: String,
    /// Relative error against a dense solve; absent above `oracle_max_n`.
    pub oracle_relative_error: Option<f64>,
    pub detect_flops: u64,
    pub trace: TraceExport,
}

/// Layout, channel, sparsification, labelling, DNC solve and detection.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let g = cfg.geometry()?;
    let layout = generate_layout(
        g,
        cfg.n_rrh_for(&g),
        cfg.n_user_for(&g),
        crate::rng::derive(cfg.seed, 10),
    )?;
    let d0 = cfg.resolve_d0()?.max(cfg.r0);
    let powers = vec![cfg.power(); layout.n_user()];
    let ch = generate_channel(
        &layout,
        cfg.alpha,
        d0,
        &powers,
        cfg.n0(),
        crate::rng::derive(cfg.seed, 11),
    )?;
    let y = transmit(&ch, crate::rng::derive(cfg.seed, 12));
    let (h_hat, _) = sparsify(&ch);
    let n1 = match g.shape {
        Shape::Circle { .. } => {
            let pdf = if cfg.pdf == ThresholdPdf::Exact {
                PdfKind::Exact
            } else {
                PdfKind::Approx
            };
            compute_n1(d0, cfg.alpha, &g, &powers, pdf)?
        }
        Shape::Rectangle { .. } => 0.0,
    };
    let a_hat = build_a_hat(&h_hat, &powers, cfg.n0(), n1);
    let (sides, mode) = resolve_sides(cfg, layout.n_rrh(), d0)?;
    let structure = build_structure(&layout, &sides, d0)?;
    let sys = permute_to_dbbd(&a_hat, &structure, &y.y)?;
    let dbbd_ok = verify_dbbd(&sys).ok;
    let (omega_p, trace) = solver::solve(&sys, cfg.workers, mode)?;
    let omega = sys.unpermute(&omega_p);
    let (x_hat, detect_flops) = solver::detect_from_omega(&omega, &h_hat, &powers)?;
    let oracle_relative_error = if layout.n_rrh() <= cfg.oracle_max_n {
        let reference = solver::dense_reference(&a_hat, &y.y)?;
        Some(solver::vector_relative_error(&omega, &reference))
    } else {
        None
    };
    Ok(SolveReport {
        n_rrh: layout.n_rrh(),
        n_user: layout.n_user(),
        d0,
        n1,
        layers: structure.layer_count(),
        sides,
        mode,
        workers: cfg.workers,
        layer_stats: structure.layer_stats(),
        dbbd_ok,
        nnz: a_hat.nnz(),
        omega_checksum: solver::checksum(&omega),
        x_hat_checksum: solver::checksum(&x_hat),
        oracle_relative_error,
        detect_flops,
        trace: trace.export(&cfg.profile),
    })
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveReport> {
    let report = run_pipeline(cfg)?;
    write(
        &cfg.out_dir,
        "solve.json",
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub plan: ClusterPlan,
    /// Cost model evaluated on a generated layout labelled with the plan.
    pub cost: Option<CostReport>,
}

/// Optimal plan for the configured pool profile, the order curves, and the
/// cost model on a sample layout.
pub fn cmd_plan(cfg: &ExperimentConfig) -> Result<PlanReport> {
    cfg.validate()?;
    let g = cfg.geometry()?;
    let n = cfg.n_rrh_for(&g);
    let d0 = cfg.resolve_d0()?;
    let beta = cfg.beta_n_km2()?;
    let s1 = planner::rational(cfg.profile.s1)?;
    let mut plan = if cfg.layers == 1 {
        planner::plan_single_layer(s1, n, d0, beta)?
    } else {
        planner::plan_two_layer(s1, planner::rational(cfg.profile.s2)?, n, d0, beta)?
    };
    if let Some(m) = cfg.mode {
        plan.mode = m;
    }
    let layout = generate_layout(g, n, 1, crate::rng::derive(cfg.seed, 10))?;
    let structure = build_structure(&layout, &plan.sides, d0)?;
    // RRHs sharing a user lie within 2·d0 of each other
    let l = 1.0 + beta * 1e-6 * std::f64::consts::PI * (2.0 * d0).powi(2);
    let q = CostQuery {
        profile: cfg.profile,
        mode: plan.mode,
        layers: cfg.layers,
        l1: l,
        l2: l,
        units_cap: cfg.units_cap,
    };
    let cost = Some(planner::cost_model(&structure, &q)?);
    let report = PlanReport { plan, cost };
    let fp = cfg.fingerprint();
    write(
        &cfg.out_dir,
        "plan.json",
        &serde_json::to_string_pretty(&report)?,
    )?;
    let curve = planner::order_curve_csv(&planner::rational_grid(1, 70));
    write(
        &cfg.out_dir,
        "order_curve.csv",
        &format!("# config fingerprint {fp}\n{curve}"),
    )?;
    let grid = planner::rational_grid(2, 20);
    let surface = planner::order_grid_csv(&grid, &grid);
    write(
        &cfg.out_dir,
        "order_grid.csv",
        &format!("# config fingerprint {fp}\n{surface}"),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(r#"{"shape":{"kind":"circle","radius":5000.0},"n_rrh":100,"beta_k":10.0,"rho_star":0.95}"#)
            .unwrap()
    }

    #[test]
    fn config_invariants() {
        let mut c = base();
        c.d0 = Some(300.0);
        assert!(c.validate().is_err());
        let mut c = base();
        c.beta_n = Some(1.0);
        assert!(c.validate().is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"shape":{"kind":"circle","radius":5000.0}}"#).is_err()
        );
    }

    #[test]
    fn db_conversion() {
        assert_eq!(base().power(), 1e8);
    }

    #[test]
    fn csv_has_fingerprint_and_header() {
        let s = csv("abc", "x,y", &["1,2".into()]);
        assert_eq!(s, "# config fingerprint abc\nx,y\n1,2\n");
    }
}
