//! Cluster-size selection, closed-form complexity orders and a flop-based
//! cost model for the block solvers.
//!
//! A processing pool has up to three levels: one central unit (level 1,
//! power `N^{s1}`), middle units (level 2, power `N^{s2}`) and leaf units
//! (level 3, power 1). The single-layer solver uses the central unit and the
//! leaf units only.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::cluster::{BlockStructure, BlockTree};
use crate::error::{DncError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every level works in parallel. For one layer: the parallel plan.
    Mode1,
    /// Middle units invert their whole diagonal block; leaf units idle.
    Mode2,
    /// Everything on the central unit. For one layer: the serial plan.
    Mode3,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Mode1 => "mode1",
            Mode::Mode2 => "mode2",
            Mode::Mode3 => "mode3",
        }
    }

    pub fn check_layers(self, layers: usize) -> Result<()> {
        match (self, layers) {
            (Mode::Mode2, 1) | (_, 0) => Err(DncError::ModeMismatch {
                mode: self.name().into(),
                layers,
            }),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = DncError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode1" | "parallel" => Ok(Mode::Mode1),
            "mode2" => Ok(Mode::Mode2),
            "mode3" | "serial" => Ok(Mode::Mode3),
            _ => Err(DncError::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Log-N power ratios of the central (`s1`) and middle (`s2`) units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoolProfile {
    pub s1: f64,
    #[serde(default)]
    pub s2: f64,
}

impl PoolProfile {
    pub fn single(s: f64) -> Self {
        PoolProfile { s1: s, s2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s1 >= 0.0 && self.s2 >= 0.0 {
            Ok(())
        } else {
            Err(DncError::InvalidArgument(
                "log-N ratios must be nonnegative".into(),
            ))
        }
    }

    pub fn power(&self, level: Level, n: usize) -> f64 {
        let n = n as f64;
        match level {
            Level::Central => n.powf(self.s1),
            Level::Middle => n.powf(self.s2),
            Level::Leaf => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Central,
    Middle,
    Leaf,
}

/// One unit of work within a step; `group` is the layer-1 cluster it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub group: usize,
    pub flops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCost {
    pub id: String,
    pub tasks: Vec<Task>,
}

impl StepCost {
    pub fn total(&self) -> f64 {
        self.tasks.iter().map(|t| t.flops).sum()
    }
}

/// Steps executed together on one level; each entry of `units` is the work of one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub steps: Vec<String>,
    pub level: Level,
    pub units: Vec<f64>,
}

fn find<'a>(steps: &'a [StepCost], id: &str) -> Option<&'a StepCost> {
    steps.iter().find(|s| s.id == id)
}

fn per_task(steps: &[StepCost], id: &str, level: Level) -> Option<Phase> {
    find(steps, id).map(|s| Phase {
        steps: vec![id.into()],
        level,
        units: s.tasks.iter().map(|t| t.flops).collect(),
    })
}

fn merged(steps: &[StepCost], ids: &[&str], level: Level) -> Phase {
    let total = ids
        .iter()
        .filter_map(|id| find(steps, id))
        .map(StepCost::total)
        .sum();
    Phase {
        steps: ids.iter().map(|s| s.to_string()).collect(),
        level,
        units: vec![total],
    }
}

/// Placement of the solver steps on the pool for a computing mode.
pub fn phases(steps: &[StepCost], layers: usize, mode: Mode) -> Result<Vec<Phase>> {
    mode.check_layers(layers)?;
    let all: Vec<&str> = steps.iter().map(|s| s.id.as_str()).collect();
    if mode == Mode::Mode3 {
        return Ok(vec![merged(steps, &all, Level::Central)]);
    }
    let mut out = Vec::new();
    if layers == 1 {
        for id in ["1", "2"] {
            out.extend(per_task(steps, id, Level::Leaf));
        }
    } else if mode == Mode::Mode1 {
        for (id, level) in [
            ("1.1", Level::Leaf),
            ("1.2", Level::Leaf),
            ("1.3", Level::Middle),
            ("1.4", Level::Middle),
            ("1.5", Level::Leaf),
            ("1.6", Level::Leaf),
            ("2", Level::Middle),
        ] {
            out.extend(per_task(steps, id, level));
        }
    } else {
        let ids = ["1.1", "1.2", "1.3", "1.4", "1.5", "1.6"];
        let groups = steps
            .iter()
            .flat_map(|s| s.tasks.iter().map(|t| t.group))
            .max()
            .map_or(0, |g| g + 1);
        let mut units = vec![0.0; groups];
        for s in steps.iter().filter(|s| ids.contains(&s.id.as_str())) {
            for t in &s.tasks {
                units[t.group] += t.flops;
            }
        }
        out.push(Phase {
            steps: ids.iter().map(|s| s.to_string()).collect(),
            level: Level::Middle,
            units,
        });
        out.extend(per_task(steps, "2", Level::Middle));
    }
    out.push(merged(steps, &["3"], Level::Central));
    out.push(merged(steps, &["4"], Level::Central));
    let par = if layers == 1 {
        Level::Leaf
    } else {
        Level::Middle
    };
    for id in ["5", "6"] {
        out.extend(per_task(steps, id, par));
    }
    Ok(out)
}

/// Longest-processing-time schedule of `units` on `cap` identical units.
pub fn makespan(units: &[f64], cap: Option<usize>) -> f64 {
    match cap {
        Some(c) if c >= 1 && c < units.len() => {
            let mut work: Vec<f64> = units.to_vec();
            work.sort_by(|a, b| b.total_cmp(a));
            let mut load = vec![0.0f64; c];
            for w in work {
                let (i, _) = load
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                load[i] += w;
            }
            load.into_iter().fold(0.0, f64::max)
        }
        _ => units.iter().copied().fold(0.0, f64::max),
    }
}

/// Sum over phases of the slowest unit's work divided by its level's power.
pub fn model_time(
    phases: &[Phase],
    profile: &PoolProfile,
    n: usize,
    units_cap: Option<usize>,
) -> f64 {
    phases
        .iter()
        .map(|p| makespan(&p.units, units_cap) / profile.power(p.level, n))
        .sum()
}

/// Grid side giving diagonal-to-cut size ratio `N^z`: the root of
/// `(r − 2d0)² r² = 4 (r − d0) d0 A N^z` with `A = parent_size / β_N`.
pub fn ratio_to_side(z: f64, n: usize, d0: f64, beta_n_km2: f64, parent_size: f64) -> Result<f64> {
    if !(d0 > 0.0) {
        return Err(DncError::InfeasibleRatio(format!(
            "threshold {d0} leaves no boundary strip"
        )));
    }
    if !(beta_n_km2 > 0.0 && parent_size > 0.0 && n > 0) {
        return Err(DncError::InfeasibleRatio(
            "density, size and N must be positive".into(),
        ));
    }
    let area = parent_size / (beta_n_km2 * 1e-6);
    let rhs = 4.0 * d0 * area * (n as f64).powf(z);
    let f = |r: f64| (r - 2.0 * d0).powi(2) * r * r - (r - d0) * rhs;
    let q = rhs.cbrt();
    let (mut lo, mut hi) = ((2.0 * d0).max(q), q + 2.0 * d0);
    if !(f(lo) <= 0.0 && f(hi) >= 0.0) {
        return Err(DncError::InfeasibleRatio(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    if r >= 2.0 * area.sqrt() {
        return Err(DncError::InfeasibleRatio(format!(
            "side {r} exceeds the parent area"
        )));
    }
    Ok(r)
}

/// Predicted average block sizes of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPrediction {
    pub n_d: f64,
    pub n_b: f64,
    pub m: f64,
}

/// `N_d ≈ (4 d0 β^{1/2} P N^z)^{2/3}`, `N_b = N_d N^{−z}`, `m = P / N_d` for
/// parent size `P` (`P = N` on the first layer).
pub fn predict_blocks(
    z: f64,
    n: usize,
    d0: f64,
    beta_n_km2: f64,
    parent_size: f64,
) -> BlockPrediction {
    let beta = beta_n_km2 * 1e-6;
    let nz = (n as f64).powf(z);
    let n_d = (4.0 * d0 * beta.sqrt() * parent_size * nz).powf(2.0 / 3.0);
    BlockPrediction {
        n_d,
        n_b: n_d / nz,
        m: parent_size / n_d,
    }
}

/// Single-layer plan kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleLayerMode {
    Parallel,
    Serial,
}

impl SingleLayerMode {
    pub fn mode(self) -> Mode {
        match self {
            SingleLayerMode::Parallel => Mode::Mode1,
            SingleLayerMode::Serial => Mode::Mode3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingleLayerPlan {
    pub mode: SingleLayerMode,
    pub z1: Rational64,
    pub order: Rational64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoLayerPlan {
    pub mode: Mode,
    pub z1: Rational64,
    pub z2: Rational64,
    pub order: Rational64,
    /// True when no region test matched and the orders were minimised directly.
    pub fallback: bool,
}

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

pub fn single_layer_orders(s: Rational64) -> (Rational64, Rational64) {
    (r(2, 1) - r(2, 3) * s, r(15, 7) - s)
}

pub fn optimal_single_layer(s: Rational64) -> SingleLayerPlan {
    let (parallel, serial) = single_layer_orders(s);
    if s <= r(3, 7) {
        SingleLayerPlan {
            mode: SingleLayerMode::Parallel,
            z1: -s / 3,
            order: parallel,
        }
    } else {
        SingleLayerPlan {
            mode: SingleLayerMode::Serial,
            z1: r(-1, 7),
            order: serial,
        }
    }
}

fn two_layer_candidate(mode: Mode, s1: Rational64, s2: Rational64) -> TwoLayerPlan {
    let (z1, z2, order) = match mode {
        Mode::Mode1 => (
            r(4, 23) - r(9, 23) * s1 + r(6, 23) * s2,
            -s2 / 2,
            r(42, 23) - r(14, 23) * s1 - r(6, 23) * s2,
        ),
        Mode::Mode2 => (
            r(1, 8) - r(3, 8) * s1 + r(3, 8) * s2,
            r(-3, 16) + s1 / 16 - s2 / 16,
            r(15, 8) - r(5, 8) * s1 - r(3, 8) * s2,
        ),
        Mode::Mode3 => (r(0, 1), r(-1, 6), r(2, 1) - s1),
    };
    TwoLayerPlan {
        mode,
        z1,
        z2,
        order,
        fallback: false,
    }
}

/// Closed-form orders of the three two-layer modes.
pub fn two_layer_orders(s1: Rational64, s2: Rational64) -> [TwoLayerPlan; 3] {
    [Mode::Mode1, Mode::Mode2, Mode::Mode3].map(|m| two_layer_candidate(m, s1, s2))
}

pub fn optimal_two_layer(s1: Rational64, s2: Rational64) -> TwoLayerPlan {
    let k = |n: i64| r(n, 1);
    let mode = if s1 + k(7) * s2 < k(3) && k(3) * s1 - k(2) * s2 < r(4, 3) {
        Some(Mode::Mode1)
    } else if s1 + k(7) * s2 >= k(3) && s1 - s2 < r(1, 3) {
        Some(Mode::Mode2)
    } else if k(3) * s1 - k(2) * s2 >= r(4, 3) && s1 - s2 >= r(1, 3) {
        Some(Mode::Mode3)
    } else {
        None
    };
    match mode {
        Some(m) => two_layer_candidate(m, s1, s2),
        None => {
            let mut best = two_layer_orders(s1, s2)
                .into_iter()
                .min_by_key(|p| p.order)
                .unwrap();
            best.fallback = true;
            best
        }
    }
}

/// Best-effort conversion of a float ratio to an exact rational.
pub fn rational(x: f64) -> Result<Rational64> {
    Rational64::approximate_float(x)
        .ok_or_else(|| DncError::InvalidArgument(format!("{x} is not representable")))
}

pub fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// A plan realised for a concrete network: z-ratios, grid sides, mode and order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub z: Vec<f64>,
    /// Exact z-ratios as `"p/q"` strings.
    pub z_exact: Vec<String>,
    pub sides: Vec<f64>,
    pub mode: Mode,
    pub order: f64,
    pub order_exact: String,
    pub predicted: Vec<BlockPrediction>,
    pub fallback: bool,
}

/// Grid sides and block predictions for a sequence of layer ratios.
/// More than two layers is experimental: there is no closed-form optimum.
pub fn realize_layers(
    z: &[f64],
    n: usize,
    d0: f64,
    beta_n_km2: f64,
) -> Result<(Vec<f64>, Vec<BlockPrediction>)> {
    let mut parent = n as f64;
    let mut sides = Vec::new();
    let mut preds = Vec::new();
    for (t, &zt) in z.iter().enumerate() {
        let side = ratio_to_side(zt, n, d0, beta_n_km2, parent)?;
        if let Some(&prev) = sides.last() {
            if side > prev {
                return Err(DncError::InfeasibleRatio(format!(
                    "layer {} side {side} exceeds layer {t} side {prev}",
                    t + 1
                )));
            }
        }
        let p = predict_blocks(zt, n, d0, beta_n_km2, parent);
        parent = p.n_d;
        sides.push(side);
        preds.push(p);
    }
    Ok((sides, preds))
}

fn fmt_ratio(x: Rational64) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn plan_single_layer(s: Rational64, n: usize, d0: f64, beta_n_km2: f64) -> Result<ClusterPlan> {
    let p = optimal_single_layer(s);
    let z = vec![to_f64(p.z1)];
    let (sides, predicted) = realize_layers(&z, n, d0, beta_n_km2)?;
    Ok(ClusterPlan {
        z,
        z_exact: vec![fmt_ratio(p.z1)],
        sides,
        mode: p.mode.mode(),
        order: to_f64(p.order),
        order_exact: fmt_ratio(p.order),
        predicted,
        fallback: false,
    })
}

pub fn plan_two_layer(
    s1: Rational64,
    s2: Rational64,
    n: usize,
    d0: f64,
    beta_n_km2: f64,
) -> Result<ClusterPlan> {
    let p = optimal_two_layer(s1, s2);
    let z = vec![to_f64(p.z1), to_f64(p.z2)];
    let (sides, predicted) = realize_layers(&z, n, d0, beta_n_km2)?;
    Ok(ClusterPlan {
        z,
        z_exact: vec![fmt_ratio(p.z1), fmt_ratio(p.z2)],
        sides,
        mode: p.mode,
        order: to_f64(p.order),
        order_exact: fmt_ratio(p.order),
        predicted,
        fallback: p.fallback,
    })
}

/// Inputs of [`cost_model`] besides the structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostQuery {
    pub profile: PoolProfile,
    pub mode: Mode,
    /// 1 or 2; a deeper structure is costed on its first `layers` layers.
    pub layers: usize,
    /// Mean nonzeros per row of the whole matrix.
    pub l1: f64,
    /// Mean nonzeros per row inside the layer-1 diagonal blocks.
    pub l2: f64,
    pub units_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub steps: Vec<String>,
    pub level: Level,
    pub unit_count: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub mode: Mode,
    pub layers: usize,
    pub n: usize,
    pub steps: Vec<StepCost>,
    pub phases: Vec<PhaseTime>,
    pub total_flops: f64,
    pub model_time: f64,
}

fn push(steps: &mut Vec<StepCost>, id: &str, group: usize, flops: f64) {
    match steps.iter_mut().find(|s| s.id == id) {
        Some(s) => s.tasks.push(Task { group, flops }),
        None => steps.push(StepCost {
            id: id.into(),
            tasks: vec![Task { group, flops }],
        }),
    }
}

/// Flop counts of the operation tables applied to the actual block sizes.
pub fn table_costs(tree: &BlockTree, layers: usize, l1: f64, l2: f64) -> Vec<StepCost> {
    let mut steps = Vec::new();
    let m = tree.diag.len() as f64;
    let nc = tree.cut.len() as f64;
    for (i, blk) in tree.diag.iter().enumerate() {
        let ni = blk.len() as f64;
        if layers == 1 {
            push(&mut steps, "1", i, ni.powi(3));
        } else {
            let (sub, nc2): (&[BlockTree], f64) = if blk.partitioned {
                (&blk.diag, blk.cut.len() as f64)
            } else {
                (&[], ni)
            };
            let m2 = sub.len() as f64;
            for b in sub {
                let nj = b.len() as f64;
                push(&mut steps, "1.1", i, nj.powi(3));
                push(&mut steps, "1.2", i, l2 / m2 * nc2 * nj);
            }
            push(&mut steps, "1.3", i, m2 * nc2 * nc2);
            push(&mut steps, "1.4", i, nc2 * nc2 * ni);
            for b in sub {
                let nj = b.len() as f64;
                push(&mut steps, "1.5", i, l2 / m2 * nc2 * ni);
                push(&mut steps, "1.6", i, nj * nj * ni);
            }
        }
        push(
            &mut steps,
            "2",
            i,
            if m > 0.0 { l1 / m * nc * ni } else { 0.0 },
        );
    }
    push(&mut steps, "3", 0, m * nc * nc);
    push(&mut steps, "4", 0, nc.powi(3));
    for (i, blk) in tree.diag.iter().enumerate() {
        let ni = blk.len() as f64;
        push(&mut steps, "5", i, l1 / m * nc);
        push(&mut steps, "6", i, ni * ni);
    }
    steps
}

pub fn cost_model(structure: &BlockStructure, q: &CostQuery) -> Result<CostReport> {
    q.profile.validate()?;
    if q.layers == 0 || q.layers > 2 || q.layers > structure.layer_count() {
        return Err(DncError::ModeMismatch {
            mode: q.mode.name().into(),
            layers: q.layers,
        });
    }
    q.mode.check_layers(q.layers)?;
    let steps = table_costs(&structure.blocks(), q.layers, q.l1, q.l2);
    Ok(report(steps, structure.n(), q))
}

fn report(steps: Vec<StepCost>, n: usize, q: &CostQuery) -> CostReport {
    let phases = phases(&steps, q.layers, q.mode).expect("layers checked by caller");
    let times: Vec<PhaseTime> = phases
        .iter()
        .map(|p| PhaseTime {
            steps: p.steps.clone(),
            level: p.level,
            unit_count: p.units.len(),
            time: makespan(&p.units, q.units_cap) / q.profile.power(p.level, n),
        })
        .collect();
    CostReport {
        mode: q.mode,
        layers: q.layers,
        n,
        total_flops: steps.iter().map(StepCost::total).sum(),
        model_time: times.iter().map(|t| t.time).sum(),
        steps,
        phases: times,
    }
}

/// Model time of one dense `N×N` solve on a single unit.
pub fn dense_baseline(n: usize) -> f64 {
    let tree = BlockTree {
        range: 0..n,
        diag: vec![],
        cut: 0..n,
        partitioned: true,
    };
    let steps = table_costs(&tree, 1, 0.0, 0.0);
    let q = CostQuery {
        profile: PoolProfile::default(),
        mode: Mode::Mode3,
        layers: 1,
        l1: 0.0,
        l2: 0.0,
        units_cap: None,
    };
    report(steps, n, &q).model_time
}

/// CSV of the single-layer optimal order against `s`.
pub fn order_curve_csv(s_values: &[Rational64]) -> String {
    let mut out = String::from("s,parallel_order,serial_order,optimal_order,mode,z1\n");
    for &s in s_values {
        let (par, ser) = single_layer_orders(s);
        let p = optimal_single_layer(s);
        let mode = match p.mode {
            SingleLayerMode::Parallel => "parallel",
            SingleLayerMode::Serial => "serial",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            to_f64(s),
            to_f64(par),
            to_f64(ser),
            to_f64(p.order),
            mode,
            to_f64(p.z1)
        ));
    }
    out
}

/// CSV of the two-layer optimal order over an `(s1, s2)` grid.
pub fn order_grid_csv(s1_values: &[Rational64], s2_values: &[Rational64]) -> String {
    let mut out = String::from("s1,s2,order,mode,z1,z2,fallback\n");
    for &s1 in s1_values {
        for &s2 in s2_values {
            let p = optimal_two_layer(s1, s2);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                to_f64(s1),
                to_f64(s2),
                to_f64(p.order),
                p.mode.name(),
                to_f64(p.z1),
                to_f64(p.z2),
                p.fallback
            ));
        }
    }
    out
}

/// `0, 1/k, …, hi` as exact rationals.
pub fn rational_grid(hi: i64, steps_per_unit: i64) -> Vec<Rational64> {
    (0..=hi * steps_per_unit)
        .map(|i| Rational64::new(i, steps_per_unit))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_points() {
        let p = optimal_single_layer(r(0, 1));
        assert_eq!(
            (p.mode, p.z1, p.order),
            (SingleLayerMode::Parallel, r(0, 1), r(2, 1))
        );
        let p = optimal_single_layer(r(3, 7));
        assert_eq!(p.mode, SingleLayerMode::Parallel);
        assert_eq!(p.order, r(12, 7));
        assert_eq!(single_layer_orders(r(3, 7)).1, r(12, 7));
        let p = optimal_single_layer(r(1, 1));
        assert_eq!(
            (p.mode, p.z1, p.order),
            (SingleLayerMode::Serial, r(-1, 7), r(8, 7))
        );
    }

    #[test]
    fn two_layer_points() {
        let p = optimal_two_layer(r(0, 1), r(0, 1));
        assert_eq!(
            (p.mode, p.order, p.z1, p.z2),
            (Mode::Mode1, r(42, 23), r(4, 23), r(0, 1))
        );
        let p = optimal_two_layer(r(1, 1), r(1, 1));
        assert_eq!((p.mode, p.order), (Mode::Mode2, r(7, 8)));
        let p = optimal_two_layer(r(1, 1), r(0, 1));
        assert_eq!(
            (p.mode, p.order, p.z1, p.z2),
            (Mode::Mode3, r(1, 1), r(0, 1), r(-1, 6))
        );
        assert!(!p.fallback);
    }

    #[test]
    fn ratio_root_is_bracketed_and_accurate() {
        let (n, d0, beta) = (4000usize, 200.0, 10.0);
        for z in [-0.3, 0.0, 0.2] {
            let side = ratio_to_side(z, n, d0, beta, n as f64).unwrap();
            let area = n as f64 / (beta * 1e-6);
            let rhs = 4.0 * d0 * area * (n as f64).powf(z);
            let q = rhs.cbrt();
            assert!(side >= q && side <= q + 2.0 * d0);
            let lhs = (side - 2.0 * d0).powi(2) * side * side;
            assert!((lhs - (side - d0) * rhs).abs() <= 1e-6 * lhs);
        }
        assert!(ratio_to_side(0.0, 100, 0.0, 10.0, 100.0).is_err());
    }

    #[test]
    fn equal_ratio_prediction() {
        let p = predict_blocks(0.0, 2000, 100.0, 10.0, 2000.0);
        let expect = (4.0 * 100.0 * (1e-5f64).sqrt() * 2000.0).powf(2.0 / 3.0);
        assert!((p.n_d - expect).abs() < 1e-9 && (p.n_b - expect).abs() < 1e-9);
        let m = (400.0f64).powf(-2.0 / 3.0) * (1e-5f64).powf(-1.0 / 3.0) * 2000f64.powf(1.0 / 3.0);
        assert!((p.m - m).abs() < 1e-9 * m);
    }

    #[test]
    fn lpt_schedule() {
        assert_eq!(makespan(&[3.0, 3.0, 2.0, 2.0, 2.0], Some(2)), 7.0);
        assert_eq!(makespan(&[3.0, 1.0], None), 3.0);
        assert_eq!(makespan(&[3.0, 1.0], Some(1)), 4.0);
    }

    #[test]
    fn dense_baseline_is_cubic() {
        let t = dense_baseline(100);
        assert_eq!(t, 1e6);
    }
}
