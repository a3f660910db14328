//! Direct Schur-complement solvers for (nested) DBBD systems.
//!
//! Per-cluster work runs as independent tasks on a worker pool; the cut-node
//! system is assembled from the cluster contributions in ascending cluster
//! order, so the result does not depend on the number of workers. The
//! computing mode only changes how the recorded flops are placed on the
//! modelled pool, never the arithmetic.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelSet;
use crate::cluster::{BlockTree, DbbdSystem};
use crate::error::{DncError, Result};
use crate::linalg::{self, count, CMat, Flops, C64};
use crate::planner::{self, Mode, Phase, PoolProfile, StepCost, Task};
use crate::sparse::CscMatrix;

/// Flops of one task: the closed-form count and the count reported by the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFlops {
    pub group: usize,
    pub analytic: u64,
    pub measured: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub mode: Mode,
    pub layers: usize,
    pub n: usize,
    /// Step id (`"1"`…`"6"`, `"1.1"`…`"1.6"`) to its tasks.
    pub steps: BTreeMap<String, Vec<TaskFlops>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub flops: u64,
    pub measured_flops: u64,
    pub unit_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceExport {
    pub mode: Mode,
    pub steps: BTreeMap<String, StepSummary>,
    pub critical_path_model_time: f64,
}

impl SolveTrace {
    fn new(mode: Mode, layers: usize, n: usize) -> Self {
        SolveTrace {
            mode,
            layers,
            n,
            steps: BTreeMap::new(),
        }
    }

    fn record(&mut self, id: &str, group: usize, analytic: u64, measured: Flops) {
        self.steps.entry(id.into()).or_default().push(TaskFlops {
            group,
            analytic,
            measured: measured.0,
        });
    }

    pub fn total_flops(&self) -> u64 {
        self.steps.values().flatten().map(|t| t.analytic).sum()
    }

    pub fn total_measured(&self) -> u64 {
        self.steps.values().flatten().map(|t| t.measured).sum()
    }

    pub fn step_costs(&self) -> Vec<StepCost> {
        self.steps
            .iter()
            .map(|(id, tasks)| StepCost {
                id: id.clone(),
                tasks: tasks
                    .iter()
                    .map(|t| Task {
                        group: t.group,
                        flops: t.analytic as f64,
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn phases(&self) -> Vec<Phase> {
        planner::phases(&self.step_costs(), self.layers, self.mode)
            .expect("mode validated at solve time")
    }

    pub fn critical_path_model_time(&self, profile: &PoolProfile) -> f64 {
        planner::model_time(&self.phases(), profile, self.n, None)
    }

    pub fn export(&self, profile: &PoolProfile) -> TraceExport {
        TraceExport {
            mode: self.mode,
            steps: self
                .steps
                .iter()
                .map(|(id, t)| {
                    let s = StepSummary {
                        flops: t.iter().map(|x| x.analytic).sum(),
                        measured_flops: t.iter().map(|x| x.measured).sum(),
                        unit_count: t.len(),
                    };
                    (id.clone(), s)
                })
                .collect(),
            critical_path_model_time: self.critical_path_model_time(profile),
        }
    }

    pub fn to_json(&self, profile: &PoolProfile) -> Result<String> {
        Ok(serde_json::to_string(&self.export(profile))?)
    }
}

/// Border of one diagonal block against its parent's cut block: the cut
/// columns it touches and the dense slice `A[block, those columns]`.
struct Border {
    cols: Vec<usize>,
    e: CMat,
    /// `(local row, local col, value)` of the stored entries.
    entries: Vec<(usize, usize, C64)>,
}

fn borders(a: &CscMatrix, tree: &BlockTree) -> Vec<Border> {
    let start = tree.range.start;
    let mut block_of = vec![usize::MAX; tree.cut.start - start];
    for (b, blk) in tree.diag.iter().enumerate() {
        for i in blk.range.clone() {
            block_of[i - start] = b;
        }
    }
    let mut raw: Vec<Vec<(usize, usize, C64)>> = vec![Vec::new(); tree.diag.len()];
    for (q, g) in tree.cut.clone().enumerate() {
        for (row, v) in a.col(g) {
            if row >= start && row < tree.cut.start {
                let b = block_of[row - start];
                raw[b].push((row - tree.diag[b].range.start, q, v));
            }
        }
    }
    raw.into_iter()
        .zip(&tree.diag)
        .map(|(entries, blk)| {
            let mut cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut local = BTreeMap::new();
            for (i, &c) in cols.iter().enumerate() {
                local.insert(c, i);
            }
            let mut e = CMat::zeros(blk.len(), cols.len());
            let entries: Vec<_> = entries
                .into_iter()
                .map(|(r, c, v)| (r, local[&c], v))
                .collect();
            for &(r, c, v) in &entries {
                e[(r, c)] = v;
            }
            Border { cols, e, entries }
        })
        .collect()
}

fn column(v: &[C64]) -> CMat {
    CMat::from_column_slice(v.len(), 1, v)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DncError::InvalidArgument(format!("worker pool: {e}")))
}

/// Cut-node assembly and solve shared by both solvers.
struct CutSolve {
    omega_c: Vec<C64>,
}

/// Steps 3 and 4: `S = A_c − Σ S_i`, `y_c − Σ t_i`, then `ω_c = S⁻¹ (…)`.
fn solve_cut(
    a: &CscMatrix,
    tree: &BlockTree,
    rhs: &[C64],
    contributions: &[(&[usize], &CMat, &CMat)],
    trace: &mut SolveTrace,
) -> Result<CutSolve> {
    let cut: Vec<usize> = tree.cut.clone().collect();
    let nc = cut.len();
    let mut s = a.dense_block(&cut, &cut);
    let mut rc = column(&rhs[tree.cut.clone()]);
    let mut f3 = Flops::default();
    let mut analytic3 = 0u64;
    for &(cols, si, ti) in contributions {
        for (q, &cq) in cols.iter().enumerate() {
            for (p, &cp) in cols.iter().enumerate() {
                s[(cp, cq)] -= si[(p, q)];
            }
            f3.add(cols.len());
            rc[(cq, 0)] -= ti[(q, 0)];
            f3.add(1);
        }
        analytic3 += (cols.len() * cols.len() + cols.len()) as u64;
    }
    trace.record("3", 0, analytic3, f3);
    let mut f4 = Flops::default();
    linalg::cholesky_in_place(&mut s, &mut f4)?;
    linalg::forward_solve_in_place(&s, &mut rc, &mut f4);
    linalg::adjoint_backward_solve_in_place(&s, &mut rc, &mut f4);
    trace.record(
        "4",
        0,
        count::cholesky(nc) + 2 * count::triangular_solve(nc, 1),
        f4,
    );
    Ok(CutSolve {
        omega_c: rc.iter().copied().collect(),
    })
}

/// Step 5: `y_i − A_ciᴴ ω_c` using the stored border entries.
fn border_residual(y: &[C64], border: &Border, omega_c: &[C64], flops: &mut Flops) -> CMat {
    let mut r = column(y);
    for &(row, c, v) in &border.entries {
        r[(row, 0)] -= v * omega_c[border.cols[c]];
    }
    flops.add(border.entries.len());
    r
}

struct Forward {
    l: CMat,
    s: CMat,
    t: CMat,
    flops: [(u64, Flops); 2],
}

/// Steps 1 and 2 for one diagonal block with a retained Cholesky factor.
fn forward_factor(a: &CscMatrix, blk: &BlockTree, border: &Border, y: &[C64]) -> Result<Forward> {
    let idx: Vec<usize> = blk.range.clone().collect();
    let ni = idx.len();
    let ci = border.cols.len();
    let mut l = a.dense_block(&idx, &idx);
    let mut f1 = Flops::default();
    linalg::cholesky_in_place(&mut l, &mut f1)?;
    let mut f2 = Flops::default();
    let mut w = border.e.clone();
    linalg::forward_solve_in_place(&l, &mut w, &mut f2);
    let s = linalg::adjoint_mul(&w, &w, &mut f2);
    let mut z = column(y);
    linalg::forward_solve_in_place(&l, &mut z, &mut f2);
    let t = linalg::adjoint_mul(&w, &z, &mut f2);
    let a2 = count::triangular_solve(ni, ci)
        + count::product(ci, ni, ci)
        + count::triangular_solve(ni, 1)
        + count::product(ci, ni, 1);
    Ok(Forward {
        l,
        s,
        t,
        flops: [(count::cholesky(ni), f1), (a2, f2)],
    })
}

fn check_system(sys: &DbbdSystem) -> Result<()> {
    let n = sys.n();
    if sys.a.nrows() != n || sys.a.ncols() != n {
        return Err(DncError::SizeMismatch {
            expected: n,
            got: sys.a.nrows(),
        });
    }
    if sys.structure.n() != n {
        return Err(DncError::SizeMismatch {
            expected: n,
            got: sys.structure.n(),
        });
    }
    Ok(())
}

/// Single-layer solve of `Â ω = y` using the layer-1 blocks; deeper layers
/// are ignored. `Mode1` places steps 1, 2, 5, 6 on parallel units, `Mode3`
/// runs everything centrally.
pub fn solve_single_layer(sys: &DbbdSystem, workers: usize) -> Result<(Vec<C64>, SolveTrace)> {
    solve_single_layer_mode(sys, workers, Mode::Mode1)
}

pub fn solve_single_layer_mode(
    sys: &DbbdSystem,
    workers: usize,
    mode: Mode,
) -> Result<(Vec<C64>, SolveTrace)> {
    check_system(sys)?;
    mode.check_layers(1)?;
    let tree = sys.structure.blocks();
    let a = &sys.a;
    let y = &sys.rhs;
    let bs = borders(a, &tree);
    let mut trace = SolveTrace::new(mode, 1, sys.n());
    let pool = pool(workers)?;

    let fw: Vec<Forward> = pool.install(|| {
        tree.diag
            .par_iter()
            .zip(&bs)
            .map(|(blk, b)| forward_factor(a, blk, b, &y[blk.range.clone()]))
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, f) in fw.iter().enumerate() {
        trace.record("1", i, f.flops[0].0, f.flops[0].1);
        trace.record("2", i, f.flops[1].0, f.flops[1].1);
    }
    let contrib: Vec<_> = bs
        .iter()
        .zip(&fw)
        .map(|(b, f)| (b.cols.as_slice(), &f.s, &f.t))
        .collect();
    let cut = solve_cut(a, &tree, y, &contrib, &mut trace)?;

    let back: Vec<(Vec<C64>, Flops, Flops)> = pool.install(|| {
        tree.diag
            .par_iter()
            .zip(&bs)
            .zip(&fw)
            .map(|((blk, b), f)| {
                let mut f5 = Flops::default();
                let mut r = border_residual(&y[blk.range.clone()], b, &cut.omega_c, &mut f5);
                let mut f6 = Flops::default();
                linalg::forward_solve_in_place(&f.l, &mut r, &mut f6);
                linalg::adjoint_backward_solve_in_place(&f.l, &mut r, &mut f6);
                (r.iter().copied().collect(), f5, f6)
            })
            .collect()
    });
    let mut omega = vec![C64::new(0.0, 0.0); sys.n()];
    for (i, ((blk, b), (w, f5, f6))) in tree.diag.iter().zip(&bs).zip(back).enumerate() {
        trace.record("5", i, b.entries.len() as u64, f5);
        trace.record("6", i, 2 * count::triangular_solve(blk.len(), 1), f6);
        omega[blk.range.clone()].copy_from_slice(&w);
    }
    omega[tree.cut.clone()].copy_from_slice(&cut.omega_c);
    Ok((omega, trace))
}

/// Flops of one nested inversion, per step and per sub-task.
#[derive(Default)]
struct NestedFlops {
    steps: Vec<(&'static str, u64, Flops)>,
}

impl NestedFlops {
    fn push(&mut self, id: &'static str, analytic: u64, f: Flops) {
        self.steps.push((id, analytic, f));
    }
}

/// Explicit inverse of the diagonal block `blk` of `a` via its own DBBD
/// structure. A dense leaf is treated as a partition with no diagonal
/// blocks, so the whole block is the cut.
fn nested_inverse(a: &CscMatrix, blk: &BlockTree) -> Result<(CMat, NestedFlops)> {
    let owned;
    let tree = if blk.partitioned {
        blk
    } else {
        owned = BlockTree {
            range: blk.range.clone(),
            diag: vec![],
            cut: blk.range.clone(),
            partitioned: true,
        };
        &owned
    };
    let base = tree.range.start;
    let ni = tree.len();
    let nc = tree.cut.len();
    let bs = borders(a, tree);
    let mut nf = NestedFlops::default();

    // 1.1 and 1.2: factor each sub-block, W_j = L_j⁻¹ E_j, S_j = W_jᴴ W_j, G_j = L_j⁻ᴴ W_j
    let sub: Vec<(CMat, CMat, CMat, Flops, Flops)> = tree
        .diag
        .par_iter()
        .zip(&bs)
        .map(|(sb, b)| {
            let idx: Vec<usize> = sb.range.clone().collect();
            let mut l = a.dense_block(&idx, &idx);
            let mut f1 = Flops::default();
            linalg::cholesky_in_place(&mut l, &mut f1)?;
            let mut f2 = Flops::default();
            let mut w = b.e.clone();
            linalg::forward_solve_in_place(&l, &mut w, &mut f2);
            let s = linalg::adjoint_mul(&w, &w, &mut f2);
            let mut g = w;
            linalg::adjoint_backward_solve_in_place(&l, &mut g, &mut f2);
            Ok((l, s, g, f1, f2))
        })
        .collect::<Result<Vec<_>>>()?;
    for ((sb, b), (_, _, _, f1, f2)) in tree.diag.iter().zip(&bs).zip(&sub) {
        let (nj, cj) = (sb.len(), b.cols.len());
        nf.push("1.1", count::cholesky(nj), *f1);
        nf.push(
            "1.2",
            2 * count::triangular_solve(nj, cj) + count::product(cj, nj, cj),
            *f2,
        );
    }

    // 1.3: Schur complement of the sub-cut block
    let cut: Vec<usize> = tree.cut.clone().collect();
    let mut s = a.dense_block(&cut, &cut);
    let mut f3 = Flops::default();
    let mut a3 = 0u64;
    for (b, (_, sj, _, _, _)) in bs.iter().zip(&sub) {
        for (q, &cq) in b.cols.iter().enumerate() {
            for (p, &cp) in b.cols.iter().enumerate() {
                s[(cp, cq)] -= sj[(p, q)];
            }
            f3.add(b.cols.len());
        }
        a3 += (b.cols.len() * b.cols.len()) as u64;
    }
    nf.push("1.3", a3, f3);

    // 1.4: X_c = S⁻¹ [−B_c1 B_11⁻¹, …, −B_cm B_mm⁻¹, I]
    let mut x_c = CMat::zeros(nc, ni);
    for ((sb, b), (_, _, g, _, _)) in tree.diag.iter().zip(&bs).zip(&sub) {
        let off = sb.range.start - base;
        for (q, &cq) in b.cols.iter().enumerate() {
            for p in 0..sb.len() {
                x_c[(cq, off + p)] = -g[(p, q)].conj();
            }
        }
    }
    let cut_off = tree.cut.start - base;
    for q in 0..nc {
        x_c[(q, cut_off + q)] = C64::new(1.0, 0.0);
    }
    let mut f4 = Flops::default();
    linalg::cholesky_in_place(&mut s, &mut f4)?;
    linalg::forward_solve_in_place(&s, &mut x_c, &mut f4);
    linalg::adjoint_backward_solve_in_place(&s, &mut x_c, &mut f4);
    nf.push(
        "1.4",
        count::cholesky(nc) + 2 * count::triangular_solve(nc, ni),
        f4,
    );

    // 1.5 and 1.6: X_j = B_jj⁻¹ (I_j − B_cjᴴ X_c)
    let rows: Vec<(CMat, Flops, Flops)> = tree
        .diag
        .par_iter()
        .zip(&bs)
        .zip(&sub)
        .map(|((sb, b), (l, _, _, _, _))| {
            let off = sb.range.start - base;
            let mut m = CMat::zeros(sb.len(), ni);
            for p in 0..sb.len() {
                m[(p, off + p)] = C64::new(1.0, 0.0);
            }
            let mut f5 = Flops::default();
            for col in 0..ni {
                for &(r, c, v) in &b.entries {
                    m[(r, col)] -= v * x_c[(b.cols[c], col)];
                }
                f5.add(b.entries.len());
            }
            let mut f6 = Flops::default();
            linalg::forward_solve_in_place(l, &mut m, &mut f6);
            linalg::adjoint_backward_solve_in_place(l, &mut m, &mut f6);
            (m, f5, f6)
        })
        .collect();
    let mut x = CMat::zeros(ni, ni);
    for ((sb, b), (m, f5, f6)) in tree.diag.iter().zip(&bs).zip(rows) {
        nf.push("1.5", (b.entries.len() * ni) as u64, f5);
        nf.push("1.6", 2 * count::triangular_solve(sb.len(), ni), f6);
        x.view_mut((sb.range.start - base, 0), (sb.len(), ni))
            .copy_from(&m);
    }
    x.view_mut((cut_off, 0), (nc, ni)).copy_from(&x_c);
    Ok((x, nf))
}

/// Explicit inverse of a Hermitian positive definite DBBD matrix using its
/// layer-1 structure as the sub-blocks.
pub fn invert_block_nested(sys: &DbbdSystem, workers: usize) -> Result<(CMat, SolveTrace)> {
    check_system(sys)?;
    let tree = sys.structure.blocks();
    let (x, nf) = pool(workers)?.install(|| nested_inverse(&sys.a, &tree))?;
    let mut trace = SolveTrace::new(Mode::Mode1, 2, sys.n());
    for (id, an, f) in nf.steps {
        trace.record(id, 0, an, f);
    }
    Ok((x, trace))
}

/// Two-layer solve: each layer-1 diagonal block is inverted through its
/// nested structure, then the layer-1 Schur complement is solved.
pub fn solve_multi_layer(
    sys: &DbbdSystem,
    workers: usize,
    mode: Mode,
) -> Result<(Vec<C64>, SolveTrace)> {
    check_system(sys)?;
    let layers = sys.structure.layer_count();
    if layers != 2 {
        return Err(DncError::ModeMismatch {
            mode: mode.name().into(),
            layers,
        });
    }
    mode.check_layers(layers)?;
    let tree = sys.structure.blocks();
    let a = &sys.a;
    let y = &sys.rhs;
    let bs = borders(a, &tree);
    let mut trace = SolveTrace::new(mode, 2, sys.n());
    let pool = pool(workers)?;

    struct Outer {
        x: CMat,
        s: CMat,
        t: CMat,
        nested: NestedFlops,
        f2: Flops,
    }
    let outer: Vec<Outer> = pool.install(|| {
        tree.diag
            .par_iter()
            .zip(&bs)
            .map(|(blk, b)| {
                let (x, nested) = nested_inverse(a, blk)?;
                let mut f2 = Flops::default();
                let f = linalg::mul(&x, &b.e, &mut f2);
                let s = linalg::adjoint_mul(&b.e, &f, &mut f2);
                let u = linalg::mul(&x, &column(&y[blk.range.clone()]), &mut f2);
                let t = linalg::adjoint_mul(&b.e, &u, &mut f2);
                Ok(Outer {
                    x,
                    s,
                    t,
                    nested,
                    f2,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, ((blk, b), o)) in tree.diag.iter().zip(&bs).zip(&outer).enumerate() {
        for &(id, an, f) in &o.nested.steps {
            trace.record(id, i, an, f);
        }
        let (ni, ci) = (blk.len(), b.cols.len());
        let a2 = count::product(ni, ni, ci)
            + count::product(ci, ni, ci)
            + count::product(ni, ni, 1)
            + count::product(ci, ni, 1);
        trace.record("2", i, a2, o.f2);
    }
    let contrib: Vec<_> = bs
        .iter()
        .zip(&outer)
        .map(|(b, o)| (b.cols.as_slice(), &o.s, &o.t))
        .collect();
    let cut = solve_cut(a, &tree, y, &contrib, &mut trace)?;

    let back: Vec<(Vec<C64>, Flops, Flops)> = pool.install(|| {
        tree.diag
            .par_iter()
            .zip(&bs)
            .zip(&outer)
            .map(|((blk, b), o)| {
                let mut f5 = Flops::default();
                let r = border_residual(&y[blk.range.clone()], b, &cut.omega_c, &mut f5);
                let mut f6 = Flops::default();
                let w = linalg::mul(&o.x, &r, &mut f6);
                (w.iter().copied().collect(), f5, f6)
            })
            .collect()
    });
    let mut omega = vec![C64::new(0.0, 0.0); sys.n()];
    for (i, ((blk, b), (w, f5, f6))) in tree.diag.iter().zip(&bs).zip(back).enumerate() {
        trace.record("5", i, b.entries.len() as u64, f5);
        trace.record("6", i, count::product(blk.len(), blk.len(), 1), f6);
        omega[blk.range.clone()].copy_from_slice(&w);
    }
    omega[tree.cut.clone()].copy_from_slice(&cut.omega_c);
    Ok((omega, trace))
}

/// Dispatch on the structure's layer count.
pub fn solve(sys: &DbbdSystem, workers: usize, mode: Mode) -> Result<(Vec<C64>, SolveTrace)> {
    if sys.structure.layer_count() >= 2 {
        solve_multi_layer(sys, workers, mode)
    } else {
        solve_single_layer_mode(sys, workers, mode)
    }
}

/// `x̂ = P^{1/2} Ĥᴴ ω` for `ω` in original RRH order. Returns the estimate and
/// the number of multiply-adds performed.
pub fn detect_from_omega(
    omega: &[C64],
    h_hat: &CscMatrix,
    powers: &[f64],
) -> Result<(Vec<C64>, u64)> {
    if omega.len() != h_hat.nrows() {
        return Err(DncError::SizeMismatch {
            expected: h_hat.nrows(),
            got: omega.len(),
        });
    }
    if powers.len() != h_hat.ncols() {
        return Err(DncError::SizeMismatch {
            expected: h_hat.ncols(),
            got: powers.len(),
        });
    }
    let (mut x, ops) = h_hat.adjoint_mul_vec(omega);
    for (xk, p) in x.iter_mut().zip(powers) {
        *xk *= p.sqrt();
    }
    Ok((x, ops + powers.len() as u64))
}

/// Convenience wrapper taking the channel set directly.
pub fn detect_from_channel(omega: &[C64], ch: &ChannelSet) -> Result<(Vec<C64>, u64)> {
    let (h_hat, _) = crate::channel::sparsify(ch);
    detect_from_omega(omega, &h_hat, &ch.powers)
}

/// SHA-256 over the little-endian bits of the real and imaginary parts.
pub fn checksum(v: &[C64]) -> String {
    let mut h = Sha256::new();
    for z in v {
        h.update(z.re.to_bits().to_le_bytes());
        h.update(z.im.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Dense reference solve of `A ω = y` through nalgebra's Cholesky.
pub fn dense_reference(a: &CscMatrix, y: &[C64]) -> Result<Vec<C64>> {
    let chol = a.to_dense().cholesky().ok_or(DncError::Indefinite {
        index: 0,
        pivot: f64::NAN,
    })?;
    Ok(chol.solve(&column(y)).iter().copied().collect())
}

/// ‖a − b‖ / ‖b‖ for vectors.
pub fn vector_relative_error(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{label_rrhs, nest_labelling, permute_to_dbbd};
    use crate::netgen::{generate_layout, AreaGeometry};
    use rand::Rng;

    /// Random Hermitian PD matrix with the zero pattern implied by a labelling:
    /// couple two RRHs only when they are closer than `2 d0`.
    fn random_system(n: usize, seed: u64, layers: usize) -> DbbdSystem {
        let g = AreaGeometry::rectangle(4000.0, 4000.0, 1.0).unwrap();
        let l = generate_layout(g, n, 1, seed).unwrap();
        let d0 = 150.0;
        let mut s = label_rrhs(&l, 1400.0, d0).unwrap();
        if layers == 2 {
            s = nest_labelling(&s, &l, 600.0, d0).unwrap();
        }
        let mut rng = crate::rng::stream(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(n as f64, 0.0)));
            for j in 0..i {
                let [a, b] = l.rrh_positions[i];
                let [c, d] = l.rrh_positions[j];
                if (a - c).hypot(b - d) < 2.0 * d0 {
                    let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    t.push((i, j, v));
                    t.push((j, i, v.conj()));
                }
            }
        }
        let a = CscMatrix::from_triplets(n, n, t);
        let y: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        permute_to_dbbd(&a, &s, &y).unwrap()
    }

    #[test]
    fn single_layer_matches_dense() {
        let sys = random_system(200, 1, 1);
        assert!(crate::cluster::verify_dbbd(&sys).ok);
        let (w, trace) = solve_single_layer(&sys, 2).unwrap();
        let r = dense_reference(&sys.a, &sys.rhs).unwrap();
        assert!(vector_relative_error(&w, &r) < 1e-12);
        assert_eq!(trace.total_flops(), trace.total_measured());
    }

    #[test]
    fn two_layer_matches_single_layer() {
        let sys = random_system(300, 2, 2);
        assert!(crate::cluster::verify_dbbd(&sys).ok);
        let (w1, _) = solve_single_layer(&sys, 1).unwrap();
        let (w2, t1) = solve_multi_layer(&sys, 3, Mode::Mode1).unwrap();
        let (w3, t3) = solve_multi_layer(&sys, 1, Mode::Mode3).unwrap();
        assert!(vector_relative_error(&w2, &w1) < 1e-11);
        assert_eq!(checksum(&w2), checksum(&w3));
        assert_eq!(t1.total_flops(), t1.total_measured());
        let p = PoolProfile::default();
        assert!(t1.critical_path_model_time(&p) < t3.critical_path_model_time(&p));
    }

    #[test]
    fn identity_and_mode_errors() {
        let mut sys = random_system(50, 3, 1);
        sys.a = CscMatrix::from_triplets(
            50,
            50,
            (0..50).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        );
        let (w, _) = solve_single_layer(&sys, 1).unwrap();
        assert_eq!(w, sys.rhs);
        assert!(solve_single_layer_mode(&sys, 1, Mode::Mode2).is_err());
        assert!(solve_multi_layer(&sys, 1, Mode::Mode1).is_err());
    }

    #[test]
    fn nested_inverse_residual() {
        let sys = random_system(120, 4, 1);
        let (x, trace) = invert_block_nested(&sys, 2).unwrap();
        let b = sys.a.to_dense();
        let res = &b * &x - CMat::identity(120, 120);
        assert!(linalg::frobenius(&res) < 1e-10);
        assert_eq!(trace.total_flops(), trace.total_measured());
    }
}
