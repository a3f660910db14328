//! RRH labelling into (nested) doubly-bordered block-diagonal form.
//!
//! The area is covered by a grid of `r × r` squares. An RRH whose coordinates
//! sit at least `d0` inside its square joins that square's center cluster;
//! every other RRH joins the boundary cluster. Two RRHs in different center
//! clusters are at least `2·d0` apart, so no user is within `d0` of both and
//! the corresponding entry of `Â` is zero.
//!
//! Labels are assigned cluster by cluster in ascending grid order with the
//! boundary cluster last. Nesting repeats the same grid construction inside
//! each center cluster's square.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{DncError, Result};
use crate::linalg::C64;
use crate::netgen::NetworkLayout;
use crate::sparse::CscMatrix;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Grid cell this cluster was cut from.
    pub cell: Rect,
    /// Original RRH ids, ascending.
    pub members: Vec<usize>,
    /// Sub-clusters of the next layer, if this cluster was nested.
    pub children: Option<Partition>,
}

/// One application of the labelling grid to an area.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub side: f64,
    pub area: Rect,
    /// Non-empty center clusters in ascending grid order.
    pub clusters: Vec<Cluster>,
    /// Boundary RRHs (original ids, ascending).
    pub boundary: Vec<usize>,
}

impl Partition {
    fn size(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum::<usize>() + self.boundary.len()
    }

    fn push_order(&self, out: &mut Vec<usize>) {
        for c in &self.clusters {
            match &c.children {
                Some(p) => p.push_order(out),
                None => out.extend_from_slice(&c.members),
            }
        }
        out.extend_from_slice(&self.boundary);
    }

    fn blocks(&self, start: usize) -> BlockTree {
        let mut at = start;
        let mut diag = Vec::with_capacity(self.clusters.len());
        for c in &self.clusters {
            let node = match &c.children {
                Some(p) => p.blocks(at),
                None => BlockTree::leaf(at..at + c.members.len()),
            };
            at = node.range.end;
            diag.push(node);
        }
        let cut = at..at + self.boundary.len();
        BlockTree {
            range: start..cut.end,
            diag,
            cut,
            partitioned: true,
        }
    }

    fn collect_layer<'a>(&'a self, depth: usize, target: usize, out: &mut Vec<&'a Partition>) {
        if depth == target {
            out.push(self);
            return;
        }
        for c in &self.clusters {
            if let Some(p) = &c.children {
                p.collect_layer(depth + 1, target, out);
            }
        }
    }
}

/// Index ranges of a (nested) DBBD matrix in permuted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTree {
    pub range: Range<usize>,
    /// Diagonal blocks, in order. Empty for a dense leaf.
    pub diag: Vec<BlockTree>,
    /// Cut-node rows; always the tail of `range`.
    pub cut: Range<usize>,
    /// False for a dense leaf block.
    pub partitioned: bool,
}

impl BlockTree {
    fn leaf(range: Range<usize>) -> Self {
        BlockTree {
            cut: range.end..range.end,
            range,
            diag: Vec::new(),
            partitioned: false,
        }
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Cluster assignment of every RRH, possibly over several nested layers.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    pub d0: f64,
    pub root: Partition,
    /// Grid side `r_t` of each layer.
    pub sides: Vec<f64>,
    /// `new_of_old[n]` is the 0-based label of original RRH `n`.
    pub new_of_old: Vec<usize>,
}

/// Averaged block sizes of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: usize,
    pub side: f64,
    /// Mean diagonal-block size `N_d`.
    pub n_d: f64,
    /// Mean cut-node block size `N_b`.
    pub n_b: f64,
    /// Mean number of diagonal blocks per partition `m`.
    pub m: f64,
    pub partitions: usize,
    pub diag_blocks: usize,
}

fn grid_count(width: f64, side: f64) -> usize {
    ((width / side) - 1e-9).ceil().max(1.0) as usize
}

/// Boundaries of grid cell `i` (0-based) of `count` cells starting at `lo`.
/// The last cell ends exactly at `hi`.
fn cell_bounds(lo: f64, hi: f64, side: f64, i: usize, count: usize) -> (f64, f64) {
    let a = lo + i as f64 * side;
    let b = if i + 1 == count {
        hi
    } else {
        lo + (i + 1) as f64 * side
    };
    (a, b)
}

fn partition(
    layout: &NetworkLayout,
    ids: &[usize],
    area: Rect,
    side: f64,
    d0: f64,
) -> Result<Partition> {
    if !(side > 2.0 * d0) {
        return Err(DncError::NoCenterRegion { side, d0 });
    }
    let mx = grid_count(area.x1 - area.x0, side);
    let my = grid_count(area.y1 - area.y0, side);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); mx * my];
    let mut boundary = Vec::new();
    for &n in ids {
        let [lx, ly] = layout.rrh_positions[n];
        let i = (((lx - area.x0) / side).floor().max(0.0) as usize).min(mx - 1);
        let j = (((ly - area.y0) / side).floor().max(0.0) as usize).min(my - 1);
        let (xa, xb) = cell_bounds(area.x0, area.x1, side, i, mx);
        let (ya, yb) = cell_bounds(area.y0, area.y1, side, j, my);
        if xa + d0 <= lx && lx <= xb - d0 && ya + d0 <= ly && ly <= yb - d0 {
            cells[i * my + j].push(n);
        } else {
            boundary.push(n);
        }
    }
    boundary.sort_unstable();
    let clusters = cells
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(id, mut members)| {
            members.sort_unstable();
            let (i, j) = (id / my, id % my);
            let (x0, x1) = cell_bounds(area.x0, area.x1, side, i, mx);
            let (y0, y1) = cell_bounds(area.y0, area.y1, side, j, my);
            Cluster {
                cell: Rect { x0, y0, x1, y1 },
                members,
                children: None,
            }
        })
        .collect();
    Ok(Partition {
        side,
        area,
        clusters,
        boundary,
    })
}

impl BlockStructure {
    fn from_root(root: Partition, sides: Vec<f64>, d0: f64) -> Self {
        let mut order = Vec::with_capacity(root.size());
        root.push_order(&mut order);
        let mut new_of_old = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of_old[old] = new;
        }
        BlockStructure {
            d0,
            root,
            sides,
            new_of_old,
        }
    }

    pub fn n(&self) -> usize {
        self.new_of_old.len()
    }

    pub fn layer_count(&self) -> usize {
        self.sides.len()
    }

    /// Original id of each label.
    pub fn old_of_new(&self) -> Vec<usize> {
        let mut inv = vec![0; self.n()];
        for (old, &new) in self.new_of_old.iter().enumerate() {
            inv[new] = old;
        }
        inv
    }

    pub fn blocks(&self) -> BlockTree {
        self.root.blocks(0)
    }

    /// Partitions making up layer `t` (1-based).
    pub fn layer(&self, t: usize) -> Vec<&Partition> {
        let mut out = Vec::new();
        if t >= 1 {
            self.root.collect_layer(1, t, &mut out);
        }
        out
    }

    pub fn layer_stats(&self) -> Vec<LayerStats> {
        (1..=self.layer_count())
            .map(|t| {
                let parts = self.layer(t);
                let diag: Vec<usize> = parts
                    .iter()
                    .flat_map(|p| p.clusters.iter().map(|c| c.members.len()))
                    .collect();
                let cut: usize = parts.iter().map(|p| p.boundary.len()).sum();
                let np = parts.len().max(1) as f64;
                LayerStats {
                    layer: t,
                    side: self.sides[t - 1],
                    n_d: if diag.is_empty() {
                        0.0
                    } else {
                        diag.iter().sum::<usize>() as f64 / diag.len() as f64
                    },
                    n_b: cut as f64 / np,
                    m: diag.len() as f64 / np,
                    partitions: parts.len(),
                    diag_blocks: diag.len(),
                }
            })
            .collect()
    }

    pub fn to_file(&self) -> StructureFile {
        let layers = (1..=self.layer_count())
            .map(|t| {
                let parts = self.layer(t);
                LayerFile {
                    r_t: self.sides[t - 1],
                    clusters: parts
                        .iter()
                        .flat_map(|p| p.clusters.iter().map(|c| c.members.clone()))
                        .collect(),
                    cells: parts
                        .iter()
                        .flat_map(|p| p.clusters.iter().map(|c| c.cell))
                        .collect(),
                    boundary: parts
                        .iter()
                        .flat_map(|p| p.boundary.iter().copied())
                        .collect(),
                }
            })
            .collect();
        StructureFile {
            d0: self.d0,
            layers,
            permutation: self.new_of_old.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    /// Rebuild a structure from its serialized form. Layer-`t` clusters and
    /// boundary ids are attached to the layer-`t−1` cluster that contains them.
    pub fn from_file(file: &StructureFile) -> Result<Self> {
        let bad = |m: &str| DncError::Format(format!("structure: {m}"));
        let first = file.layers.first().ok_or_else(|| bad("no layers"))?;
        let n = file.permutation.len();
        let build =
            |layer: &LayerFile, keep: &dyn Fn(usize) -> bool, area: Rect| -> Result<Partition> {
                let mut clusters = Vec::new();
                for (members, cell) in layer.clusters.iter().zip(&layer.cells) {
                    if let Some(&first) = members.first() {
                        if keep(first) {
                            clusters.push(Cluster {
                                cell: *cell,
                                members: members.clone(),
                                children: None,
                            });
                        }
                    }
                }
                let boundary = layer
                    .boundary
                    .iter()
                    .copied()
                    .filter(|&b| keep(b))
                    .collect();
                Ok(Partition {
                    side: layer.r_t,
                    area,
                    clusters,
                    boundary,
                })
            };
        if first.cells.len() != first.clusters.len() {
            return Err(bad("cells and clusters differ in length"));
        }
        let top_area = bounding(&first.cells);
        let mut root = build(first, &|_| true, top_area)?;
        for layer in &file.layers[1..] {
            if layer.cells.len() != layer.clusters.len() {
                return Err(bad("cells and clusters differ in length"));
            }
            attach(&mut root, layer, &build)?;
        }
        let sides = file.layers.iter().map(|l| l.r_t).collect();
        let s = Self::from_root(root, sides, file.d0);
        if s.n() != n || s.new_of_old != file.permutation {
            return Err(bad("permutation does not match the cluster lists"));
        }
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

type Builder<'a> = dyn Fn(&LayerFile, &dyn Fn(usize) -> bool, Rect) -> Result<Partition> + 'a;

fn attach(p: &mut Partition, layer: &LayerFile, build: &Builder<'_>) -> Result<()> {
    for c in &mut p.clusters {
        match &mut c.children {
            Some(child) => attach(child, layer, build)?,
            None => {
                let set: BTreeSet<usize> = c.members.iter().copied().collect();
                let child = build(layer, &|id| set.contains(&id), c.cell)?;
                if child.size() != c.members.len() {
                    return Err(DncError::Format(
                        "structure: nested layer does not cover its parent".into(),
                    ));
                }
                c.children = Some(child);
            }
        }
    }
    Ok(())
}

fn bounding(cells: &[Rect]) -> Rect {
    let mut r = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 0.0,
        y1: 0.0,
    };
    for c in cells {
        r.x1 = r.x1.max(c.x1);
        r.y1 = r.y1.max(c.y1);
    }
    r
}

/// Serialized layer: cluster member lists, their cells and the boundary ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub r_t: f64,
    pub clusters: Vec<Vec<usize>>,
    pub cells: Vec<Rect>,
    pub boundary: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub d0: f64,
    pub layers: Vec<LayerFile>,
    pub permutation: Vec<usize>,
}

/// Single-layer labelling with grid side `r1`.
pub fn label_rrhs(layout: &NetworkLayout, r1: f64, d0: f64) -> Result<BlockStructure> {
    let (ax, ay) = layout.geometry.extent();
    let mx = grid_count(ax, r1);
    let my = grid_count(ay, r1);
    // the grid extends past the area when the side does not divide it
    let area = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: mx as f64 * r1,
        y1: my as f64 * r1,
    };
    let ids: Vec<usize> = (0..layout.n_rrh()).collect();
    let root = partition(layout, &ids, area, r1, d0)?;
    Ok(BlockStructure::from_root(root, vec![r1], d0))
}

/// Add one layer: every deepest center cluster is re-labelled inside its own cell.
pub fn nest_labelling(
    structure: &BlockStructure,
    layout: &NetworkLayout,
    r_next: f64,
    d0: f64,
) -> Result<BlockStructure> {
    let current = *structure.sides.last().expect("structure has a layer");
    if r_next > current {
        return Err(DncError::InvalidArgument(format!(
            "nested side {r_next} exceeds the current side {current}"
        )));
    }
    if !(r_next > 2.0 * d0) {
        return Err(DncError::NoCenterRegion { side: r_next, d0 });
    }
    fn go(p: &mut Partition, layout: &NetworkLayout, r: f64, d0: f64) -> Result<()> {
        for c in &mut p.clusters {
            match &mut c.children {
                Some(child) => go(child, layout, r, d0)?,
                None => c.children = Some(partition(layout, &c.members, c.cell, r, d0)?),
            }
        }
        Ok(())
    }
    let mut root = structure.root.clone();
    go(&mut root, layout, r_next, d0)?;
    let mut sides = structure.sides.clone();
    sides.push(r_next);
    Ok(BlockStructure::from_root(root, sides, d0))
}

/// A Hermitian system in labelled order.
#[derive(Debug, Clone, PartialEq)]
pub struct DbbdSystem {
    pub a: CscMatrix,
    pub structure: BlockStructure,
    pub rhs: Vec<C64>,
}

impl DbbdSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    /// Map a solution in labelled order back to original RRH order.
    pub fn unpermute(&self, x: &[C64]) -> Vec<C64> {
        self.structure
            .new_of_old
            .iter()
            .map(|&new| x[new])
            .collect()
    }

    /// Nonzero coordinates `(row, col)` of the permuted matrix, for spy plots.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.a.triplets().map(|(r, c, _)| (r, c)).collect()
    }

    pub fn pattern_csv(&self) -> String {
        let mut s = String::from("row,col\n");
        for (r, c) in self.pattern() {
            s.push_str(&format!("{r},{c}\n"));
        }
        s
    }
}

pub fn permute_to_dbbd(a: &CscMatrix, structure: &BlockStructure, y: &[C64]) -> Result<DbbdSystem> {
    let n = structure.n();
    if a.nrows() != n {
        return Err(DncError::SizeMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    if y.len() != n {
        return Err(DncError::SizeMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let pa = a.permute_symmetric(&structure.new_of_old)?;
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for (old, &new) in structure.new_of_old.iter().enumerate() {
        rhs[new] = y[old];
    }
    Ok(DbbdSystem {
        a: pa,
        structure: structure.clone(),
        rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub col: usize,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbbdReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Position of every label in the block tree: the diagonal-block index per
/// layer, or `None` once the label is in a cut block.
fn block_paths(tree: &BlockTree, n: usize) -> Vec<Vec<Option<usize>>> {
    let mut paths = vec![Vec::new(); n];
    fn go(t: &BlockTree, paths: &mut [Vec<Option<usize>>]) {
        for (b, child) in t.diag.iter().enumerate() {
            for i in child.range.clone() {
                paths[i].push(Some(b));
            }
            if child.partitioned {
                go(child, paths);
            }
        }
        for i in t.cut.clone() {
            paths[i].push(None);
        }
    }
    go(tree, &mut paths);
    paths
}

/// Check that every stored nonzero coupling two different diagonal blocks of
/// the same parent is exactly zero, at every layer.
pub fn verify_dbbd(sys: &DbbdSystem) -> DbbdReport {
    let n = sys.a.nrows();
    let paths = block_paths(&sys.structure.blocks(), n);
    let mut violations = Vec::new();
    for (r, c, v) in sys.a.triplets() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        for (layer, (a, b)) in paths[r].iter().zip(&paths[c]).enumerate() {
            match (a, b) {
                (Some(x), Some(y)) if x == y => continue,
                (Some(_), Some(_)) => violations.push(Violation {
                    row: r,
                    col: c,
                    layer: layer + 1,
                }),
                _ => {}
            }
            break;
        }
    }
    DbbdReport {
        ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::AreaGeometry;

    fn layout(rrh: Vec<[f64; 2]>, side: f64) -> NetworkLayout {
        let g = AreaGeometry::rectangle(side, side, 1.0).unwrap();
        NetworkLayout::from_positions(g, rrh, vec![[0.0, 0.0]], 0).unwrap()
    }

    #[test]
    fn single_centered_rrh() {
        let l = layout(vec![[50.0, 50.0]], 100.0);
        let s = label_rrhs(&l, 100.0, 10.0).unwrap();
        assert_eq!(s.root.clusters.len(), 1);
        assert!(s.root.boundary.is_empty());
    }

    #[test]
    fn edge_of_center_region_is_inclusive() {
        let l = layout(vec![[10.0, 50.0], [9.999, 50.0]], 100.0);
        let s = label_rrhs(&l, 100.0, 10.0).unwrap();
        assert_eq!(s.root.clusters[0].members, vec![0]);
        assert_eq!(s.root.boundary, vec![1]);
    }

    #[test]
    fn four_cells_and_a_crossing() {
        let l = layout(
            vec![
                [100.0, 100.0],
                [150.0, 150.0],
                [50.0, 50.0],
                [150.0, 50.0],
                [50.0, 150.0],
            ],
            200.0,
        );
        let s = label_rrhs(&l, 100.0, 10.0).unwrap();
        let sizes: Vec<usize> = s.root.clusters.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![1, 1, 1, 1]);
        assert_eq!(s.root.boundary, vec![0]);
        // ascending grid order, boundary last
        assert_eq!(s.old_of_new(), vec![2, 4, 3, 1, 0]);
    }

    #[test]
    fn no_center_region() {
        let l = layout(vec![[50.0, 50.0]], 100.0);
        assert!(matches!(
            label_rrhs(&l, 20.0, 10.0),
            Err(DncError::NoCenterRegion { .. })
        ));
    }

    #[test]
    fn equal_side_nesting_is_identity() {
        let g = AreaGeometry::rectangle(3000.0, 3000.0, 1.0).unwrap();
        let l = crate::netgen::generate_layout(g, 300, 1, 3).unwrap();
        let s = label_rrhs(&l, 700.0, 40.0).unwrap();
        let t = nest_labelling(&s, &l, 700.0, 40.0).unwrap();
        assert_eq!(t.new_of_old, s.new_of_old);
        for (c, p) in s.root.clusters.iter().zip(&t.root.clusters) {
            let child = p.children.as_ref().unwrap();
            assert_eq!(child.clusters.len(), 1);
            assert_eq!(child.clusters[0].members, c.members);
            assert!(child.boundary.is_empty());
        }
    }

    #[test]
    fn json_round_trip() {
        let g = AreaGeometry::rectangle(4000.0, 3000.0, 1.0).unwrap();
        let l = crate::netgen::generate_layout(g, 400, 1, 5).unwrap();
        let s = label_rrhs(&l, 1500.0, 50.0).unwrap();
        let s = nest_labelling(&s, &l, 600.0, 50.0).unwrap();
        let back = BlockStructure::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.new_of_old, s.new_of_old);
        assert_eq!(back.blocks(), s.blocks());
        assert_eq!(back.layer_count(), 2);
    }

    #[test]
    fn planted_violation_is_reported() {
        let l = layout(vec![[50.0, 50.0], [150.0, 150.0], [100.0, 100.0]], 200.0);
        let s = label_rrhs(&l, 100.0, 10.0).unwrap();
        let one = C64::new(1.0, 0.0);
        let mut t: Vec<_> = (0..3).map(|i| (i, i, one)).collect();
        let a = CscMatrix::from_triplets(3, 3, t.clone());
        let sys = permute_to_dbbd(&a, &s, &[one; 3]).unwrap();
        assert!(verify_dbbd(&sys).ok);
        t.push((0, 1, one));
        t.push((1, 0, one));
        let sys = permute_to_dbbd(&CscMatrix::from_triplets(3, 3, t), &s, &[one; 3]).unwrap();
        let rep = verify_dbbd(&sys);
        assert_eq!(rep.violations.len(), 2);
        assert_eq!(rep.violations[0].layer, 1);
    }
}
