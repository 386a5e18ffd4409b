//! Balanced kd-tree over cell barycenters.
//!
//! Cells split along the axis of greatest variance at the point of median
//! rank, with ⌈s/2⌉ points going left, until a cell holds at most n₀ points.
//! Ties in projection order are broken by original point index, which makes
//! the construction fully deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splitting rule of an internal node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub axis: usize,
    /// Projection of the last point routed left; the left cell is
    /// {p : p[axis] ≤ threshold} under the rank tie-break.
    pub threshold: f64,
}

/// One tree node. Ids index the arena in construction (pre-order) sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdNode {
    pub id: usize,
    pub level: usize,
    pub split: Option<Split>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// Owned point indices; populated at leaves only.
    pub points: Vec<usize>,
}

impl KdNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Balanced spatial partition of a point set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdTree {
    pub nodes: Vec<KdNode>,
    /// Maximum leaf level.
    pub depth: usize,
    /// Leaf capacity the tree was built for.
    pub n0: usize,
    point_count: usize,
    levels: Vec<Vec<usize>>,
}

/// Axis of greatest variance and the rank-median threshold for a point set.
///
/// Errors with a degenerate-split report when all points coincide.
pub fn choose_rule(points: &[[f64; 3]]) -> Result<Split> {
    let idx: Vec<usize> = (0..points.len()).collect();
    choose_rule_indexed(points, &idx)
}

fn choose_rule_indexed(points: &[[f64; 3]], idx: &[usize]) -> Result<Split> {
    let s = idx.len();
    if s < 2 {
        return Err(Error::invalid("splitting needs at least two points"));
    }
    let mut axis = 0;
    let mut best = f64::NEG_INFINITY;
    for a in 0..3 {
        let mean: f64 = idx.iter().map(|&i| points[i][a]).sum::<f64>() / s as f64;
        let var: f64 = idx
            .iter()
            .map(|&i| (points[i][a] - mean).powi(2))
            .sum::<f64>()
            / (s - 1) as f64;
        if var > best {
            best = var;
            axis = a;
        }
    }
    if best <= 0.0 {
        return Err(Error::DegenerateSplit);
    }
    let mut order: Vec<usize> = idx.to_vec();
    sort_along(points, axis, &mut order);
    let left = s.div_ceil(2);
    Ok(Split {
        axis,
        threshold: points[order[left - 1]][axis],
    })
}

fn sort_along(points: &[[f64; 3]], axis: usize, order: &mut [usize]) {
    order.sort_unstable_by(|&i, &j| {
        points[i][axis]
            .partial_cmp(&points[j][axis])
            .expect("finite coordinates")
            .then(i.cmp(&j))
    });
}

/// Builds the tree over the given points with leaf capacity n0.
pub fn make_tree(points: &[[f64; 3]], n0: usize) -> Result<KdTree> {
    if points.is_empty() {
        return Err(Error::invalid("tree needs at least one point"));
    }
    if n0 == 0 {
        return Err(Error::invalid("leaf capacity must be at least 1"));
    }
    if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::invalid("point coordinates must be finite"));
    }
    let mut tree = KdTree {
        nodes: Vec::new(),
        depth: 0,
        n0,
        point_count: points.len(),
        levels: Vec::new(),
    };
    let all: Vec<usize> = (0..points.len()).collect();
    build(&mut tree, points, all, 0)?;
    tree.levels = vec![Vec::new(); tree.depth + 1];
    for node in &tree.nodes {
        tree.levels[node.level].push(node.id);
    }
    Ok(tree)
}

fn build(tree: &mut KdTree, points: &[[f64; 3]], idx: Vec<usize>, level: usize) -> Result<usize> {
    let id = tree.nodes.len();
    tree.nodes.push(KdNode {
        id,
        level,
        split: None,
        left: None,
        right: None,
        points: Vec::new(),
    });
    // A cell also becomes a leaf when its points coincide and no split
    // exists, regardless of capacity.
    let rule = if idx.len() <= tree.n0 {
        None
    } else {
        match choose_rule_indexed(points, &idx) {
            Ok(r) => Some(r),
            Err(Error::DegenerateSplit) => None,
            Err(e) => return Err(e),
        }
    };
    match rule {
        None => {
            tree.depth = tree.depth.max(level);
            tree.nodes[id].points = idx;
        }
        Some(split) => {
            let mut order = idx;
            sort_along(points, split.axis, &mut order);
            let cut = order.len().div_ceil(2);
            let right = order.split_off(cut);
            let left_id = build(tree, points, order, level + 1)?;
            let right_id = build(tree, points, right, level + 1)?;
            let node = &mut tree.nodes[id];
            node.split = Some(split);
            node.left = Some(left_id);
            node.right = Some(right_id);
        }
    }
    Ok(id)
}

impl KdTree {
    pub fn root(&self) -> &KdNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &KdNode {
        &self.nodes[id]
    }

    /// Total number of points the tree partitions.
    pub fn len(&self) -> usize {
        self.point_count
    }

    pub fn is_empty(&self) -> bool {
        self.point_count == 0
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Node ids at one level, in construction order.
    pub fn cells_at_level(&self, level: usize) -> Result<&[usize]> {
        self.levels
            .get(level)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level,
                depth: self.depth,
            })
    }

    /// Point indices owned by the subtree rooted at `id`, in leaf order.
    pub fn cell_points(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            let node = &self.nodes[cur];
            if node.is_leaf() {
                out.extend_from_slice(&node.points);
            } else {
                // Right first so the left subtree pops first.
                stack.push(node.right.expect("internal node"));
                stack.push(node.left.expect("internal node"));
            }
        }
        out
    }

    /// Leaf capacity that produces a target depth for a point count, matching
    /// the convention n₀ = ⌈N / 2ⁿ⌉.
    pub fn capacity_for_depth(point_count: usize, depth: usize) -> usize {
        let cells = 1usize << depth.min(63);
        point_count.div_ceil(cells).max(1)
    }
}
