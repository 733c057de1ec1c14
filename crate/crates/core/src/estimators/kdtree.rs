//! Neighbor queries under the maximum-coordinate norm.

use std::collections::BinaryHeap;

use ordered::OrdF64;

/// Below this many points queries scan all pairs.
pub const BRUTE_FORCE_BELOW: usize = 256;

const LEAF_SIZE: usize = 12;

/// Row-major point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    len: usize,
    data: Vec<f64>,
}

impl PointSet {
    /// `data.len()` must be a positive multiple of `dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "ragged point data");
        Self {
            dim,
            len: data.len() / dim,
            data,
        }
    }

    /// `len` points with no coordinates; every pair is at distance 0.
    pub fn zero_dim(len: usize) -> Self {
        Self {
            dim: 0,
            len,
            data: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            dim,
            len: rows.len(),
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Concatenates the coordinates of several sets of equal length.
    pub fn hstack(parts: &[&PointSet], len: usize) -> PointSet {
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut data = Vec::with_capacity(len * dim);
        for i in 0..len {
            for p in parts {
                data.extend_from_slice(p.point(i));
            }
        }
        PointSet { dim, len, data }
    }

    /// Point `i` of the result is point `(i + shift) mod len` of `self`.
    pub fn rotated(&self, shift: usize) -> PointSet {
        let mut data = Vec::with_capacity(self.data.len());
        data.extend_from_slice(&self.data[shift * self.dim..]);
        data.extend_from_slice(&self.data[..shift * self.dim]);
        PointSet {
            dim: self.dim,
            len: self.len,
            data,
        }
    }
}

#[inline]
pub fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Max-norm distance, abandoning once it reaches `bound`.
#[inline]
fn max_dist_bounded(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d > acc {
            acc = d;
            if acc >= bound {
                return acc;
            }
        }
    }
    acc
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    // children are `None` for leaves
    children: Option<(usize, usize)>,
}

/// Static k-d tree over a borrowed point set, with per-node bounding boxes.
#[derive(Debug)]
pub struct KdTree<'a> {
    points: &'a PointSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
    // lo and hi corners of each node box, `dim` values each
    lo: Vec<f64>,
    hi: Vec<f64>,
    // coordinates permuted into tree order for cache-friendly leaf scans
    sorted: Vec<f64>,
    theiler: usize,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        let n = points.len();
        let mut tree = KdTree {
            points,
            order: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            lo: Vec::new(),
            hi: Vec::new(),
            sorted: Vec::new(),
            theiler: 0,
        };
        if n > 0 {
            tree.build(0, n);
        }
        let mut sorted = Vec::with_capacity(n * points.dim());
        for &i in &tree.order {
            sorted.extend_from_slice(points.point(i));
        }
        tree.sorted = sorted;
        tree
    }

    /// Ignores points `j` with `|i - j| <= w` as neighbors of `i`.
    pub fn with_theiler(mut self, w: usize) -> Self {
        self.theiler = w;
        self
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.dim();
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            children: None,
        });
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.order[start..end] {
            for (d, &v) in self.points.point(i).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let split_dim = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let spread = if dim > 0 { hi[split_dim] - lo[split_dim] } else { 0.0 };
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);
        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts.point(a)[split_dim].total_cmp(&pts.point(b)[split_dim])
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    #[inline]
    fn node_box(&self, node: usize) -> (&[f64], &[f64]) {
        let d = self.points.dim();
        (&self.lo[node * d..(node + 1) * d], &self.hi[node * d..(node + 1) * d])
    }

    /// Smallest and largest max-norm distance from `q` to any point of the box.
    #[inline]
    fn box_dists(&self, node: usize, q: &[f64]) -> (f64, f64) {
        let (lo, hi) = self.node_box(node);
        let mut near = 0.0f64;
        let mut far = 0.0f64;
        for ((&l, &h), &x) in lo.iter().zip(hi).zip(q) {
            let gap = if x < l {
                l - x
            } else if x > h {
                x - h
            } else {
                0.0
            };
            near = near.max(gap);
            far = far.max((x - l).abs().max((h - x).abs()));
        }
        (near, far)
    }

    #[inline]
    fn sorted_point(&self, pos: usize) -> &[f64] {
        let d = self.points.dim();
        &self.sorted[pos * d..(pos + 1) * d]
    }

    /// Distance from point `i` to its `k`-th nearest admissible point.
    pub fn kth_neighbor_distance(&self, i: usize, k: usize) -> f64 {
        let q = self.points.point(i);
        let mut heap: BinaryHeap<OrdF64> = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, q, i, k, &mut heap);
        if heap.len() < k {
            return f64::INFINITY;
        }
        heap.peek().map_or(f64::INFINITY, |d| d.0)
    }

    fn knn_visit(&self, node: usize, q: &[f64], skip: usize, k: usize, heap: &mut BinaryHeap<OrdF64>) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for pos in n.start..n.end {
                    if self.order[pos].abs_diff(skip) <= self.theiler {
                        continue;
                    }
                    let bound = if heap.len() == k { heap.peek().unwrap().0 } else { f64::INFINITY };
                    let d = max_dist_bounded(q, self.sorted_point(pos), bound);
                    if d < bound {
                        if heap.len() == k {
                            heap.pop();
                        }
                        heap.push(OrdF64(d));
                    }
                }
            }
            Some((l, r)) => {
                let (dl, _) = self.box_dists(l, q);
                let (dr, _) = self.box_dists(r, q);
                let (first, df, second, ds) = if dl <= dr { (l, dl, r, dr) } else { (r, dr, l, dl) };
                for (child, dc) in [(first, df), (second, ds)] {
                    if heap.len() == k && dc >= heap.peek().unwrap().0 {
                        continue;
                    }
                    self.knn_visit(child, q, skip, k, heap);
                }
            }
        }
    }

    /// Number of admissible points `j` with distance strictly below `radius`
    /// from point `i`.
    pub fn count_within(&self, i: usize, radius: f64) -> usize {
        let q = self.points.point(i);
        let c = self.count_visit(0, q, radius);
        // the excluded window (including `i` itself) was counted too
        c - excluded_within(self.points, i, radius, self.theiler)
    }

    fn count_visit(&self, node: usize, q: &[f64], radius: f64) -> usize {
        let (near, far) = self.box_dists(node, q);
        if near >= radius {
            return 0;
        }
        let n = &self.nodes[node];
        if far < radius {
            return n.end - n.start;
        }
        match n.children {
            None => (n.start..n.end)
                .filter(|&pos| max_dist_bounded(q, self.sorted_point(pos), radius) < radius)
                .count(),
            Some((l, r)) => self.count_visit(l, q, radius) + self.count_visit(r, q, radius),
        }
    }
}

/// Points of the window `|j - i| <= w` closer than `radius` to point `i`.
fn excluded_within(p: &PointSet, i: usize, radius: f64, w: usize) -> usize {
    let q = p.point(i);
    let end = i.saturating_add(w).min(p.len() - 1);
    (i.saturating_sub(w)..=end)
        .filter(|&j| max_dist(q, p.point(j)) < radius)
        .count()
}

/// Neighbor queries that pick brute force or a k-d tree by size. Points
/// within `theiler` time steps of the query are never neighbors.
pub enum NeighborIndex<'a> {
    Brute { points: &'a PointSet, theiler: usize },
    Tree(KdTree<'a>),
}

impl<'a> NeighborIndex<'a> {
    pub fn new(points: &'a PointSet, theiler: usize) -> Self {
        if points.len() < BRUTE_FORCE_BELOW {
            NeighborIndex::Brute { points, theiler }
        } else {
            NeighborIndex::Tree(KdTree::new(points).with_theiler(theiler))
        }
    }

    pub fn kth_neighbor_distance(&self, i: usize, k: usize) -> f64 {
        match self {
            NeighborIndex::Brute { points, theiler } => brute_kth_distance_excluding(points, i, k, *theiler),
            NeighborIndex::Tree(t) => t.kth_neighbor_distance(i, k),
        }
    }

    pub fn count_within(&self, i: usize, radius: f64) -> usize {
        match self {
            NeighborIndex::Brute { points, theiler } => brute_count_within_excluding(points, i, radius, *theiler),
            NeighborIndex::Tree(t) => t.count_within(i, radius),
        }
    }
}

pub fn brute_kth_distance(p: &PointSet, i: usize, k: usize) -> f64 {
    brute_kth_distance_excluding(p, i, k, 0)
}

pub fn brute_count_within(p: &PointSet, i: usize, radius: f64) -> usize {
    brute_count_within_excluding(p, i, radius, 0)
}

/// `k`-th neighbor distance ignoring points with `|j - i| <= w`.
pub fn brute_kth_distance_excluding(p: &PointSet, i: usize, k: usize, w: usize) -> f64 {
    let q = p.point(i);
    let mut d: Vec<f64> = (0..p.len())
        .filter(|&j| j.abs_diff(i) > w)
        .map(|j| max_dist(q, p.point(j)))
        .collect();
    if k == 0 || k > d.len() {
        return f64::INFINITY;
    }
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

pub fn brute_count_within_excluding(p: &PointSet, i: usize, radius: f64, w: usize) -> usize {
    let q = p.point(i);
    (0..p.len())
        .filter(|&j| j.abs_diff(i) > w && max_dist(q, p.point(j)) < radius)
        .count()
}

mod ordered {
    /// Total-ordered float for the neighbor heap.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct OrdF64(pub f64);

    impl Eq for OrdF64 {}

    impl PartialOrd for OrdF64 {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    impl Ord for OrdF64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(dim: usize, n: usize, seed: u64, grid: bool) -> PointSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * dim)
            .map(|_| {
                if grid {
                    f64::from(rng.random_range(0..4u8))
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        PointSet::new(dim, data)
    }

    #[test]
    fn tree_matches_brute_force_on_large_cloud() {
        for (dim, grid) in [(1, false), (3, false), (7, false), (13, false), (3, true)] {
            let p = cloud(dim, 700, dim as u64, grid);
            let t = KdTree::new(&p);
            for i in (0..p.len()).step_by(7) {
                for k in [1, 5, 9] {
                    let a = t.kth_neighbor_distance(i, k);
                    assert_eq!(a, brute_kth_distance(&p, i, k), "dim={dim} i={i} k={k}");
                    assert_eq!(t.count_within(i, a), brute_count_within(&p, i, a));
                }
            }
        }
    }

    #[test]
    fn theiler_window_matches_brute_force() {
        let p = cloud(4, 600, 11, false);
        for w in [0, 1, 10] {
            let t = KdTree::new(&p).with_theiler(w);
            for i in (0..p.len()).step_by(13) {
                let a = t.kth_neighbor_distance(i, 5);
                assert_eq!(a, brute_kth_distance_excluding(&p, i, 5, w), "w={w} i={i}");
                assert_eq!(t.count_within(i, a), brute_count_within_excluding(&p, i, a, w));
            }
        }
        // on a line every window neighbor is nearer than anything outside it
        let line = PointSet::new(1, (0..50).map(f64::from).collect());
        assert_eq!(brute_kth_distance_excluding(&line, 25, 1, 3), 4.0);
        assert_eq!(brute_count_within_excluding(&line, 25, 6.0, 3), 4);
    }

    #[test]
    fn rotation_and_stack() {
        let a = PointSet::new(1, vec![1., 2., 3.]);
        let b = PointSet::new(2, vec![10., 11., 20., 21., 30., 31.]);
        assert_eq!(a.rotated(1), PointSet::new(1, vec![2., 3., 1.]));
        let s = PointSet::hstack(&[&a, &b], 3);
        assert_eq!(s.point(2), &[3., 30., 31.]);
    }

    proptest! {
        #[test]
        fn tree_and_brute_agree(
            raw in proptest::collection::vec(0i8..6, 2 * 20..2 * 300),
            k in 1usize..6,
            r in 0.0f64..3.0,
        ) {
            // coarse integer grid forces many exact ties
            let even = raw.len() / 2 * 2;
            let data: Vec<f64> = raw[..even].iter().map(|&v| f64::from(v)).collect();
            let p = PointSet::new(2, data);
            let t = KdTree::new(&p);
            for i in 0..p.len() {
                prop_assert_eq!(t.kth_neighbor_distance(i, k), brute_kth_distance(&p, i, k));
                prop_assert_eq!(t.count_within(i, r), brute_count_within(&p, i, r));
            }
        }
    }
}
