use std::collections::BinaryHeap;

use super::{squared_distance, Candidate};

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over points stored back to back in a flat slice.
///
/// Nodes split on the coordinate with the widest spread at the median point.
/// Left children hold coordinates `<= value`, right children `>= value`.
#[derive(Debug)]
pub struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0, "flat buffer must hold whole points");
        let n = points.len() / dim;
        let mut tree = KdTree { points, dim, order: (0..n).collect(), nodes: Vec::new(), root: 0 };
        if n > 0 {
            tree.root = tree.build_node(0, n);
        }
        tree
    }

    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.points[i * self.dim + axis]
    }

    fn point(&self, i: usize) -> &'a [f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mut axis = 0;
        let mut widest = -1.0;
        for a in 0..self.dim {
            let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.coord(i, a);
                (lo.min(v), hi.max(v))
            });
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        if widest <= 0.0 {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        let dim = self.dim;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            points[i * dim + axis].total_cmp(&points[j * dim + axis]).then(i.cmp(&j))
        });
        let value = self.coord(self.order[mid], axis);
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes.push(Node::Split { axis, value, left, right });
        self.nodes.len() - 1
    }

    /// The `k` nearest stored points to stored point `i`, excluding `i`,
    /// ascending by `(squared distance, index)`.
    pub(crate) fn query_point(&self, i: usize, k: usize) -> Vec<Candidate> {
        self.query(self.point(i), k, Some(i))
    }

    pub(crate) fn query(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(self.root, q, k, exclude, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, q: &[f64], k: usize, exclude: Option<usize>, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start..end] {
                    if Some(idx) == exclude {
                        continue;
                    }
                    let c = Candidate { sq: squared_distance(q, self.point(idx)), index: idx };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let below = q[axis] < value;
                let (near, far) = if below { (left, right) } else { (right, left) };
                self.search(near, q, k, exclude, heap);
                // Rounding is monotone, so this never exceeds the squared
                // distance to any point on the far side; ties still descend.
                let gap = if below { value - q[axis] } else { q[axis] - value };
                let bound = gap * gap;
                if heap.len() < k || bound <= heap.peek().expect("heap is full").sq {
                    self.search(far, q, k, exclude, heap);
                }
            }
        }
    }
}
