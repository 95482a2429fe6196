//! Static 3-d tree over point keys, each carrying an inflation radius so
//! that extended objects (segments) can be found by a ball query.

use nalgebra::Vector3;

#[derive(Clone, Debug)]
struct Node {
    /// Index into `KdTree::items`.
    item: usize,
    axis: u8,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct KdItem {
    pub key: Vector3<f64>,
    pub payload: usize,
}

#[derive(Clone, Debug, Default)]
pub struct KdTree {
    items: Vec<KdItem>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    pub fn build(items: Vec<KdItem>) -> Self {
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut tree = KdTree { items, nodes: Vec::with_capacity(order.len()), root: None };
        tree.root = tree.build_rec(&mut order, 0);
        tree
    }

    fn build_rec(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = (depth % 3) as u8;
        let mid = idx.len() / 2;
        let items = &self.items;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            items[a].key[axis as usize]
                .total_cmp(&items[b].key[axis as usize])
                .then(a.cmp(&b))
        });
        let item = idx[mid];
        let (lo, rest) = idx.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(hi, depth + 1);
        self.nodes.push(Node { item, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    #[cfg(test)]
    fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Calls `visit` with the payload of every item whose key lies within
    /// `radius` of `center`.
    pub fn within(&self, center: &Vector3<f64>, radius: f64, mut visit: impl FnMut(usize)) {
        let r2 = radius * radius;
        let mut stack = Vec::with_capacity(64);
        if let Some(root) = self.root {
            stack.push(root);
        }
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let item = &self.items[node.item];
            if (item.key - center).norm_squared() <= r2 {
                visit(item.payload);
            }
            let a = node.axis as usize;
            let diff = center[a] - item.key[a];
            let (near, far) = if diff <= 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            if let Some(c) = near {
                stack.push(c);
            }
            if diff.abs() <= radius {
                if let Some(c) = far {
                    stack.push(c);
                }
            }
        }
    }
}
