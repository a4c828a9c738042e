use serde::{Deserialize, Serialize};

use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Row-major feature matrix with rows presorted per feature.
pub(crate) struct Presorted<'a> {
    pub x: &'a [f64],
    pub n_features: usize,
    /// Per feature: row ids ascending by value, ties by row id.
    pub sorted: Vec<Vec<u32>>,
}

impl<'a> Presorted<'a> {
    pub fn new(x: &'a [f64], n_features: usize, rows: &[u32]) -> Self {
        let sorted = par::map_range(n_features, |f| {
            let mut r = rows.to_vec();
            r.sort_by(|&a, &b| {
                x[a as usize * n_features + f]
                    .total_cmp(&x[b as usize * n_features + f])
                    .then(a.cmp(&b))
            });
            r
        });
        Presorted { x, n_features, sorted }
    }

    fn value(&self, row: u32, feature: usize) -> f64 {
        self.x[row as usize * self.n_features + feature]
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Open {
    node: usize,
    sorted: Vec<Vec<u32>>,
    best: Option<Split>,
}

fn split_threshold(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Best variance-reduction split of one node. Ties go to the lower feature
/// index, then the lower threshold.
fn best_split(data: &Presorted<'_>, sorted: &[Vec<u32>], g: &[f64], min_leaf: usize) -> Option<Split> {
    let rows = &sorted[0];
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let total: f64 = rows.iter().map(|&r| g[r as usize]).sum();
    let parent = total * total / n as f64;
    let per_feature = par::map_range(data.n_features, |f| {
        let list = &sorted[f];
        let mut best: Option<Split> = None;
        let mut left = 0.0;
        for i in 0..n - 1 {
            let row = list[i];
            left += g[row as usize];
            let (a, b) = (data.value(row, f), data.value(list[i + 1], f));
            let n_left = i + 1;
            if a == b || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right = total - left;
            let gain = left * left / n_left as f64 + right * right / (n - n_left) as f64 - parent;
            if best.is_none_or(|s| gain > s.gain) {
                best = Some(Split {
                    gain,
                    feature: f,
                    threshold: split_threshold(a, b),
                });
            }
        }
        best
    });
    let mut best: Option<Split> = None;
    for s in per_feature.into_iter().flatten() {
        if s.gain > 1e-12 && best.is_none_or(|b| s.gain > b.gain) {
            best = Some(s);
        }
    }
    best
}

/// Grows a tree best-first on targets `g`, up to `max_leaves` leaves with at
/// least `min_leaf` rows each. Returns the tree (leaf values unset, zero) and
/// the rows of every leaf keyed by node index.
pub(crate) fn grow(
    data: &Presorted<'_>,
    g: &[f64],
    max_leaves: usize,
    min_leaf: usize,
) -> (Tree, Vec<(usize, Vec<u32>)>) {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let root_sorted = data.sorted.clone();
    let mut open = vec![Open {
        node: 0,
        best: best_split(data, &root_sorted, g, min_leaf),
        sorted: root_sorted,
    }];
    let mut leaves = 1;
    let mut in_left = vec![false; data.x.len() / data.n_features.max(1)];

    while leaves < max_leaves {
        // largest gain first; ties to the earlier node
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.best.map(|s| (i, s.gain, o.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((idx, _, _)) = pick else { break };
        let o = open.swap_remove(idx);
        let s = o.best.expect("picked node has a split");
        for &r in &o.sorted[s.feature] {
            in_left[r as usize] = data.value(r, s.feature) <= s.threshold;
        }
        let parts = par::map(&o.sorted, |list| {
            let (l, r): (Vec<u32>, Vec<u32>) = list.iter().partition(|&&row| in_left[row as usize]);
            (l, r)
        });
        let (left_sorted, right_sorted): (Vec<Vec<u32>>, Vec<Vec<u32>>) = parts.into_iter().unzip();
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[o.node] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left,
            right,
        };
        leaves += 1;
        for (node, sorted) in [(left, left_sorted), (right, right_sorted)] {
            open.push(Open {
                node,
                best: best_split(data, &sorted, g, min_leaf),
                sorted,
            });
        }
    }
    let mut leaf_rows: Vec<(usize, Vec<u32>)> = open
        .into_iter()
        .map(|o| (o.node, o.sorted.into_iter().next().unwrap_or_default()))
        .collect();
    leaf_rows.sort_by_key(|(n, _)| *n);
    (Tree { nodes }, leaf_rows)
}
