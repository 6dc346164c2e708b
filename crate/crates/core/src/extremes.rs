//! Exact extremal pairwise distances of a point set: a kd-tree over the
//! points and dual-tree branch-and-bound searches.

use crate::metric::Metric;

const LEAF: usize = 16;

struct Node {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Option<(usize, usize)>,
}

struct Tree<'a> {
    metric: Metric,
    raw: &'a [&'a [f64]],
    /// Coordinates the boxes are built on; unit vectors for angular.
    coords: Vec<Vec<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> Tree<'a> {
    fn new(metric: Metric, raw: &'a [&'a [f64]]) -> Self {
        let coords = raw
            .iter()
            .map(|p| match metric {
                Metric::Angular => {
                    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    p.iter().map(|v| v / norm).collect()
                }
                _ => p.to_vec(),
            })
            .collect();
        let mut tree = Tree {
            metric,
            raw,
            coords,
            order: (0..raw.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, raw.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.coords[0].len();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.order[start..end] {
            for (d, &v) in self.coords[i].iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let id = self.nodes.len();
        let widest = (0..dim).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])));
        self.nodes.push(Node {
            start,
            end,
            lo,
            hi,
            children: None,
        });
        if let (true, Some(axis)) = (end - start > LEAF, widest) {
            let mid = (start + end) / 2;
            let coords = &self.coords;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                coords[a][axis].total_cmp(&coords[b][axis])
            });
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// Upper bound on the distance between any point of `a` and any of `b`.
    fn upper(&self, a: usize, b: usize) -> f64 {
        let (a, b) = (&self.nodes[a], &self.nodes[b]);
        let gaps =
            (0..a.lo.len()).map(|d| (a.hi[d] - b.lo[d]).abs().max((b.hi[d] - a.lo[d]).abs()));
        self.combine(gaps)
    }

    /// Lower bound on the distance between any point of `a` and any of `b`.
    fn lower(&self, a: usize, b: usize) -> f64 {
        let (a, b) = (&self.nodes[a], &self.nodes[b]);
        let gaps = (0..a.lo.len()).map(|d| (b.lo[d] - a.hi[d]).max(a.lo[d] - b.hi[d]).max(0.0));
        self.combine(gaps)
    }

    fn combine(&self, gaps: impl Iterator<Item = f64>) -> f64 {
        match self.metric {
            Metric::Euclidean => gaps.map(|g| g * g).sum::<f64>().sqrt(),
            Metric::Manhattan => gaps.sum(),
            // chord length c between unit vectors corresponds to angle 2 asin(c / 2)
            Metric::Angular => {
                let chord = gaps.map(|g| g * g).sum::<f64>().sqrt();
                2.0 * (chord / 2.0).min(1.0).asin()
            }
        }
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(self.raw[i], self.raw[j])
    }

    /// Most favourable distance any pair across `a` and `b` could realise.
    fn bound(&self, a: usize, b: usize, maximize: bool) -> f64 {
        if maximize {
            self.upper(a, b)
        } else {
            self.lower(a, b)
        }
    }

    /// Visits every pair of points that may improve on `best`: the largest
    /// distance when `maximize`, otherwise the smallest nonzero one.
    fn search(&self, a: usize, b: usize, best: &mut f64, maximize: bool) {
        let bound = self.bound(a, b, maximize);
        let hopeless = if maximize {
            loose(bound) < *best
        } else {
            bound > loose(*best)
        };
        if hopeless {
            return;
        }
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        let by_promise = |p: &(usize, usize), q: &(usize, usize)| {
            let (bp, bq) = (
                self.bound(p.0, p.1, maximize),
                self.bound(q.0, q.1, maximize),
            );
            if maximize {
                bq.total_cmp(&bp)
            } else {
                bp.total_cmp(&bq)
            }
        };
        match (na.children, nb.children) {
            (None, None) => {
                for (x, &i) in self.order[na.start..na.end].iter().enumerate() {
                    let partners = if a == b {
                        &self.order[na.start + x + 1..na.end]
                    } else {
                        &self.order[nb.start..nb.end]
                    };
                    for &j in partners {
                        let d = self.dist(i, j);
                        if d > 0.0 && (if maximize { d > *best } else { d < *best }) {
                            *best = d;
                        }
                    }
                }
            }
            _ if a == b => {
                let (l, r) = na.children.expect("inner node");
                let mut pairs = [(l, r), (l, l), (r, r)];
                pairs.sort_by(by_promise);
                for (x, y) in pairs {
                    self.search(x, y, best, maximize);
                }
            }
            _ => {
                // split the larger node, visiting the more promising half first
                let split_a = nb.children.is_none()
                    || (na.children.is_some() && na.end - na.start >= nb.end - nb.start);
                let (keep, split) = if split_a { (b, a) } else { (a, b) };
                let (l, r) = self.nodes[split].children.expect("inner node");
                let mut pairs = [(keep, l), (keep, r)];
                pairs.sort_by(by_promise);
                for (x, y) in pairs {
                    self.search(x, y, best, maximize);
                }
            }
        }
    }
}

/// Floating-point slack applied to the pruning bounds only.
fn loose(v: f64) -> f64 {
    v * (1.0 + 1e-9) + 1e-12
}

/// Smallest nonzero and largest pairwise distance among `points` (at least
/// two of them). The minimum is infinite when every distance is zero.
pub(crate) fn extremes(metric: Metric, points: &[&[f64]]) -> (f64, f64) {
    // a few farthest-point sweeps give a strong starting bound for the maximum
    let mut far = 0.0f64;
    let mut from = 0;
    for _ in 0..4 {
        let (next, d) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, metric.dist(points[from], p)))
            .fold((from, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if d <= far {
            break;
        }
        far = d;
        from = next;
    }
    let tree = Tree::new(metric, points);
    tree.search(0, 0, &mut far, true);
    let mut near = f64::INFINITY;
    tree.search(0, 0, &mut near, false);
    (near, far)
}
