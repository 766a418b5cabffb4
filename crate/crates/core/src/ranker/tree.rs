//! Histogram-based regression trees grown best-first on gradient statistics.
//!
//! The same learner serves squared-loss boosting (hessian 1, `lambda` 0, which
//! is plain variance reduction) and logistic boosting (Newton steps).

use serde::{Deserialize, Serialize};

pub const MAX_BINS: usize = 256;

/// Feature values quantized into at most [`MAX_BINS`] bins per column.
#[derive(Clone, Debug)]
pub struct BinnedData {
    n_rows: usize,
    n_features: usize,
    /// Feature-major bin codes: `codes[f * n_rows + r]`.
    codes: Vec<u8>,
    /// Per-feature ascending cut points. A value goes to bin `b` when
    /// `cuts[b - 1] <= v < cuts[b]`.
    cuts: Vec<Vec<f64>>,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m <= lo {
        hi
    } else {
        m
    }
}

fn feature_cuts(values: &mut [f64], max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in values.iter() {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= max_bins {
        return distinct
            .windows(2)
            .map(|w| midpoint(w[0].0, w[1].0))
            .collect();
    }
    let total = values.len();
    let mut cuts = Vec::with_capacity(max_bins - 1);
    let mut seen = 0usize;
    let mut next_target = 1usize;
    for w in distinct.windows(2) {
        seen += w[0].1;
        if seen * max_bins >= next_target * total {
            cuts.push(midpoint(w[0].0, w[1].0));
            while next_target * total <= seen * max_bins {
                next_target += 1;
            }
            if cuts.len() == max_bins - 1 {
                break;
            }
        }
    }
    cuts
}

impl BinnedData {
    /// Quantizes a row-major matrix.
    pub fn new(x: &[f64], n_rows: usize, n_features: usize) -> Self {
        assert_eq!(x.len(), n_rows * n_features, "matrix shape mismatch");
        let mut cuts = Vec::with_capacity(n_features);
        let mut codes = vec![0u8; n_rows * n_features];
        let mut column = vec![0.0; n_rows];
        for f in 0..n_features {
            for r in 0..n_rows {
                column[r] = x[r * n_features + f];
            }
            let mut sorted = column.clone();
            let fc = feature_cuts(&mut sorted, MAX_BINS);
            let out = &mut codes[f * n_rows..(f + 1) * n_rows];
            for r in 0..n_rows {
                out[r] = fc.partition_point(|&c| c <= column[r]) as u8;
            }
            cuts.push(fc);
        }
        BinnedData {
            n_rows,
            n_features,
            codes,
            cuts,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_bins(&self, f: usize) -> usize {
        self.cuts[f].len() + 1
    }

    fn column(&self, f: usize) -> &[u8] {
        &self.codes[f * self.n_rows..(f + 1) * self.n_rows]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
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

/// A regression tree stored as a flat node array; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn constant(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.split_count()
    }

    pub fn splits(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GrowParams {
    pub max_leaves: usize,
    pub min_leaf: usize,
    pub lambda: f64,
}

#[derive(Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    gain: f64,
    slot: usize,
    bin: usize,
}

struct Candidate {
    node: usize,
    start: usize,
    end: usize,
    g: f64,
    h: f64,
    hist: Vec<Bin>,
    best: Option<SplitChoice>,
}

struct Grower<'a> {
    data: &'a BinnedData,
    features: &'a [usize],
    offsets: Vec<usize>,
    grad: &'a [f64],
    hess: &'a [f64],
    params: GrowParams,
    pool: Vec<Vec<Bin>>,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let d = h + self.params.lambda;
        if d > 0.0 {
            -g / d
        } else {
            0.0
        }
    }

    fn take_hist(&mut self) -> Vec<Bin> {
        let len = *self.offsets.last().unwrap();
        match self.pool.pop() {
            Some(mut h) => {
                h.iter_mut().for_each(|b| *b = Bin::default());
                h
            }
            None => vec![Bin::default(); len],
        }
    }

    fn build_hist(&mut self, rows: &[u32]) -> Vec<Bin> {
        let mut hist = self.take_hist();
        for (slot, &f) in self.features.iter().enumerate() {
            let col = self.data.column(f);
            let base = &mut hist[self.offsets[slot]..self.offsets[slot + 1]];
            for &r in rows {
                let r = r as usize;
                let b = &mut base[col[r] as usize];
                b.g += self.grad[r];
                b.h += self.hess[r];
                b.n += 1;
            }
        }
        hist
    }

    fn best_split(&self, hist: &[Bin], g: f64, h: f64, n: usize) -> Option<SplitChoice> {
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let parent = self.score(g, h);
        let mut best: Option<SplitChoice> = None;
        for slot in 0..self.features.len() {
            let bins = &hist[self.offsets[slot]..self.offsets[slot + 1]];
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for (b, bin) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
                gl += bin.g;
                hl += bin.h;
                nl += bin.n as usize;
                if nl < min_leaf {
                    continue;
                }
                if n - nl < min_leaf {
                    break;
                }
                if bin.n == 0 {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(g - gl, h - hl) - parent;
                if gain > 1e-12 && best.is_none_or(|s| gain > s.gain) {
                    best = Some(SplitChoice { gain, slot, bin: b });
                }
            }
        }
        best
    }
}

/// Grows one tree on `rows` using only the listed feature columns. `grad` and
/// `hess` are indexed by row id.
pub fn grow(
    data: &BinnedData,
    rows: &[u32],
    features: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: GrowParams,
) -> Tree {
    let mut offsets = Vec::with_capacity(features.len() + 1);
    offsets.push(0);
    for &f in features {
        offsets.push(offsets.last().unwrap() + data.n_bins(f));
    }
    let mut grower = Grower {
        data,
        features,
        offsets,
        grad,
        hess,
        params,
        pool: Vec::new(),
    };
    let mut order: Vec<u32> = rows.to_vec();
    let (g, h) = order.iter().fold((0.0, 0.0), |(g, h), &r| {
        (g + grad[r as usize], h + hess[r as usize])
    });
    let mut nodes = vec![Node::Leaf {
        value: grower.leaf_value(g, h),
    }];
    if rows.is_empty() {
        return Tree { nodes };
    }
    let hist = grower.build_hist(&order);
    let best = grower.best_split(&hist, g, h, order.len());
    let mut open = vec![Candidate {
        node: 0,
        start: 0,
        end: order.len(),
        g,
        h,
        hist,
        best,
    }];
    let mut leaves = 1;
    while leaves < params.max_leaves.max(1) {
        let mut pick: Option<usize> = None;
        for (i, c) in open.iter().enumerate() {
            if let Some(s) = c.best {
                if pick.is_none_or(|p| s.gain > open[p].best.unwrap().gain) {
                    pick = Some(i);
                }
            }
        }
        let Some(pick) = pick else { break };
        let cand = open.swap_remove(pick);
        let split = cand.best.unwrap();
        let feature = features[split.slot];
        let col = data.column(feature);
        let slice = &mut order[cand.start..cand.end];
        let mut mid = 0;
        for i in 0..slice.len() {
            if (col[slice[i] as usize] as usize) <= split.bin {
                slice.swap(i, mid);
                mid += 1;
            }
        }
        let mid = cand.start + mid;
        let left_rows = &order[cand.start..mid];
        let right_rows = &order[mid..cand.end];
        let sum = |rs: &[u32]| {
            rs.iter().fold((0.0, 0.0), |(g, h), &r| {
                (g + grad[r as usize], h + hess[r as usize])
            })
        };
        let (gl, hl) = sum(left_rows);
        let (gr, hr) = (cand.g - gl, cand.h - hl);
        let (small_is_left, small_rows) = if left_rows.len() <= right_rows.len() {
            (true, left_rows)
        } else {
            (false, right_rows)
        };
        let small = grower.build_hist(small_rows);
        let mut large = cand.hist;
        for (l, s) in large.iter_mut().zip(&small) {
            l.g -= s.g;
            l.h -= s.h;
            l.n -= s.n;
        }
        let (lh, rh) = if small_is_left {
            (small, large)
        } else {
            (large, small)
        };
        let left_node = nodes.len();
        nodes.push(Node::Leaf {
            value: grower.leaf_value(gl, hl),
        });
        nodes.push(Node::Leaf {
            value: grower.leaf_value(gr, hr),
        });
        nodes[cand.node] = Node::Split {
            feature,
            threshold: data.cuts[feature][split.bin],
            left: left_node,
            right: left_node + 1,
        };
        leaves += 1;
        let lbest = grower.best_split(&lh, gl, hl, mid - cand.start);
        let rbest = grower.best_split(&rh, gr, hr, cand.end - mid);
        for (node, start, end, g, h, hist, best) in [
            (left_node, cand.start, mid, gl, hl, lh, lbest),
            (left_node + 1, mid, cand.end, gr, hr, rh, rbest),
        ] {
            if best.is_some() {
                open.push(Candidate {
                    node,
                    start,
                    end,
                    g,
                    h,
                    hist,
                    best,
                });
            } else {
                grower.pool.push(hist);
            }
        }
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squared(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (y.iter().map(|v| -v).collect(), vec![1.0; y.len()])
    }

    #[test]
    fn cuts_are_midpoints_for_few_values() {
        let mut v = vec![3.0, 1.0, 2.0, 1.0];
        assert_eq!(feature_cuts(&mut v, 256), vec![1.5, 2.5]);
        let mut c = vec![4.0; 10];
        assert!(feature_cuts(&mut c, 256).is_empty());
    }

    #[test]
    fn many_values_are_capped() {
        let mut v: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        let cuts = feature_cuts(&mut v, 256);
        assert!(cuts.len() <= 255 && cuts.len() > 200);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adjacent_floats_split_correctly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = vec![a, b, a, b];
        let data = BinnedData::new(&x, 4, 1);
        let (g, h) = squared(&[0.0, 1.0, 0.0, 1.0]);
        let rows: Vec<u32> = (0..4).collect();
        let params = GrowParams {
            max_leaves: 4,
            min_leaf: 1,
            lambda: 0.0,
        };
        let tree = grow(&data, &rows, &[0], &g, &h, params);
        assert_eq!(tree.predict(&[a]), 0.0);
        assert_eq!(tree.predict(&[b]), 1.0);
    }

    #[test]
    fn step_function_is_recovered() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let data = BinnedData::new(&x, 100, 1);
        let (g, h) = squared(&y);
        let rows: Vec<u32> = (0..100).collect();
        let params = GrowParams {
            max_leaves: 2,
            min_leaf: 1,
            lambda: 0.0,
        };
        let tree = grow(&data, &rows, &[0], &g, &h, params);
        assert_eq!(tree.leaf_count(), 2);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(tree.predict(&[*xi]), *yi);
        }
    }

    #[test]
    fn leaf_cap_and_min_leaf_hold() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % n) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        let data = BinnedData::new(&x, n, 1);
        let (g, h) = squared(&y);
        let rows: Vec<u32> = (0..n as u32).collect();
        for cap in [1, 3, 10, 200] {
            let params = GrowParams {
                max_leaves: cap,
                min_leaf: 4,
                lambda: 0.0,
            };
            let tree = grow(&data, &rows, &[0], &g, &h, params);
            assert!(tree.leaf_count() <= cap);
            assert!(tree.leaf_count() <= n / 4);
        }
    }

    #[test]
    fn constant_feature_never_splits() {
        let x = vec![5.0; 20];
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let data = BinnedData::new(&x, 20, 1);
        let (g, h) = squared(&y);
        let rows: Vec<u32> = (0..20).collect();
        let params = GrowParams {
            max_leaves: 8,
            min_leaf: 1,
            lambda: 0.0,
        };
        let tree = grow(&data, &rows, &[0], &g, &h, params);
        assert_eq!(tree.split_count(), 0);
        assert!((tree.predict(&[5.0]) - 9.5).abs() < 1e-12);
    }
}
