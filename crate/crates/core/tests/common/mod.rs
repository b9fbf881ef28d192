//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the library code paths being checked.
#![allow(dead_code)]

pub const EPS: f64 = 1e-12;

pub fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

fn counts_where(rows: &[Vec<f64>], labels: &[usize], k: usize, keep: impl Fn(&[f64]) -> bool) -> Vec<f64> {
    let mut c = vec![0.0; k];
    for (r, &y) in rows.iter().zip(labels) {
        if keep(r) {
            c[y] += 1.0;
        }
    }
    c
}

/// Midpoint that keeps `lo` left of and `hi` right of the threshold.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// (threshold, info gain, gain ratio) for every midpoint of `feature`,
/// recounting each side by filtering the raw rows.
pub fn score_all(rows: &[Vec<f64>], labels: &[usize], k: usize, feature: usize) -> Vec<(f64, f64, f64)> {
    let mut distinct: Vec<f64> = rows.iter().map(|r| r[feature]).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let n = rows.len() as f64;
    let parent = entropy(&counts_where(rows, labels, k, |_| true));
    distinct
        .windows(2)
        .map(|w| {
            let t = midpoint(w[0], w[1]);
            let l = counts_where(rows, labels, k, |r| r[feature] <= t);
            let r = counts_where(rows, labels, k, |r| r[feature] > t);
            let (nl, nr) = (l.iter().sum::<f64>(), r.iter().sum::<f64>());
            let (pl, pr) = (nl / n, nr / n);
            let gain = parent - pl * entropy(&l) - pr * entropy(&r);
            let split_info = -(pl * pl.log2()) - pr * pr.log2();
            (t, gain, gain / split_info)
        })
        .collect()
}

/// Best (threshold, score); gain ratio only considers thresholds whose gain
/// reaches the mean gain. Ties resolve to the lowest threshold.
pub fn best_split(
    rows: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    feature: usize,
    gain_ratio: bool,
) -> Option<(f64, f64)> {
    let scored = score_all(rows, labels, k, feature);
    if scored.is_empty() {
        return None;
    }
    let mean = scored.iter().map(|s| s.1).sum::<f64>() / scored.len() as f64;
    let pool: Vec<(f64, f64)> = if gain_ratio {
        scored
            .iter()
            .filter(|s| s.1 >= mean - EPS)
            .map(|s| (s.0, s.2))
            .collect()
    } else {
        scored.iter().map(|s| (s.0, s.1)).collect()
    };
    let top = pool.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    pool.into_iter().find(|p| p.1 >= top - EPS)
}

pub enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Node::Leaf(c) => *c,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

fn majority(labels: &[usize], k: usize) -> usize {
    let mut c = vec![0usize; k];
    for &y in labels {
        c[y] += 1;
    }
    let mut best = 0;
    for i in 0..k {
        if c[i] > c[best] {
            best = i;
        }
    }
    best
}

/// Unpruned information-gain tree grown by exhaustive search at every node:
/// all (feature, threshold) pairs are scored, ties going to the smaller
/// feature then the lower threshold; stops on purity or when no feature varies.
pub fn greedy_tree(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Node {
    let distinct_labels = {
        let mut l = labels.to_vec();
        l.sort_unstable();
        l.dedup();
        l.len()
    };
    if distinct_labels <= 1 {
        return Node::Leaf(majority(labels, k));
    }
    // Best positive-gain split; failing that, the best zero-gain split so
    // impure nodes keep splitting while any feature varies.
    let mut best: Option<(usize, f64, f64)> = None;
    let mut fallback: Option<(usize, f64, f64)> = None;
    for f in 0..rows[0].len() {
        for (t, gain, _) in score_all(rows, labels, k, f) {
            let slot = if gain <= EPS { &mut fallback } else { &mut best };
            if slot.is_none_or(|b| gain > b.2 + EPS) {
                *slot = Some((f, t, gain));
            }
        }
    }
    let Some((feature, threshold, _)) = best.or(fallback) else {
        return Node::Leaf(majority(labels, k));
    };
    let (mut lr, mut ll, mut rr, mut rl) = (vec![], vec![], vec![], vec![]);
    for (r, &y) in rows.iter().zip(labels) {
        if r[feature] <= threshold {
            lr.push(r.clone());
            ll.push(y);
        } else {
            rr.push(r.clone());
            rl.push(y);
        }
    }
    Node::Split {
        feature,
        threshold,
        left: Box::new(greedy_tree(&lr, &ll, k)),
        right: Box::new(greedy_tree(&rr, &rl, k)),
    }
}

/// Indices of the `k` nearest other points (Euclidean, ties to lower index);
/// a lone point is its own neighbour.
pub fn knn(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    if points.len() == 1 {
        return vec![0];
    }
    let mut d: Vec<(f64, usize)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| {
            let dist: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            (dist, j)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.truncate(k.min(points.len() - 1));
    d.into_iter().map(|x| x.1).collect()
}

/// True when `p` lies on the closed segment from `a` to `b` within `tol`
/// per coordinate.
pub fn on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64) -> bool {
    // Solve for the interpolation factor on the widest coordinate.
    let (axis, span) = a
        .iter()
        .zip(b)
        .map(|(x, y)| y - x)
        .enumerate()
        .fold(
            (0, 0.0f64),
            |acc, (i, d)| if d.abs() > acc.1.abs() { (i, d) } else { acc },
        );
    let u = if span == 0.0 { 0.0 } else { (p[axis] - a[axis]) / span };
    if !(-tol..=1.0 + tol).contains(&u) {
        return false;
    }
    p.iter()
        .zip(a.iter().zip(b))
        .all(|(&pi, (&ai, &bi))| (pi - (ai + u * (bi - ai))).abs() <= tol)
}

/// Segment membership against every original point and its recomputed
/// nearest neighbours.
pub fn on_any_smote_segment(p: &[f64], originals: &[Vec<f64>], k: usize, tol: f64) -> bool {
    (0..originals.len()).any(|i| {
        knn(originals, i, k)
            .into_iter()
            .any(|j| on_segment(p, &originals[i], &originals[j], tol))
    })
}

/// (accuracy, per-class precision (None = undefined), per-class recall),
/// percentages, straight from the (truth, prediction) list.
pub fn recount(pairs: &[(usize, usize)], k: usize) -> (f64, Vec<Option<f64>>, Vec<f64>) {
    let n = pairs.len() as f64;
    let correct = pairs.iter().filter(|(t, p)| t == p).count() as f64;
    let precision = (0..k)
        .map(|c| {
            let predicted = pairs.iter().filter(|(_, p)| *p == c).count();
            let hit = pairs.iter().filter(|(t, p)| *p == c && *t == c).count();
            (predicted > 0).then(|| 100.0 * hit as f64 / predicted as f64)
        })
        .collect();
    let recall = (0..k)
        .map(|c| {
            let actual = pairs.iter().filter(|(t, _)| *t == c).count();
            let hit = pairs.iter().filter(|(t, p)| *p == c && *t == c).count();
            if actual == 0 {
                0.0
            } else {
                100.0 * hit as f64 / actual as f64
            }
        })
        .collect();
    (100.0 * correct / n, precision, recall)
}
