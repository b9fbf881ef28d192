//! Post-pruning by subtree replacement.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{argmax, Sample, TrainSet, TreeModel, TreeNode};

/// Extra errors predicted for a leaf holding `n` training weight of which
/// `e` is misclassified: the upper limit of the binomial confidence interval
/// at level `confidence`, minus `e` (C4.5's pessimistic estimate).
pub fn add_errors(n: f64, e: f64, confidence: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        // Linear interpolation between e = 0 and e = 1.
        return base + e * (add_errors(n, 1.0, confidence) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - confidence);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
    r * n - e
}

/// Nodes in preorder; reversing gives a post-order suitable for bottom-up passes.
fn preorder(nodes: &[TreeNode]) -> Vec<usize> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        order.push(i);
        if let TreeNode::Split { left, right, .. } = nodes[i] {
            stack.push(right);
            stack.push(left);
        }
    }
    order
}

fn collapse(node: &mut TreeNode) {
    let counts = node.class_counts().to_vec();
    let predicted = argmax(&counts);
    *node = TreeNode::Leaf {
        class_counts: counts,
        predicted,
    };
}

/// Replaces a subtree with a leaf whenever the leaf's pessimistic error is
/// no worse than the subtree's (within 0.1, as C4.5 does).
pub fn prune_pessimistic(model: &mut TreeModel, confidence: f64) {
    let leaf_estimate = |counts: &[f64]| {
        let n: f64 = counts.iter().sum();
        let e = n - counts[argmax(counts)];
        e + add_errors(n, e, confidence)
    };
    let mut estimate = vec![0.0; model.nodes.len()];
    for i in preorder(&model.nodes).into_iter().rev() {
        let as_leaf = leaf_estimate(model.nodes[i].class_counts());
        estimate[i] = match model.nodes[i] {
            TreeNode::Leaf { .. } => as_leaf,
            TreeNode::Split { left, right, .. } => {
                let subtree = estimate[left] + estimate[right];
                if as_leaf <= subtree + 0.1 {
                    collapse(&mut model.nodes[i]);
                    as_leaf
                } else {
                    subtree
                }
            }
        };
    }
    model.compact();
}

/// Bottom-up reduced-error pruning: a subtree becomes a leaf whenever that
/// does not increase the weighted error on `holdout`. An empty holdout
/// leaves the tree untouched.
pub fn prune_reduced_error(model: &mut TreeModel, data: &TrainSet, holdout: &Sample) {
    if holdout.is_empty() {
        return;
    }
    let k = model.classes.len();
    // Holdout weight per class reaching each node.
    let mut reach = vec![vec![0.0; k]; model.nodes.len()];
    for (&row, &w) in holdout.rows.iter().zip(&holdout.weights) {
        let x = data.row(row);
        let label = data.label(row);
        let mut i = 0;
        loop {
            reach[i][label] += w;
            match &model.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => break,
            }
        }
    }
    let leaf_error = |node: &TreeNode, reach: &[f64]| {
        let predicted = argmax(node.class_counts());
        reach.iter().sum::<f64>() - reach[predicted]
    };
    let mut error = vec![0.0; model.nodes.len()];
    for i in preorder(&model.nodes).into_iter().rev() {
        let as_leaf = leaf_error(&model.nodes[i], &reach[i]);
        error[i] = match model.nodes[i] {
            TreeNode::Leaf { .. } => as_leaf,
            TreeNode::Split { left, right, .. } => {
                let subtree = error[left] + error[right];
                if as_leaf <= subtree + 1e-12 {
                    collapse(&mut model.nodes[i]);
                    as_leaf
                } else {
                    subtree
                }
            }
        };
    }
    model.compact();
}
