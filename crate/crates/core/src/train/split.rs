use crate::error::{Error, Result};
use crate::rng::{derive_path, Rng};
use crate::trial::Label;

/// Held-out test share of the headline protocol.
pub const TEST_FRACTION: f64 = 0.15;
/// Validation share of what remains after the test split.
pub const VAL_FRACTION: f64 = 0.20;

/// Disjoint index sets into the instance list the plan was made for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub fit: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn by_class(labels: &[Label]) -> [Vec<usize>; 3] {
    let mut out: [Vec<usize>; 3] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        out[l.index()].push(i);
    }
    out
}

/// Splits `total` across classes in proportion to `counts` by largest remainder.
fn allocate(counts: &[usize; 3], total: usize) -> [usize; 3] {
    let n: usize = counts.iter().sum();
    let quota: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * total as f64 / n as f64)
        .collect();
    let mut alloc = [0usize; 3];
    for c in 0..3 {
        alloc[c] = quota[c].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quota[a] - quota[a].floor();
        let fb = quota[b] - quota[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total - alloc.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if alloc[c] < counts[c] {
            alloc[c] += 1;
            left -= 1;
        }
    }
    alloc
}

fn shuffled_classes(labels: &[Label], seed: u64) -> [Vec<usize>; 3] {
    let mut classes = by_class(labels);
    for (c, idx) in classes.iter_mut().enumerate() {
        Rng::new(derive_path(seed, &[c as u64])).shuffle(idx);
    }
    classes
}

/// Stratified fit/validation/test plan: test = round(0.15·N), validation = round(0.20·(N − test)).
pub fn make_splits(labels: &[Label], seed: u64) -> Result<SplitPlan> {
    let classes = shuffled_classes(labels, seed);
    for (c, idx) in classes.iter().enumerate() {
        if idx.len() < 3 {
            return Err(Error::invalid(format!(
                "class {} has {} instances; splitting needs at least 3",
                Label::ALL[c],
                idx.len()
            )));
        }
    }
    let n = labels.len();
    let n_test = (TEST_FRACTION * n as f64).round() as usize;
    let n_val = (VAL_FRACTION * (n - n_test) as f64).round() as usize;
    let counts = classes.each_ref().map(Vec::len);
    let test_alloc = allocate(&counts, n_test);
    let rest = [0, 1, 2].map(|c| counts[c] - test_alloc[c]);
    let val_alloc = allocate(&rest, n_val);
    let mut plan = SplitPlan {
        fit: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for c in 0..3 {
        let idx = &classes[c];
        let (t, v) = (test_alloc[c], val_alloc[c]);
        plan.test.extend(&idx[..t]);
        plan.val.extend(&idx[t..t + v]);
        plan.fit.extend(&idx[t + v..]);
    }
    plan.fit.sort_unstable();
    plan.val.sort_unstable();
    plan.test.sort_unstable();
    Ok(plan)
}

/// Stratified fit/validation split of a training pool (indices into `pool`).
pub fn split_validation(pool_labels: &[Label], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let classes = shuffled_classes(pool_labels, seed);
    let n_val = (VAL_FRACTION * pool_labels.len() as f64).round() as usize;
    let alloc = allocate(&classes.each_ref().map(Vec::len), n_val);
    let mut fit = Vec::new();
    let mut val = Vec::new();
    for c in 0..3 {
        val.extend(&classes[c][..alloc[c]]);
        fit.extend(&classes[c][alloc[c]..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

/// Fold index per instance: classes are shuffled, concatenated, and dealt round-robin.
pub fn fold_assignment(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || labels.len() < k {
        return Err(Error::invalid(format!(
            "{k}-fold cross-validation needs k ≥ 2 and at least k instances, got {}",
            labels.len()
        )));
    }
    let classes = shuffled_classes(labels, seed);
    let mut folds = vec![0; labels.len()];
    for (pos, &i) in classes.iter().flatten().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}
