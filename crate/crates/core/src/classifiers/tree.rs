//! Decision tree grown by maximum information gain.
//!
//! Numeric features split at midpoints between consecutive distinct values;
//! categorical features split multiway, one branch per category. Instance
//! weights enter every count, rescaled so they sum to the instance count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_layout, layout_of, ClassDistribution, Classifier, Layout};
use crate::data::{Dataset, FeatureKind};
use crate::error::Result;
use crate::seed;

/// Gains at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Pick each split uniformly among the `top` best candidates (randomisation).
    pub random_split: Option<RandomSplit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSplit {
    pub top: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            min_leaf: 2,
            max_depth: 25,
            random_split: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum Split {
    /// `x <= threshold` goes to child 0, otherwise child 1.
    Threshold { feature: usize, threshold: f64 },
    /// Child `c` receives category `c`.
    Categories { feature: usize },
}

impl Split {
    pub fn feature(&self) -> usize {
        match self {
            Split::Threshold { feature, .. } | Split::Categories { feature } => *feature,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Weighted class counts of the training instances reaching this node.
    pub counts: [f64; 2],
    pub n: usize,
    pub distribution: ClassDistribution,
    pub split: Option<Split>,
    pub gain: f64,
    /// Empty slots are branches no training instance reached; they predict with this node's distribution.
    pub children: Vec<Option<Node>>,
}

impl Node {
    fn leaf(counts: [f64; 2], n: usize) -> Self {
        Self {
            counts,
            n,
            distribution: laplace(counts),
            split: None,
            gain: 0.0,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Laplace-smoothed class distribution: (c + 1) / (n + 2).
pub fn laplace(counts: [f64; 2]) -> ClassDistribution {
    let total = counts[0] + counts[1] + 2.0;
    ClassDistribution([(counts[0] + 1.0) / total, (counts[1] + 1.0) / total])
}

/// Shannon entropy in bits of a (possibly weighted) count vector.
pub fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// H(parent) minus the weighted mean entropy of the children.
pub fn information_gain(parent: [f64; 2], children: &[[f64; 2]]) -> f64 {
    let total = parent[0] + parent[1];
    if total <= 0.0 {
        return 0.0;
    }
    let remainder: f64 = children
        .iter()
        .map(|c| (c[0] + c[1]) / total * entropy(c))
        .sum();
    entropy(&parent) - remainder
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub layout: Layout,
    pub root: Node,
}

#[derive(Clone, Debug)]
struct Candidate {
    split: Split,
    gain: f64,
}

struct Grower<'a> {
    ds: &'a Dataset,
    weights: Vec<f64>,
    cfg: &'a TreeConfig,
    rng: Option<rand_chacha::ChaCha8Rng>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &i in idx {
            c[self.ds.instances[i].label as usize] += self.weights[i];
        }
        c
    }

    fn candidates(&self, idx: &[usize], parent: [f64; 2]) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (j, f) in self.ds.features.iter().enumerate() {
            match &f.kind {
                FeatureKind::Categorical(cats) => {
                    if let Some(c) = self.categorical_candidate(idx, parent, j, cats.len()) {
                        out.push(c);
                    }
                }
                FeatureKind::Numeric => self.numeric_candidates(idx, parent, j, &mut out),
            }
        }
        out
    }

    fn categorical_candidate(&self, idx: &[usize], parent: [f64; 2], j: usize, card: usize) -> Option<Candidate> {
        let mut counts = vec![[0.0; 2]; card];
        let mut sizes = vec![0usize; card];
        for &i in idx {
            let inst = &self.ds.instances[i];
            let c = inst.values[j] as usize;
            counts[c][inst.label as usize] += self.weights[i];
            sizes[c] += 1;
        }
        let nonempty = sizes.iter().filter(|&&s| s > 0).count();
        if nonempty < 2 || sizes.iter().any(|&s| s > 0 && s < self.cfg.min_leaf) {
            return None;
        }
        let gain = information_gain(parent, &counts);
        (gain > GAIN_EPS).then_some(Candidate {
            split: Split::Categories { feature: j },
            gain,
        })
    }

    fn numeric_candidates(&self, idx: &[usize], parent: [f64; 2], j: usize, out: &mut Vec<Candidate>) {
        let value = |i: usize| self.ds.instances[i].values[j];
        let mut sorted = idx.to_vec();
        sorted.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let n = sorted.len();
        let mut left = [0.0; 2];
        for pos in 0..n.saturating_sub(1) {
            let i = sorted[pos];
            left[self.ds.instances[i].label as usize] += self.weights[i];
            let (v, next) = (value(i), value(sorted[pos + 1]));
            if v == next {
                continue;
            }
            let n_left = pos + 1;
            if n_left < self.cfg.min_leaf || n - n_left < self.cfg.min_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let gain = information_gain(parent, &[left, right]);
            if gain > GAIN_EPS {
                out.push(Candidate {
                    split: Split::Threshold {
                        feature: j,
                        threshold: v + (next - v) / 2.0,
                    },
                    gain,
                });
            }
        }
    }

    fn choose(&mut self, mut candidates: Vec<Candidate>) -> Option<Candidate> {
        // best gain first; ties by lowest feature index, then lowest threshold
        candidates.sort_by(|a, b| {
            b.gain.total_cmp(&a.gain).then(a.split.feature().cmp(&b.split.feature())).then_with(|| {
                match (&a.split, &b.split) {
                    (Split::Threshold { threshold: x, .. }, Split::Threshold { threshold: y, .. }) => x.total_cmp(y),
                    _ => std::cmp::Ordering::Equal,
                }
            })
        });
        let pick = match (&mut self.rng, self.cfg.random_split) {
            (Some(rng), Some(r)) if !candidates.is_empty() => {
                let top = r.top.max(1).min(candidates.len());
                rng.random_range(0..top)
            }
            _ => 0,
        };
        candidates.into_iter().nth(pick)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&idx);
        let mut node = Node::leaf(counts, idx.len());
        let pure = counts[0] <= 0.0 || counts[1] <= 0.0;
        if pure || depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_leaf.max(1) {
            return node;
        }
        let Some(best) = self.choose(self.candidates(&idx, counts)) else {
            return node;
        };
        let branches = match &best.split {
            Split::Threshold { feature, threshold } => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.ds.instances[i].values[*feature] <= *threshold);
                vec![l, r]
            }
            Split::Categories { feature } => {
                let card = self.ds.features[*feature].cardinality().unwrap_or(0);
                let mut b = vec![Vec::new(); card];
                for &i in &idx {
                    b[self.ds.instances[i].values[*feature] as usize].push(i);
                }
                b
            }
        };
        node.children = branches
            .into_iter()
            .map(|b| (!b.is_empty()).then(|| self.grow(b, depth + 1)))
            .collect();
        node.gain = best.gain;
        node.split = Some(best.split);
        node
    }
}

pub fn train_tree(train: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(crate::error::Error::EmptyDataset);
    }
    let total = train.total_weight();
    let n = train.len() as f64;
    let weights = train
        .instances
        .iter()
        .map(|i| if total > 0.0 { i.weight * n / total } else { 1.0 })
        .collect();
    let mut grower = Grower {
        ds: train,
        weights,
        cfg,
        rng: cfg.random_split.map(|r| seed::rng(r.seed)),
    };
    let root = grower.grow((0..train.len()).collect(), 0);
    Ok(TreeModel {
        layout: layout_of(&train.features),
        root,
    })
}

/// Best root information gain obtainable from feature `feature` alone
/// (multiway for categorical, best midpoint threshold for numeric).
pub fn root_gain(train: &Dataset, feature: usize, min_leaf: usize) -> f64 {
    let cfg = TreeConfig {
        min_leaf,
        ..Default::default()
    };
    let grower = Grower {
        ds: train,
        weights: vec![1.0; train.len()],
        cfg: &cfg,
        rng: None,
    };
    let idx: Vec<usize> = (0..train.len()).collect();
    let parent = grower.counts(&idx);
    grower
        .candidates(&idx, parent)
        .into_iter()
        .filter(|c| c.split.feature() == feature)
        .map(|c| c.gain)
        .fold(0.0, f64::max)
}

impl TreeModel {
    pub fn leaf_for(&self, x: &[f64]) -> Result<&Node> {
        check_layout(&self.layout, x)?;
        let mut node = &self.root;
        loop {
            let Some(split) = &node.split else {
                return Ok(node);
            };
            let branch = match split {
                Split::Threshold { feature, threshold } => usize::from(x[*feature] > *threshold),
                Split::Categories { feature } => x[*feature] as usize,
            };
            match node.children.get(branch).and_then(Option::as_ref) {
                Some(child) => node = child,
                None => return Ok(node),
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            n.children.iter().flatten().map(|c| 1 + go(c)).max().unwrap_or(0)
        }
        go(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        fn go(n: &Node) -> usize {
            if n.is_leaf() {
                1
            } else {
                n.children.iter().flatten().map(go).sum()
            }
        }
        go(&self.root)
    }

    /// Internal nodes in depth-first order.
    pub fn splits(&self) -> Vec<&Split> {
        fn go<'a>(n: &'a Node, out: &mut Vec<&'a Split>) {
            if let Some(s) = &n.split {
                out.push(s);
            }
            for c in n.children.iter().flatten() {
                go(c, out);
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut out);
        out
    }
}

impl Classifier for TreeModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        Ok(self.leaf_for(x)?.distribution)
    }
}
