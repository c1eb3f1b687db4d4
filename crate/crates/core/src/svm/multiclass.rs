use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use super::smo::{train_binary_refs, BinarySvmModel, TrainOptions};
use crate::error::{Error, Result};
use crate::vectorizer::SparseVector;

/// One binary machine per unordered class pair, in pair-lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MulticlassRepr", into = "MulticlassRepr")]
pub struct MulticlassSvmModel {
    classes: Vec<String>,
    machines: Vec<BinarySvmModel>,
}

#[derive(Serialize, Deserialize)]
struct MulticlassRepr {
    classes: Vec<String>,
    machines: Vec<BinarySvmModel>,
}

impl TryFrom<MulticlassRepr> for MulticlassSvmModel {
    type Error = Error;

    fn try_from(r: MulticlassRepr) -> Result<Self> {
        MulticlassSvmModel::from_parts(r.classes, r.machines)
    }
}

impl From<MulticlassSvmModel> for MulticlassRepr {
    fn from(m: MulticlassSvmModel) -> Self {
        MulticlassRepr {
            classes: m.classes,
            machines: m.machines,
        }
    }
}

fn class_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

impl MulticlassSvmModel {
    /// Assembles a model from already trained machines, checking the class order,
    /// machine count, pair labels and dimensions.
    pub fn from_parts(classes: Vec<String>, machines: Vec<BinarySvmModel>) -> Result<Self> {
        if classes.len() < 2 || classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ModelFormat(
                "need at least two strictly sorted classes".into(),
            ));
        }
        let expected = classes.len() * (classes.len() - 1) / 2;
        if machines.len() != expected {
            return Err(Error::ModelFormat(format!(
                "{} classes need {expected} machines, found {}",
                classes.len(),
                machines.len()
            )));
        }
        for ((a, b), m) in class_pairs(classes.len()).zip(&machines) {
            m.validate()?;
            if m.label_pair != (classes[a].clone(), classes[b].clone()) {
                return Err(Error::ModelFormat(format!(
                    "machine {:?} out of place; expected ({}, {})",
                    m.label_pair, classes[a], classes[b]
                )));
            }
        }
        let dim = machines[0].dim();
        if machines.iter().any(|m| m.dim() != dim) {
            return Err(Error::ModelFormat("machines disagree on feature dimension".into()));
        }
        Ok(MulticlassSvmModel { classes, machines })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn machines(&self) -> &[BinarySvmModel] {
        &self.machines
    }

    pub fn dim(&self) -> usize {
        self.machines[0].dim()
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.info.converged)
    }

    /// Majority vote over all pairwise machines. A tie goes to the class with the
    /// largest accumulated |decision| from the votes it won, then to the earliest class.
    pub fn predict(&self, x: &SparseVector) -> Result<&str> {
        if x.dim() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let n = self.classes.len();
        let mut votes = vec![0usize; n];
        let mut margin = vec![0.0f64; n];
        for ((a, b), m) in class_pairs(n).zip(&self.machines) {
            let d = m.decision_unchecked(x);
            let winner = if d > 0.0 { a } else { b };
            votes[winner] += 1;
            margin[winner] += d.abs();
        }
        let mut best = 0;
        for c in 1..n {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        Ok(&self.classes[best])
    }

    pub fn predict_many(&self, rows: &[SparseVector]) -> Result<Vec<String>> {
        rows.iter()
            .map(|r| self.predict(r).map(str::to_string))
            .collect()
    }
}

pub fn predict<'m>(model: &'m MulticlassSvmModel, x: &SparseVector) -> Result<&'m str> {
    model.predict(x)
}

/// Trains one binary machine per class pair on that pair's rows only; the
/// lexicographically smaller class of a pair is the positive one.
pub fn train_one_vs_one<S: AsRef<str>>(
    rows: &[SparseVector],
    labels: &[S],
    params: &KernelParams,
    opts: &TrainOptions,
) -> Result<MulticlassSvmModel> {
    if rows.len() != labels.len() {
        return Err(Error::Shape {
            expected: rows.len(),
            found: labels.len(),
        });
    }
    let classes: Vec<String> = labels
        .iter()
        .map(|l| l.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "one-vs-one needs at least two classes, found {}",
            classes.len()
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search_by(|c| c.as_str().cmp(l.as_ref())).unwrap())
        .collect();

    let pairs: Vec<(usize, usize)> = class_pairs(classes.len()).collect();
    let train_pair = |&(a, b): &(usize, usize)| {
        let (mut sub_rows, mut sub_y) = (Vec::new(), Vec::new());
        for (r, &k) in rows.iter().zip(&class_of) {
            if k == a {
                sub_rows.push(r);
                sub_y.push(1i8);
            } else if k == b {
                sub_rows.push(r);
                sub_y.push(-1i8);
            }
        }
        train_binary_refs(
            &sub_rows,
            &sub_y,
            params,
            opts,
            (classes[a].clone(), classes[b].clone()),
        )
    };
    let machines = if opts.parallel {
        pairs.par_iter().map(train_pair).collect::<Result<Vec<_>>>()?
    } else {
        pairs.iter().map(train_pair).collect::<Result<Vec<_>>>()?
    };

    Ok(MulticlassSvmModel { classes, machines })
}
