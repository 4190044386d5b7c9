//! Outcome tuples `y_1^k` and families of matrix variables indexed by them
//! that are covariant under simultaneous permutation of labels and systems.

use extendicap_sdp::LmiBuilder;
use serde::{Deserialize, Serialize};

use crate::affine::HermExpr;
use crate::error::Result;
use crate::qlinalg::{permutations, SystemLayout};

/// How permutation covariance `W^pi(X^{y o pi}) = X^y` is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    /// One variable per tuple plus explicit equalities for every `pi`.
    #[default]
    Explicit,
    /// Variables only for sorted tuples; the rest are defined by conjugation.
    Orbit,
}

/// All tuples in `{0..n}^k`, lexicographic with the first entry most significant.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = n.pow(k as u32);
    (0..total)
        .map(|mut i| {
            let mut t = vec![0; k];
            for slot in t.iter_mut().rev() {
                *slot = i % n;
                i /= n;
            }
            t
        })
        .collect()
}

pub fn tuple_index(y: &[usize], n: usize) -> usize {
    y.iter().fold(0, |acc, v| acc * n + v)
}

/// Stable argsort: `y[pi[i]]` is the `i`-th smallest entry.
pub(crate) fn argsort(y: &[usize]) -> Vec<usize> {
    let mut pi: Vec<usize> = (0..y.len()).collect();
    pi.sort_by_key(|&i| (y[i], i));
    pi
}

pub(crate) fn compose_label(y: &[usize], pi: &[usize]) -> Vec<usize> {
    pi.iter().map(|&p| y[p]).collect()
}

pub(crate) struct CovariantFamily {
    pub tuples: Vec<Vec<usize>>,
    pub exprs: Vec<HermExpr>,
    /// Whether the tuple owns its variable (as opposed to being a conjugate).
    pub independent: Vec<bool>,
    /// `(y, pi)` for every imposed equality `W^pi(X^{y o pi}) = X^y`.
    pub relations: Vec<(Vec<usize>, Vec<usize>)>,
}

pub(crate) struct FamilySpec<'a> {
    pub layout: &'a SystemLayout,
    pub blocks: &'a [&'a str],
    pub outcomes: usize,
    pub real: bool,
    pub covariance: Covariance,
    pub name: &'a str,
}

pub(crate) fn covariant_family(b: &mut LmiBuilder, spec: &FamilySpec<'_>) -> Result<CovariantFamily> {
    let k = spec.blocks.len();
    let tuples = tuples(spec.outcomes, k);
    let label = |y: &[usize]| {
        let s: Vec<String> = y.iter().map(|v| v.to_string()).collect();
        format!("{}^{}", spec.name, s.join(""))
    };
    let mut exprs: Vec<Option<HermExpr>> = vec![None; tuples.len()];
    let mut independent = vec![false; tuples.len()];
    let mut relations = Vec::new();
    match spec.covariance {
        Covariance::Explicit => {
            for (i, y) in tuples.iter().enumerate() {
                exprs[i] = Some(HermExpr::variable(b, spec.layout.clone(), &label(y), spec.real));
                independent[i] = true;
            }
            let perms = permutations(k);
            for (i, y) in tuples.iter().enumerate() {
                for pi in perms.iter().skip(1) {
                    let src = tuple_index(&compose_label(y, pi), spec.outcomes);
                    let moved = exprs[src].as_ref().unwrap().conjugate_by_permutation(spec.blocks, pi)?;
                    moved.difference(exprs[i].as_ref().unwrap())?.add_zero(b);
                    relations.push((y.clone(), pi.clone()));
                }
            }
        }
        Covariance::Orbit => {
            for (i, y) in tuples.iter().enumerate() {
                if y.windows(2).all(|w| w[0] <= w[1]) {
                    let x = HermExpr::variable(b, spec.layout.clone(), &label(y), spec.real);
                    // Stabilizer of a sorted tuple is generated by swaps of equal neighbours.
                    for s in 0..k.saturating_sub(1) {
                        if y[s] == y[s + 1] {
                            let mut pi: Vec<usize> = (0..k).collect();
                            pi.swap(s, s + 1);
                            let moved = x.conjugate_by_permutation(spec.blocks, &pi)?;
                            moved.difference(&x)?.add_zero(b);
                            relations.push((y.clone(), pi));
                        }
                    }
                    exprs[i] = Some(x);
                    independent[i] = true;
                }
            }
            for (i, y) in tuples.iter().enumerate() {
                if exprs[i].is_none() {
                    let pi = argsort(y);
                    let rep = tuple_index(&compose_label(y, &pi), spec.outcomes);
                    let x = exprs[rep].as_ref().unwrap().conjugate_by_permutation(spec.blocks, &pi)?;
                    exprs[i] = Some(x);
                }
            }
        }
    }
    Ok(CovariantFamily {
        tuples,
        exprs: exprs.into_iter().map(|e| e.unwrap()).collect(),
        independent,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_are_lexicographic() {
        assert_eq!(tuples(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, y) in tuples(3, 3).iter().enumerate() {
            assert_eq!(tuple_index(y, 3), i);
        }
    }

    #[test]
    fn argsort_sorts() {
        let y = [2, 0, 1, 0];
        let pi = argsort(&y);
        assert_eq!(compose_label(&y, &pi), vec![0, 0, 1, 2]);
    }
}
