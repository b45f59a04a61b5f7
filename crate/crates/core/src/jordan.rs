//! Exact Jordan bases over the rationals, optionally constrained to a
//! class-block-diagonal sparsity pattern.
//!
//! Rows of `T` with `T C = J T` form left Jordan chains: inside a block of
//! size `h` starting at row `s`, `t_{s+k} = t_s (C - λI)^k` and the chain
//! ends with a left eigenvector. The search fills positions left to right,
//! choosing an eigenvalue and block size for each new block and a head
//! vector from the subspace that keeps every row of the chain inside the
//! allowed support.

use num_traits::{One, Zero};

use crate::matrix::C64;
use crate::rational::{rational_roots, EchelonBasis, Rational, RationalMatrix};
use crate::spectral::{self, JordanBlock, TransformOrigin, TransformPair};

const NODE_BUDGET: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ExactJordan {
    pub t: RationalMatrix,
    pub j: RationalMatrix,
    pub lambdas: Vec<Rational>,
    pub blocks: Vec<JordanBlock>,
}

impl ExactJordan {
    pub fn to_transform(&self) -> TransformPair {
        TransformPair::from_parts(self.t.to_matrix(), self.j.to_matrix(), TransformOrigin::ExactJordan)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum ExactSearch {
    /// `first` is the first valid transform found; `accepted` the first one
    /// the callback approved, if any.
    Found {
        first: Box<ExactJordan>,
        accepted: Option<Box<ExactJordan>>,
    },
    NoTransform(String),
}

struct Eigen {
    lambda: Rational,
    /// powers[k] = (C - λI)^k
    powers: Vec<RationalMatrix>,
    /// counts[h] = number of blocks of size h
    counts: Vec<usize>,
}

struct Search<'a> {
    n: usize,
    classes: &'a [usize],
    eigen: Vec<Eigen>,
    rows: Vec<Vec<Rational>>,
    lambdas: Vec<Rational>,
    blocks: Vec<JordanBlock>,
    basis: EchelonBasis,
    nodes: usize,
    first: Option<ExactJordan>,
    accepted: Option<ExactJordan>,
}

fn jordan_counts(powers: &[RationalMatrix], alg: usize) -> Vec<usize> {
    // ranks[k] = rank((C - λI)^k); blocks of size >= h: ranks[h-1] - ranks[h]
    let ranks: Vec<usize> = powers.iter().map(RationalMatrix::rank).collect();
    let mut at_least = vec![0usize; alg + 2];
    for h in 1..=alg {
        at_least[h] = ranks[h - 1] - ranks[h];
    }
    let mut counts = vec![0usize; alg + 1];
    for h in 1..=alg {
        counts[h] = at_least[h] - at_least[h + 1];
    }
    counts
}

/// Searches for an exact `T` with `T C T⁻¹ = J` in Jordan form and
/// `t_ij = 0` whenever `classes[i] != classes[j]`. Candidates are offered
/// to `accept` in search order until it returns true.
pub(crate) fn exact_jordan_search(
    c: &RationalMatrix,
    classes: &[usize],
    accept: &mut dyn FnMut(&ExactJordan) -> bool,
) -> ExactSearch {
    let n = c.rows();
    if n == 0 || c.cols() != n || classes.len() != n {
        return ExactSearch::NoTransform("topology is empty or not square".into());
    }
    let poly = c.characteristic_polynomial();
    let hints: Vec<C64> = spectral::eigenvalues(&c.to_matrix()).unwrap_or_default();
    let roots = rational_roots(&poly, &hints);
    if roots.iter().map(|(_, m)| m).sum::<usize>() != n {
        return ExactSearch::NoTransform("eigenvalues of the topology are not all rational".into());
    }

    let mut eigen = Vec::new();
    let mut sorted = roots;
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for (lambda, alg) in sorted {
        let shifted = c.shifted(&lambda);
        let mut powers = vec![RationalMatrix::identity(n)];
        for k in 1..=alg {
            let next = powers[k - 1].mul(&shifted);
            powers.push(next);
        }
        let counts = jordan_counts(&powers, alg);
        eigen.push(Eigen { lambda, powers, counts });
    }

    let mut search = Search {
        n,
        classes,
        eigen,
        rows: Vec::new(),
        lambdas: Vec::new(),
        blocks: Vec::new(),
        basis: EchelonBasis::default(),
        nodes: 0,
        first: None,
        accepted: None,
    };
    search.dfs(accept);
    match search.first {
        Some(first) => ExactSearch::Found {
            first: Box::new(first),
            accepted: search.accepted.map(Box::new),
        },
        None if search.nodes > NODE_BUDGET => {
            ExactSearch::NoTransform("search budget exhausted before an admissible Jordan basis was found".into())
        }
        None => ExactSearch::NoTransform("no Jordan basis respects the node-class sparsity pattern".into()),
    }
}

impl Search<'_> {
    /// Returns true once the search should stop.
    fn dfs(&mut self, accept: &mut dyn FnMut(&ExactJordan) -> bool) -> bool {
        let p = self.rows.len();
        if p == self.n {
            let found = self.current();
            if self.first.is_none() {
                self.first = Some(found.clone());
            }
            if accept(&found) {
                self.accepted = Some(found);
                return true;
            }
            return false;
        }
        for e in 0..self.eigen.len() {
            for h in (1..self.eigen[e].counts.len()).rev() {
                if self.eigen[e].counts[h] == 0 || p + h > self.n {
                    continue;
                }
                for head in self.heads(e, p, h) {
                    self.nodes += 1;
                    if self.nodes > NODE_BUDGET {
                        return true;
                    }
                    let chain: Vec<Vec<Rational>> = (0..h).map(|k| vec_mul(&head, &self.eigen[e].powers[k])).collect();
                    if !self.basis.extends_independently(&chain) {
                        continue;
                    }
                    let saved = self.basis.clone();
                    for row in &chain {
                        self.basis.insert(row);
                    }
                    self.eigen[e].counts[h] -= 1;
                    self.blocks.push(JordanBlock { start: p, len: h });
                    for row in chain {
                        self.rows.push(row);
                        self.lambdas.push(self.eigen[e].lambda.clone());
                    }
                    if self.dfs(accept) {
                        return true;
                    }
                    self.rows.truncate(p);
                    self.lambdas.truncate(p);
                    self.blocks.pop();
                    self.eigen[e].counts[h] += 1;
                    self.basis = saved;
                }
            }
        }
        false
    }

    /// Candidate chain heads for a block of size `h` at position `p`.
    fn heads(&self, e: usize, p: usize, h: usize) -> Vec<Vec<Rational>> {
        let n = self.n;
        let eig = &self.eigen[e];
        // Columns of the constraint matrix: v N^h = 0 and, for each k < h,
        // v N^k vanishes outside the class of row p + k.
        let mut cols: Vec<Vec<Rational>> = Vec::new();
        for j in 0..n {
            cols.push((0..n).map(|i| eig.powers[h].get(i, j).clone()).collect());
        }
        for k in 0..h {
            let class = self.classes[p + k];
            for j in 0..n {
                if self.classes[j] != class {
                    cols.push((0..n).map(|i| eig.powers[k].get(i, j).clone()).collect());
                }
            }
        }
        let m = cols.len();
        let mut data = Vec::with_capacity(n * m);
        for i in 0..n {
            for col in &cols {
                data.push(col[i].clone());
            }
        }
        let constraint = RationalMatrix::new(n, m, data).expect("shape is consistent");
        let basis = constraint.left_null_space();
        let last = &eig.powers[h - 1];
        let mut heads: Vec<Vec<Rational>> = basis
            .iter()
            .filter(|v| vec_mul(v, last).iter().any(|x| !x.is_zero()))
            .cloned()
            .collect();
        if basis.len() > 1 {
            let mut generic = vec![Rational::zero(); n];
            for (i, v) in basis.iter().enumerate() {
                let w = Rational::from_integer((i as i64 + 1).into());
                for (g, x) in generic.iter_mut().zip(v) {
                    *g += &w * x;
                }
            }
            if vec_mul(&generic, last).iter().any(|x| !x.is_zero()) {
                heads.push(generic);
            }
        }
        heads
    }

    fn current(&self) -> ExactJordan {
        let n = self.n;
        let mut t = RationalMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                t.set(i, j, x.clone());
            }
        }
        let mut j = RationalMatrix::zeros(n, n);
        for (i, l) in self.lambdas.iter().enumerate() {
            j.set(i, i, l.clone());
        }
        for b in &self.blocks {
            for i in b.start..b.start + b.len - 1 {
                j.set(i, i + 1, Rational::one());
            }
        }
        ExactJordan {
            t,
            j,
            lambdas: self.lambdas.clone(),
            blocks: self.blocks.clone(),
        }
    }
}

fn vec_mul(v: &[Rational], m: &RationalMatrix) -> Vec<Rational> {
    (0..m.cols())
        .map(|j| {
            v.iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .fold(Rational::zero(), |acc, (i, x)| acc + x * m.get(i, j))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rm(rows: &[&[i64]]) -> RationalMatrix {
        let n = rows.len();
        let m = rows[0].len();
        RationalMatrix::new(
            n,
            m,
            rows.iter()
                .flat_map(|r| r.iter().map(|&x| Rational::from_integer(x.into())))
                .collect(),
        )
        .unwrap()
    }

    fn check(c: &RationalMatrix, found: &ExactJordan) {
        assert_eq!(found.t.mul(c), found.j.mul(&found.t));
        assert_eq!(found.t.rank(), c.rows());
    }

    #[test]
    fn jordan_block_is_its_own_form() {
        let c = rm(&[&[1, 1], &[0, 1]]);
        let ExactSearch::Found { first, .. } = exact_jordan_search(&c, &[0, 0], &mut |_| true) else {
            panic!("no transform");
        };
        check(&c, &first);
        assert_eq!(first.blocks, vec![JordanBlock { start: 0, len: 2 }]);
    }

    #[test]
    fn class_constraints_force_layout() {
        // Nodes 0 and 2 share a class, node 1 is alone.
        let c = rm(&[&[0, 0, 1], &[0, 1, 1], &[0, 0, 1]]);
        let classes = [0, 1, 0];
        let ExactSearch::Found { first, .. } = exact_jordan_search(&c, &classes, &mut |_| true) else {
            panic!("no transform");
        };
        check(&c, &first);
        assert_eq!(first.t, rm(&[&[1, 0, -1], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(first.lambdas, vec![Rational::zero(), Rational::one(), Rational::one()]);
        for i in 0..3 {
            for j in 0..3 {
                if classes[i] != classes[j] {
                    assert!(first.t.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn impossible_sparsity_is_reported() {
        // Distinct classes everywhere force T diagonal, but C is a Jordan
        // block conjugated by a shear, so no diagonal T works.
        let c = rm(&[&[2, 1], &[-1, 0]]);
        assert!(matches!(
            exact_jordan_search(&c, &[0, 1], &mut |_| true),
            ExactSearch::NoTransform(_)
        ));
        assert!(matches!(exact_jordan_search(&c, &[0, 0], &mut |_| true), ExactSearch::Found { .. }));
    }

    #[test]
    fn irrational_spectrum_is_reported() {
        let c = rm(&[&[0, 2], &[1, 0]]);
        assert!(matches!(
            exact_jordan_search(&c, &[0, 0], &mut |_| true),
            ExactSearch::NoTransform(_)
        ));
    }

    #[test]
    fn accept_callback_can_reject_candidates() {
        let c = rm(&[&[1, 0], &[0, 1]]);
        let mut seen = 0;
        let result = exact_jordan_search(&c, &[0, 0], &mut |_| {
            seen += 1;
            false
        });
        assert!(seen > 1);
        assert!(matches!(result, ExactSearch::Found { accepted: None, .. }));
    }

    #[test]
    fn mixed_block_sizes() {
        // J = J_2(3) ⊕ J_1(3) ⊕ J_1(-1), conjugated by a unimodular P.
        let j = rm(&[&[3, 1, 0, 0], &[0, 3, 0, 0], &[0, 0, 3, 0], &[0, 0, 0, -1]]);
        let p = rm(&[&[1, 1, 0, 0], &[0, 1, 1, 0], &[0, 0, 1, 1], &[0, 0, 0, 1]]);
        let p_inv = rm(&[&[1, -1, 1, -1], &[0, 1, -1, 1], &[0, 0, 1, -1], &[0, 0, 0, 1]]);
        let c = p.mul(&j).mul(&p_inv);
        let ExactSearch::Found { first, .. } = exact_jordan_search(&c, &[0; 4], &mut |_| true) else {
            panic!("no transform");
        };
        check(&c, &first);
        let mut sizes: Vec<usize> = first.blocks.iter().map(|b| b.len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 2]);
    }
}
