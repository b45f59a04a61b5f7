//! Networked system description and its lifted pair `(F, G)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{block_diag, kron, Matrix, C64};
use crate::rational::RationalMatrix;

/// A networked system with `N` nodes of state dimension `n` and a shared
/// input matrix with `m` columns.
///
/// `c[(i, j)]` is the weight of the edge from node `j` to node `i`.
/// Fields are public so malformed descriptions can be represented and
/// reported by [`NetworkedSystem::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkedSystem {
    pub node_matrices: Vec<Matrix>,
    pub b: Matrix,
    pub h: Matrix,
    pub c: Matrix,
    /// Control selection `d_i`; must be exactly 0 or 1.
    pub d: Vec<f64>,
    /// Exact value of `c` when the input was given as decimals or `p/q`.
    pub exact_c: Option<RationalMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub nodes: usize,
    pub state: usize,
    pub input: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// The lifted state and input matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledPair {
    pub f: Matrix,
    pub g: Matrix,
}

impl AssembledPair {
    pub fn new(f: Matrix, g: Matrix) -> Result<Self> {
        if !f.is_square() || g.rows() != f.rows() {
            return Err(Error::InvalidInput(format!(
                "F must be square with as many rows as G, got F {}x{} and G {}x{}",
                f.rows(),
                f.cols(),
                g.rows(),
                g.cols()
            )));
        }
        Ok(Self { f, g })
    }

    pub fn state_dim(&self) -> usize {
        self.f.rows()
    }
}

impl NetworkedSystem {
    pub fn new(node_matrices: Vec<Matrix>, b: Matrix, h: Matrix, c: Matrix, d: Vec<f64>) -> Self {
        Self {
            node_matrices,
            b,
            h,
            c,
            d,
            exact_c: None,
        }
    }

    /// A system whose nodes all share `a`.
    pub fn homogeneous(a: Matrix, b: Matrix, h: Matrix, c: Matrix, d: Vec<f64>) -> Self {
        let nodes = c.rows();
        Self::new(vec![a; nodes], b, h, c, d)
    }

    pub fn with_exact_topology(mut self, exact: RationalMatrix) -> Self {
        self.exact_c = Some(exact);
        self
    }

    pub fn dims(&self) -> Dims {
        Dims {
            nodes: self.node_matrices.len(),
            state: self.b.rows(),
            input: self.b.cols(),
        }
    }

    /// Every shape and domain violation, each with the path of the
    /// offending field.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let Dims { nodes, state: n, .. } = self.dims();
        if nodes == 0 {
            out.push(Violation::new("node_matrices", "at least one node is required"));
        }
        for (i, a) in self.node_matrices.iter().enumerate() {
            if a.shape() != (n, n) {
                out.push(Violation::new(
                    format!("node_matrices[{i}]"),
                    format!("expected {n}x{n}, got {}x{}", a.rows(), a.cols()),
                ));
            }
        }
        if self.h.shape() != (n, n) {
            out.push(Violation::new(
                "H",
                format!("expected {n}x{n} to match B's row count, got {}x{}", self.h.rows(), self.h.cols()),
            ));
        }
        if self.c.shape() != (nodes, nodes) {
            out.push(Violation::new(
                "C",
                format!("expected {nodes}x{nodes}, got {}x{}", self.c.rows(), self.c.cols()),
            ));
        }
        if let Some(exact) = &self.exact_c {
            if (exact.rows(), exact.cols()) != self.c.shape() {
                out.push(Violation::new("C", "exact and floating-point topology disagree in shape"));
            }
        }
        if self.d.len() != nodes {
            out.push(Violation::new(
                "d",
                format!("expected {nodes} entries, got {}", self.d.len()),
            ));
        }
        for (i, &x) in self.d.iter().enumerate() {
            if x != 0.0 && x != 1.0 {
                out.push(Violation::new(
                    format!("control_selection[{i}]"),
                    format!("must be exactly 0 or 1, got {x}"),
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidSystem)
    }

    /// `D = diag(d)`.
    pub fn d_matrix(&self) -> Matrix {
        Matrix::diag(&self.d.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// `F = blockdiag(A_i) + C ⊗ H`, `G = D ⊗ B`.
    pub fn assemble(&self) -> Result<AssembledPair> {
        self.ensure_valid()?;
        let a = block_diag(&self.node_matrices)?;
        let f = &a + &kron(&self.c, &self.h);
        let g = kron(&self.d_matrix(), &self.b);
        AssembledPair::new(f, g)
    }

    /// Class index per node; nodes share a class iff their matrices are
    /// exactly equal. Classes are numbered by first appearance.
    pub fn node_classes(&self) -> Vec<usize> {
        let mut reps: Vec<&Matrix> = Vec::new();
        self.node_matrices
            .iter()
            .map(|a| match reps.iter().position(|r| *r == a) {
                Some(k) => k,
                None => {
                    reps.push(a);
                    reps.len() - 1
                }
            })
            .collect()
    }

    /// Nodes grouped into classes of identical `A_i`.
    pub fn node_partition(&self) -> Vec<Vec<usize>> {
        let classes = self.node_classes();
        let count = classes.iter().copied().max().map_or(0, |k| k + 1);
        let mut out = vec![Vec::new(); count];
        for (i, k) in classes.into_iter().enumerate() {
            out[k].push(i);
        }
        out
    }

    pub fn is_homogeneous(&self) -> bool {
        self.node_partition().len() == 1
    }

    /// Exact form of `C`: the parsed value if present, otherwise the exact
    /// binary value of each real `f64` entry.
    pub fn exact_topology(&self) -> Option<RationalMatrix> {
        self.exact_c.clone().or_else(|| RationalMatrix::from_matrix(&self.c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    fn example4() -> NetworkedSystem {
        NetworkedSystem::homogeneous(
            real(&[&[1.0, 1.0], &[0.0, 1.0]]),
            real(&[&[0.0], &[1.0]]),
            real(&[&[1.0, 0.0], &[0.0, 0.0]]),
            real(&[&[0.0, 1.0], &[1.0, 0.0]]),
            vec![1.0, 0.0],
        )
    }

    #[test]
    fn example4_validates_and_assembles() {
        let sys = example4();
        assert!(sys.validate().is_ok());
        let p = sys.assemble().unwrap();
        assert_eq!(
            p.f,
            real(&[
                &[1.0, 1.0, 1.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0],
                &[1.0, 0.0, 1.0, 1.0],
                &[0.0, 0.0, 0.0, 1.0]
            ])
        );
        assert_eq!(p.g, real(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]));
    }

    #[test]
    fn fractional_selection_is_a_violation() {
        let mut sys = example4();
        sys.d[1] = 0.5;
        let v = sys.validate().unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "control_selection[1]");
        assert!(matches!(sys.assemble(), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn wrong_node_shape_is_a_violation() {
        let mut sys = example4();
        sys.node_matrices[0] = Matrix::zeros(2, 3);
        let v = sys.validate().unwrap_err();
        assert!(v.iter().any(|x| x.path == "node_matrices[0]"));
    }

    #[test]
    fn decoupled_and_uncontrolled_assembly() {
        let mut sys = example4();
        sys.h = Matrix::zeros(2, 2);
        sys.d = vec![0.0, 0.0];
        let p = sys.assemble().unwrap();
        assert_eq!(p.f, block_diag(&sys.node_matrices).unwrap());
        assert!(p.g.is_zero());
    }

    #[test]
    fn partition_examples() {
        let a = real(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let mut sys = NetworkedSystem::new(
            vec![a.clone(), b.clone(), a.clone()],
            real(&[&[1.0], &[0.0]]),
            Matrix::identity(2),
            Matrix::identity(3),
            vec![1.0; 3],
        );
        assert_eq!(sys.node_partition(), vec![vec![0, 2], vec![1]]);
        assert!(!sys.is_homogeneous());
        sys.node_matrices = vec![a.clone(); 3];
        assert!(sys.is_homogeneous());
        sys.node_matrices = vec![a, b, Matrix::zeros(2, 2)];
        assert_eq!(sys.node_partition().len(), 3);
    }

    #[test]
    fn assembly_is_deterministic() {
        let sys = example4();
        assert_eq!(sys.assemble().unwrap(), sys.assemble().unwrap());
    }
}
