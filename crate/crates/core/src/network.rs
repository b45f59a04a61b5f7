//! Eigenstructure-based controllability analysis of a networked system.
//!
//! With `T C T⁻¹ = J` upper triangular and `T ⊗ I` commuting with
//! `blockdiag(A_i)`, the lifted matrix is similar to `blockdiag(A_i) + J ⊗ H`.
//! Under the Jordan hypothesis (`ξH = 0` for the left eigenvectors of every
//! node covered by a Jordan block of size ≥ 2) its left eigenvectors are
//! `e_i T ⊗ ξ` with `ξ` a left eigenvector of `A_i + λ_i H`, which turns the
//! PBH test on `(F, G)` into three node-level conditions.

use crate::classical::{
    pbh_controllable, rank_margin, ratio_margin, witness_is_valid, Method, Status, Verdict, Witness,
};
use crate::error::{Error, Result};
use crate::jordan::{exact_jordan_search, ExactSearch};
use crate::matrix::{
    kron_vec, rank_cutoff, rank_from_singular_values, singular_values, vec_norm, Matrix, RowVec, Tolerances, C64,
};
use crate::spectral::{
    diagonal_transform, eigen_left, transform_from_user, verify_similarity, LeftEigenPair, TransformOrigin,
    TransformPair, TransformSearch,
};
use crate::system::{AssembledPair, NetworkedSystem};

/// Eigendata of one node matrix `A_i + λ_i H`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpectrum {
    pub lambda: C64,
    pub matrix: Matrix,
    pub pairs: Vec<LeftEigenPair>,
}

/// An eigenvalue shared by at least two nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonGroup {
    pub value: C64,
    /// `(node, index into that node's pairs)`, ordered by node.
    pub members: Vec<(usize, usize)>,
    /// Near the clustering threshold: a small perturbation could split
    /// the group or add members.
    pub fragile: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    pub nodes: Vec<NodeSpectrum>,
    /// All node eigenvalues, repeated by algebraic multiplicity.
    pub sigma_f: Vec<C64>,
    pub common_groups: Vec<CommonGroup>,
    /// Factor by which the cross-node grouping clears its threshold.
    pub grouping_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionFailure {
    pub node: Option<usize>,
    pub eigenvalue: Option<C64>,
    /// F-level witness when one could be formed and verified.
    pub witness: Option<Witness>,
    pub detail: String,
}

impl ConditionFailure {
    fn new(detail: impl Into<String>) -> Self {
        Self {
            node: None,
            eigenvalue: None,
            witness: None,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConditionOutcome {
    Pass,
    Fail(ConditionFailure),
    Vacuous,
    /// Skipped because an earlier check already decided the outcome.
    NotEvaluated,
}

impl ConditionOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail(_) => "fail",
            Self::Vacuous => "vacuous",
            Self::NotEvaluated => "not_evaluated",
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Self::Fail(_))
    }

    pub fn failure(&self) -> Option<&ConditionFailure> {
        match self {
            Self::Fail(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResults {
    pub commutation: ConditionOutcome,
    pub jordan_hypothesis: ConditionOutcome,
    pub input_reach: ConditionOutcome,
    pub modified_pairs: ConditionOutcome,
    pub common_independence: ConditionOutcome,
}

impl Default for ConditionResults {
    fn default() -> Self {
        Self {
            commutation: ConditionOutcome::NotEvaluated,
            jordan_hypothesis: ConditionOutcome::NotEvaluated,
            input_reach: ConditionOutcome::NotEvaluated,
            modified_pairs: ConditionOutcome::NotEvaluated,
            common_independence: ConditionOutcome::NotEvaluated,
        }
    }
}

impl ConditionResults {
    /// In evaluation order.
    pub fn entries(&self) -> [(&'static str, &ConditionOutcome); 5] {
        [
            ("commutation", &self.commutation),
            ("jordan_hypothesis", &self.jordan_hypothesis),
            ("input_reach", &self.input_reach),
            ("modified_pairs", &self.modified_pairs),
            ("common_independence", &self.common_independence),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub verdict: Verdict,
    pub conditions: ConditionResults,
    pub transform: Option<TransformPair>,
    pub summary: Option<SpectralSummary>,
    /// Homogeneous network with diagonal `J`: whether `(C, D)` is
    /// controllable, which is equivalent to the input-reach condition.
    pub cd_controllable: Option<bool>,
}

/// True iff `kron(t, I)` commutes with `blockdiag(A_i)` within
/// `residual_rel · ‖t‖ · ‖A‖`, evaluated blockwise as `t_ij (A_i - A_j)`.
pub fn commutation_check(t: &Matrix, sys: &NetworkedSystem, tol: &Tolerances) -> bool {
    let nodes = &sys.node_matrices;
    if t.shape() != (nodes.len(), nodes.len()) {
        return false;
    }
    let mut sq = 0.0;
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            let tij = t.get(i, j);
            if tij.norm() == 0.0 || i == j {
                continue;
            }
            sq += tij.norm_sqr() * (&nodes[i] - &nodes[j]).frobenius_norm().powi(2);
        }
    }
    let a_norm = nodes.iter().map(|a| a.frobenius_norm().powi(2)).sum::<f64>().sqrt();
    sq.sqrt() <= tol.residual_rel * t.frobenius_norm() * a_norm
}

fn cross_class_zero(c: &Matrix, classes: &[usize]) -> bool {
    (0..c.rows()).all(|i| (0..c.cols()).all(|j| classes[i] == classes[j] || c.get(i, j).norm() == 0.0))
}

/// Eigenvector transform built class by class when `C` has no edges
/// between different node classes.
fn classwise_diagonal(sys: &NetworkedSystem, tol: &Tolerances) -> Result<Option<TransformPair>> {
    let n = sys.c.rows();
    let mut t = Matrix::zeros(n, n);
    let mut lambdas = vec![C64::new(0.0, 0.0); n];
    for members in sys.node_partition() {
        let block = sys.c.select(&members, &members);
        let Some(tp) = diagonal_transform(&block, tol)? else {
            return Ok(None);
        };
        for (r, &row_node) in members.iter().enumerate() {
            for (k, &col_node) in members.iter().enumerate() {
                t.set(row_node, col_node, tp.t.get(r, k));
            }
            lambdas[row_node] = tp.lambdas[r];
        }
    }
    let j = Matrix::diag(&lambdas);
    if !verify_similarity(&t, &sys.c, &j, tol)? {
        return Ok(None);
    }
    Ok(Some(TransformPair::from_parts(t, j, TransformOrigin::Diagonalizable)))
}

/// Finds `T` with `T C T⁻¹ = J` upper triangular such that `T ⊗ I`
/// commutes with `blockdiag(A_i)`.
///
/// A supplied `user_t` is verified and either returned or rejected with
/// [`Error::InvalidInput`].
pub fn construct_admissible_t(
    sys: &NetworkedSystem,
    tol: &Tolerances,
    user_t: Option<&Matrix>,
) -> Result<TransformSearch> {
    construct_admissible_t_with(sys, tol, user_t, &mut |_| true)
}

/// As [`construct_admissible_t`]; among exact Jordan candidates the first
/// one `accept` approves is preferred.
pub fn construct_admissible_t_with(
    sys: &NetworkedSystem,
    tol: &Tolerances,
    user_t: Option<&Matrix>,
    accept: &mut dyn FnMut(&TransformPair) -> bool,
) -> Result<TransformSearch> {
    sys.ensure_valid()?;
    tol.validate()?;
    if let Some(t) = user_t {
        let tp = transform_from_user(t, &sys.c, tol)?;
        if !commutation_check(&tp.t, sys, tol) {
            return Err(Error::InvalidInput(
                "transform T does not commute with the node dynamics: t_ij must vanish when A_i != A_j".into(),
            ));
        }
        return Ok(TransformSearch::Found(tp));
    }

    let classes = sys.node_classes();
    let mut reasons = Vec::new();
    if cross_class_zero(&sys.c, &classes) {
        match classwise_diagonal(sys, tol) {
            Ok(Some(tp)) => return Ok(TransformSearch::Found(tp)),
            Ok(None) => reasons.push("topology is not diagonalizable within node classes".to_string()),
            Err(e) => reasons.push(format!("eigendecomposition failed ({e})")),
        }
    } else {
        reasons.push("edges between different node classes rule out a diagonal J".to_string());
    }

    let Some(exact) = sys.exact_topology() else {
        reasons.push("topology entries are not exact rationals".into());
        return Ok(TransformSearch::NotComputable(reasons.join("; ")));
    };
    let verified = |cand: &crate::jordan::ExactJordan| -> Option<TransformPair> {
        let tp = cand.to_transform();
        match verify_similarity(&tp.t, &sys.c, &tp.j, tol) {
            Ok(true) => Some(tp),
            _ => None,
        }
    };
    let mut accept_exact = |cand: &crate::jordan::ExactJordan| verified(cand).is_some_and(|tp| accept(&tp));
    match exact_jordan_search(&exact, &classes, &mut accept_exact) {
        ExactSearch::Found { first, accepted } => {
            let chosen = accepted.unwrap_or(first);
            match verified(&chosen) {
                Some(tp) => Ok(TransformSearch::Found(tp)),
                None => {
                    reasons.push("exact Jordan basis failed floating-point verification".into());
                    Ok(TransformSearch::NotComputable(reasons.join("; ")))
                }
            }
        }
        ExactSearch::NoTransform(why) => {
            reasons.push(why);
            Ok(TransformSearch::NotComputable(reasons.join("; ")))
        }
    }
}

fn node_matrix(sys: &NetworkedSystem, i: usize, lambda: C64) -> Matrix {
    &sys.node_matrices[i] + &sys.h.scale(lambda)
}

pub fn build_spectral_summary(sys: &NetworkedSystem, tp: &TransformPair, tol: &Tolerances) -> Result<SpectralSummary> {
    let mut nodes = Vec::with_capacity(sys.node_matrices.len());
    for (i, &lambda) in tp.lambdas.iter().enumerate() {
        let matrix = node_matrix(sys, i, lambda);
        let pairs = eigen_left(&matrix, tol)?;
        nodes.push(NodeSpectrum { lambda, matrix, pairs });
    }
    let sigma_f = nodes
        .iter()
        .flat_map(|ns| ns.pairs.iter().flat_map(|p| std::iter::repeat_n(p.value, p.alg_mult)))
        .collect();
    let (common_groups, grouping_margin) = common_groups(&nodes, tol);
    Ok(SpectralSummary {
        nodes,
        sigma_f,
        common_groups,
        grouping_margin,
    })
}

fn common_groups(nodes: &[NodeSpectrum], tol: &Tolerances) -> (Vec<CommonGroup>, f64) {
    let points: Vec<(usize, usize, C64)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(i, ns)| ns.pairs.iter().enumerate().map(move |(j, p)| (i, j, p.value)))
        .collect();
    let scale = 1.0 + points.iter().map(|p| p.2.norm()).fold(0.0, f64::max);
    let thr = tol.eig_cluster_rel * scale;

    let n = points.len();
    let mut group: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if (points[a].2 - points[b].2).norm() <= thr {
                let (ga, gb) = (group[a], group[b]);
                if ga != gb {
                    let (keep, drop) = (ga.min(gb), ga.max(gb));
                    group.iter_mut().filter(|g| **g == drop).for_each(|g| *g = keep);
                }
            }
        }
    }

    let mut margin = f64::INFINITY;
    let mut pair_factor = vec![f64::INFINITY; n];
    for a in 0..n {
        for b in a + 1..n {
            let d = (points[a].2 - points[b].2).norm();
            let f = if group[a] == group[b] { ratio_margin(d, thr).max(1.0) } else { d / thr };
            // Same-node pairs never form a group, so only cross-node
            // distances matter for fragility.
            if points[a].0 != points[b].0 {
                margin = margin.min(f);
                pair_factor[a] = pair_factor[a].min(f);
                pair_factor[b] = pair_factor[b].min(f);
            }
        }
    }

    let mut roots: Vec<usize> = group.clone();
    roots.sort_unstable();
    roots.dedup();
    let mut out = Vec::new();
    for r in roots {
        let idx: Vec<usize> = (0..n).filter(|&k| group[k] == r).collect();
        let mut node_ids: Vec<usize> = idx.iter().map(|&k| points[k].0).collect();
        node_ids.dedup();
        if node_ids.len() < 2 {
            continue;
        }
        let mut members: Vec<(usize, usize)> = idx.iter().map(|&k| (points[k].0, points[k].1)).collect();
        members.sort_unstable();
        let value = idx.iter().map(|&k| points[k].2).sum::<C64>() / idx.len() as f64;
        let fragile = idx.iter().any(|&k| pair_factor[k] < crate::classical::FRAGILE_MARGIN);
        out.push(CommonGroup { value, members, fragile });
    }
    out.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    (out, margin)
}

fn annihilates(v: &[C64], h: &Matrix, tol: &Tolerances) -> bool {
    vec_norm(&crate::matrix::vec_mul(v, h)) <= tol.residual_rel * h.frobenius_norm() * vec_norm(v)
}

/// Checks `ξH = 0` for every left eigenvector of every node covered by a
/// Jordan block of size ≥ 2, including the last node of the block.
pub fn check_jordan_hypothesis(
    summary: &SpectralSummary,
    tp: &TransformPair,
    h: &Matrix,
    tol: &Tolerances,
) -> ConditionOutcome {
    let long: Vec<_> = tp.blocks.iter().filter(|b| b.len >= 2).collect();
    if long.is_empty() {
        return ConditionOutcome::Vacuous;
    }
    for b in long {
        for i in b.start..b.start + b.len {
            for (j, pair) in summary.nodes[i].pairs.iter().enumerate() {
                for (k, xi) in pair.vectors.iter().enumerate() {
                    if !annihilates(xi, h, tol) {
                        return ConditionOutcome::Fail(ConditionFailure {
                            node: Some(i),
                            eigenvalue: Some(pair.value),
                            witness: None,
                            detail: format!(
                                "left eigenvector (node {}, eigenvalue {}, vector {}) of a node in a Jordan block of size {} does not annihilate H",
                                i + 1,
                                j + 1,
                                k + 1,
                                b.len
                            ),
                        });
                    }
                }
            }
        }
    }
    ConditionOutcome::Pass
}

/// Condition 1 restricted to rows that end their Jordan block, where
/// `kron(e_iT, ξ)` is a left eigenvector of `F` without `ξH = 0`. Returns
/// the first failure whose lifted witness verifies against `pair`.
fn terminal_input_reach_failure(
    tp: &TransformPair,
    sys: &NetworkedSystem,
    summary: &SpectralSummary,
    pair: &AssembledPair,
    tol: &Tolerances,
) -> Option<ConditionFailure> {
    let thr = tol.residual_rel * tp.t.frobenius_norm();
    let td = td_rows(tp, sys);
    for b in &tp.blocks {
        let i = b.start + b.len - 1;
        if vec_norm(&td[i]) > thr {
            continue;
        }
        let Some(p) = summary.nodes[i].pairs.first() else { continue };
        let Some(xi) = p.vectors.first() else { continue };
        let w = lift_node_witness(
            tp,
            i,
            &Witness {
                value: p.value,
                vector: xi.clone(),
            },
        );
        if witness_is_valid(&w, pair, tol) {
            return Some(ConditionFailure {
                node: Some(i),
                eigenvalue: Some(p.value),
                witness: Some(w),
                detail: format!("e_{}TD = 0", i + 1),
            });
        }
    }
    None
}

fn td_rows(tp: &TransformPair, sys: &NetworkedSystem) -> Vec<RowVec> {
    let td = &tp.t * &sys.d_matrix();
    td.row_vectors()
}

/// Condition 1: every row of `T D` is nonzero. Returns the outcome and the
/// factor by which the smallest row norm clears the threshold.
pub fn check_input_reach(tp: &TransformPair, sys: &NetworkedSystem, tol: &Tolerances) -> (ConditionOutcome, f64) {
    let thr = tol.residual_rel * tp.t.frobenius_norm();
    let mut margin = f64::INFINITY;
    for (i, row) in td_rows(tp, sys).iter().enumerate() {
        let norm = vec_norm(row);
        margin = margin.min(ratio_margin(norm, thr));
        if norm <= thr {
            return (
                ConditionOutcome::Fail(ConditionFailure {
                    node: Some(i),
                    detail: format!("e_{}TD = 0", i + 1),
                    ..ConditionFailure::new("")
                }),
                margin,
            );
        }
    }
    (ConditionOutcome::Pass, margin)
}

/// Condition 2: PBH on each `(A_i + λ_i H, B)`. The failure carries the
/// node-level witness.
pub fn check_modified_pairs(
    sys: &NetworkedSystem,
    tp: &TransformPair,
    tol: &Tolerances,
) -> Result<(ConditionOutcome, f64)> {
    let mut margin = f64::INFINITY;
    for (i, &lambda) in tp.lambdas.iter().enumerate() {
        let pair = AssembledPair::new(node_matrix(sys, i, lambda), sys.b.clone())?;
        let v = pbh_controllable(&pair, tol)?;
        margin = margin.min(v.margin);
        if v.status == Status::Uncontrollable {
            let w = v.witness.clone();
            return Ok((
                ConditionOutcome::Fail(ConditionFailure {
                    node: Some(i),
                    eigenvalue: w.as_ref().map(|w| w.value),
                    witness: w,
                    detail: format!("(A_{0} + lambda_{0} H, B) is uncontrollable", i + 1),
                }),
                margin,
            ));
        }
    }
    Ok((ConditionOutcome::Pass, margin))
}

/// Condition 3: for each common eigenvalue, the vectors
/// `(e_i T D) ⊗ (ξ B)` over all participating nodes and eigenvectors are
/// linearly independent. On failure the node-level null combination is
/// returned as `(node, ξ, coefficient)` triples inside the witness slot
/// (mapped to `F` by the caller).
pub fn check_common_eig_independence(
    summary: &SpectralSummary,
    tp: &TransformPair,
    sys: &NetworkedSystem,
    tol: &Tolerances,
) -> Result<(ConditionOutcome, f64)> {
    if summary.common_groups.is_empty() {
        return Ok((ConditionOutcome::Vacuous, f64::INFINITY));
    }
    let td = td_rows(tp, sys);
    let mut margin = f64::INFINITY;
    for g in &summary.common_groups {
        let mut vs: Vec<RowVec> = Vec::new();
        let mut origin: Vec<(usize, RowVec)> = Vec::new();
        for &(i, j) in &g.members {
            for xi in &summary.nodes[i].pairs[j].vectors {
                let xb = crate::matrix::vec_mul(xi, &sys.b);
                vs.push(kron_vec(&td[i], &xb));
                origin.push((i, xi.clone()));
            }
        }
        let (independent, m, alpha) = independence_with_null(&vs, tol)?;
        margin = margin.min(m);
        if !independent {
            let n = sys.dims().state;
            let mut w = vec![C64::new(0.0, 0.0); sys.node_matrices.len() * n];
            for ((i, xi), a) in origin.iter().zip(&alpha) {
                let v = kron_vec(&tp.t.row(*i), xi);
                for (x, y) in w.iter_mut().zip(&v) {
                    *x += a * y;
                }
            }
            let nodes: Vec<String> = g.members.iter().map(|(i, _)| (i + 1).to_string()).collect();
            return Ok((
                ConditionOutcome::Fail(ConditionFailure {
                    node: None,
                    eigenvalue: Some(g.value),
                    witness: Some(Witness { value: g.value, vector: w }),
                    detail: format!(
                        "vectors (e_iTD) ⊗ (ξB) for common eigenvalue {} (nodes {}) are linearly dependent",
                        crate::classical::format_complex(g.value),
                        nodes.join(", ")
                    ),
                }),
                margin,
            ));
        }
    }
    Ok((ConditionOutcome::Pass, margin))
}

/// Rank test on stacked row vectors, returning the rank-gap margin and,
/// when dependent, coefficients of the smallest left singular vector.
fn independence_with_null(vs: &[RowVec], tol: &Tolerances) -> Result<(bool, f64, Vec<C64>)> {
    let k = vs.len();
    let len = vs[0].len();
    let mut m = Matrix::from_row_vectors(vs)?;
    if len < k {
        m = Matrix::hstack(&[&m, &Matrix::zeros(k, k - len)])?;
    }
    let sv = singular_values(&m)?;
    let rank = rank_from_singular_values(&sv, k, len, tol).min(len);
    let cutoff = rank_cutoff(sv.first().copied().unwrap_or(0.0), k, len, tol);
    let margin = rank_margin(&sv, rank.min(k), cutoff);
    if rank == k {
        return Ok((true, margin, Vec::new()));
    }
    // Null combination: left null space of the stacked matrix.
    let (basis, _) = crate::matrix::left_null_space(&m, tol, 1)?;
    Ok((false, margin, basis.last().cloned().unwrap_or_default()))
}

/// `kron(e_i T, ξ)` for every node eigenvector, with its eigenvalue.
pub fn reconstruct_left_eigenvectors(summary: &SpectralSummary, tp: &TransformPair) -> Vec<(C64, RowVec)> {
    let mut out = Vec::new();
    for (i, ns) in summary.nodes.iter().enumerate() {
        let row = tp.t.row(i);
        for p in &ns.pairs {
            for xi in &p.vectors {
                out.push((p.value, kron_vec(&row, xi)));
            }
        }
    }
    out
}

fn lift_node_witness(tp: &TransformPair, node: usize, w: &Witness) -> Witness {
    Witness {
        value: w.value,
        vector: kron_vec(&tp.t.row(node), &w.vector),
    }
}

/// Full theorem check with the admissible transform found automatically
/// or supplied by the caller.
pub fn theorem1_verdict(sys: &NetworkedSystem, tol: &Tolerances, user_t: Option<&Matrix>) -> Result<TheoremReport> {
    run_theorem(sys, tol, user_t, Method::Theorem)
}

/// Theorem check for identical nodes; also reports whether `(C, D)` is
/// controllable when `J` is diagonal.
pub fn homogeneous_verdict(sys: &NetworkedSystem, tol: &Tolerances, user_t: Option<&Matrix>) -> Result<TheoremReport> {
    sys.ensure_valid()?;
    if !sys.is_homogeneous() {
        return Err(Error::InvalidInput(
            "homogeneous analysis needs identical node matrices".into(),
        ));
    }
    let mut report = run_theorem(sys, tol, user_t, Method::Homogeneous)?;
    if report.transform.as_ref().is_some_and(TransformPair::is_diagonal) {
        let cd = AssembledPair::new(sys.c.clone(), sys.d_matrix())?;
        let v = pbh_controllable(&cd, tol)?;
        report.cd_controllable = Some(v.status == Status::Controllable);
    }
    Ok(report)
}

fn run_theorem(sys: &NetworkedSystem, tol: &Tolerances, user_t: Option<&Matrix>, method: Method) -> Result<TheoremReport> {
    sys.ensure_valid()?;
    tol.validate()?;
    let mut conditions = ConditionResults::default();

    if user_t.is_none() && sys.d.iter().all(|&d| d == 0.0) {
        let pair = sys.assemble()?;
        let witness = eigen_left(&pair.f, tol)?
            .into_iter()
            .find_map(|p| p.vectors.into_iter().next().map(|vector| Witness { value: p.value, vector }));
        let failure = ConditionFailure {
            node: Some(0),
            eigenvalue: witness.as_ref().map(|w| w.value),
            witness: witness.clone(),
            detail: "D = 0, so e_iTD = 0 for every T".into(),
        };
        let mut v = Verdict::new(Status::Uncontrollable, method, format!("input_reach: {}", failure.detail));
        if let Some(w) = witness {
            v = v.with_witness(w);
        }
        conditions.input_reach = ConditionOutcome::Fail(failure);
        return Ok(TheoremReport {
            verdict: v,
            conditions,
            transform: None,
            summary: None,
            cd_controllable: None,
        });
    }

    let mut accept = |tp: &TransformPair| {
        build_spectral_summary(sys, tp, tol)
            .map(|s| !check_jordan_hypothesis(&s, tp, &sys.h, tol).is_fail())
            .unwrap_or(false)
    };
    let tp = match construct_admissible_t_with(sys, tol, user_t, &mut accept)? {
        TransformSearch::Found(tp) => tp,
        TransformSearch::NotComputable(reason) => {
            return Ok(TheoremReport {
                verdict: Verdict::not_applicable(method, format!("no admissible transform T: {reason}")),
                conditions,
                transform: None,
                summary: None,
                cd_controllable: None,
            });
        }
    };
    conditions.commutation = ConditionOutcome::Pass;
    let summary = build_spectral_summary(sys, &tp, tol)?;
    let mut margin = summary.grouping_margin;

    conditions.jordan_hypothesis = check_jordan_hypothesis(&summary, &tp, &sys.h, tol);
    if let ConditionOutcome::Fail(f) = &conditions.jordan_hypothesis {
        let detail = format!("Jordan hypothesis unmet: {}", f.detail);
        // A zero row e_iTD at the end of a Jordan block still lifts to a
        // genuine left eigenvector of F, hypothesis or not.
        let pair = sys.assemble()?;
        if let Some(failure) = terminal_input_reach_failure(&tp, sys, &summary, &pair, tol) {
            let (_, m1) = check_input_reach(&tp, sys, tol);
            let w = failure.witness.clone().expect("terminal failures carry a verified witness");
            let v = Verdict::new(Status::Uncontrollable, method, format!("input_reach: {}", failure.detail))
                .with_margin(m1)
                .with_witness(w);
            conditions.input_reach = ConditionOutcome::Fail(failure);
            return Ok(TheoremReport {
                verdict: v,
                conditions,
                transform: Some(tp),
                summary: Some(summary),
                cd_controllable: None,
            });
        }
        return Ok(TheoremReport {
            verdict: Verdict::not_applicable(method, detail),
            conditions,
            transform: Some(tp),
            summary: Some(summary),
            cd_controllable: None,
        });
    }

    let pair = sys.assemble()?;
    let finish = |conditions: ConditionResults, verdict: Verdict, tp: TransformPair, summary: SpectralSummary| {
        Ok(TheoremReport {
            verdict,
            conditions,
            transform: Some(tp),
            summary: Some(summary),
            cd_controllable: None,
        })
    };
    let uncontrollable = |tag: &str, failure: &ConditionFailure, margin: f64| {
        let mut v = Verdict::new(Status::Uncontrollable, method, format!("{tag}: {}", failure.detail)).with_margin(margin);
        match &failure.witness {
            Some(w) if witness_is_valid(w, &pair, tol) => v = v.with_witness(w.clone()),
            _ => v.detail = format!("{tag}: condition failed; witness residual too large"),
        }
        v
    };

    let (c1, m1) = check_input_reach(&tp, sys, tol);
    margin = margin.min(m1);
    conditions.input_reach = c1;
    if let ConditionOutcome::Fail(f) = &mut conditions.input_reach {
        let i = f.node.expect("input-reach failure names a node");
        if let Some(xi) = summary.nodes[i].pairs.first().and_then(|p| p.vectors.first().map(|v| (p.value, v))) {
            f.witness = Some(lift_node_witness(
                &tp,
                i,
                &Witness {
                    value: xi.0,
                    vector: xi.1.clone(),
                },
            ));
        }
        let v = uncontrollable("input_reach", f, margin);
        return finish(conditions, v, tp, summary);
    }

    let (c2, m2) = check_modified_pairs(sys, &tp, tol)?;
    margin = margin.min(m2);
    conditions.modified_pairs = c2;
    if let ConditionOutcome::Fail(f) = &mut conditions.modified_pairs {
        let i = f.node.expect("modified-pair failure names a node");
        f.witness = f.witness.as_ref().map(|w| lift_node_witness(&tp, i, w));
        let v = uncontrollable("modified_pairs", f, margin);
        return finish(conditions, v, tp, summary);
    }

    let (c3, m3) = check_common_eig_independence(&summary, &tp, sys, tol)?;
    margin = margin.min(m3);
    conditions.common_independence = c3;
    if let ConditionOutcome::Fail(f) = &conditions.common_independence {
        let v = uncontrollable("common_independence", f, margin);
        return finish(conditions, v, tp, summary);
    }

    let verdict = Verdict::new(Status::Controllable, method, "all conditions pass").with_margin(margin);
    finish(conditions, verdict, tp, summary)
}

/// Uncontrollable as soon as some row of `T D` vanishes and the implied
/// eigenvector of `F` is confirmed; silent otherwise.
pub fn corollary_etd(sys: &NetworkedSystem, tp: &TransformPair, tol: &Tolerances) -> Result<Verdict> {
    sys.ensure_valid()?;
    let (outcome, margin) = check_input_reach(tp, sys, tol);
    let Some(f) = outcome.failure() else {
        return Ok(Verdict::not_applicable(Method::CorollaryEtd, "corollary silent"));
    };
    let i = f.node.expect("input-reach failure names a node");
    let pair = sys.assemble()?;
    let m = node_matrix(sys, i, tp.lambdas[i]);
    for p in eigen_left(&m, tol)? {
        for xi in &p.vectors {
            let w = lift_node_witness(
                tp,
                i,
                &Witness {
                    value: p.value,
                    vector: xi.clone(),
                },
            );
            if witness_is_valid(&w, &pair, tol) {
                return Ok(Verdict::new(
                    Status::Uncontrollable,
                    Method::CorollaryEtd,
                    format!("e_{}TD = 0", i + 1),
                )
                .with_witness(w)
                .with_margin(margin));
            }
        }
    }
    Ok(Verdict::not_applicable(
        Method::CorollaryEtd,
        format!("e_{}TD = 0 but no e_{}T ⊗ ξ is a left eigenvector of F (Jordan hypothesis unmet)", i + 1, i + 1),
    ))
}

/// A node without incoming edges whose own pair `(A_j, B)` is
/// uncontrollable makes the network uncontrollable.
pub fn source_node_check(sys: &NetworkedSystem, tol: &Tolerances) -> Result<Verdict> {
    sys.ensure_valid()?;
    let n_nodes = sys.node_matrices.len();
    let sources: Vec<usize> = (0..n_nodes)
        .filter(|&j| (0..n_nodes).all(|k| sys.c.get(j, k).norm() == 0.0))
        .collect();
    if sources.is_empty() {
        return Ok(Verdict::not_applicable(Method::SourceNode, "no source node (every row of C has an entry)"));
    }
    let pair = sys.assemble()?;
    for &j in &sources {
        let node = AssembledPair::new(sys.node_matrices[j].clone(), sys.b.clone())?;
        let v = pbh_controllable(&node, tol)?;
        if let (Status::Uncontrollable, Some(w)) = (v.status, &v.witness) {
            let mut e = vec![C64::new(0.0, 0.0); n_nodes];
            e[j] = C64::new(1.0, 0.0);
            let lifted = Witness {
                value: w.value,
                vector: kron_vec(&e, &w.vector),
            };
            if witness_is_valid(&lifted, &pair, tol) {
                return Ok(Verdict::new(
                    Status::Uncontrollable,
                    Method::SourceNode,
                    format!("node {} has no incoming edges and (A_{}, B) is uncontrollable", j + 1, j + 1),
                )
                .with_witness(lifted)
                .with_margin(v.margin));
            }
        }
    }
    Ok(Verdict::not_applicable(
        Method::SourceNode,
        "every source node has a controllable (A_j, B); theorem silent",
    ))
}

/// A node without outgoing edges whose left eigenvectors all annihilate
/// `H` must itself be controllable.
pub fn sink_node_check(sys: &NetworkedSystem, tol: &Tolerances) -> Result<Verdict> {
    sys.ensure_valid()?;
    let n_nodes = sys.node_matrices.len();
    let sinks: Vec<usize> = (0..n_nodes)
        .filter(|&j| (0..n_nodes).all(|k| sys.c.get(k, j).norm() == 0.0))
        .collect();
    if sinks.is_empty() {
        return Ok(Verdict::not_applicable(Method::SinkNode, "no sink node (every column of C has an entry)"));
    }
    let pair = sys.assemble()?;
    let mut notes = Vec::new();
    for &j in &sinks {
        let a = &sys.node_matrices[j];
        let all_annihilate = eigen_left(a, tol)?
            .iter()
            .all(|p| p.vectors.iter().all(|xi| annihilates(xi, &sys.h, tol)));
        let node = AssembledPair::new(a.clone(), sys.b.clone())?;
        let v = pbh_controllable(&node, tol)?;
        if !all_annihilate {
            notes.push(format!(
                "node {}: a left eigenvector of A_{} does not annihilate H, so controllability of (A_j, B) is not necessary",
                j + 1,
                j + 1
            ));
            continue;
        }
        match (v.status, &v.witness) {
            (Status::Uncontrollable, Some(w)) => {
                let mut e = vec![C64::new(0.0, 0.0); n_nodes];
                e[j] = C64::new(1.0, 0.0);
                let lifted = Witness {
                    value: w.value,
                    vector: kron_vec(&e, &w.vector),
                };
                if witness_is_valid(&lifted, &pair, tol) {
                    return Ok(Verdict::new(
                        Status::Uncontrollable,
                        Method::SinkNode,
                        format!(
                            "node {} has no outgoing edges, its left eigenvectors annihilate H and (A_{}, B) is uncontrollable",
                            j + 1,
                            j + 1
                        ),
                    )
                    .with_witness(lifted)
                    .with_margin(v.margin));
                }
                notes.push(format!("node {}: lifted witness failed verification", j + 1));
            }
            _ => notes.push(format!("node {}: (A_{}, B) is controllable; theorem silent", j + 1, j + 1)),
        }
    }
    Ok(Verdict::not_applicable(Method::SinkNode, notes.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn example1() -> NetworkedSystem {
        let a13 = real(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]]);
        let a2 = real(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[-1.0, 0.0, 1.0]]);
        NetworkedSystem::new(
            vec![a13.clone(), a2, a13],
            real(&[&[1.0], &[2.0], &[1.0]]),
            real(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]),
            real(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]),
            vec![1.0; 3],
        )
    }

    #[test]
    fn no_inputs_is_uncontrollable_without_a_transform() {
        // irrational topology spectrum across node classes: no T is built
        let sys = NetworkedSystem::new(
            vec![real(&[&[1.0]]), real(&[&[2.0]])],
            real(&[&[1.0]]),
            real(&[&[1.0]]),
            real(&[&[0.0, 1.0], &[1.0, 1.0]]),
            vec![0.0, 0.0],
        );
        let r = theorem1_verdict(&sys, &tol(), None).unwrap();
        assert_eq!(r.verdict.status, Status::Uncontrollable);
        assert!(r.conditions.input_reach.is_fail());
        let pair = sys.assemble().unwrap();
        assert!(witness_is_valid(r.verdict.witness.as_ref().unwrap(), &pair, &tol()));
    }

    #[test]
    fn zero_input_row_at_block_end_decides_without_hypothesis() {
        let a = real(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let c = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let sys = NetworkedSystem::homogeneous(a, real(&[&[0.0], &[1.0]]), Matrix::identity(2), c, vec![1.0, 0.0]);
        let r = theorem1_verdict(&sys, &tol(), None).unwrap();
        assert!(r.conditions.jordan_hypothesis.is_fail());
        assert_eq!(r.verdict.status, Status::Uncontrollable);
        assert_eq!(r.conditions.input_reach.failure().unwrap().node, Some(1));
        let pair = sys.assemble().unwrap();
        assert!(witness_is_valid(r.verdict.witness.as_ref().unwrap(), &pair, &tol()));
        assert_eq!(crate::classical::pbh_controllable(&pair, &tol()).unwrap().status, Status::Uncontrollable);

        // inputs on both nodes: row 2 is reached, hypothesis failure stands
        let sys = NetworkedSystem { d: vec![1.0, 1.0], ..sys };
        assert_eq!(theorem1_verdict(&sys, &tol(), None).unwrap().verdict.status, Status::NotApplicable);
    }

    fn example3() -> NetworkedSystem {
        NetworkedSystem::homogeneous(
            real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]),
            real(&[&[1.0], &[1.0], &[1.0]]),
            Matrix::identity(3),
            real(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]),
            vec![0.0, 1.0, 0.0],
        )
    }

    #[test]
    fn commutation_examples() {
        let sys = example1();
        let t = real(&[&[1.0, 0.0, -1.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(commutation_check(&t, &sys, &tol()));
        let bad = real(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(!commutation_check(&bad, &sys, &tol()));
        let homog = example3();
        assert!(commutation_check(&bad, &homog, &tol()));
    }

    #[test]
    fn example1_transform_is_forced() {
        let sys = example1();
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        assert_eq!(tp.t, real(&[&[1.0, 0.0, -1.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]));
        assert_eq!(tp.origin, TransformOrigin::ExactJordan);
        let (c1, _) = check_input_reach(&tp, &sys, &tol());
        assert_eq!(c1, ConditionOutcome::Pass);
    }

    #[test]
    fn diagonal_topology_gives_identity() {
        let mut sys = example1();
        sys.c = real(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 3.0]]);
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        assert_eq!(tp.t, Matrix::identity(3));
        assert_eq!(tp.j, sys.c);
    }

    #[test]
    fn swap_topology_with_distinct_nodes_is_not_computable() {
        let sys = NetworkedSystem::new(
            vec![real(&[&[1.0]]), real(&[&[2.0]])],
            real(&[&[1.0]]),
            real(&[&[1.0]]),
            real(&[&[0.0, 1.0], &[1.0, 0.0]]),
            vec![1.0, 1.0],
        );
        assert!(matches!(
            construct_admissible_t(&sys, &tol(), None).unwrap(),
            TransformSearch::NotComputable(_)
        ));
        let r = theorem1_verdict(&sys, &tol(), None).unwrap();
        assert_eq!(r.verdict.status, Status::NotApplicable);
        assert!(r.verdict.detail.contains("admissible"));
    }

    #[test]
    fn user_transform_failing_commutation_is_rejected() {
        let sys = NetworkedSystem::new(
            vec![real(&[&[1.0]]), real(&[&[2.0]])],
            real(&[&[1.0]]),
            real(&[&[1.0]]),
            real(&[&[0.0, 1.0], &[1.0, 0.0]]),
            vec![1.0, 1.0],
        );
        let t = real(&[&[-1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            construct_admissible_t(&sys, &tol(), Some(&t)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn example3_corollary() {
        let sys = example3();
        let s3 = 3f64.sqrt() / 2.0;
        let t = real(&[&[0.0, 1.0, -1.0], &[s3, 0.0, s3], &[-s3, 0.0, s3]]);
        let tp = construct_admissible_t(&sys, &tol(), Some(&t)).unwrap().found().unwrap();
        let v = corollary_etd(&sys, &tp, &tol()).unwrap();
        assert_eq!(v.status, Status::Uncontrollable);
        assert_eq!(v.detail, "e_2TD = 0");
        let r = homogeneous_verdict(&sys, &tol(), Some(&t)).unwrap();
        assert_eq!(r.verdict.status, Status::Uncontrollable);
        assert_eq!(r.conditions.input_reach.failure().unwrap().node, Some(1));
        assert_eq!(r.cd_controllable, Some(false));
    }

    #[test]
    fn corollary_silent_with_full_selection() {
        let mut sys = example3();
        sys.d = vec![1.0; 3];
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        assert_eq!(corollary_etd(&sys, &tp, &tol()).unwrap().status, Status::NotApplicable);
        sys.d = vec![0.0; 3];
        assert_eq!(corollary_etd(&sys, &tp, &tol()).unwrap().status, Status::Uncontrollable);
    }

    #[test]
    fn jordan_hypothesis_examples() {
        let sys = example1();
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        let summary = build_spectral_summary(&sys, &tp, &tol()).unwrap();
        assert!(check_jordan_hypothesis(&summary, &tp, &Matrix::identity(3), &tol()).is_fail());
        let mut diag = sys.clone();
        diag.c = Matrix::identity(3);
        let tpd = construct_admissible_t(&diag, &tol(), None).unwrap().found().unwrap();
        let sd = build_spectral_summary(&diag, &tpd, &tol()).unwrap();
        assert_eq!(check_jordan_hypothesis(&sd, &tpd, &diag.h, &tol()), ConditionOutcome::Vacuous);
    }

    #[test]
    fn reconstructed_vectors_are_eigenvectors_of_f() {
        let mut sys = example3();
        sys.d = vec![1.0, 1.0, 0.0];
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        let summary = build_spectral_summary(&sys, &tp, &tol()).unwrap();
        let f = sys.assemble().unwrap().f;
        let vs = reconstruct_left_eigenvectors(&summary, &tp);
        assert!(!vs.is_empty());
        for (mu, v) in vs {
            assert!(crate::spectral::is_left_eigenvector(&v, &f, mu, &tol()));
        }
    }

    #[test]
    fn source_and_sink_checks() {
        // Node 2 has no incoming edges and (diag(1,1), [1;1]) is uncontrollable.
        let sys = NetworkedSystem::new(
            vec![real(&[&[2.0, 0.0], &[0.0, 3.0]]), Matrix::identity(2)],
            real(&[&[1.0], &[1.0]]),
            Matrix::identity(2),
            real(&[&[0.0, 1.0], &[0.0, 0.0]]),
            vec![1.0, 1.0],
        );
        let v = source_node_check(&sys, &tol()).unwrap();
        assert_eq!(v.status, Status::Uncontrollable);
        let p = sys.assemble().unwrap();
        assert!(witness_is_valid(v.witness.as_ref().unwrap(), &p, &tol()));

        let mut no_source = sys.clone();
        no_source.c = real(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(source_node_check(&no_source, &tol()).unwrap().status, Status::NotApplicable);
        assert_eq!(sink_node_check(&no_source, &tol()).unwrap().status, Status::NotApplicable);

        // Node 1 is a sink with H = 0 and an uncontrollable pair.
        let mut sink = sys.clone();
        sink.node_matrices = vec![Matrix::identity(2), real(&[&[2.0, 0.0], &[0.0, 3.0]])];
        sink.h = Matrix::zeros(2, 2);
        let v = sink_node_check(&sink, &tol()).unwrap();
        assert_eq!(v.status, Status::Uncontrollable);
    }

    #[test]
    fn common_groups_with_zero_coupling() {
        let a = real(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let sys = NetworkedSystem::homogeneous(
            a,
            real(&[&[1.0], &[1.0]]),
            Matrix::zeros(2, 2),
            real(&[&[2.0, 0.0], &[1.0, 1.0]]),
            vec![1.0, 0.0],
        );
        let tp = construct_admissible_t(&sys, &tol(), None).unwrap().found().unwrap();
        let s = build_spectral_summary(&sys, &tp, &tol()).unwrap();
        assert_eq!(s.common_groups.len(), 2);
        assert!(s.common_groups.iter().all(|g| g.members.len() == 2 && !g.fragile));
        let r = theorem1_verdict(&sys, &tol(), None).unwrap();
        assert_eq!(r.verdict.status, Status::Uncontrollable);
        assert!(r.conditions.common_independence.is_fail());
        assert!(r.verdict.witness.is_some());
    }
}
