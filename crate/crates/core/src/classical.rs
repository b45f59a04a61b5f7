//! Kalman-rank and PBH controllability tests on an arbitrary pair `(F, G)`.

use std::fmt;

use crate::error::Result;
use crate::matrix::{left_null_space, left_singular_vectors, rank_cutoff, svd, Matrix, Svd, RowVec, Tolerances, C64};
use crate::spectral::{cluster_separation, eigen_clusters};
use crate::system::AssembledPair;

/// Verdicts whose margin falls below this factor are flagged fragile.
pub const FRAGILE_MARGIN: f64 = 10.0;

/// Largest state dimension the Kalman test accepts by default.
pub const DEFAULT_KALMAN_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Controllable,
    Uncontrollable,
    NotApplicable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Controllable => "controllable",
            Self::Uncontrollable => "uncontrollable",
            Self::NotApplicable => "not_applicable",
        }
    }

    pub fn is_decided(self) -> bool {
        self != Self::NotApplicable
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Theorem,
    Homogeneous,
    Kalman,
    Pbh,
    CorollaryEtd,
    SourceNode,
    SinkNode,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Theorem => "theorem",
            Self::Homogeneous => "homogeneous",
            Self::Kalman => "kalman",
            Self::Pbh => "pbh",
            Self::CorollaryEtd => "corollary_etd",
            Self::SourceNode => "source_node",
            Self::SinkNode => "sink_node",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A left eigenpair `(value, vector)` certifying an uncontrollable mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub value: C64,
    pub vector: RowVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub method: Method,
    pub witness: Option<Witness>,
    pub detail: String,
    /// Factor by which the deciding quantities clear their thresholds;
    /// `f64::INFINITY` when the decision is structural.
    pub margin: f64,
}

impl Verdict {
    pub fn new(status: Status, method: Method, detail: impl Into<String>) -> Self {
        Self {
            status,
            method,
            witness: None,
            detail: detail.into(),
            margin: f64::INFINITY,
        }
    }

    pub fn not_applicable(method: Method, detail: impl Into<String>) -> Self {
        Self::new(Status::NotApplicable, method, detail)
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn is_fragile(&self) -> bool {
        self.margin < FRAGILE_MARGIN
    }
}

/// `max(a/b, b/a)` with the conventions `0/0 → ∞` (exact decision) and
/// `x/0 → ∞`.
pub(crate) fn ratio_margin(value: f64, threshold: f64) -> f64 {
    if value == 0.0 || threshold == 0.0 {
        return f64::INFINITY;
    }
    (value / threshold).max(threshold / value)
}

/// Gap factor of a rank decision: how far the last kept and first dropped
/// singular values sit from the cutoff.
pub(crate) fn rank_margin(sv: &[f64], rank: usize, cutoff: f64) -> f64 {
    if sv.first().copied().unwrap_or(0.0) == 0.0 {
        return f64::INFINITY;
    }
    let kept = if rank > 0 { sv[rank - 1] / cutoff } else { f64::INFINITY };
    let dropped = match sv.get(rank) {
        Some(&s) if s > 0.0 => cutoff / s,
        _ => f64::INFINITY,
    };
    kept.min(dropped)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanRank {
    pub rank: usize,
    pub dim: usize,
    pub margin: f64,
    /// Norm each Krylov block was divided by.
    pub block_scales: Vec<f64>,
    /// New directions found at each staircase step.
    pub steps: Vec<usize>,
}

/// `[G, FG, …, F^{k-1}G]` with each block divided by its Frobenius norm.
/// Column scaling does not change the rank. A propagated block whose norm
/// is below `rank_rel * |F|_F * n` is rounding residue of an exact zero
/// and is flushed, with every later block.
pub fn controllability_matrix(p: &AssembledPair, tol: &Tolerances) -> Result<(Matrix, Vec<f64>)> {
    let k = p.state_dim();
    let floor = tol.rank_rel * p.f.frobenius_norm() * k as f64;
    let mut blocks = Vec::with_capacity(k);
    let mut scales = Vec::with_capacity(k);
    let mut cur = p.g.clone();
    for step in 0..k {
        if step > 0 {
            cur = &p.f * &cur;
        }
        let mut norm = cur.frobenius_norm();
        if step > 0 && norm <= floor {
            cur = Matrix::zeros(cur.rows(), cur.cols());
            norm = 0.0;
        }
        if norm > 0.0 {
            cur = cur.scale(C64::new(1.0 / norm, 0.0));
        }
        scales.push(norm);
        blocks.push(cur.clone());
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    Ok((Matrix::hstack(&refs)?, scales))
}

/// Dimension of the Krylov space `span[G, FG, …]` by an orthonormal
/// staircase: each step maps the newest directions through `F`,
/// orthogonalizes twice against the basis so far and keeps the singular
/// directions above `rank_rel * |F|_F * n`. The first step uses the plain
/// rank cutoff of `G`. Equal to the rank of the explicit controllability
/// matrix, without its conditioning loss on defective spectra.
pub fn kalman_rank(p: &AssembledPair, tol: &Tolerances) -> Result<KalmanRank> {
    let n = p.state_dim();
    let (_, block_scales) = controllability_matrix(p, tol)?;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut margin = f64::INFINITY;
    let mut steps = Vec::new();

    let (u, sv) = left_singular_vectors(&p.g)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(KalmanRank { rank: 0, dim: n, margin, block_scales, steps });
    }
    let cutoff = rank_cutoff(smax, p.g.rows(), p.g.cols(), tol);
    let r = sv.iter().filter(|&&s| s > cutoff).count();
    margin = margin.min(rank_margin(&sv, r, cutoff));
    basis.extend(u.into_iter().take(r));
    steps.push(r);
    let mut newest = basis.clone();

    let cutoff = tol.rank_rel * p.f.frobenius_norm() * n as f64;
    while basis.len() < n && !newest.is_empty() {
        let mut w: Vec<Vec<C64>> = newest.iter().map(|q| mat_vec(&p.f, q)).collect();
        for _ in 0..2 {
            for col in w.iter_mut() {
                for q in &basis {
                    let c: C64 = q.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in col.iter_mut().zip(q) {
                        *x -= c * y;
                    }
                }
            }
        }
        let wm = Matrix::new(n, w.len(), (0..n).flat_map(|i| w.iter().map(move |c| c[i])).collect())?;
        let (u, sv) = left_singular_vectors(&wm)?;
        let r = sv.iter().filter(|&&s| s > cutoff).count().min(n - basis.len());
        if sv.first().copied().unwrap_or(0.0) > 0.0 && cutoff > 0.0 {
            margin = margin.min(rank_margin(&sv, r, cutoff));
        }
        newest = u.into_iter().take(r).collect();
        basis.extend(newest.iter().cloned());
        steps.push(r);
    }
    Ok(KalmanRank {
        rank: basis.len(),
        dim: n,
        margin,
        block_scales,
        steps,
    })
}

fn mat_vec(m: &Matrix, v: &[C64]) -> Vec<C64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j) * v[j]).sum())
        .collect()
}

/// Kalman rank test with the default state-dimension cap.
pub fn kalman_controllable(p: &AssembledPair, tol: &Tolerances) -> Result<Verdict> {
    kalman_controllable_capped(p, tol, DEFAULT_KALMAN_CAP)
}

pub fn kalman_controllable_capped(p: &AssembledPair, tol: &Tolerances, cap: usize) -> Result<Verdict> {
    tol.validate()?;
    if p.state_dim() > cap {
        return Ok(Verdict::not_applicable(
            Method::Kalman,
            format!("state dimension {} exceeds the Kalman cap {cap}; PBH is the oracle of record", p.state_dim()),
        ));
    }
    let kr = kalman_rank(p, tol)?;
    let status = if kr.rank == kr.dim {
        Status::Controllable
    } else {
        Status::Uncontrollable
    };
    let steps: Vec<String> = kr.steps.iter().map(|s| s.to_string()).collect();
    Ok(Verdict::new(
        status,
        Method::Kalman,
        format!("rank {} of {}; staircase steps [{}]", kr.rank, kr.dim, steps.join(", ")),
    )
    .with_margin(kr.margin))
}

/// Smallest singular value of `p` (padded with zero columns when it has
/// more rows than columns) and the matching left singular vector.
fn smallest_left_singular(p: &Matrix) -> Result<(f64, Vec<C64>)> {
    let padded = if p.rows() > p.cols() {
        Matrix::hstack(&[p, &Matrix::zeros(p.rows(), p.rows() - p.cols())])?
    } else {
        p.clone()
    };
    let Svd { u, sv, .. } = svd(&padded)?;
    let last = padded.rows() - 1;
    // uᴴ P = s vᴴ, so the row coefficients are conj(u).
    let alpha = u[last].iter().map(|z| z.conj()).collect();
    Ok((sv[last], alpha))
}

/// PBH test: uncontrollable iff some left eigenvector `v` of `F` has
/// `‖vG‖ ≤ residual_rel · ‖G‖ · ‖v‖`. For an eigenspace with orthonormal
/// basis `V` this is `σ_min(V G) ≤ residual_rel · ‖G‖`.
pub fn pbh_controllable(p: &AssembledPair, tol: &Tolerances) -> Result<Verdict> {
    tol.validate()?;
    let n = p.state_dim();
    let clusters = eigen_clusters(&p.f, tol)?;
    let theta = tol.residual_rel * p.g.frobenius_norm();
    let mut margin = cluster_separation(&clusters, tol);
    let mut failing: Option<(f64, Witness)> = None;

    for cl in &clusters {
        let shifted = p.f.shifted(cl.value);
        let (mut basis, spectrum) = left_null_space(&shifted, tol, 1)?;
        if basis.len() > cl.alg_mult {
            basis.drain(..basis.len() - cl.alg_mult);
        }
        let kept = n - basis.len();
        let cutoff = rank_cutoff(spectrum.first().copied().unwrap_or(0.0), n, n, tol);
        margin = margin.min(rank_margin(&spectrum, kept, cutoff));

        let v = Matrix::from_row_vectors(&basis)?;
        let prod = &v * &p.g;
        let (s_min, alpha) = smallest_left_singular(&prod)?;
        margin = margin.min(ratio_margin(s_min, theta));
        if s_min <= theta && failing.is_none() {
            let mut w = vec![C64::new(0.0, 0.0); n];
            for (a, row) in alpha.iter().zip(&basis) {
                for (x, y) in w.iter_mut().zip(row) {
                    *x += a * y;
                }
            }
            crate::matrix::normalize_phase(&mut w);
            failing = Some((s_min, Witness { value: cl.value, vector: w }));
        }
    }

    Ok(match failing {
        Some((s, witness)) => Verdict::new(
            Status::Uncontrollable,
            Method::Pbh,
            format!(
                "left eigenvector for eigenvalue {} annihilates G (smallest stacked singular value {s:.3e})",
                format_complex(witness.value)
            ),
        )
        .with_witness(witness),
        None => Verdict::new(
            Status::Controllable,
            Method::Pbh,
            format!("all {} eigenspaces reach the input", clusters.len()),
        ),
    }
    .with_margin(margin))
}

pub(crate) fn format_complex(z: C64) -> String {
    if z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// True iff the witness passes both residual checks against `(F, G)`.
pub fn witness_is_valid(w: &Witness, p: &AssembledPair, tol: &Tolerances) -> bool {
    let norm = crate::matrix::vec_norm(&w.vector);
    if norm == 0.0 || w.vector.len() != p.state_dim() {
        return false;
    }
    let eig = crate::matrix::left_residual(&w.vector, &p.f, w.value);
    let vg = crate::matrix::vec_norm(&crate::matrix::vec_mul(&w.vector, &p.g));
    eig <= tol.residual_rel * p.f.frobenius_norm().max(f64::MIN_POSITIVE) * norm
        && vg <= tol.residual_rel * p.g.frobenius_norm() * norm
}
