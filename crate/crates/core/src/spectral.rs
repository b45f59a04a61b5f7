//! Left eigenstructure and similarity transforms.
//!
//! Eigenvalues come from a complex Schur decomposition and are grouped into
//! clusters. Computed eigenvalues of a defective eigenvalue with a Jordan
//! block of size `k` scatter by roughly `eps^(1/k)`, far more than the
//! clustering threshold, so nearby clusters are merged whenever the merged
//! centroid `mu` passes the exact algebraic-multiplicity test
//! `rank((M - mu I)^k) = n - k`.

use crate::error::{Error, Result};
use crate::jordan::{self, ExactSearch};
use crate::matrix::{
    left_null_space, left_residual, normalize_phase, numerical_rank, row_echelon, singular_values, Matrix,
    RowVec, Tolerances, C64, ONE,
};
use crate::rational::RationalMatrix;

/// An eigenvalue together with a basis of its left eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct LeftEigenPair {
    pub value: C64,
    /// Unit-norm basis vectors, first significant entry real positive.
    pub vectors: Vec<RowVec>,
    pub geom_mult: usize,
    pub alg_mult: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenCluster {
    pub value: C64,
    pub alg_mult: usize,
}

/// Where a transform came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformOrigin {
    User,
    Diagonalizable,
    ExactJordan,
}

impl TransformOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::User => "user",
            Self::Diagonalizable => "diagonalizable",
            Self::ExactJordan => "exact_jordan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JordanBlock {
    pub start: usize,
    pub len: usize,
}

/// A similarity `T C T⁻¹ = J` with `J` in Jordan form.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformPair {
    pub t: Matrix,
    pub j: Matrix,
    pub lambdas: Vec<C64>,
    pub blocks: Vec<JordanBlock>,
    pub origin: TransformOrigin,
}

impl TransformPair {
    /// Reads `lambdas` and the block layout off a Jordan matrix whose
    /// superdiagonal holds exact zeros and ones.
    pub fn from_parts(t: Matrix, j: Matrix, origin: TransformOrigin) -> Self {
        let n = j.rows();
        let lambdas = (0..n).map(|i| j.get(i, i)).collect();
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 0..n {
            let continues = i + 1 < n && j.get(i, i + 1) == ONE;
            if !continues {
                blocks.push(JordanBlock {
                    start,
                    len: i + 1 - start,
                });
                start = i + 1;
            }
        }
        Self {
            t,
            j,
            lambdas,
            blocks,
            origin,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.len == 1)
    }

    /// Block containing node `i`.
    pub fn block_of(&self, i: usize) -> JordanBlock {
        *self
            .blocks
            .iter()
            .find(|b| (b.start..b.start + b.len).contains(&i))
            .expect("blocks cover every index")
    }
}

/// Outcome of a transform construction. Failing to find a transform is an
/// ordinary answer, not an error.
#[derive(Clone, Debug, PartialEq)]
pub enum TransformSearch {
    Found(TransformPair),
    NotComputable(String),
}

impl TransformSearch {
    pub fn found(self) -> Option<TransformPair> {
        match self {
            Self::Found(tp) => Some(tp),
            Self::NotComputable(_) => None,
        }
    }
}

/// All eigenvalues (with repetition) via the complex Schur form.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let failure = Error::NumericalFailure {
        operation: "Schur decomposition",
        rows: m.rows(),
        cols: m.cols(),
    };
    let n = m.rows();
    let scale = 1.0 + m.frobenius_norm();
    // A failed QR iteration is retried on a shifted copy; the shift is
    // undone on the eigenvalues.
    for shift in [C64::new(0.0, 0.0), C64::new(0.3719, 0.1123), C64::new(-0.2131, 0.4417)] {
        let shifted = m.shifted(-shift * scale);
        let Ok(values) = shifted.to_faer().eigenvalues() else {
            continue;
        };
        let values: Vec<C64> = values.into_iter().map(|z| z - shift * scale).collect();
        let trace: C64 = (0..n).map(|i| m.get(i, i)).sum();
        let sum: C64 = values.iter().sum();
        if values.len() == n && (sum - trace).norm() <= 1e-8 * scale * n as f64 {
            return Ok(values);
        }
    }
    Err(failure)
}

fn cluster_scale(values: &[C64]) -> f64 {
    1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Single-linkage grouping of points at the given radius. Groups are
/// returned as index lists.
fn single_linkage(points: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if (points[a] - points[b]).norm() <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

fn mean(values: &[C64]) -> C64 {
    values.iter().sum::<C64>() / values.len() as f64
}

/// Rank of `(m - mu I)^k`, with the cutoff scaled by `‖m - mu I‖^k` rather
/// than by the power's own norm, which is pure rounding noise when the
/// power vanishes.
fn shifted_power_rank(m: &Matrix, mu: C64, k: usize, tol: &Tolerances) -> Result<usize> {
    let s = m.shifted(mu);
    let mut p = s.clone();
    for _ in 1..k {
        p = &p * &s;
    }
    let cutoff = tol.rank_rel * s.frobenius_norm().powi(k as i32) * m.rows() as f64;
    Ok(singular_values(&p)?.iter().filter(|&&x| x > cutoff).count())
}

/// Groups eigenvalues of `m` into distinct eigenvalues with algebraic
/// multiplicities, sorted by real then imaginary part.
pub fn eigen_clusters(m: &Matrix, tol: &Tolerances) -> Result<Vec<EigenCluster>> {
    let values = eigenvalues(m)?;
    cluster_values(m, &values, tol)
}

pub(crate) fn cluster_values(m: &Matrix, values: &[C64], tol: &Tolerances) -> Result<Vec<EigenCluster>> {
    let n = values.len();
    let scale = cluster_scale(values);
    let base = tol.eig_cluster_rel * scale;
    let mut groups: Vec<Vec<C64>> = single_linkage(values, base)
        .into_iter()
        .map(|g| g.into_iter().map(|i| values[i]).collect())
        .collect();

    let mut radius = 10.0 * base;
    while radius <= 1e-2 * scale && groups.len() > 1 {
        let centroids: Vec<C64> = groups.iter().map(|g| mean(g)).collect();
        let mut merged: Vec<Vec<C64>> = Vec::new();
        for sup in single_linkage(&centroids, radius) {
            if sup.len() == 1 {
                merged.push(groups[sup[0]].clone());
                continue;
            }
            let members: Vec<C64> = sup.iter().flat_map(|&g| groups[g].iter().copied()).collect();
            let k = members.len();
            let mu = mean(&members);
            if shifted_power_rank(m, mu, k, tol)? == n - k {
                merged.push(members);
            } else {
                merged.extend(sup.iter().map(|&g| groups[g].clone()));
            }
        }
        groups = merged;
        radius *= 10.0;
    }

    let mut clusters: Vec<EigenCluster> = groups
        .iter()
        .map(|g| EigenCluster {
            value: mean(g),
            alg_mult: g.len(),
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    Ok(clusters)
}

/// Smallest distance between distinct clusters relative to the clustering
/// threshold; `f64::INFINITY` with a single cluster.
pub fn cluster_separation(clusters: &[EigenCluster], tol: &Tolerances) -> f64 {
    let values: Vec<C64> = clusters.iter().map(|c| c.value).collect();
    let base = tol.eig_cluster_rel * cluster_scale(&values);
    let mut best = f64::INFINITY;
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            best = best.min((values[a] - values[b]).norm() / base);
        }
    }
    best
}

pub(crate) fn left_pair_for_cluster(m: &Matrix, cluster: EigenCluster, tol: &Tolerances) -> Result<LeftEigenPair> {
    let (mut basis, _) = left_null_space(&m.shifted(cluster.value), tol, 1)?;
    if basis.len() > cluster.alg_mult {
        basis.drain(..basis.len() - cluster.alg_mult);
    }
    let mut vectors = row_echelon(&basis);
    if vectors.len() < basis.len() {
        vectors = basis;
    }
    vectors.iter_mut().for_each(|v| normalize_phase(v));
    Ok(LeftEigenPair {
        value: cluster.value,
        geom_mult: vectors.len(),
        vectors,
        alg_mult: cluster.alg_mult,
    })
}

/// Left eigenpairs of a square matrix, one per eigenvalue cluster.
pub fn eigen_left(m: &Matrix, tol: &Tolerances) -> Result<Vec<LeftEigenPair>> {
    let clusters = eigen_clusters(m, tol)?;
    clusters
        .into_iter()
        .map(|c| left_pair_for_cluster(m, c, tol))
        .collect()
}

/// Dimension of the left null space of `m - mu I`.
pub fn geometric_multiplicity(m: &Matrix, mu: C64, tol: &Tolerances) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::InvalidInput("geometric multiplicity needs a square matrix".into()));
    }
    Ok(m.rows() - numerical_rank(&m.shifted(mu), tol)?)
}

/// Checks `T C = J T` within `residual_rel · ‖T‖ · ‖C‖`.
pub fn verify_similarity(t: &Matrix, c: &Matrix, j: &Matrix, tol: &Tolerances) -> Result<bool> {
    let n = c.rows();
    if !c.is_square() || t.shape() != (n, n) || j.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "similarity check needs conformable square matrices, got T {:?}, C {:?}, J {:?}",
            t.shape(),
            c.shape(),
            j.shape()
        )));
    }
    if numerical_rank(t, tol)? < n {
        return Err(Error::InvalidInput("transform T is singular".into()));
    }
    let residual = (&(t * c) - &(j * t)).frobenius_norm();
    Ok(residual <= tol.residual_rel * t.frobenius_norm() * c.frobenius_norm())
}

/// Jordan structure of `c` without any sparsity requirement on `T`.
///
/// Tries, in order: an eigenvector basis when `c` is diagonalizable at
/// tolerance; an exact Jordan basis over the rationals (any real `f64`
/// matrix is exactly rational); otherwise `NotComputable`.
pub fn jordan_structure(c: &Matrix, tol: &Tolerances) -> TransformSearch {
    let exact = RationalMatrix::from_matrix(c);
    jordan_structure_with(c, exact.as_ref(), tol)
}

/// As [`jordan_structure`], using a separately supplied exact form of `c`
/// (for example one parsed from `p/q` text).
pub fn jordan_structure_with(c: &Matrix, exact: Option<&RationalMatrix>, tol: &Tolerances) -> TransformSearch {
    if !c.is_square() {
        return TransformSearch::NotComputable("topology is not square".into());
    }
    let n = c.rows();
    let mut reason = String::new();
    match diagonal_transform(c, tol) {
        Ok(Some(tp)) => return TransformSearch::Found(tp),
        Ok(None) => reason.push_str("not diagonalizable at tolerance"),
        Err(e) => reason.push_str(&format!("eigendecomposition failed ({e})")),
    }
    let Some(exact) = exact else {
        return TransformSearch::NotComputable(format!("{reason}; entries are not exact rationals"));
    };
    match jordan::exact_jordan_search(exact, &vec![0; n], &mut |_| true) {
        ExactSearch::Found { first, .. } => {
            let tp = first.to_transform();
            match verify_similarity(&tp.t, c, &tp.j, tol) {
                Ok(true) => TransformSearch::Found(tp),
                _ => TransformSearch::NotComputable(format!(
                    "{reason}; exact Jordan basis failed floating-point verification"
                )),
            }
        }
        ExactSearch::NoTransform(why) => TransformSearch::NotComputable(format!("{reason}; {why}")),
    }
}

/// Eigenvector transform for a diagonalizable matrix, `None` if the
/// geometric multiplicities fall short or the basis fails verification.
pub(crate) fn diagonal_transform(c: &Matrix, tol: &Tolerances) -> Result<Option<TransformPair>> {
    let n = c.rows();
    let pairs = eigen_left(c, tol)?;
    if pairs.iter().map(|p| p.geom_mult).sum::<usize>() != n {
        return Ok(None);
    }
    let rows = order_by_pivot(&pairs);
    let t = Matrix::from_row_vectors(&rows.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())?;
    let j = Matrix::diag(&rows.iter().map(|(mu, _)| *mu).collect::<Vec<_>>());
    if numerical_rank(&t, tol)? < n || !verify_similarity(&t, c, &j, tol)? {
        return Ok(None);
    }
    Ok(Some(TransformPair::from_parts(t, j, TransformOrigin::Diagonalizable)))
}

/// Orders eigenvectors by the column of their dominant entry so that, for
/// example, a diagonal matrix yields `T = I`.
pub(crate) fn order_by_pivot(pairs: &[LeftEigenPair]) -> Vec<(C64, RowVec)> {
    let mut rows: Vec<(usize, usize, C64, RowVec)> = Vec::new();
    for (ci, p) in pairs.iter().enumerate() {
        for v in &p.vectors {
            let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
            rows.push((pivot, ci, p.value, v.clone()));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    rows.into_iter().map(|(_, _, mu, v)| (mu, v)).collect()
}

/// Rounds a numerically computed `T C T⁻¹` to an exact Jordan pattern:
/// zeros off the diagonal and superdiagonal, superdiagonal entries 0 or 1,
/// constant diagonal within a block. `None` if it is not close to one.
pub(crate) fn snap_jordan(jn: &Matrix, tol: &Tolerances) -> Option<Matrix> {
    let n = jn.rows();
    let scale = 1.0 + jn.max_abs();
    let thr = tol.residual_rel.sqrt() * scale;
    let mut j = Matrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let x = jn.get(r, c);
            if r == c {
                j.set(r, c, x);
            } else if c == r + 1 {
                if x.norm() <= thr {
                    continue;
                } else if (x - ONE).norm() <= thr {
                    j.set(r, c, ONE);
                } else {
                    return None;
                }
            } else if x.norm() > thr {
                return None;
            }
        }
    }
    let tp = TransformPair::from_parts(Matrix::identity(n), j.clone(), TransformOrigin::User);
    for b in &tp.blocks {
        if b.len < 2 {
            continue;
        }
        let vals: Vec<C64> = (b.start..b.start + b.len).map(|i| jn.get(i, i)).collect();
        let mu = mean(&vals);
        if vals.iter().any(|v| (v - mu).norm() > thr) {
            return None;
        }
        for i in b.start..b.start + b.len {
            j.set(i, i, mu);
        }
    }
    Some(j)
}

/// Accepts a caller-supplied `T`: computes `T C T⁻¹`, snaps it to a Jordan
/// pattern and verifies the similarity.
pub fn transform_from_user(t: &Matrix, c: &Matrix, tol: &Tolerances) -> Result<TransformPair> {
    let n = c.rows();
    if t.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "transform T must be {n}x{n}, got {}x{}",
            t.rows(),
            t.cols()
        )));
    }
    if numerical_rank(t, tol)? < n {
        return Err(Error::InvalidInput("transform T is singular".into()));
    }
    let t_inv = t
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("transform T is singular".into()))?;
    let jn = &(t * c) * &t_inv;
    let j = snap_jordan(&jn, tol).ok_or_else(|| {
        Error::InvalidInput("T C T^-1 is not in Jordan form (upper triangular with 0/1 superdiagonal)".into())
    })?;
    if !verify_similarity(t, c, &j, tol)? {
        return Err(Error::InvalidInput(
            "transform T fails the similarity check T C = J T".into(),
        ));
    }
    Ok(TransformPair::from_parts(t.clone(), j, TransformOrigin::User))
}

/// True if `v` is a left eigenvector of `m` for `mu` within
/// `residual_rel · ‖m‖ · ‖v‖`.
pub fn is_left_eigenvector(v: &[C64], m: &Matrix, mu: C64, tol: &Tolerances) -> bool {
    let norm = crate::matrix::vec_norm(v);
    norm > 0.0 && left_residual(v, m, mu) <= tol.residual_rel * m.frobenius_norm().max(f64::MIN_POSITIVE) * norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: &[C64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - c(*y)).norm() < 1e-12)
    }

    #[test]
    fn diagonal_matrix_eigenpairs() {
        let tol = Tolerances::default();
        let pairs = eigen_left(&real(&[&[1.0, 0.0], &[0.0, 2.0]]), &tol).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].value - c(1.0)).norm() < 1e-14);
        assert!(close(&pairs[0].vectors[0], &[1.0, 0.0]));
        assert_eq!(pairs[0].geom_mult, 1);
        assert!((pairs[1].value - c(2.0)).norm() < 1e-14);
        assert!(close(&pairs[1].vectors[0], &[0.0, 1.0]));
    }

    #[test]
    fn nilpotent_block_has_one_left_eigenvector() {
        let tol = Tolerances::default();
        let pairs = eigen_left(&real(&[&[0.0, 1.0], &[0.0, 0.0]]), &tol).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].alg_mult, 2);
        assert_eq!(pairs[0].geom_mult, 1);
        assert!(close(&pairs[0].vectors[0], &[0.0, 1.0]));
    }

    #[test]
    fn identity_has_full_eigenspace() {
        let tol = Tolerances::default();
        let pairs = eigen_left(&Matrix::identity(3), &tol).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].geom_mult, 3);
        assert!(crate::matrix::linearly_independent(&pairs[0].vectors, &tol).unwrap());
    }

    #[test]
    fn defective_triple_is_one_cluster() {
        // A 3x3 Jordan block conjugated by an integer unimodular matrix:
        // floating-point eigenvalues scatter by ~1e-5 around 2.
        let p = real(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 3.0]]);
        let j = real(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        let m = &(&p * &j) * &p.try_inverse().unwrap();
        let tol = Tolerances::default();
        let clusters = eigen_clusters(&m, &tol).unwrap();
        assert_eq!(clusters.len(), 1, "{clusters:?}");
        assert_eq!(clusters[0].alg_mult, 3);
        assert!((clusters[0].value - c(2.0)).norm() < 1e-9);
        assert_eq!(geometric_multiplicity(&m, clusters[0].value, &tol).unwrap(), 1);
    }

    #[test]
    fn close_but_distinct_eigenvalues_stay_apart() {
        let m = real(&[&[1.0, 1.0], &[0.0, 1.0 + 1e-4]]);
        let clusters = eigen_clusters(&m, &Tolerances::default()).unwrap();
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn schur_retry_handles_cycling_case() {
        let m = Matrix::from_real_rows(&[
            &[0.0, 4.0, 0.0, 4.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -4.0, 0.0, -2.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev.len(), 4);
        // det(M - zI) = z^4 - 2z^2 + 8
        for z in ev {
            let p = z.powi(4) - z.powi(2) * 2.0 + 8.0;
            assert!(p.norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn complex_eigenvalues_of_rotation() {
        let m = real(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let tol = Tolerances::default();
        let pairs = eigen_left(&m, &tol).unwrap();
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert!((p.value.norm() - 1.0).abs() < 1e-14);
            assert!(is_left_eigenvector(&p.vectors[0], &m, p.value, &tol));
        }
    }

    #[test]
    fn geometric_multiplicity_examples() {
        let tol = Tolerances::default();
        assert_eq!(geometric_multiplicity(&Matrix::identity(2), c(1.0), &tol).unwrap(), 2);
        assert_eq!(
            geometric_multiplicity(&real(&[&[0.0, 1.0], &[0.0, 0.0]]), c(0.0), &tol).unwrap(),
            1
        );
        assert_eq!(
            geometric_multiplicity(&real(&[&[1.0, 0.0], &[0.0, 2.0]]), c(3.0), &tol).unwrap(),
            0
        );
    }

    #[test]
    fn similarity_examples() {
        let tol = Tolerances::default();
        let cm = real(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]);
        assert!(verify_similarity(&Matrix::identity(3), &cm, &cm, &tol).unwrap());
        let t = real(&[&[1.0, 0.0, -1.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let j = real(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]);
        assert!(verify_similarity(&t, &cm, &j, &tol).unwrap());
        let mut bumped = j.clone();
        bumped.set(0, 0, c(1.0));
        assert!(!verify_similarity(&t, &cm, &bumped, &tol).unwrap());
        assert!(matches!(
            verify_similarity(&Matrix::zeros(3, 3), &cm, &j, &tol),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn jordan_structure_of_diagonal_matrix_is_trivial() {
        let tol = Tolerances::default();
        let tp = jordan_structure(&real(&[&[3.0, 0.0], &[0.0, 5.0]]), &tol).found().unwrap();
        assert_eq!(tp.t, Matrix::identity(2));
        assert!(close(&tp.lambdas, &[3.0, 5.0]));
        assert!(tp.is_diagonal());
    }

    #[test]
    fn jordan_structure_of_jordan_block_uses_exact_path() {
        let tol = Tolerances::default();
        let cm = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let tp = jordan_structure(&cm, &tol).found().unwrap();
        assert_eq!(tp.origin, TransformOrigin::ExactJordan);
        assert_eq!(tp.j, cm);
        assert_eq!(tp.t, Matrix::identity(2));
        assert_eq!(tp.blocks, vec![JordanBlock { start: 0, len: 2 }]);
    }

    #[test]
    fn user_transform_is_checked() {
        let tol = Tolerances::default();
        let cm = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let t = real(&[&[-1.0, 1.0], &[1.0, 1.0]]);
        let tp = transform_from_user(&t, &cm, &tol).unwrap();
        assert!(close(&tp.lambdas, &[-1.0, 1.0]));
        let bad = real(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(transform_from_user(&bad, &cm, &tol).is_err());
    }

    #[test]
    fn left_eigenvectors_survive_similarity() {
        // v left eigenvector of A = P B P^-1  =>  v P left eigenvector of B.
        let tol = Tolerances::default();
        let b = real(&[&[2.0, 1.0, 0.0], &[0.0, -1.0, 3.0], &[1.0, 0.0, 1.0]]);
        let p = real(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 2.0]]);
        let a = &(&p * &b) * &p.try_inverse().unwrap();
        assert!(verify_similarity(&p, &b, &a, &tol).unwrap());
        for pair in eigen_left(&a, &tol).unwrap() {
            for v in &pair.vectors {
                let vp = crate::matrix::vec_mul(v, &p);
                assert!(is_left_eigenvector(&vp, &b, pair.value, &tol));
            }
        }
    }
}
