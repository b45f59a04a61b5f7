//! Exact rational matrices.
//!
//! Parsed inputs keep their exact decimal or `p/q` value here so the Jordan
//! structure of a topology can be computed without rounding. Any finite
//! `f64` also converts exactly (as a dyadic rational).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, C64};

pub type Rational = BigRational;

/// Decimal exponents beyond this are rejected rather than expanded.
const MAX_DECIMAL_SCALE: u32 = 4096;

/// Parses an integer, a decimal (optionally with exponent) or `p/q`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent.checked_sub(i32::try_from(frac_part.len()).ok()?)?;
    if scale.unsigned_abs() > MAX_DECIMAL_SCALE {
        return None;
    }
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `p/q` or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "rational matrix {rows}x{cols} with {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    /// Exact conversion of a real matrix. Fails if any entry has a nonzero
    /// imaginary part.
    pub fn from_matrix(m: &Matrix) -> Option<Self> {
        let data = m
            .entries()
            .iter()
            .map(|z| (z.im == 0.0).then(|| Rational::from_float(z.re)).flatten())
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            rows: m.rows(),
            cols: m.cols(),
            data,
        })
    }

    pub fn to_matrix(&self) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|r| C64::new(rational_to_f64(r), 0.0))
            .collect();
        Matrix::new(self.rows, self.cols, data).expect("finite conversion of a rational matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<Rational> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    /// `self - mu * I`.
    pub fn shifted(&self, mu: &Rational) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out.data[i * self.cols + i] -= mu;
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "rational product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).fold(Rational::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<Rational>> = (0..self.rows).map(|i| self.row(i)).collect();
        rref(&mut rows).len()
    }

    /// Basis of `{x : self · x = 0}`, each vector scaled to coprime integers.
    pub fn null_space(&self) -> Vec<Vec<Rational>> {
        let mut rows: Vec<Vec<Rational>> = (0..self.rows).map(|i| self.row(i)).collect();
        let pivots = rref(&mut rows);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Rational::zero(); self.cols];
                x[f] = Rational::one();
                for (r, &p) in pivots.iter().enumerate() {
                    x[p] = -rows[r][f].clone();
                }
                integer_scaled(x)
            })
            .collect()
    }

    /// Basis of `{v : v · self = 0}`.
    pub fn left_null_space(&self) -> Vec<Vec<Rational>> {
        self.transpose().null_space()
    }

    /// Monic characteristic polynomial `det(xI - self)`, lowest degree
    /// first (Faddeev–LeVerrier).
    pub fn characteristic_polynomial(&self) -> Vec<Rational> {
        assert_eq!(self.rows, self.cols, "characteristic polynomial needs a square matrix");
        let n = self.rows;
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self.mul(&m);
            for i in 0..n {
                next.data[i * n + i] += &coeffs[n - k + 1];
            }
            m = next;
            let am = self.mul(&m);
            coeffs[n - k] = -am.trace() / Rational::from_integer(BigInt::from(k));
        }
        coeffs
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(format_rational).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form in place. Returns pivot columns; zero rows are
/// dropped.
pub(crate) fn rref(rows: &mut Vec<Vec<Rational>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        rows[r].iter_mut().for_each(|x| *x *= &inv);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, q) in row.iter_mut().zip(&pivot) {
                if !q.is_zero() {
                    *x -= &f * q;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Scales a rational vector to coprime integers with a positive first
/// nonzero entry.
pub(crate) fn integer_scaled(v: Vec<Rational>) -> Vec<Rational> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return v;
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(first) if first.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter()
        .map(|x| Rational::from_integer(x / &gcd * &sign))
        .collect()
}

/// Incrementally maintained row-echelon basis for exact independence tests.
#[derive(Clone, Debug, Default)]
pub(crate) struct EchelonBasis {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl EchelonBasis {
    fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let f = v[*p].clone();
            for (x, q) in v.iter_mut().zip(row) {
                if !q.is_zero() {
                    *x -= &f * q;
                }
            }
        }
        v
    }

    /// Adds `v` if it is independent of the current span.
    pub fn insert(&mut self, v: &[Rational]) -> bool {
        let r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        let r: Vec<Rational> = r.iter().map(|x| x * &inv).collect();
        // Keep earlier rows reduced against the new pivot.
        for (_, row) in &mut self.rows {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, q) in row.iter_mut().zip(&r) {
                if !q.is_zero() {
                    *x -= &f * q;
                }
            }
        }
        self.rows.push((p, r));
        true
    }

    /// True if all of `vs` together with the current span are independent.
    pub fn extends_independently(&self, vs: &[Vec<Rational>]) -> bool {
        let mut probe = self.clone();
        vs.iter().all(|v| probe.insert(v))
    }
}

/// Evaluates a polynomial (lowest degree first) at `x`.
pub(crate) fn poly_eval(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Divides by `(x - root)`, assuming `root` is a root.
pub(crate) fn poly_deflate(coeffs: &[Rational], root: &Rational) -> Vec<Rational> {
    let n = coeffs.len() - 1;
    let mut out = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for k in (1..=n).rev() {
        carry = &coeffs[k] + carry * root;
        out[k - 1] = carry.clone();
    }
    out
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
pub(crate) fn convergents(x: f64, max_den: u64, max_terms: usize) -> Vec<Rational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    // h_{-1} = 1, h_{-2} = 0; k_{-1} = 0, k_{-2} = 1
    let (mut hm1, mut hm2) = (BigInt::one(), BigInt::zero());
    let (mut km1, mut km2) = (BigInt::zero(), BigInt::one());
    let mut rem = x;
    for _ in 0..max_terms {
        let a = rem.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a_int = BigInt::from(a as i64);
        let hn = &a_int * &hm1 + &hm2;
        let kn = &a_int * &km1 + &km2;
        if kn > BigInt::from(max_den) {
            break;
        }
        out.push(Rational::new(hn.clone(), kn.clone()));
        hm2 = std::mem::replace(&mut hm1, hn);
        km2 = std::mem::replace(&mut km1, kn);
        let frac = rem - a;
        if frac.abs() < 1e-15 {
            break;
        }
        rem = 1.0 / frac;
    }
    out
}

/// Rational roots of a polynomial with rational coefficients, with
/// multiplicities, using floating-point root estimates as candidates.
/// Every reported root is verified exactly.
pub(crate) fn rational_roots(coeffs: &[Rational], hints: &[C64]) -> Vec<(Rational, usize)> {
    let mut poly = coeffs.to_vec();
    while poly.len() > 1 && poly.last().is_some_and(Zero::is_zero) {
        poly.pop();
    }
    // Any rational root p/q in lowest terms has q dividing the leading
    // coefficient of the integer-scaled polynomial.
    let lcm = poly.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let lead = (poly.last().cloned().unwrap_or_else(Rational::one) * &lcm)
        .to_integer()
        .abs();
    let max_den = lead.to_u64().unwrap_or(u64::MAX);

    let mut roots: Vec<(Rational, usize)> = Vec::new();
    let take_root = |poly: &mut Vec<Rational>, root: Rational, roots: &mut Vec<(Rational, usize)>| {
        let mut mult = 0;
        while poly.len() > 1 && poly_eval(poly, &root).is_zero() {
            *poly = poly_deflate(poly, &root);
            mult += 1;
        }
        if mult > 0 {
            roots.push((root, mult));
        }
    };
    take_root(&mut poly, Rational::zero(), &mut roots);
    for z in hints {
        if poly.len() <= 1 {
            break;
        }
        if z.im.abs() > 1e-3 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut candidates = convergents(z.re, max_den, 64);
        candidates.push(Rational::from_integer(BigInt::from(z.re.round() as i64)));
        for cand in candidates {
            if roots.iter().any(|(r, _)| *r == cand) {
                continue;
            }
            let lead_ok = (&lead % cand.denom()).is_zero();
            if lead_ok {
                take_root(&mut poly, cand, &mut roots);
            }
        }
    }
    roots
}
