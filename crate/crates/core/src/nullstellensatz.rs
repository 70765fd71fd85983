//! GF(p^2) arithmetic, the grid embedding `(i, j) -> i + alpha j`, and
//! nonzero-coefficient certificates for satisfying sequences on bipartite
//! instances with a prime part size.
//!
//! The coefficient kernel expands the squared Vandermonde product through
//! pairs of determinant permutations; a dense polynomial oracle
//! cross-checks it for small s.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut acc = 1u128;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Smallest quadratic non-residue `a >= 2` modulo an odd prime, decided by
/// the Euler criterion `a^((p-1)/2) = -1`.
pub fn find_non_residue(p: u64) -> Result<u64> {
    if p == 2 || !is_prime(p) {
        return Err(Error::param(format!("{p} is not an odd prime")));
    }
    for a in 2..p {
        if mod_pow(a, (p - 1) / 2, p) == p - 1 {
            return Ok(a);
        }
    }
    Err(Error::invariant(format!("no non-residue found below {p}")))
}

/// `u + v alpha` with `alpha^2 = a`, components reduced modulo `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp2Element {
    pub u: u64,
    pub v: u64,
    pub p: u64,
}

/// The quadratic extension of Z_p by a root of `x^2 = a`, `a` a
/// non-residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadExtField {
    p: u64,
    a: u64,
}

impl QuadExtField {
    pub fn new(p: u64) -> Result<Self> {
        let a = find_non_residue(p)?;
        Ok(QuadExtField { p, a })
    }

    pub fn with_non_residue(p: u64, a: u64) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::param(format!("{p} is not an odd prime")));
        }
        if a < 2 || a >= p || mod_pow(a, (p - 1) / 2, p) != p - 1 {
            return Err(Error::param(format!("{a} is not a quadratic non-residue mod {p}")));
        }
        Ok(QuadExtField { p, a })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn element(&self, u: u64, v: u64) -> Fp2Element {
        Fp2Element { u: u % self.p, v: v % self.p, p: self.p }
    }

    pub fn zero(&self) -> Fp2Element {
        self.element(0, 0)
    }

    pub fn one(&self) -> Fp2Element {
        self.element(1, 0)
    }

    fn check(&self, x: Fp2Element) -> Result<()> {
        if x.p != self.p {
            return Err(Error::param(format!(
                "mixed moduli: element over {} used in field over {}",
                x.p, self.p
            )));
        }
        Ok(())
    }

    pub fn add(&self, x: Fp2Element, y: Fp2Element) -> Result<Fp2Element> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.element((x.u + y.u) % self.p, (x.v + y.v) % self.p))
    }

    pub fn sub(&self, x: Fp2Element, y: Fp2Element) -> Result<Fp2Element> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.element(
            (x.u + self.p - y.u) % self.p,
            (x.v + self.p - y.v) % self.p,
        ))
    }

    pub fn neg(&self, x: Fp2Element) -> Result<Fp2Element> {
        self.sub(self.zero(), x)
    }

    /// `(u1 + v1 a)(u2 + v2 a) = (u1 u2 + a v1 v2) + (u1 v2 + u2 v1) a`.
    pub fn mul(&self, x: Fp2Element, y: Fp2Element) -> Result<Fp2Element> {
        self.check(x)?;
        self.check(y)?;
        let p = self.p as u128;
        let u = ((x.u as u128 * y.u as u128) + (self.a as u128 * x.v as u128 % p * (y.v as u128)))
            % p;
        let v = (x.u as u128 * y.v as u128 + x.v as u128 * y.u as u128) % p;
        Ok(self.element(u as u64, v as u64))
    }

    pub fn pow(&self, x: Fp2Element, mut exp: u64) -> Result<Fp2Element> {
        self.check(x)?;
        let mut acc = self.one();
        let mut base = x;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base)?;
            }
            base = self.mul(base, base)?;
            exp >>= 1;
        }
        Ok(acc)
    }

    /// The grid embedding `(i, j) -> i + alpha j` on `[p]^2` (1-based
    /// cells; `p` reduces to 0).
    pub fn phi(&self, i: u64, j: u64) -> Result<Fp2Element> {
        if i < 1 || i > self.p || j < 1 || j > self.p {
            return Err(Error::param(format!(
                "cell ({i},{j}) out of range for the {p} x {p} grid",
                p = self.p
            )));
        }
        Ok(self.element(i % self.p, j % self.p))
    }
}

#[derive(Debug, Clone)]
pub struct SquareCriterionReport {
    pub p: u64,
    pub pairs_checked: u64,
    pub all_consistent: bool,
    pub first_failure: Option<((u64, u64), (u64, u64))>,
}

/// Exhaustively checks that the squared difference of two embedded cells
/// lies in the base field exactly when the cells share a row or a column.
pub fn check_square_criterion(field: &QuadExtField) -> Result<SquareCriterionReport> {
    let p = field.p();
    let mut pairs = 0u64;
    let mut first_failure = None;
    for i1 in 1..=p {
        for j1 in 1..=p {
            for i2 in 1..=p {
                for j2 in 1..=p {
                    pairs += 1;
                    let d = field.sub(field.phi(i1, j1)?, field.phi(i2, j2)?)?;
                    let sq = field.mul(d, d)?;
                    let in_base = sq.v == 0;
                    let shares = i1 == i2 || j1 == j2;
                    if in_base != shares && first_failure.is_none() {
                        first_failure = Some(((i1, j1), (i2, j2)));
                    }
                }
            }
        }
    }
    Ok(SquareCriterionReport {
        p,
        pairs_checked: pairs,
        all_consistent: first_failure.is_none(),
        first_failure,
    })
}

pub const MAX_COEFFICIENT_S: usize = 11;

fn validate_exponents(f: &[u64]) -> Result<usize> {
    let s = f.len();
    if s == 0 {
        return Err(Error::param("exponent vector must be nonempty".to_string()));
    }
    if s > MAX_COEFFICIENT_S {
        return Err(Error::param(format!(
            "s = {s} too large for the permutation kernel; limit is {MAX_COEFFICIENT_S}"
        )));
    }
    let degree: u64 = f.iter().sum();
    let expected = (s * (s - 1)) as u64;
    if degree != expected {
        return Err(Error::param(format!(
            "degree mismatch: the product is homogeneous of degree s(s-1) = {expected}, \
             but the exponents sum to {degree}; all other monomials have coefficient 0"
        )));
    }
    if let Some(&bad) = f.iter().find(|&&e| e > 2 * (s as u64 - 1)) {
        return Err(Error::param(format!(
            "exponent {bad} exceeds the per-variable maximum 2(s-1) = {}",
            2 * (s - 1)
        )));
    }
    Ok(s)
}

/// Integer coefficient of `x_1^{f_1} ... x_s^{f_s}` in
/// `prod_{i<j} (x_j - x_i)^2`, via two determinant expansions: the sum of
/// `sgn(sigma) sgn(tau)` over permutation pairs with
/// `sigma(i) + tau(i) - 2 = f_i`, so `tau` is determined by `sigma`.
pub fn vandermonde_sq_coefficient_int(f: &[u64]) -> Result<i128> {
    let s = validate_exponents(f)?;
    let mut total: i128 = 0;
    let mut sigma: Vec<usize> = (0..s).collect();
    permute_visit(&mut sigma, 0, &mut |perm| {
        // tau(i) = f_i + 2 - sigma(i), 1-based
        let mut tau = vec![0usize; s];
        let mut seen = vec![false; s];
        for i in 0..s {
            let sigma_i = perm[i] as u64 + 1;
            let t = f[i] + 2;
            if t <= sigma_i {
                return;
            }
            let tau_i = (t - sigma_i) as usize;
            if tau_i < 1 || tau_i > s || seen[tau_i - 1] {
                return;
            }
            seen[tau_i - 1] = true;
            tau[i] = tau_i - 1;
        }
        total += (permutation_sign(perm) * permutation_sign(&tau)) as i128;
    });
    Ok(total)
}

/// The same coefficient reduced modulo `p`.
pub fn vandermonde_sq_coefficient(f: &[u64], p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::param(format!("{p} is not prime")));
    }
    let raw = vandermonde_sq_coefficient_int(f)?;
    Ok(raw.rem_euclid(p as i128) as u64)
}

fn permute_visit(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_visit(items, start + 1, visit);
        items.swap(start, i);
    }
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Dense multivariate expansion of `prod_{i<j} (x_j - x_i)^2` over Z_p,
/// reading off one monomial. Independent of the permutation kernel; kept
/// to s <= 5 where the dense product stays small.
pub fn naive_coefficient_oracle(f: &[u64], p: u64) -> Result<u64> {
    let s = f.len();
    if s > 5 {
        return Err(Error::param(format!("naive oracle supports s <= 5, got {s}")));
    }
    validate_exponents(f)?;
    if !is_prime(p) {
        return Err(Error::param(format!("{p} is not prime")));
    }

    let mut poly: HashMap<Vec<u8>, u64> = HashMap::new();
    poly.insert(vec![0u8; s], 1);
    for i in 0..s {
        for j in i + 1..s {
            // factor (x_j - x_i)^2 = x_j^2 - 2 x_i x_j + x_i^2
            let mut terms: Vec<(Vec<u8>, u64)> = Vec::new();
            let mut e = vec![0u8; s];
            e[j] = 2;
            terms.push((e.clone(), 1));
            e = vec![0u8; s];
            e[i] = 1;
            e[j] = 1;
            terms.push((e.clone(), (2 * p - 2) % p));
            e = vec![0u8; s];
            e[i] = 2;
            terms.push((e, 1));

            let mut next: HashMap<Vec<u8>, u64> = HashMap::new();
            for (mono, coeff) in &poly {
                for (te, tc) in &terms {
                    let mut m = mono.clone();
                    for (slot, add) in m.iter_mut().zip(te) {
                        *slot += add;
                    }
                    let entry = next.entry(m).or_insert(0);
                    *entry = (*entry + coeff * tc) % p;
                }
            }
            poly = next;
        }
    }
    let key: Vec<u8> = f.iter().map(|&e| e as u8).collect();
    Ok(poly.get(&key).copied().unwrap_or(0))
}

/// A certificate that `p f_1, ..., p f_s` is a satisfying sequence for
/// bipartite instances on the `p x p` grid.
#[derive(Debug, Clone)]
pub struct CoefficientCertificate {
    pub s: usize,
    pub exponents: Vec<u64>,
    pub p: u64,
    pub coefficient: u64,
    pub satisfying_sequence: Vec<u64>,
    pub valid: bool,
    pub rationale: String,
}

/// Computes the coefficient certificate for `f` modulo `p`.
pub fn certify_sequence_k2(p: u64, f: &[u64]) -> Result<CoefficientCertificate> {
    if p == 2 || !is_prime(p) {
        return Err(Error::param(format!(
            "{p} is not an odd prime; the quadratic extension is unavailable"
        )));
    }
    let s = validate_exponents(f)?;
    let coefficient = vandermonde_sq_coefficient(f, p)?;
    Ok(CoefficientCertificate {
        s,
        exponents: f.to_vec(),
        p,
        coefficient,
        satisfying_sequence: f.iter().map(|&e| p * e).collect(),
        valid: coefficient != 0,
        rationale: "the coefficient of x^f in prod_{i<j} (x_j - x_i)^2 equals the coefficient \
                    of x^{pf} in prod_{i<j} (x_j^p - x_i^p)^2, the top-degree part of \
                    prod_{i<j} prod_q ((x_j - x_i)^2 - q) over GF(p^2); when it is nonzero, \
                    the Combinatorial Nullstellensatz yields an evaluation point with all \
                    squared differences outside the base field, i.e. pairwise disjoint grid \
                    cells, one per family"
            .to_string(),
    })
}

/// All certificates for nondecreasing exponent vectors of total degree
/// s(s-1) with entries at most 2(s-1), in lexicographic order.
pub fn catalog_certificates(s: usize, p: u64) -> Result<Vec<CoefficientCertificate>> {
    if s == 0 || s > MAX_COEFFICIENT_S {
        return Err(Error::param(format!(
            "s must lie in 1..={MAX_COEFFICIENT_S}, got {s}"
        )));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(s);
    enumerate_nondecreasing(
        s,
        (s * (s - 1)) as u64,
        2 * (s as u64 - 1),
        0,
        &mut current,
        &mut |f| {
            out.push(f.to_vec());
        },
    );
    out.iter().map(|f| certify_sequence_k2(p, f)).collect()
}

fn enumerate_nondecreasing(
    s: usize,
    remaining: u64,
    max_entry: u64,
    min_entry: u64,
    current: &mut Vec<u64>,
    visit: &mut impl FnMut(&[u64]),
) {
    if current.len() == s {
        if remaining == 0 {
            visit(current);
        }
        return;
    }
    let slots_left = (s - current.len()) as u64;
    for e in min_entry..=max_entry.min(remaining) {
        // the remaining slots must be able to absorb what is left
        if (slots_left - 1) * max_entry < remaining - e {
            continue;
        }
        current.push(e);
        enumerate_nondecreasing(s, remaining - e, max_entry, e, current, visit);
        current.pop();
    }
}
