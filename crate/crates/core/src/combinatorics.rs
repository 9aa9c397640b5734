//! Multi-indices, exact multinomial weights, the `Q_{l,a}` polynomials and the
//! signed subset sums used by the inclusion-exclusion data.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// Largest `l` for which [`signed_subsets`] will enumerate `2^l - 1` subsets.
pub const SUBSET_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }
}

/// Non-empty subset of `{1..l}` stored as zero-based member indices, with sign
/// `(-1)^(l - |S|)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedSubset {
    pub members: Vec<usize>,
    pub sign: i8,
}

/// All `alpha` of length `l` with `|alpha| = a`.
///
/// Ordering: the first entry runs from `a` down to `0`, the remainder recursively
/// in the same order, so `(l=2, a=1)` yields `[(1,0), (0,1)]`.
pub fn enumerate_multi_indices(l: usize, a: u32) -> Result<Vec<MultiIndex>> {
    if l < 1 {
        return Err(Error::arg("multi-index length must be at least 1"));
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fill(l, a, &mut cur, &mut out);
    Ok(out)
}

fn fill(l: usize, a: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if l == 1 {
        cur.push(a);
        out.push(MultiIndex(cur.clone()));
        cur.pop();
        return;
    }
    for first in (0..=a).rev() {
        cur.push(first);
        fill(l - 1, a - first, cur, out);
        cur.pop();
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `binom(l + a; 1 + alpha) / l! = (l + a)! / (prod_j (1 + alpha_j)! * l!)`.
pub fn multinomial_weight(l: usize, a: u32, alpha: &MultiIndex) -> Result<BigRational> {
    if alpha.len() != l {
        return Err(Error::arg(format!(
            "multi-index has length {}, expected {l}",
            alpha.len()
        )));
    }
    if alpha.degree() != a {
        return Err(Error::arg(format!(
            "multi-index degree {} does not match a = {a}",
            alpha.degree()
        )));
    }
    let num = factorial(l as u32 + a);
    let den = alpha
        .entries()
        .iter()
        .fold(factorial(l as u32), |acc, &e| acc * factorial(e + 1));
    Ok(BigRational::new(num, den))
}

/// `Q_{l,a}` as an explicit list of weighted monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct QPolynomial {
    pub l: usize,
    pub a: u32,
    pub terms: Vec<(MultiIndex, BigRational)>,
}

impl QPolynomial {
    /// Coefficient of `w^alpha`, if present.
    pub fn coefficient(&self, alpha: &[u32]) -> Option<&BigRational> {
        self.terms
            .iter()
            .find(|(m, _)| m.entries() == alpha)
            .map(|(_, c)| c)
    }

    /// Float weights in term order, for hot loops.
    pub fn float_weights(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|(_, c)| c.to_f64().expect("rational weight fits in f64"))
            .collect()
    }

    pub fn evaluate(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                got: w.len(),
            });
        }
        let mut total = Complex64::new(0.0, 0.0);
        for ((alpha, _), c) in self.terms.iter().zip(self.float_weights()) {
            let mut mono = Complex64::new(c, 0.0);
            for (wj, &e) in w.iter().zip(alpha.entries()) {
                mono *= wj.powu(e);
            }
            total += mono;
        }
        Ok(total)
    }
}

pub fn q_polynomial(l: usize, a: u32) -> Result<QPolynomial> {
    let terms = enumerate_multi_indices(l, a)?
        .into_iter()
        .map(|alpha| {
            let c = multinomial_weight(l, a, &alpha)?;
            Ok((alpha, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QPolynomial { l, a, terms })
}

/// All non-empty subsets of `{0..l-1}`, by size then lexicographically.
pub fn signed_subsets(l: usize) -> Result<Vec<SignedSubset>> {
    if l < 1 {
        return Err(Error::arg("subset universe must be non-empty"));
    }
    if l > SUBSET_CAP {
        return Err(Error::SubsetCap(l));
    }
    let mut out = Vec::with_capacity((1usize << l) - 1);
    for size in 1..=l {
        let mut members: Vec<usize> = (0..size).collect();
        loop {
            let sign = if (l - size).is_multiple_of(2) { 1 } else { -1 };
            out.push(SignedSubset {
                members: members.clone(),
                sign,
            });
            // Advance to the next size-combination in lexicographic order.
            let mut i = size;
            while i > 0 && members[i - 1] == l - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            members[i - 1] += 1;
            for t in i..size {
                members[t] = members[t - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// `(1/l!) sum_S (-1)^(l-|S|) (sum_{j in S} w_j)^l'`.
pub fn pie_evaluate(l: usize, l_prime: u32, w: &[Complex64]) -> Result<Complex64> {
    if l_prime < 1 {
        return Err(Error::arg("exponent must be at least 1"));
    }
    if w.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: w.len(),
        });
    }
    let mut total = Complex64::new(0.0, 0.0);
    for s in signed_subsets(l)? {
        let sum: Complex64 = s.members.iter().map(|&j| w[j]).sum();
        total += f64::from(s.sign) * sum.powu(l_prime);
    }
    let lf = factorial(l as u32).to_f64().expect("factorial fits in f64");
    Ok(total / lf)
}

/// Closed form of the signed subset sum: 0 below `l`, the product at `l`,
/// and product times `Q_{l, l'-l}` above.
pub fn pie_closed_form(l: usize, l_prime: u32, w: &[Complex64]) -> Result<Complex64> {
    if w.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: w.len(),
        });
    }
    let lp = l_prime as usize;
    if lp < l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let prod: Complex64 = w.iter().product();
    if lp == l {
        return Ok(prod);
    }
    Ok(prod * q_polynomial(l, (lp - l) as u32)?.evaluate(w)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn multi_index_examples() {
        let v = enumerate_multi_indices(2, 1).unwrap();
        assert_eq!(v, vec![MultiIndex(vec![1, 0]), MultiIndex(vec![0, 1])]);
        assert_eq!(
            enumerate_multi_indices(1, 3).unwrap(),
            vec![MultiIndex(vec![3])]
        );
        assert!(enumerate_multi_indices(0, 1).is_err());
    }

    #[test]
    fn multi_index_count_matches_brute_force() {
        for l in 1..=4usize {
            for a in 0..=4u32 {
                let got = enumerate_multi_indices(l, a).unwrap();
                let mut brute = 0;
                let total = (a as usize + 1).pow(l as u32);
                for code in 0..total {
                    let mut x = code;
                    let mut s = 0;
                    for _ in 0..l {
                        s += x % (a as usize + 1);
                        x /= a as usize + 1;
                    }
                    if s == a as usize {
                        brute += 1;
                    }
                }
                assert_eq!(got.len(), brute, "l={l} a={a}");
                let mut dedup = got.clone();
                dedup.sort_by(|x, y| x.0.cmp(&y.0));
                dedup.dedup();
                assert_eq!(dedup.len(), got.len());
            }
        }
        assert_eq!(enumerate_multi_indices(3, 2).unwrap().len(), 6);
    }

    #[test]
    fn explicit_low_order_weights() {
        let w = |l, a, al: &[u32]| multinomial_weight(l, a, &MultiIndex(al.to_vec())).unwrap();
        assert_eq!(w(2, 1, &[1, 0]), r(3, 2));
        assert_eq!(w(2, 2, &[2, 0]), r(2, 1));
        assert_eq!(w(2, 2, &[1, 1]), r(3, 1));
        for al in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            assert_eq!(w(3, 1, &al), r(2, 1));
        }
        assert!(multinomial_weight(2, 2, &MultiIndex(vec![1, 0])).is_err());
    }

    #[test]
    fn q_polynomial_examples() {
        let q = q_polynomial(1, 2).unwrap();
        assert_eq!(q.terms, vec![(MultiIndex(vec![2]), r(1, 1))]);
        for l in 1..=5 {
            let q = q_polynomial(l, 0).unwrap();
            assert_eq!(q.terms.len(), 1);
            assert_eq!(q.terms[0].1, r(1, 1));
        }
        let q22 = q_polynomial(2, 2).unwrap();
        assert_eq!(q22.evaluate(&[c(1.0), c(2.0)]).unwrap(), c(16.0));
    }

    #[test]
    fn subsets_and_signs() {
        let s1 = signed_subsets(1).unwrap();
        assert_eq!(
            s1,
            vec![SignedSubset {
                members: vec![0],
                sign: 1
            }]
        );
        let s2 = signed_subsets(2).unwrap();
        assert_eq!(
            s2,
            vec![
                SignedSubset {
                    members: vec![0],
                    sign: -1
                },
                SignedSubset {
                    members: vec![1],
                    sign: -1
                },
                SignedSubset {
                    members: vec![0, 1],
                    sign: 1
                },
            ]
        );
        let s3 = signed_subsets(3).unwrap();
        assert_eq!(s3.len(), 7);
        for s in &s3 {
            let expect = if s.members.len() % 2 == 1 { 1 } else { -1 };
            assert_eq!(s.sign, expect);
        }
        assert_eq!(s3[3].members, vec![0, 1]);
        assert_eq!(s3[5].members, vec![1, 2]);
        assert!(matches!(signed_subsets(21), Err(Error::SubsetCap(21))));
    }

    #[test]
    fn pie_examples() {
        let w = [Complex64::new(0.3, 1.1), Complex64::new(-0.7, 0.2)];
        assert!(pie_evaluate(2, 1, &w).unwrap().norm() < 1e-15);
        assert!((pie_evaluate(2, 2, &w).unwrap() - w[0] * w[1]).norm() < 1e-15);
        assert_eq!(pie_evaluate(2, 4, &[c(1.0), c(2.0)]).unwrap(), c(32.0));
        assert_eq!(pie_closed_form(2, 4, &[c(1.0), c(2.0)]).unwrap(), c(32.0));
    }
}
