//! Queryable representations of a linear map on `M_n(K)` and a checker for
//! the unital-algebra-automorphism axioms.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{rational_parts, FieldSpec};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backing {
    /// `X -> B X B^-1`. The inverse is cached at construction.
    ConjugationBy { b: Matrix, b_inv: Matrix },
    /// `images[(i-1)*n + (j-1)] = phi(E_{i,j})`; evaluated by linear extension.
    FullTable { images: Vec<Matrix> },
    /// Only `phi(E_{n,1}) = h` and `phi(S) = g` are known.
    GeneratorPair { h: Matrix, g: Matrix },
}

/// A candidate automorphism `phi` of `M_n(K)`. Every successful [`apply`]
/// bumps an atomic query counter.
///
/// [`apply`]: AutomorphismOracle::apply
#[derive(Debug)]
pub struct AutomorphismOracle {
    spec: FieldSpec,
    n: usize,
    backing: Backing,
    queries: AtomicU64,
}

impl Clone for AutomorphismOracle {
    fn clone(&self) -> Self {
        AutomorphismOracle {
            spec: self.spec,
            n: self.n,
            backing: self.backing.clone(),
            queries: AtomicU64::new(self.query_count()),
        }
    }
}

fn check_square(m: &Matrix, spec: FieldSpec, n: usize, what: &str) -> Result<()> {
    if m.spec() != spec {
        return Err(Error::FieldMismatch {
            left: spec,
            right: m.spec(),
        });
    }
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl AutomorphismOracle {
    /// Inner automorphism by `b`; fails with [`Error::SingularMatrix`] if `b`
    /// is not invertible.
    pub fn conjugation_by(b: Matrix) -> Result<Self> {
        let b_inv = b.inverse()?;
        Ok(AutomorphismOracle {
            spec: b.spec(),
            n: b.rows(),
            backing: Backing::ConjugationBy { b, b_inv },
            queries: AtomicU64::new(0),
        })
    }

    /// `images` lists `phi(E_{i,j})` row-major over `(i, j)`.
    pub fn full_table(spec: FieldSpec, n: usize, images: Vec<Matrix>) -> Result<Self> {
        if n == 0 || images.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "full table needs {} images, got {}",
                n * n,
                images.len()
            )));
        }
        for (k, m) in images.iter().enumerate() {
            check_square(m, spec, n, &format!("image of E_{{{},{}}}", k / n + 1, k % n + 1))?;
        }
        Ok(AutomorphismOracle {
            spec,
            n,
            backing: Backing::FullTable { images },
            queries: AtomicU64::new(0),
        })
    }

    /// Tabulates `f(E_{i,j})` for every matrix unit.
    pub fn tabulate(
        spec: FieldSpec,
        n: usize,
        mut f: impl FnMut(&Matrix) -> Matrix,
    ) -> Result<Self> {
        let images = basis_pairs(n)
            .map(|(i, j)| Matrix::elementary(spec, n, i, j).map(|e| f(&e)))
            .collect::<Result<Vec<_>>>()?;
        Self::full_table(spec, n, images)
    }

    /// For `n = 1`, `S` is the zero matrix, so `g` must be zero.
    pub fn generator_pair(h: Matrix, g: Matrix) -> Result<Self> {
        let (spec, n) = (h.spec(), h.rows());
        check_square(&h, spec, n, "H")?;
        check_square(&g, spec, n, "G")?;
        if n == 1 && !g.is_zero() {
            return Err(Error::DimensionMismatch(
                "for n = 1, S = 0 and so phi(S) must be 0".into(),
            ));
        }
        Ok(AutomorphismOracle {
            spec,
            n,
            backing: Backing::GeneratorPair { h, g },
            queries: AtomicU64::new(0),
        })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_query_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Evaluates `phi(x)` and counts one query.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let out = self.evaluate(x)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    fn evaluate(&self, x: &Matrix) -> Result<Matrix> {
        check_square(x, self.spec, self.n, "query")?;
        let n = self.n;
        match &self.backing {
            Backing::ConjugationBy { b, b_inv } => b.mul(x)?.mul(b_inv),
            Backing::FullTable { images } => {
                let mut acc = Matrix::zeros(self.spec, n, n);
                for (k, coeff) in x.entries().iter().enumerate() {
                    if !coeff.is_zero() {
                        acc = acc.add(&images[k].scale(coeff)?)?;
                    }
                }
                Ok(acc)
            }
            Backing::GeneratorPair { h, g } => {
                if *x == Matrix::elementary(self.spec, n, n, 1)? {
                    Ok(h.clone())
                } else if *x == Matrix::shift(self.spec, n) {
                    Ok(g.clone())
                } else if x.is_identity() {
                    Ok(Matrix::identity(self.spec, n))
                } else if x.is_zero() {
                    Ok(Matrix::zeros(self.spec, n, n))
                } else {
                    Err(Error::UnsupportedQuery(format!(
                        "only E_{{{n},1}}, S, I and 0 are known, got {x}"
                    )))
                }
            }
        }
    }

    /// Returns `(phi(E_{n,1}), phi(S))`, consuming exactly two queries.
    pub fn query_generators(&self) -> Result<(Matrix, Matrix)> {
        let h = self.apply(&Matrix::elementary(self.spec, self.n, self.n, 1)?)?;
        let g = self.apply(&Matrix::shift(self.spec, self.n))?;
        Ok((h, g))
    }

    /// Materializes `phi(E_{i,j})` for every matrix unit without touching the
    /// query counter. A generator pair is expanded as `G^{n-i} H G^{j-1}`,
    /// which is an automorphism table only if `(H, G)` came from one.
    pub fn to_full_table(&self) -> Result<AutomorphismOracle> {
        let n = self.n;
        let images = match &self.backing {
            Backing::FullTable { images } => images.clone(),
            Backing::ConjugationBy { .. } => basis_pairs(n)
                .map(|(i, j)| self.evaluate(&Matrix::elementary(self.spec, n, i, j)?))
                .collect::<Result<Vec<_>>>()?,
            Backing::GeneratorPair { h, g } => {
                // powers[k] = G^k
                let mut powers = vec![Matrix::identity(self.spec, n)];
                for k in 1..n {
                    let next = powers[k - 1].mul(g)?;
                    powers.push(next);
                }
                basis_pairs(n)
                    .map(|(i, j)| powers[n - i].mul(h)?.mul(&powers[j - 1]))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Self::full_table(self.spec, n, images)
    }

    /// Checks unitality, multiplicativity on all pairs of matrix units, and
    /// bijectivity (full rank of the `n^2 x n^2` matrix of the map). Costs
    /// `n^2` queries. Not available for generator pairs.
    pub fn validate(&self) -> Result<ValidationReport> {
        if matches!(self.backing, Backing::GeneratorPair { .. }) {
            return Err(Error::UnsupportedBacking);
        }
        let n = self.n;
        let spec = self.spec;
        let images = basis_pairs(n)
            .map(|(i, j)| self.apply(&Matrix::elementary(spec, n, i, j)?))
            .collect::<Result<Vec<_>>>()?;
        let image = |i: usize, j: usize| &images[(i - 1) * n + (j - 1)];

        let mut first_violation = None;

        let mut unit_image = Matrix::zeros(spec, n, n);
        for i in 1..=n {
            unit_image = unit_image.add(image(i, i))?;
        }
        let unital_ok = unit_image.is_identity();
        if !unital_ok {
            first_violation = Some(Violation::Unital);
        }

        let lifted = LiftedTable::new(&images);
        let mut multiplicative_ok = true;
        'outer: for (i, j) in basis_pairs(n) {
            for (k, l) in basis_pairs(n) {
                let target = (j == k).then(|| (i - 1) * n + (l - 1));
                if !lifted.product_matches(n, (i - 1) * n + (j - 1), (k - 1) * n + (l - 1), target) {
                    multiplicative_ok = false;
                    first_violation.get_or_insert(Violation::Multiplicative {
                        left: (i, j),
                        right: (k, l),
                    });
                    break 'outer;
                }
            }
        }

        let vectorized = Matrix::from_fn(spec, n * n, n * n, |r, c| images[c].entries()[r].clone());
        let rank = vectorized.rank();
        let bijective_ok = rank == n * n;
        if !bijective_ok {
            first_violation.get_or_insert(Violation::NotBijective { rank });
        }

        Ok(ValidationReport {
            linear_ok: true,
            unital_ok,
            multiplicative_ok,
            bijective_ok,
            first_violation,
        })
    }
}

/// Table images lifted once so the `n^4` product checks avoid per-entry
/// rational reductions: over Q each image is `M / d` with `M` integral,
/// over GF(p) the raw residues.
enum LiftedTable {
    Integers {
        mats: Vec<Vec<BigInt>>,
        dens: Vec<BigInt>,
    },
    Residues {
        mats: Vec<Vec<u64>>,
        p: u64,
    },
}

impl LiftedTable {
    fn new(images: &[Matrix]) -> Self {
        match images[0].spec() {
            FieldSpec::Rationals => {
                let (mats, dens) = images
                    .iter()
                    .map(|m| {
                        let parts: Vec<_> = m
                            .entries()
                            .iter()
                            .map(|e| rational_parts(e.as_rational().expect("rational entry")))
                            .collect();
                        let lcm = parts.iter().fold(BigInt::one(), |acc, (_, d)| acc.lcm(d));
                        let ints = parts.iter().map(|(num, den)| num * (&lcm / den)).collect();
                        (ints, lcm)
                    })
                    .unzip();
                LiftedTable::Integers { mats, dens }
            }
            FieldSpec::PrimeField(p) => LiftedTable::Residues {
                mats: images
                    .iter()
                    .map(|m| m.entries().iter().map(|e| e.residue().expect("residue")).collect())
                    .collect(),
                p: p.get(),
            },
        }
    }

    /// Whether `image[a] * image[b]` equals `image[target]`, or zero when
    /// `target` is `None`.
    fn product_matches(&self, n: usize, a: usize, b: usize, target: Option<usize>) -> bool {
        match self {
            LiftedTable::Integers { mats, dens } => {
                let (x, y) = (&mats[a], &mats[b]);
                let scale = &dens[a] * &dens[b];
                (0..n * n).all(|rc| {
                    let (r, c) = (rc / n, rc % n);
                    let sum: BigInt = (0..n)
                        .filter(|&k| !x[r * n + k].is_zero() && !y[k * n + c].is_zero())
                        .map(|k| &x[r * n + k] * &y[k * n + c])
                        .sum();
                    match target {
                        None => sum.is_zero(),
                        Some(t) => sum * &dens[t] == &mats[t][rc] * &scale,
                    }
                })
            }
            LiftedTable::Residues { mats, p } => {
                let (x, y) = (&mats[a], &mats[b]);
                let p = *p as u128;
                (0..n * n).all(|rc| {
                    let (r, c) = (rc / n, rc % n);
                    let sum = (0..n).fold(0u128, |acc, k| {
                        (acc + x[r * n + k] as u128 * y[k * n + c] as u128) % p
                    });
                    sum as u64 == target.map_or(0, |t| mats[t][rc])
                })
            }
        }
    }
}

/// `(i, j)` for `1 <= i, j <= n`, row-major.
pub fn basis_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (1..=n).flat_map(move |i| (1..=n).map(move |j| (i, j)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Unital,
    /// `phi(E_left) phi(E_right) != phi(E_left E_right)`; indices are 1-based.
    Multiplicative {
        left: (usize, usize),
        right: (usize, usize),
    },
    NotBijective {
        rank: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unital => write!(f, "phi(I) != I"),
            Violation::Multiplicative {
                left: (i, j),
                right: (k, l),
            } => write!(
                f,
                "phi(E_{{{i},{j}}}) phi(E_{{{k},{l}}}) != phi(E_{{{i},{j}}} E_{{{k},{l}}})"
            ),
            Violation::NotBijective { rank } => {
                write!(f, "map has rank {rank}, not n^2")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub linear_ok: bool,
    pub unital_ok: bool,
    pub multiplicative_ok: bool,
    pub bijective_ok: bool,
    pub first_violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_automorphism(&self) -> bool {
        self.linear_ok && self.unital_ok && self.multiplicative_ok && self.bijective_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_i64_rows(Q, rows).unwrap()
    }

    fn e(n: usize, i: usize, j: usize) -> Matrix {
        Matrix::elementary(Q, n, i, j).unwrap()
    }

    fn transpose_table(spec: FieldSpec, n: usize) -> AutomorphismOracle {
        AutomorphismOracle::tabulate(spec, n, Matrix::transpose).unwrap()
    }

    #[test]
    fn apply_conjugation() {
        let phi = AutomorphismOracle::conjugation_by(m(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(phi.apply(&e(2, 1, 1)).unwrap(), e(2, 2, 2));
        assert!(phi.apply(&Matrix::identity(Q, 2)).unwrap().is_identity());
        assert_eq!(phi.query_count(), 2);
    }

    #[test]
    fn singular_conjugator_rejected() {
        assert_eq!(
            AutomorphismOracle::conjugation_by(m(&[&[1, 2], &[2, 4]])).unwrap_err(),
            Error::SingularMatrix
        );
    }

    #[test]
    fn identity_table_is_identity() {
        let phi = AutomorphismOracle::tabulate(Q, 3, Matrix::clone).unwrap();
        let x = m(&[&[1, -2, 3], &[4, 5, -6], &[7, 8, 9]]);
        assert_eq!(phi.apply(&x).unwrap(), x);
    }

    #[test]
    fn query_generators_identity_map() {
        let phi = AutomorphismOracle::tabulate(Q, 3, Matrix::clone).unwrap();
        let (h, g) = phi.query_generators().unwrap();
        assert_eq!(h, e(3, 3, 1));
        assert_eq!(g, Matrix::shift(Q, 3));
        assert_eq!(phi.query_count(), 2);
        phi.query_generators().unwrap();
        assert_eq!(phi.query_count(), 4);
    }

    #[test]
    fn query_generators_diagonal_conjugation() {
        let b = m(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        let phi = AutomorphismOracle::conjugation_by(b.clone()).unwrap();
        let (h, g) = phi.query_generators().unwrap();

        // B E_{3,1} B^-1 = (b_3 / b_1) E_{3,1}; B S B^-1 has (b_i / b_{i+1}) on
        // the superdiagonal.
        let q = |s: &str| FieldElement::parse(Q, s).unwrap();
        let want_h = e(3, 3, 1).scale(&q("3")).unwrap();
        let want_g = e(3, 1, 2)
            .scale(&q("1/2"))
            .unwrap()
            .add(&e(3, 2, 3).scale(&q("2/3")).unwrap())
            .unwrap();
        assert_eq!(h, want_h);
        assert_eq!(g, want_g);
        // independent product check: H B = B E_{3,1}, G B = B S
        assert_eq!(h.mul(&b).unwrap(), b.mul(&e(3, 3, 1)).unwrap());
        assert_eq!(g.mul(&b).unwrap(), b.mul(&Matrix::shift(Q, 3)).unwrap());
    }

    #[test]
    fn query_generators_n1() {
        let phi = AutomorphismOracle::conjugation_by(m(&[&[5]])).unwrap();
        let (h, g) = phi.query_generators().unwrap();
        assert!(h.is_identity());
        assert!(g.is_zero());
        assert_eq!(phi.query_count(), 2);
    }

    #[test]
    fn generator_pair_supports_only_generators() {
        let phi = AutomorphismOracle::generator_pair(e(2, 2, 1), e(2, 1, 2)).unwrap();
        assert_eq!(phi.apply(&e(2, 2, 1)).unwrap(), e(2, 2, 1));
        assert_eq!(phi.apply(&Matrix::shift(Q, 2)).unwrap(), e(2, 1, 2));
        assert!(phi.apply(&Matrix::identity(Q, 2)).unwrap().is_identity());
        assert!(matches!(
            phi.apply(&e(2, 1, 1)),
            Err(Error::UnsupportedQuery(_))
        ));
        assert_eq!(phi.query_count(), 3);
        assert!(matches!(
            phi.apply(&Matrix::identity(Q, 3)),
            Err(Error::DimensionMismatch(_))
        ));
        assert_eq!(phi.validate(), Err(Error::UnsupportedBacking));
    }

    #[test]
    fn generator_pair_n1_requires_zero_g() {
        assert!(AutomorphismOracle::generator_pair(m(&[&[1]]), m(&[&[1]])).is_err());
        assert!(AutomorphismOracle::generator_pair(m(&[&[1]]), m(&[&[0]])).is_ok());
    }

    #[test]
    fn validate_inner() {
        let phi = AutomorphismOracle::conjugation_by(m(&[&[2, 1], &[1, 1]])).unwrap();
        let rep = phi.validate().unwrap();
        assert!(rep.is_automorphism());
        assert_eq!(rep.first_violation, None);
        assert_eq!(phi.query_count(), 4);
    }

    #[test]
    fn validate_transpose_fails_multiplicativity() {
        let phi = transpose_table(Q, 2);
        let rep = phi.validate().unwrap();
        assert!(rep.unital_ok);
        assert!(rep.bijective_ok);
        assert!(!rep.multiplicative_ok);
        let Some(Violation::Multiplicative { left, right }) = rep.first_violation else {
            panic!("expected multiplicative violation");
        };
        // the witness really is one
        let (l, r) = (e(2, left.0, left.1), e(2, right.0, right.1));
        let lhs = phi.apply(&l).unwrap().mul(&phi.apply(&r).unwrap()).unwrap();
        assert_ne!(lhs, phi.apply(&l.mul(&r).unwrap()).unwrap());
        // the textbook witness: phi(E12 E21) = E11 but phi(E12) phi(E21) = E22
        let lhs = phi
            .apply(&e(2, 1, 2))
            .unwrap()
            .mul(&phi.apply(&e(2, 2, 1)).unwrap())
            .unwrap();
        assert_eq!(lhs, e(2, 2, 2));
        assert_eq!(phi.apply(&e(2, 1, 1)).unwrap(), e(2, 1, 1));
    }

    #[test]
    fn validate_zero_map() {
        let phi = AutomorphismOracle::tabulate(Q, 2, |_| Matrix::zeros(Q, 2, 2)).unwrap();
        let rep = phi.validate().unwrap();
        assert!(!rep.unital_ok);
        assert!(!rep.bijective_ok);
        assert_eq!(rep.first_violation, Some(Violation::Unital));
    }

    #[test]
    fn to_full_table_from_generators() {
        let phi = AutomorphismOracle::generator_pair(e(2, 2, 1), Matrix::shift(Q, 2)).unwrap();
        let table = phi.to_full_table().unwrap();
        let Backing::FullTable { images } = table.backing() else {
            unreachable!()
        };
        let expected: Vec<Matrix> = basis_pairs(2).map(|(i, j)| e(2, i, j)).collect();
        assert_eq!(images, &expected);
        assert_eq!(phi.query_count(), 0);
    }

    #[test]
    fn to_full_table_from_conjugation() {
        let phi = AutomorphismOracle::conjugation_by(Matrix::identity(Q, 3)).unwrap();
        let table = phi.to_full_table().unwrap();
        for (i, j) in basis_pairs(3) {
            assert_eq!(table.apply(&e(3, i, j)).unwrap(), e(3, i, j));
        }
        let b = m(&[&[1, 2, 0], &[0, 1, 3], &[4, 0, 1]]);
        let phi = AutomorphismOracle::conjugation_by(b).unwrap();
        assert!(phi.to_full_table().unwrap().validate().unwrap().is_automorphism());
    }

    #[test]
    fn validate_n1() {
        let phi = AutomorphismOracle::conjugation_by(m(&[&[3]])).unwrap();
        assert!(phi.validate().unwrap().is_automorphism());
    }
}
