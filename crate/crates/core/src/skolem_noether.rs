//! Explicit conjugator for an automorphism `phi` of `M_n(K)` from two images.
//!
//! With `H = phi(E_{n,1})`, `G = phi(S)` and a nonzero `a` in the kernel of
//! `I - G^{n-1}H`, the matrix
//!
//! ```text
//! A = [ G^{n-1}Ha | G^{n-2}Ha | ... | GHa | Ha ]
//! ```
//!
//! is invertible and satisfies `phi(X) = A X A^-1` for all `X`. Besides the
//! construction this module evaluates each identity the correctness argument
//! relies on, so any run can be audited.

use serde::{Deserialize, Serialize};

use crate::automorphism::{basis_pairs, AutomorphismOracle, Backing, ValidationReport};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::{ColumnVector, Matrix};

fn check_pair(h: &Matrix, g: &Matrix, n: usize) -> Result<()> {
    for (name, m) in [("H", h), ("G", g)] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.rows(),
                m.cols()
            )));
        }
    }
    if h.spec() != g.spec() {
        return Err(Error::FieldMismatch {
            left: h.spec(),
            right: g.spec(),
        });
    }
    Ok(())
}

/// `G^{n-1} H`, which equals `phi(E_{1,1})` for a genuine automorphism.
pub fn projected_idempotent(h: &Matrix, g: &Matrix, n: usize) -> Result<Matrix> {
    check_pair(h, g, n)?;
    g.power(n as u64 - 1)?.mul(h)
}

/// First canonical nullspace vector of `I - p`.
pub fn kernel_vector(p: &Matrix) -> Result<ColumnVector> {
    let n = p.rows();
    let complement = Matrix::identity(p.spec(), n).sub(p)?;
    complement
        .nullspace_basis()
        .into_iter()
        .next()
        .ok_or(Error::EmptyKernel)
}

/// Columns `G^{n-1}Ha, ..., GHa, Ha` for an arbitrary `a`. The result need
/// not be invertible; [`build_conjugator`] is the checked entry point.
pub fn assemble_columns(h: &Matrix, g: &Matrix, a: &ColumnVector) -> Result<Matrix> {
    let n = h.rows();
    check_pair(h, g, n)?;
    let mut cols = Vec::with_capacity(n);
    let mut current = h.mul_vec(a)?;
    for _ in 1..n {
        let next = g.mul_vec(&current)?;
        cols.push(current);
        current = next;
    }
    cols.push(current);
    cols.reverse();
    Matrix::from_columns(&cols)
}

/// The recovered conjugator together with its inverse and the kernel vector
/// it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugationWitness {
    conjugator: Matrix,
    inverse: Matrix,
    kernel_vector: ColumnVector,
}

impl ConjugationWitness {
    /// Wraps an arbitrary conjugator; fails with [`Error::SingularMatrix`] if
    /// it is not invertible.
    pub fn new(conjugator: Matrix, kernel_vector: ColumnVector) -> Result<Self> {
        let inverse = conjugator.inverse()?;
        Ok(ConjugationWitness {
            conjugator,
            inverse,
            kernel_vector,
        })
    }

    pub fn conjugator(&self) -> &Matrix {
        &self.conjugator
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn kernel_vector(&self) -> &ColumnVector {
        &self.kernel_vector
    }

    pub fn n(&self) -> usize {
        self.conjugator.rows()
    }

    pub fn spec(&self) -> FieldSpec {
        self.conjugator.spec()
    }

    /// `A X A^-1`.
    pub fn conjugate(&self, x: &Matrix) -> Result<Matrix> {
        self.conjugator.mul(x)?.mul(&self.inverse)
    }

    /// `A E_{i,j} A^-1` as the outer product of column `i` of `A` with row
    /// `j` of `A^-1` (1-based).
    pub fn conjugate_unit(&self, i: usize, j: usize) -> Matrix {
        let n = self.n();
        Matrix::from_fn(self.spec(), n, n, |r, c| {
            &self.conjugator[(r, i - 1)] * &self.inverse[(j - 1, c)]
        })
    }
}

/// Builds `A` from `(H, G)`. Uses `n - 1` matrix-vector products for the
/// columns. Invalid input surfaces as [`Error::EmptyKernel`] or
/// [`Error::SingularConjugator`].
pub fn build_conjugator(h: &Matrix, g: &Matrix, n: usize) -> Result<ConjugationWitness> {
    let p = projected_idempotent(h, g, n)?;
    let a = kernel_vector(&p)?;
    let conjugator = assemble_columns(h, g, &a)?;
    ConjugationWitness::new(conjugator, a).map_err(|e| match e {
        Error::SingularMatrix => Error::SingularConjugator,
        other => other,
    })
}

/// Per-identity outcome of [`check_structure_identities`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCheckReport {
    /// `G^n = 0` and `H G^k H = 0` for `0 <= k <= n-2`.
    pub nilpotent_ok: bool,
    /// `(G^{n-1}H)^2 = G^{n-1}H`.
    pub idempotent_ok: bool,
    /// `rank(I - G^{n-1}H) = n - 1`.
    pub kernel_rank_ok: bool,
    /// `det(I - G^{n-1}H) = 0`.
    pub singular_ok: bool,
    /// `a != 0` and `(I - G^{n-1}H) a = 0`.
    pub kernel_ok: bool,
    /// `G^{n-1}H a = a`.
    pub fixed_point_ok: bool,
    /// `A E_{n,1} = H A`.
    pub intertwine_e_ok: bool,
    /// `A S = G A`.
    pub intertwine_s_ok: bool,
    /// `rank(A) = n`.
    pub conjugator_rank_ok: bool,
    pub first_failure: Option<String>,
}

impl StructureCheckReport {
    pub fn all_ok(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn flags(&self) -> [(&'static str, bool); 9] {
        [
            ("singular", self.singular_ok),
            ("kernel", self.kernel_ok),
            ("fixed_point", self.fixed_point_ok),
            ("idempotent", self.idempotent_ok),
            ("kernel_rank", self.kernel_rank_ok),
            ("nilpotent", self.nilpotent_ok),
            ("intertwine_e", self.intertwine_e_ok),
            ("intertwine_s", self.intertwine_s_ok),
            ("conjugator_rank", self.conjugator_rank_ok),
        ]
    }
}

pub fn check_structure_identities(
    h: &Matrix,
    g: &Matrix,
    witness: &ConjugationWitness,
) -> Result<StructureCheckReport> {
    check_structure_parts(h, g, witness.kernel_vector(), witness.conjugator())
}

/// Same as [`check_structure_identities`] but for a possibly singular `A`,
/// e.g. one assembled from forced input via [`assemble_columns`].
pub fn check_structure_parts(
    h: &Matrix,
    g: &Matrix,
    a: &ColumnVector,
    conjugator: &Matrix,
) -> Result<StructureCheckReport> {
    let n = h.rows();
    check_pair(h, g, n)?;
    let spec = h.spec();

    let p = projected_idempotent(h, g, n)?;
    let complement = Matrix::identity(spec, n).sub(&p)?;

    let singular_ok = complement.det()?.is_zero();
    let kernel_ok = !a.is_zero() && complement.mul_vec(a)?.is_zero();
    let fixed_point_ok = p.mul_vec(a)? == *a;
    let idempotent_ok = p.mul(&p)? == p;
    let kernel_rank_ok = complement.rank() == n - 1;

    // HG^kH = 0 for 0 <= k <= n-2; empty when n = 1
    let mut nilpotent_ok = g.power(n as u64)?.is_zero();
    let mut g_pow = Matrix::identity(spec, n);
    for _ in 0..n.saturating_sub(1) {
        if !nilpotent_ok {
            break;
        }
        nilpotent_ok = h.mul(&g_pow)?.mul(h)?.is_zero();
        g_pow = g_pow.mul(g)?;
    }

    let e_n1 = Matrix::elementary(spec, n, n, 1)?;
    let s = Matrix::shift(spec, n);
    let intertwine_e_ok = conjugator.mul(&e_n1)? == h.mul(conjugator)?;
    let intertwine_s_ok = conjugator.mul(&s)? == g.mul(conjugator)?;
    let conjugator_rank_ok = conjugator.rank() == n;

    let mut report = StructureCheckReport {
        nilpotent_ok,
        idempotent_ok,
        kernel_rank_ok,
        singular_ok,
        kernel_ok,
        fixed_point_ok,
        intertwine_e_ok,
        intertwine_s_ok,
        conjugator_rank_ok,
        first_failure: None,
    };
    report.first_failure = report
        .flags()
        .iter()
        .find(|(_, ok)| !ok)
        .map(|(name, _)| name.to_string());
    Ok(report)
}

/// Which oracle query disagreed with the candidate conjugation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum FailedQuery {
    /// `E_{i,j}`, 1-based.
    Unit { i: usize, j: usize },
    Shift,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub success: bool,
    pub failing: Option<FailedQuery>,
    pub queries: u64,
}

/// Checks `A E_{i,j} A^-1 = phi(E_{i,j})` for all `n^2` matrix units. A
/// generator-pair oracle only knows `phi(E_{n,1})` and `phi(S)`; since those
/// generate the algebra, agreement on both is checked instead (2 queries).
pub fn verify_conjugation(
    phi: &AutomorphismOracle,
    witness: &ConjugationWitness,
) -> Result<Verification> {
    let n = phi.n();
    let spec = phi.spec();
    if witness.n() != n || witness.spec() != spec {
        return Err(Error::DimensionMismatch(
            "witness does not match the oracle".into(),
        ));
    }
    let before = phi.query_count();
    let mut failing = None;
    if let Backing::GeneratorPair { .. } = phi.backing() {
        let e_n1 = Matrix::elementary(spec, n, n, 1)?;
        if phi.apply(&e_n1)? != witness.conjugate_unit(n, 1) {
            failing = Some(FailedQuery::Unit { i: n, j: 1 });
        }
        let s = Matrix::shift(spec, n);
        if failing.is_none() && phi.apply(&s)? != witness.conjugate(&s)? {
            failing = Some(FailedQuery::Shift);
        }
    } else {
        for (i, j) in basis_pairs(n) {
            let image = phi.apply(&Matrix::elementary(spec, n, i, j)?)?;
            if image != witness.conjugate_unit(i, j) {
                failing = Some(FailedQuery::Unit { i, j });
                break;
            }
        }
    }
    Ok(Verification {
        success: failing.is_none(),
        failing,
        queries: phi.query_count() - before,
    })
}

/// `Some(l)` with `a1 = l * a2` when `a1 a2^-1` is scalar, else `None`.
pub fn scalar_relation(a1: &Matrix, a2: &Matrix) -> Result<Option<FieldElement>> {
    if a1.spec() != a2.spec() {
        return Err(Error::FieldMismatch {
            left: a1.spec(),
            right: a2.spec(),
        });
    }
    if !a1.is_square() || a1.rows() != a2.rows() || a1.cols() != a2.cols() {
        return Err(Error::DimensionMismatch(
            "scalar_relation needs two square matrices of equal size".into(),
        ));
    }
    let n = a1.rows();
    if a1.rank() < n || a2.rank() < n {
        return Err(Error::SingularMatrix);
    }
    Ok(a1.mul(&a2.inverse()?)?.as_scalar())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Recovered,
    EmptyKernel,
    SingularConjugator,
    VerificationFailed,
    ValidationFailed,
}

impl Outcome {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Recovered => 0,
            Outcome::EmptyKernel | Outcome::SingularConjugator => 3,
            Outcome::VerificationFailed | Outcome::ValidationFailed => 4,
        }
    }
}

/// Machine-readable outcome of one recovery run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawReport", into = "RawReport")]
pub struct RecoveryReport {
    pub outcome: Outcome,
    pub n: usize,
    pub field: FieldSpec,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    /// Queries consumed by the construction itself.
    pub query_count: u64,
    pub verification_queries: u64,
    pub validation_queries: u64,
    pub verified: bool,
    /// `l` with `A = l B` when a ground-truth conjugator `B` is known.
    pub scalar: Option<FieldElement>,
    pub checks: Option<StructureCheckReport>,
    pub validation: Option<ValidationReport>,
    pub failing: Option<FailedQuery>,
    pub detail: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    outcome: Outcome,
    n: usize,
    field: FieldSpec,
    seed: Option<u64>,
    rng: Option<String>,
    query_count: u64,
    verification_queries: u64,
    validation_queries: u64,
    verified: bool,
    scalar: Option<String>,
    checks: Option<StructureCheckReport>,
    validation: Option<ValidationReport>,
    failing: Option<FailedQuery>,
    detail: Option<String>,
}

impl TryFrom<RawReport> for RecoveryReport {
    type Error = Error;

    fn try_from(r: RawReport) -> Result<Self> {
        let scalar = r
            .scalar
            .map(|s| FieldElement::parse(r.field, &s))
            .transpose()?;
        Ok(RecoveryReport {
            outcome: r.outcome,
            n: r.n,
            field: r.field,
            seed: r.seed,
            rng: r.rng,
            query_count: r.query_count,
            verification_queries: r.verification_queries,
            validation_queries: r.validation_queries,
            verified: r.verified,
            scalar,
            checks: r.checks,
            validation: r.validation,
            failing: r.failing,
            detail: r.detail,
        })
    }
}

impl From<RecoveryReport> for RawReport {
    fn from(r: RecoveryReport) -> Self {
        RawReport {
            outcome: r.outcome,
            n: r.n,
            field: r.field,
            seed: r.seed,
            rng: r.rng,
            query_count: r.query_count,
            verification_queries: r.verification_queries,
            validation_queries: r.validation_queries,
            verified: r.verified,
            scalar: r.scalar.map(|s| s.to_string()),
            checks: r.checks,
            validation: r.validation,
            failing: r.failing,
            detail: r.detail,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RecoverOptions<'a> {
    /// Run [`verify_conjugation`] after the construction.
    pub verify: bool,
    /// Run [`AutomorphismOracle::validate`] first (`n^2` queries, `O(n^7)`
    /// scalar work). Ignored for generator pairs, which cannot be validated.
    pub validate: bool,
    /// Known conjugator, used to report the scalar relating it to `A`.
    pub ground_truth: Option<&'a Matrix>,
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub generators: Option<(Matrix, Matrix)>,
    pub witness: Option<ConjugationWitness>,
    pub report: RecoveryReport,
}

/// End-to-end run: optional validation, two generator queries, construction,
/// identity checks, optional verification. Failures of the construction are
/// recorded in the report's outcome; only malformed input is an `Err`.
pub fn recover(phi: &AutomorphismOracle, opts: RecoverOptions<'_>) -> Result<Recovery> {
    let mut report = RecoveryReport {
        outcome: Outcome::Recovered,
        n: phi.n(),
        field: phi.spec(),
        seed: None,
        rng: None,
        query_count: 0,
        verification_queries: 0,
        validation_queries: 0,
        verified: false,
        scalar: None,
        checks: None,
        validation: None,
        failing: None,
        detail: None,
    };

    if opts.validate && !matches!(phi.backing(), Backing::GeneratorPair { .. }) {
        let before = phi.query_count();
        let validation = phi.validate()?;
        report.validation_queries = phi.query_count() - before;
        let ok = validation.is_automorphism();
        if let (false, Some(v)) = (ok, &validation.first_violation) {
            report.detail = Some(v.to_string());
        }
        report.validation = Some(validation);
        if !ok {
            report.outcome = Outcome::ValidationFailed;
            return Ok(Recovery {
                generators: None,
                witness: None,
                report,
            });
        }
    }

    let before = phi.query_count();
    let (h, g) = phi.query_generators()?;
    report.query_count = phi.query_count() - before;

    let witness = match build_conjugator(&h, &g, phi.n()) {
        Ok(w) => w,
        Err(e @ (Error::EmptyKernel | Error::SingularConjugator)) => {
            report.outcome = if e == Error::EmptyKernel {
                Outcome::EmptyKernel
            } else {
                Outcome::SingularConjugator
            };
            report.detail = Some(e.to_string());
            return Ok(Recovery {
                generators: Some((h, g)),
                witness: None,
                report,
            });
        }
        Err(e) => return Err(e),
    };

    report.checks = Some(check_structure_identities(&h, &g, &witness)?);

    if opts.verify {
        let v = verify_conjugation(phi, &witness)?;
        report.verification_queries = v.queries;
        report.verified = true;
        if !v.success {
            report.outcome = Outcome::VerificationFailed;
            report.detail = v.failing.as_ref().map(|f| match f {
                FailedQuery::Unit { i, j } => {
                    format!("A E_{{{i},{j}}} A^-1 != phi(E_{{{i},{j}}})")
                }
                FailedQuery::Shift => "A S A^-1 != phi(S)".to_string(),
            });
            report.failing = v.failing;
        }
    }

    if let Some(b) = opts.ground_truth {
        report.scalar = scalar_relation(witness.conjugator(), b)?;
    }

    Ok(Recovery {
        generators: Some((h, g)),
        witness: Some(witness),
        report,
    })
}
