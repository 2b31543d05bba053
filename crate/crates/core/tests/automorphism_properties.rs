use proptest::prelude::*;
use skolem::automorphism::{basis_pairs, Violation};
use skolem::fuzz::{random_element, random_invertible, random_matrix, rng_for};
use skolem::skolem_noether::{verify_conjugation, ConjugationWitness};
use skolem::{AutomorphismOracle, ColumnVector, Error, FieldSpec, Matrix};

fn fields() -> Vec<FieldSpec> {
    let mut out = vec![FieldSpec::Rationals];
    out.extend([2, 3, 7, 101].map(|p| FieldSpec::prime(p).unwrap()));
    out
}

fn spec_strategy() -> impl Strategy<Value = FieldSpec> {
    prop::sample::select(fields())
}

#[test]
fn conjugation_tables_validate_500_per_cell() {
    for n in 1..=6 {
        for (idx, spec) in fields().into_iter().enumerate() {
            let mut rng = rng_for(((n as u64) << 8) | idx as u64);
            for trial in 0..500 {
                let b = random_invertible(spec, n, &mut rng, 5).unwrap();
                let phi = AutomorphismOracle::conjugation_by(b).unwrap();
                let report = phi.validate().unwrap();
                assert!(
                    report.is_automorphism() && report.first_violation.is_none(),
                    "n={n} {spec} trial {trial}: {report:?}"
                );
                assert_eq!(phi.query_count(), (n * n) as u64);
            }
        }
    }
}

#[test]
fn transpose_is_rejected_with_a_real_witness() {
    for n in 2..=5 {
        for spec in fields() {
            let phi = AutomorphismOracle::tabulate(spec, n, Matrix::transpose).unwrap();
            let report = phi.validate().unwrap();
            assert!(report.unital_ok && report.bijective_ok && !report.multiplicative_ok);
            let Some(Violation::Multiplicative { left, right }) = report.first_violation else {
                panic!("expected a multiplicativity witness, got {report:?}");
            };
            let x = Matrix::elementary(spec, n, left.0, left.1).unwrap();
            let y = Matrix::elementary(spec, n, right.0, right.1).unwrap();
            let lhs = phi.apply(&x.mul(&y).unwrap()).unwrap();
            let rhs = phi.apply(&x).unwrap().mul(&phi.apply(&y).unwrap()).unwrap();
            assert_ne!(lhs, rhs);
        }
    }
}

#[test]
fn zero_map_fails_unitality_first() {
    for spec in fields() {
        let phi = AutomorphismOracle::tabulate(spec, 3, |_| Matrix::zeros(spec, 3, 3)).unwrap();
        let report = phi.validate().unwrap();
        assert!(!report.unital_ok && report.multiplicative_ok && !report.bijective_ok);
        assert_eq!(report.first_violation, Some(Violation::Unital));
    }
}

#[test]
fn generator_pairs_cannot_be_validated_or_queried_elsewhere() {
    let q = FieldSpec::Rationals;
    let n = 3;
    let phi = AutomorphismOracle::generator_pair(
        Matrix::elementary(q, n, n, 1).unwrap(),
        Matrix::shift(q, n),
    )
    .unwrap();
    assert!(matches!(phi.validate(), Err(Error::UnsupportedBacking)));
    let e12 = Matrix::elementary(q, n, 1, 2).unwrap();
    assert!(matches!(phi.apply(&e12), Err(Error::UnsupportedQuery(_))));
    assert_eq!(phi.query_count(), 0);
    assert!(phi.apply(&Matrix::identity(q, n)).unwrap().is_identity());
    assert!(phi.apply(&Matrix::zeros(q, n, n)).unwrap().is_zero());
    assert_eq!(phi.query_count(), 2);
}

#[test]
fn query_counts_are_exact() {
    for n in 1..=5 {
        for spec in fields() {
            let mut rng = rng_for(n as u64);
            let b = random_invertible(spec, n, &mut rng, 5).unwrap();
            let phi = AutomorphismOracle::conjugation_by(b.clone()).unwrap();
            phi.query_generators().unwrap();
            assert_eq!(phi.query_count(), 2);
            phi.reset_query_count();
            let table = phi.to_full_table().unwrap();
            assert_eq!(phi.query_count(), 0);
            table.validate().unwrap();
            assert_eq!(table.query_count(), (n * n) as u64);
            let witness = ConjugationWitness::new(b, ColumnVector::unit(spec, n, 1).unwrap()).unwrap();
            let v = verify_conjugation(&phi, &witness).unwrap();
            assert!(v.success);
            assert_eq!(v.queries, (n * n) as u64);
            assert_eq!(phi.query_count(), (n * n) as u64);
        }
    }
}

#[test]
fn concurrent_applies_are_all_counted() {
    let q = FieldSpec::Rationals;
    let b = Matrix::from_i64_rows(q, &[&[1, 2, 0], &[0, 1, 3], &[4, 0, 1]]).unwrap();
    let phi = AutomorphismOracle::conjugation_by(b).unwrap();
    let threads = 8;
    let per_thread = 250;
    std::thread::scope(|s| {
        for t in 0..threads {
            let phi = &phi;
            s.spawn(move || {
                for k in 0..per_thread {
                    let (i, j) = ((t + k) % 3 + 1, k % 3 + 1);
                    phi.apply(&Matrix::elementary(q, 3, i, j).unwrap()).unwrap();
                }
            });
        }
    });
    assert_eq!(phi.query_count(), (threads * per_thread) as u64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn apply_is_linear(spec in spec_strategy(), n in 1usize..6, seed: u64, table: bool) {
        let mut rng = rng_for(seed);
        let phi = if table {
            let images = basis_pairs(n).map(|_| random_matrix(spec, n, &mut rng, 5)).collect();
            AutomorphismOracle::full_table(spec, n, images).unwrap()
        } else {
            AutomorphismOracle::conjugation_by(random_invertible(spec, n, &mut rng, 5).unwrap()).unwrap()
        };
        let x = random_matrix(spec, n, &mut rng, 5);
        let y = random_matrix(spec, n, &mut rng, 5);
        let a = random_element(spec, &mut rng, 5);
        let b = random_element(spec, &mut rng, 5);
        let combo = x.scale(&a).unwrap().add(&y.scale(&b).unwrap()).unwrap();
        let expected = phi.apply(&x).unwrap().scale(&a).unwrap()
            .add(&phi.apply(&y).unwrap().scale(&b).unwrap()).unwrap();
        prop_assert_eq!(phi.apply(&combo).unwrap(), expected);
    }

    /// A table that passes validation is multiplicative on arbitrary dense
    /// inputs, not just on pairs of matrix units.
    #[test]
    fn validated_tables_multiply_on_dense_inputs(spec in spec_strategy(), n in 1usize..6, seed: u64) {
        let mut rng = rng_for(seed);
        let b = random_invertible(spec, n, &mut rng, 5).unwrap();
        let table = AutomorphismOracle::conjugation_by(b).unwrap().to_full_table().unwrap();
        prop_assert!(table.validate().unwrap().is_automorphism());
        for _ in 0..4 {
            let x = random_matrix(spec, n, &mut rng, 7);
            let y = random_matrix(spec, n, &mut rng, 7);
            let lhs = table.apply(&x.mul(&y).unwrap()).unwrap();
            let rhs = table.apply(&x).unwrap().mul(&table.apply(&y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        prop_assert!(table.apply(&Matrix::identity(spec, n)).unwrap().is_identity());
    }

    /// Random tables essentially never validate; when one does, it must
    /// still behave multiplicatively.
    #[test]
    fn random_tables_are_consistent_with_validation(spec in spec_strategy(), n in 1usize..4, seed: u64) {
        let mut rng = rng_for(seed);
        let images = basis_pairs(n).map(|_| random_matrix(spec, n, &mut rng, 3)).collect();
        let phi = AutomorphismOracle::full_table(spec, n, images).unwrap();
        let report = phi.validate().unwrap();
        prop_assert_eq!(report.is_automorphism(), report.first_violation.is_none());
        if report.is_automorphism() {
            let x = random_matrix(spec, n, &mut rng, 7);
            let y = random_matrix(spec, n, &mut rng, 7);
            let lhs = phi.apply(&x.mul(&y).unwrap()).unwrap();
            let rhs = phi.apply(&x).unwrap().mul(&phi.apply(&y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
