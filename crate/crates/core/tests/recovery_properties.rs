use proptest::prelude::*;
use skolem::fuzz::{random_invertible, random_matrix, rng_for};
use skolem::skolem_noether::{
    build_conjugator, projected_idempotent, recover, RecoverOptions, Recovery,
};
use skolem::{AutomorphismOracle, ColumnVector, FieldElement, FieldSpec, Matrix, Outcome};

fn spec_strategy() -> impl Strategy<Value = FieldSpec> {
    let mut specs = vec![FieldSpec::Rationals];
    specs.extend([2, 3, 5, 7, 101].map(|p| FieldSpec::prime(p).unwrap()));
    prop::sample::select(specs)
}

fn recover_conjugation(b: &Matrix) -> Recovery {
    let phi = AutomorphismOracle::conjugation_by(b.clone()).unwrap();
    recover(
        &phi,
        RecoverOptions {
            verify: true,
            validate: false,
            ground_truth: Some(b),
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn conjugators_are_recovered_up_to_scalar(spec in spec_strategy(), n in 1usize..=8, seed: u64) {
        let b = random_invertible(spec, n, &mut rng_for(seed), 5).unwrap();
        let rec = recover_conjugation(&b);
        let report = &rec.report;
        prop_assert_eq!(report.outcome, Outcome::Recovered);
        prop_assert_eq!(report.query_count, 2);
        prop_assert!(report.verified);
        prop_assert!(report.checks.as_ref().unwrap().all_ok());
        let l = report.scalar.clone().expect("A is a scalar multiple of B");
        prop_assert!(!l.is_zero());
        let a = rec.witness.unwrap();
        prop_assert_eq!(a.conjugator(), &b.scale(&l).unwrap());
    }

    #[test]
    fn witness_conjugates_dense_inputs(spec in spec_strategy(), n in 1usize..=6, seed: u64) {
        let mut rng = rng_for(seed);
        let b = random_invertible(spec, n, &mut rng, 5).unwrap();
        let phi = AutomorphismOracle::conjugation_by(b).unwrap();
        let rec = recover(&phi, RecoverOptions::default()).unwrap();
        let w = rec.witness.unwrap();
        let x = random_matrix(spec, n, &mut rng, 9);
        prop_assert_eq!(w.conjugate(&x).unwrap(), phi.apply(&x).unwrap());
    }

    #[test]
    fn kernel_vector_is_a_fixed_point(spec in spec_strategy(), n in 1usize..=8, seed: u64) {
        let b = random_invertible(spec, n, &mut rng_for(seed), 5).unwrap();
        let rec = recover_conjugation(&b);
        let (h, g) = rec.generators.unwrap();
        let p = projected_idempotent(&h, &g, n).unwrap();
        let a = rec.witness.unwrap().kernel_vector().clone();
        prop_assert!(!a.is_zero());
        prop_assert_eq!(p.mul_vec(&a).unwrap(), a);
        prop_assert_eq!(p.mul(&p).unwrap(), p.clone());
        prop_assert_eq!(Matrix::identity(spec, n).sub(&p).unwrap().rank(), n - 1);
    }

    /// Every `n - 1` columns of `A` stay independent.
    #[test]
    fn dropping_a_column_leaves_rank_n_minus_1(spec in spec_strategy(), n in 2usize..=7, seed: u64) {
        let b = random_invertible(spec, n, &mut rng_for(seed), 5).unwrap();
        let a = recover_conjugation(&b).witness.unwrap().conjugator().clone();
        for drop in 0..n {
            let cols: Vec<ColumnVector> = (0..n).filter(|&c| c != drop).map(|c| a.column(c)).collect();
            prop_assert_eq!(Matrix::from_columns(&cols).unwrap().rank(), n - 1);
        }
    }

    /// The construction reads only `H` and `G`, so every backing of the same
    /// automorphism yields the same conjugator.
    #[test]
    fn backings_agree(spec in spec_strategy(), n in 1usize..=6, seed: u64) {
        let b = random_invertible(spec, n, &mut rng_for(seed), 5).unwrap();
        let conj = AutomorphismOracle::conjugation_by(b).unwrap();
        let table = conj.to_full_table().unwrap();
        let (h, g) = conj.query_generators().unwrap();
        let pair = AutomorphismOracle::generator_pair(h.clone(), g.clone()).unwrap();
        let expected = build_conjugator(&h, &g, n).unwrap();
        for phi in [&conj, &table, &pair] {
            let rec = recover(phi, RecoverOptions { verify: true, ..Default::default() }).unwrap();
            prop_assert!(rec.report.verified);
            let w = rec.witness.unwrap();
            prop_assert_eq!(w.conjugator(), expected.conjugator());
        }
    }

    #[test]
    fn validated_recovery_succeeds(spec in spec_strategy(), n in 1usize..=4, seed: u64) {
        let b = random_invertible(spec, n, &mut rng_for(seed), 5).unwrap();
        let phi = AutomorphismOracle::conjugation_by(b).unwrap();
        let rec = recover(&phi, RecoverOptions { verify: true, validate: true, ground_truth: None }).unwrap();
        prop_assert_eq!(rec.report.outcome, Outcome::Recovered);
        prop_assert_eq!(rec.report.validation_queries, (n * n) as u64);
        prop_assert_eq!(rec.report.verification_queries, (n * n) as u64);
        prop_assert_eq!(rec.report.query_count, 2);
    }
}

#[test]
fn one_by_one_recovers_the_identity() {
    let q = FieldSpec::Rationals;
    for v in [1, -1, 2, 7, -13] {
        let b = Matrix::from_i64_rows(q, &[&[v]]).unwrap();
        let rec = recover_conjugation(&b);
        assert_eq!(rec.report.outcome, Outcome::Recovered);
        assert!(rec.witness.unwrap().conjugator().is_identity());
        let expected = FieldElement::one(q).checked_div(&FieldElement::from_i64(q, v)).unwrap();
        assert_eq!(rec.report.scalar, Some(expected));
    }
    for p in [2, 3, 5, 7, 101] {
        let spec = FieldSpec::prime(p).unwrap();
        for v in 1..p.min(20) as i64 {
            let b = Matrix::from_i64_rows(spec, &[&[v]]).unwrap();
            let rec = recover_conjugation(&b);
            assert!(rec.report.verified);
            assert!(rec.witness.unwrap().conjugator().is_identity());
        }
    }
}

#[test]
fn identity_automorphism_gives_a_scalar_conjugator() {
    for spec in [FieldSpec::Rationals, FieldSpec::prime(3).unwrap()] {
        for n in 1..=8 {
            let b = Matrix::identity(spec, n);
            let rec = recover_conjugation(&b);
            assert!(rec.report.verified);
            assert!(rec.witness.unwrap().conjugator().as_scalar().is_some());
        }
    }
}
