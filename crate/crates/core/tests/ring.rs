mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringmice::dataset::{RowSel, RowSource};
use ringmice::ring::{aggregate, aggregate_chunked, to_dense, AttrKind, AttrSpace, Triple, Value, CHUNK_ROWS};

const TOL: f64 = 1e-9;

fn space() -> AttrSpace {
    AttrSpace::new([
        ("x".to_string(), AttrKind::Continuous),
        ("c".to_string(), AttrKind::Categorical),
        ("y".to_string(), AttrKind::Continuous),
        ("d".to_string(), AttrKind::Categorical),
    ])
}

/// Rows over `space()` with positive continuous values, so sums never
/// cancel and relative comparisons stay meaningful.
fn rows_strategy() -> impl Strategy<Value = Vec<Vec<Value>>> {
    prop::collection::vec(
        (0.5f64..10.0, 0u32..4, 0.5f64..10.0, 0u32..3)
            .prop_map(|(x, c, y, d)| vec![Value::Num(x), Value::Cat(c), Value::Num(y), Value::Cat(d)]),
        0..12,
    )
}

fn agg(rows: &[Vec<Value>]) -> Triple {
    aggregate(rows.iter(), &space()).unwrap()
}

/// Aggregate of the rows projected onto `attrs`, embedded back into the
/// four-attribute space.
fn on(rows: &[Vec<Value>], attrs: &[usize]) -> Triple {
    let full = space();
    let sub = AttrSpace::new(attrs.iter().map(|&a| (full.name(a).to_string(), full.kind(a))));
    let projected: Vec<Vec<Value>> = rows.iter().map(|r| attrs.iter().map(|&a| r[a]).collect()).collect();
    aggregate(projected.iter(), &sub).unwrap().embed(attrs, 4).unwrap()
}

fn close(a: &Triple, b: &Triple) -> Result<(), TestCaseError> {
    let d = a.max_rel_diff(b);
    prop_assert!(d <= TOL, "relative difference {d}");
    Ok(())
}

proptest! {
    #[test]
    fn addition_is_commutative_and_associative(a in rows_strategy(), b in rows_strategy(), c in rows_strategy()) {
        let (a, b, c) = (agg(&a), agg(&b), agg(&c));
        close(&a.add(&b).unwrap(), &b.add(&a).unwrap())?;
        close(&a.add(&b).unwrap().add(&c).unwrap(), &a.add(&b.add(&c).unwrap()).unwrap())?;
        close(&a.add(&Triple::zero(4)).unwrap(), &a)?;
    }

    #[test]
    fn subtraction_undoes_addition(a in rows_strategy(), b in rows_strategy()) {
        let (a, b) = (agg(&a), agg(&b));
        close(&a.add(&b).unwrap().sub(&b).unwrap(), &a)?;
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn multiplication_laws(a in rows_strategy(), b in rows_strategy(), c in rows_strategy()) {
        // Products are defined between aggregates over disjoint attributes.
        let (x, cd, ycd) = (on(&a, &[0]), on(&b, &[1]), on(&c, &[2, 3]));
        close(&x.mul(&cd).unwrap(), &cd.mul(&x).unwrap())?;
        close(&x.mul(&cd).unwrap().mul(&ycd).unwrap(), &x.mul(&cd.mul(&ycd).unwrap()).unwrap())?;
        let (left, r1, r2) = (on(&a, &[0, 1]), on(&b, &[2, 3]), on(&c, &[2, 3]));
        close(
            &left.mul(&r1.add(&r2).unwrap()).unwrap(),
            &left.mul(&r1).unwrap().add(&left.mul(&r2).unwrap()).unwrap(),
        )?;
        close(&left.mul(&Triple::one(4)).unwrap(), &left)?;
        prop_assert!(left.mul(&Triple::zero(4)).unwrap().is_zero());
        prop_assert!(left.mul(&left).is_err() || a.is_empty());
    }

    #[test]
    fn aggregation_is_a_homomorphism(a in rows_strategy(), b in rows_strategy()) {
        let joined: Vec<Vec<Value>> = a.iter().chain(&b).cloned().collect();
        close(&agg(&joined), &agg(&a).add(&agg(&b)).unwrap())?;
    }

    #[test]
    fn row_lift_is_the_product_of_unary_lifts(rows in rows_strategy()) {
        for row in &rows {
            let opt: Vec<Option<Value>> = row.iter().copied().map(Some).collect();
            let lifted = Triple::lift(&opt, &space()).unwrap();
            let mut prod = Triple::one(4);
            for (i, v) in row.iter().enumerate() {
                let unary = match *v {
                    Value::Num(x) => Triple::lift_con(x, i, 4),
                    Value::Cat(c) => Triple::lift_cat(c, i, 4),
                };
                prod = prod.mul(&unary).unwrap();
            }
            close(&lifted, &prod)?;
            close(&lifted, &agg(std::slice::from_ref(row)))?;
        }
    }

    #[test]
    fn product_of_disjoint_embeddings_is_the_joint_aggregate(a in rows_strategy(), b in rows_strategy()) {
        // The aggregate of the cross product A × B is agg(A) * agg(B) once
        // both sides are embedded into the joint space.
        let left = AttrSpace::new([("x".to_string(), AttrKind::Continuous), ("c".to_string(), AttrKind::Categorical)]);
        let right = AttrSpace::new([("y".to_string(), AttrKind::Continuous), ("d".to_string(), AttrKind::Categorical)]);
        let la: Vec<Vec<Value>> = a.iter().map(|r| r[..2].to_vec()).collect();
        let rb: Vec<Vec<Value>> = b.iter().map(|r| r[2..].to_vec()).collect();
        let ta = aggregate(la.iter(), &left).unwrap().embed(&[0, 1], 4).unwrap();
        let tb = aggregate(rb.iter(), &right).unwrap().embed(&[2, 3], 4).unwrap();
        let cross: Vec<Vec<Value>> = la
            .iter()
            .flat_map(|l| rb.iter().map(move |r| l.iter().chain(r).copied().collect()))
            .collect();
        close(&ta.mul(&tb).unwrap(), &agg(&cross))?;
    }

    #[test]
    fn serialization_round_trips(a in rows_strategy()) {
        let t = agg(&a);
        prop_assert_eq!(Triple::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    #[test]
    fn dense_expansion_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kinds = common::random_kinds(&mut rng, 5);
        let rows = common::random_rows(&mut rng, 40, &kinds, 4);
        let table = common::table_of(&rows, &kinds);
        let t = table.aggregate(RowSel::All).unwrap();
        let err = common::dense_vs_gram(&to_dense(&t, table.space()), &rows, &kinds);
        prop_assert!(err <= TOL, "error {err}");
    }
}

#[test]
fn chunked_aggregation_equals_sequential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kinds = [AttrKind::Continuous, AttrKind::Categorical, AttrKind::Continuous];
    let rows = common::random_rows(&mut rng, 2 * CHUNK_ROWS + 77, &kinds, 5);
    let space = AttrSpace::new(kinds.iter().enumerate().map(|(i, &k)| (format!("a{i}"), k)));
    let seq = aggregate(rows.iter(), &space).unwrap();
    let chunked = aggregate_chunked(&space, rows.len(), |range, agg| {
        range.into_iter().try_for_each(|r| agg.push(&rows[r]))
    })
    .unwrap()
    .finish();
    assert!(seq.max_rel_diff(&chunked) <= 1e-12);
    // Same chunking on repeated runs gives identical bits.
    let again = aggregate_chunked(&space, rows.len(), |range, agg| {
        range.into_iter().try_for_each(|r| agg.push(&rows[r]))
    })
    .unwrap()
    .finish();
    assert_eq!(chunked.to_bytes(), again.to_bytes());
}

#[test]
fn lifting_rejects_absent_and_mistyped_values() {
    let s = space();
    let row = [Some(Value::Num(1.0)), None, Some(Value::Num(2.0)), Some(Value::Cat(0))];
    assert!(Triple::lift(&row, &s).is_err());
    let row = [
        Some(Value::Cat(1)),
        Some(Value::Cat(0)),
        Some(Value::Num(2.0)),
        Some(Value::Cat(0)),
    ];
    assert!(Triple::lift(&row, &s).is_err());
}
