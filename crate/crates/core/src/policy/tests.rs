use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::genbench::synth;
use crate::reasoner::{oracle_complies, DEFAULT_MAX_UNIVERSE};
use crate::samples::{befit_taxonomy, location_gathering, profiling_consent};
use crate::vocab::builtin_special;

#[test]
fn profiling_consent_validates() {
    let t = befit_taxonomy();
    profiling_consent(&t).validate(&t).unwrap();
    validate(&GeneralPolicy::single(profiling_consent(&t)), &t).unwrap();
}

#[test]
fn undeclared_class_is_rejected() {
    let t = builtin_special();
    let mut p = crate::samples::top_basic();
    p.processing = ClassExpr::Atom(ClassId::new("http://example.com/ns#Profiling"));
    assert!(matches!(p.validate(&t), Err(PolicyError::UnknownClass(_))));
}

#[test]
fn reversed_interval_is_rejected() {
    let t = builtin_special();
    let mut p = crate::samples::top_basic();
    p.storage.duration = DurationExpr::between(10, 5);
    assert_eq!(p.validate(&t), Err(PolicyError::BadInterval { min: 10, max: 5 }));
}

#[test]
fn wrong_category_is_rejected() {
    let t = builtin_special();
    let mut p = crate::samples::top_basic();
    p.purpose = ClassExpr::Atom(t.resolve("svd:Health").unwrap());
    assert!(matches!(p.validate(&t), Err(PolicyError::CategoryMismatch { attribute: "purpose", .. })));
    let mut p = crate::samples::top_basic();
    p.storage.duration = DurationExpr::Class(t.resolve("svl:EU").unwrap());
    assert!(matches!(p.validate(&t), Err(PolicyError::CategoryMismatch { attribute: "storage.duration", .. })));
}

#[test]
fn short_operator_is_rejected() {
    let t = builtin_special();
    let mut p = crate::samples::top_basic();
    p.data = ClassExpr::Union(vec![ClassExpr::Top(Category::Data)]);
    assert_eq!(p.validate(&t), Err(PolicyError::EmptyUnion(Attribute::Data)));
}

#[test]
fn empty_general_policy_is_rejected() {
    assert_eq!(GeneralPolicy::new(vec![]), Err(PolicyError::EmptyPolicy));
}

#[test]
fn dnf_splits_data_union() {
    let t = befit_taxonomy();
    let c = profiling_consent(&t);
    let out = dnf(&c);
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].data, ClassExpr::Atom(t.resolve("ex:HeartRate").unwrap()));
    assert_eq!(out[1].data, ClassExpr::Atom(t.resolve("svd:Location").unwrap()));
    for branch in &out {
        assert_eq!(branch.processing, c.processing);
        assert_eq!(branch.purpose, c.purpose);
        assert_eq!(branch.recipient, c.recipient);
        assert_eq!(branch.storage, c.storage);
        assert!(!branch.has_union());
    }
}

#[test]
fn dnf_of_union_free_content_is_identity() {
    let t = befit_taxonomy();
    let c = location_gathering(&t);
    assert_eq!(dnf(&c), vec![c]);
}

/// Two 2-way unions give four branches, and the branches together denote
/// exactly what the content denotes.
#[test]
fn dnf_four_branches_preserve_authorisations() {
    let t = befit_taxonomy();
    let mut c = location_gathering(&t);
    c.data = ClassExpr::Union(vec![ClassExpr::Atom(t.resolve("svd:Location").unwrap()), ClassExpr::Atom(t.resolve("ex:HeartRate").unwrap())]);
    c.purpose = ClassExpr::Union(vec![ClassExpr::Atom(t.resolve("svpu:Health").unwrap()), ClassExpr::Atom(t.resolve("svpu:Marketing").unwrap())]);
    let branches = dnf(&c);
    assert_eq!(branches.len(), 4);
    assert_same_authorisations(&c, &branches, &t);
}

/// `c` and the union of `branches` include each other.
fn assert_same_authorisations(c: &LogContent, branches: &[LogContent], t: &Taxonomy) {
    let union = GeneralPolicy::new(branches.to_vec()).unwrap();
    assert!(oracle_complies(c, &union, t, DEFAULT_MAX_UNIVERSE).unwrap());
    for b in branches {
        assert!(oracle_complies(b, &GeneralPolicy::single(c.clone()), t, DEFAULT_MAX_UNIVERSE).unwrap());
    }
}

fn union_branches(e: &ClassExpr) -> usize {
    match e {
        ClassExpr::Union(xs) => xs.iter().map(union_branches).sum(),
        ClassExpr::Intersection(xs) => xs.iter().map(union_branches).product(),
        _ => 1,
    }
}

#[test]
fn normalized_rewrites_top_and_flattens() {
    let t = builtin_special();
    let a = ClassExpr::Atom(t.resolve("svd:Health").unwrap());
    let b = ClassExpr::Atom(t.resolve("svd:Location").unwrap());
    let nested = ClassExpr::Union(vec![b.clone(), ClassExpr::Union(vec![a.clone(), b.clone()])]);
    assert_eq!(nested.normalized(), ClassExpr::Union(vec![a.clone(), b.clone()]));
    assert_eq!(ClassExpr::Top(Category::Data).normalized(), ClassExpr::Atom(Category::Data.root()));
    assert_eq!(ClassExpr::Intersection(vec![a.clone(), a.clone()]).normalized(), a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dnf_length_is_product_of_branch_counts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 20);
        let c = synth::basic(&mut rng, &t, 2);
        let expected: usize = Attribute::ALL.iter().map(|&a| union_branches(c.attr(a))).product();
        prop_assert_eq!(dnf(&c).len(), expected);
    }

    #[test]
    fn dnf_preserves_authorisations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 16);
        let c = synth::basic(&mut rng, &t, 2);
        assert_same_authorisations(&c, &dnf(&c), &t);
    }

    #[test]
    fn random_policies_validate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 30);
        let p = synth::general(&mut rng, &t, 4, 3);
        prop_assert!(p.validate(&t).is_ok());
    }
}
