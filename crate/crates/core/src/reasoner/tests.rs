use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::genbench::synth;
use crate::policy::StorageExpr;
use crate::samples::{befit_taxonomy, location_collection_consent, location_gathering, personal_vs_anonymised, top_basic};
use crate::vocab::{builtin_special, ClassId, TaxonomyBuilder};

fn atom(t: &Taxonomy, name: &str) -> ClassExpr {
    ClassExpr::Atom(t.resolve(name).unwrap())
}

/// Set denoted by `e`, computed from child-edge walks only.
fn extension(e: &ClassExpr, t: &Taxonomy) -> BTreeSet<ClassId> {
    match e {
        ClassExpr::Atom(id) => t.extension_of(id).unwrap(),
        ClassExpr::Top(c) => t.extension_of(&c.root()).unwrap(),
        ClassExpr::Null(_) => BTreeSet::new(),
        ClassExpr::Union(xs) => xs.iter().flat_map(|x| extension(x, t)).collect(),
        ClassExpr::Intersection(xs) => {
            let mut acc = extension(&xs[0], t);
            for x in &xs[1..] {
                let other = extension(x, t);
                acc.retain(|c| other.contains(c));
            }
            acc
        }
    }
}

#[test]
fn sensor_gathering_is_a_collection() {
    let t = befit_taxonomy();
    assert!(subsumes_expr(&atom(&t, "befit:SensorGathering"), &atom(&t, "svpr:Collect"), &t).unwrap());
    assert!(!subsumes_expr(&atom(&t, "svpr:Collect"), &atom(&t, "befit:SensorGathering"), &t).unwrap());
}

#[test]
fn cross_category_comparison_fails() {
    let t = builtin_special();
    let err = subsumes_expr(&atom(&t, "svpu:Health"), &atom(&t, "svpr:Collect"), &t).unwrap_err();
    assert!(matches!(err, ReasonerError::CategoryMismatch { .. }));
}

#[test]
fn null_and_top_bounds() {
    let t = builtin_special();
    let health = atom(&t, "svd:Health");
    assert!(subsumes_expr(&ClassExpr::Null(Category::Data), &health, &t).unwrap());
    assert!(subsumes_expr(&health, &ClassExpr::Top(Category::Data), &t).unwrap());
    assert!(!subsumes_expr(&health, &ClassExpr::Null(Category::Data), &t).unwrap());
}

/// Under multiple inheritance an intersection of two atoms can sit below a
/// third atom without either conjunct doing so.
#[test]
fn intersection_under_shared_subclass() {
    let mut b = TaxonomyBuilder::roots_only();
    let c = |s: &str| ClassId::new(format!("http://example.org/m#{s}"));
    b.subclass(c("A"), Category::Data.root());
    b.subclass(c("B"), Category::Data.root());
    b.subclass(c("D"), Category::Data.root());
    b.subclass(c("X"), c("A")).subclass(c("X"), c("B")).subclass(c("X"), c("D"));
    let t = b.build().unwrap();
    let ab = ClassExpr::Intersection(vec![ClassExpr::Atom(c("A")), ClassExpr::Atom(c("B"))]);
    assert!(subsumes_expr(&ab, &ClassExpr::Atom(c("D")), &t).unwrap());
    assert!(!subsumes_expr(&ClassExpr::Atom(c("A")), &ClassExpr::Atom(c("D")), &t).unwrap());
    // Disjoint conjuncts meet in the empty set.
    let ad = ClassExpr::Intersection(vec![ClassExpr::Atom(c("A")), ClassExpr::Atom(Category::Data.root())]);
    assert!(subsumes_expr(&ad, &ClassExpr::Atom(c("A")), &t).unwrap());
}

#[test]
fn gathering_complies_with_collection_consent() {
    let t = befit_taxonomy();
    let c = location_gathering(&t);
    let p = location_collection_consent(&t);
    assert!(basic_subsumed(&c, &p, &t).unwrap());
    assert!(basic_subsumed(&c, &c, &t).unwrap());
    let consent = GeneralPolicy::single(p);
    assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::matched(0));
    assert!(oracle_complies(&c, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap());
}

#[test]
fn marketing_purpose_is_not_covered() {
    let t = befit_taxonomy();
    let mut c = location_gathering(&t);
    c.purpose = atom(&t, "svpu:Marketing");
    let p = location_collection_consent(&t);
    assert!(!basic_subsumed(&c, &p, &t).unwrap());
    let consent = GeneralPolicy::single(p);
    assert!(!oracle_complies(&c, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap());
    assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::rejected(Reason::NoMatch));
}

#[test]
fn duration_examples() {
    let t = builtin_special();
    assert!(duration_contained(&DurationExpr::days(30), &DurationExpr::at_least(0), &t));
    assert!(duration_contained(&DurationExpr::between(3, 9), &DurationExpr::between(3, 9), &t));
    assert!(!duration_contained(&DurationExpr::at_least(0), &DurationExpr::between(0, 365), &t));
    let legal = DurationExpr::Class(t.resolve("svdu:LegalRequirement").unwrap());
    let any = DurationExpr::Class(t.resolve("spl:AnyDuration").unwrap());
    assert!(duration_contained(&legal, &any, &t));
    assert!(!duration_contained(&any, &legal, &t));
    assert!(!duration_contained(&legal, &DurationExpr::ANY_DAYS, &t));
}

#[test]
fn top_policy_authorises_everything() {
    let t = befit_taxonomy();
    let consent = GeneralPolicy::single(top_basic());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let mut c = synth::basic(&mut rng, &t, 2);
        if matches!(c.storage.duration, DurationExpr::Class(_)) {
            c.storage.duration = DurationExpr::ANY_DAYS;
        }
        assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::matched(0));
    }
}

#[test]
fn null_content_is_vacuously_compliant() {
    let t = befit_taxonomy();
    let mut c = location_gathering(&t);
    c.data = ClassExpr::Null(Category::Data);
    let mut strict = location_collection_consent(&t);
    strict.purpose = atom(&t, "svpu:Gaming");
    let consent = GeneralPolicy::single(strict);
    assert!(oracle_complies(&c, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap());
    assert!(complies(&c, &consent, &t).unwrap().compliant);
}

#[test]
fn null_policy_attribute_admits_only_null_content() {
    let t = builtin_special();
    let consent = personal_vs_anonymised(&t);
    let mut c = BasicPolicy {
        data: atom(&t, "svd:Profile"),
        processing: atom(&t, "svpr:Analyze"),
        purpose: atom(&t, "svpu:Education"),
        recipient: ClassExpr::Null(Category::Recipient),
        storage: StorageExpr { location: ClassExpr::Null(Category::Location), duration: DurationExpr::ANY_DAYS },
    };
    assert!(complies(&c, &consent, &t).unwrap().compliant);
    c.recipient = atom(&t, "svr:Ours");
    c.storage.location = atom(&t, "svl:EU");
    assert_eq!(complies(&c, &consent, &t).unwrap().reason, Reason::NoMatch);
    c.data = atom(&t, "svd:Anonymized");
    assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::matched(1));
}

/// Two bounded consents that together cover a longer interval.
#[test]
fn adjacent_intervals_cover_jointly() {
    let t = befit_taxonomy();
    let mut c = location_gathering(&t);
    c.storage.duration = DurationExpr::between(0, 10);
    let mut early = location_collection_consent(&t);
    early.storage.duration = DurationExpr::between(6, 10);
    let mut late = early.clone();
    late.storage.duration = DurationExpr::between(0, 5);
    let consent = GeneralPolicy::new(vec![early, late]).unwrap();
    assert!(oracle_complies(&c, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap());
    assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::matched(0));
    c.storage.duration = DurationExpr::between(0, 11);
    assert!(!complies(&c, &consent, &t).unwrap().compliant);
}

#[test]
fn matched_basic_prefers_single_cover() {
    let t = befit_taxonomy();
    let c = location_gathering(&t);
    let mut other = location_collection_consent(&t);
    other.purpose = atom(&t, "svpu:Marketing");
    let consent = GeneralPolicy::new(vec![other, location_collection_consent(&t), top_basic()]).unwrap();
    assert_eq!(complies(&c, &consent, &t).unwrap(), ComplianceResult::matched(1));
}

#[test]
fn oracle_guard_trips() {
    let t = befit_taxonomy();
    let c = top_basic();
    let err = oracle_complies(&c, &GeneralPolicy::single(top_basic()), &t, 10).unwrap_err();
    assert!(matches!(err, ReasonerError::UniverseTooLarge { limit: 10, .. }));
}

#[test]
fn reason_names_round_trip() {
    for r in [Reason::Match, Reason::NoMatch, Reason::NoConsent, Reason::Revoked] {
        assert_eq!(Reason::parse(r.as_str()), Some(r));
    }
    assert_eq!(Reason::parse("match"), None);
}

#[test]
fn random_expression_pairs_agree_with_extensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut t = synth::taxonomy(&mut rng, 40);
    for i in 0..10_000 {
        if i % 100 == 0 {
            t = synth::taxonomy(&mut rng, 40);
        }
        let cat = Category::ALL[rng.random_range(0..6)];
        let c = synth::expr(&mut rng, &t, cat, 3);
        let d = synth::expr(&mut rng, &t, cat, 3);
        let expected = extension(&c, &t).is_subset(&extension(&d, &t));
        assert_eq!(subsumes_expr(&c, &d, &t).unwrap(), expected, "{c:?} ⊑ {d:?}");
    }
}

#[test]
fn random_policies_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    let mut t = synth::taxonomy(&mut rng, 24);
    let (mut agree_true, mut checked) = (0, 0);
    for i in 0..10_000 {
        if i % 100 == 0 {
            t = synth::taxonomy(&mut rng, 24);
        }
        let consent = synth::general(&mut rng, &t, 3, 1);
        // Bias towards compliant content so both outcomes are exercised.
        let c = if rng.random_bool(0.5) {
            let j = rng.random_range(0..consent.basics().len());
            synth::specialise(&mut rng, &t, &consent.basics()[j])
        } else {
            synth::basic(&mut rng, &t, 1)
        };
        let result = complies(&c, &consent, &t).unwrap();
        let expected = oracle_complies(&c, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap();
        assert_eq!(result.compliant, expected, "{c:?}\n{consent:?}");
        checked += 1;
        agree_true += expected as usize;
    }
    assert_eq!(checked, 10_000);
    assert!(agree_true > 1_000, "only {agree_true} compliant cases");
}

fn strategy_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn subsumption_is_reflexive(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 30);
        let cat = Category::ALL[rng.random_range(0..6)];
        let e = synth::expr(&mut rng, &t, cat, 3);
        prop_assert!(subsumes_expr(&e, &e, &t).unwrap());
    }

    #[test]
    fn union_free_content_complies_with_itself(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 30);
        let c = dnf(&synth::basic(&mut rng, &t, 2)).swap_remove(0);
        prop_assert_eq!(complies(&c, &GeneralPolicy::single(c.clone()), &t).unwrap(), ComplianceResult::matched(0));
    }

    #[test]
    fn adding_a_basic_never_revokes(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 30);
        let mut consent = synth::general(&mut rng, &t, 3, 1);
        let c = synth::specialise(&mut rng, &t, &consent.basics()[0]);
        let before = complies(&c, &consent, &t).unwrap();
        prop_assert!(before.compliant);
        consent.push(synth::basic(&mut rng, &t, 1));
        prop_assert!(complies(&c, &consent, &t).unwrap().compliant);
    }

    #[test]
    fn specialising_keeps_compliance(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 30);
        let consent = synth::general(&mut rng, &t, 3, 1);
        let c = synth::basic(&mut rng, &t, 1);
        if complies(&c, &consent, &t).unwrap().compliant {
            let narrower = synth::specialise(&mut rng, &t, &c);
            prop_assert!(complies(&narrower, &consent, &t).unwrap().compliant);
        }
    }

    #[test]
    fn dnf_branches_decide_jointly(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 24);
        let consent = synth::general(&mut rng, &t, 3, 1);
        let c = synth::basic(&mut rng, &t, 2);
        let whole = complies(&c, &consent, &t).unwrap().compliant;
        let parts = dnf(&c).iter().all(|b| complies(b, &consent, &t).unwrap().compliant);
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn result_fields_are_consistent(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 24);
        let consent = synth::general(&mut rng, &t, 4, 1);
        let c = synth::basic(&mut rng, &t, 1);
        let r = complies(&c, &consent, &t).unwrap();
        prop_assert_eq!(r.compliant, r.reason == Reason::Match);
        prop_assert_eq!(r.compliant, r.matched_basic.is_some());
        if let Some(j) = r.matched_basic {
            prop_assert!(j < consent.basics().len());
        }
    }

    #[test]
    fn matched_basic_alone_authorises_union_free_content(seed in strategy_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = synth::taxonomy(&mut rng, 24);
        let consent = synth::general(&mut rng, &t, 4, 0);
        let j = rng.random_range(0..consent.basics().len());
        let mut c = synth::specialise(&mut rng, &t, &consent.basics()[j]);
        if let DurationExpr::Interval { .. } = c.storage.duration {
            c.storage.duration = consent.basics()[j].storage.duration.clone();
        }
        let r = complies(&c, &consent, &t).unwrap();
        let m = r.matched_basic.unwrap();
        prop_assert!(m <= j);
        prop_assert!(basic_subsumed(&c, &consent.basics()[m], &t).unwrap());
    }
}
