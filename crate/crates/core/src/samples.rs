//! The BeFit scenario used throughout the tests, the CLI fixtures and the
//! browser demo.

use crate::policy::{BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy, LogContent, StorageExpr};
use crate::vocab::{load_taxonomy, Category, ClassId, Taxonomy};

pub const BEFIT_NS: &str = "http://www.befit.com/ns#";
pub const EX_NS: &str = "http://example.com/ns#";

/// Extension file declaring the BeFit and fitness-profiling classes.
pub const BEFIT_TAXONOMY: &str = "\
@prefix befit <http://www.befit.com/ns#>
@prefix ex <http://example.com/ns#>

befit:SensorGathering rdfs:subClassOf svpr:Collect .
befit:HealthTracking rdfs:subClassOf svpu:Health .
befit:OfferRecommendation rdfs:subClassOf svd:Location .
befit:MonthlyDataAnalysis rdfs:subClassOf svpr:Analyze .
befit:RecommendationActivity rdfs:subClassOf svpu:Marketing .
befit:MonthlyOffersRecommendation rdfs:subClassOf befit:RecommendationActivity .

ex:HeartRate subClassOf svd:Health
ex:Profiling subClassOf svpr:Analyze
ex:Recommendation subClassOf svpu:Marketing
";

pub fn befit_taxonomy() -> Taxonomy {
    load_taxonomy(BEFIT_TAXONOMY).expect("sample taxonomy is well formed")
}

fn atom(t: &Taxonomy, name: &str) -> ClassExpr {
    ClassExpr::Atom(t.resolve(name).expect("sample name resolves"))
}

fn cls(t: &Taxonomy, name: &str) -> ClassId {
    t.resolve(name).expect("sample name resolves")
}

/// Sue's device position being gathered for health tracking.
pub fn location_gathering(t: &Taxonomy) -> LogContent {
    BasicPolicy {
        data: atom(t, "svd:Location"),
        processing: atom(t, "befit:SensorGathering"),
        purpose: atom(t, "befit:HealthTracking"),
        recipient: atom(t, "svr:Ours"),
        storage: StorageExpr { location: atom(t, "svl:OurServers"), duration: DurationExpr::ANY_DAYS },
    }
}

/// Consent to collect location data for health purposes, kept on our
/// servers and not shared.
pub fn location_collection_consent(t: &Taxonomy) -> BasicPolicy {
    BasicPolicy {
        data: atom(t, "svd:Location"),
        processing: atom(t, "svpr:Collect"),
        purpose: atom(t, "svpu:Health"),
        recipient: atom(t, "svr:Ours"),
        storage: StorageExpr { location: atom(t, "svl:OurServers"), duration: DurationExpr::ANY_DAYS },
    }
}

/// Heart rate and location profiled for recommendations, stored in the EU
/// on our servers with no upper bound, released to any recipient.
pub fn profiling_consent(t: &Taxonomy) -> BasicPolicy {
    BasicPolicy {
        data: ClassExpr::Union(vec![atom(t, "ex:HeartRate"), atom(t, "svd:Location")]),
        processing: atom(t, "ex:Profiling"),
        purpose: atom(t, "ex:Recommendation"),
        recipient: ClassExpr::Atom(cls(t, "spl:AnyRecipient")),
        storage: StorageExpr {
            location: ClassExpr::Intersection(vec![atom(t, "svl:OurServers"), atom(t, "svl:EU")]),
            duration: DurationExpr::at_least(0),
        },
    }
}

/// Personal data only for non-commercial use and never stored or shared,
/// anonymised data freely. Stand-ins: svd:Profile for personal data,
/// svpu:Education for non-commercial purposes, svd:Anonymized for
/// pseudonymised data.
pub fn personal_vs_anonymised(t: &Taxonomy) -> GeneralPolicy {
    let restricted = BasicPolicy {
        data: atom(t, "svd:Profile"),
        processing: ClassExpr::Top(Category::Processing),
        purpose: atom(t, "svpu:Education"),
        recipient: ClassExpr::Null(Category::Recipient),
        storage: StorageExpr { location: ClassExpr::Null(Category::Location), duration: DurationExpr::ANY_DAYS },
    };
    let free = BasicPolicy {
        data: atom(t, "svd:Anonymized"),
        processing: ClassExpr::Top(Category::Processing),
        purpose: ClassExpr::Top(Category::Purpose),
        recipient: ClassExpr::Top(Category::Recipient),
        storage: StorageExpr { location: ClassExpr::Top(Category::Location), duration: DurationExpr::ANY_DAYS },
    };
    GeneralPolicy::new(vec![restricted, free]).expect("non-empty")
}

/// The most permissive basic policy: every attribute at its root.
pub fn top_basic() -> BasicPolicy {
    BasicPolicy {
        data: ClassExpr::Top(Category::Data),
        processing: ClassExpr::Top(Category::Processing),
        purpose: ClassExpr::Top(Category::Purpose),
        recipient: ClassExpr::Top(Category::Recipient),
        storage: StorageExpr { location: ClassExpr::Top(Category::Location), duration: DurationExpr::ANY_DAYS },
    }
}
