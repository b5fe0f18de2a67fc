use std::sync::OnceLock;

use super::{Category, ClassId, Taxonomy, TaxonomyBuilder, SVD, SVDU, SVL, SVPR, SVPU, SVR};

/// The enumerated example classes of the auxiliary vocabularies, each a
/// direct child of its category root. The published class counts for Data
/// (27) and Purpose (31) are larger than these lists; the remaining terms
/// are not enumerated anywhere we can source them from, so they are left
/// to extension files.
pub const BUILTIN_CLASSES: &[(Category, &str, &[&str])] = &[
    (
        Category::Data,
        SVD,
        &["Activity", "Anonymized", "Financial", "Health", "Location", "Navigation", "Preference", "Profile"],
    ),
    (
        Category::Processing,
        SVPR,
        &["Aggregate", "Analyze", "Anonymize", "Collect", "Copy", "Derive", "Move", "Query", "Transfer"],
    ),
    (
        Category::Purpose,
        SVPU,
        &[
            "Account", "Arts", "Delivery", "Education", "Feedback", "Gaming", "Health", "Marketing", "Payment", "Search",
        ],
    ),
    (Category::Recipient, SVR, &["Delivery", "OtherRecipient", "Ours", "Public", "Same", "Unrelated"]),
    (
        Category::Location,
        SVL,
        &["ControllerServer", "EU", "EULike", "ThirdCountries", "OurServers", "ProcessorServers", "ThirdParty"],
    ),
    (Category::Duration, SVDU, &["BusinessPractices", "Indefinitely", "LegalRequirement", "StatedPurpose"]),
];

/// The built-in vocabulary: six roots plus the flat list of
/// [`BUILTIN_CLASSES`]. `spl:Null` is not a node; it is represented by
/// `ClassExpr::Null` in policies.
pub fn builtin_special() -> Taxonomy {
    static BUILTIN: OnceLock<Taxonomy> = OnceLock::new();
    BUILTIN
        .get_or_init(|| {
            let mut b = TaxonomyBuilder::roots_only();
            for (cat, base, locals) in BUILTIN_CLASSES {
                for local in *locals {
                    b.subclass(ClassId::new(format!("{base}{local}")), cat.root());
                }
            }
            b.build().expect("built-in vocabulary is well formed")
        })
        .clone()
}
