//! Taxonomy extension files.
//!
//! ```text
//! # comment
//! @prefix befit <http://example.org/befit#>
//! befit:SensorGathering subClassOf svpr:Collect
//! befit:HealthTracking rdfs:subClassOf svpu:Health .
//! ```
//!
//! One statement per line. `@prefix` takes a name (a trailing `:` is
//! allowed) and an `<iri>`; a prefix must be bound before it is used. Axiom
//! lines are `<child> subClassOf <parent>` (`rdfs:subClassOf` is accepted
//! too) with an optional trailing `.`. A `#` at the start of a line or
//! after whitespace begins a comment.

use super::{builtin_special, Taxonomy, TaxonomyBuilder, VocabError};

/// Parses an extension file and merges it into [`builtin_special`].
pub fn load_taxonomy(source: &str) -> Result<Taxonomy, VocabError> {
    extend_taxonomy(&builtin_special(), source)
}

/// Parses an extension file and merges it into `base`.
pub fn extend_taxonomy(base: &Taxonomy, source: &str) -> Result<Taxonomy, VocabError> {
    let mut builder = TaxonomyBuilder::extending(base);
    for (n, raw) in source.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| VocabError::Parse { line, message };
        let mut tokens: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if tokens.last() == Some(&".") {
            tokens.pop();
        } else if let Some(last) = tokens.last_mut() {
            *last = last.strip_suffix('.').unwrap_or(last);
        }
        match tokens.as_slice() {
            [] => {}
            ["@prefix", name, iri] => {
                let name = name.strip_suffix(':').unwrap_or(name);
                let iri = iri
                    .strip_prefix('<')
                    .and_then(|s| s.strip_suffix('>'))
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| err(format!("expected <iri> after @prefix {name}, found `{iri}`")))?;
                builder.prefix(name, iri).map_err(|e| err(e.to_string()))?;
            }
            ["@prefix", ..] => return Err(err("expected `@prefix <name> <iri>`".into())),
            [child, kw, parent] if *kw == "subClassOf" || *kw == "rdfs:subClassOf" => {
                let child = builder.prefixes().expand(child).map_err(|e| err(e.to_string()))?;
                let parent = builder.prefixes().expand(parent).map_err(|e| err(e.to_string()))?;
                builder.subclass(child, parent);
            }
            _ => return Err(err(format!("expected `<child> subClassOf <parent>`, found `{}`", raw.trim()))),
        }
    }
    builder.build()
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::ClassId;

    #[test]
    fn sensor_gathering_extension() {
        let t = load_taxonomy(
            "@prefix befit <http://example.org/befit#>\n\
             befit:SensorGathering rdfs:subClassOf svpr:Collect .\n",
        )
        .unwrap();
        let sg = t.resolve("befit:SensorGathering").unwrap();
        assert_eq!(sg.as_str(), "http://example.org/befit#SensorGathering");
        assert!(t.is_subclass(&sg, &t.resolve("svpr:Collect").unwrap()).unwrap());
        let ext = t.extension_of(&t.resolve("svpr:Collect").unwrap()).unwrap();
        assert!(ext.contains(&sg));
    }

    #[test]
    fn empty_file_is_identity() {
        assert_eq!(load_taxonomy("").unwrap(), builtin_special());
        assert_eq!(load_taxonomy("# nothing\n\n   \n").unwrap(), builtin_special());
    }

    #[test]
    fn cycle_is_detected() {
        let err = load_taxonomy("ex:a subClassOf ex:b\nex:b subClassOf ex:a\n").unwrap_err();
        assert!(matches!(err, VocabError::CycleDetected(_)), "{err:?}");
    }

    #[test]
    fn cycle_through_builtin_is_detected() {
        let err = load_taxonomy("ex:a subClassOf svd:Health\nsvd:Health subClassOf ex:a\n").unwrap_err();
        assert!(matches!(err, VocabError::CycleDetected(_)), "{err:?}");
    }

    #[test]
    fn unknown_parent() {
        let err = load_taxonomy("ex:a subClassOf ex:nowhere\n").unwrap_err();
        assert!(matches!(err, VocabError::UnknownParent { .. }), "{err:?}");
    }

    #[test]
    fn category_mismatch() {
        let err = load_taxonomy("ex:a subClassOf svd:Health\nex:a subClassOf svpr:Collect\n").unwrap_err();
        assert!(matches!(err, VocabError::CategoryMismatch { .. }), "{err:?}");
    }

    #[test]
    fn duplicate_root() {
        let err = load_taxonomy("spl:AnyData subClassOf svd:Health\n").unwrap_err();
        assert!(matches!(err, VocabError::DuplicateClass(_)), "{err:?}");
        let err = load_taxonomy("spl:Null subClassOf svd:Health\n").unwrap_err();
        assert!(matches!(err, VocabError::DuplicateClass(_)), "{err:?}");
    }

    #[test]
    fn repeated_declarations_are_idempotent() {
        let once = load_taxonomy("ex:a subClassOf svd:Health\n").unwrap();
        let twice = load_taxonomy("ex:a subClassOf svd:Health\nex:a subClassOf svd:Health .\n").unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load_taxonomy("# ok\nex:a isA svd:Health\n").unwrap_err();
        assert_eq!(err, VocabError::Parse { line: 2, message: "expected `<child> subClassOf <parent>`, found `ex:a isA svd:Health`".into() });
        let err = load_taxonomy("\n\n@prefix ex http://x\n").unwrap_err();
        assert!(matches!(err, VocabError::Parse { line: 3, .. }));
    }

    #[test]
    fn hash_inside_iri_is_not_a_comment() {
        let t = load_taxonomy("@prefix ex <http://x.org/v#>\nex:A subClassOf svd:Health # trailing\n").unwrap();
        assert!(t.contains(&ClassId::new("http://x.org/v#A")));
    }
}
