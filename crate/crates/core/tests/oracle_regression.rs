//! Replays a stored corpus of 1,000 oracle-labelled compliance cases over
//! random taxonomies. Set `POLCHECK_REGENERATE=1` to rewrite the corpus.

use polcheck_core::genbench::synth;
use polcheck_core::reasoner::{complies, oracle_complies, DEFAULT_MAX_UNIVERSE};
use polcheck_core::splog::JsonCodec;
use polcheck_core::vocab::{PrefixMap, Taxonomy, TaxonomyBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/oracle_cases.jsonl");

fn codec() -> JsonCodec {
    let mut p = PrefixMap::special();
    p.insert("syn", synth::SYNTH_NS).unwrap();
    JsonCodec::new(p)
}

fn taxonomy_from(edges: &Value, prefixes: &PrefixMap) -> Taxonomy {
    let mut b = TaxonomyBuilder::roots_only();
    let id = |v: &Value| prefixes.expand(v.as_str().unwrap()).unwrap();
    for e in edges.as_array().unwrap() {
        b.subclass(id(&e[0]), id(&e[1]));
    }
    b.build().unwrap()
}

fn generate() -> String {
    let codec = codec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = String::new();
    for _ in 0..100 {
        let t = synth::taxonomy(&mut rng, 30);
        let p = codec.prefixes();
        let edges: Vec<Value> = t.edges().iter().map(|(c, d)| json!([p.compact(c), p.compact(d)])).collect();
        out.push_str(&json!({ "taxonomy": edges }).to_string());
        out.push('\n');
        for _ in 0..10 {
            let consent = synth::general(&mut rng, &t, 3, 1);
            let content = if rng.random_bool(0.5) {
                let j = rng.random_range(0..consent.basics().len());
                synth::specialise(&mut rng, &t, &consent.basics()[j])
            } else {
                synth::basic(&mut rng, &t, 1)
            };
            let expected = oracle_complies(&content, &consent, &t, DEFAULT_MAX_UNIVERSE).unwrap();
            let line = json!({
                "content": codec.usage_to_value(&content),
                "consent": codec.policy_to_value(&consent),
                "compliant": expected,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}

#[test]
fn stored_cases_replay_identically() {
    if std::env::var_os("POLCHECK_REGENERATE").is_some() {
        std::fs::write(CORPUS, generate()).unwrap();
    }
    let text = std::fs::read_to_string(CORPUS).unwrap();
    let codec = codec();
    let mut n = 0;
    let mut compliant = 0;
    let mut t: Option<Taxonomy> = None;
    for (i, line) in text.lines().enumerate() {
        let v: Value = serde_json::from_str(line).unwrap();
        if let Some(edges) = v.get("taxonomy") {
            t = Some(taxonomy_from(edges, codec.prefixes()));
            continue;
        }
        let t = t.as_ref().expect("taxonomy line precedes its cases");
        let content = codec.usage_from_value(&v["content"]).unwrap();
        let consent = codec.policy_from_value(&v["consent"]).unwrap();
        let expected = v["compliant"].as_bool().unwrap();
        assert_eq!(complies(&content, &consent, t).unwrap().compliant, expected, "line {i}");
        assert_eq!(oracle_complies(&content, &consent, t, DEFAULT_MAX_UNIVERSE).unwrap(), expected, "line {i}");
        n += 1;
        compliant += expected as usize;
    }
    assert_eq!(n, 1000);
    assert!(compliant > 100 && compliant < 900, "{compliant}");
}

#[test]
fn generation_is_stable() {
    if std::env::var_os("POLCHECK_REGENERATE").is_some() {
        return;
    }
    let stored = std::fs::read_to_string(CORPUS).unwrap();
    assert_eq!(generate(), stored);
}
