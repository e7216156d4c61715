use qracah::suites::{resolve, suite_ids, ALL};

const MANIFEST: &str = include_str!("../suites.manifest");

fn manifest() -> Vec<&'static str> {
    MANIFEST.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

#[test]
fn registry_matches_manifest() {
    assert_eq!(suite_ids().collect::<Vec<_>>(), manifest());
}

#[test]
fn all_resolves_to_every_suite_in_order() {
    assert_eq!(resolve(ALL).unwrap(), manifest());
    for id in manifest() {
        assert_eq!(resolve(id).unwrap(), vec![id]);
    }
    assert!(resolve("lemma0.0").is_err());
}
