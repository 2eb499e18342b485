//! Regression corpus for label extraction: hand-labeled completions in
//! fixtures/extraction.jsonl.

use serde::Deserialize;

use ensreas::domain::{Prediction, TaskSpec};
use ensreas::extraction::ExtractionRule;

#[derive(Deserialize)]
struct Fixture {
    raw_text: String,
    task: String,
    expected: Option<String>,
}

#[test]
fn extraction_fixture_corpus() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/extraction.jsonl");
    let raw = std::fs::read_to_string(path).unwrap();
    let rule_t = ExtractionRule::new(&TaskSpec::t());
    let rule_n = ExtractionRule::new(&TaskSpec::n());

    let mut checked = 0;
    for line in raw.lines().filter(|l| !l.trim().is_empty()) {
        let fixture: Fixture = serde_json::from_str(line).unwrap();
        let rule = match fixture.task.as_str() {
            "T" => &rule_t,
            "N" => &rule_n,
            other => panic!("unknown task {other}"),
        };
        let expected = match &fixture.expected {
            Some(label) => Prediction::Label(label.as_str().into()),
            None => Prediction::Unparseable,
        };
        assert_eq!(rule.extract(&fixture.raw_text), expected, "text: {:?}", fixture.raw_text);
        checked += 1;
    }
    assert_eq!(checked, 30);
}
