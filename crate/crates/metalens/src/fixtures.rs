//! Bundled example inputs, compiled into the binary so the CLI works out of
//! the box: two published lung-cancer study tables, their citation-count
//! ledgers, and a pair of simulation scenarios.

/// Name and contents of every bundled fixture, in listing order.
pub const FIXTURES: [(&str, &str); 6] = [
    ("raaschou2013.csv", include_str!("../fixtures/raaschou2013.csv")),
    ("hamra2014.csv", include_str!("../fixtures/hamra2014.csv")),
    ("table1_counts.csv", include_str!("../fixtures/table1_counts.csv")),
    ("table2_counts.csv", include_str!("../fixtures/table2_counts.csv")),
    ("honest.cfg", include_str!("../fixtures/honest.cfg")),
    ("p_hacked.cfg", include_str!("../fixtures/p_hacked.cfg")),
];

/// Looks up a fixture by file name.
pub fn fixture(name: &str) -> Option<&'static str> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Fixture names in listing order.
pub fn fixture_names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}
