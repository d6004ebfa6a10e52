mod support;

use mhb_core::csv::{encode, CsvKind, CsvSelection};
use proptest::prelude::*;
use support::*;

fn parse(text: &str) -> Vec<Vec<String>> {
    ::csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn field() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z ]{0,8}",
        prop::collection::vec(prop_oneof![Just(','), Just('"'), Just('\n'), Just('\r'), Just(';'), Just('ä'), Just('x')], 1..8)
            .prop_map(|v| v.into_iter().collect()),
        any::<String>(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn encoded_documents_parse_back(rows in prop::collection::vec(prop::collection::vec(field(), 3), 0..12)) {
        let header = ["id", "display_name", "login_name"];
        let text = encode(&header, &rows);
        let mut expected = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
        expected.extend(rows.iter().cloned());
        // A lone empty field is indistinguishable from an empty line; the
        // reader skips those, so they are kept out of the comparison.
        prop_assume!(rows.iter().all(|r| r.iter().any(|f| !f.is_empty())));
        prop_assert_eq!(parse(&text), expected);
        prop_assert!(text.ends_with('\n'));
    }
}

#[test]
fn exports_parse_back_to_their_rows() {
    let mut b = B::default();
    let head = b.person("Head, \"The\" Boss");
    let l = b.person("Lect");
    let inst = b.institution("Inst, Dept. \"A\"", head, &[l]);
    let t = b.term("2008S", date(2008, 3, 1));
    let lec = b.lecture(
        "Line\nbreak",
        inst,
        &[l, head],
        &t,
        vec![slot("Mon", "10:00", "12:00", "R,1"), slot("2008-04-07", "14:00", "15:00", "R2")],
    );
    b.module("Mod; one", inst, head, &[lec], &[]);

    for kind in [CsvKind::Persons, CsvKind::Modules, CsvKind::Lectures] {
        let sel = CsvSelection::all(kind);
        let text = b.s.export_csv(&sel).unwrap();
        let parsed = parse(&text);
        assert_eq!(parsed[0], kind.header().iter().map(|h| h.to_string()).collect::<Vec<_>>());
        assert_eq!(parsed[1..].to_vec(), b.s.csv_rows(&sel).unwrap(), "{kind}");
    }
    let rows = b.s.csv_rows(&CsvSelection::all(CsvKind::Lectures)).unwrap();
    assert_eq!(rows[0][3], format!("{};{}", l.min(head), l.max(head)));
    assert_eq!(rows[0][5], "Mon 10:00-12:00 @R,1;2008-04-07 14:00-15:00 @R2");
    assert_eq!("rooms".parse::<CsvKind>().unwrap_err().code(), "UNKNOWN_KIND");
}
