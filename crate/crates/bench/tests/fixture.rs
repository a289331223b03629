use nncwo_bench::fixture;
use nncwo_core::ScenarioKind;

#[test]
fn fixture_is_reproducible() {
    let a = fixture(ScenarioKind::Msbd, 2, 200);
    let b = fixture(ScenarioKind::Msbd, 2, 200);
    assert_eq!(a.n_rows(), 200);
    assert_eq!(a.checksum(), b.checksum());
    assert!(a.has_column("Y2"));
}
