use fermicone::verify::suites;

#[test]
fn every_suite_passes_at_seed_zero() {
    for s in suites() {
        let r = s.run(0);
        assert!(r.passed(), "{}: {:?}", r.name, r.failure);
        assert!(r.max_error <= r.tolerance);
    }
}
