use carnot_core::verify::{run_check, SuiteConfig, VerifyError, CHECKS};

fn quick() -> SuiteConfig {
    SuiteConfig { samples: Some(20), ..SuiteConfig::default() }
}

#[test]
fn same_seed_same_outcome() {
    let cfg = quick();
    for name in ["assoc", "scaling", "heis-bound", "sumb", "moments"] {
        let a = run_check(name, &cfg).unwrap();
        let b = run_check(name, &cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"), "{name}");
        assert_eq!(a.report.runtime_ms, 0);
        assert_eq!(a.report.check, name);
    }
}

#[test]
fn seed_changes_samples() {
    let a = run_check("heis-bound", &quick()).unwrap();
    let b = run_check("heis-bound", &SuiteConfig { seed: 2, ..quick() }).unwrap();
    assert_ne!(a.report.ratio_max, b.report.ratio_max);
}

#[test]
fn registry_and_validation() {
    assert_eq!(CHECKS.len(), 16);
    assert!(matches!(run_check("nope", &quick()), Err(VerifyError::UnknownCheck(_))));
    let bad = SuiteConfig { samples: Some(0), ..SuiteConfig::default() };
    assert!(matches!(run_check("assoc", &bad), Err(VerifyError::InvalidConfig(_))));
    let bad = SuiteConfig { eps: vec![1.5], ..SuiteConfig::default() };
    assert!(run_check("scaling", &bad).is_err());
}
