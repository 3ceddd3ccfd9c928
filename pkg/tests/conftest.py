def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    if report.skipped:
        outcome = "SKIP"
    print(f"\nACCEPTANCE {name}: {outcome}", flush=True)
