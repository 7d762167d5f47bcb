from randlase.validation import CheckResult, check_kinetic_identity, run_suite


def test_quick_suite_passes():
    results = run_suite(quick=True)
    assert len(results) == 8
    failed = [r.line() for r in results if not r.passed]
    assert not failed, failed


def test_check_line_format():
    line = CheckResult("x", True, 1.0, 1.0, 0.1).line()
    assert line.startswith("[PASS] x:")
    assert check_kinetic_identity(100).passed
