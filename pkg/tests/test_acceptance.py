"""Acceptance suite: one test per criterion, full instance counts, fixed seed."""
import pytest

from skcap import props

import conftest

SEED = 0


def _report(label, checks, limit=None):
    checks = checks if isinstance(checks, list) else [checks]
    seconds = sum(c.seconds for c in checks)
    ok = all(c.passed for c in checks) and (limit is None or seconds < limit)
    timing = f" in {seconds:.1f}s" + (f" (limit {limit:.0f}s)" if limit else "")
    body = "; ".join(c.line()[5:] for c in checks)
    line = f"{'PASS' if ok else 'FAIL'} [{label}] {body}{timing}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    for c in checks:
        assert c.passed, c.line()
    if limit is not None:
        assert seconds < limit, f"{label} took {seconds:.1f}s, limit {limit}s"


def test_01_nonnegativity():
    c = props.check_nonnegativity(SEED, 1000)
    assert c.count == 1000 and c.worst >= -1e-9
    _report("1 nonnegativity", c, 30)


def test_02_k2_reduction():
    c = props.check_k2_reduction(SEED, 200)
    assert c.count == 200 and c.worst <= 1e-9
    _report("2 k=2 reduction", c)


def test_03_tc_identities():
    c = props.check_tc_identities(SEED, 200)
    assert c.count == 200 and c.worst <= 1e-9
    _report("3 total-correlation identities", c)


def test_04_min_partition_bound():
    c = props.check_partition_bound(SEED, 300)
    assert c.count == 300 and c.worst >= -1e-9
    _report("4 min-partition bound", c, 60)


def test_05_data_processing_and_private_noise():
    dp = props.check_data_processing(SEED, 200)
    pn = props.check_private_noise(SEED, 200)
    assert dp.count == 200 and pn.count == 200
    _report("5 data processing, private noise", [dp, pn])


def test_06_dependence_balance():
    c = props.check_dependence_balance(SEED, 200)
    assert c.count == 200 and c.worst <= 1e-9
    _report("6 dependence balance", c, 120)


def test_07_key_bound_sanity():
    _report("7 key bound sanity", props.check_key_bound_sanity(SEED))


def test_08_optimizer_integrity():
    _report("8 optimizer integrity", props.check_optimizer_integrity(SEED))


def test_09_mac_region():
    _report("9 MAC region", props.check_mac(SEED), 600)


def test_10_polytope():
    c = props.check_polytope(SEED, 100)
    assert c.count == 100 and c.worst <= 1e-9
    _report("10 fractional-partition LP", c)
