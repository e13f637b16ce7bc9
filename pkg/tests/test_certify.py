import json
from fractions import Fraction

import numpy as np
import pytest

from helpers import leaf_paths, mutate_leaf
from twistpara import certify as cert_mod
from twistpara.arithcore import squarefree_kernel
from twistpara.certify import (
    SCHEMA,
    MissingWitness,
    _digest,
    build_certificate,
    compute_twist_set,
    find_parallelepiped,
    load_certificate,
    save_certificate,
    squarefree_kernels,
    verify_certificate,
)
from twistpara.curve import OracleConfig, X0_19, load_rank_table
from twistpara.density import FiniteIntegerSet
from twistpara.parasearch import Parallelepiped, SearchExhausted


def test_kernel_table():
    k = squarefree_kernels(3000)
    assert all(k[n] == squarefree_kernel(n) for n in range(1, 3001))


def test_twist_set_is_closed_under_squares(x019_set):
    S = x019_set.derived
    assert S.universe_bound == 20000
    assert 1 not in S  # the base curve has rank 0
    for d in list(S)[:200]:
        assert squarefree_kernel(d) in x019_set.witnessed_classes
        m = 2
        while d * m * m <= 20000:
            assert d * m * m in S
            m += 1


def test_tiny_universe():
    tw = compute_twist_set(X0_19, 1)
    assert len(tw.derived) == 0 and tw.statuses == {1: tw.statuses[1]}


def test_threads_do_not_change_result():
    a = compute_twist_set(X0_19, 3000, OracleConfig(search_bound=30), sieve_height=100)
    b = compute_twist_set(X0_19, 3000, OracleConfig(search_bound=30), sieve_height=100, threads=3)
    assert a.derived == b.derived and a.statuses == b.statuses


def test_store_roundtrip(tmp_path, x019_set):
    path = tmp_path / "store.tsv"
    cert_mod.write_witness_store(path, X0_19, x019_set.statuses)
    table = load_rank_table(path, X0_19)
    again = compute_twist_set(X0_19, 20000, OracleConfig(search_bound=0, table=table), sieve_height=0)
    assert again.derived == x019_set.derived


def test_interrupted_run_keeps_store(tmp_path, monkeypatch):
    calls = {"n": 0}
    real = cert_mod.positive_rank_oracle

    def flaky(base, d, config):
        calls["n"] += 1
        if calls["n"] > 500:
            raise KeyboardInterrupt
        return real(base, d, config)

    monkeypatch.setattr(cert_mod, "positive_rank_oracle", flaky)
    path = tmp_path / "partial.tsv"
    with pytest.raises(KeyboardInterrupt):
        compute_twist_set(X0_19, 5000, sieve_height=200, store_path=path)
    assert len(load_rank_table(path, X0_19).entries) > 0


@pytest.mark.parametrize("n", [1, 2])
def test_certificate_roundtrip(n, x019_set, tmp_path):
    P, _ = find_parallelepiped(x019_set.derived, n)
    cert = build_certificate(x019_set, P, {"note": "test"})
    assert verify_certificate(cert) == []
    path = tmp_path / "c.json"
    save_certificate(path, cert)
    doc = load_certificate(path)
    assert doc["schema"] == SCHEMA and len(doc["entries"]) == 2**n
    assert verify_certificate(doc) == []
    assert verify_certificate(path.read_text()) == []


def test_every_leaf_mutation_is_rejected(x019_set):
    P, _ = find_parallelepiped(x019_set.derived, 2)
    doc = build_certificate(x019_set, P).payload()
    paths = list(leaf_paths(doc))
    assert len(paths) > 20
    for path in paths:
        assert verify_certificate(mutate_leaf(doc, path)), path


def test_mathematical_checks_survive_resealing(x019_set):
    """Mutations with a recomputed digest are still caught by the math."""
    P, _ = find_parallelepiped(x019_set.derived, 2)
    doc = build_certificate(x019_set, P).payload()
    for path in leaf_paths(doc):
        if path[0] in ("metadata", "digest", "schema"):
            continue
        bad = mutate_leaf(doc, path)
        bad["digest"] = _digest(bad)
        problems = verify_certificate(bad)
        assert problems and "digest mismatch" not in problems, path


def test_structural_damage(x019_set):
    P, _ = find_parallelepiped(x019_set.derived, 1)
    doc = build_certificate(x019_set, P).payload()
    for key in ("curve", "c", "generators", "entries"):
        broken = {k: v for k, v in doc.items() if k != key}
        assert verify_certificate(broken)
    extra = json.loads(json.dumps(doc))
    extra["entries"]["2"] = extra["entries"]["1"]
    extra["digest"] = _digest(extra)
    assert any("subset masks" in p for p in verify_certificate(extra))
    assert verify_certificate("{not json") and verify_certificate([1, 2])


def test_dependent_generators_detected(x019_set):
    P, _ = find_parallelepiped(x019_set.derived, 1)
    doc = build_certificate(x019_set, P).payload()
    doc["generators"] = [doc["generators"][0], "4"]
    doc["digest"] = _digest(doc)
    problems = verify_certificate(doc)
    assert any("dependent" in p for p in problems)


def test_missing_witness():
    tw = compute_twist_set(X0_19, 2000)
    # fake membership of an unwitnessed class in the derived set
    bad = next(d for d in range(2, 2000) if squarefree_kernel(d) == d and d not in tw.derived)
    good = next(iter(tw.derived))
    tw.derived = FiniteIntegerSet(list(tw.derived) + [bad], 2000)
    lo, hi = sorted((good, bad))
    with pytest.raises(MissingWitness):
        build_certificate(tw, Parallelepiped(lo, (Fraction(hi, lo),)))


def test_build_rejects_outside_or_dependent(x019_set):
    with pytest.raises(ValueError):
        build_certificate(x019_set, Parallelepiped(1, (2,)))
    with pytest.raises(ValueError):
        build_certificate(x019_set, Parallelepiped(2, (4,)))


def test_synthetic_set_three_dimensional(congruent_small):
    P, how = find_parallelepiped(congruent_small.derived, 3)
    cert = build_certificate(congruent_small, P)
    assert verify_certificate(cert) == []


def test_finder_modes():
    S = FiniteIntegerSet([1, 2, 3, 6], 6)
    P, how = find_parallelepiped(S, 2, "brute")
    assert how == "brute" and P == Parallelepiped(1, (2, 3))
    with pytest.raises(SearchExhausted):
        find_parallelepiped(S, 2, "guided")
    with pytest.raises(SearchExhausted):
        find_parallelepiped(FiniteIntegerSet([1, 2], 2), 2)
    with pytest.raises(ValueError):
        find_parallelepiped(S, 2, "psychic")


def test_unsealed_tampering_reports_the_math_too(x019_set):
    P, _ = find_parallelepiped(x019_set.derived, 2)
    doc = build_certificate(x019_set, P).payload()
    doc["entries"]["3"]["x"] = "1"
    problems = verify_certificate(doc)
    assert "digest mismatch" in problems
    assert any("not on the twist" in p for p in problems)
