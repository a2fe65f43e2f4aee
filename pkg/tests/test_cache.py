"""Persistent factorization store: roundtrips, tamper detection, compaction."""

import json

from deflab.arith import FactorBudget, factor
from deflab.cache import CacheEntry, FactorCache, cached_factor, value_key


def test_roundtrip_through_new_instance(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c1 = FactorCache(path)
    fac = cached_factor(360, cache=c1)
    assert fac.complete and fac.factors == ((2, 3), (3, 2), (5, 1))
    # a fresh instance reads the same entry back from disk
    c2 = FactorCache(path)
    hit = c2.get(360)
    assert hit is not None
    assert hit.factors == fac.factors and hit.complete


def test_get_miss_returns_none(tmp_path):
    c = FactorCache(str(tmp_path / "f.jsonl"))
    assert c.get(360) is None
    assert c.stats()["entries"] == 0


def test_tampered_value_is_rejected(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    cached_factor(360, cache=c)
    cached_factor(1001, cache=c)
    lines = open(path).read().strip().splitlines()
    rows = [json.loads(l) for l in lines]
    # flip one stored exponent: the product no longer matches the key hash
    rows[0]["factors"][0][1] += 1
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")
    c2 = FactorCache(path)
    assert c2.get(360) is None or c2.get(1001) is None
    assert c2.stats()["corrupt_lines_skipped"] == 1
    # the surviving entry is still served
    assert (c2.get(360) or c2.get(1001)) is not None


def test_garbage_lines_are_skipped(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    cached_factor(77, cache=c)
    with open(path, "a") as fh:
        fh.write("not json at all\n")
        fh.write('{"key": "missing fields"}\n')
    c2 = FactorCache(path)
    assert c2.get(77) is not None
    assert c2.stats()["corrupt_lines_skipped"] == 2


def test_corrupt_entry_triggers_recompute(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    cached_factor(360, cache=c)
    rows = [json.loads(l) for l in open(path).read().strip().splitlines()]
    rows[0]["cofactor"] = "7"  # breaks the product-vs-hash invariant
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")
    c2 = FactorCache(path)
    fac = cached_factor(360, cache=c2)  # cache miss -> recomputed and stored
    assert fac.complete and fac.factors == ((2, 3), (3, 2), (5, 1))
    assert FactorCache(path).get(360) is not None


def test_complete_entries_are_immutable(tmp_path):
    c = FactorCache(str(tmp_path / "f.jsonl"))
    fac = factor(360)
    assert c.put(fac)
    assert not c.put(fac)  # second write refused, file unchanged
    assert c.stats()["entries"] == 1


def test_incomplete_entry_upgraded_by_better_one(tmp_path):
    c = FactorCache(str(tmp_path / "f.jsonl"))
    a = 2305843009213693951  # 2^61 - 1
    b = 618970019642690137449562111  # 2^89 - 1
    n = a * b
    tiny = FactorBudget(trial_bound=100, rho_iterations=10, rho_restarts=1)
    partial = factor(n, tiny)
    assert not partial.complete
    assert c.put(partial, tiny)
    assert not c.put(partial, tiny)  # no better, refused
    from deflab.arith import Factorization

    full = Factorization(value=n, factors=((a, 1), (b, 1)), cofactor=1, complete=True)
    assert c.put(full)
    assert c.get(n).complete


def test_cached_factor_respects_budget_identity(tmp_path):
    """An incomplete hit under a different budget is retried."""
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    n = 1000003 * 1000033
    tiny = FactorBudget(trial_bound=100, rho_iterations=10, rho_restarts=1)
    first = cached_factor(n, tiny, c)
    assert not first.complete
    second = cached_factor(n, FactorBudget(), c)  # default budget cracks it
    assert second.complete
    assert c.get(n).complete


def test_gc_compacts_and_reports(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    for n in (6, 10, 15, 21, 35):
        cached_factor(n, cache=c)
    with open(path, "a") as fh:
        fh.write("garbage\n")
    c2 = FactorCache(path)
    report = c2.gc()
    assert report["entries"] == 5
    assert report["corrupt_lines_dropped"] == 1
    assert report["bytes_after"] <= report["bytes_before"]
    c3 = FactorCache(path)
    assert c3.stats()["corrupt_lines_skipped"] == 0
    assert all(c3.get(n) is not None for n in (6, 10, 15, 21, 35))


def test_large_values_stored_by_hash_only(tmp_path):
    path = str(tmp_path / "f.jsonl")
    c = FactorCache(path)
    n = 10 ** 300 + 7  # digits beyond the inline threshold
    tiny = FactorBudget(trial_bound=10, rho_iterations=5, rho_restarts=1)
    fac = factor(n, tiny)
    c.put(fac, tiny)
    row = json.loads(open(path).read().strip().splitlines()[-1])
    assert "value" not in row and row["value_digits"] == 301
    assert FactorCache(path).get(n) is not None


def test_entry_serialization_roundtrip():
    fac = factor(360)
    entry = CacheEntry(
        key=value_key(360), factorization=fac, version="x", budget={}
    )
    back = CacheEntry.from_dict(entry.to_dict())
    assert back.factorization == fac
