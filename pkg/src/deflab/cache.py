"""Persistent factorization cache.

Append-only JSONL file guarded by an advisory file lock.  Entries are
keyed by the SHA-256 hash of the decimal value; the stored factor data
must multiply back to a value with the same hash before it is trusted.
Values of moderate size are stored inline for readability, very large
ones are stored by hash and factor data only.

Complete entries are immutable: a later put() can only replace an
incomplete entry (with a better one); gc() compacts the file under this
rule.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from typing import Iterator

from . import __version__
from .arith import DEFAULT_BUDGET, FactorBudget, Factorization, factor

INLINE_VALUE_DIGITS = 256


def value_key(n: int) -> str:
    return hashlib.sha256(str(n).encode()).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    factorization: Factorization
    version: str
    budget: dict

    def to_dict(self) -> dict:
        fac = self.factorization
        d = {
            "key": self.key,
            "factors": [[str(p), e] for p, e in fac.factors],
            "cofactor": str(fac.cofactor),
            "complete": fac.complete,
            "version": self.version,
            "budget": self.budget,
        }
        s = str(fac.value)
        if len(s) <= INLINE_VALUE_DIGITS:
            d["value"] = s
        else:
            d["value_digits"] = len(s)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CacheEntry":
        prod = int(d["cofactor"])
        factors = tuple((int(p), int(e)) for p, e in d["factors"])
        for p, e in factors:
            prod *= p**e
        if "value" in d and int(d["value"]) != prod:
            raise ValueError("stored value does not match factor product")
        if value_key(prod) != d["key"]:
            raise ValueError("factor product does not hash to the entry key")
        fac = Factorization(
            value=prod,
            factors=factors,
            cofactor=int(d["cofactor"]),
            complete=bool(d["complete"]),
        )
        return cls(
            key=d["key"],
            factorization=fac,
            version=str(d.get("version", "?")),
            budget=dict(d.get("budget", {})),
        )


def _score(e: CacheEntry) -> tuple:
    return (e.factorization.complete, len(e.factorization.factors))


class FactorCache:
    """JSONL-backed factorization store."""

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[str, CacheEntry] = {}
        self._corrupt = 0
        self._load()

    # -- file plumbing -----------------------------------------------------
    def _load(self):
        self._entries.clear()
        self._corrupt = 0
        if not os.path.exists(self.path):
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_SH)
            try:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        entry = CacheEntry.from_dict(json.loads(line))
                    except (ValueError, KeyError, json.JSONDecodeError):
                        self._corrupt += 1
                        continue
                    old = self._entries.get(entry.key)
                    if old is None or (
                        not old.factorization.complete and _score(entry) > _score(old)
                    ):
                        self._entries[entry.key] = entry
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _append(self, entry: CacheEntry):
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    # -- public API ----------------------------------------------------------
    def get(self, value: int) -> Factorization | None:
        entry = self._entries.get(value_key(value))
        if entry is None:
            return None
        if entry.factorization.value != value:  # hash collision guard
            return None
        return entry.factorization

    def get_entry(self, value: int) -> CacheEntry | None:
        return self._entries.get(value_key(value))

    def put(self, fac: Factorization, budget: FactorBudget | None = None) -> bool:
        """Store a factorization.  Returns True when written.

        Complete entries are immutable; an incomplete entry may be
        replaced by a strictly better one.
        """
        budget = budget or DEFAULT_BUDGET
        entry = CacheEntry(
            key=value_key(fac.value),
            factorization=fac,
            version=__version__,
            budget=asdict(budget),
        )
        old = self._entries.get(entry.key)
        if old is not None:
            if old.factorization.complete:
                return False
            if _score(entry) <= _score(old):
                return False
        self._entries[entry.key] = entry
        self._append(entry)
        return True

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> Iterator[CacheEntry]:
        return iter(self._entries.values())

    def stats(self) -> dict:
        complete = sum(1 for e in self._entries.values() if e.factorization.complete)
        size = os.path.getsize(self.path) if os.path.exists(self.path) else 0
        return {
            "path": self.path,
            "entries": len(self._entries),
            "complete": complete,
            "incomplete": len(self._entries) - complete,
            "corrupt_lines_skipped": self._corrupt,
            "file_bytes": size,
        }

    def gc(self) -> dict:
        """Rewrite the file keeping one best entry per key."""
        self._load()
        before = os.path.getsize(self.path) if os.path.exists(self.path) else 0
        dirname = os.path.dirname(os.path.abspath(self.path)) or "."
        os.makedirs(dirname, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".jsonl")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for key in sorted(self._entries):
                    fh.write(
                        json.dumps(self._entries[key].to_dict(), sort_keys=True) + "\n"
                    )
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        after = os.path.getsize(self.path)
        return {
            "entries": len(self._entries),
            "corrupt_lines_dropped": self._corrupt,
            "bytes_before": before,
            "bytes_after": after,
        }


def cached_factor(
    n: int,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> Factorization:
    """factor() through an optional persistent cache."""
    budget = budget or DEFAULT_BUDGET
    if cache is None:
        return factor(n, budget)
    hit = cache.get_entry(n)
    if hit is not None and hit.factorization.value == n:
        if hit.factorization.complete or hit.budget == asdict(budget):
            return hit.factorization
    fac = factor(n, budget)
    cache.put(fac, budget)
    return fac
