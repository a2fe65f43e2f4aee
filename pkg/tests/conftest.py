"""Shared fixtures: one curve context, cache, and ring spec for the whole run."""

import pytest

from deflab.arith import FactorBudget
from deflab.cache import FactorCache
from deflab.curve import Curve, CurveContext, Point
from deflab.divmodel import RingRule, RingSpec
from deflab.eds import build_V


@pytest.fixture(scope="session")
def ctx():
    return CurveContext.build(Curve(0, -2), Point.of(3, 5))


@pytest.fixture(scope="session")
def budget():
    return FactorBudget()


@pytest.fixture(scope="session")
def cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("cache") / "factors.jsonl"
    return FactorCache(str(path))


@pytest.fixture(scope="session")
def vtable(ctx, budget, cache):
    return build_V(ctx, bound=11, budget=budget, cache=cache)


@pytest.fixture(scope="session")
def wspec(ctx, vtable):
    return RingSpec(
        include=frozenset(ctx.bad_primes),
        exclude=vtable.primes(),
        rule=RingRule(kind="quadratic-inert", D=5),
        bad_included=True,
    )
