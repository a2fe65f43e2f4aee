"""Runtime configuration: a single JSON document, validated on load.

Every experiment parameter lives here - the curve, the generator, the
quadratic parameters of the two auxiliary fields, the density target, and
the effort budgets - so that a run is reproducible from the config file
alone.  The only environment override honored anywhere in the toolkit is
``DEFLAB_CACHE_PATH`` for relocating the factorization cache.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from fractions import Fraction

from .arith import FactorBudget, is_perfect_square, is_squarefree
from .cache import FactorCache
from .curve import Curve, CurveContext, Point

DEFAULT_CACHE_PATH = "~/.cache/deflab/factors.jsonl"
CACHE_PATH_ENV = "DEFLAB_CACHE_PATH"

REPORT_FORMATS = ("json", "csv")


def _check_quadratic_parameter(name: str, value: int) -> None:
    if value >= 0 and is_perfect_square(value):
        raise ValueError(f"{name} must not be a perfect square")
    if not is_squarefree(abs(value)):
        raise ValueError(f"{name} must be squarefree")


@dataclass(frozen=True)
class ToolkitConfig:
    """All experiment parameters.

    ``d_m`` parametrizes the quadratic field used by the one-universal
    quantifier packing; ``d_l`` the auxiliary field for the density rules
    and the subset system.  ``epsilon`` is the density target for the
    inverted set.  The budget triple bounds factoring effort; ``depth``
    and ``window`` bound the vertical checks and the exhaustive formula
    harnesses.
    """

    a: int = 0
    b: int = -2
    generator: tuple[Fraction, Fraction] = (Fraction(3), Fraction(5))
    t_override: int | None = None
    point_scale: int = 1
    d_m: int = 5
    d_l: int = 5
    epsilon: Fraction = Fraction(1, 4)
    trial_bound: int = 1_000_000
    rho_iterations: int = 400_000
    rho_restarts: int = 16
    depth: int = 3
    window: int = 50
    index_cap: int = 120
    cache_path: str = DEFAULT_CACHE_PATH
    report_format: str = "json"

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        qx, qy = self.generator
        object.__setattr__(self, "generator", (Fraction(qx), Fraction(qy)))
        if 4 * self.a**3 + 27 * self.b**2 == 0:
            raise ValueError("singular curve: 4a^3 + 27b^2 = 0")
        qx, qy = self.generator
        if qy * qy != qx**3 + self.a * qx + self.b:
            raise ValueError("the generator does not lie on the curve")
        _check_quadratic_parameter("d_m", self.d_m)
        _check_quadratic_parameter("d_l", self.d_l)
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.report_format not in REPORT_FORMATS:
            raise ValueError(f"report_format must be one of {REPORT_FORMATS}")
        for name in ("trial_bound", "rho_iterations", "rho_restarts",
                     "depth", "window", "index_cap", "point_scale"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    # -- derived objects ----------------------------------------------------

    def budget(self) -> FactorBudget:
        return FactorBudget(
            trial_bound=self.trial_bound,
            rho_iterations=self.rho_iterations,
            rho_restarts=self.rho_restarts,
        )

    def curve(self) -> Curve:
        return Curve(self.a, self.b)

    def generator_point(self) -> Point:
        qx, qy = self.generator
        return Point.of(qx, qy)

    def context(self) -> CurveContext:
        return CurveContext.build(
            self.curve(),
            self.generator_point(),
            point_scale=self.point_scale,
            t_override=self.t_override,
        )

    def resolved_cache_path(self) -> str:
        path = os.environ.get(CACHE_PATH_ENV) or self.cache_path
        return os.path.expanduser(path)

    def cache(self) -> FactorCache:
        return FactorCache(self.resolved_cache_path())

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        qx, qy = self.generator
        return {
            "curve": {"a": self.a, "b": self.b},
            "generator": [str(qx), str(qy)],
            "t_override": self.t_override,
            "point_scale": self.point_scale,
            "d_m": self.d_m,
            "d_l": self.d_l,
            "epsilon": str(self.epsilon),
            "budgets": {
                "trial_bound": self.trial_bound,
                "rho_iterations": self.rho_iterations,
                "rho_restarts": self.rho_restarts,
                "depth": self.depth,
                "window": self.window,
                "index_cap": self.index_cap,
            },
            "cache_path": self.cache_path,
            "report_format": self.report_format,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToolkitConfig":
        base = cls()
        curve = d.get("curve", {})
        budgets = d.get("budgets", {})
        gen = d.get("generator")
        return replace(
            base,
            a=int(curve.get("a", base.a)),
            b=int(curve.get("b", base.b)),
            generator=(
                (Fraction(str(gen[0])), Fraction(str(gen[1])))
                if gen is not None
                else base.generator
            ),
            t_override=d.get("t_override", base.t_override),
            point_scale=int(d.get("point_scale", base.point_scale)),
            d_m=int(d.get("d_m", base.d_m)),
            d_l=int(d.get("d_l", base.d_l)),
            epsilon=Fraction(str(d.get("epsilon", base.epsilon))),
            trial_bound=int(budgets.get("trial_bound", base.trial_bound)),
            rho_iterations=int(budgets.get("rho_iterations", base.rho_iterations)),
            rho_restarts=int(budgets.get("rho_restarts", base.rho_restarts)),
            depth=int(budgets.get("depth", base.depth)),
            window=int(budgets.get("window", base.window)),
            index_cap=int(budgets.get("index_cap", base.index_cap)),
            cache_path=d.get("cache_path", base.cache_path),
            report_format=d.get("report_format", base.report_format),
        )


def load_config(path: str | None = None) -> ToolkitConfig:
    """Defaults when path is None; otherwise parse and validate the file."""
    if path is None:
        return ToolkitConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return ToolkitConfig.from_dict(json.load(fh))
