"""Measurement-error distributions for matching decisions.

Two families are supported: point masses (``dirac``) and uniform intervals
(``uniform``).  Both are bounded and have closed-form absolute-tail functions
``P(|U| > u)``, which is all the decision-noise quantile machinery needs.  A
new family only has to supply ``abs_tail`` to plug into the bisection
fallback of :func:`u_kappa_single`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "NoiseSpec",
    "DIRAC_ZERO",
    "sample",
    "abs_tail",
    "u_kappa_single",
    "u_kappa",
]


@dataclass(frozen=True)
class NoiseSpec:
    """One error distribution: ``dirac`` (constant ``c``) or ``uniform`` on ``[a, b]``."""

    kind: str
    c: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirac", "uniform"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.kind == "dirac":
            if not math.isfinite(self.c):
                raise InputError("dirac noise offset must be finite")
        else:
            if not (math.isfinite(self.a) and math.isfinite(self.b)):
                raise InputError("uniform noise endpoints must be finite")
            if self.a > self.b:
                raise InputError(f"uniform noise needs a <= b, got ({self.a}, {self.b})")

    @staticmethod
    def dirac(c: float = 0.0) -> "NoiseSpec":
        return NoiseSpec("dirac", c=float(c))

    @staticmethod
    def uniform(a: float, b: float) -> "NoiseSpec":
        return NoiseSpec("uniform", a=float(a), b=float(b))

    @property
    def is_dirac(self) -> bool:
        """True when the distribution is a point mass (degenerate uniforms count)."""
        return self.kind == "dirac" or self.a == self.b

    @property
    def atom(self) -> float:
        """Location of the point mass; only meaningful when ``is_dirac``."""
        return self.c if self.kind == "dirac" else self.a

    @property
    def bound(self) -> float:
        """Smallest B with P(-B <= U <= B) = 1."""
        if self.kind == "dirac":
            return abs(self.c)
        return max(abs(self.a), abs(self.b))

    def to_dict(self) -> dict:
        if self.kind == "dirac":
            return {"kind": "dirac", "c": self.c}
        return {"kind": "uniform", "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpec":
        kind = data.get("kind")
        if kind == "dirac":
            return cls.dirac(data.get("c", 0.0))
        if kind == "uniform":
            try:
                return cls.uniform(data["a"], data["b"])
            except KeyError as exc:
                raise InputError(f"uniform noise needs keys a and b: missing {exc}") from exc
        raise InputError(f"unknown noise kind {kind!r}")


DIRAC_ZERO = NoiseSpec.dirac(0.0)


def sample(ns: NoiseSpec, rng: np.random.Generator) -> float:
    """Draw one value from the error distribution."""
    if ns.is_dirac:
        return ns.atom
    return float(rng.uniform(ns.a, ns.b))


def abs_tail(ns: NoiseSpec, u: float) -> float:
    """Exact ``P(|U| > u)`` for ``u >= 0``."""
    if u < 0.0:
        raise InputError(f"u must be >= 0, got {u}")
    if ns.is_dirac:
        return 1.0 if u < abs(ns.atom) else 0.0
    width = ns.b - ns.a
    above = max(0.0, ns.b - max(ns.a, u))
    below = max(0.0, min(ns.b, -u) - ns.a)
    return (above + below) / width


def _tail_threshold(kappa: float, lambda_total: float, n_edges: int) -> float:
    if not 0.0 < kappa < lambda_total:
        raise InputError(f"kappa must lie in (0, {lambda_total}), got {kappa}")
    if n_edges < 1:
        raise InputError(f"n_edges must be >= 1, got {n_edges}")
    return 1.0 - (1.0 - kappa / lambda_total) ** (1.0 / (2.0 * n_edges))


def u_kappa_single(ns: NoiseSpec, kappa: float, lambda_total: float, n_edges: int) -> float:
    """Smallest error magnitude exceeded with probability below the per-pair budget.

    Computes ``inf { u >= 0 : P(|U| > u) < tau }`` where
    ``tau = 1 - (1 - kappa/lambda_total)^(1/(2 n_edges))``.  Point masses and
    symmetric uniforms use closed forms; anything else falls back to
    bisection on :func:`abs_tail` to absolute tolerance 1e-9.
    """
    tau = _tail_threshold(kappa, lambda_total, n_edges)
    if ns.is_dirac:
        # tail is the indicator of u < |atom| and tau is in (0, 1), so the
        # sub-threshold region is exactly [|atom|, inf).
        return abs(ns.atom)
    if ns.a == -ns.b:
        return max(0.0, ns.b * (1.0 - tau))
    if abs_tail(ns, 0.0) < tau:
        return 0.0
    lo, hi = 0.0, ns.bound
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if abs_tail(ns, mid) < tau:
            hi = mid
        else:
            lo = mid
    return hi


def u_kappa(spec, kappa: float) -> float:
    """Largest per-pair quantile over all ordered compatible pairs of a model.

    With all errors below this level simultaneously, the probability budget
    ``1 - kappa / lambda_total`` is met.  Zero when the model has no edges.
    """
    n_edges = len(spec.graph.edges)
    if n_edges == 0:
        _tail_threshold(kappa, spec.lambda_total, 1)
        return 0.0
    return max(
        u_kappa_single(ns, kappa, spec.lambda_total, n_edges)
        for ns in spec.noise.values()
    )
