"""Matching decision rules.

Three rules are implemented.  ``max_weight`` scores each nonempty compatible
queue by its noisy measured length plus the pair reward and picks a maximizer;
``match_longest`` ignores rewards and noise and picks a longest nonempty
compatible queue; ``priority`` ranks candidates by reward alone.  In every
rule, ties are broken uniformly at random over the full argmax set.

``match_longest`` coincides with ``max_weight`` under exact measurements and
rewards that depend only on the arriving class (a constant shift never moves
an argmax), which the tests exercise.  A reward-only priority rule is NOT the
``max_weight`` limit of infinitely pessimistic measurements; it is its own
rule here, and infinite scores are never manipulated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnsupportedModeError
from .model import ModelSpec, is_admissible
from .noise import sample

__all__ = ["PolicyKind", "MatchDistribution", "mw_score", "candidate_classes",
           "choose_match", "match_distribution"]


class PolicyKind(str, enum.Enum):
    MAX_WEIGHT = "max_weight"
    MATCH_LONGEST = "match_longest"
    PRIORITY = "priority"

    @classmethod
    def parse(cls, name: str) -> "PolicyKind":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise InputError(f"unknown policy {name!r} (expected one of: {valid})") from None


def mw_score(x, j: int, i: int, u: float, w: float) -> float:
    """Max-weight score of matching arriving class ``j`` to stored class ``i``.

    The measured queue length ``x[i] + u`` is clamped at zero (a sensor never
    reports a negative backlog) before the pair reward is added.
    """
    return max(float(x[i]) + u, 0.0) + w


def candidate_classes(spec: ModelSpec, x, j: int) -> list[int]:
    """Compatible classes with a nonempty queue, in increasing class order."""
    return [i for i in sorted(spec.graph.adj[j]) if x[i] > 0]


def _scores(kind: PolicyKind, spec: ModelSpec, x, j: int, cands: list[int],
            rng: np.random.Generator | None) -> list[float]:
    if kind is PolicyKind.MATCH_LONGEST:
        return [float(x[i]) for i in cands]
    if kind is PolicyKind.PRIORITY:
        return [spec.rewards[(j, i)] for i in cands]
    scores = []
    for i in cands:
        u = sample(spec.noise[(j, i)], rng)
        scores.append(mw_score(x, j, i, u, spec.rewards[(j, i)]))
    return scores


def choose_match(kind: PolicyKind, spec: ModelSpec, x, j: int,
                 rng: np.random.Generator) -> int | None:
    """Class the arriving ``j`` item is matched to, or None to store it.

    Max-weight draws one fresh noise value per candidate per arrival; nothing
    is cached across arrivals.  Exact score ties (sums and maxima of the same
    inputs are reproducible in floating point) are broken uniformly.
    """
    if not is_admissible(spec, x):
        raise InputError("queue state violates admissibility")
    cands = candidate_classes(spec, x, j)
    if not cands:
        return None
    scores = _scores(kind, spec, x, j, cands, rng)
    best = max(scores)
    arg = [i for i, s in zip(cands, scores) if s == best]
    if len(arg) == 1:
        return arg[0]
    return arg[int(rng.integers(len(arg)))]


@dataclass(frozen=True)
class MatchDistribution:
    """Per-class match probabilities for one (state, arriving class) pair.

    ``probs[i]`` is the probability the arriving item is matched to class
    ``i``; all zero when it would be stored.  ``stderr`` carries Monte Carlo
    standard errors and is None for exact evaluations.
    """

    probs: np.ndarray
    stderr: np.ndarray | None = None


def match_distribution(
    kind: PolicyKind,
    spec: ModelSpec,
    x,
    j: int,
    mode: str = "exact",
    samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> MatchDistribution:
    """Distribution of :func:`choose_match` over its internal randomness.

    ``mode="exact"`` requires deterministic scores (always true for
    ``match_longest`` and ``priority``; for ``max_weight`` every candidate
    noise must be a point mass) and returns the uniform law on the argmax
    set.  ``mode="mc"`` estimates the law from ``samples`` independent
    scoring rounds and reports standard errors.
    """
    if not is_admissible(spec, x):
        raise InputError("queue state violates admissibility")
    n = spec.n
    cands = candidate_classes(spec, x, j)
    if not cands:
        return MatchDistribution(np.zeros(n), None)

    if mode == "exact":
        if kind is PolicyKind.MAX_WEIGHT:
            bad = [i for i in cands if not spec.noise[(j, i)].is_dirac]
            if bad:
                raise UnsupportedModeError(
                    f"exact match distribution needs point-mass noise; classes {bad} are not"
                )
            scores = [mw_score(x, j, i, spec.noise[(j, i)].atom, spec.rewards[(j, i)])
                      for i in cands]
        else:
            scores = _scores(kind, spec, x, j, cands, None)
        best = max(scores)
        arg = [i for i, s in zip(cands, scores) if s == best]
        probs = np.zeros(n)
        probs[arg] = 1.0 / len(arg)
        return MatchDistribution(probs, None)

    if mode != "mc":
        raise InputError(f"mode must be 'exact' or 'mc', got {mode!r}")
    if samples is None or samples < 1:
        raise InputError("mc mode needs a positive sample count")
    if rng is None:
        raise InputError("mc mode needs a random generator")

    k = len(cands)
    score_mat = np.empty((samples, k))
    for col, i in enumerate(cands):
        ns = spec.noise[(j, i)]
        if kind is not PolicyKind.MAX_WEIGHT or ns.is_dirac:
            u = np.full(samples, ns.atom if kind is PolicyKind.MAX_WEIGHT else 0.0)
        else:
            u = rng.uniform(ns.a, ns.b, samples)
        if kind is PolicyKind.MATCH_LONGEST:
            score_mat[:, col] = float(x[i])
        elif kind is PolicyKind.PRIORITY:
            score_mat[:, col] = spec.rewards[(j, i)]
        else:
            score_mat[:, col] = np.maximum(float(x[i]) + u, 0.0) + spec.rewards[(j, i)]
    row_best = score_mat.max(axis=1, keepdims=True)
    mask = score_mat == row_best
    weights = mask / mask.sum(axis=1, keepdims=True)
    probs = np.zeros(n)
    stderr = np.zeros(n)
    mean = weights.mean(axis=0)
    var = weights.var(axis=0, ddof=1) if samples > 1 else np.zeros(k)
    probs[cands] = mean
    stderr[cands] = np.sqrt(var / samples)
    return MatchDistribution(probs, stderr)
