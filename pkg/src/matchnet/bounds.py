"""Closed-form stationary bounds and generator drift evaluators.

Everything here is a pure formula evaluation on top of the model and the
exact match distributions.  The quadratic and cubic potentials come with
closed right-hand-side envelopes for their generator drift; the envelopes
dominate the exact generator pointwise, which the test suite checks by
enumeration.  Stationary-mean and variance bounds apply only under the
subcriticality condition, and the upper bounds additionally require no
reneging and bounded noise; out-of-scope requests raise typed errors rather
than returning misleading numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BoundNotApplicableError, InputError
from .model import ModelSpec, check_ncond, is_admissible, ncond_verdict
from .noise import u_kappa
from .policy import PolicyKind, match_distribution

__all__ = [
    "BoundsReport",
    "f_quadratic",
    "f_cubic",
    "exp_norm_potential",
    "eta_value",
    "rho_tilde",
    "lower_bound_mean",
    "upper_bound_mean",
    "upper_bound_variance",
    "drift_f2_rhs",
    "drift_f3_rhs",
    "generator_apply",
    "geometric_drift_parameters",
    "bounds_report",
]


def f_quadratic(x) -> float:
    """Sum of squared queue lengths."""
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def f_cubic(x) -> float:
    """Sum of cubed queue lengths."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x**3))


def exp_norm_potential(alpha: float) -> Callable[[Sequence[int]], float]:
    """Exponential potential ``exp(alpha * ||x||_2)``."""

    def f(x) -> float:
        return math.exp(alpha * float(np.linalg.norm(np.asarray(x, dtype=float))))

    return f


def eta_value(spec: ModelSpec) -> float:
    """Minimal stability slack (0 when every class reneges).

    May be non-positive when the stability condition fails; the drift
    envelopes remain valid with the raw value, the stationary bounds do not.
    """
    return ncond_verdict(spec.graph, spec.lam, spec.gamma).eta


def rho_tilde(spec: ModelSpec) -> np.ndarray:
    """Per-class load ``lam(i) / lam(N(i))`` of the single-queue comparison chain."""
    out = np.empty(spec.n)
    for i in range(spec.n):
        denom = float(spec.lam[sorted(spec.graph.adj[i])].sum()) if spec.graph.adj[i] else 0.0
        out[i] = math.inf if denom == 0.0 else float(spec.lam[i]) / denom
    return out


def _bd_mean(birth: float, service: float, gamma: float, rel_tol: float = 1e-12) -> float:
    """Stationary mean of the birth-death chain with death rate ``service + gamma*z``.

    Product-form weights are accumulated until the running weight is
    negligible against the mass collected so far; geometric decay (when the
    load is below one) or factorial decay (any positive ``gamma``) guarantees
    termination.
    """
    if gamma == 0.0:
        rho = birth / service
        if rho >= 1.0:
            raise BoundNotApplicableError(
                f"comparison chain is overloaded (load {rho:.6g} >= 1)"
            )
        return rho / (1.0 - rho)
    w = 1.0
    mass = 1.0
    first = 0.0
    z = 0
    while True:
        z += 1
        w *= birth / (service + gamma * z)
        mass += w
        first += z * w
        if w / mass < rel_tol and z >= 8:
            return first / mass
        if z > 10_000_000:
            raise BoundNotApplicableError("comparison-chain series failed to converge")


def lower_bound_mean(spec: ModelSpec) -> float:
    """Stationary lower bound for the expected largest queue.

    Each queue dominates a birth-death chain with its own arrival rate and
    death rate ``lam(N(i)) + gamma(i) z``; the bound is the largest of those
    chains' stationary means (closed form ``rho/(1-rho)`` without reneging).
    Requires the subcriticality condition.
    """
    verdict = check_ncond(spec)
    if not verdict.holds:
        raise BoundNotApplicableError("lower bound requires the stability condition")
    best = 0.0
    for i in range(spec.n):
        service = float(spec.lam[sorted(spec.graph.adj[i])].sum())
        best = max(best, _bd_mean(float(spec.lam[i]), service, float(spec.gamma[i])))
    return best


def _require_upper_hypotheses(spec: ModelSpec) -> float:
    if spec.reneging_classes:
        raise BoundNotApplicableError("upper bounds require no reneging (all gamma zero)")
    verdict = check_ncond(spec)
    if not verdict.holds or verdict.eta <= 0.0:
        raise BoundNotApplicableError("upper bounds require the stability condition")
    return verdict.eta


def upper_bound_mean(spec: ModelSpec) -> float:
    """Stationary upper bound for the expected largest queue.

    Valid for max-weight style policies without reneging and with bounded
    noise: ``(lam(V)/eta) * (1/2 + (w_check + 2B) n)``.
    """
    eta = _require_upper_hypotheses(spec)
    lam_total = spec.lambda_total
    return lam_total / eta * (0.5 + (spec.w_check + 2.0 * spec.noise_bound) * spec.n)


def upper_bound_variance(spec: ModelSpec) -> float:
    """Stationary upper bound for the variance of the largest queue."""
    eta = _require_upper_hypotheses(spec)
    lam_total = spec.lambda_total
    blob = (spec.w_check + 2.0 * spec.noise_bound) * spec.n
    second = lam_total / eta * (
        1.0 / 3.0 + (1.0 / eta) * (1.0 + 2.0 * blob) * (lam_total + blob)
    )
    return second - lower_bound_mean(spec) ** 2


def drift_f2_rhs(spec: ModelSpec, x: Sequence[int], kappa: float) -> float:
    """Closed envelope dominating the generator drift of the quadratic potential.

    ``lam(V) + 2 sum_{i reneging} [-gamma_i x_i^2 + (gamma_i/2 + lam_i) x_i]
    + 2 [lam(V) (2 u_kappa + w_check) n + (kappa - eta) ||x||_inf]`` with the
    last bracket dropped when every class reneges.  Valid for any admissible
    state and any ``kappa`` in ``(0, lam(V))``; ``eta`` is the raw slack, so
    no stability assumption is needed.
    """
    if not is_admissible(spec, x):
        raise InputError("state violates admissibility")
    arr = np.asarray(x, dtype=float)
    lam_total = spec.lambda_total
    u_k = u_kappa(spec, kappa)
    eta = eta_value(spec)
    total = lam_total
    for i in spec.reneging_classes:
        g = float(spec.gamma[i])
        total += 2.0 * (-g * arr[i] ** 2 + (0.5 * g + float(spec.lam[i])) * arr[i])
    if spec.patient_classes:
        total += 2.0 * (
            lam_total * (2.0 * u_k + spec.w_check) * spec.n
            + (kappa - eta) * float(arr.max())
        )
    return total


def drift_f3_rhs(spec: ModelSpec, x: Sequence[int]) -> float:
    """Closed envelope dominating the generator drift of the cubic potential.

    ``lam(V) + 6 ||x||_inf [(w_check + 2B) n + lam(V)] - 3 eta ||x||_inf^2``;
    valid without reneging, with bounded noise, under the stability condition.
    """
    if spec.reneging_classes:
        raise BoundNotApplicableError("cubic drift envelope requires no reneging")
    verdict = check_ncond(spec)
    if not verdict.holds:
        raise BoundNotApplicableError("cubic drift envelope requires the stability condition")
    if not is_admissible(spec, x):
        raise InputError("state violates admissibility")
    arr = np.asarray(x, dtype=float)
    m = float(arr.max())
    blob = (spec.w_check + 2.0 * spec.noise_bound) * spec.n
    return spec.lambda_total + 6.0 * m * (blob + spec.lambda_total) - 3.0 * verdict.eta * m**2


def generator_apply(
    spec: ModelSpec,
    policy: PolicyKind,
    f: Callable[[np.ndarray], float],
    x: Sequence[int],
    nu_mode: str = "exact",
    mc_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Evaluate the Markov generator of the dynamics on ``f`` at state ``x``.

    Sums rate-weighted increments of ``f``: arrivals that find no compatible
    stored item add an item of their class; each nonempty class loses an item
    at its reneging rate plus the match inflow
    ``sum_j lam(j) * P(arriving j matches i)``.  Match probabilities come
    from :func:`matchnet.policy.match_distribution`, exactly by default or by
    Monte Carlo with ``nu_mode="mc"``.
    """
    arr = np.asarray(x, dtype=np.int64)
    if not is_admissible(spec, arr):
        raise InputError("state violates admissibility")
    supp = [int(i) for i in np.flatnonzero(arr)]
    blocked = set()
    for i in supp:
        blocked |= spec.graph.adj[i]
    fx = f(arr)
    total = 0.0
    for i in range(spec.n):
        if i not in blocked:
            y = arr.copy()
            y[i] += 1
            total += (f(y) - fx) * float(spec.lam[i])
    if supp:
        dep_rate = np.zeros(spec.n)
        for j in sorted(blocked):
            dist = match_distribution(
                policy, spec, arr, j, mode=nu_mode, samples=mc_samples, rng=rng
            )
            dep_rate += float(spec.lam[j]) * dist.probs
        for i in supp:
            y = arr.copy()
            y[i] -= 1
            rate = float(spec.gamma[i]) * int(arr[i]) + float(dep_rate[i])
            total += (f(y) - fx) * rate
    return total


def geometric_drift_parameters(
    spec: ModelSpec, kappa: float | None = None, margin: float = 0.5
) -> tuple[float, float]:
    """Exponent and radius making the exponential potential contract.

    Returns ``(alpha, radius)`` such that the generator applied to
    ``exp(alpha ||x||_2)`` is negative for every admissible state with
    Euclidean norm above ``radius``.  Derived from the quadratic envelope:
    the per-unit-norm decay coefficient is ``(eta - kappa)/sqrt(n)`` and
    ``alpha`` takes a ``margin`` fraction of it against the second-order
    term ``alpha^2 lam(V)``.  Requires the stability condition and
    ``kappa < eta`` (default ``eta/2``).
    """
    verdict = check_ncond(spec)
    if not verdict.holds:
        raise BoundNotApplicableError("geometric drift requires the stability condition")
    eta = verdict.eta
    if kappa is None:
        kappa = eta / 2.0
    if not 0.0 < kappa < eta:
        raise InputError(f"kappa must lie in (0, eta={eta:.6g}), got {kappa}")
    if not 0.0 < margin < 1.0:
        raise InputError(f"margin must lie in (0, 1), got {margin}")
    lam_total = spec.lambda_total
    gap = (eta - kappa) / math.sqrt(spec.n)
    alpha = margin * gap / lam_total
    numer = lam_total * (2.0 * u_kappa(spec, kappa) + spec.w_check) * spec.n + 0.5 * lam_total
    radius = numer / (gap - alpha * lam_total)
    return alpha, radius


@dataclass(frozen=True)
class BoundsReport:
    """All stationary bounds for one model, with applicability notes.

    Inapplicable entries are ``None`` and ``notes`` says why, so downstream
    formatting can print "n/a (reason)" instead of a number.
    """

    ncond_holds: bool
    eta: float
    witness: tuple[int, ...] | None
    kappa: float | None
    u_kappa: float | None
    w_check: float
    noise_bound: float
    rho_tilde: tuple[float, ...]
    lower_mean: float | None
    upper_mean: float | None
    upper_variance: float | None
    notes: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "ncond_holds": self.ncond_holds,
            "eta": self.eta,
            "witness": list(self.witness) if self.witness is not None else None,
            "kappa": self.kappa,
            "u_kappa": self.u_kappa,
            "w_check": self.w_check,
            "noise_bound": self.noise_bound,
            "rho_tilde": [v if math.isfinite(v) else None for v in self.rho_tilde],
            "lower_mean": self.lower_mean,
            "upper_mean": self.upper_mean,
            "upper_variance": self.upper_variance,
            "notes": dict(sorted(self.notes.items())),
        }


def bounds_report(spec: ModelSpec, kappa: float | None = None) -> BoundsReport:
    """Evaluate every bound that applies to ``spec``.

    ``kappa`` defaults to half the stability slack (the choice that balances
    the quadratic envelope); it only matters for the reported noise quantile.
    """
    verdict = check_ncond(spec)
    notes: dict[str, str] = {}
    rho = tuple(float(v) for v in rho_tilde(spec))

    if kappa is None and verdict.holds and verdict.eta > 0.0:
        kappa = verdict.eta / 2.0
    u_k = None
    if kappa is not None:
        u_k = u_kappa(spec, kappa)
    else:
        reason = "no default kappa without a positive stability slack"
        notes["kappa"] = reason
        notes["u_kappa"] = reason

    lower = upper = variance = None
    if not verdict.holds:
        reason = "requires the stability condition"
        notes["lower_mean"] = reason
        notes["upper_mean"] = reason
        notes["upper_variance"] = reason
    else:
        lower = lower_bound_mean(spec)
        try:
            upper = upper_bound_mean(spec)
            variance = upper_bound_variance(spec)
        except BoundNotApplicableError as exc:
            notes["upper_mean"] = str(exc)
            notes["upper_variance"] = str(exc)
    return BoundsReport(
        ncond_holds=verdict.holds,
        eta=verdict.eta,
        witness=tuple(sorted(verdict.witness)) if verdict.witness is not None else None,
        kappa=kappa,
        u_kappa=u_k,
        w_check=spec.w_check,
        noise_bound=spec.noise_bound,
        rho_tilde=rho,
        lower_mean=lower,
        upper_mean=upper,
        upper_variance=variance,
        notes=notes,
    )
