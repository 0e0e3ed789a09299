"""Exact stationary and transient analysis of small instances.

The admissible states with every queue at most ``N`` are enumerated, the jump
rates are assembled into a sparse generator matrix, and the stationary law is
obtained by a direct linear solve.  Arrivals that would push a queue past the
truncation level are suppressed (their rate stays on the diagonal), which
keeps the chain stochastic and irreducible; the induced bias decays with
``N`` and is controlled by comparing moments across truncation levels.

Match probabilities must be exact, so only point-mass noise is accepted.
This module is the ground truth the simulator and the closed-form bounds are
verified against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla
import scipy.stats

from .errors import InputError, NumericalError, SizeLimitError, UnsupportedModeError
from .graph import independent_sets, neighborhood
from .model import ModelSpec, validate
from .policy import PolicyKind, match_distribution

__all__ = [
    "TruncatedChain",
    "OracleMoments",
    "build",
    "stationary",
    "stationary_moments",
    "transient_distribution",
    "tv_distance",
    "report",
]

DENSE_SOLVE_LIMIT = 2000


@dataclass(frozen=True)
class TruncatedChain:
    """Generator matrix of the dynamics restricted to ``max queue <= level``.

    ``states`` holds the admissible count vectors row-aligned with the rate
    matrix ``Q`` (CSR, diagonal included, zero row sums); ``index`` maps a
    state tuple to its row.
    """

    spec: ModelSpec
    policy: PolicyKind
    level: int
    states: np.ndarray
    index: dict[tuple[int, ...], int]
    Q: sp.csr_matrix


def _enumerate_states(spec: ModelSpec, level: int, max_states: int) -> list[tuple[int, ...]]:
    supports = [frozenset()] + list(independent_sets(spec.graph))
    count = sum(level ** len(s) for s in supports)
    if count > max_states:
        raise SizeLimitError(
            f"truncated chain would have {count} states (cap {max_states})"
        )
    states: list[tuple[int, ...]] = []
    for s in supports:
        members = sorted(s)
        for levels in itertools.product(range(1, level + 1), repeat=len(members)):
            x = [0] * spec.n
            for v, lv in zip(members, levels):
                x[v] = lv
            states.append(tuple(x))
    return states


def build(
    spec: ModelSpec,
    policy: PolicyKind,
    level: int,
    max_states: int = 2_000_000,
) -> TruncatedChain:
    """Assemble the truncated generator for an exactly evaluable policy.

    Raises when the model fails validation, when any error distribution has
    spread (match probabilities would not be exact), or when the enumeration
    would exceed ``max_states``.
    """
    problems = validate(spec)
    if problems:
        raise InputError("; ".join(problems))
    if level < 1:
        raise InputError(f"truncation level must be >= 1, got {level}")
    if any(not ns.is_dirac for ns in spec.noise.values()):
        raise UnsupportedModeError(
            "exact chain analysis needs point-mass noise on every pair"
        )
    states = _enumerate_states(spec, level, max_states)
    index = {s: k for k, s in enumerate(states)}
    n = spec.n
    lam = [float(v) for v in spec.lam]
    gamma = [float(v) for v in spec.gamma]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def add(k: int, state: tuple[int, ...], rate: float) -> None:
        rows.append(k)
        cols.append(index[state])
        vals.append(rate)

    for k, x in enumerate(states):
        arr = np.array(x, dtype=np.int64)
        supp = [i for i in range(n) if x[i] > 0]
        blocked = neighborhood(spec.graph, supp) if supp else frozenset()
        for j in range(n):
            if j not in blocked:
                if x[j] + 1 <= level:
                    y = list(x)
                    y[j] += 1
                    add(k, tuple(y), lam[j])
                # else: arrival suppressed at the boundary
            else:
                dist = match_distribution(policy, spec, arr, j, mode="exact")
                for i in supp:
                    p = float(dist.probs[i])
                    if p > 0.0:
                        y = list(x)
                        y[i] -= 1
                        add(k, tuple(y), lam[j] * p)
        for i in supp:
            if gamma[i] > 0.0:
                y = list(x)
                y[i] -= 1
                add(k, tuple(y), gamma[i] * x[i])

    m = len(states)
    Q = sp.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsr()
    Q = Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())
    ncomp, _ = csgraph.connected_components(Q, directed=True, connection="strong")
    if ncomp != 1:
        raise NumericalError(
            f"truncated chain is not irreducible ({ncomp} strongly connected components)"
        )
    return TruncatedChain(
        spec=spec,
        policy=policy,
        level=level,
        states=np.array(states, dtype=np.int64),
        index=index,
        Q=Q.tocsr(),
    )


def stationary(
    chain: TruncatedChain,
    method: str = "auto",
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Solve for the stationary distribution (pi Q = 0, sum pi = 1).

    ``method`` is ``"dense"`` (LAPACK) for small chains, ``"sparse"``
    (sparse LU) for large ones, or ``"auto"``.  The result is checked against
    ``residual_tol`` in the max norm before returning.
    """
    m = chain.Q.shape[0]
    if method == "auto":
        method = "dense" if m <= DENSE_SOLVE_LIMIT else "sparse"
    b = np.zeros(m)
    b[m - 1] = 1.0
    if method == "dense":
        A = chain.Q.toarray().T
        A[m - 1, :] = 1.0
        try:
            pi = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"dense stationary solve failed: {exc}") from exc
    elif method == "sparse":
        A = chain.Q.T.tolil()
        A[m - 1, :] = 1.0
        try:
            lu = spla.splu(A.tocsc())
            pi = lu.solve(b)
        except RuntimeError as exc:
            raise NumericalError(f"sparse stationary solve failed: {exc}") from exc
    else:
        raise InputError(f"method must be auto, dense or sparse, got {method!r}")
    if np.any(pi < -1e-9):
        raise NumericalError("stationary solve produced substantially negative mass")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ chain.Q)))
    if residual > residual_tol:
        raise NumericalError(
            f"stationary residual {residual:.3e} exceeds tolerance {residual_tol:.1e}"
        )
    return pi


@dataclass(frozen=True)
class OracleMoments:
    """Stationary moments of the truncated chain."""

    mean_max: float
    second_moment_max: float
    variance_max: float
    mean_total: float


def stationary_moments(chain: TruncatedChain, pi: np.ndarray) -> OracleMoments:
    """Expectations of the largest queue (first two moments) and the total count."""
    mx = chain.states.max(axis=1).astype(float)
    tot = chain.states.sum(axis=1).astype(float)
    mean_max = float(pi @ mx)
    second = float(pi @ mx**2)
    return OracleMoments(
        mean_max=mean_max,
        second_moment_max=second,
        variance_max=second - mean_max**2,
        mean_total=float(pi @ tot),
    )


def _initial_distribution(chain: TruncatedChain, initial) -> np.ndarray:
    if isinstance(initial, np.ndarray) and initial.shape == (chain.Q.shape[0],):
        p0 = initial.astype(float)
        if abs(float(p0.sum()) - 1.0) > 1e-9 or np.any(p0 < 0.0):
            raise InputError("initial distribution must be a probability vector")
        return p0
    key = tuple(int(v) for v in initial)
    if key not in chain.index:
        raise InputError(f"initial state {key} is outside the truncated space")
    p0 = np.zeros(chain.Q.shape[0])
    p0[chain.index[key]] = 1.0
    return p0


def transient_distribution(
    chain: TruncatedChain,
    initial,
    t: float,
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """Law of the chain at time ``t`` by uniformization.

    ``initial`` is either a state tuple or a full probability vector.  The
    Poisson mixture over powers of the uniformized transition matrix is
    truncated once its remaining mass is below ``tail_tol`` and renormalized.
    """
    if t < 0.0:
        raise InputError(f"t must be >= 0, got {t}")
    p0 = _initial_distribution(chain, initial)
    if t == 0.0:
        return p0
    rate = float(np.max(-chain.Q.diagonal()))
    if rate <= 0.0:
        return p0
    P = sp.eye(chain.Q.shape[0], format="csr") + chain.Q / rate
    mu = rate * t
    kmax = int(scipy.stats.poisson.isf(tail_tol, mu)) + 1
    weights = scipy.stats.poisson.pmf(np.arange(kmax + 1), mu)
    weights /= weights.sum()
    acc = np.zeros_like(p0)
    v = p0.copy()
    for k in range(kmax + 1):
        acc += weights[k] * v
        if k < kmax:
            v = v @ P
    return acc


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two distributions on the same states."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def report(spec: ModelSpec, policy: PolicyKind, level: int) -> dict:
    """Build, solve and summarize in one call (the CLI's oracle output)."""
    chain = build(spec, policy, level)
    pi = stationary(chain)
    moments = stationary_moments(chain, pi)
    return {
        "states": int(chain.Q.shape[0]),
        "N": level,
        "mean_max": moments.mean_max,
        "var_max": moments.variance_max,
        "mean_total": moments.mean_total,
        "residual": float(np.max(np.abs(pi @ chain.Q))),
    }
