"""Model assembly and stability predicates.

A model bundles the compatibility graph with per-class arrival intensities,
reneging rates, match rewards and decision-noise distributions.  Rewards and
noise are indexed by ordered pairs ``(j, i)``: ``j`` is the class of the
arriving item, ``i`` the class of the stored candidate, and no symmetry is
assumed between the two directions of an edge.

Queue contents are plain integer count vectors.  A vector is admissible when
no two adjacent classes are simultaneously nonempty, i.e. its support is an
independent set; every reachable state of the dynamics satisfies this.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .graph import Graph, is_bipartite, is_connected, max_deficit, neighborhood
from .noise import DIRAC_ZERO, NoiseSpec

__all__ = [
    "ModelSpec",
    "NcondResult",
    "validate",
    "is_admissible",
    "arrival_probabilities",
    "ncond_verdict",
    "check_ncond",
    "is_stabilizable",
    "find_stabilizing_lambda",
    "load_model",
    "dump_model",
]

Pair = tuple[int, int]


def _ordered_pairs(graph: Graph) -> tuple[Pair, ...]:
    pairs = []
    for i, j in graph.edges:
        pairs.append((i, j))
        pairs.append((j, i))
    return tuple(sorted(pairs))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable model tuple: graph, rates, rewards and noise.

    Build instances through :meth:`create`, which normalizes array types and
    fills per-pair defaults.  ``rewards[(j, i)]`` is the revenue of matching
    an arriving ``j`` item to a stored ``i`` item; ``noise[(j, i)]`` the
    error distribution applied to the measured queue length of ``i`` in that
    decision.
    """

    graph: Graph
    lam: np.ndarray
    gamma: np.ndarray
    rewards: dict[Pair, float]
    noise: dict[Pair, NoiseSpec]

    @classmethod
    def create(
        cls,
        graph: Graph,
        lam: Sequence[float],
        gamma: Sequence[float] | None = None,
        rewards: Mapping[Pair, float] | float | None = None,
        noise: Mapping[Pair, NoiseSpec] | NoiseSpec | None = None,
    ) -> "ModelSpec":
        lam_arr = np.array(lam, dtype=float)
        gamma_arr = (
            np.zeros(graph.n) if gamma is None else np.array(gamma, dtype=float)
        )
        lam_arr.flags.writeable = False
        gamma_arr.flags.writeable = False
        pairs = _ordered_pairs(graph)
        if rewards is None:
            rewards = 0.0
        if isinstance(rewards, (int, float)):
            reward_map = {p: float(rewards) for p in pairs}
        else:
            reward_map = {p: float(rewards.get(p, 0.0)) for p in pairs}
        if noise is None:
            noise = DIRAC_ZERO
        if isinstance(noise, NoiseSpec):
            noise_map = {p: noise for p in pairs}
        else:
            noise_map = {p: noise.get(p, DIRAC_ZERO) for p in pairs}
        return cls(graph, lam_arr, gamma_arr, reward_map, noise_map)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def lambda_total(self) -> float:
        return float(self.lam.sum())

    @property
    def ordered_pairs(self) -> tuple[Pair, ...]:
        return _ordered_pairs(self.graph)

    @property
    def reneging_classes(self) -> tuple[int, ...]:
        """Classes whose items abandon (positive reneging rate)."""
        return tuple(int(i) for i in np.flatnonzero(self.gamma > 0.0))

    @property
    def patient_classes(self) -> tuple[int, ...]:
        """Classes whose items wait forever (zero reneging rate)."""
        return tuple(int(i) for i in np.flatnonzero(self.gamma == 0.0))

    @property
    def w_check(self) -> float:
        """Largest reward over all ordered pairs (0 for an edgeless graph)."""
        return max(self.rewards.values(), default=0.0)

    @property
    def noise_bound(self) -> float:
        """Smallest B bounding every error distribution to [-B, B]."""
        return max((ns.bound for ns in self.noise.values()), default=0.0)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "lambda": [float(v) for v in self.lam],
            "gamma": [float(v) for v in self.gamma],
            "rewards": {f"{j},{i}": w for (j, i), w in sorted(self.rewards.items())},
            "noise": {f"{j},{i}": ns.to_dict() for (j, i), ns in sorted(self.noise.items())},
        }


def validate(spec: ModelSpec) -> list[str]:
    """Collect invariant violations; an empty list means the model is usable.

    Checks rate positivity and finiteness, exact reward/noise coverage of the
    ordered compatible pairs, reward non-negativity, and graph connectivity.
    """
    out: list[str] = []
    g = spec.graph
    if spec.lam.shape != (g.n,):
        out.append(f"lambda must have length {g.n}")
    else:
        for i, v in enumerate(spec.lam):
            if not math.isfinite(v) or v <= 0.0:
                out.append(f"lambda[{i}] must be > 0 and finite, got {v}")
    if spec.gamma.shape != (g.n,):
        out.append(f"gamma must have length {g.n}")
    else:
        for i, v in enumerate(spec.gamma):
            if not math.isfinite(v) or v < 0.0:
                out.append(f"gamma[{i}] must be >= 0 and finite, got {v}")
    pairs = set(_ordered_pairs(g))
    missing = pairs - set(spec.rewards)
    extra = set(spec.rewards) - pairs
    if missing:
        out.append(f"rewards incomplete: missing pairs {sorted(missing)}")
    if extra:
        out.append(f"rewards defined off the edge set: {sorted(extra)}")
    for p, w in spec.rewards.items():
        if p in pairs and (not math.isfinite(w) or w < 0.0):
            out.append(f"rewards[{p}] must be >= 0 and finite, got {w}")
    missing = pairs - set(spec.noise)
    extra = set(spec.noise) - pairs
    if missing:
        out.append(f"noise incomplete: missing pairs {sorted(missing)}")
    if extra:
        out.append(f"noise defined off the edge set: {sorted(extra)}")
    if not is_connected(g):
        out.append("graph is not connected (split it into its components first)")
    return out


def _as_state(spec: ModelSpec, x: Sequence[int]) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (spec.n,):
        raise InputError(f"state must have length {spec.n}, got shape {arr.shape}")
    if np.any(arr < 0):
        raise InputError("queue counts must be non-negative")
    return arr


def is_admissible(spec: ModelSpec, x: Sequence[int]) -> bool:
    """True when no edge has both endpoint queues nonempty."""
    arr = _as_state(spec, x)
    return all(not (arr[i] and arr[j]) for i, j in spec.graph.edges)


def arrival_probabilities(spec: ModelSpec) -> np.ndarray:
    """Probability that the next arriving item belongs to each class."""
    return np.asarray(spec.lam) / spec.lambda_total


@dataclass(frozen=True)
class NcondResult:
    """Verdict of the subcriticality check.

    ``eta`` is the minimal slack ``lam(N(I)) - lam(I)`` over nonempty
    independent sets ``I`` of patient (non-reneging) classes, or 0 when there
    are no patient classes and the condition is vacuous.  When the condition
    fails, ``eta`` is the raw (non-positive) slack of the worst set and must
    not be fed into bound formulas; ``witness`` is then a violating set,
    otherwise a tightest one.
    """

    holds: bool
    eta: float
    witness: frozenset[int] | None


def ncond_verdict(graph: Graph, lam: Sequence[float], gamma: Sequence[float]) -> NcondResult:
    """Subcriticality check from raw arrays (no reward/noise data needed).

    The model is stable under any max-weight style policy exactly when every
    nonempty independent set of patient classes receives strictly less
    arrival intensity than its neighborhood.  Ties (zero slack) count as
    failures, matching the strict inequality.
    """
    gamma_arr = np.asarray(gamma, dtype=float)
    patient = [int(i) for i in np.flatnonzero(gamma_arr == 0.0)]
    if not patient:
        return NcondResult(True, 0.0, None)
    worst, witness = max_deficit(graph, lam, patient)
    return NcondResult(worst < 0.0, -worst, witness)


def check_ncond(spec: ModelSpec) -> NcondResult:
    """Validate the model, then run the subcriticality check."""
    problems = validate(spec)
    if problems:
        raise InputError("; ".join(problems))
    return ncond_verdict(spec.graph, spec.lam, spec.gamma)


def is_stabilizable(graph: Graph, gamma: Sequence[float]) -> bool:
    """Whether some arrival vector makes the model stable.

    True exactly when the graph is non-bipartite or at least one class
    reneges.  Requires a connected graph.
    """
    if not is_connected(graph):
        raise InputError("stabilizability is defined for connected graphs")
    gamma_arr = np.asarray(gamma, dtype=float)
    if gamma_arr.shape != (graph.n,):
        raise InputError(f"gamma must have length {graph.n}")
    bipartite, _ = is_bipartite(graph)
    return (not bipartite) or bool(np.any(gamma_arr > 0.0))


def find_stabilizing_lambda(
    graph: Graph,
    gamma: Sequence[float],
    rng: np.random.Generator,
    max_tries: int = 10_000,
) -> np.ndarray | None:
    """Rejection-sample an arrival vector satisfying the subcriticality check.

    Draws each intensity uniformly from [0, 10] (clamped away from zero by
    1e-6) until the check passes; returns None after ``max_tries`` failures,
    which is certain for unstabilizable pairs.
    """
    for _ in range(max_tries):
        lam = np.maximum(rng.uniform(0.0, 10.0, graph.n), 1e-6)
        if ncond_verdict(graph, lam, gamma).holds:
            return lam
    return None


def _parse_pair_key(key: str, n: int) -> Pair:
    try:
        j_str, i_str = key.split(",")
        j, i = int(j_str), int(i_str)
    except ValueError as exc:
        raise InputError(f"pair key {key!r} is not of the form 'j,i'") from exc
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"pair key {key!r} out of range for n={n}")
    return j, i


def _pair_section(section, n, pairs, default_value, convert):
    """Expand a JSON rewards/noise section into a full per-pair mapping."""
    if section is None:
        return {p: default_value for p in pairs}
    default = convert(section["default"]) if "default" in section else default_value
    out = {p: default for p in pairs}
    for key, raw in section.items():
        if key == "default":
            continue
        pair = _parse_pair_key(key, n)
        if pair not in out:
            raise InputError(f"pair key {key!r} is not a compatible ordered pair")
        out[pair] = convert(raw)
    return out


def model_from_dict(data: dict) -> tuple[ModelSpec, str | None]:
    """Build a model (and optional policy name) from its JSON object form."""
    if "graph" not in data:
        raise InputError("model object needs a 'graph' field")
    graph = Graph.from_dict(data["graph"])
    if "lambda" not in data:
        raise InputError("model object needs a 'lambda' field")
    lam = data["lambda"]
    gamma = data.get("gamma", [0.0] * graph.n)
    pairs = _ordered_pairs(graph)
    rewards = _pair_section(data.get("rewards"), graph.n, pairs, 0.0, float)
    noise = _pair_section(data.get("noise"), graph.n, pairs, DIRAC_ZERO, NoiseSpec.from_dict)
    spec = ModelSpec.create(graph, lam, gamma, rewards, noise)
    policy = None
    if "policy" in data:
        policy = data["policy"].get("kind")
        if not isinstance(policy, str):
            raise InputError("policy object needs a string 'kind' field")
    return spec, policy


def load_model(path: str) -> tuple[ModelSpec, str | None]:
    """Read a model JSON file; returns the model and the optional policy name."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: top-level JSON value must be an object")
    return model_from_dict(data)


def dump_model(spec: ModelSpec, path: str, policy: str | None = None) -> None:
    """Write the model (optionally with a default policy) as sorted JSON."""
    data = spec.to_dict()
    if policy is not None:
        data["policy"] = {"kind": policy}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
