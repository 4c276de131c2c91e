"""Benchmark objectives behind a single minimize-this-scalar interface.

Native boxes differ per function; the optimization loop always works in
the unit hypercube and maps affinely to the native box.  The mountain-car
task wraps a short episodic simulation of the classic continuous dynamics
behind the same interface, with a seeded generator driving the start
positions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import partial

import numpy as np


@dataclass(frozen=True)
class Objective:
    """A scalar cost to minimize over a native box."""

    name: str
    dim: int
    bounds: np.ndarray  # (d, 2) native box
    fn: object  # callable(x_native) or callable(x_native, rng) when stochastic
    stochastic: bool = False
    known_optimum: float | None = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(self.dim, 2)
        object.__setattr__(self, "bounds", b)

    def to_native(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return lo + u * (hi - lo)

    def from_native(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return (x - lo) / (hi - lo)

    def evaluate(self, x_native, rng=None) -> float:
        if self.stochastic:
            if rng is None:
                raise ValueError(f"{self.name} is stochastic and needs a generator")
            return float(self.fn(np.asarray(x_native, dtype=float), rng=rng))
        return float(self.fn(np.asarray(x_native, dtype=float)))


def _check_box(x, lo, hi, name):
    x = np.asarray(x, dtype=float)
    if x.shape != np.shape(lo) and np.ndim(lo) > 0:
        raise ValueError(f"{name}: wrong dimension")
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError(f"{name}: point outside the native box")
    return x


def gramacy(x) -> float:
    """x1 * exp(-x1^2 - x2^2) on [-2, 6]^2; sharp dip near the origin and an
    essentially flat plateau everywhere else."""
    x = _check_box(x, np.array([-2.0, -2.0]), np.array([6.0, 6.0]), "gramacy")
    return float(x[0] * math.exp(-x[0] * x[0] - x[1] * x[1]))


_BRANIN_A = 1.0
_BRANIN_B = 5.1 / (4.0 * math.pi ** 2)
_BRANIN_C = 5.0 / math.pi
_BRANIN_R = 6.0
_BRANIN_S = 10.0
_BRANIN_T = 1.0 / (8.0 * math.pi)


def branin(x) -> float:
    x = _check_box(x, np.array([-5.0, 0.0]), np.array([10.0, 15.0]), "branin")
    x1, x2 = x
    return float(
        _BRANIN_A * (x2 - _BRANIN_B * x1 ** 2 + _BRANIN_C * x1 - _BRANIN_R) ** 2
        + _BRANIN_S * (1.0 - _BRANIN_T) * math.cos(x1)
        + _BRANIN_S
    )


_HARTMANN6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def hartmann6(x) -> float:
    x = _check_box(x, np.zeros(6), np.ones(6), "hartmann6")
    inner = np.einsum("ij,ij->i", _HARTMANN6_A, (x - _HARTMANN6_P) ** 2)
    return float(-np.dot(_HARTMANN6_ALPHA, np.exp(-inner)))


def michalewicz(x, m: int = 10) -> float:
    x = np.asarray(x, dtype=float)
    _check_box(x, 0.0, math.pi, "michalewicz")
    i = np.arange(1, x.shape[0] + 1)
    return float(-np.sum(np.sin(x) * np.sin(i * x * x / math.pi) ** (2 * m)))


# ---------------------------------------------------------------------------
# mountain car

P_MIN, P_MAX = -1.2, 0.6
V_LIM = 0.07
GOAL = 0.5
FORCE = 0.001
GRAVITY = 0.0025


@dataclass(frozen=True)
class MountainCarTask:
    horizon: int = 500
    episodes_per_eval: int = 5
    epsilon_pi: float = 1e-2


def policy_weights(w01, epsilon_pi: float = 1e-2) -> np.ndarray:
    """Unbound the [0,1]^7 policy parameters through the tangent transform."""
    w01 = np.asarray(w01, dtype=float)
    if np.any(w01 < 0.0) or np.any(w01 > 1.0):
        raise ValueError("policy parameters must lie in the unit hypercube")
    return np.tan((math.pi - epsilon_pi) * w01 - math.pi / 2.0)


def simulate_episode(policy, p0: float, horizon: int) -> int:
    """Run the continuous mountain-car dynamics under a policy (p, v) -> a.

    Returns the step count at which the goal position was reached, or the
    horizon when it was not.
    """
    p, v = float(p0), 0.0
    for t in range(1, horizon + 1):
        a = min(1.0, max(-1.0, float(policy(p, v))))
        v += FORCE * a - GRAVITY * math.cos(3.0 * p)
        v = min(V_LIM, max(-V_LIM, v))
        p += v
        if p < P_MIN:
            p, v = P_MIN, 0.0
        if p >= GOAL:
            return t
    return horizon


def mountain_car_objective(w01, task: MountainCarTask, rng) -> float:
    """Mean steps-to-goal of the linear-perceptron policy, to be minimized.

    The action is tanh of a linear combination of the features
    (1, p, v, p^2, v^2, p*v, |v|); episodes start from rest at a position
    drawn uniformly from [-0.6, -0.4].
    """
    w = policy_weights(w01, task.epsilon_pi)
    w0, w1, w2, w3, w4, w5, w6 = (float(c) for c in w)

    def policy(p: float, v: float) -> float:
        return math.tanh(w0 + w1 * p + w2 * v + w3 * p * p + w4 * v * v + w5 * p * v + w6 * abs(v))

    starts = rng.uniform(-0.6, -0.4, task.episodes_per_eval)
    steps = [simulate_episode(policy, p0, task.horizon) for p0 in starts]
    return float(np.mean(steps))


# ---------------------------------------------------------------------------
# registry

_STANDARD = {
    "gramacy": dict(
        dim=2,
        bounds=[[-2.0, 6.0], [-2.0, 6.0]],
        fn=gramacy,
        known_optimum=-(1.0 / math.sqrt(2.0)) * math.exp(-0.5),
    ),
    "branin": dict(
        dim=2,
        bounds=[[-5.0, 10.0], [0.0, 15.0]],
        fn=branin,
        known_optimum=0.397887,
    ),
    "hartmann6": dict(
        dim=6,
        bounds=[[0.0, 1.0]] * 6,
        fn=hartmann6,
        known_optimum=-3.32237,
    ),
}

_MICHALEWICZ_OPTIMA = {2: -1.8013, 5: -4.687658, 10: -9.66015}

_MICHALEWICZ_RE = re.compile(r"^michalewicz(?:-d(\d+))?(?:-m(\d+))?$")


def get_objective(name: str, task: MountainCarTask | None = None) -> Objective:
    """Look up an objective by registry name.

    Names: ``gramacy``, ``branin``, ``hartmann6``, ``mountain-car`` and the
    parameterized ``michalewicz-d<k>-m<j>`` (defaults d=10, m=10).
    """
    if name in _STANDARD:
        entry = _STANDARD[name]
        return Objective(name=name, stochastic=False, **entry)
    m = _MICHALEWICZ_RE.match(name)
    if m:
        d = int(m.group(1)) if m.group(1) else 10
        steep = int(m.group(2)) if m.group(2) else 10
        if d < 1 or steep < 1:
            raise ValueError(f"bad michalewicz parameters in {name!r}")
        return Objective(
            name=name,
            dim=d,
            bounds=[[0.0, math.pi]] * d,
            fn=partial(michalewicz, m=steep),
            known_optimum=_MICHALEWICZ_OPTIMA.get(d),
        )
    if name == "mountain-car":
        task = task or MountainCarTask()
        return Objective(
            name=name,
            dim=7,
            bounds=[[0.0, 1.0]] * 7,
            fn=partial(mountain_car_objective, task=task),
            stochastic=True,
        )
    raise KeyError(f"unknown objective {name!r}")


def registry_names() -> list[str]:
    return sorted(_STANDARD) + ["michalewicz-d<k>-m<j>", "mountain-car"]
