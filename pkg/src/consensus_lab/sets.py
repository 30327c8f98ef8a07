"""Closed convex sets with Euclidean projection and set-regularity machinery.

Halfspaces, hyperplanes, boxes, and balls project in closed form;
polyhedra and general intersections project through Dykstra's alternating
scheme, which converges to the exact nearest point of the intersection.
Regularity constants (``dist(x, X) <= r * max_i dist(x, X_i)`` over a
region) are estimated either by sampling (a certified lower bound) or from
an interior ball via ``r = max_{y in Y} ||y - x_bar|| / theta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import VALUE_SLACK, CertificateRecord, bounded
from .seeding import substream

FEASIBILITY_TOL = 1e-10
DYKSTRA_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 10 ** 5


class DykstraNotConverged(RuntimeError):
    """Iterate displacement stayed above tolerance; intersection may be empty."""


class YNotInSet(ValueError):
    pass


class NoInformativeSamples(RuntimeError):
    """Every sample fell inside the intersection, so no ratio is defined."""


class InteriorBallNotContained(ValueError):
    pass


class InfeasiblePoint(ValueError):
    pass


class ConvexSet:
    """Marker base class; concrete sets implement ``project`` and ``violation``."""

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def violation(self, x: np.ndarray) -> float:
        """Distance-scaled infeasibility measure; zero inside the set."""
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        return self.violation(x) <= tol


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Halfspace(ConvexSet):
    """``{x : a.x <= b}``"""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _vec(self.a)
        if np.linalg.norm(a) == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def project(self, x):
        x = _vec(x)
        gap = float(self.a @ x) - self.b
        if gap <= 0.0:
            return x.copy()
        return x - (gap / float(self.a @ self.a)) * self.a

    def violation(self, x):
        gap = float(self.a @ _vec(x)) - self.b
        return max(0.0, gap / float(np.linalg.norm(self.a)))


@dataclass(frozen=True)
class Hyperplane(ConvexSet):
    """``{x : a.x = b}``"""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _vec(self.a)
        if np.linalg.norm(a) == 0.0:
            raise ValueError("hyperplane normal must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def project(self, x):
        x = _vec(x)
        gap = float(self.a @ x) - self.b
        return x - (gap / float(self.a @ self.a)) * self.a

    def violation(self, x):
        return abs(float(self.a @ _vec(x)) - self.b) / float(np.linalg.norm(self.a))


@dataclass(frozen=True)
class Box(ConvexSet):
    """Coordinate box; ``+-inf`` bounds leave a side open."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if lo.shape != hi.shape:
            raise ValueError("bound shapes differ")
        if np.isnan(lo).any() or np.isnan(hi).any() or (lo > hi).any():
            raise ValueError("need lower <= upper coordinatewise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def project(self, x):
        return np.clip(_vec(x), self.lower, self.upper)

    def violation(self, x):
        x = _vec(x)
        return float(np.linalg.norm(x - np.clip(x, self.lower, self.upper)))


@dataclass(frozen=True)
class Ball(ConvexSet):
    """Closed Euclidean ball of positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _vec(self.center)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def project(self, x):
        x = _vec(x)
        d = x - self.center
        r = float(np.linalg.norm(d))
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * d

    def violation(self, x):
        return max(0.0, float(np.linalg.norm(_vec(x) - self.center)) - self.radius)


@dataclass(frozen=True)
class Polyhedron(ConvexSet):
    """Finite intersection of halfspaces, projected by Dykstra's scheme."""

    halfspaces: tuple

    def __post_init__(self):
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        if not self.halfspaces:
            raise ValueError("polyhedron needs at least one halfspace")

    def project(self, x):
        return dykstra_project(self.halfspaces, x)

    def violation(self, x):
        return max(h.violation(x) for h in self.halfspaces)


@dataclass(frozen=True)
class Intersection(ConvexSet):
    """Intersection of arbitrary member sets, projected by Dykstra's scheme."""

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("intersection needs at least one member")

    def project(self, x):
        if len(self.members) == 1:
            return self.members[0].project(x)
        return dykstra_project(self.members, x)

    def violation(self, x):
        return max(s.violation(x) for s in self.members)


def dykstra_project(sets, x, tol: float = DYKSTRA_TOL,
                    max_sweeps: int = DYKSTRA_MAX_SWEEPS) -> np.ndarray:
    """Exact Euclidean projection onto an intersection via Dykstra increments.

    Unlike plain cyclic projections, carrying per-set increments makes the
    iterates converge to the true nearest point.  The iterate can plateau
    for many sweeps while the increments rebalance, so a sweep only counts
    as converged when its displacement is at most ``tol`` AND the point is
    feasible for every member within 1e-10; a sweep that changes neither
    the iterate nor any increment is a fixed point of the whole recursion
    and ends the search immediately.
    """
    sets = tuple(sets)
    x = _vec(x)
    increments = [np.zeros_like(x) for _ in sets]
    current = x.copy()
    worst = np.inf
    for _ in range(max_sweeps):
        previous = current.copy()
        inc_change = 0.0
        for idx, s in enumerate(sets):
            target = current + increments[idx]
            projected = s.project(target)
            new_inc = target - projected
            inc_change = max(inc_change, float(np.abs(new_inc - increments[idx]).max()))
            increments[idx] = new_inc
            current = projected
        displacement = float(np.abs(current - previous).max())
        if displacement <= tol:
            worst = max(s.violation(current) for s in sets)
            if worst <= FEASIBILITY_TOL:
                return current
            if inc_change == 0.0:
                break  # nothing can change anymore; the intersection is unreachable
    raise DykstraNotConverged(
        f"stopped with member violation {worst:.3e}; intersection may be "
        "empty or ill-conditioned")


def distance(s: ConvexSet, x) -> float:
    """``||x - P_S(x)||``."""
    x = _vec(x)
    return float(np.linalg.norm(x - s.project(x)))


def check_nonexpansive(s: ConvexSet, x, y) -> CertificateRecord:
    """Verify ``||P_S(x) - y|| <= ||x - y||`` for a member point ``y``."""
    x, y = _vec(x), _vec(y)
    if s.violation(y) > FEASIBILITY_TOL:
        raise YNotInSet(f"y violates the set by {s.violation(y):.3e}")
    lhs = float(np.linalg.norm(s.project(x) - y))
    rhs = float(np.linalg.norm(x - y))
    return bounded("projection-nonexpansive", 0, None, lhs, rhs, slack=1.0 + 1e-10)


def check_variational_inequality(s: ConvexSet, x, y) -> CertificateRecord:
    """Verify ``(P_S(x) - x).(y - P_S(x)) >= 0`` for a member point ``y``."""
    x, y = _vec(x), _vec(y)
    if s.violation(y) > FEASIBILITY_TOL:
        raise YNotInSet(f"y violates the set by {s.violation(y):.3e}")
    p = s.project(x)
    inner = float((p - x) @ (y - p))
    return CertificateRecord(check="projection-variational", t=0, k=None,
                             lhs=-inner, rhs=1e-10, slack=1.0,
                             passed=bool(inner >= -1e-10))


@dataclass(frozen=True)
class RegularityEstimate:
    """Regularity constant estimate; ``r_hat >= 1`` always.

    Sampling gives a lower bound on any valid constant over the sampled
    region; the interior-ball formula gives a usable upper-bound constant.
    """

    r_hat: float
    method: str
    samples: int
    skipped: int = 0
    theta: float | None = None
    x_bar: tuple | None = None

    def __post_init__(self):
        if self.r_hat < 1.0:
            raise ValueError("regularity constants are at least 1")

    def to_json_dict(self) -> dict:
        d = {"r_hat": self.r_hat, "method": self.method,
             "samples": self.samples, "skipped": self.skipped}
        if self.theta is not None:
            d["theta"] = self.theta
        if self.x_bar is not None:
            d["x_bar"] = list(self.x_bar)
        return d


def _uniform_ball_point(rng: np.random.Generator, center: np.ndarray, radius: float) -> np.ndarray:
    n = center.shape[0]
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)
    return center + radius * rng.random() ** (1.0 / n) * direction


def regularity_sampling(sets, region: Ball, samples: int, seed: int) -> RegularityEstimate:
    """Largest observed ratio ``dist(x, X) / max_i dist(x, X_i)`` over samples from ``region``.

    Samples inside the intersection (max distance below 1e-9) carry no
    information and are skipped; if every sample is skipped the call fails.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sets = tuple(sets)
    intersection = Intersection(sets)
    rng = substream(seed, "regularity")
    r_hat = 1.0
    skipped = 0
    informative = 0
    for _ in range(samples):
        x = _uniform_ball_point(rng, region.center, region.radius)
        dmax = max(distance(s, x) for s in sets)
        if dmax <= 1e-9:
            skipped += 1
            continue
        informative += 1
        r_hat = max(r_hat, distance(intersection, x) / dmax)
    if informative == 0:
        raise NoInformativeSamples("all samples lie in the intersection")
    return RegularityEstimate(r_hat=float(r_hat), method="sampling",
                              samples=samples, skipped=skipped)


_SPHERE_CHECK_SEED = 0x5E7C0DE


def regularity_interior(sets, theta: float, x_bar, region: Ball) -> RegularityEstimate:
    """Regularity constant from an interior ball: ``(||c_Y - x_bar|| + radius_Y) / theta``.

    The ball of radius ``theta`` around ``x_bar`` must lie in every set;
    containment is checked by sampling the sphere at ``100 n`` points with a
    fixed deterministic stream, each required feasible within 1e-10.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    x_bar = _vec(x_bar)
    n = x_bar.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(_SPHERE_CHECK_SEED))
    for _ in range(100 * n):
        direction = rng.normal(size=n)
        direction /= np.linalg.norm(direction)
        point = x_bar + theta * direction
        for s in sets:
            v = s.violation(point)
            if v > FEASIBILITY_TOL:
                raise InteriorBallNotContained(
                    f"sphere point violates a set by {v:.3e}")
    r = (float(np.linalg.norm(region.center - x_bar)) + region.radius) / theta
    return RegularityEstimate(r_hat=max(1.0, r), method="interior-formula",
                              samples=100 * n, skipped=0, theta=float(theta),
                              x_bar=tuple(map(float, x_bar)))


def spread_projection_bound(points, sets, phi, r: float,
                            intersection: ConvexSet | None = None) -> CertificateRecord:
    """Spread lower bound for feasible tuples under a regularity constant.

    For points ``x_i in X_i`` the maximal pairwise distance is at least
    ``1/(r+1)`` times the largest distance from any point to the projection
    of their ``phi``-weighted mean onto the intersection.
    """
    points = [_vec(p) for p in points]
    sets = tuple(sets)
    phi = _vec(phi)
    for idx, (p, s) in enumerate(zip(points, sets)):
        if s.violation(p) > FEASIBILITY_TOL:
            raise InfeasiblePoint(f"point {idx} violates its set by {s.violation(p):.3e}")
    target = intersection if intersection is not None else Intersection(sets)
    mean = sum(w * p for w, p in zip(phi, points))
    anchor = target.project(mean)
    lhs = max(float(np.linalg.norm(p - anchor)) for p in points) / (r + 1.0)
    rhs = max(float(np.linalg.norm(p - q)) for p in points for q in points)
    return bounded("regular-spread-bound", 0, None, lhs, rhs, slack=VALUE_SLACK)


def set_to_json_dict(s: ConvexSet) -> dict:
    def bound(v: float):
        return None if np.isinf(v) else float(v)

    if isinstance(s, Halfspace):
        return {"type": "halfspace", "a": list(map(float, s.a)), "b": s.b}
    if isinstance(s, Hyperplane):
        return {"type": "hyperplane", "a": list(map(float, s.a)), "b": s.b}
    if isinstance(s, Box):
        return {"type": "box", "lower": [bound(v) for v in s.lower],
                "upper": [bound(v) for v in s.upper]}
    if isinstance(s, Ball):
        return {"type": "ball", "center": list(map(float, s.center)), "radius": s.radius}
    if isinstance(s, Polyhedron):
        return {"type": "polyhedron",
                "halfspaces": [set_to_json_dict(h) for h in s.halfspaces]}
    if isinstance(s, Intersection):
        return {"type": "intersection",
                "members": [set_to_json_dict(m) for m in s.members]}
    raise TypeError(f"unknown set type {type(s)!r}")


def set_from_json_dict(d: dict) -> ConvexSet:
    """Parse the set-specification JSON; box bounds accept null or "inf"/"-inf"."""

    def bound(v, sign: float) -> float:
        if v is None:
            return sign * np.inf
        if isinstance(v, str):
            return float(v)
        return float(v)

    kind = d["type"]
    if kind == "halfspace":
        return Halfspace(np.array(d["a"], dtype=float), float(d["b"]))
    if kind == "hyperplane":
        return Hyperplane(np.array(d["a"], dtype=float), float(d["b"]))
    if kind == "box":
        lo = np.array([bound(v, -1.0) for v in d["lower"]])
        hi = np.array([bound(v, +1.0) for v in d["upper"]])
        return Box(lo, hi)
    if kind == "ball":
        return Ball(np.array(d["center"], dtype=float), float(d["radius"]))
    if kind == "polyhedron":
        return Polyhedron(tuple(set_from_json_dict(h) for h in d["halfspaces"]))
    if kind == "intersection":
        return Intersection(tuple(set_from_json_dict(mm) for mm in d["members"]))
    raise ValueError(f"unknown set type {kind!r}")
