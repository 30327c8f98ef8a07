"""Weighted-averaging runs, unconstrained and projection-constrained.

A run simulates ``x_i(t+1) = sum_j A_ij(t) x_j(t)`` (optionally followed by
projection onto per-agent sets), records every intermediate quantity, and
evaluates the full stack of per-step certificates: the exact comparison
function decrease, conservation of ``pi(t)'x(t)``, the decrement lower
bound, geometric contraction envelopes, and the constrained-mode distance
envelopes that depend on a set-regularity constant.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .adjoint import (AbsoluteProbabilitySequence, assemble_adjoint, stationary_adjoint,
                      uniform_adjoint)
from .certificates import VALUE_SLACK, CertificateRecord, bounded, summarize
from .graphs import DiGraph, GraphSequence, regular_tree_graph
from .lyapunov import VacuousBound, rate_quotient, vector_contraction_certificate
from .sets import (Ball, ConvexSet, Intersection, distance,
                   regularity_interior, regularity_sampling, set_from_json_dict)
from .weights import ComplianceReport, MatrixSequence, verify_compliance

FEASIBILITY_TOL = 1e-10
CONSERVATION_TOL = 1e-10
IDENTITY_TOL = 1e-10
VACUOUS_EPS = 1e-12


class DimensionMismatch(ValueError):
    pass


class YNotInX(ValueError):
    pass


class NotCompliant(ValueError):
    """The weight sequence failed the structural checks; no bound is certifiable."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Declarative description of one run; JSON-serializable and rebuildable."""

    m: int
    n: int
    horizon: int
    seed: int
    mode: str
    graph: dict
    weights: dict
    initial: dict
    constraints: tuple = ()
    adjoint: dict = field(default_factory=dict)
    certificates_enabled: bool = True
    rate_ks: tuple = (0, "half")
    regularity: dict | None = None
    y_point: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("unconstrained", "constrained"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.mode == "constrained" and len(self.constraints) != self.m:
            raise ConfigError("constrained mode needs one set spec per agent")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "rate_ks", tuple(self.rate_ks))

    @staticmethod
    def from_json_dict(d: dict) -> "RunConfig":
        known = {"m", "n", "horizon", "seed", "mode", "graph", "weights", "initial",
                 "constraints", "adjoint", "certificates_enabled", "rate_ks",
                 "regularity", "y_point"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return RunConfig(
                m=int(d["m"]), n=int(d["n"]), horizon=int(d["horizon"]),
                seed=int(d["seed"]), mode=d["mode"], graph=dict(d["graph"]),
                weights=dict(d["weights"]), initial=dict(d["initial"]),
                constraints=tuple(d.get("constraints") or ()),
                adjoint=dict(d.get("adjoint") or {}),
                certificates_enabled=bool(d.get("certificates_enabled", True)),
                rate_ks=tuple(d.get("rate_ks", (0, "half"))),
                regularity=d.get("regularity"),
                y_point=tuple(d["y_point"]) if d.get("y_point") else None,
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from exc

    def to_json_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "horizon": self.horizon, "seed": self.seed,
                "mode": self.mode, "graph": self.graph, "weights": self.weights,
                "initial": self.initial, "constraints": list(self.constraints),
                "adjoint": self.adjoint,
                "certificates_enabled": self.certificates_enabled,
                "rate_ks": list(self.rate_ks), "regularity": self.regularity,
                "y_point": list(self.y_point) if self.y_point else None}


def build_graph_sequence(config: RunConfig) -> GraphSequence:
    spec = config.graph
    kind = spec.get("kind")
    if kind == "static":
        if "regular_tree_d" in spec:
            g = regular_tree_graph(int(spec["regular_tree_d"]))
        else:
            g = DiGraph.from_json_dict(spec["graph"])
        seq = GraphSequence.static(g)
    elif kind == "periodic":
        seq = GraphSequence.periodic([DiGraph.from_json_dict(d) for d in spec["graphs"]])
    elif kind == "random-rooted":
        seq = GraphSequence.random_rooted(config.m, float(spec.get("extra_edge_prob", 0.0)),
                                          config.seed)
    else:
        raise ConfigError(f"unknown graph kind {kind!r}")
    if seq.m != config.m:
        raise ConfigError(f"graph has m={seq.m}, config says m={config.m}")
    return seq


def build_matrix_sequence(config: RunConfig, graph_seq: GraphSequence) -> MatrixSequence:
    spec = config.weights
    scheme = spec.get("scheme")
    if scheme == "custom":
        mats = [np.array(mm["rows"], dtype=float) for mm in spec["matrices"]]
        return MatrixSequence.custom(mats, graph_seq)
    if scheme == "laplacian":
        return MatrixSequence.from_scheme(graph_seq, "laplacian", gamma=float(spec["gamma"]))
    try:
        return MatrixSequence.from_scheme(graph_seq, scheme)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_constraints(config: RunConfig) -> tuple[ConvexSet, ...]:
    return tuple(set_from_json_dict(d) for d in config.constraints)


def initial_states(config: RunConfig, sets: tuple[ConvexSet, ...] | None) -> np.ndarray:
    """Initial (m, n) state block; random draws are projected onto each agent's set.

    Explicit states in constrained mode must already be feasible within
    1e-10 per agent.
    """
    spec = config.initial
    kind = spec.get("kind", "uniform-box")
    if kind == "explicit":
        x0 = np.array(spec["states"], dtype=float)
        if x0.shape != (config.m, config.n):
            raise ConfigError(f"explicit states must have shape ({config.m}, {config.n})")
        if sets is not None:
            for i, s in enumerate(sets):
                if s.violation(x0[i]) > FEASIBILITY_TOL:
                    raise ConfigError(f"initial state of agent {i} violates its set")
        return x0
    if kind == "uniform-box":
        low = float(spec.get("low", -1.0))
        high = float(spec.get("high", 1.0))
        rng = seeding.substream(config.seed, "init")
        x0 = rng.uniform(low, high, size=(config.m, config.n))
        if sets is not None:
            x0 = np.stack([s.project(x0[i]) for i, s in enumerate(sets)])
        return x0
    raise ConfigError(f"unknown initial kind {kind!r}")


def step_unconstrained(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """One averaging step ``x(t+1) = A x(t)`` applied coordinatewise."""
    x = np.asarray(x, dtype=float)
    if a.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"matrix is {a.shape}, states are {x.shape}")
    return a @ x


def step_constrained(x: np.ndarray, a: np.ndarray, sets) -> tuple[np.ndarray, np.ndarray]:
    """Averaging followed by per-agent projection; returns ``(w, x_next)``."""
    w = step_unconstrained(x, a)
    x_next = np.stack([s.project(w[i]) for i, s in enumerate(sets)])
    return w, x_next


def v_function(states_t: np.ndarray, pi_t: np.ndarray, y: np.ndarray) -> float:
    """Weighted squared distance ``sum_i pi_i ||x_i - y||^2``."""
    pi_t = np.asarray(pi_t, dtype=float)
    if (pi_t < 0).any() or abs(pi_t.sum() - 1.0) > 1e-12:
        raise ValueError("pi_t must be stochastic")
    diff = np.atleast_2d(np.asarray(states_t, dtype=float)) - np.asarray(y, dtype=float)
    return float(pi_t @ (diff * diff).sum(axis=-1))


def mean_square_identity_residual(v: np.ndarray, phi: np.ndarray, s: float) -> float:
    """Defect of ``(phi'v - s)^2 = sum phi_j (v_j - s)^2 - (1/2) sum phi_j phi_l (v_j - v_l)^2``.

    The double sum equals the phi-weighted variance of ``v``, so the
    residual is evaluated without forming the m^2 terms.
    """
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    mean = float(phi @ v)
    lhs = (mean - s) ** 2
    rhs = float(phi @ (v - s) ** 2) - float(phi @ (v - mean) ** 2)
    return lhs - rhs


def track_uv(states_t: np.ndarray, pi_t: np.ndarray,
             intersection: ConvexSet) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean ``u`` of the agents and its projection ``v`` onto the intersection."""
    u = np.asarray(pi_t, dtype=float) @ np.asarray(states_t, dtype=float)
    return u, intersection.project(u)


@dataclass
class Trajectory:
    """All per-step data of a run; constrained-only fields are ``None`` otherwise."""

    states: np.ndarray                    # (horizon+1, m, n)
    w: np.ndarray | None                  # (horizon+1, m, n); w[0] is unused
    spread_sq: np.ndarray                 # (horizon+1,)
    lyap: np.ndarray                      # (horizon+1,)
    decrement: np.ndarray                 # (horizon,)
    conservation: np.ndarray | None       # (horizon+1, n)
    feasibility: np.ndarray | None        # (horizon+1,) max per-agent violation
    u_points: np.ndarray | None           # (horizon+1, n)
    v_points: np.ndarray | None           # (horizon+1, n)
    v_values: np.ndarray | None           # (horizon+1,)
    dist_sq: np.ndarray | None            # (horizon+1, m)
    y_point: np.ndarray | None            # fixed test point in X

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1


def _pairwise_sq_distances(block: np.ndarray) -> np.ndarray:
    diff = block[:, None, :] - block[None, :, :]
    return (diff * diff).sum(axis=-1)


def _decrement_value(a: np.ndarray, delta_sq: np.ndarray, pi_next: np.ndarray) -> float:
    return 0.5 * float(pi_next @ ((a @ delta_sq) * a).sum(axis=1))


def simulate(config: RunConfig, mseq: MatrixSequence,
             sets: tuple[ConvexSet, ...] | None) -> tuple[np.ndarray, np.ndarray | None]:
    """Run the dynamic; returns ``(states, w)`` with ``w`` only in constrained mode."""
    x0 = initial_states(config, sets)
    h = config.horizon
    states = np.empty((h + 1, config.m, config.n))
    states[0] = x0
    if sets is None:
        for t in range(h):
            states[t + 1] = step_unconstrained(states[t], mseq.matrix_at(t))
        return states, None
    w = np.zeros((h + 1, config.m, config.n))
    for t in range(h):
        w[t + 1], states[t + 1] = step_constrained(states[t], mseq.matrix_at(t), sets)
    return states, w


def _fixed_test_point(config: RunConfig, states: np.ndarray, pi: np.ndarray,
                      intersection: ConvexSet) -> np.ndarray:
    if config.y_point is not None:
        y = np.array(config.y_point, dtype=float)
    elif config.regularity and config.regularity.get("x_bar") is not None:
        y = np.array(config.regularity["x_bar"], dtype=float)
    else:
        y = intersection.project(pi[0] @ states[0])
    if intersection.violation(y) > FEASIBILITY_TOL:
        raise YNotInX(f"fixed test point violates X by {intersection.violation(y):.3e}")
    return y


def annotate(config: RunConfig, mseq: MatrixSequence,
             adjoint: AbsoluteProbabilitySequence, states: np.ndarray,
             w: np.ndarray | None, sets: tuple[ConvexSet, ...] | None,
             intersection: ConvexSet | None) -> Trajectory:
    """Derive every per-step series from the raw states."""
    h = states.shape[0] - 1
    pi = adjoint.vectors
    spread_sq = np.array([_pairwise_sq_distances(states[t]).max() for t in range(h + 1)])
    decrement = np.empty(h)
    for t in range(h):
        decrement[t] = _decrement_value(mseq.matrix_at(t),
                                        _pairwise_sq_distances(states[t]), pi[t + 1])

    if sets is None:
        # moment-form comparison value, summed over coordinates
        s1 = np.einsum("tm,tmn->tn", pi, states * states)
        s2 = np.einsum("tm,tmn->tn", pi, states)
        lyap = (s1 - s2 * s2).sum(axis=1)
        return Trajectory(states=states, w=w, spread_sq=spread_sq, lyap=lyap,
                          decrement=decrement, conservation=s2, feasibility=None,
                          u_points=None, v_points=None, v_values=None,
                          dist_sq=None, y_point=None)

    y = _fixed_test_point(config, states, pi, intersection)
    lyap = np.array([v_function(states[t], pi[t], y) for t in range(h + 1)])
    feasibility = np.array([max(s.violation(states[t, i]) for i, s in enumerate(sets))
                            for t in range(h + 1)])
    u_points = np.empty((h + 1, config.n))
    v_points = np.empty((h + 1, config.n))
    v_values = np.empty(h + 1)
    dist_sq = np.empty((h + 1, config.m))
    for t in range(h + 1):
        u_points[t], v_points[t] = track_uv(states[t], pi[t], intersection)
        v_values[t] = v_function(states[t], pi[t], v_points[t])
        for i in range(config.m):
            dist_sq[t, i] = distance(intersection, states[t, i]) ** 2
    return Trajectory(states=states, w=w, spread_sq=spread_sq, lyap=lyap,
                      decrement=decrement, conservation=None, feasibility=feasibility,
                      u_points=u_points, v_points=v_points, v_values=v_values,
                      dist_sq=dist_sq, y_point=y)


def v_noise_floor(traj: Trajectory) -> float:
    """Absolute allowance for V-based checks in constrained runs.

    V values are built from states representable to ``eps * scale`` and
    projections resolved to the Dykstra displacement tolerance, so a
    weighted sum of squared distances carries an irreducible error of about
    ``m * (dykstra_tol + eps * scale)^2``.
    """
    from .sets import DYKSTRA_TOL
    m = traj.states.shape[1]
    scale = 1.0 + 2.0 * float(np.abs(traj.states).max())
    return m * (DYKSTRA_TOL + np.finfo(float).eps * scale) ** 2


def constrained_decrease_certificate(traj: Trajectory, adjoint: AbsoluteProbabilitySequence,
                                     beta: float, p_star: int) -> list[CertificateRecord]:
    """Per-step decrease of ``V(t, y)`` by at least the spread-based decrement bound."""
    drop = adjoint.delta * beta * beta / (4.0 * p_star)
    floor = v_noise_floor(traj)
    return [bounded("constrained-decrease", t, None, float(traj.lyap[t + 1]),
                    float(traj.lyap[t] - drop * traj.spread_sq[t]), floor=floor)
            for t in range(traj.horizon)]


def tracked_contraction_certificate(traj: Trajectory, adjoint: AbsoluteProbabilitySequence,
                                    beta: float, p_star: int,
                                    r: float) -> tuple[list[CertificateRecord], float, bool]:
    """Geometric decay of ``V(t, v(t))`` at quotient ``1 - delta beta^2 / (4 p* (r+1)^2)``.

    Returns the records, the quotient, and a vacuous flag set when the
    quotient is within 1e-12 of one (the bound then certifies nothing).
    """
    drop = adjoint.delta * beta * beta / (4.0 * p_star * (r + 1.0) ** 2)
    q = 1.0 - drop
    if q >= 1.0:
        raise VacuousBound("tracked contraction factor is not below one")
    vacuous = q >= 1.0 - VACUOUS_EPS
    floor = v_noise_floor(traj)
    records = [bounded("tracked-contraction", t, None, float(traj.v_values[t + 1]),
                       q * float(traj.v_values[t]), floor=floor)
               for t in range(traj.horizon)]
    return records, q, vacuous


def distance_envelope_certificate(traj: Trajectory, adjoint: AbsoluteProbabilitySequence,
                                  beta: float, p_star: int,
                                  r: float) -> list[CertificateRecord]:
    """Envelope ``sum_j dist^2(x_j(t), X) <= (1/delta) q^t V(0, v(0))``."""
    drop = adjoint.delta * beta * beta / (4.0 * p_star * (r + 1.0) ** 2)
    q = 1.0 - drop
    base = float(traj.v_values[0]) / adjoint.delta
    floor = v_noise_floor(traj)
    return [bounded("distance-envelope", t, None, float(traj.dist_sq[t].sum()),
                    (q ** t) * base, floor=floor)
            for t in range(traj.horizon + 1)]


def _rate_k_values(config: RunConfig) -> list[int]:
    ks = []
    for k in config.rate_ks:
        ks.append(config.horizon // 2 if k == "half" else int(k))
    return sorted(set(ks))


def evaluate_certificates(config: RunConfig, compliance: ComplianceReport,
                          adjoint: AbsoluteProbabilitySequence,
                          traj: Trajectory,
                          r_used: float | None) -> list[CertificateRecord]:
    """Every enabled per-step check, in a deterministic order.

    Identity-style checks store the absolute residual as ``lhs`` and the
    tolerance as ``rhs`` with slack 1.
    """
    records: list[CertificateRecord] = []
    h = traj.horizon
    pi = adjoint.vectors
    beta, p_star = compliance.beta, compliance.p_star
    drop = adjoint.delta * beta * beta / (4.0 * p_star)

    if config.mode == "unconstrained":
        x0_norms = np.linalg.norm(traj.states[0], axis=0)  # per coordinate
        for t in range(h + 1):
            drift = np.abs(traj.conservation[t] - traj.conservation[0])
            scaled = float((drift / (1.0 + x0_norms)).max())
            records.append(CertificateRecord("conservation", t, None, scaled,
                                             CONSERVATION_TOL, 1.0,
                                             scaled <= CONSERVATION_TOL))
        for t in range(h):
            resid = float(abs(traj.lyap[t + 1] - (traj.lyap[t] - traj.decrement[t])))
            scale = max(1.0, float((traj.states[t] ** 2).sum()))
            records.append(CertificateRecord("step-identity", t, None, resid,
                                             IDENTITY_TOL * scale, 1.0,
                                             resid <= IDENTITY_TOL * scale))
            lower = drop * float(traj.spread_sq[t])
            dec = float(traj.decrement[t])
            tol = 1e-10 * max(1.0, float(traj.spread_sq[t]))
            ok = dec >= -1e-12 and lower <= dec * VALUE_SLACK + tol
            records.append(CertificateRecord("decrement-bound", t, None, lower,
                                             dec, VALUE_SLACK, ok))
        for k in _rate_k_values(config):
            rb = vector_contraction_certificate(traj.states, adjoint, beta, p_star, k)
            records.extend(rb.records)
        return records

    y = traj.y_point
    v_floor = v_noise_floor(traj)
    for t in range(1, h + 1):
        feas = float(traj.feasibility[t])
        records.append(CertificateRecord("feasibility", t, None, feas,
                                         FEASIBILITY_TOL, 1.0, feas <= FEASIBILITY_TOL))
    for t in range(h):
        w_val = float(pi[t + 1] @ ((traj.w[t + 1] - y) ** 2).sum(axis=-1))
        resid = abs(w_val - (float(traj.lyap[t]) - float(traj.decrement[t])))
        scale = max(1.0, float(traj.lyap[t]))
        records.append(CertificateRecord("averaging-identity", t, None, resid,
                                         IDENTITY_TOL * scale, 1.0,
                                         resid <= IDENTITY_TOL * scale))
        records.append(bounded("projection-step", t, None, float(traj.lyap[t + 1]),
                               w_val, floor=v_floor))
    records.extend(constrained_decrease_certificate(traj, adjoint, beta, p_star))
    if r_used is not None:
        tracked, _, _ = tracked_contraction_certificate(traj, adjoint, beta, p_star, r_used)
        records.extend(tracked)
        records.extend(distance_envelope_certificate(traj, adjoint, beta, p_star, r_used))
    return records


@dataclass
class RunResult:
    config: RunConfig
    compliance: ComplianceReport
    adjoint: AbsoluteProbabilitySequence
    trajectory: Trajectory
    records: list[CertificateRecord]
    report: dict

    @property
    def certificates_pass(self) -> bool:
        return all(r.passed for r in self.records)


def _build_adjoint(config: RunConfig, mseq: MatrixSequence,
                   compliance: ComplianceReport) -> AbsoluteProbabilitySequence:
    spec = config.adjoint
    method = spec.get("method", "auto")
    spread_tol = float(spec.get("spread_tol", 1e-10))
    max_window = int(spec.get("max_window", 2 ** 14))
    if method == "auto":
        method = "uniform" if compliance.doubly_stochastic else "backward-product"
    if method == "uniform":
        return uniform_adjoint(mseq, config.horizon)
    if method == "backward-product":
        return assemble_adjoint(mseq, config.horizon, spread_tol, max_window)
    if method == "stationary":
        return stationary_adjoint(mseq, config.horizon)
    raise ConfigError(f"unknown adjoint method {method!r}")


def _resolve_regularity(config: RunConfig, sets, traj: Trajectory,
                        rho: float) -> tuple[float | None, dict | None]:
    """Regularity constant for the observed iterate ball ``B(0, rho)``."""
    spec = config.regularity
    if spec is None:
        spec = {"method": "sampling", "samples": 2000}
    method = spec.get("method")
    ball = Ball(np.zeros(config.n), max(rho, 1e-9) * (1.0 + 1e-12) + 1e-12)
    if method == "interior":
        est = regularity_interior(sets, float(spec["theta"]),
                                  np.array(spec["x_bar"], dtype=float), ball)
    elif method == "sampling":
        est = regularity_sampling(sets, ball, int(spec.get("samples", 2000)),
                                  config.seed)
    elif method == "fixed":
        est = None
        r = float(spec["r"])
        return r, {"method": "fixed", "r_hat": r, "samples": 0, "skipped": 0}
    else:
        raise ConfigError(f"unknown regularity method {method!r}")
    return est.r_hat, est.to_json_dict()


def _certify(config: RunConfig, mseq: MatrixSequence, compliance: ComplianceReport,
             adjoint: AbsoluteProbabilitySequence, states: np.ndarray,
             w: np.ndarray | None, sets, intersection) -> RunResult:
    traj = annotate(config, mseq, adjoint, states, w, sets, intersection)
    rho = float(np.linalg.norm(states, axis=2).max())

    r_used = None
    regularity_info = None
    escalated = False
    if config.mode == "constrained":
        r_used, regularity_info = _resolve_regularity(config, sets, traj, rho)

    records: list[CertificateRecord] = []
    if config.certificates_enabled:
        records = evaluate_certificates(config, compliance, adjoint, traj, r_used)
        if (config.mode == "constrained" and r_used is not None
                and regularity_info.get("method") != "interior-formula"):
            # A sampled constant is only a lower bound; search upward for the
            # smallest constant that certifies, and report the escalation.
            r_try = r_used
            for _ in range(64):
                failing = [r for r in records if not r.passed
                           and r.check in ("tracked-contraction", "distance-envelope")]
                if not failing:
                    break
                r_try *= 1.5
                escalated = True
                records = evaluate_certificates(config, compliance, adjoint, traj, r_try)
            if escalated:
                regularity_info = dict(regularity_info)
                regularity_info.update({"r_used": r_try, "escalated": True,
                                        "r_initial": r_used})
                r_used = r_try

    report = _build_report(config, compliance, adjoint, traj, records, rho,
                           r_used, regularity_info, escalated)
    return RunResult(config=config, compliance=compliance, adjoint=adjoint,
                     trajectory=traj, records=records, report=report)


def run(config: RunConfig) -> RunResult:
    """Execute a configured run end to end and assemble its report."""
    gseq = build_graph_sequence(config)
    mseq = build_matrix_sequence(config, gseq)
    compliance = verify_compliance(mseq, config.horizon)
    if not compliance.ok:
        raise NotCompliant(compliance.violation or "compliance level is neither")
    adjoint = _build_adjoint(config, mseq, compliance)
    sets = parse_constraints(config) if config.mode == "constrained" else None
    intersection = Intersection(sets) if sets else None
    states, w = simulate(config, mseq, sets)
    return _certify(config, mseq, compliance, adjoint, states, w, sets, intersection)


def _build_report(config: RunConfig, compliance: ComplianceReport,
                  adjoint: AbsoluteProbabilitySequence, traj: Trajectory,
                  records, rho: float, r_used, regularity_info,
                  escalated: bool) -> dict:
    h = traj.horizon
    q_step = rate_quotient(adjoint.delta, compliance.beta, compliance.p_star)
    ratios = []
    for t in range(h):
        if traj.lyap[t] > 1e-300:
            ratios.append(float(traj.lyap[t + 1] / traj.lyap[t]))
    rate = {"q_step": q_step,
            "empirical_median_step_ratio": float(np.median(ratios)) if ratios else None,
            "empirical_max_step_ratio": float(np.max(ratios)) if ratios else None}
    if compliance.doubly_stochastic:
        rate["doubly_stochastic_baseline_step"] = 1.0 - compliance.beta / (2.0 * config.m ** 2)
    consensus = {"final_spread_sq": float(traj.spread_sq[h]),
                 "rho_observed": rho}
    if config.mode == "unconstrained":
        consensus["final_estimate"] = [float(v) for v in traj.conservation[0]]
        consensus["conservation_max_drift"] = float(
            np.abs(traj.conservation - traj.conservation[0]).max())
    else:
        consensus["final_estimate"] = [float(v) for v in traj.states[h].mean(axis=0)]
        consensus["final_max_dist_sq"] = float(traj.dist_sq[h].max())
    report = {
        "config": config.to_json_dict(),
        "seed_scheme": seeding.SCHEME,
        "compliance": {"level": compliance.level, "beta": compliance.beta,
                       "doubly_stochastic": compliance.doubly_stochastic,
                       "p_star": compliance.p_star, "violation": compliance.violation,
                       "p_star_scope": f"max over simulated t < {compliance.horizon}"},
        "adjoint": {"method": adjoint.method, "delta": adjoint.delta,
                    "max_residual": float(adjoint.residuals.max())
                    if adjoint.residuals.size else 0.0,
                    "horizon_extension": ("regenerate-per-step"
                                          if config.graph.get("kind") == "random-rooted"
                                          else "cycle")},
        "rate": rate,
        "certificates": summarize(records),
    }
    if config.mode == "constrained":
        report["regularity"] = regularity_info
        report["r_used"] = r_used
        report["regularity_escalated"] = escalated
        if r_used is not None:
            drop = adjoint.delta * compliance.beta ** 2 / (
                4.0 * compliance.p_star * (r_used + 1.0) ** 2)
            report["tracked_contraction_step"] = 1.0 - drop
            report["tracked_contraction_vacuous"] = bool(1.0 - drop >= 1.0 - VACUOUS_EPS)
    report["consensus"] = consensus
    return report


# ---------------------------------------------------------------------------
# trajectory CSV round trip

_BASE_COLUMNS = ["t", "agent", "coord", "x", "w", "spread_sq", "lyap", "decrement",
                 "V_vt", "dist_sq_X"]


def _per_t_verdicts(records) -> tuple[list[str], dict]:
    checks = []
    for r in records:
        name = r.check if r.k is None else f"{r.check}-k{r.k}"
        if name not in checks:
            checks.append(name)
    verdicts: dict = {}
    for r in records:
        name = r.check if r.k is None else f"{r.check}-k{r.k}"
        verdicts[(name, r.t)] = r.verdict
    return checks, verdicts


def write_trajectory_csv(result: RunResult, path) -> None:
    """One row per (t, agent, coord); per-step columns repeat across the block."""
    traj = result.trajectory
    checks, verdicts = _per_t_verdicts(result.records)
    columns = _BASE_COLUMNS + [f"cert_{c}" for c in checks]
    h = traj.horizon
    m, n = traj.states.shape[1], traj.states.shape[2]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(columns)
        for t in range(h + 1):
            dec = repr(float(traj.decrement[t])) if t < h else ""
            vvt = repr(float(traj.v_values[t])) if traj.v_values is not None else ""
            for agent in range(m):
                dsq = (repr(float(traj.dist_sq[t, agent]))
                       if traj.dist_sq is not None else "")
                for coord in range(n):
                    wcell = (repr(float(traj.w[t, agent, coord]))
                             if traj.w is not None and t > 0 else "")
                    row = [t, agent, coord,
                           repr(float(traj.states[t, agent, coord])), wcell,
                           repr(float(traj.spread_sq[t])),
                           repr(float(traj.lyap[t])), dec, vvt, dsq]
                    row += [verdicts.get((c, t), "") for c in checks]
                    wr.writerow(row)


def read_trajectory_states(path, m: int, n: int,
                           horizon: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Parse states (and w, when present) back from a trajectory CSV.

    Raises ``ConfigError`` when the file does not match the declared shape.
    """
    states = np.full((horizon + 1, m, n), np.nan)
    w = np.full((horizon + 1, m, n), np.nan)
    saw_w = False
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or header[:10] != _BASE_COLUMNS:
            raise ConfigError("trajectory CSV header does not match")
        count = 0
        for row in rd:
            try:
                t, agent, coord = int(row[0]), int(row[1]), int(row[2])
                states[t, agent, coord] = float(row[3])
                if row[4]:
                    w[t, agent, coord] = float(row[4])
                    saw_w = True
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"bad trajectory row {row!r}") from exc
            count += 1
    if count != (horizon + 1) * m * n or np.isnan(states).any():
        raise ConfigError("trajectory CSV is truncated or inconsistent")
    return states, (w if saw_w else None)


def write_plot_data_csv(result: RunResult, path) -> None:
    """Per-step summary series for plotting."""
    traj = result.trajectory
    h = traj.horizon
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "spread_sq", "lyap", "decrement", "V_vt", "max_dist_sq"])
        for t in range(h + 1):
            wr.writerow([t, repr(float(traj.spread_sq[t])), repr(float(traj.lyap[t])),
                         repr(float(traj.decrement[t])) if t < h else "",
                         repr(float(traj.v_values[t])) if traj.v_values is not None else "",
                         repr(float(traj.dist_sq[t].max())) if traj.dist_sq is not None else ""])


def replay_certificates(config: RunConfig, states: np.ndarray,
                        w: np.ndarray | None) -> RunResult:
    """Recompute compliance, adjoint, series, and certificates for stored states.

    Used for offline verification: apart from the states themselves, every
    quantity is rebuilt deterministically from the config, so verdicts are
    bit-stable against the original run.
    """
    gseq = build_graph_sequence(config)
    mseq = build_matrix_sequence(config, gseq)
    compliance = verify_compliance(mseq, config.horizon)
    if not compliance.ok:
        raise NotCompliant(compliance.violation or "compliance level is neither")
    adjoint = _build_adjoint(config, mseq, compliance)
    sets = parse_constraints(config) if config.mode == "constrained" else None
    intersection = Intersection(sets) if sets else None
    return _certify(config, mseq, compliance, adjoint, states, w, sets, intersection)
