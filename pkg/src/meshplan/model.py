"""Solution encoding, objective evaluation, dominance, and the constraint checker.

The checker is written directly against the constraint definitions (vectorized
numpy over the raw arrays) and shares no logic with the construction pipeline,
so the two can disagree only through a bug in one of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .instance import PlanningInstance, connectivity_matrix, coverage_matrix
from .kernels import UNREACHABLE, adjacency_csr, bfs_hops_multi

FEAS_TOL = 1e-9
SOLUTION_FORMAT_VERSION = 1

COST = "cost"
COVERAGE = "coverage"
LINK = "link"
GATEWAY = "gateway"

#: Objective subsets per model variant, in canonical order.
VARIANTS = {
    "cov": (COST, COVERAGE),
    "llb": (COST, COVERAGE, LINK),
    "glb": (COST, COVERAGE, GATEWAY),
    "lglb": (COST, COVERAGE, LINK, GATEWAY),
}


class SolutionFormatError(ValueError):
    """Malformed or inconsistent solution file."""


def parse_variant(name: str) -> str:
    key = name.strip().lower()
    if key not in VARIANTS:
        raise ValueError(f"unknown model variant: {name!r} (choose from {sorted(VARIANTS)})")
    return key


@dataclass
class Solution:
    """One deployment plan: roles, DP assignment, channels, links, flows.

    ap/relay/gateway are 0/1 site vectors (a site is at most one of AP and
    relay; the gateway flag sits on installed sites). x assigns DPs to sites,
    w marks active channels per site, L holds each established link once in
    its flow direction, f carries link flow, F gateway throughput.
    """

    ap: np.ndarray        # (s,) uint8
    relay: np.ndarray     # (s,) uint8
    gateway: np.ndarray   # (s,) uint8
    x: np.ndarray         # (n, s) uint8
    w: np.ndarray         # (s, K) uint8
    L: np.ndarray         # (s, s, K) uint8
    f: np.ndarray         # (s, s, K) float64
    F: np.ndarray         # (s,) float64

    @classmethod
    def empty(cls, instance: PlanningInstance) -> "Solution":
        s, n, K = instance.num_sites, instance.num_dps, instance.K
        return cls(
            ap=np.zeros(s, dtype=np.uint8),
            relay=np.zeros(s, dtype=np.uint8),
            gateway=np.zeros(s, dtype=np.uint8),
            x=np.zeros((n, s), dtype=np.uint8),
            w=np.zeros((s, K), dtype=np.uint8),
            L=np.zeros((s, s, K), dtype=np.uint8),
            f=np.zeros((s, s, K), dtype=np.float64),
            F=np.zeros(s, dtype=np.float64),
        )

    @property
    def z(self) -> np.ndarray:
        """Installed-site indicator: a site is deployed iff it is an AP or relay."""
        return self.ap | self.relay

    @property
    def num_sites(self) -> int:
        return len(self.ap)

    def copy(self) -> "Solution":
        return Solution(
            ap=self.ap.copy(), relay=self.relay.copy(), gateway=self.gateway.copy(),
            x=self.x.copy(), w=self.w.copy(), L=self.L.copy(), f=self.f.copy(),
            F=self.F.copy(),
        )

    def site_loads(self, instance: PlanningInstance) -> np.ndarray:
        """Assigned access traffic per site."""
        return instance.dp_traffic @ self.x

    def link_list(self) -> list[tuple[int, int, int]]:
        """Established links as stored (j, l, k), ascending."""
        return [tuple(idx) for idx in np.argwhere(self.L == 1)]

    def established_adjacency(self) -> np.ndarray:
        """Undirected site adjacency induced by established links."""
        any_link = (self.L.sum(axis=2) > 0).astype(np.uint8)
        return any_link | any_link.T


def evaluate_cost(solution: Solution) -> float:
    """Deployed node count; a gateway flag adds one on top of its node."""
    return float(
        int(solution.ap.sum()) + int(solution.relay.sum()) + int(solution.gateway.sum())
    )


def evaluate_coverage(
    solution: Solution, instance: PlanningInstance, mode: str = "assigned"
) -> float:
    if mode == "assigned":
        return float(solution.x.sum())
    if mode == "literal":
        a = coverage_matrix(instance)
        return float((a * solution.relay[None, :]).sum())
    raise ValueError(f"unknown coverage mode: {mode!r}")


def evaluate_link_balance(solution: Solution, instance: PlanningInstance) -> float:
    """Smallest residual capacity over established links; 0 when there are none."""
    mask = solution.L == 1
    if not mask.any():
        return 0.0
    caps = instance.link_capacities()
    return float((caps[mask] - solution.f[mask]).min())


def evaluate_gateway_balance(solution: Solution) -> float:
    """sqrt(sum F^2 / sum F): lower when throughput splits evenly; 0 when idle."""
    total = float(solution.F.sum())
    if total <= 0.0:
        return 0.0
    return math.sqrt(float((solution.F ** 2).sum()) / total)


def evaluate(
    solution: Solution,
    instance: PlanningInstance,
    variant: str = "lglb",
    coverage_mode: str = "assigned",
) -> np.ndarray:
    """Objective vector for the variant, minimization-oriented.

    Maximized quantities (coverage, link residual) enter negated so dominance
    is uniformly "less or equal everywhere, less somewhere".
    """
    names = VARIANTS[parse_variant(variant)]
    values = []
    for name in names:
        if name == COST:
            values.append(evaluate_cost(solution))
        elif name == COVERAGE:
            values.append(-evaluate_coverage(solution, instance, coverage_mode))
        elif name == LINK:
            values.append(-evaluate_link_balance(solution, instance))
        else:
            values.append(evaluate_gateway_balance(solution))
    return np.array(values, dtype=np.float64)


def dominates(u: np.ndarray, v: np.ndarray) -> bool:
    """Strict Pareto dominance for minimization vectors of equal length."""
    if len(u) != len(v):
        raise ValueError("objective vectors have different lengths")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return bool(np.all(u <= v) and np.any(u < v))


def solution_metrics(solution: Solution, instance: PlanningInstance) -> dict:
    """All reporting quantities in their natural orientation."""
    return {
        "aps": int(solution.ap.sum()),
        "relays": int(solution.relay.sum()),
        "gateways": int(solution.gateway.sum()),
        "total": int(evaluate_cost(solution)),
        "coverage": float(evaluate_coverage(solution, instance)),
        "link_residual": float(evaluate_link_balance(solution, instance)),
        "gateway_balance": float(evaluate_gateway_balance(solution)),
    }


@dataclass
class ConstraintCheck:
    id: str
    description: str
    satisfied: bool
    violations: list


@dataclass
class ConstraintReport:
    checks: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.satisfied]

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "checks": [
                {
                    "id": c.id,
                    "description": c.description,
                    "satisfied": c.satisfied,
                    "violations": [list(v) for v in c.violations],
                }
                for c in self.checks
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _tuples(array_2d) -> list:
    return [tuple(int(v) for v in row) for row in array_2d]


def check_constraints(
    solution: Solution, instance: PlanningInstance, tol: float = FEAS_TOL
) -> ConstraintReport:
    """All fifteen feasibility checks with concrete violating indices."""
    a = coverage_matrix(instance)
    b = connectivity_matrix(instance)
    caps = instance.link_capacities()
    z = solution.z
    x = solution.x
    w = solution.w
    L = solution.L
    f = solution.f
    F = solution.F
    loads = solution.site_loads(instance)
    report = ConstraintReport()

    def add(cid, description, bad):
        report.checks.append(ConstraintCheck(cid, description, len(bad) == 0, bad))

    # C1: each DP assigned to at most one site
    bad = _tuples(np.argwhere(x.sum(axis=1) > 1))
    add("C1", "each demand point assigned to at most one site", bad)

    # C2: assignment only to covering installed sites
    bad = _tuples(np.argwhere(x > a * z[None, :]))
    add("C2", "assignment implies coverage and installation", bad)

    # C3: links incident to a node, counted once per endpoint, fit the radio budget
    incident = L.sum(axis=(1, 2)) + L.sum(axis=(0, 2))
    bad = _tuples(np.argwhere(incident > instance.R))
    add("C3", f"at most R={instance.R} links incident to a node", bad)

    # C4: channels per site pair
    bad = _tuples(np.argwhere(L.sum(axis=2) > instance.K))
    add("C4", f"at most K={instance.K} channels per site pair", bad)

    # C5: one outgoing link per node per channel
    bad = _tuples(np.argwhere(L.sum(axis=1) > 1))
    add("C5", "at most one outgoing link per node and channel", bad)

    # C6: per node and channel, incoming plus outgoing at most one
    per_node_channel = L.sum(axis=1) + L.sum(axis=0)
    bad = _tuples(np.argwhere(per_node_channel > 1))
    add("C6", "no same-channel transmit/receive pairing at a node", bad)

    # C7: links need range and the channel active at both endpoints
    rhs = b[:, :, None] * (w[:, None, :] + w[None, :, :])
    bad = _tuples(np.argwhere(2 * L.astype(np.int64) > rhs))
    add("C7", "link requires connectivity and channel active at both ends", bad)

    # C8: active channels bounded by installed radios
    bad = _tuples(np.argwhere(w.sum(axis=1) > instance.R * z))
    add("C8", f"at most R={instance.R} active channels per installed node", bad)

    # C9: access capacity
    bad = _tuples(np.argwhere(loads > instance.C_max + tol))
    add("C9", f"assigned traffic within C_max={instance.C_max}", bad)

    # C10: flow only on established links, within capacity
    bad = _tuples(np.argwhere(f > L * caps + tol))
    add("C10", "flow within established link capacity", bad)

    # C11: demand plus inflow minus outflow equals throughput at every node
    residual = loads + f.sum(axis=(0, 2)) - f.sum(axis=(1, 2)) - F
    bad = _tuples(np.argwhere(np.abs(residual) > tol))
    add("C11", "flow conservation at every site", bad)

    # C12: every demand site within A established-link hops of a gateway
    demand_sites = np.flatnonzero(loads > tol)
    gateways = np.flatnonzero(solution.gateway == 1)
    bad = []
    if len(demand_sites) > 0:
        if len(gateways) == 0:
            bad = [(int(j),) for j in demand_sites]
        else:
            indptr, indices = adjacency_csr(solution.established_adjacency())
            hops = bfs_hops_multi(
                indptr, indices, gateways.astype(np.int32), instance.num_sites
            )
            for j in demand_sites:
                col = hops[:, j]
                reachable = col[col != UNREACHABLE]
                if len(reachable) == 0 or reachable.min() > instance.A:
                    bad.append((int(j),))
    add("C12", f"demand sites within A={instance.A} hops of a gateway", bad)

    # C13: throughput only at gateway-flagged sites
    bad = _tuples(np.argwhere(F > instance.M * solution.gateway + tol))
    add("C13", "throughput gated by the gateway flag", bad)

    # C14: every installed node sits on at least two links
    bad = _tuples(np.argwhere((z == 1) & (incident < 2)))
    add("C14", "every installed node incident to at least two links", bad)

    # C15: variable domains
    bad = []
    for name, arr in (
        ("ap", solution.ap), ("relay", solution.relay),
        ("gateway", solution.gateway), ("x", x), ("w", w), ("L", L),
    ):
        for idx in np.argwhere(arr > 1):
            bad.append((name, *(int(v) for v in idx)))
    for name, arr in (("f", f), ("F", F)):
        for idx in np.argwhere(arr < -tol):
            bad.append((name, *(int(v) for v in idx)))
    add("C15", "binary and nonnegative variable domains", bad)

    return report


def solution_to_dict(solution: Solution) -> dict:
    s = solution.num_sites
    n, _ = solution.x.shape
    K = solution.w.shape[1]
    return {
        "version": SOLUTION_FORMAT_VERSION,
        "sites": s,
        "demand_points": n,
        "channels": K,
        "z": [int(j) for j in np.flatnonzero(solution.z)],
        "ap": [int(j) for j in np.flatnonzero(solution.ap)],
        "relay": [int(j) for j in np.flatnonzero(solution.relay)],
        "gateway": [int(j) for j in np.flatnonzero(solution.gateway)],
        "x": [[int(i), int(j)] for i, j in np.argwhere(solution.x == 1)],
        "w": [[int(j), int(k)] for j, k in np.argwhere(solution.w == 1)],
        "links": [[int(j), int(l), int(k)] for j, l, k in np.argwhere(solution.L == 1)],
        "flows": [
            [int(j), int(l), int(k), float(solution.f[j, l, k])]
            for j, l, k in np.argwhere(solution.f > 0)
        ],
        "F": [[int(j), float(v)] for j, v in enumerate(solution.F) if v > 0],
    }


def solution_from_dict(data: dict) -> Solution:
    try:
        version = data["version"]
        if version != SOLUTION_FORMAT_VERSION:
            raise SolutionFormatError(f"unsupported solution format version: {version!r}")
        s = int(data["sites"])
        n = int(data["demand_points"])
        K = int(data["channels"])
        sol = Solution(
            ap=np.zeros(s, dtype=np.uint8),
            relay=np.zeros(s, dtype=np.uint8),
            gateway=np.zeros(s, dtype=np.uint8),
            x=np.zeros((n, s), dtype=np.uint8),
            w=np.zeros((s, K), dtype=np.uint8),
            L=np.zeros((s, s, K), dtype=np.uint8),
            f=np.zeros((s, s, K), dtype=np.float64),
            F=np.zeros(s, dtype=np.float64),
        )
        for j in data["ap"]:
            sol.ap[j] = 1
        for j in data["relay"]:
            sol.relay[j] = 1
        for j in data["gateway"]:
            sol.gateway[j] = 1
        for i, j in data["x"]:
            sol.x[i, j] = 1
        for j, k in data["w"]:
            sol.w[j, k] = 1
        for j, l, k in data["links"]:
            sol.L[j, l, k] = 1
        for j, l, k, value in data["flows"]:
            sol.f[j, l, k] = value
        for j, value in data["F"]:
            sol.F[j] = value
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, SolutionFormatError):
            raise
        raise SolutionFormatError(f"malformed solution data: {exc}") from exc
    if sorted(data["z"]) != [int(v) for v in np.flatnonzero(sol.z)]:
        raise SolutionFormatError("installed-site list disagrees with roles")
    if np.any(sol.ap & sol.relay):
        raise SolutionFormatError("a site cannot be both access point and relay")
    if np.any(sol.gateway > sol.z):
        raise SolutionFormatError("gateway flag on a site that is not installed")
    return sol


def save_solution(solution: Solution, path) -> None:
    with open(path, "w") as fh:
        json.dump(solution_to_dict(solution), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_solution(path) -> Solution:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SolutionFormatError(f"solution file is not valid JSON: {exc}") from exc
    return solution_from_dict(data)
