"""Exhaustive ground truth on tiny instances.

Enumerates every feasible deployment a search run could represent, computes
the true Pareto front, and grades an archive against it. The default space
mirrors the construction pipeline's policies (maximal assignments hosted on
access points, demand-driven gateway budget, connected installed set); the
raw constraint space, which additionally admits empty and partially assigned
deployments, is available for diagnostics via policy_matched=False.

A hard combinatorial guard refuses instances beyond 6 sites, 8 demand
points, or 3 channels.
"""

from __future__ import annotations

import json
from itertools import combinations, product

import numpy as np

from .flow import RoutingInfeasibleError, route_flows
from .instance import (
    PlanningInstance,
    connectivity_matrix,
    coverage_matrix,
    default_gateway_count,
)
from .kernels import pareto_mask
from .model import (
    FEAS_TOL,
    Solution,
    check_constraints,
    dominates,
    evaluate,
    parse_variant,
)

GUARD_SITES = 6
GUARD_DPS = 8
GUARD_CHANNELS = 3

FRONT_FORMAT_VERSION = 1


class GuardError(Exception):
    """Instance too large for exhaustive enumeration."""


class EnumerationLimitError(Exception):
    """Candidate count exceeded the caller's cap."""


def _check_guard(instance: PlanningInstance) -> None:
    if (
        instance.num_sites > GUARD_SITES
        or instance.num_dps > GUARD_DPS
        or instance.K > GUARD_CHANNELS
    ):
        raise GuardError(
            "enumeration refused: exhaustive search is limited to "
            f"{GUARD_SITES} sites, {GUARD_DPS} demand points and "
            f"{GUARD_CHANNELS} channels; this instance has "
            f"{instance.num_sites} sites, {instance.num_dps} demand points, "
            f"{instance.K} channels"
        )


def _assignments_policy(instance: PlanningInstance, a: np.ndarray):
    """All maximal DP->site assignments within per-site capacity.

    Maximal means no unassigned DP fits on any site that covers it, matching
    the construction loop's stopping rule. Yields (choice, loads) where
    choice[i] is the host site or -1.
    """
    n, s = instance.num_dps, instance.num_sites
    traffic = instance.dp_traffic
    c_max = instance.C_max
    choice = np.full(n, -1, dtype=np.int64)
    loads = np.zeros(s, dtype=np.float64)

    def rec(i):
        if i == n:
            for i2 in range(n):
                if choice[i2] >= 0:
                    continue
                for j in range(s):
                    if a[i2, j] and loads[j] + traffic[i2] <= c_max + FEAS_TOL:
                        return
            yield choice.copy(), loads.copy()
            return
        yield from rec(i + 1)
        for j in range(s):
            if a[i, j] and loads[j] + traffic[i] <= c_max + FEAS_TOL:
                choice[i] = j
                loads[j] += traffic[i]
                yield from rec(i + 1)
                loads[j] -= traffic[i]
                choice[i] = -1

    yield from rec(0)


def _assignments_raw(instance: PlanningInstance, a: np.ndarray, installed):
    """All capacity-valid partial assignments onto installed covering sites."""
    n = instance.num_dps
    traffic = instance.dp_traffic
    c_max = instance.C_max
    hosts = [j for j in installed]
    choice = np.full(n, -1, dtype=np.int64)
    loads = np.zeros(instance.num_sites, dtype=np.float64)

    def rec(i):
        if i == n:
            yield choice.copy(), loads.copy()
            return
        yield from rec(i + 1)
        for j in hosts:
            if a[i, j] and loads[j] + traffic[i] <= c_max + FEAS_TOL:
                choice[i] = j
                loads[j] += traffic[i]
                yield from rec(i + 1)
                loads[j] -= traffic[i]
                choice[i] = -1

    yield from rec(0)


def _valid_installed(nodes: tuple, b: np.ndarray) -> bool:
    """Connected with minimum degree 2 over the connectivity graph."""
    if not nodes:
        return True
    node_set = set(nodes)
    for v in nodes:
        if sum(1 for u in nodes if u != v and b[v, u]) < 2:
            return False
    seen = {nodes[0]}
    queue = [nodes[0]]
    while queue:
        v = queue.pop()
        for u in nodes:
            if u not in seen and b[v, u]:
                seen.add(u)
                queue.append(u)
    return len(seen) == len(node_set)


def _edge_configs(nodes: tuple, b: np.ndarray, R: int, K: int):
    """Channelized link sets on `nodes` meeting radio and degree limits.

    Yields lists of (u, v, k): at most R links and unique channels per node,
    and at least two links per node.
    """
    edges = [
        (u, v)
        for ui, u in enumerate(nodes)
        for v in nodes[ui + 1:]
        if b[u, v]
    ]
    last_edge = {v: -1 for v in nodes}
    for e, (u, v) in enumerate(edges):
        last_edge[u] = e
        last_edge[v] = e
    if any(last_edge[v] == -1 for v in nodes):
        return
    degree = {v: 0 for v in nodes}
    used = {v: set() for v in nodes}
    picked: list = []

    def rec(e):
        if e == len(edges):
            yield list(picked)
            return
        u, v = edges[e]
        if not (
            (last_edge[u] == e and degree[u] < 2)
            or (last_edge[v] == e and degree[v] < 2)
        ):
            yield from rec(e + 1)
        if degree[u] < R and degree[v] < R:
            for k in range(K):
                if k in used[u] or k in used[v]:
                    continue
                if last_edge[u] == e and degree[u] + 1 < 2:
                    continue
                if last_edge[v] == e and degree[v] + 1 < 2:
                    continue
                degree[u] += 1
                degree[v] += 1
                used[u].add(k)
                used[v].add(k)
                picked.append((u, v, k))
                yield from rec(e + 1)
                picked.pop()
                used[v].discard(k)
                used[u].discard(k)
                degree[v] -= 1
                degree[u] -= 1

    yield from rec(0)


def _assemble(
    instance: PlanningInstance,
    choice: np.ndarray,
    aps,
    installed,
    gateways,
    links,
) -> Solution:
    sol = Solution.empty(instance)
    for j in aps:
        sol.ap[j] = 1
    for j in installed:
        if not sol.ap[j]:
            sol.relay[j] = 1
    for j in gateways:
        sol.gateway[j] = 1
    for i, j in enumerate(choice):
        if j >= 0:
            sol.x[i, j] = 1
    for u, v, k in links:
        sol.L[u, v, k] = 1
        sol.w[u, k] = 1
        sol.w[v, k] = 1
    return sol


def enumerate_feasible(
    instance: PlanningInstance,
    variant: str = "lglb",
    policy_matched: bool = True,
    limit: int = 10_000_000,
    coverage_mode: str = "assigned",
):
    """Yield every feasible (solution, objective vector), exhaustively.

    `limit` caps the number of candidate configurations submitted to routing
    and the constraint checker; exceeding it raises EnumerationLimitError.
    """
    _check_guard(instance)
    variant = parse_variant(variant)
    a = coverage_matrix(instance)
    b = connectivity_matrix(instance)
    count = 0

    def candidates():
        if policy_matched:
            yield from _policy_candidates(instance, a, b)
        else:
            yield from _raw_candidates(instance, a, b)

    for sol in candidates():
        count += 1
        if count > limit:
            raise EnumerationLimitError(
                f"enumeration exceeded the cap of {limit} candidates"
            )
        try:
            routed, _ = route_flows(sol, instance)
        except RoutingInfeasibleError:
            continue
        if not check_constraints(routed, instance).feasible:
            continue
        yield routed, evaluate(routed, instance, variant, coverage_mode)


def _policy_candidates(instance: PlanningInstance, a, b):
    sites = instance.num_sites
    for choice, loads in _assignments_policy(instance, a):
        aps = tuple(sorted({int(j) for j in choice if j >= 0}))
        if not aps:
            yield _assemble(instance, choice, (), (), (), ())
            continue
        budget = default_gateway_count(float(loads.sum()), instance.C_max)
        others = [j for j in range(sites) if j not in aps]
        for r in range(len(others) + 1):
            for extra in combinations(others, r):
                installed = tuple(sorted(aps + extra))
                if budget > len(installed):
                    continue
                if not _valid_installed(installed, b):
                    continue
                for links in _edge_configs(installed, b, instance.R, instance.K):
                    for gws in combinations(installed, budget):
                        yield _assemble(
                            instance, choice, aps, installed, gws, links
                        )


def _raw_candidates(instance: PlanningInstance, a, b):
    """Unrestricted constraint space: every role map, assignment, link set."""
    sites = instance.num_sites
    for roles in product((0, 1, 2), repeat=sites):
        installed = tuple(j for j in range(sites) if roles[j] > 0)
        aps = tuple(j for j in range(sites) if roles[j] == 1)
        if any(
            sum(1 for u in installed if u != v and b[v, u]) < 2
            for v in installed
        ):
            continue
        for choice, _loads in _assignments_raw(instance, a, installed):
            for links in _edge_configs(installed, b, instance.R, instance.K):
                for gcount in range(len(installed) + 1):
                    for gws in combinations(installed, gcount):
                        yield _assemble(
                            instance, choice, aps, installed, gws, links
                        )


def true_pareto_front(
    instance: PlanningInstance,
    variant: str = "lglb",
    policy_matched: bool = True,
    limit: int = 10_000_000,
    coverage_mode: str = "assigned",
) -> list:
    """Deduplicated non-dominated objective vectors, sorted lexicographically."""
    vectors = {
        tuple(float(x) for x in vec)
        for _, vec in enumerate_feasible(
            instance, variant, policy_matched, limit, coverage_mode
        )
    }
    if not vectors:
        return []
    ordered = sorted(vectors)
    mask = pareto_mask(np.array(ordered, dtype=np.float64))
    return [ordered[i] for i in range(len(ordered)) if mask[i]]


def _vector_rows(archive) -> list:
    entries = getattr(archive, "entries", None)
    if entries is not None:
        return [tuple(float(x) for x in e.objectives) for e in entries]
    return [tuple(float(x) for x in row) for row in archive]


def verify_archive(archive, truth) -> dict:
    """Grade an archive against the true front.

    on_front_fraction: archive points not dominated by any truth point.
    front_coverage_fraction: truth points matched exactly by the archive.
    violations: the dominated archive points.
    """
    arch = _vector_rows(archive)
    tru = [tuple(float(x) for x in row) for row in truth]
    dims = {len(v) for v in arch} | {len(v) for v in tru}
    if len(dims) > 1:
        raise ValueError(
            f"archive and truth vectors disagree on objective count: {sorted(dims)}"
        )
    violations = [
        v
        for v in arch
        if any(dominates(np.array(t), np.array(v)) for t in tru)
    ]
    on_front = 1.0 if not arch else 1.0 - len(violations) / len(arch)
    arch_set = set(arch)
    matched = sum(1 for t in tru if t in arch_set)
    coverage = 1.0 if not tru else matched / len(tru)
    return {
        "on_front_fraction": on_front,
        "front_coverage_fraction": coverage,
        "violations": violations,
    }


def front_to_dict(instance: PlanningInstance, variant: str, front: list) -> dict:
    return {
        "version": FRONT_FORMAT_VERSION,
        "instance_hash": instance.content_hash(),
        "variant": parse_variant(variant),
        "front": [list(v) for v in front],
    }


def save_front(instance: PlanningInstance, variant: str, front: list, path) -> None:
    with open(path, "w") as fh:
        json.dump(front_to_dict(instance, variant, front), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_front(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("version") != FRONT_FORMAT_VERSION:
        raise ValueError(f"unsupported front format version: {data.get('version')!r}")
    data["front"] = [tuple(v) for v in data["front"]]
    return data
