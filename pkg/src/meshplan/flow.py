"""Flow routing over established links, plus hop and throughput diagnostics.

Routing policy: sites are processed in increasing index order; each site's
whole assigned demand follows one path to its nearest gateway (ties: lowest
gateway index, then lexicographically smallest path). If a path would overrun
a link capacity, up to max_path_tries alternatives per gateway are probed by
removing the first offending edge and re-searching; remaining gateways are
tried in hop order. Paths longer than the hop bound are rejected outright.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .instance import PlanningInstance
from .kernels import UNREACHABLE, adjacency_csr, bfs_hops, bfs_hops_multi
from .model import FEAS_TOL, Solution


class RoutingInfeasibleError(Exception):
    """Some demand site cannot reach any gateway within hop and capacity limits."""

    def __init__(self, site: int, reason: str):
        self.site = site
        super().__init__(f"site {site}: {reason}")


@dataclass
class RoutingTrace:
    """One routed demand: the site, its gateway, and the path walked."""

    site: int
    gateway: int
    path: list
    demand: float

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "gateway": self.gateway,
            "path": [int(v) for v in self.path],
            "demand": self.demand,
        }


def traces_to_json(traces: list, indent: int = 2) -> str:
    return json.dumps([t.to_dict() for t in traces], indent=indent, sort_keys=True)


def hop_distances(solution: Solution) -> np.ndarray:
    """All-pairs hop counts over established links; UNREACHABLE where cut off."""
    s = solution.num_sites
    indptr, indices = adjacency_csr(solution.established_adjacency())
    return bfs_hops_multi(indptr, indices, np.arange(s, dtype=np.int32), s)


def gateway_throughputs(solution: Solution) -> list:
    """(site, throughput) for every gateway-flagged site, ascending."""
    return [(int(j), float(solution.F[j])) for j in np.flatnonzero(solution.gateway)]


def literal_flow_balance(solution: Solution, instance: PlanningInstance, j: int) -> float:
    """Additive balance at site j: demand plus all incident flow, minus throughput.

    This mirrors the summed form rather than the conservation law; it is a
    diagnostic only and is generally nonzero at transit nodes.
    """
    loads = solution.site_loads(instance)
    incident = float(solution.f[j, :, :].sum() + solution.f[:, j, :].sum())
    return float(loads[j]) + incident - float(solution.F[j])


def _lex_shortest_path(indptr, indices, dist_from_gw, site, gateway):
    """Walk downhill from site to gateway, smallest neighbor index first."""
    path = [site]
    cur = site
    while cur != gateway:
        step = dist_from_gw[cur]
        nxt = -1
        for p in range(indptr[cur], indptr[cur + 1]):
            v = indices[p]
            if dist_from_gw[v] == step - 1:
                nxt = v
                break
        path.append(int(nxt))
        cur = int(nxt)
    return path


def route_flows(
    solution: Solution,
    instance: PlanningInstance,
    max_path_tries: int = 8,
) -> tuple[Solution, list]:
    """Route every site's assigned demand to a gateway; returns (solution, traces).

    The returned solution carries fresh f and F tensors, with each established
    link stored in the direction its flow travels (idle links keep the
    low-to-high canonical direction). Raises RoutingInfeasibleError when some
    demand site has no admissible path.
    """
    s = instance.num_sites
    out = solution.copy()
    caps = instance.link_capacities()
    loads = out.site_loads(instance)

    # Undirected link inventory: (u, v) with u < v -> sorted channel list.
    channels: dict[tuple[int, int], list[int]] = {}
    for j, l, k in np.argwhere(out.L == 1):
        u, v = (int(j), int(l)) if j < l else (int(l), int(j))
        channels.setdefault((u, v), []).append(int(k))
    for key in channels:
        channels[key].sort()

    adj = np.zeros((s, s), dtype=np.uint8)
    for u, v in channels:
        adj[u, v] = 1
        adj[v, u] = 1
    indptr, indices = adjacency_csr(adj)

    demand_sites = [int(j) for j in np.flatnonzero(loads > FEAS_TOL)]
    gateways = [int(j) for j in np.flatnonzero(out.gateway == 1)]
    flow_dir: dict[tuple[int, int, int], tuple[int, int]] = {}
    flow_amt: dict[tuple[int, int, int], float] = {}
    throughput = np.zeros(s, dtype=np.float64)
    traces: list[RoutingTrace] = []

    if demand_sites and not gateways:
        raise RoutingInfeasibleError(demand_sites[0], "no gateway selected")

    if gateways:
        gw_hops = bfs_hops_multi(
            indptr, indices, np.array(gateways, dtype=np.int32), s
        )

    def admissible_channel(u: int, v: int, demand: float):
        """Lowest channel on link u-v that can carry demand in direction u->v."""
        for k in channels[(u, v) if u < v else (v, u)]:
            key = (min(u, v), max(u, v), k)
            direction = flow_dir.get(key)
            if direction is not None and direction != (u, v):
                continue
            if flow_amt.get(key, 0.0) + demand <= caps[u, v, k] + FEAS_TOL:
                return k
        return None

    def try_commit(path, demand):
        """Check every step of the path; commit if clean, else return bad edge."""
        picks = []
        for u, v in zip(path, path[1:]):
            k = admissible_channel(u, v, demand)
            if k is None:
                return (u, v)
            picks.append((u, v, k))
        for u, v, k in picks:
            key = (min(u, v), max(u, v), k)
            flow_dir[key] = (u, v)
            flow_amt[key] = flow_amt.get(key, 0.0) + demand
        return None

    for site in demand_sites:
        demand = float(loads[site])
        order = sorted(
            (
                (int(gw_hops[gi, site]), gw)
                for gi, gw in enumerate(gateways)
                if gw_hops[gi, site] != UNREACHABLE
                and gw_hops[gi, site] <= instance.A
            ),
        )
        routed = False
        for base_hops, gw in order:
            if base_hops == 0:
                throughput[site] += demand
                traces.append(RoutingTrace(site, gw, [site], demand))
                routed = True
                break
            gi = gateways.index(gw)
            cur_adj = None
            cur_indptr, cur_indices = indptr, indices
            dist = gw_hops[gi]
            for _ in range(max_path_tries):
                if dist[site] == UNREACHABLE or dist[site] > instance.A:
                    break
                path = _lex_shortest_path(cur_indptr, cur_indices, dist, site, gw)
                bad = try_commit(path, demand)
                if bad is None:
                    throughput[gw] += demand
                    traces.append(RoutingTrace(site, gw, path, demand))
                    routed = True
                    break
                if cur_adj is None:
                    cur_adj = adj.copy()
                cur_adj[bad[0], bad[1]] = 0
                cur_adj[bad[1], bad[0]] = 0
                cur_indptr, cur_indices = adjacency_csr(cur_adj)
                dist = bfs_hops(cur_indptr, cur_indices, gw, s)
            if routed:
                break
        if not routed:
            raise RoutingInfeasibleError(
                site,
                f"no path to any gateway within {instance.A} hops and link capacity",
            )

    # Re-emit links and flows with final directions.
    out.L[:] = 0
    out.f[:] = 0.0
    for (u, v), ks in channels.items():
        for k in ks:
            key = (u, v, k)
            direction = flow_dir.get(key, (u, v))
            a, bnode = direction
            out.L[a, bnode, k] = 1
            out.f[a, bnode, k] = flow_amt.get(key, 0.0)
    out.F = throughput
    return out, traces
