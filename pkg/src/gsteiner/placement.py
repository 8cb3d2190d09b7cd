"""Convex minimization of the location energy over branch positions.

For a fixed flowed topology the cost of a realization depends only on the
branch-vertex positions, through

    F(x_1, ..., x_m) = sum over edges of |flow|^alpha * |x_j - x_i|,

a convex (generally non-smooth) function.  It is minimized by a smoothed
Weiszfeld fixed-point iteration: each branch vertex moves to the weighted
barycenter of its neighbors with weights w_e / sqrt(len^2 + eps^2), while
eps decreases geometrically.  At the end of every smoothing stage each
branch vertex is snapped onto its nearest vertex whenever that strictly
lowers the exact energy, which accelerates convergence onto collapsed
configurations (the non-smooth minimizers these instances actually visit).

Optimality is certified by the minimal-norm subgradient residual: edges of
near-zero length contribute a ball of radius w_e to the subdifferential, so
the residual at a collapsed vertex is max(0, |g| - sum of collapsed w_e).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .currents import Point, PolyhedralChain, Segment, Boundary, dist
from .topology import FlowedTopology, SteinerTopology, _normalize


@dataclass(frozen=True)
class OptimizeConfig:
    """Knobs for the smoothed Weiszfeld solve; all lengths in instance units.

    ``trace``, when set, receives one JSON-serializable record per smoothing
    stage (iteration count, eps, current energy) plus a final record with the
    stationarity residual.
    """
    tol_grad: float = 1e-8
    tol_collapse: float = 1e-7
    eps_init: float = 2e-2
    eps_decay: float = 0.2
    eps_min: float = 2e-7
    max_iters: int = 20000
    trace: Callable[[dict], None] | None = None

    def __post_init__(self):
        if min(self.tol_grad, self.tol_collapse, self.eps_init, self.eps_min) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.eps_decay < 1:
            raise ValueError("eps_decay must lie in (0, 1)")


@dataclass(frozen=True)
class Placement:
    """Positions of all vertices: fixed terminals plus movable branch points."""
    terminals: tuple[Point, ...]
    branch: tuple[Point, ...]

    def position(self, v: int) -> Point:
        n = len(self.terminals)
        return self.terminals[v] if v < n else self.branch[v - n]


@dataclass(frozen=True)
class MinimizeResult:
    placement: Placement
    value: float
    residual: float
    iterations: int
    converged: bool


def placement_for(b: Boundary, branch: tuple[Point, ...] = ()) -> Placement:
    return Placement(tuple(p for p, _ in b.atoms), tuple(branch))


def _weights(ft: FlowedTopology, alpha: float) -> list[float]:
    return [abs(float(f)) ** alpha for f in ft.edge_flows]


def energy(ft: FlowedTopology, pl: Placement, alpha: float) -> float:
    """Exact location energy; zero-length edges contribute zero."""
    w = _weights(ft, alpha)
    return sum(
        wi * dist(pl.position(u), pl.position(v))
        for wi, (u, v) in zip(w, ft.topology.edges))


def smoothed_energy(ft: FlowedTopology, pl: Placement, alpha: float,
                    eps: float) -> float:
    w = _weights(ft, alpha)
    total = 0.0
    for wi, (u, v) in zip(w, ft.topology.edges):
        d2 = sum((a - b) ** 2 for a, b in zip(pl.position(u), pl.position(v)))
        total += wi * math.sqrt(d2 + eps * eps)
    return total


def subgradient(ft: FlowedTopology, pl: Placement, alpha: float) -> tuple[Point, ...]:
    """One subgradient of F per branch vertex (zero for coincident edges)."""
    n = ft.topology.n_terminals
    m = ft.topology.n_branch
    d = len(pl.terminals[0]) if pl.terminals else 2
    w = _weights(ft, alpha)
    grads = [[0.0] * d for _ in range(m)]
    for wi, (u, v) in zip(w, ft.topology.edges):
        pu, pv = pl.position(u), pl.position(v)
        length = dist(pu, pv)
        if length == 0.0:
            continue
        for (vertex, here, there) in ((u, pu, pv), (v, pv, pu)):
            if vertex >= n:
                g = grads[vertex - n]
                for i in range(d):
                    g[i] += wi * (here[i] - there[i]) / length
    return tuple(tuple(g) for g in grads)


def stationarity_residual(ft: FlowedTopology, pl: Placement, alpha: float,
                          coincide_tol: float = 1e-7) -> float:
    """Max over branch vertices of the minimal-norm subgradient norm.

    Edges shorter than ``coincide_tol`` are treated as collapsed: they
    contribute a ball of radius w_e rather than a unit direction.
    """
    n = ft.topology.n_terminals
    m = ft.topology.n_branch
    if m == 0:
        return 0.0
    d = len(pl.terminals[0])
    w = _weights(ft, alpha)
    worst = 0.0
    for bi in range(m):
        v0 = n + bi
        g = [0.0] * d
        ball = 0.0
        for wi, (u, v) in zip(w, ft.topology.edges):
            if v0 not in (u, v):
                continue
            other = v if u == v0 else u
            here = pl.position(v0)
            there = pl.position(other)
            length = dist(here, there)
            if length <= coincide_tol:
                ball += wi
            else:
                for i in range(d):
                    g[i] += wi * (here[i] - there[i]) / length
        worst = max(worst, max(0.0, math.sqrt(sum(x * x for x in g)) - ball))
    return worst


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def _barycentric_init(ft: FlowedTopology, terminals: tuple[Point, ...]) -> list[list[float]]:
    """Each branch vertex at the fixed point of neighborhood averaging."""
    t = ft.topology
    n, m = t.n_terminals, t.n_branch
    d = len(terminals[0])
    a = np.zeros((m, m))
    rhs = np.zeros((m, d))
    for u, v in t.edges:
        for here, there in ((u, v), (v, u)):
            if here < n:
                continue
            i = here - n
            a[i, i] += 1.0
            if there < n:
                rhs[i] += np.asarray(terminals[there])
            else:
                a[i, there - n] -= 1.0
    x = np.linalg.solve(a, rhs)
    return [list(row) for row in x]


def minimize(ft: FlowedTopology, b: Boundary, alpha: float,
             cfg: OptimizeConfig | None = None) -> MinimizeResult:
    """Minimize the location energy for a flowed topology over ``b``.

    Deterministic given the config: barycentric initialization, smoothed
    Weiszfeld sweeps with a geometric eps schedule, nearest-vertex snapping
    when it strictly improves the exact energy.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    cfg = cfg or OptimizeConfig()
    t = ft.topology
    terminals = tuple(p for p, _ in b.atoms)
    if len(terminals) != t.n_terminals:
        raise ValueError("boundary does not match topology terminal count")
    n, m = t.n_terminals, t.n_branch
    if m == 0:
        pl = Placement(terminals, ())
        return MinimizeResult(pl, energy(ft, pl, alpha), 0.0, 0, True)

    d = len(terminals[0])
    w = _weights(ft, alpha)
    scale = max(
        (dist(p, q) for i, p in enumerate(terminals) for q in terminals[:i]),
        default=1.0) or 1.0
    pos = _barycentric_init(ft, terminals)

    # incident edge list per branch vertex: (weight, other vertex)
    incident: list[list[tuple[float, int]]] = [[] for _ in range(m)]
    for wi, (u, v) in zip(w, t.edges):
        if u >= n:
            incident[u - n].append((wi, v))
        if v >= n:
            incident[v - n].append((wi, u))

    if d == 2:
        pos, iters = _weiszfeld_2d(t.edges, w, incident, terminals, pos, cfg, scale)
    else:
        pos, iters = _weiszfeld_nd(t.edges, w, incident, terminals, pos, cfg, scale, d)

    pl = Placement(terminals, tuple(tuple(x) for x in pos))
    res = stationarity_residual(ft, pl, alpha, coincide_tol=cfg.tol_collapse)
    value = energy(ft, pl, alpha)
    if cfg.trace is not None:
        cfg.trace({"stage": "done", "iteration": iters, "value": value,
                   "residual": res})
    return MinimizeResult(pl, value, res, iters, res <= cfg.tol_grad)


def _weiszfeld_2d(edges, w, incident, terminals, pos, cfg: OptimizeConfig,
                  scale: float) -> tuple[list[list[float]], int]:
    """Planar hot path: flat float arithmetic, no temporaries."""
    n = len(terminals)
    m = len(pos)

    def exact_energy() -> float:
        total = 0.0
        for wi, (u, v) in zip(w, edges):
            ax, ay = terminals[u] if u < n else pos[u - n]
            bx, by = terminals[v] if v < n else pos[v - n]
            total += wi * math.sqrt((ax - bx) ** 2 + (ay - by) ** 2)
        return total

    iters = 0
    eps = cfg.eps_init * scale
    eps_floor = cfg.eps_min * scale
    move_tol = 1e-11 * scale
    while True:
        e2 = eps * eps
        final = eps <= eps_floor
        stage_tol = move_tol if final else max(2e-2 * eps, move_tol)
        for _ in range(400 if final else 200):
            iters += 1
            move = 0.0
            for bi in range(m):
                nx = ny = den = 0.0
                x, y = pos[bi]
                for wi, other in incident[bi]:
                    qx, qy = terminals[other] if other < n else pos[other - n]
                    coef = wi / math.sqrt((x - qx) ** 2 + (y - qy) ** 2 + e2)
                    den += coef
                    nx += coef * qx
                    ny += coef * qy
                nx /= den
                ny /= den
                dx = nx - x if nx > x else x - nx
                dy = ny - y if ny > y else y - ny
                if dx > move:
                    move = dx
                if dy > move:
                    move = dy
                pos[bi][0] = nx
                pos[bi][1] = ny
            if move <= stage_tol or iters >= cfg.max_iters:
                break
        # snap to the nearest vertex when that strictly improves exact F
        current = exact_energy()
        for bi in range(m):
            x, y = pos[bi]
            best = None
            best_d = float("inf")
            for v in range(n + m):
                if v == n + bi:
                    continue
                qx, qy = terminals[v] if v < n else pos[v - n]
                dd = (x - qx) ** 2 + (y - qy) ** 2
                if dd < best_d:
                    best_d, best = dd, (qx, qy)
            saved = (x, y)
            pos[bi][0], pos[bi][1] = best
            trial = exact_energy()
            if trial < current - 1e-15 * (1.0 + abs(current)):
                current = trial
            else:
                pos[bi][0], pos[bi][1] = saved
        if cfg.trace is not None:
            cfg.trace({"stage": "eps", "iteration": iters, "eps": eps,
                       "value": current})
        if eps <= eps_floor or iters >= cfg.max_iters:
            break
        eps = max(eps * cfg.eps_decay, eps_floor)
    return pos, iters


def _weiszfeld_nd(edges, w, incident, terminals, pos, cfg: OptimizeConfig,
                  scale: float, d: int) -> tuple[list[list[float]], int]:
    n = len(terminals)
    m = len(pos)

    def point(v: int):
        return terminals[v] if v < n else pos[v - n]

    def exact_energy() -> float:
        total = 0.0
        for wi, (u, v) in zip(w, edges):
            pu, pv = point(u), point(v)
            total += wi * math.sqrt(sum((a - c) ** 2 for a, c in zip(pu, pv)))
        return total

    iters = 0
    eps = cfg.eps_init * scale
    eps_floor = cfg.eps_min * scale
    move_tol = 1e-11 * scale
    while True:
        e2 = eps * eps
        final = eps <= eps_floor
        stage_tol = move_tol if final else max(2e-2 * eps, move_tol)
        for _ in range(400 if final else 200):
            iters += 1
            move = 0.0
            for bi in range(m):
                num = [0.0] * d
                den = 0.0
                x = pos[bi]
                for wi, other in incident[bi]:
                    q = point(other)
                    l = math.sqrt(sum((a - c) ** 2 for a, c in zip(x, q)) + e2)
                    coef = wi / l
                    den += coef
                    for i in range(d):
                        num[i] += coef * q[i]
                newx = [num[i] / den for i in range(d)]
                move = max(move, max(abs(a - c) for a, c in zip(newx, x)))
                pos[bi] = newx
            if move <= stage_tol or iters >= cfg.max_iters:
                break
        current = exact_energy()
        for bi in range(m):
            cands = sorted(
                (v for v in range(n + m) if v != n + bi),
                key=lambda v: dist(tuple(pos[bi]), tuple(point(v))))
            saved = list(pos[bi])
            pos[bi] = list(point(cands[0]))
            trial = exact_energy()
            if trial < current - 1e-15 * (1.0 + abs(current)):
                current = trial
            else:
                pos[bi] = saved
        if cfg.trace is not None:
            cfg.trace({"stage": "eps", "iteration": iters, "eps": eps,
                       "value": current})
        if eps <= eps_floor or iters >= cfg.max_iters:
            break
        eps = max(eps * cfg.eps_decay, eps_floor)
    return pos, iters


# ---------------------------------------------------------------------------
# collapse handling and realization
# ---------------------------------------------------------------------------

def detect_collapse(ft: FlowedTopology, pl: Placement,
                    cfg: OptimizeConfig | None = None) -> tuple[FlowedTopology, Placement]:
    """Merge branch vertices lying within ``tol_collapse`` of a vertex.

    Clusters never contain two terminals.  Edges interior to a cluster are
    removed (their flow is conserved), parallel edges are combined, and
    branch vertices left with degree < 3 are spliced out; the resulting
    topology is flagged degenerate so downstream deduplication can apply.
    """
    cfg = cfg or OptimizeConfig()
    t = ft.topology
    n, m = t.n_terminals, t.n_branch
    if m == 0:
        return ft, pl
    nv = n + m
    parent = list(range(nv))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def has_terminal(r: int) -> bool:
        return any(find(v) == r for v in range(n))

    pairs = []
    for v in range(n, nv):
        for u in range(nv):
            if u < v:
                pairs.append((dist(pl.position(u), pl.position(v)), u, v))
    for dd, u, v in sorted(pairs):
        if dd > cfg.tol_collapse:
            break
        if u < n and v < n:
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        if has_terminal(ru) and has_terminal(rv):
            continue
        parent[max(ru, rv)] = min(ru, rv)

    clusters: dict[int, list[int]] = {}
    for v in range(nv):
        clusters.setdefault(find(v), []).append(v)
    if all(len(c) == 1 for c in clusters.values()):
        return ft, pl

    # representative position: terminal if present, else member centroid
    rep_pos: dict[int, Point] = {}
    for r, members in clusters.items():
        terms = [v for v in members if v < n]
        if terms:
            rep_pos[r] = pl.position(terms[0])
        else:
            d = len(pl.terminals[0])
            rep_pos[r] = tuple(
                sum(pl.position(v)[i] for v in members) / len(members)
                for i in range(d))

    # relabel representatives: terminals keep their index, branches compact
    branch_reps = sorted(r for r in clusters if r >= n)
    label = {r: (r if r < n else n + branch_reps.index(r)) for r in clusters}
    merged: dict[tuple[int, int], Fraction] = {}
    for (u, v), f in zip(t.edges, ft.edge_flows):
        a, c = label[find(u)], label[find(v)]
        if a == c:
            continue
        if a > c:
            a, c, f = c, a, -f
        merged[(a, c)] = merged.get((a, c), Fraction(0)) + f
    edges = tuple(sorted(e for e, f in merged.items() if f != 0))
    if _has_graph_cycle(edges):
        # contracting created a loop; leave the configuration to geometric
        # canonicalization instead of rewriting the topology
        return ft, pl
    flows = [merged[e] for e in edges]
    new_t = SteinerTopology(n, len(branch_reps), edges, t.terminal_masses)
    norm_ft, vertex_map = _normalize(new_t, flows)
    new_ft = FlowedTopology(norm_ft.topology, norm_ft.edge_flows, degenerate=True)
    # final branch slot i came from merged vertex `old`, whose cluster rep
    # position is rep_pos[branch_reps[old - n]]
    inverse = {new: old for old, new in vertex_map.items() if old >= n}
    branch_positions = tuple(
        rep_pos[branch_reps[inverse[n + i] - n]]
        for i in range(new_ft.topology.n_branch))
    return new_ft, Placement(pl.terminals, branch_positions)


def _has_graph_cycle(edges: tuple[tuple[int, int], ...]) -> bool:
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent.setdefault(u, u)
        parent.setdefault(v, v)
        ru, rv = find(u), find(v)
        if ru == rv:
            return True
        parent[ru] = rv
    return False


def realize_chain(ft: FlowedTopology, pl: Placement) -> PolyhedralChain:
    """Geometric chain for a flowed topology at given positions (raw form)."""
    segs = []
    for (u, v), f in zip(ft.topology.edges, ft.edge_flows):
        pu, pv = pl.position(u), pl.position(v)
        if pu == pv:
            continue
        segs.append(Segment(pu, pv, f))
    return PolyhedralChain(tuple(segs), canonical=False)


@dataclass(frozen=True)
class OptimizedTopology:
    """Result of minimizing one topology, after collapse resolution."""
    flowed: FlowedTopology
    placement: Placement
    value: float
    residual: float
    iterations: int
    converged: bool


def optimize_topology(ft: FlowedTopology, b: Boundary, alpha: float,
                      cfg: OptimizeConfig | None = None) -> OptimizedTopology:
    """Minimize, then merge collapsed vertices and re-minimize until stable."""
    cfg = cfg or OptimizeConfig()
    iters = 0
    for _ in range(4):
        res = minimize(ft, b, alpha, cfg)
        iters += res.iterations
        new_ft, new_pl = detect_collapse(ft, res.placement, cfg)
        if new_ft is ft:
            return OptimizedTopology(ft, res.placement, res.value,
                                     res.residual, iters, res.converged)
        ft = new_ft
    res = minimize(ft, b, alpha, cfg)
    iters += res.iterations
    return OptimizedTopology(ft, res.placement, res.value, res.residual,
                             iters, res.converged)
