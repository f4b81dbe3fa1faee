"""Active channel sparsification.

From per-user beam-space power vectors, build a beam-user bipartite graph
and select a beam subset plus a user subset such that every selected user
keeps at most T_dl selected beams and at least P0 selected power, while
the matching size of the selected subgraph (= effective channel rank with
probability 1) is maximized. The selection is solved exactly as a MILP
with binary beam/user indicators and a continuous matching block that is
integral by the bipartite matching polytope property.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .numerics import dft_matrix
from .opt import (LE, LinearProgram, MixedIntegerProgram, MatchingInstance,
                  branch_and_bound, max_matching, milp_solve)

DEFAULT_TH_REL = 1e-2
DEFAULT_EPSILON_FACTOR = 0.5  # epsilon = factor / n_beams, must stay below 1


@dataclass
class BeamGraph:
    """M x K bipartite graph: adjacency from thresholding beam powers."""

    weights: np.ndarray    # nonnegative, weights[m, k] = beam power of user k
    adjacency: np.ndarray  # boolean, weights > threshold
    threshold: float

    @property
    def n_beams(self) -> int:
        return self.weights.shape[0]

    @property
    def n_users(self) -> int:
        return self.weights.shape[1]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> list:
        return [(int(m), int(k)) for m, k in zip(*np.nonzero(self.adjacency))]


def build_beam_graph(spectra, th_rel: float = DEFAULT_TH_REL) -> BeamGraph:
    """Threshold per-user spectra at th_rel times the largest entry."""
    w = np.column_stack([np.asarray(s, dtype=float) for s in spectra]) \
        if not isinstance(spectra, np.ndarray) else np.asarray(spectra, dtype=float)
    if w.ndim != 2:
        raise InvalidArgumentError("build_beam_graph: spectra must form an M x K array")
    if np.any(w < 0):
        raise InvalidArgumentError("build_beam_graph: spectra must be nonnegative")
    th = th_rel * float(w.max()) if w.size else 0.0
    adjacency = w > th
    return BeamGraph(weights=w, adjacency=adjacency, threshold=th)


@dataclass
class SparsificationPlan:
    beams: list                  # selected beam indices, ascending
    users: list                  # selected user indices, ascending
    matching_size: int
    objective: float
    node_count: int
    gap: float = 0.0
    approximate: bool = False
    matched_edges: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "beams": self.beams,
            "users": self.users,
            "matching_size": self.matching_size,
            "objective": self.objective,
            "node_count": self.node_count,
            "gap": self.gap,
            "approximate": self.approximate,
        }, indent=2)


def _var_layout(g: BeamGraph):
    m, k = g.n_beams, g.n_users
    return m, k, m + k  # x block, y block, z block offset


def formulate_milp(g: BeamGraph, t_dl: int, p0: float,
                   epsilon: float) -> MixedIntegerProgram:
    """MILP with binary beam selectors x, user selectors y and a continuous
    matching block z in [0,1]; objective sum(z) + epsilon * sum(x)."""
    m, k = g.n_beams, g.n_users
    if epsilon >= 1.0 / max(m, 1):
        raise InvalidArgumentError(
            f"epsilon {epsilon} must be below 1/M = {1.0 / m} to keep the "
            "matching size of the optimum unchanged")
    a = g.adjacency.astype(float)
    w = g.weights
    nz = m + k + m * k

    def zcol(bm, uk):
        return m + k + bm * k + uk

    c = np.zeros(nz)
    c[:m] = epsilon
    c[m + k:] = 1.0

    rows, senses, rhs = [], [], []

    def add(row, rhs_val):
        rows.append(row)
        senses.append(LE)
        rhs.append(rhs_val)

    for bm in range(m):  # sum_k z_mk <= x_m
        row = np.zeros(nz)
        row[zcol(bm, 0):zcol(bm, 0) + k] = 1.0
        row[bm] = -1.0
        add(row, 0.0)
    for uk in range(k):  # sum_m z_mk <= y_k
        row = np.zeros(nz)
        for bm in range(m):
            row[zcol(bm, uk)] = 1.0
        row[m + uk] = -1.0
        add(row, 0.0)
    for uk in range(k):  # degree cap: sum_m A_mk x_m <= T_dl y_k + M (1 - y_k)
        row = np.zeros(nz)
        row[:m] = a[:, uk]
        row[m + uk] = float(m) - float(t_dl)
        add(row, float(m))
    for uk in range(k):  # power floor: P0 y_k <= sum_m W_mk x_m
        row = np.zeros(nz)
        row[:m] = -w[:, uk] * g.adjacency[:, uk]
        row[m + uk] = float(p0)
        add(row, 0.0)
    for bm in range(m):  # a selected beam needs a selected neighbor user
        row = np.zeros(nz)
        row[bm] = 1.0
        row[m:m + k] = -a[bm, :]
        add(row, 0.0)

    bounds = [(0.0, 1.0)] * (m + k)
    for bm in range(m):
        for uk in range(k):
            bounds.append((0.0, float(a[bm, uk])))  # z <= A pins non-edges at 0

    lp = LinearProgram(c=c, a=np.array(rows), senses=senses, b=np.array(rhs),
                       bounds=bounds)
    return MixedIntegerProgram(lp=lp, integer_vars=list(range(m + k)))


def _round_incumbent(g: BeamGraph, t_dl: int, p0: float):
    """Warm-start hook: round the root LP and certify it with a matching."""
    m, k = g.n_beams, g.n_users
    a = g.adjacency
    w = g.weights

    def heuristic(root_x):
        beams = root_x[:m] > 0.5
        users = root_x[m:m + k] > 0.5
        for _ in range(m + k):
            deg = (a & beams[:, None]).sum(axis=0)
            power = (w * (a & beams[:, None])).sum(axis=0)
            ok = users & (deg >= 1) & (deg <= t_dl) & (power >= p0)
            nbrs = (a & users[None, :]).any(axis=1) & beams
            if ok.sum() == users.sum() and nbrs.sum() == beams.sum():
                break
            users, beams = ok, nbrs
        edges = [(bm, uk) for bm, uk in zip(*np.nonzero(a))
                 if beams[bm] and users[uk]]
        size, matched = max_matching(MatchingInstance(m, k, edges))
        x = np.zeros(m + k + m * k)
        x[:m] = beams
        x[m:m + k] = users
        for (bm, uk) in matched:
            x[m + k + bm * k + uk] = 1.0
        return x

    return heuristic


def solve_sparsification(g: BeamGraph, t_dl: int, p0: float = 0.0,
                         epsilon: float | None = None,
                         node_cap: int = 10**6,
                         collect_nodes: bool = False):
    """Solve the beam/user selection MILP and certify the matching size.

    Returns a SparsificationPlan; when ``collect_nodes`` is set, also the
    list of node LP solutions (for integrality diagnostics).

    The in-package branch-and-bound is used whenever node introspection is
    requested; otherwise the instance goes to the library branch-and-cut
    solver, which copes far better with the weak big-M degree relaxation on
    large graphs. Both produce an exact optimum.
    """
    m, k = g.n_beams, g.n_users
    if epsilon is None:
        epsilon = DEFAULT_EPSILON_FACTOR / max(m, 1)
    mip = formulate_milp(g, t_dl, p0, epsilon)
    if collect_nodes:
        res = branch_and_bound(mip, node_cap=node_cap,
                               warm_start=_round_incumbent(g, t_dl, p0),
                               collect_nodes=True)
    else:
        res = milp_solve(mip)
    if res.x is None:
        plan = SparsificationPlan(beams=[], users=[], matching_size=0,
                                  objective=0.0, node_count=res.node_count,
                                  gap=res.gap, approximate=res.status == "node_cap")
        return (plan, res.node_solutions) if collect_nodes else plan

    x = res.x
    beams = {bm for bm in range(m) if x[bm] > 0.5}
    users = {uk for uk in range(k) if x[m + uk] > 0.5}
    # A user selected with no selected incident beam contributes nothing
    # (possible when P0 = 0); drop it so downstream probing never touches it.
    users = {uk for uk in users if any(g.adjacency[bm, uk] for bm in beams)}
    beams = {bm for bm in beams if any(g.adjacency[bm, uk] for uk in users)}

    edges = [(bm, uk) for (bm, uk) in g.edges() if bm in beams and uk in users]
    size, matched = max_matching(MatchingInstance(m, k, edges))
    z_sum = x[m + k:].sum()
    if abs(z_sum - size) > 1e-6:
        raise InvalidArgumentError(
            f"matching certificate mismatch: MILP z sum {z_sum} vs matching {size}")

    plan = SparsificationPlan(
        beams=sorted(beams), users=sorted(users), matching_size=size,
        objective=float(res.objective), node_count=res.node_count,
        gap=res.gap, approximate=res.status == "node_cap",
        matched_edges=matched)
    _validate_plan(g, plan, t_dl, p0)
    return (plan, res.node_solutions) if collect_nodes else plan


def _validate_plan(g: BeamGraph, plan: SparsificationPlan, t_dl: int, p0: float):
    beams = set(plan.beams)
    for uk in plan.users:
        inc = [bm for bm in beams if g.adjacency[bm, uk]]
        if len(inc) > t_dl:
            raise InvalidArgumentError(f"plan violates degree cap for user {uk}")
        if sum(g.weights[bm, uk] for bm in inc) < p0 - 1e-9:
            raise InvalidArgumentError(f"plan violates power floor for user {uk}")
    for bm in plan.beams:
        if not any(g.adjacency[bm, uk] for uk in plan.users):
            raise InvalidArgumentError(f"plan contains isolated beam {bm}")


def brute_force_sparsify(g: BeamGraph, t_dl: int, p0: float = 0.0) -> SparsificationPlan:
    """Exact optimum by enumeration; test oracle for small instances.

    For each beam subset, the best user set is exactly the set of users
    that are individually feasible (degree and power are per-user), so only
    beam subsets need enumeration.
    """
    m, k = g.n_beams, g.n_users
    active = [bm for bm in range(m) if g.adjacency[bm].any()]
    if len(active) + k > 14:
        raise InvalidArgumentError("brute_force_sparsify: instance too large")
    a = g.adjacency
    w = g.weights
    best = SparsificationPlan(beams=[], users=[], matching_size=0,
                              objective=0.0, node_count=0)
    for mask in range(1 << len(active)):
        beams = [active[i] for i in range(len(active)) if mask >> i & 1]
        sel = np.zeros(m, dtype=bool)
        sel[beams] = True
        deg = (a & sel[:, None]).sum(axis=0)
        power = (w * (a & sel[:, None])).sum(axis=0)
        users = [uk for uk in range(k)
                 if 1 <= deg[uk] <= t_dl and power[uk] >= p0]
        edges = [(bm, uk) for bm in beams for uk in users if a[bm, uk]]
        size, matched = max_matching(MatchingInstance(m, k, edges))
        used_beams = sorted({bm for bm, _ in edges})
        if size > best.matching_size:
            best = SparsificationPlan(beams=used_beams,
                                      users=sorted({uk for _, uk in edges}),
                                      matching_size=size, objective=float(size),
                                      node_count=0, matched_edges=matched)
    return best


@dataclass
class SparsifyingPrecoder:
    """Selected-row conjugate DFT: maps antenna channels to selected-beam
    coefficients. Rows are orthonormal (B B^H = I)."""

    beams: list
    m: int

    def __post_init__(self):
        if not self.beams:
            raise InvalidArgumentError("sparsifying precoder needs at least one beam")
        if any(not (0 <= bm < self.m) for bm in self.beams):
            raise InvalidArgumentError("beam index out of range")

    @property
    def m_prime(self) -> int:
        return len(self.beams)

    def matrix(self) -> np.ndarray:
        f = dft_matrix(self.m)
        return f[:, self.beams].conj().T

    def apply(self, h: np.ndarray) -> np.ndarray:
        return self.matrix() @ h

    def expand(self, h_eff: np.ndarray) -> np.ndarray:
        """Back to the antenna domain, zero outside the selected beams."""
        f = dft_matrix(self.m)
        return f[:, self.beams] @ h_eff


def sparsifying_precoder(plan: SparsificationPlan, m: int) -> SparsifyingPrecoder:
    return SparsifyingPrecoder(beams=list(plan.beams), m=m)
