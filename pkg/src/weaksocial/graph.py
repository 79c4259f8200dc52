"""Combination matrices, weak-graph structure and the spectral objects built on it.

Conventions
-----------
Agents are 0-based indices internally; ``labels`` carry the user-facing names
(``"1"``, ``"2"``, ... by default).  Entry ``weights[l, k]`` is the weight that
agent ``k`` applies to information arriving from agent ``l``, so the matrix is
left-stochastic (columns sum to one) and information flows ``l -> k`` whenever
``weights[l, k] > 0``.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import (
    ColumnSumMismatch,
    NegativeEntry,
    NoConvergence,
    NonSquare,
    NoSendingSubnetwork,
    NotIrreducible,
    NotWeaklyStructured,
    SingularSystem,
    ValidationError,
)

INGEST_TOL = 1e-9
PERRON_TOL = 1e-12
PERRON_MAX_ITERS = 100_000
SINGULAR_MARGIN = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CombinationMatrix:
    """Validated left-stochastic weight matrix with agent labels."""

    weights: np.ndarray
    labels: tuple

    @property
    def n_agents(self):
        return self.weights.shape[0]

    def neighbors(self, k):
        """Agents whose data agent ``k`` combines (non-zero weights, self included)."""
        return tuple(np.flatnonzero(self.weights[:, k] > 0))


def validate(matrix, labels=None, tol=INGEST_TOL):
    """Check a raw matrix and return a :class:`CombinationMatrix`.

    Columns whose sums are within ``tol`` of one are renormalized exactly so
    that rounded decimals from configuration files are accepted.

    Raises
    ------
    NonSquare, NegativeEntry, ColumnSumMismatch
        For the first violated condition, scanning column by column.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NonSquare(a.shape)
    n = a.shape[0]
    if labels is None:
        labels = tuple(str(i + 1) for i in range(n))
    else:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise ValidationError("network", f"{len(labels)} labels for {n} agents")
        if len(set(labels)) != n:
            raise ValidationError("network", "agent labels must be unique")
    if not np.all(np.isfinite(a)):
        raise ValidationError("network", "combination matrix has non-finite entries")
    for k in range(n):
        col = a[:, k]
        neg = np.flatnonzero(col < 0)
        if neg.size:
            raise NegativeEntry(int(neg[0]), k, float(col[neg[0]]), labels)
        total = float(col.sum())
        if abs(total - 1.0) > tol:
            raise ColumnSumMismatch(k, total, labels[k])
    return CombinationMatrix(_frozen(_normalize_columns(a)), labels)


def _normalize_columns(a):
    # Stop as soon as a column sums to exactly 1.0 or division no longer
    # changes it, so normalizing already-normalized weights is a no-op and
    # saved scenarios reload bit for bit.
    out = np.array(a, dtype=float)
    for k in range(out.shape[1]):
        col = out[:, k]
        for _ in range(8):
            total = col.sum()
            if total == 1.0:
                break
            nxt = col / total
            if np.array_equal(nxt, col):
                break
            col = nxt
        out[:, k] = col
    return out


def _adjacency(weights):
    n = weights.shape[0]
    return [[int(k) for k in np.flatnonzero(weights[l] > 0) if k != l] for l in range(n)]


def _tarjan(adj):
    """Iterative Tarjan; returns SCCs as sorted lists, in reverse topological order."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack, out = [], []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def _condensation_order(adj, comps):
    """Kahn's algorithm over the condensation; ties broken by smallest member."""
    where = {}
    for c, comp in enumerate(comps):
        for v in comp:
            where[v] = c
    succ = [set() for _ in comps]
    indeg = [0] * len(comps)
    for v, nbrs in enumerate(adj):
        for w in nbrs:
            a, b = where[v], where[w]
            if a != b and b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    heap = [(comps[c][0], c) for c in range(len(comps)) if indeg[c] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(comps[c])
        for b in succ[c]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, (comps[b][0], b))
    return order


def strongly_connected_components(matrix):
    """Strongly connected components of the weight pattern.

    Returns a list of sorted 0-based index lists in topological order of the
    condensation: components that receive no edge from outside come first,
    ties broken by smallest agent index.
    """
    w = matrix.weights if isinstance(matrix, CombinationMatrix) else np.asarray(matrix, float)
    adj = _adjacency(w)
    return _condensation_order(adj, _tarjan(adj))


def _period(block):
    """Period of an irreducible non-negative matrix (1 means primitive)."""
    n = block.shape[0]
    if np.any(np.diag(block) > 0):
        return 1
    adj = _adjacency(block)
    level = [-1] * n
    level[0] = 0
    queue = [0]
    for v in queue:
        for w in adj[v]:
            if level[w] == -1:
                level[w] = level[v] + 1
                queue.append(w)
    diffs = [level[v] + 1 - level[w] for v in range(n) for w in adj[v]]
    return reduce(math.gcd, diffs, 0) or 0


def is_primitive(block):
    block = np.asarray(block, dtype=float)
    if len(strongly_connected_components(block)) != 1:
        return False
    if block.shape[0] == 1:
        return block[0, 0] > 0
    return _period(block) == 1


def _power_iteration(block, tol, max_iters):
    n = block.shape[0]
    y = np.full(n, 1.0 / n)
    if n == 1:
        return y, float(block[0, 0])
    # a positive diagonal makes an irreducible block primitive; otherwise shift
    shift = 0.0 if np.any(np.diag(block) > 0) else 1.0
    b = block + shift * np.eye(n) if shift else block
    residual = np.inf
    for _ in range(max_iters):
        z = b @ y
        s = z.sum()
        if s == 0.0:
            return y, 0.0
        z /= s
        lam = float((block @ z).sum())
        residual = float(np.max(np.abs(block @ z - lam * z)))
        y = z
        if residual <= tol:
            return y, lam
    raise NoConvergence(max_iters, residual)


def perron_vector(block, tol=PERRON_TOL, max_iters=PERRON_MAX_ITERS):
    """Positive eigenvector of an irreducible non-negative block, normalized to sum 1.

    Power iteration from the uniform vector; the residual
    ``max|B y - rho y|`` is driven below ``tol``.

    Raises
    ------
    NotIrreducible
        If the zero pattern of ``block`` is not strongly connected.
    NoConvergence
        If ``max_iters`` iterations do not reach ``tol``.
    """
    b = np.asarray(block, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise NonSquare(b.shape)
    if np.any(b < 0):
        raise ValidationError("block", "matrix has negative entries")
    if len(strongly_connected_components(b)) != 1:
        raise NotIrreducible("block is not irreducible")
    y, _ = _power_iteration(b, tol, max_iters)
    return y


def spectral_radius(block, tol=PERRON_TOL, max_iters=PERRON_MAX_ITERS):
    """Spectral radius of a square non-negative matrix.

    The radius is the largest Perron root over the irreducible diagonal blocks
    of the Frobenius normal form, so reducible inputs are handled exactly.
    """
    b = np.asarray(block, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise NonSquare(b.shape)
    if b.size == 0:
        return 0.0
    rho = 0.0
    for comp in strongly_connected_components(b):
        sub = b[np.ix_(comp, comp)]
        if len(comp) == 1:
            lam = abs(sub[0, 0])
        else:
            _, lam = _power_iteration(sub, tol, max_iters)
        rho = max(rho, lam)
    return rho


@dataclass(frozen=True)
class NetworkPartition:
    """Sending (S) and receiving (R) sub-networks and the canonical reordering.

    ``permutation[c]`` is the original index of the agent at canonical
    position ``c``: sending blocks first (ordered by smallest original index),
    then receiving blocks.  In canonical order the weight matrix reads
    ``[[T_SS, T_SR], [0, T_RR]]``.
    """

    sending_blocks: tuple
    receiving_blocks: tuple
    permutation: np.ndarray
    t_ss: np.ndarray
    t_sr: np.ndarray
    t_rr: np.ndarray
    warnings: tuple = field(default=())

    @property
    def subnet_sizes(self):
        return tuple(len(b) for b in self.sending_blocks + self.receiving_blocks)

    @property
    def n_gs(self):
        return sum(len(b) for b in self.sending_blocks)

    @property
    def n_gr(self):
        return sum(len(b) for b in self.receiving_blocks)

    @property
    def sending_agents(self):
        return tuple(int(k) for k in self.permutation[: self.n_gs])

    @property
    def receiving_agents(self):
        return tuple(int(k) for k in self.permutation[self.n_gs:])

    @property
    def blocks(self):
        return self.sending_blocks + self.receiving_blocks

    def block_of(self, agent):
        for b, block in enumerate(self.blocks):
            if agent in block:
                return b
        raise KeyError(agent)

    def to_canonical(self, a):
        p = self.permutation
        return np.asarray(a)[np.ix_(p, p)]

    def from_canonical(self, a):
        inv = np.argsort(self.permutation)
        return np.asarray(a)[np.ix_(inv, inv)]


def _undirected_groups(weights, members):
    members = sorted(members)
    parent = {v: v for v in members}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for l in members:
        for k in members:
            if l != k and weights[l, k] > 0:
                ra, rb = find(l), find(k)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for v in members:
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def classify(matrix):
    """Split a combination matrix into sending and receiving sub-networks.

    A strongly connected component is *sending* when no edge enters it from
    outside; it must then be primitive.  All other agents are *receiving*; they
    are grouped into blocks by connectivity of the undirected pattern, and
    within a block agents follow the condensation order so the canonical
    matrix stays block upper-triangular.
    """
    if not isinstance(matrix, CombinationMatrix):
        matrix = validate(matrix)
    w = matrix.weights
    n = matrix.n_agents
    comps = strongly_connected_components(w)
    sending, notes = [], []
    for comp in comps:
        inside = np.zeros(n, dtype=bool)
        inside[comp] = True
        closed = not np.any(w[np.ix_(~inside, inside)] > 0)
        if not closed:
            continue
        if not is_primitive(w[np.ix_(comp, comp)]):
            names = ",".join(matrix.labels[k] for k in comp)
            raise NotWeaklyStructured(f"closed sub-network {{{names}}} is not primitive")
        sending.append(tuple(comp))
    if not sending:
        raise NoSendingSubnetwork("no closed strongly connected sub-network")
    sending.sort(key=lambda b: b[0])

    in_s = {k for b in sending for k in b}
    rest = [k for k in range(n) if k not in in_s]
    rank = {}
    for pos, comp in enumerate(comps):
        for k in comp:
            rank[k] = pos
    receiving = []
    for group in _undirected_groups(w, rest):
        ordered = tuple(sorted(group, key=lambda k: (rank[k], k)))
        sub = w[np.ix_(ordered, ordered)]
        if len({rank[k] for k in ordered}) > 1:
            names = ",".join(matrix.labels[k] for k in ordered)
            notes.append(f"receiving sub-network {{{names}}} is connected but not strongly connected")
        if spectral_radius(sub) >= 1.0 - SINGULAR_MARGIN:
            names = ",".join(matrix.labels[k] for k in ordered)
            raise NotWeaklyStructured(f"receiving sub-network {{{names}}} has spectral radius >= 1")
        receiving.append(ordered)
    for note in notes:
        warnings.warn(note, stacklevel=2)

    perm = np.array([k for b in sending + receiving for k in b], dtype=int)
    perm.flags.writeable = False
    ns = len(in_s)
    canon = w[np.ix_(perm, perm)]
    return NetworkPartition(
        sending_blocks=tuple(sending),
        receiving_blocks=tuple(receiving),
        permutation=perm,
        t_ss=_frozen(canon[:ns, :ns]),
        t_sr=_frozen(canon[:ns, ns:]),
        t_rr=_frozen(canon[ns:, ns:]),
        warnings=tuple(notes),
    )


def _check_rr(partition):
    if partition.n_gr and spectral_radius(partition.t_rr) > 1.0 - SINGULAR_MARGIN:
        raise SingularSystem("spectral radius of T_RR is not below one")


def influence_matrix(partition):
    """``W = T_SR (I - T_RR)^{-1}``, shape ``(N_gS, N_gR)``.

    Rows follow the canonical sending order, columns the canonical receiving
    order (see :attr:`NetworkPartition.permutation`).
    """
    _check_rr(partition)
    ns, nr = partition.n_gs, partition.n_gr
    if nr == 0:
        return np.zeros((ns, 0))
    lhs = (np.eye(nr) - partition.t_rr).T
    return np.linalg.solve(lhs, partition.t_sr.T).T


def confinement_matrix(partition):
    """``C = (I - T_RR^T)^{-1}``, shape ``(N_gR, N_gR)``."""
    _check_rr(partition)
    nr = partition.n_gr
    if nr == 0:
        return np.zeros((0, 0))
    return np.linalg.solve(np.eye(nr) - partition.t_rr.T, np.eye(nr))


def sending_perron_vectors(matrix, partition):
    w = matrix.weights
    return [perron_vector(w[np.ix_(b, b)]) for b in partition.sending_blocks]


def limiting_block(partition, perrons=None, W=None):
    """``[[E, E W], [0, 0]]`` in canonical order."""
    ns, nr = partition.n_gs, partition.n_gr
    if perrons is None:
        perrons = [perron_vector(partition.t_ss[np.ix_(idx, idx)])
                   for idx in _local_ranges(partition)]
    E = np.zeros((ns, ns))
    for idx, y in zip(_local_ranges(partition), perrons):
        E[np.ix_(idx, idx)] = np.outer(y, np.ones(len(idx)))
    out = np.zeros((ns + nr, ns + nr))
    out[:ns, :ns] = E
    if nr:
        if W is None:
            W = influence_matrix(partition)
        out[:ns, ns:] = E @ W
    return out, E


def _local_ranges(partition):
    start, out = 0, []
    for b in partition.sending_blocks:
        out.append(list(range(start, start + len(b))))
        start += len(b)
    return out


def limiting_power(matrix, partition=None):
    """Closed-form ``lim A^n``, returned in the ORIGINAL agent order."""
    if partition is None:
        partition = classify(matrix)
    canon, _ = limiting_block(partition)
    return partition.from_canonical(canon)


@dataclass(frozen=True)
class SpectralSummary:
    perron_vectors: tuple
    receiving_radii: tuple
    receiving_perron: tuple
    W: np.ndarray
    E: np.ndarray
    A_inf: np.ndarray
    C: np.ndarray


def summarize(matrix, partition=None):
    """Compute every spectral object for a classified weak graph.

    ``receiving_perron`` holds ``None`` for receiving blocks that are not
    strongly connected (no positive Perron vector exists there).
    """
    if partition is None:
        partition = classify(matrix)
    w = matrix.weights
    perrons = tuple(sending_perron_vectors(matrix, partition))
    radii, rperron = [], []
    for b in partition.receiving_blocks:
        sub = w[np.ix_(b, b)]
        radii.append(spectral_radius(sub))
        try:
            rperron.append(perron_vector(sub))
        except NotIrreducible:
            rperron.append(None)
    W = influence_matrix(partition)
    canon, E = limiting_block(partition, perrons, W)
    return SpectralSummary(
        perron_vectors=perrons,
        receiving_radii=tuple(radii),
        receiving_perron=tuple(rperron),
        W=W,
        E=E,
        A_inf=partition.from_canonical(canon),
        C=confinement_matrix(partition),
    )
