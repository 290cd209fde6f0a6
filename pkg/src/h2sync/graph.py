"""Weighted directed communication graphs and their Laplacians.

Edge convention: a positive weight `adjacency[i, j]` means information
flows from agent j to agent i.  Agent indices are 0-based in code; the
text file format (see `parse_graph`) is 1-based.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, ParseError, SpectrumMismatch
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "CommGraph",
    "LaplacianPair",
    "laplacian",
    "has_spanning_tree",
    "reduced_spectrum_check",
    "parse_graph",
    "graph_to_text",
]


@dataclass
class CommGraph:
    """Weighted directed graph on N >= 2 agents, no self-loops."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.adjacency, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"adjacency must be square, got {A.shape}")
        if A.shape[0] < 2:
            raise DimensionMismatch("need at least 2 agents")
        if not np.all(np.isfinite(A)):
            raise DimensionMismatch("adjacency contains NaN or Inf")
        if np.any(A < 0):
            raise DimensionMismatch("adjacency weights must be nonnegative")
        if np.any(np.diag(A) != 0):
            raise DimensionMismatch("self-loops (a_ii != 0) are not allowed")
        self.adjacency = A

    @property
    def n_agents(self):
        return self.adjacency.shape[0]


@dataclass
class LaplacianPair:
    """Laplacian L, its reduction to agent-N-relative coordinates, and Pi.

    L_reduced[i, j] = L[i, j] - L[N-1, j] for i, j < N-1; its spectrum
    equals the nonzero spectrum of L whenever the graph has a directed
    spanning tree.  Pi = [I, -1] maps stacked agent values to
    differences against agent N.
    """

    L: np.ndarray
    L_reduced: np.ndarray
    Pi: np.ndarray
    n_agents: int = field(init=False)

    def __post_init__(self):
        self.n_agents = self.L.shape[0]


def laplacian(g: CommGraph) -> LaplacianPair:
    """Build (L, L_reduced, Pi) from the adjacency weights."""
    A = g.adjacency
    N = g.n_agents
    L = np.diag(A.sum(axis=1)) - A
    L_reduced = L[: N - 1, : N - 1] - np.tile(L[N - 1, : N - 1], (N - 1, 1))
    Pi = np.hstack([np.eye(N - 1), -np.ones((N - 1, 1))])
    return LaplacianPair(L, L_reduced, Pi)


def has_spanning_tree(g: CommGraph):
    """Return (graph contains a directed spanning tree, list of roots).

    A root is a node from which every node is reachable along directed
    edges; a_ij > 0 is the edge j -> i.  Roots are 0-based indices.
    """
    A = g.adjacency
    N = g.n_agents
    # children[j] = nodes reachable from j in one hop
    children = [np.nonzero(A[:, j] > 0)[0] for j in range(N)]
    roots = []
    for r in range(N):
        seen = np.zeros(N, dtype=bool)
        seen[r] = True
        stack = [r]
        while stack:
            u = stack.pop()
            for v in children[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        if seen.all():
            roots.append(r)
    return bool(roots), roots


def reduced_spectrum_check(lp: LaplacianPair, tol: float, tols: Tolerances = DEFAULT):
    """Match each eigenvalue of L_reduced to a nonzero eigenvalue of L.

    Uses optimal bipartite matching on complex distance.  Returns
    (True, pairing) where pairing is a list of (lambda_L, lambda_Lbar)
    pairs; raises SpectrumMismatch if any pair is further apart than
    `tol`, or if L does not have a simple zero eigenvalue (no spanning
    tree, or a construction bug).
    """
    ev_L = np.linalg.eigvals(lp.L)
    ev_R = np.linalg.eigvals(lp.L_reduced)
    zero_band = tols.zero_eig * (1.0 + np.linalg.norm(lp.L, 2))
    zero_idx = np.nonzero(np.abs(ev_L) < zero_band)[0]
    if len(zero_idx) != 1:
        raise SpectrumMismatch(
            f"L has {len(zero_idx)} eigenvalues within {zero_band:.2e} of zero; "
            "expected exactly one (does the graph contain a spanning tree?)"
        )
    nonzero = np.delete(ev_L, zero_idx[0])
    if len(nonzero) != len(ev_R):
        raise SpectrumMismatch(
            f"{len(nonzero)} nonzero eigenvalues of L vs "
            f"{len(ev_R)} eigenvalues of L_reduced"
        )
    cost = np.abs(nonzero[:, None] - ev_R[None, :])
    rows, cols = linear_sum_assignment(cost)
    bad = cost[rows, cols] > tol
    if np.any(bad):
        worst = cost[rows, cols].max()
        raise SpectrumMismatch(
            f"eigenvalue pairing exceeds tol={tol:.2e} (worst gap {worst:.2e})"
        )
    pairing = [(nonzero[r], ev_R[c]) for r, c in zip(rows, cols)]
    return True, pairing


def parse_graph(text: str) -> CommGraph:
    """Parse the graph text format.

    First non-comment line: N.  Then either N rows of N weights (dense)
    or lines `i j w` meaning a_ij = w with 1-based i, j.
    """
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise ParseError("empty graph file")
    try:
        N = int(lines[0])
    except ValueError:
        raise ParseError(f"expected agent count, got {lines[0]!r}", line=1)
    if N < 2:
        raise ParseError(f"need at least 2 agents, got {N}")
    body = lines[1:]
    rows = [ln.split() for ln in body]
    if len(body) == N and all(len(r) == N for r in rows):
        # dense form; an N=3 edge list also matches this shape, so fall
        # back to edge parsing when the dense read is not a valid graph
        try:
            A = np.array([[float(v) for v in r] for r in rows])
            return CommGraph(A)
        except (ValueError, DimensionMismatch) as exc:
            if N != 3:
                raise ParseError(f"bad dense adjacency: {exc}")
    A = np.zeros((N, N))
    for k, r in enumerate(rows):
        if len(r) != 3:
            raise ParseError(
                f"expected `i j w` edge line, got {' '.join(r)!r}", line=k + 2
            )
        try:
            i, j, w = int(r[0]), int(r[1]), float(r[2])
        except ValueError as exc:
            raise ParseError(f"bad edge line: {exc}", line=k + 2)
        if not (1 <= i <= N and 1 <= j <= N):
            raise ParseError(f"edge indices out of range 1..{N}", line=k + 2)
        A[i - 1, j - 1] = w
    return CommGraph(A)


def graph_to_text(g: CommGraph) -> str:
    """Serialize as an edge list (1-based), round-trippable via parse_graph."""
    out = [str(g.n_agents)]
    ii, jj = np.nonzero(g.adjacency)
    for i, j in zip(ii, jj):
        out.append(f"{i + 1} {j + 1} {g.adjacency[i, j]:.17g}")
    return "\n".join(out) + "\n"
