"""Executable solvability checks for the two protocol designs.

Full-state coupling requires: (a) (A,B) stabilizable, (b) all
eigenvalues of A in the closed left half plane, (c) the graph contains
a directed spanning tree, (d) im E contained in im B.

Partial-state coupling requires: (a) (A,B) stabilizable and (C,A)
detectable, (b) closed-left-half-plane A, (c) (A,E,C,0) minimum phase
and left invertible, (d) spanning tree, (e) im E contained in im B.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, ParseError, RankDeficientEverywhere
from .graph import CommGraph, has_spanning_tree
from .linalg import spectral_abscissa
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "AgentModel",
    "SolvabilityReport",
    "check_stabilizable",
    "check_detectable",
    "check_clhp",
    "check_disturbance_match",
    "check_minphase_leftinv",
    "invariant_zeros",
    "full_report",
    "parse_model",
    "model_to_text",
]

# fixed seed for the randomized normal-rank probe points: rank decisions
# must be reproducible run to run
_RANK_PROBE_SEED = 1729


@dataclass
class AgentModel:
    """One agent of the homogeneous network: dx = Ax + Bu + Ew, y = Cx."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray
    coupling_kind: str = "partial-state"

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.E = np.atleast_2d(np.asarray(self.E, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} cols, got {self.C.shape}")
        if self.E.shape[0] != n:
            raise DimensionMismatch(f"E must have {n} rows, got {self.E.shape}")
        for name in ("A", "B", "C", "E"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DimensionMismatch(f"{name} contains NaN or Inf")
        if self.coupling_kind not in ("full-state", "partial-state"):
            raise DimensionMismatch(
                f"coupling_kind must be full-state or partial-state, "
                f"got {self.coupling_kind!r}"
            )
        if self.coupling_kind == "full-state" and not (
            self.C.shape == (n, n) and np.array_equal(self.C, np.eye(n))
        ):
            raise DimensionMismatch("full-state coupling requires C = I")

    @classmethod
    def full_state(cls, A, B, E):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(A, B, np.eye(A.shape[0]), E, coupling_kind="full-state")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def w(self):
        return self.E.shape[1]


@dataclass
class SolvabilityReport:
    """Outcome of every applicable solvability check."""

    coupling_kind: str
    stabilizable: bool
    detectable: bool
    clhp_eigs: bool
    spanning_tree: bool
    disturbance_matched: bool
    disturbance_gain: np.ndarray  # X with B X ~= E (least squares)
    minphase_leftinv: bool
    invariant_zeros: list
    overall: bool = field(init=False)

    # condition letters per coupling kind, in reporting order
    _FULL = (
        ("(a)", "stabilizable"),
        ("(b)", "clhp_eigs"),
        ("(c)", "spanning_tree"),
        ("(d)", "disturbance_matched"),
    )
    _PARTIAL = (
        ("(a)", "stabilizable_and_detectable"),
        ("(b)", "clhp_eigs"),
        ("(c)", "minphase_leftinv"),
        ("(d)", "spanning_tree"),
        ("(e)", "disturbance_matched"),
    )

    def __post_init__(self):
        self.overall = not self.failed_conditions()

    def _applicable(self):
        return self._FULL if self.coupling_kind == "full-state" else self._PARTIAL

    def condition_values(self):
        """(letter, name, passed) for each applicable condition."""
        out = []
        for letter, name in self._applicable():
            if name == "stabilizable_and_detectable":
                ok = self.stabilizable and self.detectable
            else:
                ok = getattr(self, name)
            out.append((letter, name, bool(ok)))
        return out

    def failed_conditions(self):
        return [
            (letter, name)
            for letter, name, ok in self.condition_values()
            if not ok
        ]

    def to_text(self):
        """Flat key/value serialization used by the CLI `check` command."""
        lines = [f"coupling_kind={self.coupling_kind}"]
        for key in (
            "stabilizable",
            "detectable",
            "clhp_eigs",
            "spanning_tree",
            "disturbance_matched",
            "minphase_leftinv",
        ):
            lines.append(f"{key}={str(getattr(self, key)).lower()}")
        zeros = " ".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in self.invariant_zeros)
        lines.append(f"invariant_zeros={zeros}")
        failed = " ".join(
            f"{letter}:{name}" for letter, name in self.failed_conditions()
        )
        lines.append(f"failed_conditions={failed}")
        lines.append(f"overall={str(self.overall).lower()}")
        return "\n".join(lines) + "\n"


def _pbh_rank_ok(A, W, stacked, tols):
    """PBH test: full rank of [lI - A, W] (or [lI - A; W]) at every
    eigenvalue of A with nonnegative real part."""
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real < -tols.clhp_margin * (1.0 + np.linalg.norm(A, 2)):
            continue
        M = lam * np.eye(n) - A
        pencil = np.vstack([M, W]) if stacked else np.hstack([M, W])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[min(pencil.shape) - 1] <= tols.rank_rel * sv[0]:
            return False
    return True


def check_stabilizable(A, B, tols: Tolerances = DEFAULT) -> bool:
    """PBH stabilizability: rank [lI - A, B] = n at unstable eigenvalues."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return _pbh_rank_ok(A, B, stacked=False, tols=tols)


def check_detectable(A, C, tols: Tolerances = DEFAULT) -> bool:
    """Dual PBH: rank [lI - A; C] = n at unstable eigenvalues."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    return _pbh_rank_ok(A, C, stacked=True, tols=tols)


def check_clhp(A, tols: Tolerances = DEFAULT) -> bool:
    """All eigenvalues of A in the closed left half plane."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return spectral_abscissa(A) <= tols.clhp_margin * (1.0 + np.linalg.norm(A, 2))


def check_disturbance_match(B, E, tols: Tolerances = DEFAULT):
    """Test im E within im B; returns (matched, X) with X = argmin ||BX - E||."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    E = np.atleast_2d(np.asarray(E, dtype=float))
    X, *_ = np.linalg.lstsq(B, E, rcond=None)
    resid = np.linalg.norm(B @ X - E, 2)
    return bool(resid <= tols.rank_rel * (1.0 + np.linalg.norm(E, 2))), X


def _pencil(A, E, C, s):
    n = A.shape[0]
    return np.block(
        [[s * np.eye(n) - A, -E], [C.astype(complex), np.zeros((C.shape[0], E.shape[1]))]]
    )


def _rank(M, tols):
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tols.rank_rel * sv[0]))


def invariant_zeros(A, E, C, tols: Tolerances = DEFAULT):
    """Finite invariant zeros of the channel (A, E, C, 0).

    Normal rank is certified at two random probe points with |s| in
    [1, 10], re-drawn if within 1e-3 of an eigenvalue of A.  Raises
    RankDeficientEverywhere when the normal rank is below n + w (the
    channel is not left invertible and the zero list is undefined).
    Zeros come from the generalized eigenproblem on the pencil
    (M, N) = ([[A, E], [C, 0]], diag(I, 0)); infinite eigenvalues are
    discarded, including candidates beyond the zero_infinity_radius
    trust region (the split infinite structure of rounded data).  For
    non-square pencils a random row/column compression squares the
    problem and each candidate is verified against the original pencil.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    E = np.atleast_2d(np.asarray(E, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n, w, p = A.shape[0], E.shape[1], C.shape[0]

    rng = np.random.default_rng(_RANK_PROBE_SEED)
    eigs = np.linalg.eigvals(A)

    def draw_point():
        for _ in range(100):
            s = rng.uniform(1, 10) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            if np.min(np.abs(s - eigs)) > 1e-3:
                return s
        raise RuntimeError(
            "could not draw a probe point away from the spectrum of A"
        )

    normal_rank = max(_rank(_pencil(A, E, C, draw_point()), tols) for _ in range(2))
    if normal_rank < n + w:
        raise RankDeficientEverywhere(
            f"system pencil has normal rank {normal_rank} < n + w = {n + w}; "
            "the disturbance channel is not left invertible"
        )

    # left invertibility forces p >= w, so the pencil is square or tall
    M = np.block([[A, E], [C, np.zeros((p, w))]])
    Npencil = sla.block_diag(np.eye(n), np.zeros((p, w)))
    if p == w:
        Mc, Nc = M, Npencil
    else:
        # square up the tall pencil by random row compression, then verify
        # candidates on the original pencil to drop compression artifacts
        T = rng.standard_normal((n + w, n + p))
        Mc, Nc = T @ M, T @ Npencil
    alpha, beta = sla.eig(Mc, Nc, right=False, homogeneous_eigvals=True)
    alpha, beta = np.ravel(alpha), np.ravel(beta)

    # rounding splits the infinite zero structure of high-relative-degree
    # channels into finite pairs of magnitude ~eps^(-1/k); anything beyond
    # the trust radius is classified as numerically infinite
    far = tols.zero_infinity_radius * (1.0 + np.linalg.norm(A, 2))
    zeros = []
    for a, b in zip(alpha, beta):
        if np.abs(b) <= 1e-12 * max(1.0, np.abs(a)):
            continue  # infinite eigenvalue
        z = a / b
        if np.abs(z) > far:
            continue
        if p != w:
            sv = np.linalg.svd(_pencil(A, E, C, z), compute_uv=False)
            if sv[min(n + p, n + w) - 1] > tols.rank_rel * max(sv[0], 1.0) * 1e3:
                continue
        zeros.append(complex(z))
    return sorted(zeros, key=lambda z: (z.real, z.imag))


def check_minphase_leftinv(A, E, C, tols: Tolerances = DEFAULT):
    """Return (minimum phase and left invertible, finite invariant zeros).

    zeros is None when the channel is not left invertible.
    """
    try:
        zeros = invariant_zeros(A, E, C, tols)
    except RankDeficientEverywhere:
        return False, None
    A = np.atleast_2d(np.asarray(A, dtype=float))
    margin = tols.clhp_margin * (1.0 + np.linalg.norm(A, 2))
    minphase = all(z.real < -margin for z in zeros)
    return bool(minphase), zeros


def full_report(model: AgentModel, g: CommGraph, tols: Tolerances = DEFAULT):
    """Aggregate every applicable solvability check into one report."""
    stab = check_stabilizable(model.A, model.B, tols)
    detect = check_detectable(model.A, model.C, tols)
    clhp = check_clhp(model.A, tols)
    tree, _ = has_spanning_tree(g)
    matched, X = check_disturbance_match(model.B, model.E, tols)
    if model.coupling_kind == "partial-state":
        minphase, zeros = check_minphase_leftinv(model.A, model.E, model.C, tols)
    else:
        minphase, zeros = True, []
    return SolvabilityReport(
        coupling_kind=model.coupling_kind,
        stabilizable=stab,
        detectable=detect,
        clhp_eigs=clhp,
        spanning_tree=tree,
        disturbance_matched=matched,
        disturbance_gain=X,
        minphase_leftinv=minphase,
        invariant_zeros=zeros if zeros is not None else [],
    )


def parse_model(text: str, coupling_kind: str = None) -> AgentModel:
    """Parse the model text format: `n m p w` header, then the entries
    of A (n rows), B (n rows), C (p rows), E (n rows), row-major.

    coupling_kind defaults to full-state when C = I, else partial-state.
    """
    tokens = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            tokens.extend(ln.split())
    if len(tokens) < 4:
        raise ParseError("model file must start with `n m p w`")
    try:
        n, m, p, w = (int(t) for t in tokens[:4])
    except ValueError:
        raise ParseError(f"bad header {' '.join(tokens[:4])!r}; expected 4 ints")
    need = 4 + n * n + n * m + p * n + n * w
    if len(tokens) != need:
        raise ParseError(
            f"expected {need - 4} matrix entries for n={n} m={m} p={p} w={w}, "
            f"got {len(tokens) - 4}"
        )
    try:
        vals = np.array([float(t) for t in tokens[4:]])
    except ValueError as exc:
        raise ParseError(f"bad matrix entry: {exc}")
    ofs = 0

    def take(rows, cols):
        nonlocal ofs
        M = vals[ofs : ofs + rows * cols].reshape(rows, cols)
        ofs += rows * cols
        return M

    A, B, C, E = take(n, n), take(n, m), take(p, n), take(n, w)
    if coupling_kind is None:
        coupling_kind = (
            "full-state"
            if C.shape == (n, n) and np.array_equal(C, np.eye(n))
            else "partial-state"
        )
    try:
        return AgentModel(A, B, C, E, coupling_kind=coupling_kind)
    except DimensionMismatch as exc:
        raise ParseError(str(exc))


def model_to_text(model: AgentModel) -> str:
    """Serialize a model in the `parse_model` format."""
    out = [f"{model.n} {model.m} {model.p} {model.w}"]
    for M in (model.A, model.B, model.C, model.E):
        for row in M:
            out.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(out) + "\n"
