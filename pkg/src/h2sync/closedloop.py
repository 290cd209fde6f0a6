"""Networked closed-loop assembly and disturbance-to-error norms.

Two independent assembly paths are provided on purpose:

* `assemble_p1` / `assemble_p2` build the system in synchronization-
  error coordinates (the compact Hurwitz form the analysis works on);
* `assemble_stacked` builds the raw network of N plants plus their
  controllers straight from the protocol's canonical (Ac, Bc, Cc, Fc,
  Hc) form and the full Laplacian; `reduce_to_differences` then
  removes the marginally stable synchronized motion by the similarity
  transform [[Pi], [e_N^T]] (x) I.

The error-coordinate derivation is the bug-prone step, so tests diff
the two paths against each other.
"""

import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .conditions import AgentModel
from .errors import DimensionMismatch, NotHurwitz
from .graph import CommGraph, LaplacianPair, laplacian
from .linalg import h2_norm, is_hurwitz, spectral_abscissa
from .protocol import ProtocolRealization, controller_matrices, synthesize_p1, synthesize_p2
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "ClosedLoop",
    "assemble_p1",
    "assemble_p2",
    "assemble_stacked",
    "reduce_to_differences",
    "error_h2",
    "rho_scaling_probe",
    "probe_to_csv",
]


@dataclass
class ClosedLoop:
    """State-space map from stacked disturbances to synchronization errors.

    coordinates is "error-form" (difference coordinates, Hurwitz when
    the design conditions hold) or "stacked-form" (raw network,
    marginally stable along the synchronized motion).  labels describes
    the state blocks.
    """

    A_cl: np.ndarray
    B_cl: np.ndarray
    C_cl: np.ndarray
    n_agents: int
    coordinates: str
    labels: str


def _check_dims(model: AgentModel, real: ProtocolRealization, kind: str):
    if real.kind != kind:
        raise DimensionMismatch(
            f"realization kind {real.kind!r} does not match assembler {kind!r}"
        )
    if real.n != model.n:
        raise DimensionMismatch(
            f"realization built for n={real.n}, model has n={model.n}"
        )


def assemble_p1(model: AgentModel, real: ProtocolRealization, lp: LaplacianPair):
    """Error-form closed loop for Protocol 1: states (xbar, e), each of
    dimension (N-1)n, with e = xbar - chibar.

        dxbar = [I (x) (A - rho BB^T P)] xbar + rho [I (x) BB^T P] e + (Pi (x) E) w
        de    = [I (x) A - rho Lbar (x) I] e + (Pi (x) E) w
    """
    _check_dims(model, real, "p1")
    n, N = model.n, lp.n_agents
    rho = real.rho
    I1 = np.eye(N - 1)
    BBtP = model.B @ model.B.T @ real.P
    Axx = np.kron(I1, model.A - rho * BBtP)
    Axe = rho * np.kron(I1, BBtP)
    Aee = np.kron(I1, model.A) - rho * np.kron(lp.L_reduced, np.eye(n))
    A_cl = np.block([[Axx, Axe], [np.zeros_like(Axe), Aee]])
    PiE = np.kron(lp.Pi, model.E)
    B_cl = np.vstack([PiE, PiE])
    C_cl = np.hstack([np.eye((N - 1) * n), np.zeros(((N - 1) * n, (N - 1) * n))])
    return ClosedLoop(A_cl, B_cl, C_cl, N, "error-form", "xbar | e = xbar - chibar")


def assemble_p2(model: AgentModel, real: ProtocolRealization, lp: LaplacianPair):
    """Error-form closed loop for Protocol 2: states (xbar, ebar, e),
    each of dimension (N-1)n, with e = xbar - chibar and
    ebar = (Lbar (x) I) xbar - xtilde.

        dxbar = [I (x) (A - rho BB^T P)] xbar + rho [I (x) BB^T P] e + (Pi (x) E) w
        debar = [I (x) (A - delta^-2 Q C^T C)] ebar + (Lbar Pi (x) E) w
        de    = [I (x) A - rho Lbar (x) I] e + rho ebar + (Pi (x) E) w
    """
    _check_dims(model, real, "p2")
    n, N = model.n, lp.n_agents
    rho, delta, Q = real.rho, real.delta, real.Q_rho
    I1 = np.eye(N - 1)
    blk = (N - 1) * n
    Z = np.zeros((blk, blk))
    BBtP = model.B @ model.B.T @ real.P
    filt = model.A - (Q @ model.C.T @ model.C) / delta**2
    A_cl = np.block([
        [np.kron(I1, model.A - rho * BBtP), Z, rho * np.kron(I1, BBtP)],
        [Z, np.kron(I1, filt), Z],
        [Z, rho * np.eye(blk),
         np.kron(I1, model.A) - rho * np.kron(lp.L_reduced, np.eye(n))],
    ])
    PiE = np.kron(lp.Pi, model.E)
    B_cl = np.vstack([PiE, np.kron(lp.L_reduced @ lp.Pi, model.E), PiE])
    C_cl = np.hstack([np.eye(blk), Z, Z])
    return ClosedLoop(
        A_cl, B_cl, C_cl, N, "error-form",
        "xbar | ebar = (Lbar (x) I) xbar - xtilde | e = xbar - chibar",
    )


def assemble_stacked(model: AgentModel, real: ProtocolRealization, g: CommGraph):
    """Raw stacked network (x_1..x_N, x_c1..x_cN) built from the
    protocol canonical form and the full Laplacian; output is
    xbar = (Pi (x) I) x.  Marginally stable along synchronized motion.
    """
    if real.n != model.n:
        raise DimensionMismatch(
            f"realization built for n={real.n}, model has n={model.n}"
        )
    Ac, Bc, Cc, Fc, Hc = controller_matrices(real, model)
    lp = laplacian(g)
    N = g.n_agents
    n, nc = model.n, Ac.shape[0]
    IN = np.eye(N)
    A_cl = np.block([
        [np.kron(IN, model.A), np.kron(IN, model.B @ Fc)],
        [np.kron(lp.L, Bc @ model.C), np.kron(IN, Ac) + np.kron(lp.L, Cc @ Hc)],
    ])
    B_cl = np.vstack([
        np.kron(IN, model.E),
        np.zeros((N * nc, N * model.w)),
    ])
    C_cl = np.hstack([
        np.kron(lp.Pi, np.eye(n)),
        np.zeros(((N - 1) * n, N * nc)),
    ])
    return ClosedLoop(
        A_cl, B_cl, C_cl, N, "stacked-form",
        f"x (N blocks of {n}) | x_c (N blocks of {nc})",
    )


def reduce_to_differences(cl: ClosedLoop, model: AgentModel,
                          real: ProtocolRealization):
    """Similarity-transform a stacked-form loop to difference coordinates
    and drop the synchronized (marginal) motion.

    With S = [[Pi], [e_N^T]] applied blockwise, the difference states
    (x_i - x_N, x_ci - x_cN) close on themselves; the retained
    subsystem realizes the same disturbance-to-xbar map and is Hurwitz
    when the design conditions hold.
    """
    if cl.coordinates != "stacked-form":
        raise DimensionMismatch("reduce_to_differences expects a stacked-form loop")
    N = cl.n_agents
    n, nc = model.n, real.controller_state_dim
    S = np.vstack([np.hstack([np.eye(N - 1), -np.ones((N - 1, 1))]),
                   np.eye(N)[N - 1 :]])
    T = sla.block_diag(np.kron(S, np.eye(n)), np.kron(S, np.eye(nc)))
    Tinv = np.linalg.inv(T)
    A_t = T @ cl.A_cl @ Tinv
    B_t = T @ cl.B_cl
    C_t = cl.C_cl @ Tinv
    keep = np.concatenate([
        np.arange((N - 1) * n),
        N * n + np.arange((N - 1) * nc),
    ])
    drop = np.setdiff1d(np.arange(A_t.shape[0]), keep)
    # the difference states must close on themselves; leakage from the
    # absolute states means the loop was not built from a diffusive protocol
    leak = np.abs(A_t[np.ix_(keep, drop)]).max()
    if leak > 1e-9 * (1.0 + np.linalg.norm(cl.A_cl, 2)):
        raise DimensionMismatch(
            f"difference states do not decouple (leakage {leak:.2e}); "
            "is this a diffusively coupled network?"
        )
    A_red = A_t[np.ix_(keep, keep)]
    B_red = B_t[keep]
    C_red = C_t[:, keep]
    return ClosedLoop(
        A_red, B_red, C_red, N, "error-form",
        "xbar | controller-state differences",
    )


def error_h2(cl: ClosedLoop, tols: Tolerances = DEFAULT):
    """H2 norm of the disturbance-to-xbar map; requires A_cl Hurwitz."""
    hurwitz, spectrum = is_hurwitz(cl.A_cl)
    if not hurwitz:
        raise NotHurwitz(
            f"closed loop is not Hurwitz (abscissa {spectrum.real.max():.3e}); "
            "stacked-form loops must go through reduce_to_differences first",
            spectrum,
        )
    return h2_norm(cl.A_cl, cl.B_cl, cl.C_cl, tols)


def rho_scaling_probe(model: AgentModel, g: CommGraph, kind: str, rho_list,
                      delta=None, tols: Tolerances = DEFAULT):
    """Synthesize + assemble + measure for each rho.

    Returns a list of (rho, h2, rho*h2, spectral_abscissa) rows,
    ordered by rho.  For p2, `delta` fixes the low-gain parameter;
    None means the halving search runs per rho.
    """
    lp = laplacian(g)
    rows = []
    for rho in sorted(rho_list):
        if kind == "p1":
            real = synthesize_p1(model, rho, tols)
            cl = assemble_p1(model, real, lp)
        elif kind == "p2":
            real = synthesize_p2(model, rho, delta_hint=delta, tols=tols)
            cl = assemble_p2(model, real, lp)
        else:
            raise DimensionMismatch(f"unknown protocol kind {kind!r}")
        h2 = error_h2(cl, tols)
        rows.append((rho, h2, rho * h2, spectral_abscissa(cl.A_cl)))
    return rows


def probe_to_csv(rows) -> str:
    """CSV with columns rho,h2,rho_times_h2,spectral_abscissa."""
    buf = io.StringIO()
    buf.write("rho,h2,rho_times_h2,spectral_abscissa\n")
    for rho, h2, rh2, absc in rows:
        buf.write(f"{rho:.17g},{h2:.17g},{rh2:.17g},{absc:.17g}\n")
    return buf.getvalue()
