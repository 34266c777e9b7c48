"""Block-triangular similarity transform built from a decoupling map.

The map s is the strictly lower block of a nilpotent generator S, so
the transform pair (1 - S, 1 + S) is its exact exponential. Applied to
a Hermitian observable the transform leaves the spectrum untouched; the
observable is *decoupled* for a model space when the lower-left block
of the transformed matrix vanishes, and the Frobenius norm of that
block is the decoupling residual. All block computations run on views
picked out by the model-space permutation and are mapped back to the
original index order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import util
from .errors import DimensionMismatch, SingularProjection, ValidationError
from .spaces import EigenSelection, ModelSpace, ObservableMatrix

__all__ = [
    "DirectProvenance",
    "IterativeProvenance",
    "DecouplingMap",
    "TransformedBlocks",
    "construct_s_direct",
    "construct_s_from_span",
    "exp_s",
    "similarity_transform",
    "transformed_blocks",
    "assemble_blocks",
    "partition_blocks",
    "decoupling_residual",
    "decoupled_tolerance",
    "is_decoupled",
]

DECOUPLED_RTOL = 1e-9


@dataclass(frozen=True)
class DirectProvenance:
    """Map built from selected eigenvector components (indices if known)."""

    indices: tuple[int, ...] | None


@dataclass(frozen=True)
class IterativeProvenance:
    """Map produced by the fixed-point solver."""

    iterations: int
    residual: float


@dataclass(frozen=True)
class DecouplingMap:
    """(N-d) x d block defining the nilpotent generator S = Q S P."""

    model_space: ModelSpace
    s: np.ndarray
    provenance: DirectProvenance | IterativeProvenance | None = None

    def __post_init__(self):
        ms = self.model_space
        expected = (ms.total_dim - ms.dim, ms.dim)
        if self.s.shape != expected:
            raise DimensionMismatch(f"s has shape {self.s.shape}, expected {expected}")


def decoupled_tolerance(obs: ObservableMatrix) -> float:
    """Residual level below which an observable counts as decoupled."""
    return DECOUPLED_RTOL * (1.0 + obs.norm)


def partition_blocks(obs: ObservableMatrix, ms: ModelSpace):
    """Model/complement partition (a, b, b_dag, f) of a Hermitian matrix."""
    if obs.dim != ms.total_dim:
        raise DimensionMismatch(f"observable dim {obs.dim} != model space total {ms.total_dim}")
    m = obs.matrix
    p, q = ms.p_rows, ms.q_rows
    return (
        m[np.ix_(p, p)],
        m[np.ix_(p, q)],
        m[np.ix_(q, p)],
        m[np.ix_(q, q)],
    )


def construct_s_from_span(vectors, ms: ModelSpace, *,
                          cond_cap: float = util.DEFAULT_COND_CAP,
                          indices=None) -> DecouplingMap:
    """Decoupling map of the subspace spanned by the given columns.

    Depends only on the span: any invertible recombination of the
    columns yields the same map. The d x d system is solved by a
    pivoted factorization instead of forming an explicit inverse.
    """
    v = util.as_complex_matrix(vectors, "span")
    if v.shape != (ms.total_dim, ms.dim):
        raise DimensionMismatch(f"span has shape {v.shape}, expected {(ms.total_dim, ms.dim)}")
    pv = v[ms.p_rows, :]
    cond = util.condition_number(pv)
    if not (np.isfinite(cond) and cond <= cond_cap):
        raise SingularProjection(
            f"model-space components have condition {cond:.3e} (cap {cond_cap:.3e}); "
            "choose another index set"
        )
    if ms.dim == ms.total_dim:
        s = np.zeros((0, ms.dim), dtype=np.complex128)
    else:
        qv = v[ms.q_rows, :]
        s = np.linalg.solve(pv.T, qv.T).T
    s = np.ascontiguousarray(s)
    s.setflags(write=False)
    idx = None if indices is None else tuple(int(i) for i in indices)
    return DecouplingMap(ms, s, DirectProvenance(idx))


def construct_s_direct(selection: EigenSelection, ms: ModelSpace, *,
                       cond_cap: float = util.DEFAULT_COND_CAP) -> DecouplingMap:
    """Decoupling map from selected eigenvectors: complement components
    times the inverse of the model components."""
    if selection.total_dim != ms.total_dim or selection.dim != ms.dim:
        raise DimensionMismatch(
            f"selection is {selection.total_dim}x{selection.dim}, "
            f"model space wants {ms.total_dim}x{ms.dim}"
        )
    return construct_s_from_span(selection.vectors, ms, cond_cap=cond_cap,
                                 indices=selection.indices)


def exp_s(dm: DecouplingMap, sign: int) -> np.ndarray:
    """Exact exponential 1 + sign*S of the generator, in original index order."""
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}")
    ms = dm.model_space
    out = np.eye(ms.total_dim, dtype=np.complex128)
    if ms.dim < ms.total_dim:
        out[np.ix_(ms.q_rows, ms.p_rows)] = sign * dm.s
    return out


def similarity_transform(obs: ObservableMatrix, dm: DecouplingMap) -> np.ndarray:
    """Dense (1 - S) O (1 + S); same spectrum as O, generally non-Hermitian."""
    if obs.dim != dm.model_space.total_dim:
        raise DimensionMismatch(f"observable dim {obs.dim} != map total {dm.model_space.total_dim}")
    return exp_s(dm, -1) @ obs.matrix @ exp_s(dm, 1)


@dataclass(frozen=True)
class TransformedBlocks:
    """Blocks of the transformed observable in the (model, complement) partition."""

    pp: np.ndarray
    pq: np.ndarray
    qp: np.ndarray
    qq: np.ndarray


def transformed_blocks(obs: ObservableMatrix, dm: DecouplingMap) -> TransformedBlocks:
    """Closed-form blocks of the transformed observable.

    pp = a + b s, pq = b, qq = f - s b, and qp is the residual block of
    the decoupling equation, b_dag + f s - s (a + b s).
    """
    a, b, b_dag, f = partition_blocks(obs, dm.model_space)
    s = dm.s
    pp = a + b @ s
    qp = b_dag + f @ s - s @ pp
    qq = f - s @ b
    return TransformedBlocks(pp=pp, pq=b, qp=qp, qq=qq)


def assemble_blocks(blocks: TransformedBlocks, ms: ModelSpace) -> np.ndarray:
    """Embed partition blocks back into the original index order."""
    n = ms.total_dim
    out = np.zeros((n, n), dtype=np.complex128)
    p, q = ms.p_rows, ms.q_rows
    out[np.ix_(p, p)] = blocks.pp
    out[np.ix_(p, q)] = blocks.pq
    out[np.ix_(q, p)] = blocks.qp
    out[np.ix_(q, q)] = blocks.qq
    return out


def decoupling_residual(obs: ObservableMatrix, dm: DecouplingMap) -> float:
    """Frobenius norm of the lower-left block of the transformed observable."""
    return float(np.linalg.norm(transformed_blocks(obs, dm).qp))


def is_decoupled(obs: ObservableMatrix, dm: DecouplingMap, tol: float | None = None) -> bool:
    limit = decoupled_tolerance(obs) if tol is None else float(tol)
    return decoupling_residual(obs, dm) <= limit
