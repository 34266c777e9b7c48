"""Commuting observable sets and their joint reduction.

One decoupling map built from shared eigenvectors serves every member:
each transformed member decouples, the first-type representatives keep
pairwise commutation (symmetries survive the reduction), and the whole
space decomposes into invariant blocks, each carrying its own effective
representatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import util
from .effective import EffectivePair, SecondTypeOperator, first_type, second_type
from .errors import (
    DimensionMismatch,
    NotCommuting,
    NotDecoupled,
    PartitionInvalid,
    SingularProjection,
    SolverFailure,
    ValidationError,
)
from .spaces import (
    EigenSelection,
    ModelSpace,
    ObservableMatrix,
    _normalize_phases,
    validate_index_subset,
)
from .transform import (
    DecouplingMap,
    construct_s_from_span,
    decoupled_tolerance,
    decoupling_residual,
)

__all__ = [
    "CommutingSet",
    "SimultaneousBasis",
    "CommutatorReport",
    "BlockReduction",
    "SpaceDecomposition",
    "verify_commuting",
    "commuting_tolerance",
    "simultaneous_eigenbasis",
    "selection_from_basis",
    "common_s",
    "effective_set",
    "second_type_only",
    "decompose_space",
]

COMM_RTOL = 1e-10
EFFECTIVE_COMM_TOL = 1e-9
_MIX_SEED = 1299827     # fixed seed for the member-mixing weights
_CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class CommutingSet:
    """Pairwise-commuting Hermitian observables; member 1 plays the Hamiltonian."""

    members: tuple[ObservableMatrix, ...]
    commutator_norms: np.ndarray  # (c, c) Frobenius norms

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def hamiltonian(self) -> ObservableMatrix:
        return self.members[0]


def commuting_tolerance(members) -> float:
    return COMM_RTOL * max(m.norm for m in members)


def verify_commuting(members, *, comm_tol: float | None = None) -> CommutingSet:
    """Validate dimensions and pairwise commutators.

    On failure the exception names the offending pair and carries the
    commutator norm.
    """
    obs = tuple(members)
    if not obs:
        raise ValidationError("a commuting set needs at least one member")
    n = obs[0].dim
    for k, m in enumerate(obs, start=1):
        if m.dim != n:
            raise DimensionMismatch(f"member {k} has dim {m.dim}, expected {n}")
    tol = commuting_tolerance(obs) if comm_tol is None else float(comm_tol)
    c = len(obs)
    norms = np.zeros((c, c))
    for i in range(c):
        for j in range(i + 1, c):
            comm = obs[i].matrix @ obs[j].matrix - obs[j].matrix @ obs[i].matrix
            norms[i, j] = norms[j, i] = float(np.linalg.norm(comm))
    if norms.size and norms.max() > tol:
        i, j = divmod(int(norms.argmax()), c)
        raise NotCommuting(
            f"members {i + 1} and {j + 1} have commutator norm "
            f"{norms[i, j]:.6e} (tol {tol:.3e})",
            pair=(i + 1, j + 1),
            norm=float(norms[i, j]),
        )
    norms.setflags(write=False)
    return CommutingSet(obs, norms)


@dataclass(frozen=True)
class SimultaneousBasis:
    """Shared orthonormal eigenbasis; row sigma of ``values`` holds member
    sigma's eigenvalues, column i of ``vectors`` the i-th joint eigenvector."""

    values: np.ndarray    # (c, N) real
    vectors: np.ndarray   # (N, N) complex
    source: CommutingSet
    distinct: bool        # all eigenvalue tuples separated (completeness witness)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[0])

    def value_tuple(self, index: int) -> tuple[float, ...]:
        """Eigenvalue tuple of the 1-based column ``index``."""
        return tuple(float(x) for x in self.values[:, index - 1])


def _cluster_bounds(values, tol):
    bounds = []
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and values[stop] - values[stop - 1] <= tol:
            stop += 1
        bounds.append((start, stop))
        start = stop
    return bounds


def _refine(vectors, members, level):
    """Split a degenerate cluster by diagonalizing the next member inside it."""
    if level >= len(members) or vectors.shape[1] < 2:
        return vectors
    sub = vectors.conj().T @ members[level].matrix @ vectors
    sub = 0.5 * (sub + sub.conj().T)
    vals, rot = np.linalg.eigh(sub)
    out = vectors @ rot
    tol = _CLUSTER_RTOL * (1.0 + float(np.abs(vals).max()))
    for start, stop in _cluster_bounds(vals, tol):
        if stop - start > 1:
            out[:, start:stop] = _refine(out[:, start:stop], members, level + 1)
    return out


def simultaneous_eigenbasis(cset: CommutingSet, *, eig_rtol: float = 1e-10) -> SimultaneousBasis:
    """Joint eigenbasis via a fixed-seed random positive mix of the members.

    Degenerate clusters of the mix are refined by sub-diagonalizing the
    members in order. Columns are sorted by their eigenvalue tuples
    (member 1 first). A warning is emitted when tuples repeat: the set
    then fails to pin one-dimensional joint eigenspaces, though every
    construction downstream stays valid.
    """
    n = cset.dim
    rng = np.random.default_rng(_MIX_SEED)
    weights = rng.uniform(1.0, 2.0, size=cset.size)
    mix = sum(w * m.matrix for w, m in zip(weights, cset.members))
    mix = 0.5 * (mix + mix.conj().T)
    try:
        mix_vals, vectors = np.linalg.eigh(mix)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"mixed-member eigensolver failed: {exc}") from exc
    vectors = vectors.astype(np.complex128)
    tol = _CLUSTER_RTOL * (1.0 + float(np.abs(mix_vals).max()))
    for start, stop in _cluster_bounds(mix_vals, tol):
        if stop - start > 1:
            vectors[:, start:stop] = _refine(vectors[:, start:stop], cset.members, 0)
    vectors = _normalize_phases(vectors)

    values = np.empty((cset.size, n))
    for sig, member in enumerate(cset.members):
        applied = member.matrix @ vectors
        values[sig] = np.real(np.sum(vectors.conj() * applied, axis=0))
        residual = float(np.linalg.norm(applied - vectors * values[sig], axis=0).max())
        limit = eig_rtol * (1.0 + member.norm)
        if residual > limit:
            raise SolverFailure(
                f"member {sig + 1}: joint eigenpair residual {residual:.3e} above {limit:.3e}"
            )

    order = np.lexsort(values[::-1])
    values = values[:, order]
    vectors = vectors[:, order]

    sep = _CLUSTER_RTOL * (1.0 + float(np.abs(values).max()))
    distinct = all(
        float(np.abs(values[:, i + 1] - values[:, i]).max()) > sep for i in range(n - 1)
    )
    if not distinct:
        warnings.warn(
            "eigenvalue tuples are not all distinct; the commuting set does not "
            "single out a unique joint basis",
            stacklevel=2,
        )
    values.setflags(write=False)
    vectors.setflags(write=False)
    return SimultaneousBasis(values, vectors, cset, distinct)


def selection_from_basis(basis: SimultaneousBasis, indices) -> EigenSelection:
    """Eigen selection drawn from a joint basis, labeled by member 1's values."""
    idx = validate_index_subset(indices, basis.dim, name="J")
    cols = np.asarray(idx, dtype=np.intp) - 1
    values = basis.values[0, cols].copy()
    vectors = basis.vectors[:, cols].copy()
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenSelection(basis.source, idx, values, vectors)


def _common_s_from_basis(basis: SimultaneousBasis, indices, model_indices, *,
                         cond_cap: float) -> DecouplingMap:
    selection = selection_from_basis(basis, indices)
    ms = ModelSpace(basis.dim, tuple(int(k) for k in model_indices))
    return construct_s_from_span(selection.vectors, ms, cond_cap=cond_cap,
                                 indices=selection.indices)


def common_s(cset: CommutingSet, indices, model_indices, *,
             cond_cap: float = util.DEFAULT_COND_CAP) -> DecouplingMap:
    """One decoupling map serving every member, built from the shared
    eigenvectors at ``indices`` for the model space ``model_indices``."""
    basis = simultaneous_eigenbasis(cset)
    return _common_s_from_basis(basis, indices, model_indices, cond_cap=cond_cap)


@dataclass(frozen=True)
class CommutatorReport:
    """Pairwise commutator norms of the first-type representatives."""

    norms: np.ndarray
    max_norm: float
    tol: float

    @property
    def preserved(self) -> bool:
        return self.max_norm <= self.tol


def effective_set(cset: CommutingSet, dm: DecouplingMap, *,
                  tol: float | None = None,
                  comm_tol: float = EFFECTIVE_COMM_TOL):
    """Effective pair for every member under one shared map.

    Every member must decouple under ``dm``; the offending member index
    is reported otherwise. Returns the pairs together with a commutator
    report for the first-type representatives.
    """
    pairs: list[EffectivePair] = []
    for sig, member in enumerate(cset.members, start=1):
        limit = decoupled_tolerance(member) if tol is None else float(tol)
        residual = decoupling_residual(member, dm)
        if residual > limit:
            raise NotDecoupled(
                f"member {sig}: residual {residual:.3e} exceeds {limit:.3e}",
                member=sig,
                residual=residual,
            )
        pairs.append(EffectivePair(first_type(member, dm, tol=limit), second_type(member, dm)))
    c = len(pairs)
    norms = np.zeros((c, c))
    for i in range(c):
        for j in range(i + 1, c):
            fi, fj = pairs[i].first.matrix, pairs[j].first.matrix
            norms[i, j] = norms[j, i] = float(np.linalg.norm(fi @ fj - fj @ fi))
    norms.setflags(write=False)
    return pairs, CommutatorReport(norms, float(norms.max()) if norms.size else 0.0, comm_tol)


def second_type_only(outside: ObservableMatrix, dm: DecouplingMap) -> SecondTypeOperator:
    """Hermitian representative for an observable outside the commuting set.

    No decoupling is required or implied; the operator reproduces the
    block of matrix elements between vectors of the map's invariant
    subspace, and nothing more.
    """
    return second_type(outside, dm)


@dataclass(frozen=True)
class BlockReduction:
    """One invariant block: its index set, model space, map and pairs."""

    indices: tuple[int, ...]
    model_space: ModelSpace
    decoupling: DecouplingMap
    pairs: tuple[EffectivePair, ...]


@dataclass(frozen=True)
class SpaceDecomposition:
    """Per-block reductions whose joined spectra rebuild each member's."""

    blocks: tuple[BlockReduction, ...]
    spectrum_checks: tuple[util.SpectrumMatch, ...]  # one per member

    @property
    def complete(self) -> bool:
        return all(check.matched for check in self.spectrum_checks)


def decompose_space(cset: CommutingSet, partition, model_spaces, *,
                    cond_cap: float = util.DEFAULT_COND_CAP,
                    match_rtol: float = 1e-9) -> SpaceDecomposition:
    """Split the whole space into invariant blocks and reduce every member
    inside each block.

    ``partition`` lists disjoint 1-based index blocks covering {1..N} in
    the joint-basis ordering; ``model_spaces`` gives one model index set
    per block.
    """
    blocks_idx = [tuple(int(i) for i in block) for block in partition]
    spaces_idx = [tuple(int(i) for i in k) for k in model_spaces]
    if len(blocks_idx) != len(spaces_idx):
        raise PartitionInvalid(
            f"{len(blocks_idx)} blocks but {len(spaces_idx)} model spaces"
        )
    n = cset.dim
    flat = [i for block in blocks_idx for i in block]
    if len(set(flat)) != len(flat):
        raise PartitionInvalid("blocks overlap")
    if sorted(flat) != list(range(1, n + 1)):
        raise PartitionInvalid(f"blocks must cover 1..{n} exactly")

    basis = simultaneous_eigenbasis(cset)
    reductions: list[BlockReduction] = []
    for r, (block, kset) in enumerate(zip(blocks_idx, spaces_idx), start=1):
        try:
            dm = _common_s_from_basis(basis, block, kset, cond_cap=cond_cap)
            pairs, _ = effective_set(cset, dm)
        except SingularProjection as exc:
            raise SingularProjection(f"block {r} (J={block}, K={kset}): {exc}") from exc
        except NotDecoupled as exc:
            raise NotDecoupled(
                f"block {r} (J={block}): {exc}", member=exc.member, residual=exc.residual
            ) from exc
        reductions.append(BlockReduction(block, dm.model_space, dm, tuple(pairs)))

    checks = []
    for sig, member in enumerate(cset.members):
        approx = np.concatenate(
            [np.linalg.eigvals(red.pairs[sig].first.matrix) for red in reductions]
        )
        checks.append(util.match_spectra(approx, np.linalg.eigvalsh(member.matrix),
                                         rtol=match_rtol))
    return SpaceDecomposition(tuple(reductions), tuple(checks))
