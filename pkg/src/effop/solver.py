"""Fixed-point solver for the quadratic decoupling equation.

Given the partition blocks (a, b, b_dag, f) of a Hermitian observable,
a decoupling map must satisfy

    b_dag + f s - s (a + b s) = 0.

Each sweep freezes the quadratic term at the current iterate and solves
the Sylvester equation

    f s_new - s_new a = s b s - b_dag,

which is linear in ``s_new`` and uniquely solvable exactly when the
spectra of a and f are disjoint. Starting from s = 0 the iteration
follows the small-norm branch: the solution whose model space is
dominated by its own components. One sweep is exact when b = 0. Other
solution branches are reachable only through the eigenvector
construction. No global convergence guarantee is made; strongly
coupled blocks may exceed the divergence cap, and that outcome is
reported, never hidden.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    Diverged,
    MaxIterExceeded,
    SylvesterSingular,
    ValidationError,
)
from .spaces import ModelSpace, ObservableMatrix
from .transform import DecouplingMap, IterativeProvenance, partition_blocks

__all__ = [
    "SolverConfig",
    "TraceStep",
    "SolverTrace",
    "solve_decoupling_fixed_point",
    "residual_history",
]

SPECTRA_DISJOINT_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-11
    max_iter: int = 500
    initial_s: np.ndarray | None = None
    divergence_cap: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    step_norm: float   # ||s_new - s||_F / max(1, ||s||_F)
    residual: float    # decoupling residual at s_new
    s_norm: float


@dataclass(frozen=True)
class SolverTrace:
    steps: tuple[TraceStep, ...]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def final_residual(self) -> float:
        return self.steps[-1].residual if self.steps else float("inf")

    @property
    def monotone_decreasing(self) -> bool:
        """Whether residuals never increased; reported, not enforced."""
        res = [s.residual for s in self.steps]
        return all(later <= earlier for earlier, later in zip(res, res[1:]))


def residual_history(trace: SolverTrace) -> list[tuple[int, float]]:
    """(iteration, residual) pairs from a solver run."""
    return [(s.iteration, s.residual) for s in trace.steps]


def _equation_residual(s, a, b, b_dag, f) -> float:
    return float(np.linalg.norm(b_dag + f @ s - s @ (a + b @ s)))


def _freeze(ms: ModelSpace, s: np.ndarray, iterations: int, residual: float) -> DecouplingMap:
    out = np.ascontiguousarray(s)
    out.setflags(write=False)
    return DecouplingMap(ms, out, IterativeProvenance(iterations, residual))


def solve_decoupling_fixed_point(obs: ObservableMatrix, ms: ModelSpace,
                                 config: SolverConfig | None = None):
    """Iterate Sylvester sweeps until the decoupling residual and the
    relative step both drop below ``config.tol``.

    Returns ``(map, trace)``. Raises :class:`SylvesterSingular` when
    the diagonal blocks share spectrum, :class:`Diverged` past the norm
    cap, and :class:`MaxIterExceeded` (carrying the best iterate, its
    residual and the trace) when the budget runs out.
    """
    cfg = config or SolverConfig()
    a, b, b_dag, f = partition_blocks(obs, ms)
    d = ms.dim
    nq = ms.total_dim - d

    if nq == 0:
        # Full model space: nothing to decouple.
        trace = SolverTrace((TraceStep(1, 0.0, 0.0, 0.0),), True)
        return _freeze(ms, np.zeros((0, d), dtype=np.complex128), 1, 0.0), trace

    spec_a = np.linalg.eigvalsh(a)
    spec_f = np.linalg.eigvalsh(f)
    gap = float(np.abs(spec_a[:, None] - spec_f[None, :]).min())
    if gap < SPECTRA_DISJOINT_TOL:
        raise SylvesterSingular(
            f"model and complement diagonal blocks share an eigenvalue within "
            f"{SPECTRA_DISJOINT_TOL:.0e} (gap {gap:.3e}); the sweep equation is singular"
        )

    if cfg.initial_s is None:
        s = np.zeros((nq, d), dtype=np.complex128)
    else:
        s = np.array(cfg.initial_s, dtype=np.complex128)
        if s.shape != (nq, d):
            raise DimensionMismatch(f"initial_s has shape {s.shape}, expected {(nq, d)}")

    steps: list[TraceStep] = []
    best_s = s
    best_res = _equation_residual(s, a, b, b_dag, f)
    for k in range(1, cfg.max_iter + 1):
        rhs = s @ b @ s - b_dag
        s_new = scipy.linalg.solve_sylvester(f, -a, rhs)
        step = float(np.linalg.norm(s_new - s) / max(1.0, np.linalg.norm(s)))
        res = _equation_residual(s_new, a, b, b_dag, f)
        s = s_new
        s_norm = float(np.linalg.norm(s))
        steps.append(TraceStep(k, step, res, s_norm))
        if res < best_res:
            best_res, best_s = res, s
        if s_norm > cfg.divergence_cap:
            raise Diverged(
                f"iterate norm {s_norm:.3e} exceeded cap {cfg.divergence_cap:.3e} "
                f"at iteration {k}"
            )
        if step <= cfg.tol and res <= cfg.tol:
            trace = SolverTrace(tuple(steps), True)
            return _freeze(ms, s, k, res), trace

    trace = SolverTrace(tuple(steps), False)
    raise MaxIterExceeded(
        f"no convergence within {cfg.max_iter} iterations; best residual {best_res:.3e}",
        best=_freeze(ms, best_s, len(steps), best_res),
        residual=best_res,
        trace=trace,
    )
