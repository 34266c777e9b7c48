import math

import numpy as np
import pytest

from effop.errors import DimensionMismatch, Diverged, MaxIterExceeded, SylvesterSingular
from effop.harness import gap_separated
from effop.solver import SolverConfig, residual_history, solve_decoupling_fixed_point
from effop.spaces import ModelSpace, eigendecompose, select_eigenvectors, validate_hermitian
from effop.transform import construct_s_direct, decoupling_residual, transformed_blocks
from effop.util import match_spectra

WEAK_2X2 = validate_hermitian(np.array([[1.0, 0.1], [0.1, 3.0]]))
SMALL_ROOT = 10.0 - math.sqrt(101.0)  # small-norm root of -0.1 s^2 + 2 s + 0.1 = 0


def test_scalar_quadratic_converges_to_small_root():
    dm, trace = solve_decoupling_fixed_point(WEAK_2X2, ModelSpace(2, (1,)))
    assert trace.converged
    assert trace.iterations <= 50
    assert abs(dm.s[0, 0] - SMALL_ROOT) <= 1e-10
    assert decoupling_residual(WEAK_2X2, dm) <= 1e-11
    # the surviving eigenvalue is the exact lower one, 2 - sqrt(1.01)
    pp = transformed_blocks(WEAK_2X2, dm).pp
    assert abs(pp[0, 0] - (2.0 - math.sqrt(1.01))) <= 1e-10


def test_uncoupled_converges_in_one_sweep():
    obs = validate_hermitian(np.diag([1.0, 2.0]))
    dm, trace = solve_decoupling_fixed_point(obs, ModelSpace(2, (1,)))
    assert trace.converged
    assert trace.iterations == 1
    assert dm.s[0, 0] == 0.0
    assert dm.provenance.iterations == 1
    assert dm.provenance.residual == 0.0


def test_equal_diagonal_blocks_raise():
    obs = validate_hermitian(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SylvesterSingular):
        solve_decoupling_fixed_point(obs, ModelSpace(2, (1,)))


def test_residual_history_converged_run():
    _, trace = solve_decoupling_fixed_point(WEAK_2X2, ModelSpace(2, (1,)))
    history = residual_history(trace)
    assert [k for k, _ in history] == list(range(1, trace.iterations + 1))
    assert history[-1][1] <= 1e-11
    assert isinstance(trace.monotone_decreasing, bool)


def test_max_iter_carries_best_iterate():
    # second hand iterate of the scalar map: s2 = 0.05*s1^2 - 0.05 with s1 = -0.05
    config = SolverConfig(tol=1e-30, max_iter=2)
    with pytest.raises(MaxIterExceeded) as info:
        solve_decoupling_fixed_point(WEAK_2X2, ModelSpace(2, (1,)), config)
    exc = info.value
    assert len(exc.trace.steps) == 2
    s2_hand = 0.05 * (-0.05) ** 2 - 0.05
    assert abs(exc.best.s[0, 0] - s2_hand) < 1e-12
    assert abs(exc.best.s[0, 0] - (-0.049875)) < 1e-4
    assert exc.residual == pytest.approx(exc.trace.steps[-1].residual)


def test_strong_coupling_diverges():
    obs = validate_hermitian(np.array([[0.0, 10.0], [10.0, 1.0]]))
    with pytest.raises(Diverged):
        solve_decoupling_fixed_point(obs, ModelSpace(2, (1,)))


def test_initial_s_shape_checked():
    config = SolverConfig(initial_s=np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        solve_decoupling_fixed_point(WEAK_2X2, ModelSpace(2, (1,)), config)


def test_initial_s_near_solution_converges_fast():
    config = SolverConfig(initial_s=np.array([[SMALL_ROOT]]))
    dm, trace = solve_decoupling_fixed_point(WEAK_2X2, ModelSpace(2, (1,)), config)
    assert trace.converged
    assert trace.iterations <= 3
    assert abs(dm.s[0, 0] - SMALL_ROOT) < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gap_separated_matches_direct_construction(seed):
    obs = gap_separated(8, 3, gap=1.0, coupling=0.1, seed=seed)
    ms = ModelSpace(8, (1, 2, 3))
    dm, trace = solve_decoupling_fixed_point(obs, ms)
    assert trace.converged
    dec = eigendecompose(obs)
    direct = construct_s_direct(select_eigenvectors(dec, (1, 2, 3)), ms)
    assert np.linalg.norm(dm.s - direct.s) <= 1e-8


def test_converged_spectrum_is_subset():
    obs = gap_separated(9, 3, gap=1.2, coupling=0.09, seed=7)
    ms = ModelSpace(9, (1, 2, 3))
    dm, _ = solve_decoupling_fixed_point(obs, ms)
    exact = np.linalg.eigvalsh(obs.matrix)
    approx = np.linalg.eigvals(transformed_blocks(obs, dm).pp)
    assert match_spectra(approx, exact, rtol=1e-8, subset=True).matched


def test_solver_deterministic():
    obs = gap_separated(8, 2, seed=11)
    ms = ModelSpace(8, (1, 2))
    dm1, trace1 = solve_decoupling_fixed_point(obs, ms)
    dm2, trace2 = solve_decoupling_fixed_point(obs, ms)
    assert np.array_equal(dm1.s, dm2.s)
    assert trace1 == trace2


def test_full_model_space_trivially_converged():
    obs = validate_hermitian(np.diag([1.0, 2.0]))
    dm, trace = solve_decoupling_fixed_point(obs, ModelSpace(2, (1, 2)))
    assert trace.converged
    assert dm.s.shape == (0, 2)
