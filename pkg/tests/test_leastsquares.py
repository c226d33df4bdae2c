import numpy as np
import pytest

from fanion.leastsquares import (
    GridCell,
    LlsProblem,
    RunConfig,
    grid_search,
    lls_grad,
    lls_loss,
    lls_make,
    run_optimizer,
)
from fanion.lmo import Muon, Nsgd, parse_lmo_spec
from fanion.matrices import exact_svd


def identity_problem(n, x0):
    x0 = np.asarray(x0, dtype=float)
    return LlsProblem(m_left=np.eye(n), n_right=np.eye(x0.shape[1]), s=np.zeros_like(x0), x0=x0)


class TestProblem:
    def test_make_shapes_and_spectra(self):
        p = lls_make(12, 8, x0_std=0.1, seed=0)
        assert p.m_left.shape == (12, 12)
        assert p.n_right.shape == (8, 8)
        assert p.s.shape == (12, 8) and not p.s.any()
        assert p.x0.shape == (12, 8)
        for mat in (p.m_left, p.n_right):
            assert np.linalg.norm(mat - mat.T) <= 1e-10
            sigma = exact_svd(mat).sigma
            assert np.all(sigma >= 0) and np.all(sigma <= 1 + 1e-12)

    def test_deterministic(self):
        a = lls_make(6, 6, seed=3)
        b = lls_make(6, 6, seed=3)
        np.testing.assert_array_equal(a.x0, b.x0)
        np.testing.assert_array_equal(a.m_left, b.m_left)

    def test_scalar_problem(self):
        p = lls_make(1, 1, x0_std=0.5, seed=1)
        assert p.x0.shape == (1, 1)
        x = np.array([[2.0]])
        assert lls_loss(p, x) == pytest.approx(0.5 * 4.0 * p.m_left[0, 0] * p.n_right[0, 0])


class TestLossAndGrad:
    def test_identity_reduction(self):
        n = 5
        p = identity_problem(n, np.eye(n))
        assert lls_loss(p, np.eye(n)) == pytest.approx(n / 2)

    def test_minimizer(self):
        p = lls_make(4, 4, seed=2)
        assert lls_loss(p, p.s) == 0.0
        np.testing.assert_allclose(lls_grad(p, p.s), np.zeros((4, 4)), atol=1e-15)

    def test_matches_trace_form(self):
        rng = np.random.default_rng(5)
        p = lls_make(6, 4, seed=5)
        x = rng.standard_normal((6, 4))
        e = x - p.s
        expected = 0.5 * np.trace(e.T @ p.m_left @ e @ p.n_right)
        assert lls_loss(p, x) == pytest.approx(expected, rel=1e-12)

    def test_identity_gradient(self):
        x = np.random.default_rng(6).standard_normal((3, 4))
        p = identity_problem(3, np.zeros((3, 4)))
        np.testing.assert_allclose(lls_grad(p, x), x, atol=1e-15)

    def test_finite_difference_gradient(self):
        rng = np.random.default_rng(7)
        for trial in range(3):
            p = lls_make(5, 4, seed=trial)
            x = rng.standard_normal((5, 4))
            g = lls_grad(p, x)
            h = 1e-5
            fd = np.zeros_like(x)
            for i in range(5):
                for j in range(4):
                    up = x.copy(); up[i, j] += h
                    dn = x.copy(); dn[i, j] -= h
                    fd[i, j] = (lls_loss(p, up) - lls_loss(p, dn)) / (2 * h)
            assert np.linalg.norm(fd - g) / np.linalg.norm(g) <= 1e-6

    def test_shape_mismatch(self):
        p = lls_make(3, 3, seed=0)
        with pytest.raises(ValueError, match="shape"):
            lls_loss(p, np.zeros((4, 3)))

    def test_convexity_along_lines(self):
        rng = np.random.default_rng(8)
        p = lls_make(6, 6, seed=9)
        for _ in range(25):
            x = rng.standard_normal((6, 6))
            y = rng.standard_normal((6, 6))
            t = float(rng.uniform())
            lhs = lls_loss(p, t * x + (1 - t) * y)
            rhs = t * lls_loss(p, x) + (1 - t) * lls_loss(p, y)
            assert lhs <= rhs + 1e-10


class TestRunOptimizer:
    def test_threshold_counting(self):
        # scalar identity problem: NSGD with lr 0.5 halves x once, loss 0.125
        p = identity_problem(1, np.array([[1.0]]))
        cfg = RunConfig(spec=parse_lmo_spec("nsgd"), lr=0.5, beta=0.0, mode="none",
                        max_iters=10, loss_threshold=0.13)
        trace = run_optimizer(p, cfg)
        assert trace.iters_to_threshold == 1
        assert trace.losses[0] == pytest.approx(0.5)
        assert trace.losses[1] == pytest.approx(0.125)

    def test_threshold_never_reached_with_tiny_lr(self):
        p = lls_make(6, 6, seed=10)
        cfg = RunConfig(spec=parse_lmo_spec("nsgd"), lr=1e-9, beta=0.0,
                        max_iters=30, loss_threshold=1e-6)
        trace = run_optimizer(p, cfg)
        assert trace.iters_to_threshold is None
        assert len(trace.losses) == 31
        assert not trace.diverged

    def test_muon_monotone_after_burn_in(self):
        p = lls_make(10, 10, seed=11)
        cfg = RunConfig(spec=parse_lmo_spec("muon"), lr=0.003, beta=0.5,
                        max_iters=300, loss_threshold=1e-4, stop_at_threshold=False)
        trace = run_optimizer(p, cfg)
        tail = trace.losses[20:150]
        assert np.all(np.diff(tail) <= 1e-12)

    def test_divergence_guard(self):
        p = lls_make(6, 6, seed=12)
        cfg = RunConfig(spec=parse_lmo_spec("muon"), lr=1e4, beta=0.0,
                        max_iters=200, loss_threshold=1e-9)
        trace = run_optimizer(p, cfg)
        assert trace.diverged
        assert trace.iters_to_threshold is None
        assert len(trace.losses) < 201

    def test_norm_logging_and_ordering(self):
        p = lls_make(8, 8, seed=13)
        cfg = RunConfig(spec=parse_lmo_spec("nsgd"), lr=0.05, beta=0.5,
                        max_iters=40, loss_threshold=1e-12, log_norms=True,
                        stop_at_threshold=False)
        trace = run_optimizer(p, cfg)
        n = len(trace.losses)
        assert len(trace.grad_frobenius) == n
        assert np.all(trace.grad_spectral <= trace.grad_frobenius * (1 + 1e-9))
        assert np.all(trace.grad_frobenius <= trace.grad_nuclear * (1 + 1e-9))

    def test_config_validation(self):
        spec = parse_lmo_spec("nsgd")
        with pytest.raises(ValueError):
            RunConfig(spec=spec, lr=0.0, beta=0.0)
        with pytest.raises(ValueError):
            RunConfig(spec=spec, lr=0.1, beta=1.0)
        with pytest.raises(ValueError):
            RunConfig(spec=spec, lr=0.1, beta=0.5, loss_threshold=0.0)


class TestGridSearch:
    def test_single_cell(self):
        p = lls_make(6, 6, seed=14)
        grid = grid_search(p, Nsgd(), [0.05], [0.5], max_iters=200, loss_threshold=1e-4)
        assert len(grid.cells) == 1
        assert grid.best == grid.cells[0]

    def test_best_minimizes_iterations(self):
        p = lls_make(8, 8, seed=15)
        grid = grid_search(p, Nsgd(), [0.001, 0.05], [0.0, 0.9],
                           max_iters=300, loss_threshold=1e-3)
        reached = [c for c in grid.cells if c.iters_to_threshold is not None]
        assert grid.best in grid.cells
        if reached:
            assert grid.best.iters_to_threshold == min(c.iters_to_threshold for c in reached)

    def test_tie_break_smaller_lr_then_beta(self):
        # generous threshold: every cell reaches it at iteration 1
        p = lls_make(4, 4, seed=16)
        grid = grid_search(p, Nsgd(), [0.02, 0.01], [0.3, 0.1],
                           max_iters=50, loss_threshold=1e6)
        assert all(c.iters_to_threshold == 1 for c in grid.cells)
        assert grid.best.lr == 0.01
        assert grid.best.beta == 0.1

    def test_deterministic(self):
        p = lls_make(6, 6, seed=17)
        a = grid_search(p, Muon(), [0.01, 0.02], [0.1, 0.5], max_iters=60, loss_threshold=1e-3)
        b = grid_search(p, Muon(), [0.01, 0.02], [0.1, 0.5], max_iters=60, loss_threshold=1e-3)
        assert a == b

    def test_parallel_matches_serial(self):
        p = lls_make(6, 6, seed=18)
        serial = grid_search(p, Nsgd(), [0.01, 0.05], [0.0, 0.5], max_iters=80, loss_threshold=1e-3)
        parallel = grid_search(p, Nsgd(), [0.01, 0.05], [0.0, 0.5], max_iters=80,
                               loss_threshold=1e-3, workers=2)
        assert serial == parallel

    def test_divergent_cells_not_fatal(self):
        p = lls_make(5, 5, seed=19)
        grid = grid_search(p, Muon(), [1e5, 0.01], [0.0], max_iters=100, loss_threshold=1e-3)
        diverged_cell = next(c for c in grid.cells if c.lr == 1e5)
        assert diverged_cell.iters_to_threshold is None

    def test_empty_grid_rejected(self):
        p = lls_make(4, 4, seed=20)
        with pytest.raises(ValueError, match="nonempty"):
            grid_search(p, Nsgd(), [], [0.5])
