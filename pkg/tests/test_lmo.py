import numpy as np
import pytest

from fanion.engines import EngineConfig
from fanion.lmo import (
    Combination,
    Fanion,
    KyFanPrimal,
    LmoSpec,
    Muon,
    Neon,
    Nsgd,
    Schatten,
    SignSgd,
    f_fanion_spec,
    format_lmo_spec,
    init_state,
    lmo_evaluate,
    momentum_direction,
    optimizer_step,
    parse_lmo_spec,
    s_fanion_spec,
    support_value,
)
from fanion.matrices import exact_svd, haar_orthogonal
from fanion.norms import (
    Chebyshev,
    EntrywiseL1,
    Frobenius,
    KyFan,
    KyFanDual,
    Nuclear,
    Spectral,
    norm_eval,
)


def gapped_matrix(rows, cols, spectrum, seed=0):
    rng = np.random.default_rng(seed)
    r = len(spectrum)
    u = haar_orthogonal(rows, rng)[:, :r]
    v = haar_orthogonal(cols, rng)[:, :r]
    return (u * np.asarray(spectrum, dtype=float)) @ v.T


class TestEvaluate:
    def test_nsgd(self):
        d = lmo_evaluate(np.diag([3.0, 4.0]), Nsgd())
        np.testing.assert_allclose(d, np.diag([0.6, 0.8]), atol=1e-15)

    def test_nsgd_zero_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            lmo_evaluate(np.zeros((2, 2)), Nsgd())

    def test_muon_signed_diagonal(self):
        d = lmo_evaluate(np.diag([2.0, -3.0]), Muon())
        np.testing.assert_allclose(d, np.diag([1.0, -1.0]), atol=1e-12)

    def test_signsgd(self):
        m = np.array([[1.5, 0.0], [-0.2, 7.0]])
        np.testing.assert_array_equal(
            lmo_evaluate(m, SignSgd()), np.array([[1.0, 0.0], [-1.0, 1.0]])
        )
        np.testing.assert_array_equal(
            lmo_evaluate(-m, SignSgd()), -lmo_evaluate(m, SignSgd())
        )

    def test_neon_rank_one(self):
        m = gapped_matrix(6, 5, [4.0, 2.0, 1.0], seed=1)
        d = lmo_evaluate(m, Neon())
        sigma = np.linalg.svd(d, compute_uv=False)
        np.testing.assert_allclose(sigma[0], 1.0, atol=1e-12)
        assert np.all(sigma[1:] <= 1e-12)

    def test_fanion_on_diagonal(self):
        d = lmo_evaluate(np.diag([5.0, 2.0, 1.0]), Fanion(2))
        np.testing.assert_allclose(d, np.diag([1.0, 1.0, 0.0]), atol=1e-12)

    def test_ky_fan_primal_spectral_branch(self):
        d = lmo_evaluate(np.diag([5.0, 1.0]), KyFanPrimal(2))
        np.testing.assert_allclose(d, np.array([[1.0, 0.0], [0.0, 0.0]]), atol=1e-12)

    def test_ky_fan_primal_nuclear_branch(self):
        d = lmo_evaluate(np.eye(3), KyFanPrimal(2))
        np.testing.assert_allclose(d, np.eye(3) / 2.0, atol=1e-12)

    def test_combination_example(self):
        spec = Combination(((0.5, Fanion(2)), (0.5, Nsgd())))
        d = lmo_evaluate(np.diag([3.0, 4.0]), spec)
        np.testing.assert_allclose(d, np.diag([0.8, 0.9]), atol=1e-12)

    def test_schatten_two_is_nsgd(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((6, 4))
        np.testing.assert_allclose(
            lmo_evaluate(m, Schatten(2.0)), lmo_evaluate(m, Nsgd()), atol=1e-12
        )

    def test_k_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            lmo_evaluate(np.eye(2), Fanion(3))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            Schatten(0.5)
        with pytest.raises(ValueError):
            Schatten(np.inf)
        with pytest.raises(ValueError):
            Fanion(0)
        with pytest.warns(UserWarning, match="conic"):
            Combination(((-0.5, Nsgd()),))
        with pytest.raises(ValueError):
            Combination(((np.nan, Nsgd()),))


class TestFamilies:
    def test_f_fanion_alpha_one_is_muon(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((5, 5))
        spec = f_fanion_spec(5, 1.0)
        np.testing.assert_allclose(
            lmo_evaluate(m, spec), lmo_evaluate(m, Muon()), atol=1e-10
        )

    def test_f_fanion_alpha_zero_is_nsgd(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((4, 6))
        # k may even exceed the matrix rank: the zero-weight term is skipped
        spec = f_fanion_spec(500, 0.0)
        np.testing.assert_allclose(lmo_evaluate(m, spec), lmo_evaluate(m, Nsgd()), atol=1e-15)

    def test_s_fanion_example(self):
        spec = s_fanion_spec(1, 0.5, 0.01)
        d = lmo_evaluate(np.diag([3.0, -4.0]), spec)
        expected = 0.5 * np.diag([0.0, -1.0]) + 0.005 * np.diag([1.0, -1.0])
        np.testing.assert_allclose(d, expected, atol=1e-12)

    def test_alpha_above_one_warns(self):
        with pytest.warns(UserWarning, match="norm ball"):
            f_fanion_spec(2, 1.1)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            s_fanion_spec(2, -0.1, 0.01)


class TestSupportValues:
    PAIRS = [
        (Nsgd(), Frobenius()),
        (Muon(), Nuclear()),
        (SignSgd(), EntrywiseL1()),
        (Neon(), Spectral()),
        (Fanion(2), KyFan(2)),
        (KyFanPrimal(2), KyFanDual(2)),
    ]

    def test_dual_attainment(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            m = rng.standard_normal((5, 7))
            for variant, kind in self.PAIRS:
                assert support_value(m, variant) == pytest.approx(
                    norm_eval(m, kind), rel=1e-9
                )

    def test_f_fanion_support_blends_both_norms(self):
        rng = np.random.default_rng(21)
        m = rng.standard_normal((7, 5))
        for alpha in (0.0, 0.3, 1.0):
            spec = f_fanion_spec(3, alpha)
            expected = alpha * norm_eval(m, KyFan(3)) + (1 - alpha) * norm_eval(m, Frobenius())
            assert support_value(m, spec) == pytest.approx(expected, rel=1e-12)

    def test_combination_linearity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = rng.standard_normal((6, 6))
            weights = rng.uniform(0.0, 2.0, size=3)
            parts = (Nsgd(), Fanion(3), SignSgd())
            combo = Combination(tuple(zip(weights, parts)))
            expected = sum(w * support_value(m, p) for w, p in zip(weights, parts))
            assert support_value(m, combo) == pytest.approx(expected, rel=1e-12)

    def test_constraint_membership(self):
        rng = np.random.default_rng(12)
        m = rng.standard_normal((6, 5))
        cases = [
            (Nsgd(), Frobenius()),
            (Muon(), Spectral()),
            (SignSgd(), Chebyshev()),
            (Neon(), Nuclear()),
            (Fanion(3), KyFanDual(3)),
            (KyFanPrimal(3), KyFan(3)),
        ]
        for variant, kind in cases:
            d = lmo_evaluate(m, variant)
            assert norm_eval(d, kind) == pytest.approx(1.0, abs=1e-9)


class TestRankAndSchatten:
    def test_fanion_rank_law(self):
        m = gapped_matrix(8, 7, [9.0, 6.0, 4.0, 2.5, 1.5, 1.0, 0.5], seed=5)
        for k in (1, 3, 5):
            d = lmo_evaluate(m, Fanion(k))
            sigma = np.linalg.svd(d, compute_uv=False)
            assert np.sum(sigma >= 1e-8 * sigma[0]) == k

    def test_schatten_limits(self):
        m = gapped_matrix(7, 6, [5.0, 3.0, 2.0, 1.0, 0.5, 0.25], seed=6)
        muon = lmo_evaluate(m, Muon())
        dists = [
            np.linalg.norm(lmo_evaluate(m, Schatten(p)) - muon) for p in (4, 16, 64, 256)
        ]
        assert all(a > b for a, b in zip(dists, dists[1:]))
        neon = lmo_evaluate(m, Neon())
        near_one = lmo_evaluate(m, Schatten(1.0 + 1e-6))
        assert np.linalg.norm(near_one - neon) <= 1e-3


class TestBackends:
    def test_engine_matches_exact_on_gapped(self):
        m = gapped_matrix(40, 30, [10.0, 6.0, 3.5, 2.0, 1.0], seed=7)
        cfg = EngineConfig(engine="trlan", tol=1e-8, seed=0)
        for variant in (Neon(), Fanion(2), Fanion(3)):
            exact = lmo_evaluate(m, LmoSpec(variant))
            approx = lmo_evaluate(m, LmoSpec(variant, svd_backend=cfg))
            assert np.linalg.norm(approx - exact) <= 1e-6

    def test_newton_schulz_backend_for_muon(self):
        rng = np.random.default_rng(8)
        m = rng.standard_normal((20, 12))
        cfg = EngineConfig(engine="newton-schulz", tol=1e-10)
        exact = lmo_evaluate(m, LmoSpec(Muon()))
        approx = lmo_evaluate(m, LmoSpec(Muon(), svd_backend=cfg))
        assert np.linalg.norm(approx - exact) <= 1e-6


class TestMomentum:
    def test_beta_zero_all_modes(self):
        g = np.diag([3.0, 4.0])
        for mode in ("none", "heavy-ball", "nesterov"):
            state = init_state(np.zeros((2, 2)), beta=0.0, mode=mode)
            m_eff, new_state = momentum_direction(state, g)
            np.testing.assert_allclose(m_eff, g)
            assert new_state.step == 1

    def test_heavy_ball_geometric(self):
        g = np.full((3, 3), 2.0)
        state = init_state(np.zeros((3, 3)), beta=0.5, mode="heavy-ball")
        for t in range(1, 7):
            m_eff, state = momentum_direction(state, g)
            np.testing.assert_allclose(m_eff, (1 - 0.5**t) * g, rtol=1e-12)

    def test_nesterov_first_step(self):
        # buffer becomes 0.1 G; nesterov adds beta/(1-beta) = 9 times that
        g = np.diag([1.0, 2.0])
        state = init_state(np.zeros((2, 2)), beta=0.9, mode="nesterov")
        m_eff, _ = momentum_direction(state, g)
        np.testing.assert_allclose(m_eff, 1.9 * g, rtol=1e-12)

    def test_shape_mismatch(self):
        state = init_state(np.zeros((2, 2)))
        with pytest.raises(ValueError, match="shape mismatch"):
            momentum_direction(state, np.zeros((3, 2)))


class TestOptimizerStep:
    def test_nsgd_single_step(self):
        state = init_state(np.zeros((2, 2)), beta=0.0, mode="nesterov")
        new = optimizer_step(state, np.diag([3.0, 4.0]), lr=1.0, spec=Nsgd())
        np.testing.assert_allclose(new.x, -np.diag([0.6, 0.8]), atol=1e-15)

    def test_zero_lr_updates_buffer_only(self):
        state = init_state(np.ones((2, 2)), beta=0.5, mode="heavy-ball")
        g = np.full((2, 2), 4.0)
        new = optimizer_step(state, g, lr=0.0, spec=Nsgd())
        np.testing.assert_array_equal(new.x, state.x)
        np.testing.assert_allclose(new.b, 0.5 * g)

    def test_two_muon_steps_constant_gradient(self):
        rng = np.random.default_rng(9)
        g = rng.standard_normal((4, 4))
        polar = lmo_evaluate(g, Muon())
        state = init_state(np.zeros((4, 4)), beta=0.0, mode="nesterov")
        state = optimizer_step(state, g, lr=0.1, spec=Muon())
        state = optimizer_step(state, g, lr=0.1, spec=Muon())
        np.testing.assert_allclose(state.x, -0.2 * polar, atol=1e-12)
        assert state.step == 2


class TestTextForms:
    @pytest.mark.parametrize(
        "text",
        ["muon", "neon", "nsgd", "signsgd", "fanion:k=10", "kyfan-primal:k=2",
         "schatten:p=4", "f-fanion:k=500,alpha=0.5", "s-fanion:k=500,alpha=0.5,eta=0.01"],
    )
    def test_round_trip(self, text):
        assert format_lmo_spec(parse_lmo_spec(text)) == text

    def test_parse_errors(self):
        for bad in ("adam", "fanion", "fanion:q=3", "schatten:p=zero"):
            with pytest.raises(ValueError):
                parse_lmo_spec(bad)
