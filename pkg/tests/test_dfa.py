import warnings

import numpy as np
import pytest

from qdcca.dfa import (
    BoxResiduals,
    DetrendConfig,
    box_starts,
    compute_box_residuals,
    fluctuation_functions,
    fluctuation_matrices,
    local_moments,
    rho_q,
    rho_q_lagged,
)
from qdcca.errors import (
    ConfigError,
    CorrelationBoundWarning,
    DegenerateFitError,
    ScaleTooLargeError,
    ShapeMismatchError,
    ZeroVarianceError,
)

from oracles import box_index_ranges, rho_q_literal


def test_config_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        DetrendConfig(scale=10, q=0.0)
    with pytest.raises(ConfigError):
        DetrendConfig(scale=10, q=-1.0)
    with pytest.raises(DegenerateFitError):
        DetrendConfig(scale=3, poly_order=2)
    with pytest.raises(ConfigError):
        DetrendConfig(scale=1)


def test_constant_series_has_zero_residuals():
    # Constant samples integrate to a linear profile, which any m >= 1
    # polynomial absorbs entirely.
    x = np.full(100, 0.37)
    for m in (1, 2, 3):
        bx = compute_box_residuals(x, DetrendConfig(scale=20, poly_order=m))
        assert np.allclose(bx.residuals, 0.0, atol=1e-10)


def test_exact_division_gives_coincident_partitions():
    # T = 2s: the forward and backward partitions cover the same two boxes,
    # so every box appears twice and all box averages are unchanged.
    rng = np.random.default_rng(40)
    x = rng.standard_normal(40)
    bx = compute_box_residuals(x, DetrendConfig(scale=20, poly_order=1))
    assert bx.box_count == 4
    assert box_starts(40, 20).tolist() == [0, 20, 20, 0]
    assert np.array_equal(bx.residuals[0], bx.residuals[3])
    assert np.array_equal(bx.residuals[1], bx.residuals[2])


def test_box_layout_t25_s10():
    # Forward boxes cover samples 1-10 and 11-20, backward boxes 16-25 and
    # 6-15; the 5-sample remainder per direction joins no box.
    starts = box_starts(25, 10)
    assert starts.tolist() == [0, 10, 15, 5]
    assert box_index_ranges(25, 10) == [(1, 10), (11, 20), (16, 25), (6, 15)]
    rng = np.random.default_rng(7)
    x = rng.standard_normal(25)
    bx = compute_box_residuals(x, DetrendConfig(scale=10, poly_order=1))
    assert bx.box_count == 4
    # Residuals of the third box must equal a standalone detrend of samples
    # 16..25 (1-based), independently recomputed.
    seg = x[15:25]
    prof = np.cumsum(seg)
    i = np.arange(1.0, 11.0)
    lit = prof - np.polyval(np.polyfit(i, prof, 1), i)
    assert np.allclose(bx.residuals[2], lit, atol=1e-12)


def test_scale_too_large_and_degenerate_fit():
    x = np.arange(30.0)
    with pytest.raises(ScaleTooLargeError):
        compute_box_residuals(x, DetrendConfig(scale=16, poly_order=1))
    with pytest.raises(DegenerateFitError):
        DetrendConfig(scale=4, poly_order=3)


def test_local_moments_identical_and_negated_inputs():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(120)
    cfg = DetrendConfig(scale=20, poly_order=2)
    bx = compute_box_residuals(x, cfg)
    by = compute_box_residuals(-x, cfg)
    same = local_moments(bx, bx)
    assert np.array_equal(same.f2_xy, same.f2_xx)
    assert np.array_equal(same.f2_xx, same.f2_yy)
    flipped = local_moments(bx, by)
    assert np.allclose(flipped.f2_xy, -flipped.f2_xx, rtol=0, atol=1e-12)


def test_local_moments_two_point_boxes():
    bx = BoxResiduals(np.array([[1.0, -1.0]]), scale=2, poly_order=0)
    by = BoxResiduals(np.array([[2.0, -2.0]]), scale=2, poly_order=0)
    mom = local_moments(bx, by)
    assert mom.f2_xx[0] == pytest.approx(2.0)
    assert mom.f2_yy[0] == pytest.approx(8.0)
    assert mom.f2_xy[0] == pytest.approx(4.0)


def test_local_moments_box_count_mismatch():
    bx = BoxResiduals(np.zeros((4, 5)), scale=5, poly_order=1)
    by = BoxResiduals(np.zeros((2, 5)), scale=5, poly_order=1)
    with pytest.raises(ShapeMismatchError):
        local_moments(bx, by)


def test_fluctuation_function_values():
    from qdcca.dfa import BoxMoments

    mom = BoxMoments(
        f2_xx=np.array([4.0, 4.0]),
        f2_yy=np.array([4.0, 4.0]),
        f2_xy=np.array([4.0, 4.0]),
        scale=8,
    )
    assert fluctuation_functions(mom, 2.0).f_xx == pytest.approx(4.0)
    assert fluctuation_functions(mom, 4.0).f_xx == pytest.approx(16.0)
    neg = BoxMoments(
        f2_xx=np.array([9.0]), f2_yy=np.array([9.0]), f2_xy=np.array([-9.0]), scale=8
    )
    assert fluctuation_functions(neg, 2.0).f_xy == pytest.approx(-9.0)


def test_self_and_anti_correlation_exact():
    rng = np.random.default_rng(11)
    for q in (0.5, 1.0, 2.0, 4.0):
        for s in (10, 32):
            x = rng.standard_normal(300)
            cfg = DetrendConfig(scale=s, poly_order=2, q=q)
            assert rho_q(x, x, cfg) == 1.0
            assert rho_q(x, -x, cfg) == -1.0


def test_zero_variance_raises():
    x = np.full(100, 5.0)
    y = np.random.default_rng(0).standard_normal(100)
    cfg = DetrendConfig(scale=10, poly_order=2, q=2.0)
    with pytest.raises(ZeroVarianceError):
        rho_q(x, y, cfg)
    with pytest.raises(ZeroVarianceError):
        rho_q(y, x, cfg)


def test_independent_gaussians_decorrelate():
    cfg = DetrendConfig(scale=50, poly_order=2, q=2.0)
    rng = np.random.default_rng(2024)
    values = []
    for _ in range(50):
        x = rng.standard_normal(10_000)
        y = rng.standard_normal(10_000)
        values.append(abs(rho_q(x, y, cfg)))
    assert np.mean(values) < 0.05


def test_known_pearson_level_recovered():
    cfg = DetrendConfig(scale=200, poly_order=2, q=2.0)
    target = 0.7
    chol = np.linalg.cholesky(np.array([[1.0, target], [target, 1.0]]))
    rng = np.random.default_rng(99)
    estimates = []
    for _ in range(20):
        z = rng.standard_normal((2, 50_000))
        x, y = chol @ z
        estimates.append(rho_q(x, y, cfg))
    assert abs(np.mean(estimates) - target) < 0.05


def test_symmetry():
    rng = np.random.default_rng(5)
    for q in (1.0, 2.0, 4.0):
        x = rng.standard_normal(600)
        y = 0.5 * x + rng.standard_normal(600)
        cfg = DetrendConfig(scale=40, poly_order=2, q=q)
        assert abs(rho_q(x, y, cfg) - rho_q(y, x, cfg)) < 1e-12


def test_affine_invariance():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(500)
    y = 0.3 * x + rng.standard_normal(500)
    for q in (1.0, 2.0, 4.0):
        cfg = DetrendConfig(scale=25, poly_order=2, q=q)
        base = rho_q(x, y, cfg)
        assert abs(rho_q(3.7 * x + 11.0, y, cfg) - base) < 1e-10
        assert abs(rho_q(-2.0 * x + 4.0, y, cfg) + base) < 1e-10


def test_q2_bound_on_random_instances():
    rng = np.random.default_rng(8)
    for _ in range(200):
        t = int(rng.integers(80, 400))
        s = int(rng.integers(5, t // 2 + 1))
        m = int(rng.integers(1, min(3, s - 2) + 1))
        x = rng.standard_normal(t)
        y = rng.standard_normal(t)
        r = rho_q(x, y, DetrendConfig(scale=s, poly_order=m, q=2.0))
        assert abs(r) <= 1.0 + 1e-12


def test_matches_literal_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        t = int(rng.integers(200, 2000))
        s = int(rng.integers(16, 129))
        if t < 2 * s:
            t = 2 * s + int(rng.integers(0, 50))
        q = float(rng.choice([1.0, 2.0, 4.0]))
        m = int(rng.choice([1, 2, 3]))
        x = rng.standard_normal(t)
        y = rng.standard_normal(t)
        ours = rho_q(x, y, DetrendConfig(scale=s, poly_order=m, q=q))
        ref = rho_q_literal(x, y, q, s, m)
        assert abs(ours - ref) < 1e-10


def test_bound_warning_flag_for_q_not_2():
    # Per-box Cauchy-Schwarz keeps |rho_q| <= 1 mathematically for every
    # q > 0, so the out-of-range branch can only fire on floating-point
    # overshoot; exercise it directly through the ratio helper.
    from qdcca.dfa import _coefficient

    with pytest.warns(CorrelationBoundWarning):
        r = _coefficient(3.0, 2.0, 2.0, q=1.0)
    assert r == pytest.approx(1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _coefficient(3.0, 2.0, 2.0, q=2.0)


def test_lagged_zero_shift_is_bit_exact():
    rng = np.random.default_rng(13)
    x = rng.standard_normal(500)
    y = rng.standard_normal(500)
    cfg = DetrendConfig(scale=30, poly_order=2, q=2.0)
    assert rho_q_lagged(x, y, cfg, 0) == rho_q(x, y, cfg)


def test_lagged_ar1_tracks_persistence():
    rng = np.random.default_rng(14)
    phi = 0.9
    eps = rng.standard_normal(5000)
    x = np.empty(5000)
    x[0] = eps[0] / np.sqrt(1 - phi**2)
    for i in range(1, 5000):
        x[i] = phi * x[i - 1] + eps[i]
    cfg = DetrendConfig(scale=50, poly_order=2, q=2.0)
    ours = rho_q_lagged(x, x, cfg, 1)
    ref = rho_q_literal(x[:-1], x[1:], 2.0, 50, 2)
    assert abs(ours - ref) < 1e-10
    assert ours > 0.5


def test_lagged_white_noise_stays_flat():
    cfg = DetrendConfig(scale=50, poly_order=2, q=2.0)
    rng = np.random.default_rng(15)
    vals = []
    for _ in range(50):
        x = rng.standard_normal(4000)
        y = rng.standard_normal(4000)
        vals.append(abs(rho_q_lagged(x, y, cfg, 1)))
        vals.append(abs(rho_q_lagged(x, y, cfg, -1)))
    assert np.mean(vals) < 0.05


def test_lagged_overlap_too_short():
    x = np.random.default_rng(1).standard_normal(101)
    y = np.random.default_rng(2).standard_normal(101)
    cfg = DetrendConfig(scale=50, poly_order=2, q=2.0)
    with pytest.raises(ScaleTooLargeError):
        rho_q_lagged(x, y, cfg, 2)


def test_matrix_kernel_matches_pairwise_path():
    rng = np.random.default_rng(16)
    values = rng.standard_normal((5, 400))
    for q in (1.0, 2.0, 4.0):
        fmat = fluctuation_matrices(values, 25, 2, [q])[q]
        cfg = DetrendConfig(scale=25, poly_order=2, q=q)
        for i in range(5):
            for j in range(i + 1, 5):
                direct = rho_q(values[i], values[j], cfg)
                via_matrix = fmat[i, j] / np.sqrt(fmat[i, i] * fmat[j, j])
                assert direct == via_matrix


def test_determinism_bitwise():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(1000)
    y = rng.standard_normal(1000)
    cfg = DetrendConfig(scale=64, poly_order=2, q=4.0)
    assert rho_q(x, y, cfg) == rho_q(x.copy(), y.copy(), cfg)
