import numpy as np
import pytest
from scipy.optimize import minimize

from src.calibration import (
    SharedAnchors,
    calibrate,
    calibration_gradient,
    calibration_objective,
    error_metrics,
    extend_many,
    extend_out_of_sample,
    localize_1nn,
    matching_loss,
    select_anchors,
    smoothness_penalty,
    solve_calibration,
    sweep_grid,
    sweep_lambda,
)
from src.errors import DataError, IllPosedCalibrationError, NumericalError, ParameterError
from src.graph.kernels import KernelSpec, normalized_gaussian
from src.graph.spectral import Embedding, embed, normalized_laplacian


def random_embedding(rng, rows: int, dim: int) -> Embedding:
    q, _ = np.linalg.qr(rng.normal(size=(rows, dim)))
    return Embedding(q, np.sort(rng.uniform(0.05, 1.0, dim)))


def random_instance(rng):
    m = int(rng.integers(30, 100))
    t = int(rng.integers(30, 100))
    d = int(rng.integers(2, 9))
    n = int(rng.integers(2, 25))
    signal = random_embedding(rng, m, d)
    area = random_embedding(rng, t, 2)
    anchors = SharedAnchors(
        tuple(rng.choice(m, size=n, replace=False)),
        tuple(rng.choice(t, size=n, replace=False)),
    )
    lam = float(10 ** rng.uniform(-2, 0))
    return signal, area, anchors, lam


def test_closed_form_matches_iterative_minimizer(rng):
    for _ in range(50):
        signal, area, anchors, lam = random_instance(rng)
        model = solve_calibration(signal, area, anchors, lam=lam)
        shape = model.C.shape

        def fun(x):
            return calibration_objective(x.reshape(shape), signal, area, anchors, lam)

        def jac(x):
            return calibration_gradient(x.reshape(shape), signal, area, anchors, lam).ravel()

        res = minimize(fun, np.zeros(model.C.size), jac=jac, method="L-BFGS-B",
                       options={"ftol": 1e-16, "gtol": 1e-14, "maxiter": 10000, "maxcor": 30})
        best = calibration_objective(model.C, signal, area, anchors, lam)
        assert best <= res.fun + 1e-12
        assert abs(best - res.fun) <= 1e-6 * max(abs(best), 1e-12)


def test_no_perturbation_improves_the_solution(rng):
    for _ in range(50):
        signal, area, anchors, lam = random_instance(rng)
        model = solve_calibration(signal, area, anchors, lam=lam)
        base = calibration_objective(model.C, signal, area, anchors, lam)
        grad = calibration_gradient(model.C, signal, area, anchors, lam)
        assert np.abs(grad).max() < 1e-8
        for _ in range(5):
            eps = 1e-4 * rng.normal(size=model.C.shape)
            assert calibration_objective(model.C + eps, signal, area, anchors, lam) >= base - 1e-10


def test_explicit_regularizer_gives_same_solution(rng):
    lap = normalized_laplacian(normalized_gaussian(rng.normal(size=(60, 2)), 1.0))
    signal = embed(lap, 5)
    area = random_embedding(rng, 40, 2)
    anchors = SharedAnchors.leading(range(8))
    implicit = solve_calibration(signal, area, anchors, lap, lam=0.1)
    explicit = solve_calibration(signal, area, anchors, lap, lam=0.1, explicit=True)
    assert np.allclose(implicit.C, explicit.C, atol=1e-8)


def test_ill_posed_without_regularization(rng):
    signal = random_embedding(rng, 50, 8)
    area = random_embedding(rng, 50, 2)
    anchors = SharedAnchors.leading(range(3))
    with pytest.raises(IllPosedCalibrationError, match="lambda > 0"):
        solve_calibration(signal, area, anchors, lam=0.0)
    model = solve_calibration(signal, area, anchors, lam=0.1)
    assert model.C.shape == (2, 8)
    with pytest.raises(ParameterError):
        solve_calibration(signal, area, anchors, lam=-1.0)


def test_shared_anchors_validation():
    with pytest.raises(ParameterError):
        SharedAnchors((0, 1), (0,))
    with pytest.raises(ParameterError):
        SharedAnchors((0, 0), (1, 2))
    with pytest.raises(ParameterError):
        SharedAnchors((), ())
    assert SharedAnchors.leading([5, 9]).indices_in_area == (0, 1)


def test_anchor_index_out_of_range(rng):
    signal = random_embedding(rng, 10, 2)
    area = random_embedding(rng, 10, 2)
    with pytest.raises(DataError):
        solve_calibration(signal, area, SharedAnchors((0, 12), (0, 1)), lam=0.1)


def test_calibrate_applies_model(rng):
    signal = random_embedding(rng, 30, 4)
    model = solve_calibration(signal, random_embedding(rng, 30, 2), SharedAnchors.leading(range(6)), lam=0.1)
    assert np.allclose(calibrate(model, signal), signal.vectors @ model.C.T)


def test_localize_picks_nearest_area_row():
    area = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    points = np.array([[10.0, 10.0], [20.0, 20.0], [30.0, 30.0], [40.0, 40.0]])
    psi = np.array([[0.9, 0.1], [0.1, 0.8], [1.0, 0.0]])
    est = localize_1nn(psi, area, points)
    # rows 1 and 3 are identical; the smaller index wins
    assert np.array_equal(est, [[20.0, 20.0], [30.0, 30.0], [20.0, 20.0]])


def test_matching_loss(rng):
    cloud = rng.normal(size=(50, 2))
    assert matching_loss(cloud, cloud) == 0.0
    other = cloud + 0.1
    assert matching_loss(cloud, other) == pytest.approx(matching_loss(other, cloud))
    assert matching_loss(cloud, other) > 0


@pytest.mark.parametrize("name", ["gaussian", "self_tuning"])
def test_extension_of_known_signal_returns_its_estimate(rng, name):
    known = rng.normal(size=(40, 6))
    estimates = rng.uniform(size=(40, 2))
    spec = KernelSpec(name=name, k=5)
    assert np.array_equal(extend_out_of_sample(known[17], known, estimates, spec), estimates[17])
    placed = extend_many(known[[3, 8]] + 1e-6, known, estimates, spec)
    assert np.array_equal(placed, estimates[[3, 8]])


def test_extension_with_signal_sets(rng):
    sets = [rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4)) for _ in range(20)]
    estimates = rng.uniform(size=(20, 2))
    spec = KernelSpec(name="trace_projection", rank=1, knn=3)
    assert np.array_equal(extend_out_of_sample(sets[6] * 3j, sets, estimates, spec), estimates[6])


def test_extension_needs_known_signals():
    with pytest.raises(DataError):
        extend_many(np.ones((1, 3)), np.empty((0, 3)), np.empty((0, 2)), KernelSpec())


def test_select_anchors(rng):
    a = select_anchors(10, 100, seed=3)
    assert np.array_equal(a, select_anchors(10, 100, seed=3))
    assert len(np.unique(a)) == 10 and np.all(np.diff(a) > 0)
    feats = rng.normal(size=(100, 4))
    k = select_anchors(8, 100, "kmeans", seed=0, features=feats)
    assert len(np.unique(k)) == 8
    assert np.array_equal(select_anchors(0, 5, "explicit", explicit=[4, 1]), [1, 4])
    with pytest.raises(ParameterError):
        select_anchors(100, 100)
    with pytest.raises(ParameterError):
        select_anchors(3, 10, "explicit", explicit=[1, 1, 2])


def test_error_metrics_excludes_anchors_and_unknown():
    truth = np.array([[0.0, 0.0], [1.0, 1.0], [np.nan, np.nan], [2.0, 2.0]])
    est = np.array([[3.0, 4.0], [1.0, 2.0], [0.0, 0.0], [2.0, 2.0]])
    m = error_metrics(est, truth, exclude=[0])
    assert m["count"] == 2
    assert m["median"] == pytest.approx(0.5)
    assert m["mean"] == pytest.approx(0.5)
    empty = error_metrics(est[:1], truth[:1], exclude=[0])
    assert empty["count"] == 0 and empty["median"] is None


def sweep_inputs(rng):
    signal = random_embedding(rng, 80, 6)
    area = random_embedding(rng, 80, 2)
    anchors = SharedAnchors.leading(range(10))
    points = rng.uniform(size=(80, 2))
    truth = points.copy()
    return signal, area, anchors, points, truth


def test_sweep_lambda_picks_smallest_loss(rng):
    signal, area, anchors, points, truth = sweep_inputs(rng)
    grid = [0.001, 0.01, 0.1, 1.0]
    result = sweep_lambda(signal, area, anchors, grid, area_points=points, truth=truth, folds=5)
    assert [r.lam for r in result.rows] == grid
    best = min(result.rows, key=lambda r: r.loss)
    assert result.best_lambda == best.lam
    assert all(r.cv_error is not None and r.median_error is not None for r in result.rows)
    assert set(result.to_dict()) == {"best_d", "best_lambda", "rows"}


def test_sweep_records_failures(rng):
    signal, area, _, _, _ = sweep_inputs(rng)
    few = SharedAnchors.leading(range(3))
    result = sweep_lambda(signal, area, few, [0.0, 0.1])
    assert not result.rows[0].ok and result.rows[1].ok
    assert result.best_lambda == 0.1
    with pytest.raises(NumericalError):
        sweep_lambda(signal, area, few, [0.0])
    with pytest.raises(ParameterError):
        sweep_lambda(signal, area, few, [])


def test_sweep_grid_over_dimensions(rng):
    signal, area, anchors, points, _ = sweep_inputs(rng)
    result = sweep_grid(signal, area, anchors, [0.01, 0.1], [2, 4, 6], area_points=points)
    assert [(r.d, r.lam) for r in result.rows] == [(d, lam) for d in (2, 4, 6) for lam in (0.01, 0.1)]
    assert result.best_d in (2, 4, 6)
    with pytest.raises(ParameterError):
        sweep_grid(signal, area, anchors, [0.1], [7])


def test_smoothness_falls_as_lambda_grows(rng):
    for _ in range(20):
        signal, area, anchors, _ = random_instance(rng)
        penalties, fits = [], []
        for lam in np.logspace(-4, 2, 9):
            model = solve_calibration(signal, area, anchors, lam=float(lam))
            penalties.append(smoothness_penalty(model, signal))
            fits.append(calibration_objective(model.C, signal, area, anchors, 0.0))
        assert np.all(np.diff(penalties) <= 1e-12 * max(penalties[0], 1.0))
        assert np.all(np.diff(fits) >= -1e-12)


def test_localization_ignores_rotation_of_both_clouds(rng):
    for _ in range(10):
        l = int(rng.integers(2, 5))
        q, _ = np.linalg.qr(rng.normal(size=(l, l)))
        area = rng.normal(size=(200, l))
        psi = rng.normal(size=(80, l))
        points = rng.uniform(size=(200, 2))
        assert np.array_equal(localize_1nn(psi @ q, area @ q, points), localize_1nn(psi, area, points))


def test_calibrated_estimates_ignore_rotation_of_area_embedding(rng):
    signal, area, anchors, _ = random_instance(rng)
    points = rng.uniform(size=(len(area), 2))
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    rotated = Embedding(area.vectors @ q, area.eigenvalues)
    base = solve_calibration(signal, area, anchors, lam=0.05)
    turned = solve_calibration(signal, rotated, anchors, lam=0.05)
    assert np.allclose(turned.C, q.T @ base.C)
    est = localize_1nn(calibrate(base, signal), area, points)
    assert np.array_equal(localize_1nn(calibrate(turned, signal), rotated, points), est)


def test_matching_loss_ignores_row_order(rng):
    area = rng.normal(size=(60, 2))
    psi = rng.normal(size=(45, 2))
    shuffled = matching_loss(area[rng.permutation(60)], psi[rng.permutation(45)])
    assert shuffled == pytest.approx(matching_loss(area, psi), rel=1e-12)


def test_matching_loss_of_shifted_grid():
    gx, gy = np.meshgrid(np.arange(10.0), np.arange(10.0))
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    delta = 0.1
    # each point's nearest neighbour in the shifted copy is its own image
    assert matching_loss(grid, grid + [delta, 0.0]) == pytest.approx(2 * delta ** 2)
