import itertools
import json
import math

import numpy as np
import pytest

from sparseobs.errors import DomainError, ShapeError
from sparseobs.model import (
    DynamicalSystem,
    MeasurementModel,
    RecoveryOutcome,
    SparseProblem,
    best_s_term,
    eval_rhs,
    lipschitz_bound,
    measurement_from_dict,
    measurement_to_dict,
    problem_from_dict,
    problem_from_json,
    problem_to_dict,
    problem_to_json,
    rhs_jacobian,
    system_from_dict,
    system_from_json,
    system_to_dict,
    system_to_json,
    weight_condition_number,
    weighted_l1_norm,
)

from conftest import catalog_systems


# --- weighted l1 -------------------------------------------------------------


def test_weighted_l1_plain_values():
    assert weighted_l1_norm([3.0, -4.0, 0.0], [1.0, 1.0, 1.0]) == 7.0
    assert weighted_l1_norm([1.0, -1.0], [2.0, 3.0]) == 5.0


def test_weighted_l1_ones_equals_plain_l1():
    rng = np.random.Generator(np.random.Philox(11))
    for _ in range(50):
        x = rng.normal(size=rng.integers(1, 20))
        assert weighted_l1_norm(x, np.ones(x.size)) == float(np.sum(np.abs(x)))


def test_weighted_l1_rejects_bad_input():
    with pytest.raises(ShapeError):
        weighted_l1_norm([1.0, 2.0], [1.0])
    with pytest.raises(ShapeError):
        weighted_l1_norm(np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(DomainError):
        weighted_l1_norm([1.0], [0.0])
    with pytest.raises(DomainError):
        weighted_l1_norm([1.0], [-2.0])


def test_weight_condition_number_values_and_scale_invariance():
    assert weight_condition_number([2.0, 1.0, 4.0]) == 4.0
    assert weight_condition_number(np.ones(7)) == 1.0
    rng = np.random.Generator(np.random.Philox(12))
    for _ in range(50):
        w = rng.uniform(0.1, 5.0, size=rng.integers(1, 12))
        tau = weight_condition_number(w)
        for c in (0.25, 3.0, 1e3):
            assert math.isclose(weight_condition_number(c * w), tau, rel_tol=1e-12)


def test_weight_condition_number_rejects_bad_input():
    with pytest.raises(DomainError):
        weight_condition_number([1.0, 0.0])
    with pytest.raises(ShapeError):
        weight_condition_number([])
    with pytest.raises(ShapeError):
        weight_condition_number(np.ones((2, 2)))


# --- best s-term -------------------------------------------------------------


def test_best_s_term_tie_breaks_to_lower_index():
    np.testing.assert_array_equal(best_s_term([2.0, -2.0], 1), [2.0, 0.0])


def test_best_s_term_edge_sizes():
    x = np.array([0.5, -3.0, 1.0])
    np.testing.assert_array_equal(best_s_term(x, 0), np.zeros(3))
    np.testing.assert_array_equal(best_s_term(x, 3), x)
    with pytest.raises(DomainError):
        best_s_term(x, -1)
    with pytest.raises(DomainError):
        best_s_term(x, 4)
    with pytest.raises(ShapeError):
        best_s_term(np.ones((2, 2)), 1)


def test_best_s_term_is_l1_optimal_over_all_supports():
    # exhaustive check against every size-s support, m <= 8
    rng = np.random.Generator(np.random.Philox(13))
    for _ in range(25):
        m = int(rng.integers(1, 9))
        x = rng.normal(size=m)
        for s in range(m + 1):
            approx = best_s_term(x, s)
            err = float(np.sum(np.abs(x - approx)))
            best = min(
                float(np.sum(np.abs(x - np.where(np.isin(np.arange(m), S), x, 0.0))))
                for S in itertools.combinations(range(m), s)
            )
            assert err <= best + 1e-12
            assert np.count_nonzero(approx) <= s


# --- system catalog ----------------------------------------------------------


def test_lipschitz_values_for_catalog_members():
    assert lipschitz_bound(DynamicalSystem.zero(3)) == 0.0
    lin = DynamicalSystem.linear((2.0 * np.eye(3)).tolist())
    assert abs(lipschitz_bound(lin) - 2.0) <= 1e-12
    sat = DynamicalSystem.tanh_saturated([[1.0, 1.0], [0.0, 0.0]])
    # independent oracle: the largest singular value from a dense SVD
    top_sv = float(np.linalg.svd(np.array([[1.0, 1.0], [0.0, 0.0]]), compute_uv=False)[0])
    assert math.isclose(top_sv, math.sqrt(2.0), rel_tol=1e-14)
    assert math.isclose(lipschitz_bound(sat), top_sv, rel_tol=1e-10)


def test_lipschitz_inequality_sampled_over_catalog():
    rng = np.random.Generator(np.random.Philox(14))
    for system in catalog_systems(5, 900):
        L = lipschitz_bound(system)
        for _ in range(1000):
            x = rng.normal(size=5)
            y = rng.normal(size=5)
            lhs = np.linalg.norm(eval_rhs(system, 0.0, x) - eval_rhs(system, 0.0, y))
            rhs = L * np.linalg.norm(x - y)
            assert lhs <= rhs * (1.0 + 1e-12) + 1e-12


def test_supplied_lipschitz_may_overshoot_but_not_undercut():
    M = [[1.0, 1.0], [0.0, 0.0]]
    loose = DynamicalSystem(dim=2, kind="linear", matrix=M, lipschitz=10.0)
    assert loose.lipschitz == 10.0
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="linear", matrix=M, lipschitz=1.0)


def test_kind_alias_and_unknown_kind():
    sat = DynamicalSystem(dim=2, kind="tanh-saturated", matrix=[[0.0, 0.0], [0.0, 0.0]])
    assert sat.kind == "tanh_saturated"
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="cubic", matrix=np.eye(2))


def test_system_construction_rules():
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="zero", matrix=np.eye(2))
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="linear")
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="affine", matrix=np.eye(2))
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="linear", matrix=np.eye(2), drift=[1.0, 0.0])
    with pytest.raises(ShapeError):
        DynamicalSystem(dim=2, kind="linear", matrix=np.eye(3))
    with pytest.raises(ShapeError):
        DynamicalSystem.linear(np.ones((2, 3)))
    with pytest.raises(DomainError):
        DynamicalSystem(dim=0, kind="zero")
    with pytest.raises(DomainError):
        DynamicalSystem(dim=2, kind="linear", matrix=[[np.inf, 0.0], [0.0, 1.0]])


def test_system_matrix_is_read_only():
    system = DynamicalSystem.linear(np.eye(2))
    with pytest.raises(ValueError):
        system.matrix[0, 0] = 5.0


def test_eval_rhs_and_jacobian_agree_with_definitions():
    rng = np.random.Generator(np.random.Philox(15))
    M = rng.normal(size=(4, 4))
    c = rng.normal(size=4)
    x = rng.normal(size=4)
    zero = DynamicalSystem.zero(4)
    lin = DynamicalSystem.linear(M.tolist())
    aff = DynamicalSystem.affine(M.tolist(), c.tolist())
    sat = DynamicalSystem.tanh_saturated(M.tolist())

    np.testing.assert_array_equal(eval_rhs(zero, 0.0, x), np.zeros(4))
    np.testing.assert_allclose(eval_rhs(lin, 0.0, x), M @ x, rtol=1e-14)
    np.testing.assert_allclose(eval_rhs(aff, 0.0, x), M @ x + c, rtol=1e-14)
    np.testing.assert_allclose(eval_rhs(sat, 0.0, x), np.tanh(M @ x), rtol=1e-14)

    np.testing.assert_array_equal(rhs_jacobian(zero, x), np.zeros((4, 4)))
    np.testing.assert_allclose(rhs_jacobian(lin, x), M, rtol=1e-14)
    # finite-difference cross-check of the saturated jacobian
    h = 1e-6
    J = rhs_jacobian(sat, x)
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        col = (eval_rhs(sat, 0.0, x + e) - eval_rhs(sat, 0.0, x - e)) / (2 * h)
        np.testing.assert_allclose(J[:, j], col, atol=1e-8)

    with pytest.raises(ShapeError):
        eval_rhs(lin, 0.0, np.zeros(3))
    with pytest.raises(ShapeError):
        rhs_jacobian(lin, np.zeros(3))


def test_kernel_args_fills_zero_system_with_zero_arrays():
    kind, M, c = DynamicalSystem.zero(3).kernel_args()
    assert kind == 0
    np.testing.assert_array_equal(M, np.zeros((3, 3)))
    np.testing.assert_array_equal(c, np.zeros(3))


# --- measurement / problem / outcome ----------------------------------------


def _measurement(**over):
    base = dict(matrix=np.eye(3), time=1.0, noise_radius=0.1, weights=np.ones(3))
    base.update(over)
    return MeasurementModel(**base)


def test_measurement_shape_properties():
    meas = MeasurementModel(
        matrix=np.ones((2, 5)), time=0.5, noise_radius=0.0, weights=np.ones(5)
    )
    assert meas.n == 2 and meas.m == 5


def test_measurement_validation():
    with pytest.raises(DomainError):
        _measurement(time=0.0)
    with pytest.raises(DomainError):
        _measurement(time=-1.0)
    with pytest.raises(DomainError):
        _measurement(noise_radius=-0.5)
    with pytest.raises(DomainError):
        _measurement(weights=[1.0, 0.0, 1.0])
    with pytest.raises(ShapeError):
        _measurement(weights=np.ones(4))
    with pytest.raises(ShapeError):
        _measurement(matrix=np.ones(3))


def test_sparse_problem_validation():
    system = DynamicalSystem.zero(3)
    meas = _measurement(noise_radius=0.0)
    problem = SparseProblem(system=system, measurement=meas, observation=np.zeros(3), sparsity=2)
    assert problem.sparsity == 2
    with pytest.raises(DomainError):
        SparseProblem(system=system, measurement=meas, observation=np.zeros(3), sparsity=0)
    with pytest.raises(DomainError):
        SparseProblem(system=system, measurement=meas, observation=np.zeros(3), sparsity=4)
    with pytest.raises(DomainError):
        SparseProblem(system=system, measurement=meas, observation=np.zeros(3), sparsity=True)
    with pytest.raises(ShapeError):
        SparseProblem(
            system=DynamicalSystem.zero(4), measurement=meas, observation=np.zeros(3), sparsity=1
        )
    with pytest.raises(ShapeError):
        SparseProblem(system=system, measurement=meas, observation=np.zeros(2), sparsity=1)


def test_recovery_outcome_round_trip_and_validation():
    out = RecoveryOutcome(
        estimate=[1.0, 0.0], residual=0.5, weighted_l1=1.0, iterations=3, converged=True
    )
    doc = out.to_dict()
    assert doc == {
        "estimate": [1.0, 0.0],
        "residual": 0.5,
        "weighted_l1": 1.0,
        "iterations": 3,
        "converged": True,
    }
    with pytest.raises(DomainError):
        RecoveryOutcome([0.0], -1.0, 0.0, 0, False)
    with pytest.raises(DomainError):
        RecoveryOutcome([0.0], 0.0, 0.0, -1, False)


# --- serialization -----------------------------------------------------------


def test_system_document_round_trip_all_kinds():
    for system in catalog_systems(4, 901):
        back = system_from_dict(system_to_dict(system))
        assert back.kind == system.kind
        assert back.dim == system.dim
        assert back.lipschitz == system.lipschitz
        if system.matrix is None:
            assert back.matrix is None
        else:
            np.testing.assert_array_equal(back.matrix, system.matrix)
        back2 = system_from_json(system_to_json(system))
        assert back2.kind == system.kind


def test_measurement_document_round_trip():
    meas = _measurement()
    back = measurement_from_dict(measurement_to_dict(meas))
    np.testing.assert_array_equal(back.matrix, meas.matrix)
    assert back.time == meas.time
    assert back.noise_radius == meas.noise_radius
    np.testing.assert_array_equal(back.weights, meas.weights)


def test_problem_document_round_trip():
    problem = SparseProblem(
        system=DynamicalSystem.linear([[-1.0, 0.0], [0.0, -2.0]]),
        measurement=MeasurementModel(
            matrix=[[1.0, 2.0], [0.5, -1.0]], time=0.3, noise_radius=0.01, weights=[1.0, 2.0]
        ),
        observation=[0.2, -0.4],
        sparsity=1,
    )
    back = problem_from_dict(problem_to_dict(problem))
    np.testing.assert_array_equal(back.observation, problem.observation)
    assert back.sparsity == 1
    back2 = problem_from_json(problem_to_json(problem))
    assert back2.measurement.time == 0.3
    # document form is valid JSON
    json.loads(problem_to_json(problem))


def test_malformed_documents_are_reported():
    with pytest.raises(DomainError):
        system_from_dict({"dim": 2})
    with pytest.raises(DomainError):
        problem_from_dict({"system": system_to_dict(DynamicalSystem.zero(2))})
    with pytest.raises(DomainError):
        measurement_from_dict({"matrix": [[1.0]]})
