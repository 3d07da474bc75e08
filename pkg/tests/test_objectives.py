import math

import numpy as np
import pytest

import zoar._kernels as kernels
from zoar import objectives, sampling
from zoar.objectives import ObjectiveKind, ObjectiveSpec, eval as obj_eval
from zoar.sampling import DistTag


def test_known_values():
    assert obj_eval(ObjectiveSpec(ObjectiveKind.QUADRATIC, 3), np.zeros(3)) == 0.0
    assert obj_eval(ObjectiveSpec(ObjectiveKind.QUADRATIC, 2), [3.0, 4.0]) == 12.5
    assert abs(obj_eval(ObjectiveSpec(ObjectiveKind.ACKLEY, 5), np.zeros(5))) < 1e-12
    assert abs(obj_eval(ObjectiveSpec(ObjectiveKind.LEVY, 6), np.ones(6))) < 1e-30
    assert obj_eval(ObjectiveSpec(ObjectiveKind.ROSENBROCK, 4), np.ones(4)) == 0.0


def test_dimension_requirements():
    ObjectiveSpec(ObjectiveKind.ACKLEY, 1)
    ObjectiveSpec(ObjectiveKind.QUADRATIC, 1)
    for kind in (ObjectiveKind.LEVY, ObjectiveKind.ROSENBROCK):
        with pytest.raises(ValueError):
            ObjectiveSpec(kind, 1)


def test_nonfinite_input_rejected():
    spec = ObjectiveSpec(ObjectiveKind.QUADRATIC, 2)
    with pytest.raises(ValueError):
        obj_eval(spec, [1.0, float("inf")])


def test_batch_evaluation_matches_scalar():
    spec = ObjectiveSpec(ObjectiveKind.ROSENBROCK, 5)
    pts = kernels.uniform_doubles(3, 20).reshape(4, 5) * 4 - 2
    batch = obj_eval(spec, pts)
    for i in range(4):
        assert batch[i] == obj_eval(spec, pts[i])


def test_noise_deterministic_and_point_keyed():
    spec = ObjectiveSpec(ObjectiveKind.QUADRATIC, 3, noise_sigma=0.5)
    theta = np.array([0.1, 0.2, 0.3])
    assert obj_eval(spec, theta, 42) == obj_eval(spec, theta, 42)
    assert obj_eval(spec, theta, 42) != obj_eval(spec, theta, 43)
    # distinct points under the same seed draw independent noise
    other = theta + 1e-9
    clean = ObjectiveSpec(ObjectiveKind.QUADRATIC, 3)
    n1 = obj_eval(spec, theta, 42) - obj_eval(clean, theta)
    n2 = obj_eval(spec, other, 42) - obj_eval(clean, other)
    assert n1 != n2


def test_noise_mean_converges_to_clean_value():
    sigma = 0.7
    spec = ObjectiveSpec(ObjectiveKind.ACKLEY, 4, noise_sigma=sigma)
    clean = objectives.clean_value(ObjectiveSpec(ObjectiveKind.ACKLEY, 4),
                                   np.full(4, 0.3))
    n = 10000
    values = np.array([obj_eval(spec, np.full(4, 0.3), s) for s in range(n)])
    assert abs(values.mean() - clean) < 5.0 * sigma / math.sqrt(n)


def test_nonnegative_on_random_points():
    pts = kernels.uniform_doubles(17, 10000).reshape(1000, 10) * 8 - 4
    for kind in ObjectiveKind:
        spec = ObjectiveSpec(kind, 10)
        assert np.all(obj_eval(spec, pts) >= 0.0)


def test_grad_oracle_quadratic_analytic():
    spec = ObjectiveSpec(ObjectiveKind.QUADRATIC, 4)
    theta = np.array([1.0, 2.0, -0.5, 0.0])
    assert np.array_equal(objectives.grad_oracle(spec, theta), theta)


def test_rosenbrock_all_ones_is_stationary():
    # independent check via central differences at the optimum
    spec = ObjectiveSpec(ObjectiveKind.ROSENBROCK, 2)
    grad = objectives.grad_oracle(spec, np.ones(2))
    assert np.all(np.abs(grad) < 1e-6)


@pytest.mark.parametrize("kind", list(ObjectiveKind))
def test_grad_oracle_directional_agreement(kind):
    d = 50 if kind is not ObjectiveKind.ACKLEY else 50
    spec = ObjectiveSpec(kind, d)
    theta = 0.5 + 0.02 * np.arange(d)
    grad = objectives.grad_oracle(spec, theta)
    h = 1e-5
    for i in range(5):
        v = kernels.materialize(sampling.trial_seed(12, i), kernels.SPHERE, d)
        directional = (objectives.clean_value(spec, theta + h * v)
                       - objectives.clean_value(spec, theta - h * v)) / (2 * h)
        ref = float(grad @ v)
        assert abs(directional - ref) <= 1e-4 * max(1.0, abs(ref))


def test_smoothed_oracle_zero_radius_exact():
    spec = ObjectiveSpec(ObjectiveKind.LEVY, 3)
    theta = np.array([0.4, -1.0, 2.0])
    sv = objectives.smoothed_value_oracle(spec, theta, 0.0, DistTag.GAUSSIAN, 50, 1)
    assert sv.mean == objectives.clean_value(spec, theta)
    assert sv.stderr == 0.0


def test_smoothed_oracle_quadratic_sphere_closed_form():
    spec = ObjectiveSpec(ObjectiveKind.QUADRATIC, 4)
    sv = objectives.smoothed_value_oracle(spec, np.zeros(4), 1.0, DistTag.SPHERE,
                                          20000, 5)
    assert sv.analytic == 0.5
    assert abs(sv.mean - 0.5) < max(4.0 * sv.stderr, 1e-12)

    theta = np.array([1.0, 0.0, 0.0, 0.0])
    sv = objectives.smoothed_value_oracle(spec, theta, 0.05, DistTag.SPHERE,
                                          100000, 6)
    assert sv.analytic == 0.50125
    assert abs(sv.mean - 0.50125) < 4.0 * sv.stderr
