import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import ParameterError
from app.domain.synth import (
    ball_mass,
    five_mode_mixture,
    population_knn_radius,
    sample,
    sample_with_labels,
    true_density,
    two_mode_mixture,
)
from app.schemas.mixture import MixtureComponent, MixtureSpec


def _standard_normal(d: int) -> MixtureSpec:
    return MixtureSpec(
        d=d, components=(MixtureComponent(weight=1.0, mean=(0.0,) * d, variance=1.0),)
    )


def test_sample_is_deterministic():
    spec = two_mode_mixture()
    a = sample(spec, 200, seed=42)
    b = sample(spec, 200, seed=42)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample(spec, 200, seed=43).points)


def test_sample_prefix_does_not_depend_on_n_for_labels():
    spec = five_mode_mixture()
    _, small = sample_with_labels(spec, 50, seed=3)
    _, large = sample_with_labels(spec, 80, seed=3)
    # labels come first in the stream, so a longer draw extends the shorter one
    assert large[:50].tolist() == small.tolist()


def test_sample_mean_of_standard_normal():
    ps = sample(_standard_normal(2), 100_000, seed=1)
    assert np.all(np.abs(ps.points.mean(axis=0)) < 0.02)
    assert np.all(np.abs(ps.points.std(axis=0) - 1.0) < 0.02)


def test_component_frequencies():
    _, labels = sample_with_labels(five_mode_mixture(7), 100_000, seed=2)
    freqs = np.bincount(labels, minlength=5) / labels.size
    assert np.all(np.abs(freqs - 0.2) < 0.01)


def test_five_mode_means():
    spec = five_mode_mixture(7)
    assert spec.d == 7
    for i, component in enumerate(spec.components):
        expected = np.zeros(7)
        expected[i] = 2 * math.sqrt(7)
        np.testing.assert_allclose(component.mean, expected)
    with pytest.raises(ParameterError):
        five_mode_mixture(4)


def test_true_density_closed_forms():
    assert true_density(_standard_normal(1), [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert true_density(_standard_normal(2), [0.0, 0.0]) == pytest.approx(1 / (2 * math.pi))
    expected = 0.5 / (2 * math.pi) * (1 + math.exp(-17 / 2))
    assert true_density(two_mode_mixture(), [0.0, 0.0]) == pytest.approx(expected, rel=1e-12)


def test_true_density_vectorized_and_integrates_to_one():
    spec = two_mode_mixture()
    axis = np.linspace(-7.0, 10.0, 341)
    xx, yy = np.meshgrid(axis, axis)
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    values = true_density(spec, grid)
    assert values.shape == (grid.shape[0],)
    cell = (axis[1] - axis[0]) ** 2
    assert values.sum() * cell == pytest.approx(1.0, abs=0.01)


def test_true_density_dimension_mismatch():
    with pytest.raises(ParameterError):
        true_density(two_mode_mixture(), [0.0, 0.0, 0.0])


def test_ball_mass_of_standard_normal():
    spec = _standard_normal(2)
    # P(|Z| <= r) = 1 - exp(-r^2 / 2) in two dimensions
    for r in (0.1, 1.0, 2.5):
        assert ball_mass(spec, [0.0, 0.0], r) == pytest.approx(1 - math.exp(-r * r / 2))
    assert ball_mass(spec, [0.0, 0.0], 0.0) == 0.0


def test_population_knn_radius_inverts_ball_mass():
    spec = two_mode_mixture()
    x = [0.5, 1.0]
    r = population_knn_radius(spec, x, k=20, n=1000)
    assert ball_mass(spec, x, r) == pytest.approx(20 / 1000, rel=1e-8)
    with pytest.raises(ParameterError):
        population_knn_radius(spec, x, k=0, n=1000)


@pytest.mark.parametrize(
    "payload",
    [
        {"d": 1, "components": [{"weight": 0.4, "mean": [0.0], "variance": 1.0}]},
        {"d": 2, "components": [{"weight": 1.0, "mean": [0.0], "variance": 1.0}]},
        {"d": 1, "components": [{"weight": 1.0, "mean": [0.0], "variance": 0.0}]},
        {"d": 1, "components": []},
    ],
)
def test_mixture_spec_validation(payload):
    with pytest.raises(ValidationError):
        MixtureSpec.model_validate(payload)


def test_mixture_spec_from_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(two_mode_mixture().model_dump_json())
    assert MixtureSpec.from_json_file(path) == two_mode_mixture()


def test_negative_seed_rejected():
    with pytest.raises(ParameterError):
        sample(two_mode_mixture(), 10, seed=-1)
