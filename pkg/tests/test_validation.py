import numpy as np
import pytest

from rkcca.validation import (
    as_data_matrix,
    as_float_array,
    check_consistent_length,
    check_simplex,
    check_square,
    check_symmetric,
)


def test_as_float_array_rejects_non_finite():
    with pytest.raises(ValueError):
        as_float_array([1.0, np.inf])
    with pytest.raises(ValueError):
        as_float_array([[1.0], [np.nan]], ndim=2)
    with pytest.raises(ValueError):
        as_float_array([1.0, 2.0], ndim=2)


def test_as_data_matrix_promotes_vectors():
    out = as_data_matrix([1.0, 2.0, 3.0])
    assert out.shape == (3, 1)
    with pytest.raises(ValueError):
        as_data_matrix(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        as_data_matrix(np.zeros((2, 2, 2)))


def test_check_square_and_symmetric():
    with pytest.raises(ValueError):
        check_square(np.zeros((2, 3)))
    asym = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        check_symmetric(asym)
    sym = np.array([[1.0, 0.5], [0.5, 2.0]])
    assert check_symmetric(sym) is not None


def test_check_simplex():
    assert np.allclose(check_simplex([0.25, 0.75]), [0.25, 0.75])
    with pytest.raises(ValueError):
        check_simplex([0.5, 0.6])
    with pytest.raises(ValueError):
        check_simplex([1.5, -0.5])
    with pytest.raises(ValueError):
        check_simplex([1.0], n=2)


def test_check_consistent_length():
    check_consistent_length(np.zeros((3, 1)), np.zeros((3, 5)), None)
    with pytest.raises(ValueError):
        check_consistent_length(np.zeros((3, 1)), np.zeros((4, 1)))
