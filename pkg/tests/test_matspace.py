import pytest

from app.core.exceptions import InvalidInputError
from app.services import field_service
from app.services.matspace_service import (
    canonicalize,
    contains,
    det,
    enumerate_subspaces,
    gaussian_binomial,
    image,
    intersect,
    inverse,
    mat_mul,
    sum_spaces,
)


@pytest.fixture
def gf3():
    return field_service.get_field(3)


class TestCanonicalForm:
    def test_reduced_echelon(self, gf3):
        U = canonicalize(gf3, 3, [[2, 1, 0], [1, 1, 1]])
        assert U.rows == ((1, 0, 2), (0, 1, 2))
        assert U.pivots == (0, 1)

    def test_spanning_sets_agree(self, gf3):
        a = canonicalize(gf3, 3, [[1, 1, 0], [0, 1, 1]])
        b = canonicalize(gf3, 3, [[1, 2, 1], [2, 0, 1], [1, 1, 0]])
        assert a.key == b.key

    def test_zero_space(self, gf3):
        U = canonicalize(gf3, 3, [[0, 0, 0]])
        assert U.is_zero and U.dim == 0

    def test_wrong_length(self, gf3):
        with pytest.raises(InvalidInputError):
            canonicalize(gf3, 3, [[1, 0]])

    def test_keys_are_distinct(self):
        F = field_service.get_field(2)
        keys = {U.key for U in enumerate_subspaces(F, 4, 2)}
        assert len(keys) == gaussian_binomial(4, 2, 2) == 35


class TestLattice:
    def test_intersection_and_sum(self, gf3):
        U = canonicalize(gf3, 3, [[1, 0, 0], [0, 1, 0]])
        W = canonicalize(gf3, 3, [[0, 1, 0], [0, 0, 1]])
        assert intersect(U, W).rows == ((0, 1, 0),)
        assert sum_spaces(U, W).dim == 3
        assert contains(sum_spaces(U, W), U)

    def test_trivial_intersection(self, gf3):
        U = canonicalize(gf3, 2, [[1, 0]])
        W = canonicalize(gf3, 2, [[0, 1]])
        assert intersect(U, W).is_zero

    def test_ambient_mismatch(self, gf3):
        with pytest.raises(InvalidInputError):
            intersect(canonicalize(gf3, 2, [[1, 0]]), canonicalize(gf3, 3, [[1, 0, 0]]))

    def test_image_under_frobenius(self):
        F = field_service.get_field(2, 2)
        U = canonicalize(F, 2, [[1, 2]])
        identity = [[1, 0], [0, 1]]
        assert image(U, identity, 1).rows == ((1, 3),)


class TestMatrices:
    def test_det_and_inverse(self, gf3):
        A = [[1, 2], [1, 1]]
        assert det(gf3, A) == 2
        assert mat_mul(gf3, A, inverse(gf3, A)) == [[1, 0], [0, 1]]

    def test_singular(self, gf3):
        with pytest.raises(InvalidInputError):
            inverse(gf3, [[1, 2], [2, 1]])


@pytest.mark.parametrize("n,k,q,expected", [(4, 2, 2, 35), (5, 2, 2, 155), (3, 1, 3, 13), (4, 0, 5, 1), (3, 4, 2, 0)])
def test_gaussian_binomial(n, k, q, expected):
    assert gaussian_binomial(n, k, q) == expected
