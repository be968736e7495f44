import pytest

from app.core.exceptions import InvalidInputError
from app.services import field_service


class TestFiniteField:
    def test_prime_field_arithmetic(self):
        F = field_service.get_field(7)
        assert F.q == 7
        assert F.mul(3, 5) == 1
        assert F.inv(3) == 5
        assert F.sub(2, 5) == 4

    def test_extension_field_tables(self):
        F = field_service.get_field(2, 2)
        assert F.q == 4
        # x^2 = x + 1
        assert F.mul(2, 2) == 3
        assert sorted(F.exp[:3]) == [1, 2, 3]

    def test_field_of_order(self):
        F = field_service.field_of_order(9)
        assert (F.p, F.f) == (3, 2)

    def test_field_of_order_rejects_composite(self):
        with pytest.raises(InvalidInputError):
            field_service.field_of_order(6)

    def test_non_prime_characteristic(self):
        with pytest.raises(InvalidInputError):
            field_service.get_field(4, 1)

    def test_elements(self):
        F = field_service.get_field(5)
        a = F.element(2)
        assert (a * a).code == 4
        assert a.inverse().code == 3
        assert (a ** -1).code == 3


class TestFrobenius:
    def test_gf4(self):
        F = field_service.get_field(2, 2)
        x = F.element(2)
        assert field_service.frobenius(x).code == 3
        assert field_service.frobenius(x, 2).code == 2

    def test_negative_exponent(self):
        F = field_service.get_field(2, 2)
        with pytest.raises(InvalidInputError):
            field_service.frobenius(F.element(2), -1)


class TestSquares:
    def test_square_classes(self):
        assert field_service.is_square(field_service.get_field(3).element(2)) is False
        assert field_service.is_square(field_service.get_field(7).element(2)) is True

    def test_characteristic_two(self):
        with pytest.raises(InvalidInputError):
            field_service.is_square(field_service.get_field(2, 2).element(1))

    def test_sqrt(self):
        F = field_service.get_field(11)
        r = field_service.sqrt_code(F, 3)
        assert r is not None and F.mul(r, r) == 3
        assert field_service.sqrt_code(F, field_service.nonsquare_code(F)) is None


class TestSubfields:
    def test_trace_and_norm(self):
        big = field_service.get_field(2, 2)
        small = field_service.get_field(2)
        assert field_service.trace(big, small, 2) == 1
        assert field_service.norm(big, small, 2) == 1

    def test_embedding_is_homomorphic(self):
        small = field_service.get_field(2, 2)
        big = field_service.get_field(2, 4)
        emb = field_service.embed_subfield(small, big)
        for a in range(4):
            for b in range(4):
                assert emb[small.mul(a, b)] == big.mul(emb[a], emb[b])

    def test_not_a_subfield(self):
        with pytest.raises(InvalidInputError):
            field_service.embed_subfield(field_service.get_field(2, 2), field_service.get_field(2, 3))


def test_divisibility_exceptions():
    found = {(e.p, e.f, e.m) for e in field_service.verify_l_nt(7, 3, 4)}
    assert found == {(3, 1, 2), (7, 1, 2)}


@pytest.mark.parametrize("bounds", [(5, 3, 4), (7, 2, 4), (7, 3, 3)])
def test_divisibility_bounds_below_minimum(bounds):
    with pytest.raises(InvalidInputError):
        field_service.verify_l_nt(*bounds)
