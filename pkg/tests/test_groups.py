import pytest

from app.core.exceptions import DataFileError, InvalidInputError, NotIsometryError
from app.models.form import FormKind, FormType
from app.models.group import SemilinearMap
from app.services import construction_service, form_service, group_service
from app.services.group_service import (
    IN_OMEGA,
    OUTSIDE_S,
    S_MINUS_OMEGA,
    classical_group,
    formula_order,
    group_order,
    omega_membership,
    reflection,
)
from app.services.matspace_service import canonicalize


class TestLayers:
    def test_aliases(self):
        assert group_service.parse_layer("Omega") == "Ω"
        assert group_service.parse_layer("G") == "Γ"
        with pytest.raises(InvalidInputError):
            group_service.parse_layer("PSL")

    def test_indices(self):
        idx = group_service.layer_indices(FormKind.QUADRATIC, FormType.CIRCLE, 3, 2)
        assert idx.s_omega == 2
        idx = group_service.layer_indices(FormKind.HERMITIAN, None, 3, 2)
        assert idx.as_tuple() == (2, 1, 3, 1)

    @pytest.mark.parametrize("layer,kind,form_type,n,q,expected", [
        ("I", FormKind.ALTERNATING, None, 4, 3, 51840),
        ("Γ", FormKind.HERMITIAN, None, 3, 2, 1296),
        ("S", FormKind.LINEAR, None, 3, 2, 168),
        ("Ω", FormKind.QUADRATIC, FormType.CIRCLE, 3, 2, 3),
        ("Ω", FormKind.QUADRATIC, FormType.PLUS, 6, 2, 20160),
        ("Ω", FormKind.QUADRATIC, FormType.CIRCLE, 5, 3, 25920),
    ])
    def test_formula(self, layer, kind, form_type, n, q, expected):
        assert formula_order(layer, kind, form_type, n, q) == expected

    def test_projective_indices(self):
        idx = group_service.projective_indices(FormKind.LINEAR, None, 2, 3)
        assert idx.i_s == 2

    @pytest.mark.parametrize("layer,label,n,q", [
        ("I", "Sp", 4, 2),
        ("Ω", "O", 3, 2),
        ("S", "O", 3, 3),
        ("Ω", "O-", 4, 2),
        ("I", "U", 3, 2),
        ("Γ", "U", 3, 2),
        ("C", "O+", 4, 3),
        ("Γ", "L", 2, 4),
    ])
    def test_computed_order_matches_formula(self, layer, label, n, q):
        kind, form_type = form_service.parse_ambient(label)
        G = classical_group(layer, kind, n, q, form_type)
        assert group_order(G) == formula_order(layer, kind, G.space.type if kind == FormKind.QUADRATIC else None, n, q)

    @pytest.mark.slow
    @pytest.mark.parametrize("layer,label,n,q", [
        (layer, label, n, q)
        for label, dims in (("L", range(2, 7)), ("Sp", (2, 4, 6)), ("U", range(2, 7)),
                            ("O", (3, 5)), ("O+", (4, 6)), ("O-", (4, 6)))
        for n in dims
        for q in (2, 3, 4)
        if (q * q if label == "U" else q) ** n <= 4096
        for layer in group_service.LAYERS
    ])
    def test_order_sweep(self, layer, label, n, q):
        kind, form_type = form_service.parse_ambient(label)
        G = classical_group(layer, kind, n, q, form_type)
        assert group_order(G) == formula_order(layer, kind, form_type, n, q)

    def test_generators_are_semisimilarities(self):
        G = classical_group("Γ", FormKind.HERMITIAN, 3, 2)
        for g in G.generators:
            assert form_service.similarity_factor(G.space, g.matrix, g.e) is not None


class TestSemilinearMaps:
    def test_composition_and_inverse(self):
        G = classical_group("Γ", FormKind.LINEAR, 2, 4)
        for g in G.generators:
            assert (g * g.inverse()).is_identity()

    def test_frobenius_map(self):
        F = form_service.standard_space(FormKind.LINEAR, 2, 4).field
        phi = SemilinearMap.of(F, [[1, 0], [0, 1]], 1)
        assert phi((2, 3)) == (3, 2)
        assert (phi ** 2).is_identity()


class TestOmegaMembership:
    @pytest.fixture
    def o5_3(self):
        return form_service.standard_space(FormKind.QUADRATIC, 5, 3)

    def test_reflection_has_determinant_minus_one(self, o5_3):
        assert omega_membership(o5_3, reflection(o5_3, (1, 0, 0, 0, 0))) == OUTSIDE_S

    def test_spinor_norm(self, o5_3):
        r_d = reflection(o5_3, (1, 0, 0, 0, 0))
        square = reflection(o5_3, (0, 1, 1, 0, 0))
        nonsquare = reflection(o5_3, (0, 1, 2, 0, 0))
        assert omega_membership(o5_3, r_d * square) == IN_OMEGA
        assert omega_membership(o5_3, r_d * nonsquare) == S_MINUS_OMEGA

    def test_identity(self, o5_3):
        assert omega_membership(o5_3, SemilinearMap.identity(o5_3.field, 5)) == IN_OMEGA

    def test_even_characteristic(self, o6plus_2):
        r1 = reflection(o6plus_2, (1, 1, 0, 0, 0, 0))
        r2 = reflection(o6plus_2, (0, 0, 1, 1, 0, 0))
        assert omega_membership(o6plus_2, r1) == S_MINUS_OMEGA
        assert omega_membership(o6plus_2, r1 * r2) == IN_OMEGA

    def test_not_an_isometry(self, o5_3):
        A = [[1 if i == j else 0 for j in range(5)] for i in range(5)]
        A[0][1] = 1
        with pytest.raises(NotIsometryError):
            omega_membership(o5_3, SemilinearMap.of(o5_3.field, A))

    def test_requires_quadratic_form(self, sp4_2):
        with pytest.raises(InvalidInputError):
            omega_membership(sp4_2, SemilinearMap.identity(sp4_2.field, 4))

    def test_singular_reflection(self, o6plus_2):
        with pytest.raises(InvalidInputError):
            reflection(o6plus_2, (1, 0, 0, 0, 0, 0))


class TestSubgroups:
    def test_point_stabilizer(self, sp4_2):
        G = group_service.isometry_group(sp4_2, "I")
        U = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        H = group_service.stabilizer_of_subspace(G, U)
        assert group_order(G) == 720
        assert group_order(H) == 48
        for g in H.generators:
            assert group_service.contains(G, g)

    def test_derived_subgroup(self):
        G = classical_group("I", FormKind.ALTERNATING, 4, 2)
        assert group_order(group_service.derived_subgroup(G)) == 360

    def test_random_element_is_member(self, sp4_2):
        G = group_service.isometry_group(sp4_2, "I")
        g = group_service.random_element(G)
        assert group_service.contains(G, g)

    def test_conjugate_keeps_order(self, sp4_2):
        G = group_service.isometry_group(sp4_2, "I")
        x = G.generators[0]
        assert group_order(group_service.conjugate(G, x)) == 720

    def test_field_extension_order(self):
        H = construction_service.embed_field_extension(FormKind.ALTERNATING, 2, 2, 2)
        assert H.space.n == 4
        assert group_order(H) == 60


class TestGeneratorFiles:
    def test_save_and_load(self, tmp_path, sp4_2):
        G = group_service.isometry_group(sp4_2, "I")
        path = tmp_path / "sp4_2.json"
        group_service.save_generators(G, path, seed=7)
        loaded = group_service.load_generators(path)
        assert loaded.space.gram == sp4_2.gram
        assert group_order(loaded) == 720

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFileError):
            group_service.load_generators(tmp_path / "absent.json")

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"gens\": 3}")
        with pytest.raises(DataFileError):
            group_service.load_generators(path)

    def test_rejects_non_similarity(self, tmp_path, sp4_2):
        G = group_service.isometry_group(sp4_2, "I")
        doc = group_service.group_to_file(G)
        doc.gens[0].A = [[1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        doc.gens[0].e = 0
        with pytest.raises(InvalidInputError):
            group_service.group_from_file(doc)
