import dataclasses

import pytest

from app.core.exceptions import BudgetExceededError, InvalidInputError
from app.models.form import FormKind
from app.models.quadrangle import GeneralizedQuadrangle
from app.services import construction_service, gq_service, group_service


@pytest.fixture(scope="module")
def w3_2():
    return gq_service.build_classical_gq("W3", 2)


@pytest.fixture(scope="module")
def sp4_group(w3_2):
    return group_service.isometry_group(w3_2.space, "I")


@pytest.fixture(scope="module")
def sp2_4():
    return construction_service.embed_field_extension(FormKind.ALTERNATING, 2, 2, 2)


class TestBuild:
    @pytest.mark.parametrize("name,q,order,points,lines", [
        ("W3", 2, (2, 2), 15, 15),
        ("W3", 3, (3, 3), 40, 40),
        ("Q4", 2, (2, 2), 15, 15),
        ("Q5minus", 2, (2, 4), 27, 45),
        ("H3", 2, (4, 2), 45, 27),
        ("H4", 2, (4, 8), 165, 297),
    ])
    def test_sizes(self, name, q, order, points, lines):
        Q = gq_service.build_classical_gq(name, q)
        assert Q.order == order
        assert (len(Q.points), len(Q.lines)) == (points, lines)

    def test_flags_and_antiflags(self):
        summary = gq_service.summarize(gq_service.build_classical_gq("W3", 3), verify=False)
        assert (summary.flags, summary.antiflags) == (160, 1440)
        assert summary.axioms is None

    def test_dual(self):
        D = gq_service.dual(gq_service.build_classical_gq("H3", 2))
        assert D.dualized and D.label == "dual H3(2)"
        assert D.order == (2, 4)
        assert len(D.points) == 27
        assert gq_service.verify_axioms(D).ok

    def test_unknown_name(self):
        with pytest.raises(InvalidInputError):
            gq_service.build_classical_gq("W5", 2)

    def test_large_field_is_out_of_budget(self):
        with pytest.raises(BudgetExceededError):
            gq_service.build_classical_gq("H4", 4)


class TestAxioms:
    @pytest.mark.parametrize("name", ["W3", "Q4", "Q5minus", "H3"])
    def test_classical_quadrangles(self, name):
        Q = gq_service.build_classical_gq(name, 2)
        report = gq_service.verify_axioms(Q)
        assert report.ok, report.failures
        assert report.srg is True
        assert gq_service.verify_axioms(gq_service.dual(Q)).ok

    def test_missing_line_is_detected(self, w3_2):
        broken = GeneralizedQuadrangle(w3_2.name, w3_2.q, w3_2.space, w3_2.points, w3_2.lines[1:],
                                       w3_2.line_points[1:], w3_2.order)
        report = gq_service.verify_axioms(broken, check_graph=False)
        assert not report.ok
        assert not report.gq2 and not report.counts
        assert report.srg is None

    def test_collinearity_graph(self, w3_2):
        G = gq_service.collinearity_graph(w3_2)
        assert G.number_of_nodes() == 15 and G.number_of_edges() == 45
        assert gq_service.is_strongly_regular(G, 6, 1, 3)
        assert not gq_service.is_strongly_regular(G, 6, 0, 3)


class TestTransitivity:
    @pytest.mark.parametrize("target", ["points", "lines", "flags", "antiflags"])
    def test_full_group(self, w3_2, sp4_group, target, budget):
        assert gq_service.gq_transitivity(w3_2, sp4_group, target, budget)

    def test_field_extension_subgroup(self, w3_2, sp2_4, budget):
        result = gq_service.check(w3_2, sp2_4, targets=("points", "lines"), budget=budget)
        assert result.points is True
        assert result.lines is False
        assert result.implication_holds is None

    def test_check_reports_implication(self, w3_2, sp4_group, budget):
        result = gq_service.check(w3_2, sp4_group, primitive=True, budget=budget)
        assert result.flags and result.antiflags
        assert result.primitive_on_points is True
        assert result.implication_holds is True

    def test_unknown_target(self, w3_2, sp4_group):
        with pytest.raises(InvalidInputError):
            gq_service.gq_transitivity(w3_2, sp4_group, "planes")

    def test_pairs_over_budget(self, w3_2, sp4_group, budget):
        small = dataclasses.replace(budget, max_orbit=100)
        with pytest.raises(BudgetExceededError):
            gq_service.gq_transitivity(w3_2, sp4_group, "antiflags", small)

    def test_point_primitivity(self, w3_2, sp4_group, sp2_4, budget):
        assert gq_service.is_point_primitive(w3_2, sp4_group, budget)
        # стабилизатор точки в Alt_5 - четверная группа, она не максимальна
        assert not gq_service.is_point_primitive(w3_2, sp2_4, budget)

    def test_joint_implication(self, w3_2, sp4_group, sp2_4, budget):
        assert gq_service.joint_implies_flag_check(w3_2, sp4_group, budget)
        assert gq_service.joint_implies_flag_check(w3_2, sp2_4, budget)


@pytest.mark.slow
def test_hermitian_surface_over_gf9():
    Q = gq_service.build_classical_gq("H3", 3)
    assert (len(Q.points), len(Q.lines)) == (280, 112)
    assert gq_service.verify_axioms(Q, check_graph=False).ok
