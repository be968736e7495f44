import pytest
from fastapi.testclient import TestClient

from app.main import app

PREFIX = "/api/v1/public"


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as client:
        yield client


def test_health(client):
    response = client.get(f"{PREFIX}/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_count(client):
    response = client.get(f"{PREFIX}/count/U/3/2/N1")
    assert response.status_code == 200
    body = response.json()
    assert (body["formula"], body["enumerated"], body["match"]) == (12, 12, True)


def test_count_without_enumeration(client):
    body = client.get(f"{PREFIX}/count/L/5/2/k=2", params={"enumerate_members": False}).json()
    assert body["formula"] == 155 and body["enumerated"] is None


def test_count_rejects_odd_symplectic(client):
    response = client.get(f"{PREFIX}/count/Sp/5/2/P1")
    assert response.status_code == 400
    assert response.json()["detail"]


def test_order(client):
    body = client.get(f"{PREFIX}/order/Omega/O/5/3", params={"compute": False}).json()
    assert body["layer"] == "Ω"
    assert body["formula"] == 25920 and body["computed"] is None


def test_order_computed(client):
    body = client.get(f"{PREFIX}/order/I/Sp/4/2").json()
    assert body["formula"] == body["computed"] == 720


def test_quadrangle(client):
    body = client.get(f"{PREFIX}/gq/W3/3").json()
    assert (body["points"], body["lines"], body["flags"], body["antiflags"]) == (40, 40, 160, 1440)
    assert body["axioms"] is None


def test_dual_quadrangle_with_axioms(client):
    body = client.get(f"{PREFIX}/gq/H3/2", params={"dual": True, "verify": True}).json()
    assert body["dual"] is True and body["points"] == 27
    assert body["axioms"]["gq3"] is True


def test_quadrangle_out_of_budget(client):
    assert client.get(f"{PREFIX}/gq/H4/4").status_code == 413


def test_unknown_quadrangle(client):
    assert client.get(f"{PREFIX}/gq/W5/2").status_code == 400


def test_lnt(client):
    body = client.get(f"{PREFIX}/lnt").json()
    assert [(e["p"], e["f"], e["m"]) for e in body] == [(3, 1, 2), (7, 1, 2)]


def test_catalog_table(client):
    body = client.get(f"{PREFIX}/catalog", params={"table": "T:Spa"}).json()
    assert len(body) == 6
    assert body[0]["id"] == "T:Spa#1"


def test_unknown_table(client):
    assert client.get(f"{PREFIX}/catalog", params={"table": "T:none"}).status_code == 404


def test_lnt_bounds_below_minimum(client):
    assert client.get(f"{PREFIX}/lnt", params={"max_m": 3}).status_code == 400
