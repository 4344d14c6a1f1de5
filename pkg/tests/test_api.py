import pytest

from app.api import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as c:
        yield c


def test_health(client):
    body = client.get("/api/health").get_json()
    assert body["status"] == "ok"
    assert "envelope-audit" in body["commands"]


def test_solve_endpoint(client, read_json):
    resp = client.post("/api/solve", json={"game": read_json("e1.json"), "principal": "1",
                                           "rivals": read_json("e1-rivals.json")})
    assert resp.status_code == 200
    assert resp.get_json()["output"]["value"] == "6/1"


def test_check_endpoint_reports_failure_in_body(client, read_json):
    resp = client.post("/api/check", json={"game": read_json("e1.json"), "mechanisms": read_json("e1-mech.json")})
    assert resp.status_code == 200
    assert resp.get_json()["verdict"] == "fail"


def test_invalid_game_is_a_bad_request(client, read_json):
    game = read_json("e1.json")
    game["types"][0]["prob"] = "q"
    resp = client.post("/api/support", json={"game": game, "profile": read_json("e1-profile.json")})
    assert resp.status_code == 400
    assert "error" in resp.get_json()


def test_precondition_is_unprocessable(client, read_json):
    resp = client.post("/api/delegation/build", json={"model": read_json("delegation-halves.json"),
                                                      "spec": read_json("delegation-full.json")})
    assert resp.status_code == 422


def test_bundling_endpoint(client, read_json):
    resp = client.post("/api/bundling/pairs", json={"model": read_json("uniform12-umi.json")})
    assert resp.get_json()["output"]["count"] == 4


def test_body_must_be_an_object(client):
    assert client.post("/api/solve", json=[1, 2]).status_code == 400
