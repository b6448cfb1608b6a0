import pytest
from django.core.cache import cache
from django.urls import reverse

from curie_weiss import views
from curie_weiss.tests.factories import ExperimentRunFactory


@pytest.fixture(autouse=True)
def clear_cache():
    """Clear cache before and after each test"""
    cache.clear()
    yield
    cache.clear()


# ========== MOMENTS API TESTS ==========

def test_moments_at_zero_coupling(client):
    response = client.get(reverse("curie_weiss:moments_api"), {"n_pop": 4, "k_obs": 2, "beta": 0})
    assert response.status_code == 200
    data = response.json()
    assert data["e_s2k"]["1"] == pytest.approx(4.0)
    assert data["e_s2k"]["2"] == pytest.approx(40.0)
    assert data["e_sigma2k"]["1"] == pytest.approx(2.0)
    assert data["e_sigma2k"]["2"] == pytest.approx(8.0)
    assert data["e_pair"] == pytest.approx(0.0, abs=1e-12)


def test_moments_default_to_full_observation(client):
    data = client.get(reverse("curie_weiss:moments_api"), {"n_pop": 6, "beta": 0.5}).json()
    assert data["k_obs"] == 6
    assert data["e_sigma2k"] == data["e_s2k"]


@pytest.mark.parametrize("params", [
    {"beta": 0.5},
    {"n_pop": "many", "beta": 0.5},
    {"n_pop": 10, "beta": 0.5, "k_max": 7},
    {"n_pop": 10, "beta": 0.5, "k_max": 0},
    {"n_pop": 10, "k_obs": 20, "beta": 0.5},
])
def test_moments_bad_request(client, params):
    response = client.get(reverse("curie_weiss:moments_api"), params)
    assert response.status_code == 400
    assert "error" in response.json()


def test_moments_rejects_large_population(client, settings, mocker):
    spy = mocker.spy(views, "exact_moments")
    settings.CURIE_WEISS = {**settings.CURIE_WEISS, "API_MAX_N_POP": 100}

    response = client.get(reverse("curie_weiss:moments_api"), {"n_pop": 101, "beta": 0.5})

    assert response.status_code == 400
    assert "100" in response.json()["error"]
    assert spy.call_count == 0


def test_moments_over_budget_is_bad_request(client, settings):
    settings.CURIE_WEISS = {**settings.CURIE_WEISS, "EXACT_MOMENT_BUDGET": 100}
    response = client.get(reverse("curie_weiss:moments_api"), {"n_pop": 1000, "beta": 0.5})
    assert response.status_code == 400
    assert "budget" in response.json()["error"]


def test_moments_cache_hit(client, mocker):
    spy = mocker.spy(views, "exact_moments")
    params = {"n_pop": 20, "k_obs": 10, "beta": 1.5, "k_max": 3}

    first = client.get(reverse("curie_weiss:moments_api"), params).json()
    second = client.get(reverse("curie_weiss:moments_api"), params).json()

    assert first == second
    assert spy.call_count == 1
    assert cache.get("moments_20_10_1.5_3") is not None


# ========== RUNS API TESTS ==========

@pytest.mark.django_db
def test_runs_api_filters_by_kind(client):
    ExperimentRunFactory.create_batch(2, kind="clt")
    ExperimentRunFactory(kind="coverage")

    data = client.get(reverse("curie_weiss:runs_api"), {"kind": "clt"}).json()
    assert len(data["runs"]) == 2
    assert {run["kind"] for run in data["runs"]} == {"clt"}
    assert data["limit_reached"] is False


@pytest.mark.django_db
def test_runs_api_limit(client):
    ExperimentRunFactory.create_batch(views.API_LIMIT + 5)
    data = client.get(reverse("curie_weiss:runs_api")).json()
    assert len(data["runs"]) == views.API_LIMIT
    assert data["limit_reached"] is True


@pytest.mark.django_db
def test_run_detail(client):
    run = ExperimentRunFactory(checks={"ok": True, "slope": False}, passed=False)
    data = client.get(reverse("curie_weiss:run_detail_api", args=[run.id])).json()
    assert data["id"] == run.id
    assert data["failed_checks"] == ["slope"]
    assert data["config_digest"] == run.config_digest
    assert data["passed"] is False


@pytest.mark.django_db
def test_run_detail_not_found(client):
    response = client.get(reverse("curie_weiss:run_detail_api", args=[999]))
    assert response.status_code == 404
