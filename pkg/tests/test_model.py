"""Economy loading, balance residuals, and demand-regime classification."""

import json

import numpy as np
import pytest

from conftest import E1_DOC, balanced_economy, random_irreducible_productive
from iotax import RegimeKind, balance_residual, demand_regime, load_economy
from iotax.errors import DimensionError, DomainError, ParseError


def test_load_from_mapping(e1):
    assert e1.n == 2
    assert np.array_equal(e1.A, [[0.0, 0.5], [0.5, 0.0]])
    assert np.array_equal(e1.x, [2.0, 2.0])
    assert np.array_equal(e1.m, [0.0, 0.0])


def test_load_from_json_file(tmp_path):
    path = tmp_path / "e1.json"
    path.write_text(json.dumps(E1_DOC))
    model = load_economy(path)
    assert model.n == 2
    assert np.array_equal(model.c, [1.0, 1.0])


def test_load_from_csv_with_sidecar(tmp_path):
    matrix = tmp_path / "econ.csv"
    matrix.write_text("0,0.5\n0.5,0\n")
    sidecar = tmp_path / "econ.json"
    sidecar.write_text(json.dumps({k: v for k, v in E1_DOC.items() if k != "A"}))
    model = load_economy(matrix)
    assert np.array_equal(model.A, [[0.0, 0.5], [0.5, 0.0]])
    assert np.array_equal(model.x, [2.0, 2.0])


def test_csv_without_sidecar_rejected(tmp_path):
    matrix = tmp_path / "econ.csv"
    matrix.write_text("0,0.5\n0.5,0\n")
    with pytest.raises(ParseError):
        load_economy(matrix)


def test_nonsquare_matrix_rejected():
    doc = dict(E1_DOC, A=[[0.0, 0.5, 0.1], [0.5, 0.0, 0.1]])
    with pytest.raises(DimensionError):
        load_economy(doc)


def test_nonpositive_output_rejected():
    with pytest.raises(DomainError):
        load_economy(dict(E1_DOC, x=[2.0, 0.0]))


def test_negative_cost_rejected():
    with pytest.raises(DomainError):
        load_economy(dict(E1_DOC, A=[[0.0, -0.5], [0.5, 0.0]]))


def test_length_mismatch_rejected():
    with pytest.raises(DimensionError):
        load_economy(dict(E1_DOC, c=[1.0, 1.0, 1.0]))


def test_missing_key_rejected():
    doc = {k: v for k, v in E1_DOC.items() if k != "e"}
    with pytest.raises(ParseError):
        load_economy(doc)


def test_malformed_json_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_economy(path)


def test_balance_residual_e1(e1):
    assert np.allclose(balance_residual(e1), [0.0, 0.0], atol=1e-15)


def test_balance_residual_identity_decomposition():
    model = load_economy({"A": [[0.0, 0.0], [0.0, 0.0]], "x": [1.0, 1.0],
                          "c": [1.0, 1.0], "e": [0.0, 0.0], "i": [0.0, 0.0]})
    assert np.allclose(balance_residual(model), [0.0, 0.0], atol=1e-15)


def test_balance_residual_overconsumption(e1):
    model = load_economy(dict(E1_DOC, c=[2.0, 2.0]))
    assert np.allclose(balance_residual(model), [-1.0, -1.0], atol=1e-15)


def test_regime_all_positive(e1):
    regime = demand_regime(e1, 1e-9)
    assert regime.kind is RegimeKind.ALL_POSITIVE
    assert regime.I_set == frozenset({0, 1})


def test_regime_mixed(subsidy_economy):
    regime = demand_regime(subsidy_economy, 1e-9)
    assert regime.kind is RegimeKind.MIXED
    assert regime.I_set == frozenset({1})
    assert regime.J_set == frozenset({0})


def test_regime_invalid_on_balance_failure():
    model = load_economy(dict(E1_DOC, c=[2.0, 2.0]))
    assert demand_regime(model, 1e-9).kind is RegimeKind.INVALID


def test_accessor_consistency_random():
    # x = Ax + (c + e - m) + residual holds to machine precision by construction.
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 12))
        A = random_irreducible_productive(rng, n)
        model = balanced_economy(rng, A)
        recomposed = model.A @ model.x + model.final_demand + balance_residual(model)
        assert np.allclose(recomposed, model.x, rtol=0, atol=1e-12 * np.max(model.x))


def test_mixed_regime_partitions_exactly():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(2, 10))
        A = random_irreducible_productive(rng, n)
        x = rng.uniform(0.5, 3.0, size=n)
        f = x - A @ x
        model = load_economy({"A": A.tolist(), "x": x.tolist(), "c": f.tolist(),
                              "e": [0.0] * n, "i": [0.0] * n})
        regime = demand_regime(model, 1e-9)
        if regime.kind is RegimeKind.MIXED:
            assert regime.I_set | regime.J_set == frozenset(range(n))
            assert not regime.I_set & regime.J_set
            assert regime.I_set and regime.J_set
