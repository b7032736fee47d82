import itertools
import json

import numpy as np
import pytest

from dqa import (DataError, FitError, ProtocolError, SvrConfig, krcc,
                 load_manifest, logistic_fit, plcc_rmse, run_protocol, srcc)
from dqa.evaluation import _logistic_curve, _split_contents


def test_rank_correlation_worked_example():
    assert srcc([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(0.8, abs=1e-12)


def test_ordinal_correlation_worked_example():
    assert krcc([1, 2, 3], [1, 3, 2]) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_perfect_and_reversed_orderings():
    s = [0.2, 1.5, 3.0, 7.1, 9.9]
    assert srcc(s, s) == pytest.approx(1.0, abs=1e-12)
    assert krcc(s, s) == pytest.approx(1.0, abs=1e-12)
    assert srcc(s, s[::-1]) == pytest.approx(-1.0, abs=1e-12)
    assert krcc(s, s[::-1]) == pytest.approx(-1.0, abs=1e-12)


def test_rank_correlation_all_permutations():
    # against the rank-vector Pearson correlation, exhaustively
    for t in (3, 4, 5):
        base = np.arange(1.0, t + 1.0)
        for perm in itertools.permutations(range(t)):
            o = base[list(perm)]
            expected = np.corrcoef(base, o)[0, 1]
            assert srcc(base, o) == pytest.approx(expected, abs=1e-12), perm


def test_ordinal_correlation_all_permutations():
    for t in (2, 3, 4, 5):
        base = np.arange(1.0, t + 1.0)
        for perm in itertools.permutations(range(t)):
            o = base[list(perm)]
            conc = disc = 0
            for i in range(t):
                for j in range(i + 1, t):
                    prod = (base[i] - base[j]) * (o[i] - o[j])
                    conc += prod > 0
                    disc += prod < 0
            expected = (conc - disc) / (t * (t - 1) / 2)
            assert krcc(base, o) == pytest.approx(expected, abs=1e-12), perm


def test_ties_get_fractional_ranks():
    assert srcc([1, 2, 2, 4], [1, 2, 3, 4]) == pytest.approx(0.95, abs=1e-12)


def test_tied_pairs_count_as_neither():
    assert krcc([1, 1, 2], [1, 2, 3]) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert krcc([1, 1, 1], [1, 2, 3]) == 0.0


def test_rank_criteria_ignore_monotone_transforms():
    rng = np.random.default_rng(110)
    s = rng.uniform(-2.0, 2.0, 40)
    o = rng.uniform(-2.0, 2.0, 40)
    assert srcc(np.exp(s), o) == pytest.approx(srcc(s, o), abs=1e-12)
    assert krcc(s ** 3, o) == pytest.approx(krcc(s, o), abs=1e-12)


def test_paired_input_validation():
    with pytest.raises(DataError):
        srcc([1, 2], [1, 2])  # too short
    with pytest.raises(DataError):
        krcc([1], [1])
    with pytest.raises(DataError):
        srcc([1, 2, 3], [1, 2])


def test_logistic_refit_recovers_generated_curve():
    rng = np.random.default_rng(111)
    q = rng.uniform(0.0, 1.0, 40)
    truth = np.array([3.0, 4.0, 0.5, 0.8, 1.0])
    s = _logistic_curve(truth, q)
    params = logistic_fit(q, s)
    rmse = float(np.sqrt(np.mean((_logistic_curve(np.array(params), q) - s) ** 2)))
    assert rmse <= 1e-6


def test_logistic_falls_back_to_linear_on_linear_data():
    q = np.linspace(0.0, 2.0, 20)
    s = 2.0 * q + 1.0
    plcc, rmse, params = plcc_rmse(q, s)
    assert plcc == pytest.approx(1.0, abs=1e-9)
    assert rmse <= 1e-9


def test_logistic_fit_input_validation():
    with pytest.raises(FitError):
        logistic_fit(np.ones(10), np.arange(10.0))
    with pytest.raises(DataError):
        logistic_fit([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0])


def test_plcc_invariant_to_affine_score_transform():
    rng = np.random.default_rng(112)
    q = rng.uniform(0.0, 1.0, 60)
    s = _logistic_curve(np.array([2.0, 3.0, 0.4, 0.5, 0.3]), q)
    s = s + rng.normal(0.0, 0.05, 60)
    base, _, _ = plcc_rmse(q, s)
    moved, _, _ = plcc_rmse(3.5 * q - 1.25, s)
    assert moved == pytest.approx(base, abs=1e-6)


def test_plcc_near_zero_when_uncorrelated():
    rng = np.random.default_rng(113)
    plcc, _, _ = plcc_rmse(rng.normal(size=1000), rng.normal(size=1000))
    assert abs(plcc) < 0.1


def test_content_split_is_disjoint_and_deterministic():
    contents = [f"c{k}" for k in range(10)]
    for rep in range(25):
        train, test = _split_contents(contents, seed=5, rep=rep)
        assert train | test == set(contents)
        assert train & test == set()
        assert len(test) == 2
    again = _split_contents(contents, seed=5, rep=3)
    assert again == _split_contents(contents, seed=5, rep=3)
    seen = {frozenset(_split_contents(contents, seed=5, rep=r)[1])
            for r in range(25)}
    assert len(seen) >= 5  # repetitions actually vary the held-out set


def test_protocol_reports_median_criteria(small_manifest):
    db = load_manifest(small_manifest)
    cfg = SvrConfig(c=256.0, gamma="auto", epsilon=0.05)
    report = run_protocol(db, cfg, splits=2, seed=1)
    assert report.n == 30
    assert report.protocol_meta == {"splits": 2, "seed": 1,
                                    "aggregation": "median"}
    assert -1.0 <= report.srcc <= 1.0
    assert report.srcc > 0.5  # luminance-driven opinion is learnable
    again = run_protocol(db, cfg, splits=2, seed=1)
    assert again.srcc == report.srcc
    assert again.rmse == report.rmse

    doc = json.loads(report.to_json())
    assert set(doc) == {"srcc", "krcc", "plcc", "rmse", "n", "logistic",
                        "protocol_meta"}
    assert len(doc["logistic"]) == 5


def test_protocol_rejects_degenerate_setups(tmp_path, small_manifest):
    from conftest import build_manifest
    db = load_manifest(small_manifest)
    with pytest.raises(ProtocolError):
        run_protocol(db, SvrConfig(c=1.0), splits=0)
    single = build_manifest(tmp_path, n_contents=1,
                            levels=np.array([80.0, 180.0]), size=48)
    with pytest.raises(ProtocolError):
        run_protocol(load_manifest(single), SvrConfig(c=1.0), splits=1)
