import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rbflex.errors import InvalidGamma
from rbflex.estimators import NASWOTScorer, RBFleXScorer
from rbflex.scoring import SENTINEL_DEGENERATE, TraceMatrices


def _traces(rng, count=3, n=5):
    return [TraceMatrices(x=rng.standard_normal((n, 20)), y=rng.standard_normal((n, 6)))
            for _ in range(count)]


def test_fit_detects_gammas(rng):
    probes = _traces(rng)
    scorer = RBFleXScorer().fit(probes)
    assert scorer.gamma_k_ > 0 and scorer.gamma_q_ > 0
    assert scorer.n_candidates_k_ > 0
    assert not scorer.fallback_used_
    scores = scorer.predict(probes)
    assert scores.shape == (3,)
    assert np.isfinite(scores).all()


def test_fixed_gammas_skip_detection():
    scorer = RBFleXScorer(gamma_k=0.5, gamma_q=2.0).fit(None)
    assert (scorer.gamma_k_, scorer.gamma_q_) == (0.5, 2.0)


def test_invalid_fixed_gamma():
    with pytest.raises(InvalidGamma):
        RBFleXScorer(gamma_k=-1.0, gamma_q=1.0).fit(None)


def test_predict_before_fit_raises(rng):
    with pytest.raises(NotFittedError):
        RBFleXScorer().predict(_traces(rng, 1))


def test_predict_accepts_pairs_and_marks_degenerate(rng):
    scorer = RBFleXScorer(gamma_k=1.0, gamma_q=1.0).fit(None)
    x = rng.standard_normal((4, 10))
    y = rng.standard_normal((4, 3))
    dup_x = x.copy()
    dup_x[1] = dup_x[0]
    dup_y = y.copy()
    dup_y[1] = dup_y[0]
    scores = scorer.predict([(x, y), (dup_x, dup_y)])
    assert np.isfinite(scores[0])
    assert scores[1] == SENTINEL_DEGENERATE


def test_score_trace_matches_predict(rng):
    probes = _traces(rng)
    scorer = RBFleXScorer().fit(probes)
    assert scorer.score_trace(probes[0]) == scorer.predict(probes)[0]


def test_sklearn_params_and_clone(rng):
    scorer = RBFleXScorer(gamma_k=0.1, gamma_q=0.2, fallback_gamma=3.0)
    params = scorer.get_params()
    assert params == {"gamma_k": 0.1, "gamma_q": 0.2, "fallback_gamma": 3.0}
    twin = clone(scorer)
    assert twin.get_params() == params
    twin.set_params(gamma_k=0.9)
    assert twin.gamma_k == 0.9 and scorer.gamma_k == 0.1


def test_naswot_estimator(rng):
    probes = _traces(rng)
    scorer = NASWOTScorer().fit()
    scores = scorer.predict(probes)
    assert scores.shape == (3,)
    assert scorer.score_trace(probes[0]) == scores[0]
    assert clone(scorer).get_params() == {}
