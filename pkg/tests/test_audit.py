import pytest

from focalmargin.audit import EDGES, output_discrepancy, run_audit
from focalmargin.errors import ParameterError
from focalmargin.losses import LossOutput

import numpy as np


def test_every_lattice_edge_registered():
    for name in (
        "aFM(m=0) == aF",
        "aFM(gamma_hat=0) == aLM",
        "aFM(m=0, gamma_hat=0) == BCE",
        "OURS(m=0) == HYBRID_FOCAL",
        "TVERSKY(delta=0.5) == DICE",
        "HYBRID_FOCAL(lambda=1) == aF",
        "HYBRID_FOCAL(lambda=0) == FT",
    ):
        assert name in EDGES


def test_short_audit_passes_and_is_deterministic():
    a = run_audit(seed=4, trials=30)
    b = run_audit(seed=4, trials=30)
    assert a.passed
    assert a.to_dict() == b.to_dict()
    assert [e["edge"] for e in a.to_dict()["edges"]] == list(EDGES)


def test_audit_detects_a_broken_edge():
    r = run_audit(trials=10, tol=-1.0)
    assert not r.passed


def test_trials_must_be_positive():
    with pytest.raises(ParameterError):
        run_audit(trials=0)


def test_discrepancy_metric():
    a = LossOutput(1.0, np.array([[1.0, 0.0]]))
    b = LossOutput(1.0, np.array([[1.0 + 1e-10, 0.0]]))
    assert output_discrepancy(a, a) == 0.0
    assert output_discrepancy(a, b) == pytest.approx(1e-10, rel=1e-5)
