import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betalab.contour import build_contour
from betalab.equilibrium import distance_to_cut
from betalab.errors import ContourError, DomainError


def test_residue_and_entire():
    c = build_contour(0.5, 256)
    assert c.integrate(1.0 / c.nodes) / (2j * np.pi) == pytest.approx(1.0, abs=1e-10)
    assert abs(c.integrate(c.nodes)) < 1e-10
    assert c.orientation == "counterclockwise"


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0))
def test_nodes_at_distance_d(d):
    c = build_contour(d, 1024)
    assert np.allclose(distance_to_cut(c.nodes), d, atol=1e-12)
    # enclosed point anywhere on the cut
    assert c.integrate(1.0 / (c.nodes - 1.3)) / (2j * np.pi) == pytest.approx(1.0, abs=1e-8)


def test_infinite_d_max_accepts_any_distance():
    assert build_contour(50.0, 64).N > 0


def test_rejections():
    with pytest.raises(DomainError):
        build_contour(0.0)
    with pytest.raises(ContourError):
        build_contour(0.5, d_max=1.0)


def test_outside_point_not_enclosed():
    c = build_contour(0.3, 256)
    assert abs(c.integrate(1.0 / (c.nodes - 3.0))) < 1e-10
