import math

import pytest

from mpccsim.svg import Band, EmptyDataError, GuideLine, Series, render_chart


def test_single_series_renders_polyline():
    svg = render_chart([Series("flow", [0, 1, 2], [1.0, 3.0, 2.0])])
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 1
    assert 'version="1.1"' in svg


def test_band_chart_renders_polygon():
    band = Band("lossless", [0.1, 0.2, 0.3], [0.0, -0.1, 0.0], [0.2, 0.3, 0.1])
    svg = render_chart(bands=[band], guides=[GuideLine(y=0.0)])
    assert svg.count("<polygon") == 1
    assert "stroke-dasharray" in svg  # the guide line


def test_deterministic_output():
    series = [Series("a", [0, 1, 2, 3], [5.0, 4.5, 6.25, 5.5], dash="4 3")]
    assert render_chart(series, title="x") == render_chart(series, title="x")


def test_empty_data_raises():
    with pytest.raises(EmptyDataError):
        render_chart()
    with pytest.raises(EmptyDataError):
        render_chart([Series("a", [], [])])


def test_non_finite_points_split_segments():
    svg = render_chart([Series("a", [0, 1, 2, 3, 4], [1.0, 2.0, math.nan, 3.0, 4.0])])
    assert svg.count("<polyline") == 2


def test_labels_escaped():
    svg = render_chart(
        [Series("a<b", [0, 1], [0.0, 1.0])], title="x & y", x_label="<t>"
    )
    assert "a&lt;b" in svg and "x &amp; y" in svg and "&lt;t&gt;" in svg
