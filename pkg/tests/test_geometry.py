import itertools
import math

import pytest

from app.exceptions import ConfigurationError
from app.models.scenario import LayoutParams, MecDeployment
from app.services.geometry import Area, geometry_service


def _min_site_spacing(layout):
    return min(math.dist(a, b) for a, b in itertools.combinations(layout.sites, 2))


def test_default_layout_has_three_sectors_per_site(default_layout):
    assert len(default_layout.sites) == 18
    assert default_layout.n_sectors == 54
    assert default_layout.n_mecs == 54
    for sector in default_layout.sectors:
        assert sector.site_id == sector.sector_id // 3
        assert sector.azimuth_deg in (0.0, 120.0, 240.0)


def test_default_layout_keeps_intersite_distance(default_layout):
    assert _min_site_spacing(default_layout) == pytest.approx(350.0)


def test_sites_lie_inside_area(default_layout):
    for x, y in default_layout.sites:
        assert default_layout.area.contains(x, y)


def test_seven_sites_form_a_hexagon():
    layout = geometry_service.build_layout(
        LayoutParams(n_sites=7, isd=200.0, area_width=1000.0, area_height=1000.0)
    )
    rows = sorted({round(y, 6) for _, y in layout.sites})
    counts = [sum(1 for _, y in layout.sites if round(y, 6) == row) for row in rows]
    assert counts == [2, 3, 2]
    assert _min_site_spacing(layout) == pytest.approx(200.0)
    # the middle site is the area center
    assert (500.0, 500.0) in [tuple(round(c, 6) for c in s) for s in layout.sites]


@pytest.mark.parametrize("n_sites", [1, 2, 3, 5, 9, 12, 18])
def test_any_site_count_keeps_spacing(n_sites):
    layout = geometry_service.build_layout(
        LayoutParams(n_sites=n_sites, isd=300.0, area_width=2400.0, area_height=1800.0)
    )
    assert len(layout.sites) == n_sites
    if n_sites > 1:
        assert _min_site_spacing(layout) >= 300.0 - 1e-6


def test_area_too_small_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        geometry_service.build_layout(
            LayoutParams(n_sites=18, isd=350.0, area_width=500.0, area_height=500.0)
        )


def test_site_deployment_shares_one_mec_per_site():
    layout = geometry_service.build_layout(
        LayoutParams(n_sites=3, isd=350.0, area_width=900.0, area_height=800.0, mec_deployment=MecDeployment.SITE)
    )
    assert layout.n_sectors == 9
    assert layout.n_mecs == 3
    assert [layout.mec_of(s) for s in range(9)] == [0, 0, 0, 1, 1, 1, 2, 2, 2]


def test_sector_arrays_shapes(default_layout):
    positions, azimuths = default_layout.sector_arrays()
    assert positions.shape == (54, 2)
    assert azimuths.shape == (54,)


def test_area_contains_edges():
    area = Area(100.0, 50.0)
    assert area.contains(0.0, 0.0)
    assert area.contains(100.0, 50.0)
    assert not area.contains(100.1, 10.0)
    assert area.center == (50.0, 25.0)
