import numpy as np
import pytest

from app.models.scenario import (
    HandoffAlgorithm,
    HandoffParams,
    LayoutParams,
    MecParams,
    MobilityModel,
    MobilityParams,
    Scenario,
)
from app.services.geometry import geometry_service


def tiny_scenario(**updates) -> Scenario:
    """A three-site network with a handful of UEs that runs in well under a second"""
    base = dict(
        layout=LayoutParams(n_sites=3, isd=350.0, area_width=900.0, area_height=800.0),
        mobility=MobilityParams(speed=10.0),
        mec=MecParams(capacity=8),
        n_ues=6,
        sim_time=2.0,
        warmup=0.5,
        seeds=[1],
    )
    base.update(updates)
    return Scenario(**base)


def calibration_scenario(**updates) -> Scenario:
    """One site, one static UE close to boresight of sector 0"""
    base = dict(
        layout=LayoutParams(n_sites=1, area_width=400.0, area_height=400.0),
        mobility=MobilityParams(model=MobilityModel.STATIC),
        handoff=HandoffParams(algorithm=HandoffAlgorithm.NO_HO),
        n_ues=1,
        ue_positions=[(250.0, 200.0)],
        sim_time=5.0,
        warmup=1.0,
        seeds=[1],
    )
    base.update(updates)
    return Scenario(**base)


@pytest.fixture
def scenario() -> Scenario:
    return tiny_scenario()


@pytest.fixture
def lone_ue_scenario() -> Scenario:
    return calibration_scenario()


@pytest.fixture
def default_layout():
    return geometry_service.build_layout(Scenario().layout)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
