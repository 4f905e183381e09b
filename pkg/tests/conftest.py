import pathlib

import pytest

from beamcam import scenario as sc
from beamcam.pipeline import Simulator

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]
SHIPPED_SCENARIO = REPO_ROOT / "scenarios" / "urban_three_cars.txt"


MINIMAL_SCENARIO = """\
[system]
frames = 10
fps = 30
carrier_ghz = 28

[array a0]
elements_n = 8

[bs pole]
position = 0, 0, 6
boresight_deg = 90
array = a0

[reflector wall]
center = 0, 40, 5
size = 30, 1, 10
material = concrete

[ue car]
size = 4.4, 1.8, 1.4
keyframe = 0 : -10, 25, 0.7
keyframe = 9 : 10, 25, 0.7
"""


@pytest.fixture(scope="session")
def shipped_scenario():
    return sc.parse_scenario(SHIPPED_SCENARIO.read_text())


@pytest.fixture(scope="session")
def shipped_truth(shipped_scenario):
    """One expensive physics pass over the shipped scenario, shared."""
    sim = Simulator(shipped_scenario, base_dir=REPO_ROOT)
    return sim, sim.run_truth()


@pytest.fixture()
def minimal_scenario():
    return sc.parse_scenario(MINIMAL_SCENARIO)
