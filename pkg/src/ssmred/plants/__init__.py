from .base import Plant, SimulationFault
from .config import load_plant_params, make_plant
from .hasel import EPS0, HaselPlant, PouchGeometry, PouchParams, pouch_geometry, segment_area
from .integrate import SteadyStateError, simulate, steady_state
from .joint import JointParams, JointPlant, Side, joint_rhs, side_of
from .sdof import SdofParams, SdofPlant, sdof_rhs


def hasel_rhs(state, u, params: PouchParams):
    return HaselPlant(params).rhs(state, u)


__all__ = [
    "EPS0", "HaselPlant", "JointParams", "JointPlant", "Plant", "PouchGeometry",
    "PouchParams", "SdofParams", "SdofPlant", "Side", "SimulationFault",
    "SteadyStateError", "hasel_rhs", "joint_rhs", "load_plant_params", "make_plant",
    "pouch_geometry", "sdof_rhs", "segment_area", "side_of", "simulate", "steady_state",
]
