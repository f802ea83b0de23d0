"""Behavioral simulator for an FeFET-based in-sensor multiply-and-accumulate pixel array."""

from .device import (
    FeFETParams,
    FeFETState,
    MosfetParams,
    PhotodiodeParams,
    fefet_conductance,
    mosfet_current,
    new_fefet,
    photodiode_delta_v,
    program,
    remnant_polarization,
    reset_outer_loop,
)
from .pixel import PixelConfig, PixelState, readout, run_cycle, solve_branch_dc
from .array import ArrayConfig, SensorArray, mac, readout_columns
from .variation import VariationSpec, run_mc
from .area import AreaBudget

__version__ = "0.1.0"
