"""Per-pixel area cost of the compute devices."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from decimal import Decimal


@dataclass(frozen=True)
class AreaBudget:
    gate_pitch: float = 160.0  # nm
    diffusion_pitch: float = 200.0  # nm
    penalty_fefet: float = 0.032  # um^2
    penalty_xp: float = 0.02  # um^2
    penalty_xr: float = 0.02  # um^2
    pixel_area: float = 4.41  # um^2

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def to_dict(self):
        return asdict(self)


def total_penalty(b: AreaBudget) -> float:
    # decimal sum so 0.032 + 0.02 + 0.02 is 0.072, not 0.07200000000000001
    parts = (b.penalty_fefet, b.penalty_xp, b.penalty_xr)
    return float(sum(Decimal(repr(p)) for p in parts))


def penalty_fraction(b: AreaBudget) -> float:
    """Penalty as a percentage of the full pixel area."""
    if b.pixel_area <= 0:
        raise ZeroDivisionError("pixel_area must be positive")
    return 100.0 * total_penalty(b) / b.pixel_area


def fill_factor_reduction(b: AreaBudget) -> float:
    """Penalty as a percentage of the area left for the photodiode."""
    free = b.pixel_area - total_penalty(b)
    if free <= 0:
        raise ZeroDivisionError("penalty consumes the whole pixel")
    return 100.0 * total_penalty(b) / free


def area_report(b: AreaBudget) -> dict:
    return {
        "budget": b.to_dict(),
        "total_penalty_um2": total_penalty(b),
        "penalty_fraction_pct": penalty_fraction(b),
        "fill_factor_reduction_pct": fill_factor_reduction(b),
    }
