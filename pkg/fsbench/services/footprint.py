"""Energy and carbon estimates for a compute run (Green Algorithms model).

    E (kWh)    = t * (n_c * P_c * u_c + n_m * P_m) * PUE * 0.001
    C (gCO2e)  = E * CI
"""
import logging
from typing import Optional

from ..config import get_footprint_defaults
from ..models.schemas import FootprintEstimate, FootprintParams

logger = logging.getLogger(__name__)

# carbon values at or below this print as "0.0"
DISPLAY_FLOOR = 0.005


def energy_kwh(p: FootprintParams) -> float:
    return p.t * (p.n_c * p.P_c * p.u_c + p.n_m * p.P_m) * p.PUE * 0.001


def carbon_g(energy: float, ci: float) -> float:
    return energy * ci


def carbon_g_fused(p: FootprintParams) -> float:
    """Carbon in one expression, without the intermediate energy figure."""
    return p.t * (p.n_c * p.P_c * p.u_c + p.n_m * p.P_m) * p.PUE * p.CI * 0.001


def format_co2(co2: float) -> str:
    """Two-decimal display; anything at or below 0.005 g shows as 0.0."""
    if co2 <= DISPLAY_FLOOR:
        return "0.0"
    return f"{co2:.2f}"


def default_params(**overrides) -> FootprintParams:
    """Reference hardware from the defaults file, with keyword overrides."""
    data = dict(get_footprint_defaults())
    data.update({k: v for k, v in overrides.items() if v is not None})
    return FootprintParams(**data)


def estimate(runtime_seconds: float, params: Optional[FootprintParams] = None,
             peak_memory_mb: Optional[float] = None) -> FootprintEstimate:
    """Footprint of a measured run; ``params.t`` is replaced by the runtime."""
    params = (params or default_params()).model_copy(update={"t": runtime_seconds / 3600.0})
    energy = energy_kwh(params)
    co2 = carbon_g(energy, params.CI)
    logger.debug("Footprint for %.3fs: %.6g kWh, %.6g gCO2e", runtime_seconds, energy, co2)
    return FootprintEstimate(
        runtime_seconds=runtime_seconds,
        energy_kwh=energy,
        co2_g=co2,
        co2_display=format_co2(co2),
        peak_memory_mb=peak_memory_mb,
        params=params,
    )
