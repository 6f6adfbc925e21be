"""footprint: energy and carbon for a given runtime and hardware profile."""
from ..models.schemas import RunConfig
from ..services.footprint import carbon_g, carbon_g_fused, energy_kwh, format_co2
from ..services.report import to_json
from . import EXIT_OK


def compute(config: RunConfig) -> dict:
    params = config.footprint
    energy = energy_kwh(params)
    return {
        "energy_kwh": energy,
        "co2_g": carbon_g(energy, params.CI),
        "co2_g_fused": carbon_g_fused(params),
        "co2_display": format_co2(carbon_g(energy, params.CI)),
        "params": params,
    }


def run(config: RunConfig) -> int:
    result = compute(config)
    if config.json_output:
        print(to_json(result))
        return EXIT_OK
    print(f"energy_kwh  {result['energy_kwh']!r}")
    print(f"co2_g       {result['co2_g']!r}")
    print(f"co2_g_fused {result['co2_g_fused']!r}")
    print(f"co2_display {result['co2_display']}")
    return EXIT_OK
