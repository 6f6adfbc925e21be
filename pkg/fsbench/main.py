"""fsbench - class-level feature selection benchmark (command-line entry point)."""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .commands import EXIT_USAGE, CommandError, bench, footprint, gen, select, translate_errors
from .config import get_footprint_defaults, get_method_defaults, load_yaml_config, merge_config, setup_logging
from .models.schemas import Method, RunConfig, Suite, WeightingPolicy

logger = logging.getLogger(__name__)

# flag dest -> location inside RunConfig
FLAG_PATHS = {
    "bins": ("filters", "bins"),
    "k_neighbors": ("filters", "k_neighbors"),
    "top_k": ("filters", "top_k"),
    "max_iter": ("fwgsom", "max_iterations"),
    "target_accuracy": ("fwgsom", "target_accuracy"),
    "policy": ("fwgsom", "policy"),
    "attenuation": ("fwgsom", "attenuation"),
    "scale_masks": ("fwgsom", "scale_masks"),
    "spread_factor": ("fwgsom", "gsom", "spread_factor"),
    "gsom_iterations": ("fwgsom", "gsom", "iterations"),
    "test_fraction": ("classify", "test_fraction"),
    "som_rows": ("classify", "som", "rows"),
    "som_cols": ("classify", "som", "cols"),
    "t": ("footprint", "t"),
    "nc": ("footprint", "n_c"),
    "pc": ("footprint", "P_c"),
    "uc": ("footprint", "u_c"),
    "nm": ("footprint", "n_m"),
    "pm": ("footprint", "P_m"),
    "pue": ("footprint", "PUE"),
    "ci": ("footprint", "CI"),
    "method": ("methods",),
    "json": ("json_output",),
}
LIST_FIELDS = {"data", "methods", "features"}
# parsed but not part of RunConfig
CLI_ONLY = {"command", "config", "log_level", "quiet"}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="YAML/JSON file of flag values (a run_config.json works too)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--quiet", action="store_true", help="no progress bars, warnings and errors only")
    return common


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="synthetic preset name")
    p.add_argument("--noise-level", type=float, help="noise percent for moons/circles/blobs")
    p.add_argument("--features", type=int, help="total feature count for shape presets")


def _add_method_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int, help="mutual information bins")
    p.add_argument("--k-neighbors", type=int, help="ReliefF neighbours per class")
    p.add_argument("--top-k", type=int, help="select the K best features instead of score > mean")
    p.add_argument("--baseline-per-class", action="store_true",
                   help="report each filter's one-vs-rest selection per class")
    p.add_argument("--max-iter", type=int, help="FWGSOM weighting iterations")
    p.add_argument("--target-accuracy", type=float)
    p.add_argument("--policy", choices=[w.value for w in WeightingPolicy])
    p.add_argument("--attenuation", type=float, help="mask value for irrelevant features (attenuate policy)")
    p.add_argument("--raw-masks", dest="scale_masks", action="store_false",
                   help="re-evaluate FWGSOM BMUs with unscaled masked distances")
    p.add_argument("--spread-factor", type=float)
    p.add_argument("--gsom-iterations", type=int)
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="zero measured runtimes so outputs are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="fsbench", description=__doc__, argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"fsbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], argument_default=argparse.SUPPRESS,
                       help="generate a synthetic dataset with ground truth")
    _add_source(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("select", parents=[common], argument_default=argparse.SUPPRESS,
                       help="run one feature-selection method")
    p.add_argument("--method", action="append", choices=[m.value for m in Method])
    p.add_argument("--data", action="append", help="CSV file with a header row")
    p.add_argument("--truth", help="relevance truth JSON")
    p.add_argument("--label-column", help='label column name (default: "last")')
    _add_source(p)
    _add_method_params(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="result file (.json) or directory; stdout when omitted")
    p.add_argument("--save-network", help="write the trained FWGSOM map as JSON")
    p.add_argument("--export-hits", action="store_true", help="include the final hit matrix")

    p = sub.add_parser("bench", parents=[common], argument_default=argparse.SUPPRESS,
                       help="run an experiment suite into a report bundle")
    p.add_argument("--suite", choices=[s.value for s in Suite])
    p.add_argument("--method", action="append", choices=[m.value for m in Method],
                   help="restrict to these methods (repeatable)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="base seed; trial i uses seed + i")
    p.add_argument("--jobs", type=int, help="concurrent trials")
    p.add_argument("--data", action="append", help="CSV for the realworld suite (repeatable)")
    p.add_argument("--truth", help="relevance truth for a single --data file")
    p.add_argument("--label-column")
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--som-rows", type=int)
    p.add_argument("--som-cols", type=int)
    _add_method_params(p)
    p.add_argument("--out", help="report directory (default $FSBENCH_OUT or ./report)")

    p = sub.add_parser("footprint", parents=[common], argument_default=argparse.SUPPRESS,
                       help="energy and carbon of a run")
    p.add_argument("--t", type=float, help="runtime (hours)")
    p.add_argument("--nc", type=float, help="number of cores")
    p.add_argument("--pc", type=float, help="power per core (W)")
    p.add_argument("--uc", type=float, help="core usage factor")
    p.add_argument("--nm", type=float, help="memory (GB)")
    p.add_argument("--pm", type=float, help="memory power (W/GB)")
    p.add_argument("--pue", type=float, help="power usage effectiveness")
    p.add_argument("--ci", type=float, help="carbon intensity (gCO2e/kWh)")
    p.add_argument("--json", action="store_true")
    return parser


def _nest(path: Sequence[str], value: Any) -> Dict[str, Any]:
    for key in reversed(path):
        value = {key: value}
    return value


def flags_to_config(flags: Dict[str, Any]) -> Dict[str, Any]:
    """Turn flat flag names (CLI dests or config-file keys) into a nested RunConfig mapping."""
    nested: Dict[str, Any] = {}
    for key, value in flags.items():
        key = key.replace("-", "_")
        if key in CLI_ONLY:
            continue
        path = FLAG_PATHS.get(key, (key,))
        if path[0] in LIST_FIELDS and not isinstance(value, list):
            value = [value]
        nested = merge_config(nested, _nest(path, value))
    return nested


def build_config(args: argparse.Namespace) -> RunConfig:
    """defaults.yaml < --config file < explicit flags."""
    data: Dict[str, Any] = {
        "fwgsom": get_method_defaults("fwgsom"),
        "filters": get_method_defaults("filters"),
        "classify": get_method_defaults("classify"),
        "footprint": get_footprint_defaults(),
    }
    flags = vars(args)
    if "config" in flags:
        path = Path(flags["config"])
        if not path.exists():
            raise CommandError(EXIT_USAGE, f"Config file not found: {path}")
        data = merge_config(data, flags_to_config(load_yaml_config(path)))
    data = merge_config(data, flags_to_config(flags))
    data["command"] = args.command
    return RunConfig(**data)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    quiet = getattr(args, "quiet", False)
    setup_logging(getattr(args, "log_level", None) or ("WARNING" if quiet else None))
    try:
        with translate_errors():
            config = build_config(args)
        if args.command == "gen":
            return gen.run(config)
        if args.command == "select":
            return select.run(config)
        if args.command == "bench":
            return bench.run(config, progress=not quiet)
        return footprint.run(config)
    except CommandError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"fsbench {args.command}: error: {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
