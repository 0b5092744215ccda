"""Command-line front end.

Subcommands run reproducible experiment pipelines from a JSON config and
emit CSV/JSON/SVG artifacts plus a manifest with content digests:

    sharpwave solve|valuation|singsupp|contraction|example3d|all
              [--config FILE] [--out DIR] [--seed N]

Exit codes: 0 ok, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import DEFAULT_SLOPE_TOL
from .charsolve import PicardParams, SolveConfig, picard_solve, reconstruct_solution
from .errors import ConfigError, NoConvergence, SharpwaveError
from .experiments import (
    run_classification,
    run_contraction,
    run_linear_oracle,
    run_radial,
    valuation_calibration,
)
from .initial_data import DataSpec, build_initial_data, derive_characteristic_data, make_mollifier
from .nets import EpsilonLadder, SpacingRule, save_net
from .reporting import (
    contraction_json,
    emit_svg_heatmap,
    singularity_csv,
    sup_table_csv,
    trace_csv,
    valuation_csv,
    write_csv,
    write_json,
    write_manifest,
)

DEFAULT_CONFIG = {
    "data": {"kind": "kink", "a": 1.0, "b": 0.0, "amplitude": 1.0},
    "solve": {
        "T": 1.0,
        "f": "square",
        "E_exponent": 1.0,
        "ladder": {"k_hi": 4, "k_lo": 7},
        "h_denom": 4.0,
        "picard": {"max_iters": 40, "stop_distance": 1e-6},
    },
    "analysis": {"cell_h": 0.0625, "max_order": 4, "tol": DEFAULT_SLOPE_TOL,
                 "x_extent": 2.0, "ladder": {"k_hi": 5, "k_lo": 10}},
    "valuation": {"exponents": [-2.0, -1.0, -0.5, 0.0, 1.0, 2.0],
                  "ladder": {"k_hi": 4, "k_lo": 12}},
    "contraction": {"n_pairs": 20, "ladder": {"k_hi": 4, "k_lo": 7}},
    "example3d": {"epsilons": [0.25, 0.0625, 0.015625], "R": 2.0},
    "seed": 0,
}


def _ladder(spec) -> EpsilonLadder:
    if "k_hi" in spec:
        return EpsilonLadder.dyadic(int(spec["k_hi"]), int(spec["k_lo"]))
    return EpsilonLadder.geometric(float(spec["eps0"]), float(spec["ratio"]),
                                   int(spec["count"]))


def load_config(path=None, overrides=None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        for key, val in user.items():
            if key not in cfg and key not in ("seed", "output_dir"):
                raise ConfigError(f"unknown config section {key!r}")
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
    if overrides:
        cfg.update(overrides)
    return cfg


def _data_spec(cfg) -> DataSpec:
    d = cfg["data"]
    return DataSpec(kind=d["kind"], a=float(d["a"]), b=float(d.get("b", 0.0)),
                    amplitude=float(d.get("amplitude", 1.0)))


def _solve_config(cfg, ladder=None) -> SolveConfig:
    s = cfg["solve"]
    return SolveConfig(
        T=float(s["T"]), a=float(cfg["data"]["a"]), f=s["f"],
        E_exponent=float(s["E_exponent"]),
        ladder=ladder if ladder is not None else _ladder(s["ladder"]),
        h_rule=SpacingRule("eps_over", float(s["h_denom"])),
        picard=PicardParams(max_iters=int(s["picard"]["max_iters"]),
                            stop_distance=float(s["picard"]["stop_distance"])))


def cmd_solve(cfg, out: Path) -> list:
    spec = _data_spec(cfg)
    scfg = _solve_config(cfg)
    moll = make_mollifier()
    u0, u1 = build_initial_data(spec, moll, scfg.ladder)
    data = derive_characteristic_data(u0, u1)
    result = picard_solve(scfg, data)
    u = reconstruct_solution(result.pair)
    files = []
    for name, net in (("V", result.pair.V), ("W", result.pair.W), ("U", u)):
        save_net(net, out / f"net_{name}")
        files.extend(sorted((out / f"net_{name}").iterdir()))
    files.append(trace_csv(out / "picard_trace.csv", result.trace,
                           scfg.ladder.epsilons))
    return files


def cmd_valuation(cfg, out: Path) -> list:
    v = cfg["valuation"]
    rows = valuation_calibration(v["exponents"], _ladder(v["ladder"]))
    return [valuation_csv(out / "valuation_table.csv", rows)]


def cmd_singsupp(cfg, out: Path) -> list:
    spec = _data_spec(cfg)
    a = cfg["analysis"]
    run = run_classification(
        spec, cfg["solve"]["f"], _ladder(a["ladder"]),
        T=float(cfg["solve"]["T"]), E_exponent=float(cfg["solve"]["E_exponent"]),
        denom=float(cfg["solve"]["h_denom"]), cell_h=float(a["cell_h"]),
        max_order=int(a["max_order"]), tol=float(a["tol"]),
        x_extent=float(a["x_extent"]))
    files = [singularity_csv(out / "singularity_map.csv", run.map),
             emit_svg_heatmap(run.map, run.geometry,
                              out / "singularity_map.svg"),
             write_json(out / "confinement.json", {
                 "confined": run.confinement["confined"],
                 "touches_plus_line": run.confinement["touches_plus_line"],
                 "touches_minus_line": run.confinement["touches_minus_line"],
                 "far_cells_regular": run.confinement["far_cells_regular"],
                 "audits_pass": run.audits_pass,
             })]
    return files


def cmd_contraction(cfg, out: Path) -> list:
    c = cfg["contraction"]
    run = run_contraction(_ladder(c["ladder"]), n_pairs=int(c["n_pairs"]),
                          seed=int(cfg["seed"]),
                          f=cfg["solve"]["f"],
                          E_exponent=float(cfg["solve"]["E_exponent"]),
                          denom=float(cfg["solve"]["h_denom"]))
    files = [contraction_json(out / "contraction_report.json", run.report),
             trace_csv(out / "picard_trace.csv", run.trace,
                       _ladder(c["ladder"]).epsilons)]
    return files


def cmd_example3d(cfg, out: Path) -> list:
    e = cfg["example3d"]
    run = run_radial(residual_epsilons=tuple(e["epsilons"]), R=float(e["R"]))
    rows = [(r.eps, r.sup_absolute, r.sup_relative, r.h, ratio)
            for r, ratio in zip(run.residuals, run.ratios)]
    files = [write_csv(out / "radial_residuals.csv",
                       ["epsilon", "sup_residual", "sup_residual_relative",
                        "h_r", "richardson_ratio"], rows),
             write_csv(out / "radial_verdicts.csv",
                       ["r_lo", "r_hi", "verdict", "worst_slope",
                        "witness_order"],
                       [(v.r_lo, v.r_hi,
                         "regular" if v.regular else "singular",
                         v.worst_slope, v.witness_order)
                        for v in run.verdicts])]
    return files


COMMANDS = {
    "solve": cmd_solve,
    "valuation": cmd_valuation,
    "singsupp": cmd_singsupp,
    "contraction": cmd_contraction,
    "example3d": cmd_example3d,
}


def run(command: str, cfg: dict, out_dir) -> Path:
    """Execute one pipeline command; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if command == "all":
        files = []
        for name in ("solve", "valuation", "singsupp", "contraction",
                     "example3d"):
            sub = out / name
            sub.mkdir(exist_ok=True)
            files.extend(COMMANDS[name](cfg, sub))
    else:
        files = COMMANDS[command](cfg, out)
    return write_manifest(out, files, extra={"command": command,
                                             "seed": cfg.get("seed", 0)})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sharpwave",
        description="epsilon-ladder wave solves, valuations and "
                    "light-cone singularity maps")
    parser.add_argument("command", choices=sorted(COMMANDS) + ["all"])
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    args = parser.parse_args(argv)
    try:
        overrides = {} if args.seed is None else {"seed": args.seed}
        cfg = load_config(args.config, overrides)
        manifest = run(args.command, cfg, args.out)
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except SharpwaveError as e:
        diag = {"error": type(e).__name__, "message": str(e)}
        if isinstance(e, NoConvergence):
            diag["trace"] = [{"iteration": t.iteration, "d_tilde": t.d_tilde}
                             for t in e.trace]
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "failure.json", diag)
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
