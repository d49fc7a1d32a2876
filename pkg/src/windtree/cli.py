"""Command-line interface: classification, rendering, decompositions, good
directions, lifting reports, and the statistical experiments.

Slopes are entered as exact 'u/v' strings and obstacle dimensions as
'p/q,r/s'; no decimal parsing of rationals anywhere.  Exit codes: 0 for a
definite result, 1 for usage or domain errors, 2 for an undetermined
classification.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import billiard, experiments, lift, origami, svg
from .billiard import Outcome
from .errors import CornerHit, DomainError, PrecisionError
from .exact import Params, Slope

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDETERMINED = 2


@dataclass
class RunConfig:
    """Everything a run needs; serializable so runs are reproducible."""

    command: str = ""
    params: str = "1/2,1/2"
    slope: str = ""
    theta: str = ""
    start: str = ""
    origami_file: str = ""
    n_collisions: int = 200
    max_collisions: int = billiard.DEFAULT_MAX_COLLISIONS
    limit: int = 9
    samples: int = 50
    horizon: int = 10000
    k: int = 1
    delta: str = "1/1000"
    probes: int = 8
    seed: int = 0
    precision_bits: int = 64
    scale: int = 60
    jobs: int = 1
    out: str = ""
    csv: str = ""

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        return RunConfig(**json.loads(text))

    def to_text(self) -> str:
        lines = [f"{field.name}={getattr(self, field.name)}"
                 for field in dataclasses.fields(self)]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "RunConfig":
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        cfg = RunConfig()
        for field in dataclasses.fields(RunConfig):
            if field.name in values:
                val = values.pop(field.name)
                setattr(cfg, field.name,
                        int(val) if field.type == "int" else val)
        if values:
            raise DomainError(f"unknown config keys: {sorted(values)}")
        return cfg


def _parse_start(params: Params, text: str, slope: Slope):
    """'m,n,side,offset' with the offset an exact fraction along the side."""
    try:
        ms, ns, side, off = text.split(",")
        cell = (int(ms), int(ns))
        offset = Fraction(off)
    except ValueError as exc:
        raise DomainError(f"cannot parse start {text!r} "
                          "(expected m,n,side,num/den)") from exc
    if side in (billiard.TOP, billiard.BOTTOM):
        orient = (1, 1 if side == billiard.TOP else -1)
    else:
        orient = (-1 if side == billiard.LEFT else 1, 1)
    return billiard.make_state(params, cell, side, offset, slope, orient)


def _state_for(cfg: RunConfig, params: Params, slope: Slope):
    if cfg.start:
        state = _parse_start(params, cfg.start, slope)
        return state, billiard.classify_trajectory(state, params,
                                                   cfg.max_collisions)
    return billiard.regular_start(params, slope,
                                  max_collisions=cfg.max_collisions)


def _write(path: str, data: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)


def cmd_classify(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    if slope.is_axis and not cfg.start:
        gap = params.b if slope.is_horizontal else params.a
        axis = "horizontal" if slope.is_horizontal else "vertical"
        print(f"{axis} direction: straight corridors of width {1 - gap} "
              f"escape; rays entering an obstacle band bounce between two "
              f"facing sides (2-collision periodic orbit)")
        return EXIT_OK
    state, outcome = _state_for(cfg, params, slope)
    if outcome.kind is Outcome.PERIODIC:
        print(f"Periodic: {outcome.combinatorial_length} collisions, "
              f"length {outcome.geometric_length} direction vectors")
        return EXIT_OK
    if outcome.kind is Outcome.ESCAPING:
        print(f"Escaping: drift {outcome.drift} every "
              f"{outcome.combinatorial_length} collisions")
        return EXIT_OK
    if outcome.kind is Outcome.SINGULAR:
        print(f"Singular: corner hit at ({outcome.corner.x}, {outcome.corner.y}) "
              f"after {outcome.combinatorial_length} collisions")
        return EXIT_OK
    print(f"Undetermined after {outcome.combinatorial_length} collisions "
          f"(raise --max-collisions)")
    return EXIT_UNDETERMINED


def cmd_render(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    if not cfg.out:
        raise DomainError("render needs --out FILE.svg")
    state, outcome = _state_for(cfg, params, slope)
    n = cfg.n_collisions
    highlight = ()
    if outcome.kind is Outcome.PERIODIC:
        n = outcome.combinatorial_length
    elif outcome.kind is Outcome.ESCAPING and outcome.repeat_cells:
        highlight = outcome.repeat_cells
        n = min(n, 2 * outcome.combinatorial_length + outcome.pre_period)
    path = billiard.trace(state, params, n)
    _write(cfg.out, svg.render_trajectory(params, path, scale=cfg.scale,
                                          highlight_cells=highlight))
    print(f"wrote {cfg.out}: {outcome.kind.value}, {len(path.points)} points")
    return EXIT_OK


def _load_origami(cfg: RunConfig, params: Params):
    if cfg.origami_file:
        with open(cfg.origami_file, encoding="utf-8") as fh:
            return origami.Origami.deserialize(fh.read())
    return origami.build_origami(params)


def cmd_decompose(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    surface = _load_origami(cfg, params)
    if cfg.origami_file:
        decomp = origami.decompose_direction(surface, slope)
        frame = "origami frame"
    else:
        decomp = origami.decompose_direction(
            surface, origami.table_to_scaled_slope(params, slope))
        frame = "table frame"
    print(f"direction {slope} ({frame}): {len(decomp.cylinders)} cylinder(s), "
          f"word {origami.format_word(decomp.word)}")
    rows = ["cylinder,circumference,height,modulus,cells,waist_points"]
    for i, cyl in enumerate(decomp.cylinders):
        waist = " ".join(cyl.waist_marked_points) or "-"
        print(f"  #{i}: circumference {cyl.circumference}, height {cyl.height}, "
              f"modulus {cyl.modulus}, waist points: {waist}")
        cells = " ".join(str(c) for c in sorted(cyl.cells))
        rows.append(f"{i},{cyl.circumference},{cyl.height},"
                    f"{cyl.modulus.numerator}/{cyl.modulus.denominator},"
                    f"{cells},{waist}")
    if cfg.csv:
        _write(cfg.csv, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_classify_direction(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    if cfg.origami_file:
        surface = _load_origami(cfg, params)
        decomp = origami.decompose_direction(surface, slope)
        frame = "origami frame"
    else:
        decomp = origami.decompose_table_direction(params, slope)
        frame = "table frame"
    waist = set(decomp.cylinders[0].waist_marked_points) \
        if len(decomp.cylinders) == 1 else set()
    good = len(decomp.cylinders) == 1 and {"E", "F"} <= waist
    kinds = "one-cylinder" if len(decomp.cylinders) == 1 else \
        f"{len(decomp.cylinders)}-cylinder"
    print(f"slope {slope} ({frame}): {kinds}; "
          f"good one-cylinder: {'yes' if good else 'no'}")
    return EXIT_OK


def cmd_good_dirs(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slopes = origami.enumerate_good_directions(params, cfg.limit)
    print(f"good one-cylinder directions with entries up to {cfg.limit}: "
          f"{len(slopes)}")
    for sl in slopes:
        print(f"  {sl}")
    if cfg.csv:
        rows = ["u,v"] + [f"{sl.u},{sl.v}" for sl in slopes]
        _write(cfg.csv, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_lift(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    report = lift.lift_direction(params, slope)
    label = "strongly parabolic" if report.strongly_parabolic else \
        "not strongly parabolic"
    print(f"slope {slope} on the infinite table: {label}")
    rows = ["cylinder,circumference,height,behavior,factor,drift_m,drift_n"]
    for i, (cyl, beh) in enumerate(zip(report.y_decomposition.cylinders,
                                       report.x_behavior)):
        if beh.closes:
            print(f"  #{i} (c={cyl.circumference}, h={cyl.height}): closes "
                  f"with factor {beh.factor}")
            rows.append(f"{i},{cyl.circumference},{cyl.height},closes,"
                        f"{beh.factor},,")
        else:
            print(f"  #{i} (c={cyl.circumference}, h={cyl.height}): strip "
                  f"with drift {beh.drift}")
            rows.append(f"{i},{cyl.circumference},{cyl.height},strip,,"
                        f"{beh.drift[0]},{beh.drift[1]}")
    if cfg.csv:
        _write(cfg.csv, "\n".join(rows) + "\n")
    return EXIT_OK


def _parse_theta(cfg: RunConfig) -> experiments.DirectionSpec:
    text = cfg.theta.strip()
    if not text:
        raise DomainError("this command needs --theta")
    if "/" in text or "." not in text:
        return experiments.exact_direction(Fraction(text))
    return experiments.quantize_direction(Fraction(text), cfg.precision_bits)


def cmd_recur(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    direction = _parse_theta(cfg)
    report = experiments.recurrence_experiment(
        params, direction, cfg.samples, cfg.horizon, cfg.seed, jobs=cfg.jobs)
    frac = report.returned_fraction
    print(f"returned {frac.numerator}/{frac.denominator} "
          f"= {float(frac):.4f} of {cfg.samples} starts "
          f"within {cfg.horizon} collisions")
    if cfg.csv:
        _write(cfg.csv, report.to_csv())
    return EXIT_OK


def cmd_diffuse(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    direction = _parse_theta(cfg)
    report = experiments.diffusion_experiment(
        params, direction, cfg.k, cfg.horizon, cfg.seed, n_samples=cfg.samples)
    stats = sorted(s.statistic for s in report.samples)
    print(f"displacement statistic over {cfg.samples} starts: "
          f"median {stats[len(stats) // 2]:.3f}, max {stats[-1]:.3f}")
    if cfg.csv:
        _write(cfg.csv, report.to_csv())
    return EXIT_OK


def cmd_stability(cfg: RunConfig) -> int:
    params = Params.parse(cfg.params)
    slope = Slope.parse(cfg.slope)
    ok = experiments.stability_check(params, slope, Fraction(cfg.delta),
                                     cfg.probes)
    print(f"stability at delta {cfg.delta} over {cfg.probes} probes: "
          f"{'stable' if ok else 'broken'}")
    return EXIT_OK if ok else EXIT_UNDETERMINED


def cmd_selftest(cfg: RunConfig) -> int:
    params = Params.parse("1/2,1/2")
    checks = []
    _, out = billiard.regular_start(params, Slope(9, 29))
    checks.append(("slope 9/29 periodic", out.kind is Outcome.PERIODIC))
    _, out = billiard.regular_start(params, Slope(16, 39))
    checks.append(("slope 16/39 escaping", out.kind is Outcome.ESCAPING))
    checks.append(("slope 1 good one-cylinder",
                   origami.is_good_one_cylinder(params, Slope(1, 1))))
    report = lift.lift_direction(params, Slope(1, 1))
    checks.append(("slope 1 doubles", report.x_behavior[0].factor == 2))
    part = lift.wpoint_orbit_partition(params)
    checks.append(("orbit partition",
                   frozenset({"A", "B", "C"}) in part
                   and frozenset({"D"}) in part))
    failed = 0
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else EXIT_ERROR


_COMMANDS = {
    "classify": cmd_classify,
    "render": cmd_render,
    "decompose": cmd_decompose,
    "classify-direction": cmd_classify_direction,
    "good-dirs": cmd_good_dirs,
    "lift": cmd_lift,
    "recur": cmd_recur,
    "diffuse": cmd_diffuse,
    "stability": cmd_stability,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windtree",
        description="Exact experiments on the periodic wind-tree billiard")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--params", default="1/2,1/2",
                       help="obstacle dimensions p/q,r/s")
        p.add_argument("--slope", default="", help="exact slope u/v")
        p.add_argument("--theta", default="",
                       help="direction for experiments: u/v or decimal")
        p.add_argument("--start", default="",
                       help="start as m,n,side,offset (offset exact)")
        p.add_argument("--origami", dest="origami_file", default="",
                       help="serialized origami file (decompose)")
        p.add_argument("--n-collisions", type=int, default=200)
        p.add_argument("--max-collisions", type=int,
                       default=billiard.DEFAULT_MAX_COLLISIONS)
        p.add_argument("--limit", type=int, default=9)
        p.add_argument("--samples", type=int, default=50)
        p.add_argument("--horizon", type=int, default=10000)
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--delta", default="1/1000")
        p.add_argument("--probes", type=int, default=8)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--precision-bits", type=int, default=64)
        p.add_argument("--scale", type=int, default=60)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", default="")
        p.add_argument("--csv", default="")
        p.add_argument("--config", default="",
                       help="key=value config file overriding defaults")
        p.add_argument("--json-config", default="",
                       help="JSON config file overriding defaults")
        p.add_argument("--dump-config", default="",
                       help="write the effective config (key=value) and run")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.json_config:
        with open(args.json_config, encoding="utf-8") as fh:
            cfg = RunConfig.from_json(fh.read())
    elif args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.from_text(fh.read())
    else:
        cfg = RunConfig()
    cfg.command = args.command
    defaults = RunConfig()
    for field in dataclasses.fields(RunConfig):
        if field.name == "command" or not hasattr(args, field.name):
            continue
        value = getattr(args, field.name)
        if value != getattr(defaults, field.name):
            setattr(cfg, field.name, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.dump_config:
            _write(args.dump_config, cfg.to_text())
        return _COMMANDS[cfg.command](cfg)
    except (DomainError, PrecisionError, CornerHit, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
