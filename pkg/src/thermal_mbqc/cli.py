"""Command line entry point: ``sweep``, ``threshold``, ``spectrum`` and ``demo``.

Exit codes: 0 success, 1 usage error, 2 numerical tolerance violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import build_schedule, evolve_and_verify, revival_check, ScheduleError
from .fusion import collapse_check, stabilizer_product_check
from .lattice import build_lattice, build_pair
from .model_blocks import BlockSpec, build_block, exact_spectrum_oracle
from .thermal_channel import EC_THRESHOLD, error_rates, temperature_sweep, threshold_temperature

CSV_HEADER = ("t_over_delta", "epsilon", "p1", "p2", "p3", "p_eff")
EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2
LOG_GRID_FLOOR = 1e-3  # lowest nonzero T/delta on a log grid starting at 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    model: str = "3d"
    t_min: float = 0.0
    t_max: float = 0.5
    steps: int = 51
    p_target: float = EC_THRESHOLD
    seed: int = 0
    out: str | None = None
    jobs: int = 1
    log_grid: bool = False

    def validate(self):
        if self.steps < 1:
            raise UsageError("--steps must be >= 1")
        if self.t_min < 0:
            raise UsageError("--t-min must be >= 0")
        # a single point may sit on a degenerate range
        if not (self.t_min < self.t_max or (self.steps == 1 and self.t_min == self.t_max)):
            raise UsageError("need --t-min < --t-max")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")

    def grid(self) -> list[float]:
        if self.steps == 1:
            return [self.t_min]
        if not self.log_grid:
            return [float(t) for t in np.linspace(self.t_min, self.t_max, self.steps)]
        if self.t_min > 0:
            return [float(t) for t in np.geomspace(self.t_min, self.t_max, self.steps)]
        lo = min(LOG_GRID_FLOOR, self.t_max / 10)
        return [0.0] + [float(t) for t in np.geomspace(lo, self.t_max, self.steps - 1)]


def format_row(values) -> list[str]:
    return [format(float(v), ".17g") for v in values]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(format_row(r.as_row()))
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[tuple[float, ...]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    return [tuple(float(x) for x in row) for row in reader]


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from exc


def cmd_sweep(cfg: RunConfig) -> int:
    cfg.validate()
    try:
        rows = temperature_sweep(BlockSpec(cfg.model), cfg.grid(), jobs=cfg.jobs)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    _write(sweep_csv(rows), cfg.out)
    return EXIT_OK


def cmd_threshold(cfg: RunConfig) -> int:
    cfg.validate()
    spec = BlockSpec(cfg.model)
    try:
        t = threshold_temperature(spec, cfg.p_target, cfg.t_min, cfg.t_max)
    except ValueError as exc:
        raise UsageError(f"unreachable target: {exc}") from exc
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    r = error_rates(spec, t * spec.delta)
    lines = [
        f"model {cfg.model}  p_target {cfg.p_target:.6g}",
        f"T_t/delta {t:.6f}",
        f"epsilon {r.epsilon:.6e}",
        f"p1 {r.p1:.6e}  p2 {r.p2:.6e}  p3 {r.p3:.6e}",
        f"p_eff {r.p_eff:.6e}",
    ]
    _write("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    spec = BlockSpec(cfg.model)
    levels = exact_spectrum_oracle(spec)
    block = build_block(spec)
    expected = np.repeat([e for e, _ in levels], [m for _, m in levels])
    err = float(np.abs(np.sort(block.eigenvalues) - expected).max())
    lines = [f"model {cfg.model}  block dimension {spec.dim}", "energy/delta  multiplicity"]
    for e, m in levels:
        lines.append(f"{str(Fraction(e).limit_denominator(8)):>12}  {m}")
    lines.append(f"total states {sum(m for _, m in levels)}")
    lines.append(f"gap/delta {levels[1][0] - levels[0][0]:.6f}")
    lines.append(f"max |diag - oracle| {err:.3e}")
    ok = err < 1e-10 and sum(m for _, m in levels) == spec.dim
    lines.append("PASS" if ok else "FAIL")
    _write("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def demo_fusion(cfg: RunConfig, cells: int | None) -> tuple[bool, list[str]]:
    lattice = build_pair(cfg.model) if cells is None else build_lattice(cfg.model, cells)
    result, worst = collapse_check(lattice)
    fid = result.fidelity()
    identity = stabilizer_product_check(lattice)
    ok = fid > 1 - 1e-10 and worst > 1 - 1e-10 and identity
    lines = [
        f"{lattice.num_centers} centers, {len(lattice.bonds)} bonds",
        f"worst branch overlap {worst:.12f}",
        f"stabilizer product identity {'holds' if identity else 'FAILS'}",
        f"cluster fidelity {fid:.6f} (T=0), {'PASS' if ok else 'FAIL'}",
    ]
    return ok, lines


def demo_revival(cfg: RunConfig) -> tuple[bool, list[str]]:
    spec = BlockSpec(cfg.model)
    chk = revival_check(spec)
    lattice = build_pair(cfg.model)
    rep = evolve_and_verify(lattice, build_schedule(lattice), spec, seed=cfg.seed)
    ok = chk.residual < 1e-10 and rep.fidelity >= 1 - 1e-8
    if cfg.model == "2d":
        ok = ok and chk.control_residual > 0.1
    lines = [
        f"period {chk.period / np.pi:.6g}*pi/delta  residual {chk.residual:.3e}",
        f"control t={chk.control_time / np.pi:.6g}*pi/delta  residual {chk.control_residual:.3e}",
        f"interleaved evolution fidelity {rep.fidelity:.12f}",
        "PASS" if ok else "FAIL",
    ]
    return ok, lines


def demo_schedule(cfg: RunConfig, cells: int | None) -> tuple[bool, list[str]]:
    lattice = build_lattice(cfg.model, cells or 1)
    try:
        sched = build_schedule(lattice)
        ok = True
    except ScheduleError as exc:
        sched, ok = exc.schedule, False
    ok = ok and sched.one_operation_per_revival()
    lines = [f"{lattice.num_centers} centers, {len(sched.operations)} operations"]
    for tick in sched.ticks:
        n = sum(1 for op in sched.operations if op.tick == tick)
        lines.append(f"  n={tick}: {n} operations")
    lines.append(f"horizon {sched.horizon}, {'PASS' if ok else 'FAIL'}")
    return ok, lines


def cmd_demo(cfg: RunConfig, kind: str, cells: int | None) -> int:
    if cells is not None and cells < 1:
        raise UsageError("--cells must be >= 1")
    if kind == "fusion":
        ok, lines = demo_fusion(cfg, cells)
    elif kind == "revival":
        ok, lines = demo_revival(cfg)
    else:
        ok, lines = demo_schedule(cfg, cells)
    _write("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", choices=("2d", "3d"), default="3d")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default stdout)")

    grid = _Parser(add_help=False)
    grid.add_argument("--t-min", type=float, default=0.0, help="lowest T/delta")
    grid.add_argument("--t-max", type=float, default=0.5, help="highest T/delta")
    grid.add_argument("--steps", type=int, default=51)
    grid.add_argument("--jobs", type=int, default=1)
    grid.add_argument("--log-grid", action="store_true", help="geometric spacing in T/delta")

    parser = _Parser(prog="thermal-mbqc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sweep", parents=[common, grid], help="error rates over a temperature grid (CSV)")
    th = sub.add_parser("threshold", parents=[common, grid], help="solve p_eff(T) = p_target")
    th.add_argument("--p-target", type=float, default=EC_THRESHOLD)
    sub.add_parser("spectrum", parents=[common], help="block energy levels")
    demo = sub.add_parser("demo", parents=[common], help="small end-to-end checks")
    demo.add_argument("kind", choices=("fusion", "revival", "schedule"))
    demo.add_argument("--cells", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        model=args.model,
        t_min=getattr(args, "t_min", 0.0),
        t_max=getattr(args, "t_max", 0.5),
        steps=getattr(args, "steps", 51),
        p_target=getattr(args, "p_target", EC_THRESHOLD),
        seed=args.seed,
        out=args.out,
        jobs=getattr(args, "jobs", 1),
        log_grid=getattr(args, "log_grid", False),
    )
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "threshold":
            return cmd_threshold(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        return cmd_demo(cfg, args.kind, args.cells)
    except UsageError as exc:
        print(f"thermal-mbqc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
