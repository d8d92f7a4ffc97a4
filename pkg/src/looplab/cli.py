"""Batch front end: single-shot subcommands, experiment sweeps, and result
persistence.

Reports are JSON lines, sweeps additionally write a CSV table; every row
embeds the hash of the experiment spec that produced it.  Sweeps are
journaled (one completed config id per line, updated by write-temp + rename)
so an interrupted run resumes without recomputation.  Outputs are
bit-identical across runs for fixed spec and seed; wall times are recorded
as 0.0 unless --timings is given.
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

import numpy as np

from . import __version__
from .circle import (
    IterationBudgetExceeded,
    Mobius,
    MonotonicityViolation,
    NotInvertible,
    Rotation,
    TrigLift,
    commutator_decomposition_check,
    rotation_number,
    solve_alpha,
)
from .cocycle import (
    NestedTriple,
    check_cocycle,
    ising_evaluator,
    nested_triple,
    soup_evaluator,
    ust_evaluator,
)
from .ising import BETA_C, DomainTooLarge, SingularMatrix, StripTooWide, ising_restriction
from .lattice import (
    DiscreteDomain,
    DisconnectedDomain,
    EmptyDomain,
    LoopTouchesBoundary,
    NestedConfig,
    NoEssentialAnnulus,
    block_boundary_loop,
    config_from_json,
    domain_from_json,
    domain_to_json,
    loop_from_json,
    loop_to_json,
    nested_config,
    rect_domain,
)
from .loopsoup import (
    InsufficientData,
    NoCyclePossible,
    NumericalSingularity,
    box_dimension,
    sample_lerw_loop,
    soup_mass_M,
    ust_restriction,
)

OUT_ENV = "LOOPLAB_OUT"
ENGINE_VERSION = f"looplab/{__version__}"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENGINE = 2
EXIT_ASSERT = 3


class SpecParseError(ValueError):
    """Raised when a spec, config, or map description cannot be parsed."""


class GenerationExhausted(RuntimeError):
    """Raised when a generator cannot place a valid configuration."""


_ENGINE_ERRORS = (
    DomainTooLarge,
    StripTooWide,
    SingularMatrix,
    NumericalSingularity,
    NoCyclePossible,
    InsufficientData,
    NotInvertible,
    IterationBudgetExceeded,
    MonotonicityViolation,
    GenerationExhausted,
    EmptyDomain,
    DisconnectedDomain,
    LoopTouchesBoundary,
    NoEssentialAnnulus,
)


# ---------------------------------------------------------------------------
# Result rows and experiment specs


@dataclass(frozen=True)
class ResultRow:
    spec_hash: str
    config_id: str
    quantity: str
    value: Optional[float]
    error_bound: Optional[float]
    wall_time: float
    engine: str = ENGINE_VERSION
    status: str = "ok"
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "spec_hash": self.spec_hash,
            "config_id": self.config_id,
            "quantity": self.quantity,
            "value": self.value,
            "error_bound": self.error_bound,
            "wall_time": self.wall_time,
            "engine": self.engine,
            "status": self.status,
            "detail": self.detail,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


CSV_COLUMNS = [
    "spec_hash", "config_id", "quantity", "value", "error_bound",
    "wall_time", "engine", "status", "detail",
]


@dataclass(frozen=True)
class ExperimentSpec:
    """Serializable description of a sweep; its hash tags every output row."""

    name: str
    quantity: str
    generator: dict
    parameters: dict = field(default_factory=dict)
    tolerance: float = 1e-8
    seed: int = 0
    jobs: int = 1

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "quantity": self.quantity,
            "generator": self.generator,
            "parameters": self.parameters,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "jobs": self.jobs,
        }

    @property
    def spec_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    @staticmethod
    def from_dict(data: dict) -> "ExperimentSpec":
        try:
            return ExperimentSpec(
                name=str(data["name"]),
                quantity=str(data["quantity"]),
                generator=dict(data["generator"]),
                parameters=dict(data.get("parameters", {})),
                tolerance=float(data.get("tolerance", 1e-8)),
                seed=int(data.get("seed", 0)),
                jobs=int(data.get("jobs", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecParseError(f"bad experiment spec: {exc}") from exc


def load_spec(path: str) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: {exc}") from exc
    return ExperimentSpec.from_dict(data)


# ---------------------------------------------------------------------------
# Config generation


def _random_nested_rects(rng: np.random.Generator, gen: dict) -> Iterator[tuple]:
    """Yield (loop, rect specs...) candidate geometry; see generate_configs."""
    outer_min = int(gen.get("outer_min", 8))
    outer_max = int(gen.get("outer_max", 20))
    if outer_min < 5 or outer_max < outer_min:
        raise SpecParseError("need 5 <= outer_min <= outer_max")
    while True:
        w = int(rng.integers(outer_min, outer_max + 1))
        h = int(rng.integers(outer_min, outer_max + 1))
        # inner rect [ix0, ix0+iw) x [iy0, iy0+ih) inside [0,w) x [0,h)
        iw = int(rng.integers(5, w + 1))
        ih = int(rng.integers(5, h + 1))
        ix0 = int(rng.integers(0, w - iw + 1))
        iy0 = int(rng.integers(0, h - ih + 1))
        # loop block cells [lx0..lx1] need a one-vertex margin inside inner
        lw = int(rng.integers(1, iw - 3))
        lh = int(rng.integers(1, ih - 3))
        lx0 = ix0 + 1 + int(rng.integers(1, iw - lw - 2))
        ly0 = iy0 + 1 + int(rng.integers(1, ih - lh - 2))
        loop = block_boundary_loop(lx0, ly0, lx0 + lw - 1, ly0 + lh - 1)
        yield loop, (0, 0, w, h), (ix0, iy0, iw, ih)


def generate_configs(gen: dict, seed: int = 0) -> list:
    """Seed-reproducible nested configurations (or triples) for sweeps.

    Generator kinds:
      - {"kind": "file", "glob": "configs/*.json"}: load NestedConfig files.
      - {"kind": "nested_rects", "count": N, "outer_min": 8, "outer_max": 20}:
        random rectangular loop inside nested rectangles.
      - {"kind": "nested_triples", ...}: same geometry plus a third domain;
        optional "max_vertices" caps the outermost domain size.
    """
    kind = gen.get("kind")
    if kind == "file":
        paths = sorted(globmod.glob(gen["glob"]))
        return [config_from_json(Path(p).read_text()) for p in paths]
    if kind not in ("nested_rects", "nested_triples"):
        raise SpecParseError(f"unknown generator kind: {kind!r}")
    count = int(gen.get("count", 0))
    max_vertices = int(gen.get("max_vertices", 0))
    rng = np.random.default_rng(seed)
    source = _random_nested_rects(rng, gen)
    out: list = []
    attempts = 0
    budget = 200 * max(count, 1)
    while len(out) < count:
        attempts += 1
        if attempts > budget:
            raise GenerationExhausted(f"placed {len(out)} of {count} configs in {budget} attempts")
        loop, (ox0, oy0, ow, oh), (ix0, iy0, iw, ih) = next(source)
        if max_vertices and ow * oh > max_vertices:
            continue
        try:
            if kind == "nested_rects":
                out.append(nested_config(
                    loop,
                    rect_domain(ix0, iy0, iw, ih),
                    rect_domain(ox0, oy0, ow, oh),
                ))
            else:
                # middle rect between inner and outer
                mw = int(rng.integers(iw, ow + 1))
                mh = int(rng.integers(ih, oh + 1))
                mx0 = int(rng.integers(max(0, ix0 + iw - mw), min(ix0, ow - mw) + 1))
                my0 = int(rng.integers(max(0, iy0 + ih - mh), min(iy0, oh - mh) + 1))
                out.append(nested_triple(
                    loop,
                    rect_domain(ix0, iy0, iw, ih),
                    rect_domain(mx0, my0, mw, mh),
                    rect_domain(ox0, oy0, ow, oh),
                ))
        except ValueError:
            continue
    return out


# ---------------------------------------------------------------------------
# Quantity registry (shared by sweeps and single-shot subcommands)


def _qty_ising(cfg: NestedConfig, p: dict) -> tuple[float, Optional[float]]:
    return ising_restriction(cfg, beta=float(p.get("beta", BETA_C)), engine=p.get("engine", "auto")), None


def _qty_ust(cfg: NestedConfig, p: dict) -> tuple[float, Optional[float]]:
    return ust_restriction(cfg), None


def _qty_soup(cfg: NestedConfig, p: dict) -> tuple[float, Optional[float]]:
    return soup_mass_M(cfg), None


def _qty_identity_gap(cfg: NestedConfig, p: dict) -> tuple[float, Optional[float]]:
    return ust_restriction(cfg) + soup_mass_M(cfg), None


def _make_evaluator(p: dict):
    name = p.get("evaluator", "ust")
    if name == "ust":
        return ust_evaluator()
    if name == "soup":
        return soup_evaluator(float(p.get("c", 1.0)))
    if name == "ising":
        return ising_evaluator(beta=float(p.get("beta", BETA_C)), engine=p.get("engine", "auto"))
    raise SpecParseError(f"unknown evaluator: {name!r}")


def _qty_cocycle(triple: NestedTriple, p: dict) -> tuple[float, Optional[float]]:
    report = check_cocycle(_make_evaluator(p), triple, tolerance=float(p.get("tol", 1e-8)))
    return report.defect, None


QUANTITIES: dict[str, Callable] = {
    "ising-restriction": _qty_ising,
    "ust-restriction": _qty_ust,
    "soup-mass": _qty_soup,
    "identity-gap": _qty_identity_gap,
    "cocycle-defect": _qty_cocycle,
}


def _object_id(obj) -> str:
    return getattr(obj, "config_id", None) or getattr(obj, "triple_id")


# ---------------------------------------------------------------------------
# Sweeps with journaled resumption


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_sweep(
    spec: ExperimentSpec,
    out_dir: Path,
    timings: bool = False,
) -> Iterator[ResultRow]:
    """Run (or resume) a sweep; yields only rows computed in this call.

    Completed config ids live in <name>.journal; rows append to <name>.jsonl
    and <name>.csv.  A failed row is recorded with status "failed" and the
    sweep continues.
    """
    if spec.quantity not in QUANTITIES:
        raise SpecParseError(f"unknown quantity: {spec.quantity!r}")
    fn = QUANTITIES[spec.quantity]
    configs = generate_configs(spec.generator, spec.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    journal_path = out_dir / f"{spec.name}.journal"
    rows_path = out_dir / f"{spec.name}.jsonl"
    csv_path = out_dir / f"{spec.name}.csv"
    done: set[str] = set()
    if journal_path.exists():
        done = set(journal_path.read_text().split())
    pending = [c for c in configs if _object_id(c) not in done]

    def compute(cfg) -> ResultRow:
        start = time.perf_counter()
        try:
            value, bound = fn(cfg, spec.parameters)
            elapsed = time.perf_counter() - start if timings else 0.0
            return ResultRow(spec.spec_hash, _object_id(cfg), spec.quantity,
                             float(value), bound, elapsed)
        except _ENGINE_ERRORS as exc:
            elapsed = time.perf_counter() - start if timings else 0.0
            return ResultRow(spec.spec_hash, _object_id(cfg), spec.quantity,
                             None, None, elapsed, status="failed",
                             detail=f"{type(exc).__name__}: {exc}")

    write_header = not csv_path.exists()
    with open(rows_path, "a") as rows_file, open(csv_path, "a", newline="") as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=CSV_COLUMNS)
        if write_header:
            writer.writeheader()
        if spec.jobs > 1:
            executor = ThreadPoolExecutor(max_workers=spec.jobs)
            results = executor.map(compute, pending)
        else:
            executor = None
            results = map(compute, pending)
        try:
            for row in results:  # submission order, deterministic output
                rows_file.write(row.to_json() + "\n")
                rows_file.flush()
                writer.writerow(row.to_dict())
                csv_file.flush()
                done.add(row.config_id)
                _write_atomic(journal_path, "\n".join(sorted(done)) + "\n")
                yield row
        finally:
            if executor is not None:
                executor.shutdown()


# ---------------------------------------------------------------------------
# Circle-map descriptions


def parse_map(text: str):
    """Inline map syntax or a JSON file path.

    Inline: "rotation:ALPHA", "mobius:THETA,C_RE[,C_IM]",
    "trig:A0,a1,b1[,a2,b2,...]".  File: {"kind": "rotation"|"mobius"|"trig",
    "alpha"| "theta"+"c" | "a0"+"coeffs" ...}.
    """
    if ":" in text and text.split(":", 1)[0] in ("rotation", "mobius", "trig"):
        kind, _, rest = text.partition(":")
        try:
            vals = [float(v) for v in rest.split(",") if v != ""]
        except ValueError as exc:
            raise SpecParseError(f"bad map values in {text!r}") from exc
        return _build_map(kind, vals)
    path = Path(text)
    if not path.exists():
        raise SpecParseError(f"map {text!r} is neither inline syntax nor a file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{text}: {exc}") from exc
    kind = data.get("kind")
    if kind == "rotation":
        return Rotation(float(data["alpha"]))
    if kind == "mobius":
        c = data.get("c", 0.0)
        if isinstance(c, (list, tuple)):
            c = complex(c[0], c[1])
        return Mobius(float(data["theta"]), complex(c))
    if kind == "trig":
        coeffs = tuple((float(a), float(b)) for a, b in data.get("coeffs", []))
        return TrigLift(float(data["a0"]), coeffs)
    raise SpecParseError(f"unknown map kind: {kind!r}")


def _build_map(kind: str, vals: list[float]):
    if kind == "rotation":
        if len(vals) != 1:
            raise SpecParseError("rotation takes one value: alpha")
        return Rotation(vals[0])
    if kind == "mobius":
        if len(vals) not in (2, 3):
            raise SpecParseError("mobius takes theta,c_re[,c_im]")
        c = complex(vals[1], vals[2] if len(vals) == 3 else 0.0)
        return Mobius(vals[0], c)
    if len(vals) < 1 or len(vals) % 2 == 0:
        raise SpecParseError("trig takes a0 then (a_k, b_k) pairs")
    pairs = tuple((vals[i], vals[i + 1]) for i in range(1, len(vals), 2))
    return TrigLift(vals[0], pairs)


# ---------------------------------------------------------------------------
# Output plumbing for single-shot commands


def _emit(row: ResultRow, args) -> None:
    line = row.to_json()
    print(line)
    target = args.out or os.environ.get(OUT_ENV)
    if target:
        path = Path(target)
        if path.is_dir() or not path.suffix:
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"{row.quantity}.jsonl"
        with open(path, "a") as fh:
            fh.write(line + "\n")


def _adhoc_hash(quantity: str, payload: dict) -> str:
    blob = json.dumps({"quantity": quantity, **payload}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _load_config(path: str) -> NestedConfig:
    try:
        return config_from_json(Path(path).read_text())
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SpecParseError(f"{path}: {exc}") from exc


def _load_triple(path: str) -> NestedTriple:
    try:
        data = json.loads(Path(path).read_text())
        loop = loop_from_json(json.dumps(data["loop"]))
        doms = [domain_from_json(json.dumps(data[k])) for k in ("om1", "om2", "om3")]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SpecParseError(f"{path}: {exc}") from exc
    return nested_triple(loop, *doms)


def triple_to_json(triple: NestedTriple) -> str:
    return json.dumps(
        {
            "loop": json.loads(loop_to_json(triple.loop)),
            "om1": json.loads(domain_to_json(triple.om1)),
            "om2": json.loads(domain_to_json(triple.om2)),
            "om3": json.loads(domain_to_json(triple.om3)),
        },
        sort_keys=True,
        separators=(",", ":"),
    )


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_restriction(args, quantity: str) -> int:
    cfg = _load_config(args.config)
    params = {"beta": args.beta, "engine": args.engine} if quantity == "ising-restriction" else {}
    value, bound = QUANTITIES[quantity](cfg, params)
    _emit(ResultRow(_adhoc_hash(quantity, params), cfg.config_id, quantity,
                    float(value), bound, 0.0), args)
    return EXIT_OK


def _cmd_cocycle_check(args) -> int:
    triple = _load_triple(args.triple)
    params = {"evaluator": args.evaluator, "beta": args.beta, "c": args.c, "tol": args.tol}
    defect, _ = _qty_cocycle(triple, params)
    _emit(ResultRow(_adhoc_hash("cocycle-defect", params), triple.triple_id,
                    "cocycle-defect", float(defect), None, 0.0), args)
    if args.do_assert and abs(defect) > args.tol:
        print(f"cocycle defect {defect:.3e} exceeds tolerance {args.tol:.3e}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def _cmd_rotation_number(args) -> int:
    f = parse_map(args.map)
    res = rotation_number(f, eps=args.eps)
    _emit(ResultRow(_adhoc_hash("rotation-number", {"map": args.map, "eps": args.eps}),
                    args.map, "rotation-number", res.value, res.error_bound, 0.0), args)
    return EXIT_OK


def _cmd_solve_alpha(args) -> int:
    f = parse_map(args.map)
    alpha = solve_alpha(f, args.theta, eps=args.eps)
    _emit(ResultRow(_adhoc_hash("solve-alpha", {"map": args.map, "theta": args.theta, "eps": args.eps}),
                    args.map, "solve-alpha", float(alpha), args.eps, 0.0), args)
    return EXIT_OK


def _cmd_commutator_check(args) -> int:
    h = parse_map(args.h)
    rep = commutator_decomposition_check(h, args.theta, beta=args.beta, eps=args.eps)
    detail = json.dumps({"alpha": rep.alpha, "alpha_error": rep.alpha_error, "beta": rep.beta},
                        separators=(",", ":"))
    _emit(ResultRow(_adhoc_hash("commutator-check", {"h": args.h, "theta": args.theta, "beta": args.beta}),
                    args.h, "commutator-defect", rep.sup_defect, None, 0.0,
                    detail=detail), args)
    if args.do_assert and (rep.sup_defect > args.tol or rep.alpha_error > args.eps):
        print(f"commutator defect {rep.sup_defect:.3e} / alpha error {rep.alpha_error:.3e} "
              f"exceed tolerances", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def _cmd_lerw_dimension(args) -> int:
    seed = args.seed if args.seed is not None else 0
    domain = rect_domain(0, 0, args.side, args.side)
    loops, draw = [], seed
    budget = 200 * args.loops
    while len(loops) < args.loops:
        if draw - seed >= budget:
            raise GenerationExhausted(
                f"{args.loops} cycles with extent >= {args.min_extent} not found in {budget} draws")
        cycle = sample_lerw_loop(domain, seed=draw)
        draw += 1
        coords = cycle.coordinates
        if max(np.ptp(coords[:, 0]), np.ptp(coords[:, 1])) >= args.min_extent:
            loops.append(cycle)
    scales = [int(s) for s in args.scales.split(",")] if args.scales else None
    dim, stderr = box_dimension(loops, scales=scales)
    payload = {"side": args.side, "loops": args.loops, "seed": seed,
               "min_extent": args.min_extent, "scales": args.scales}
    _emit(ResultRow(_adhoc_hash("lerw-dimension", payload),
                    f"lerw-{args.side}x{args.side}-n{args.loops}-s{seed}-e{args.min_extent}",
                    "lerw-dimension", float(dim), float(stderr), 0.0), args)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = ExperimentSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    if args.jobs is not None:
        spec = ExperimentSpec.from_dict({**spec.to_dict(), "jobs": args.jobs})
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or "looplab-out")
    failures = 0
    computed = 0
    for row in run_sweep(spec, out_dir, timings=args.timings):
        computed += 1
        if row.status != "ok":
            failures += 1
        print(row.to_json())
    print(f"# sweep {spec.name}: {computed} rows computed, {failures} failed, "
          f"outputs in {out_dir}", file=sys.stderr)
    if args.do_assert and failures:
        return EXIT_ASSERT
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None, help="random seed")
    sub.add_argument("--jobs", type=int, default=None, help="parallel workers")
    sub.add_argument("--out", default=None,
                     help=f"output file or directory (default ${OUT_ENV})")
    sub.add_argument("--tol", type=float, default=1e-8, help="assertion tolerance")
    sub.add_argument("--timings", action="store_true", help="record real wall times")
    sub.add_argument("--assert", dest="do_assert", action="store_true",
                     help="exit 3 when the checked quantity exceeds --tol")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="looplab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("ising-restriction", help="restriction ratio of the critical Ising loop weight")
    p.add_argument("--config", required=True, help="NestedConfig JSON file")
    p.add_argument("--beta", type=float, default=BETA_C)
    p.add_argument("--engine", default="auto", choices=("auto", "enum", "transfer", "kacward"))
    _common_flags(p)
    p.set_defaults(func=lambda a: _cmd_restriction(a, "ising-restriction"))

    p = subs.add_parser("ust-restriction", help="restriction ratio of spanning-tree counts")
    p.add_argument("--config", required=True)
    _common_flags(p)
    p.set_defaults(func=lambda a: _cmd_restriction(a, "ust-restriction"))

    p = subs.add_parser("soup-mass", help="loop-soup mass of loops linking the loop between domains")
    p.add_argument("--config", required=True)
    _common_flags(p)
    p.set_defaults(func=lambda a: _cmd_restriction(a, "soup-mass"))

    p = subs.add_parser("cocycle-check", help="additive cocycle defect on a nested triple")
    p.add_argument("--triple", required=True, help="NestedTriple JSON file")
    p.add_argument("--evaluator", default="ust", choices=("ust", "soup", "ising"))
    p.add_argument("--beta", type=float, default=BETA_C)
    p.add_argument("--c", type=float, default=1.0)
    _common_flags(p)
    p.set_defaults(func=_cmd_cocycle_check)

    p = subs.add_parser("rotation-number", help="certified rotation number of a circle map")
    p.add_argument("--map", required=True, help="inline map (mobius:0.0,0.3) or JSON file")
    p.add_argument("--eps", type=float, default=1e-6)
    _common_flags(p)
    p.set_defaults(func=_cmd_rotation_number)

    p = subs.add_parser("solve-alpha", help="rotation offset alpha with r(R_alpha o f) = theta")
    p.add_argument("--map", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--eps", type=float, default=1e-6)
    _common_flags(p)
    p.set_defaults(func=_cmd_solve_alpha)

    p = subs.add_parser("commutator-check", help="decomposition defect for conjugated rotations")
    p.add_argument("--h", required=True, help="conjugating map")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-3)
    _common_flags(p)
    p.set_defaults(func=_cmd_commutator_check)

    p = subs.add_parser("lerw-dimension", help="box dimension of loop-erased cycles")
    p.add_argument("--side", type=int, default=128)
    p.add_argument("--loops", type=int, default=30, help="number of sampled cycles")
    p.add_argument("--min-extent", type=int, default=0,
                   help="keep only cycles whose bounding box spans at least this many sites")
    p.add_argument("--scales", default=None, help="comma-separated box scales, e.g. 2,4,8,16,32")
    _common_flags(p)
    p.set_defaults(func=_cmd_lerw_dimension)

    p = subs.add_parser("sweep", help="run a journaled experiment sweep from a spec file")
    p.add_argument("--spec", required=True, help="ExperimentSpec JSON file")
    _common_flags(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"looplab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"looplab: missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _ENGINE_ERRORS as exc:
        print(f"looplab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
