"""Command-line front-end: run QFIM/SLD/saturability methods on scenario files.

Scenario files are YAML documents (``.scn``) with a top-level ``schema: 1``::

    schema: 1
    name: squeezed_thermal
    modes: 1
    initial_state: {kind: thermal, betas: [beta]}
    channel_steps:
      - {kind: squeeze, modes: [0], params: {r: r}}
    parameters:
      - {name: beta, value: 1.0986122886681098}
      - {name: r, value: 1.0}
    methods: [mixed, limit]
    options: {target_abs_error: 0.01}
    keep: [0]            # optional partial trace

Exit codes: 0 success, 2 scenario/validation error, 3 numerical failure or
method precondition violation.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .family import FamilyError, InitialState, catalog_family, evaluate_bundle
from .gaussian_catalog import ChannelError, ChannelStep
from .phase_space import StateError
from .qfim import METHODS, NU_SCHEDULE, PURE_TOL, QfimError, cqfim, pure_flags, qfim
from .sld import SAT_TOL, saturability
from .williamson import DecompositionError, TangentError

SCHEMA_VERSION = 1
THREADS_ENV = "GAUSSFISHER_THREADS"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

_TOP_KEYS = {"schema", "name", "modes", "initial_state", "channel_steps", "parameters", "methods", "options", "keep"}
_OPTION_KEYS = {"target_abs_error", "pure_tol", "sat_tol", "nu_schedule", "fd_steps", "symplectic"}
_ALL_METHODS = METHODS + ("auto",)
_NUMERIC_ERRORS = (QfimError, StateError, DecompositionError, TangentError, FamilyError, np.linalg.LinAlgError)


class ScenarioError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ScenarioOptions:
    target_abs_error: float = 1e-10
    pure_tol: float = PURE_TOL
    sat_tol: float = SAT_TOL
    nu_schedule: tuple[float, ...] = NU_SCHEDULE
    fd_steps: float | None = None
    symplectic: str = "auto"


@dataclass(frozen=True)
class Scenario:
    name: str
    modes: int
    initial_state: InitialState
    channel_steps: tuple[ChannelStep, ...]
    parameters: tuple[tuple[str, float], ...]
    methods: tuple[str, ...] = ("auto",)
    options: ScenarioOptions = field(default_factory=ScenarioOptions)
    keep: tuple[int, ...] | None = None

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.parameters)

    @property
    def point(self) -> np.ndarray:
        return np.array([v for _, v in self.parameters], dtype=float)

    def family(self):
        return catalog_family(self.initial_state, self.channel_steps, self.param_names, self.keep)


# -- parsing -----------------------------------------------------------------


def _parse_methods(raw: Any, problems: list[str]) -> tuple[str, ...]:
    if isinstance(raw, str):
        raw = [m.strip() for m in raw.split(",") if m.strip()]
    if not isinstance(raw, list) or not raw:
        problems.append("methods: expected a non-empty list")
        return ()
    bad = [m for m in raw if m not in _ALL_METHODS]
    if bad:
        problems.append(f"methods: unknown {bad}; expected a subset of {list(_ALL_METHODS)}")
    return tuple(str(m) for m in raw)


def _parse_options(raw: Any, problems: list[str]) -> ScenarioOptions:
    if raw is None:
        return ScenarioOptions()
    if not isinstance(raw, dict):
        problems.append("options: expected a mapping")
        return ScenarioOptions()
    unknown = set(raw) - _OPTION_KEYS
    if unknown:
        problems.append(f"options: unknown keys {sorted(unknown)}")
    kw: dict[str, Any] = {}
    try:
        for key in ("target_abs_error", "pure_tol", "sat_tol"):
            if key in raw:
                kw[key] = float(raw[key])
                if kw[key] <= 0:
                    problems.append(f"options.{key}: must be positive")
        if "nu_schedule" in raw:
            kw["nu_schedule"] = tuple(float(v) for v in raw["nu_schedule"])
            if len(kw["nu_schedule"]) < 2 or min(kw["nu_schedule"]) <= 1.0:
                problems.append("options.nu_schedule: needs at least two values > 1")
        if raw.get("fd_steps") is not None:
            kw["fd_steps"] = float(raw["fd_steps"])
        if "symplectic" in raw:
            kw["symplectic"] = str(raw["symplectic"])
            if kw["symplectic"] not in ("auto", "analytic", "finite-difference", "none"):
                problems.append(f"options.symplectic: unknown mode {kw['symplectic']!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"options: {exc}")
    return ScenarioOptions(**kw)


def parse_scenario(doc: Any) -> tuple[Scenario | None, list[str]]:
    """Schema-level parse; returns the scenario (or None) and every problem found."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        return None, ["scenario: top level must be a mapping"]
    if doc.get("schema") != SCHEMA_VERSION:
        problems.append(f"schema: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        problems.append(f"scenario: unknown keys {sorted(unknown)}")
    for key in ("name", "modes", "initial_state", "parameters"):
        if key not in doc:
            problems.append(f"{key}: missing")
    if problems and any(p.endswith("missing") for p in problems):
        return None, problems

    modes = doc["modes"]
    if not isinstance(modes, int) or modes < 1:
        return None, problems + [f"modes: expected a positive integer, got {modes!r}"]

    params: list[tuple[str, float]] = []
    raw_params = doc["parameters"]
    if not isinstance(raw_params, list) or not raw_params:
        problems.append("parameters: expected a non-empty list of {name, value}")
    else:
        for entry in raw_params:
            try:
                params.append((str(entry["name"]), float(entry["value"])))
            except (KeyError, TypeError, ValueError):
                problems.append(f"parameters: malformed entry {entry!r}")
        names = [n for n, _ in params]
        if len(set(names)) != len(names):
            problems.append("parameters: duplicate names")

    initial = None
    try:
        initial = InitialState.from_dict(doc["initial_state"], modes)
    except (FamilyError, TypeError, AttributeError) as exc:
        problems.append(f"initial_state: {exc}")

    steps: list[ChannelStep] = []
    for k, raw in enumerate(doc.get("channel_steps") or []):
        try:
            steps.append(ChannelStep.from_dict(raw))
        except (ChannelError, TypeError, AttributeError, ValueError) as exc:
            problems.append(f"channel_steps[{k}]: {exc}")

    methods = _parse_methods(doc.get("methods", ["auto"]), problems)
    options = _parse_options(doc.get("options"), problems)
    keep = doc.get("keep")
    if keep is not None:
        if not isinstance(keep, list) or not all(isinstance(k, int) and 0 <= k < modes for k in keep) or len(set(keep)) != len(keep) or not keep:
            problems.append(f"keep: expected distinct mode indices in [0, {modes}), got {keep!r}")
            keep = None
        else:
            keep = tuple(keep)

    if initial is None:
        return None, problems
    used = initial.symbols().union(*(s.symbols() for s in [*initial.prefix_steps(), *steps]))
    undefined = used - {n for n, _ in params}
    if undefined:
        problems.append(f"symbols used but not declared in parameters: {sorted(undefined)}")
    scn = Scenario(str(doc["name"]), modes, initial, tuple(steps), tuple(params), methods, options, keep)
    return scn, problems


def validate_scenario(doc: Any) -> list[str]:
    """Schema problems plus physicality of the state at the evaluation point."""
    scn, problems = parse_scenario(doc)
    if scn is None or problems:
        return problems
    try:
        fam = scn.family()
        fam(scn.point)
    except StateError as exc:
        problems.append(f"physicality: {exc}")
    except (FamilyError, ChannelError, ValueError) as exc:
        problems.append(f"evaluation: {exc}")
    return problems


def read_document(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc.strerror or exc}"]) from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"{path}: not valid YAML ({exc})"]) from exc


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("gaussfisher") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".scn")}


def resolve_scenario_path(ref: str) -> Path:
    path = Path(ref)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    stem = Path(ref).stem if ref.endswith(".scn") else ref
    if stem in bundled:
        return bundled[stem]
    raise ScenarioError([f"scenario {ref!r} not found (bundled: {sorted(bundled)})"])


def load_scenario(ref: str | Path) -> Scenario:
    doc = read_document(resolve_scenario_path(str(ref)))
    problems = validate_scenario(doc)
    if problems:
        raise ScenarioError(problems)
    scn, _ = parse_scenario(doc)
    return scn


# -- running -----------------------------------------------------------------


class MethodFailure(RuntimeError):
    pass


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _complex_pairs(m: np.ndarray) -> list:
    return np.stack([np.real(m), np.imag(m)], axis=-1).tolist()


def _run_method(bundle, method: str, opts: ScenarioOptions) -> tuple[dict, float]:
    start = time.perf_counter()
    kw = {"pure_tol": opts.pure_tol, "nu_schedule": opts.nu_schedule, "target_abs_error": opts.target_abs_error}
    if method == "cqfim":
        res = cqfim(bundle, pure_tol=opts.pure_tol, nu_schedule=opts.nu_schedule)
    else:
        res = qfim(bundle, method, **kw)
    out = res.to_dict()
    if method == "auto":
        out["resolved_method"] = out["method"]
    return out, time.perf_counter() - start


def run_scenario(scn: Scenario, methods: Sequence[str] | None = None, options: ScenarioOptions | None = None) -> dict:
    """Evaluate every requested method; raises :class:`MethodFailure` on the first failing one."""
    methods = tuple(methods or scn.methods)
    opts = options or scn.options
    bad = [m for m in methods if m not in _ALL_METHODS]
    if bad:
        raise ScenarioError([f"unknown methods {bad}; expected a subset of {list(_ALL_METHODS)}"])
    fam = scn.family()
    eps = scn.point
    probe = evaluate_bundle(fam, eps, steps=opts.fd_steps, symplectic="none")
    flags = pure_flags(probe, opts.pure_tol)
    wants_c = "cqfim" in methods
    bundle = evaluate_bundle(
        fam,
        eps,
        steps=opts.fd_steps,
        symplectic=opts.symplectic,
        hessians=wants_c and bool(np.any(flags)),
        second_derivatives=wants_c and bool(np.all(flags)),
    )

    def task(m):
        try:
            return m, _run_method(bundle, m, opts), None
        except _NUMERIC_ERRORS as exc:
            return m, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        outcomes = list(pool.map(task, methods))

    results, timing, failures = {}, {}, {}
    for m, ok, err in outcomes:
        if err is not None:
            failures[m] = err
        else:
            results[m], timing[m] = ok
    report: dict[str, Any] = {
        "scenario": scn.name,
        "parameters": {n: v for n, v in scn.parameters},
        "symplectic_spectrum": bundle.spectrum.tolist(),
        "pure_mode_flags": [bool(f) for f in flags],
        "qfim": results,
        "notes": list(bundle.notes),
    }
    if failures:
        report["failures"] = failures
    try:
        sat = saturability(bundle, "auto", sat_tol=opts.sat_tol, pure_tol=opts.pure_tol, nu_schedule=opts.nu_schedule)
        report["saturability"] = sat.to_dict()
    except _NUMERIC_ERRORS as exc:
        report.setdefault("failures", {})["saturability"] = f"{type(exc).__name__}: {exc}"

    # cQFIM legitimately differs from the QFIM at pure-mode points
    comparable = [m for m in results if m != "cqfim" or not np.any(flags)]
    disc = 0.0
    for a, b in itertools.combinations(comparable, 2):
        disc = max(disc, float(np.max(np.abs(np.array(results[a]["H"]) - np.array(results[b]["H"])))))
    report["cross_method_max_discrepancy"] = disc
    report["timing"] = {k: timing[k] for k in sorted(timing)}
    return report


def canonical_json(report: dict) -> str:
    """Deterministic JSON with timing removed."""
    body = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(body, sort_keys=True, indent=2)


def _fmt(x: float) -> str:
    return f"{x: .6g}"


def format_table(report: dict) -> str:
    lines = [f"scenario: {report['scenario']}"]
    lines.append("parameters: " + ", ".join(f"{k}={v:g}" for k, v in report["parameters"].items()))
    lines.append("symplectic spectrum: " + ", ".join(f"{v:.10g}" for v in report["symplectic_spectrum"]))
    lines.append("pure modes: " + (", ".join(str(i) for i, f in enumerate(report["pure_mode_flags"]) if f) or "none"))
    for name, res in report["qfim"].items():
        label = name if name != "auto" else f"auto ({res['resolved_method']})"
        extra = []
        if "series_terms_used" in res:
            extra.append(f"M={res['series_terms_used']}")
            extra.append(f"max bound={max(max(r) for r in res['error_bound']):.3g}")
        lines.append(f"\n[{label}]" + (" " + " ".join(extra) if extra else ""))
        for row in res["H"]:
            lines.append("  " + " ".join(_fmt(v) for v in row))
    if "saturability" in report:
        sat = report["saturability"]
        lines.append(f"\nsaturability ({sat['method']}): {'saturable' if sat['saturable'] else 'not saturable'} (tol {sat['tol']:g})")
        for row in sat["C"]:
            lines.append("  " + " ".join(f"{re:+.6g}{im:+.6g}i" for re, im in row))
    lines.append(f"\ncross-method max discrepancy: {report['cross_method_max_discrepancy']:.3g}")
    for name, msg in report.get("failures", {}).items():
        lines.append(f"FAILED {name}: {msg}")
    return "\n".join(lines)


# -- entry point -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussfisher", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate a scenario")
    run.add_argument("scenario", help="path to a .scn file or a bundled scenario name")
    run.add_argument("--methods", help="comma-separated subset of " + ",".join(_ALL_METHODS))
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--json", action="store_true", help="machine-readable output")
    run.add_argument("--target-error", type=float, help="absolute error target for the limit method")
    run.add_argument("--pure-tol", type=float, help="tolerance on |lambda - 1| for pure modes")
    val = sub.add_parser("validate", help="check a scenario without running it")
    val.add_argument("scenario")
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_run(args) -> int:
    try:
        scn = load_scenario(args.scenario)
        methods = None
        if args.methods:
            problems: list[str] = []
            methods = _parse_methods(args.methods, problems)
            if problems:
                raise ScenarioError(problems)
        opts = scn.options
        overrides = {}
        if args.target_error is not None:
            overrides["target_abs_error"] = args.target_error
        if args.pure_tol is not None:
            overrides["pure_tol"] = args.pure_tol
        if overrides:
            opts = ScenarioOptions(**{**opts.__dict__, **overrides})
    except ScenarioError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_INVALID
    try:
        report = run_scenario(scn, methods, opts)
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.json:
        body = json.loads(canonical_json(report))
        body["timing"] = report["timing"]
        text = json.dumps(body, sort_keys=True, indent=2)
    else:
        text = format_table(report)
    _emit(text, args.out)
    if report.get("failures"):
        flags = report["pure_mode_flags"]
        for name, msg in report["failures"].items():
            print(f"error: method {name} failed (pure-mode flags {flags}): {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        doc = read_document(resolve_scenario_path(args.scenario))
    except ScenarioError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_INVALID
    problems = validate_scenario(doc)
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_INVALID
    print(f"{args.scenario}: ok")
    return EXIT_OK


def _cmd_list(_args) -> int:
    for name, path in sorted(bundled_scenarios().items()):
        try:
            doc = read_document(path)
            desc = f"{doc.get('modes')} mode(s), parameters {[p['name'] for p in doc.get('parameters', [])]}"
        except (ScenarioError, AttributeError, TypeError, KeyError):
            desc = "unreadable"
        print(f"{name}\t{desc}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "list": _cmd_list}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
