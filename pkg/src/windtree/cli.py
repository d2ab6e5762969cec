"""Command line: ``windtree <command> [options]``.

Every command writes its artifacts into ``--out-dir`` together with a
manifest listing each output's SHA-256 digest.  Exit codes: 0 success,
2 validation error, 3 missing artifact, 4 corner hits after all retries.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import jsonschema
import mpmath
import numpy as np

from . import pipeline, schemas
from .group_core import GroupWord, PlanarMatrix, classify
from .homology_action import InvariantSubspace, NotFound, Representation
from .kernel import (
    EmptyStage,
    KernelSample,
    SharedFixedPoint,
    build_chain,
    in_kernel,
    limit_set_sample,
    nontrivial_commutator,
)
from .sim import (
    CornerHit,
    Direction,
    NonUnitDirection,
    WindTreeTable,
    expanding_direction,
    rank2_check,
    strip_core_curves,
    windtree_cover,
)
from .surface import (
    CohomologyClass,
    InvalidParameter,
    SurfaceFormatError,
    TranslationSurface,
    build_windtree_surface,
    homology,
)

log = logging.getLogger("windtree")

EXIT_OK, EXIT_VALIDATION, EXIT_MISSING, EXIT_CORNER = 0, 2, 3, 4


class MissingArtifact(FileNotFoundError):
    def __init__(self, stage: str, path: Path):
        super().__init__(f"missing {stage} artifact: {path}")
        self.stage = stage


class ValidationFailure(ValueError):
    pass


# -- formatting -------------------------------------------------------------------


def dec(x, digits: int = 12) -> str:
    """Decimal string with ``digits`` significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, f".{digits}g")


def frac(x: Fraction) -> str:
    return str(Fraction(x))


def dump(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seed: int
    tool_version: str
    wall_time: float
    outputs: dict[str, str]

    def to_json(self) -> dict:
        return {"command": self.command, "config_digest": self.config_digest, "seed": self.seed,
                "tool_version": self.tool_version, "wall_time": dec(self.wall_time, 6),
                "outputs": dict(sorted(self.outputs.items()))}


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config(args) -> dict:
    skip = {"func", "out_dir", "jobs", "verbose"}
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(out: Path, command: str, args, outputs: list[Path], started: float) -> Path:
    cfg = json.dumps(_config(args), sort_keys=True, default=str).encode()
    m = RunManifest(command, hashlib.sha256(cfg).hexdigest(), args.seed, _version(),
                    time.perf_counter() - started, {p.name: sha256_file(p) for p in outputs})
    path = out / f"manifest-{command.replace(' ', '-')}.json"
    dump(path, m.to_json())
    return path


# -- loading ----------------------------------------------------------------------


def load_json(path: Path, kind: str, stage: str | None = None):
    if not path.exists():
        raise MissingArtifact(stage or kind, path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"{path}: invalid JSON ({exc})") from exc
    try:
        schemas.validate(kind, data)
    except jsonschema.ValidationError as exc:
        raise ValidationFailure(f"{path}: {exc.message}") from exc
    return data


def parse_table(text: str) -> tuple[Fraction, Fraction]:
    try:
        a, b = (Fraction(p.strip()) for p in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationFailure(f"--table expects 'a,b' with rationals, got {text!r}") from exc
    if not (0 < a < 1 and 0 < b < 1):
        raise ValidationFailure("obstacle sides must lie in (0, 1)")
    return a, b


def _table_json(table) -> dict | None:
    return None if table is None else {"a": frac(table[0]), "b": frac(table[1])}


def _mat(m: PlanarMatrix) -> list[list[int]]:
    return [list(r) for r in m.int_rows()]


def _word_entry(w: GroupWord, m: PlanarMatrix) -> dict:
    hyp = classify(m).tag == "hyperbolic"
    return {"word": w.to_json(), "matrix": _mat(m), "trace": int(m.trace), "hyperbolic": hyp,
            "expanding_direction": dec(expanding_direction(m).angle) if hyp else None}


def reps_from_json(data: dict) -> tuple[list[Representation], tuple[PlanarMatrix, ...]]:
    derivs = tuple(PlanarMatrix.from_rows(g["derivative"]) for g in data["generators"])
    ambient = len(data["intersection_matrix"])
    reps = []
    for sub in data["subspaces"]:
        F = InvariantSubspace(tuple(map(tuple, sub["basis"])), ambient)
        imgs = tuple(tuple(map(tuple, m)) for m in sub["images"])
        reps.append(Representation(imgs, F, derivs))
    return reps, derivs


def sample_from_json(data: dict, max_len: int) -> KernelSample:
    words = tuple(GroupWord.from_json(e["word"]) for e in data["words"])
    mats = tuple(PlanarMatrix.from_rows(e["matrix"]) for e in data["words"])
    return KernelSample(data["subspace_index"], words, mats, max_len)


# -- commands -----------------------------------------------------------------------


def cmd_surface_validate(args) -> list[Path]:
    out = args.out_dir
    if args.table:
        surface = build_windtree_surface(*parse_table(args.table))
    elif args.file:
        data = load_json(Path(args.file), "surface")
        surface = TranslationSurface.from_json(data)
    else:
        raise ValidationFailure("give a surface file or --table")
    problems = surface.validate()
    report = {"n_squares": surface.n_squares, "genus": surface.genus,
              "cone_angles": list(surface.cone_angles), "valid": not problems,
              "problems": problems}
    if not problems:
        report["homology_rank"] = homology(surface).rank
    dump(out / "surface.json", surface.to_json())
    dump(out / "surface-check.json", report)
    for p in problems:
        print(f"invalid: {p}", file=sys.stderr)
    if problems:
        raise ValidationFailure("surface failed validation")
    print(f"ok: {surface.n_squares} squares, genus {surface.genus}")
    return [out / "surface.json", out / "surface-check.json"]


def cmd_rep_compute(args) -> list[Path]:
    out = args.out_dir
    table = None
    if args.table:
        table = parse_table(args.table)
        surface = build_windtree_surface(*table)
        seeds = list(windtree_cover(WindTreeTable(*table)).classes)
    else:
        if not args.surface or not args.seeds:
            raise ValidationFailure("give --table, or a surface file with --seeds")
        surface = TranslationSurface.from_json(load_json(Path(args.surface), "surface"))
        seeds = [CohomologyClass(tuple(c)) for c in load_json(Path(args.seeds), "seeds")["classes"]]
        rank = homology(surface).rank
        if any(len(c) != rank for c in seeds):
            raise ValidationFailure(f"seed classes must have length {rank}")
    bundle = pipeline.representations(surface, seeds, args.search_bound)
    data = {
        "version": schemas.VERSION,
        "table": _table_json(table),
        "surface": surface.to_json(),
        "search_bound": args.search_bound,
        "genus": surface.genus,
        "intersection_matrix": [list(r) for r in bundle.lat.J],
        "generators": [{"word": g.word.to_json(), "derivative": _mat(g.derivative),
                        "homology_matrix": g.homology_matrix} for g in bundle.generators],
        "seeds": [list(c.coefficients) for c in seeds],
        "overlapping_seeds": bundle.overlapping,
        "subspaces": [{"basis": [list(b) for b in F.basis],
                       "images": [[list(r) for r in m] for m in r.generator_images], **v}
                      for F, r, v in zip(bundle.subspaces, bundle.reps, pipeline.verdicts(bundle))],
    }
    dump(out / "rep.json", data)
    print(f"{len(bundle.generators)} generators, subspace ranks "
          f"{[F.rank for F in bundle.subspaces]}")
    return [out / "rep.json"]


def _rep_path(args) -> Path:
    return Path(args.rep) if getattr(args, "rep", None) else args.out_dir / "rep.json"


def cmd_kernel_search(args) -> list[Path]:
    out = args.out_dir
    rep = load_json(_rep_path(args), "rep", "representation")
    reps, derivs = reps_from_json(rep)

    def sample_json(s: KernelSample) -> dict:
        return {"subspace_index": s.subspace_index, "count": len(s),
                "hyperbolic": len(s.hyperbolic()),
                "words": [_word_entry(w, m) for w, m in zip(s.words, s.matrices)]}

    per, joint = pipeline.kernel_samples(reps, args.max_len)
    data = {"version": schemas.VERSION, "max_len": args.max_len,
            "samples": [sample_json(s) for s in per], "joint": sample_json(joint)}
    dump(out / "kernel.json", data)
    print(f"depth {args.max_len}: joint kernel has {len(joint)} words, "
          f"{len(joint.hyperbolic())} hyperbolic")
    return [out / "kernel.json"]


def cmd_kernel_chain(args) -> list[Path]:
    out = args.out_dir
    rep = load_json(_rep_path(args), "rep", "representation")
    ker = load_json(out / "kernel.json", "kernel", "kernel")
    reps, derivs = reps_from_json(rep)
    samples = [sample_from_json(s, ker["max_len"]) for s in ker["samples"]]
    chain = build_chain(samples, reps, args.depth)
    verified = all(in_kernel(w, reps) for w in chain.generating_set)
    commutator = None
    if len(samples) >= 2:
        for (h, mh), (k, mk) in ((a, b) for a in samples[0].hyperbolic()
                                 for b in samples[1].hyperbolic()):
            try:
                w, m = nontrivial_commutator(h, k, derivs)
            except SharedFixedPoint:
                continue
            commutator = {"h": h.to_json(), "k": k.to_json(), "word": w.to_json(),
                          "matrix": _mat(m)}
            break
    data = {"version": schemas.VERSION, "stage": chain.stage,
            "conjugator_depth": chain.conjugator_depth,
            "generators": [_word_entry(w, m) for w, m in zip(chain.generating_set, chain.matrices)],
            "verified": verified, "commutator": commutator}
    dump(out / "chain.json", data)
    print(f"stage {chain.stage}: {len(chain)} generators, verified={verified}")
    return [out / "chain.json"]


def cmd_kernel_gaps(args) -> list[Path]:
    out = args.out_dir
    rep = load_json(_rep_path(args), "rep", "representation")
    ker = load_json(out / "kernel.json", "kernel", "kernel")
    _, derivs = reps_from_json(rep)
    joint = sample_from_json(ker["joint"], ker["max_len"])
    words = [w for w, _ in joint.hyperbolic()][:args.words]
    rows, prev, monotone = [], None, True
    for budget in args.budget:
        ds = limit_set_sample(words, derivs, budget)
        if prev is not None and ds.max_gap > prev:
            monotone = False
        prev = ds.max_gap
        rows.append({"budget": budget, "count": len(ds), "max_gap": dec(ds.max_gap),
                     "vacuous": ds.vacuous, "directions": [dec(x) for x in ds.directions]})
        print(f"budget {budget}: {len(ds)} directions, max gap {ds.max_gap:.6f}")
    dump(out / "gaps.json", {"version": schemas.VERSION, "monotone": monotone, "budgets": rows})
    return [out / "gaps.json"]


def _run_json(r: pipeline.RunSummary) -> dict:
    return {"kind": r.kind, "label": r.label, "angle": dec(r.angle),
            "slope": None if r.slope is None else dec(r.slope),
            "window": None if r.window is None else list(r.window),
            "reflections": r.reflections, "retries": r.retries,
            "max_displacement": dec(r.max_displacement), "digest": r.digest, "error": r.error}


def _write_series(path: Path, r: pipeline.RunSummary) -> None:
    lines = ["t,displacement"]
    lines += [f"{t:.12g},{d:.17g}" for t, d in zip(r.times, r.displacement)]
    path.write_text("\n".join(lines) + "\n")


def cmd_diffuse(args) -> list[Path]:
    out = args.out_dir
    a, b = parse_table(args.table)
    if args.kernel_word:
        kw = load_json(Path(args.kernel_word), "kernel-word", "kernel word")
        w = GroupWord.from_json(kw["word"])
        m = w.evaluate([PlanarMatrix.from_rows(x) for x in kw["derivatives"]])
        direction, label = expanding_direction(m), str(w)
    else:
        with mpmath.workdps(40):
            direction = Direction.from_angle(mpmath.mpf(args.direction))
        label = f"angle {args.direction}"
    r = pipeline.run_direction(("single", label, a, b, direction, args.start, args.horizon))
    if r.times is None:
        raise CornerHit(float("nan"))
    _write_series(out / "diffuse.csv", r)
    dump(out / "diffuse.json", {"version": schemas.VERSION, "table": _table_json((a, b)),
                                "horizon": dec(args.horizon), "run": _run_json(r)})
    print(f"slope {r.slope if r.slope is None else round(r.slope, 4)}, "
          f"{r.reflections} reflections, {r.retries} retries")
    return [out / "diffuse.csv", out / "diffuse.json"]


def cmd_scan(args) -> list[Path]:
    out = args.out_dir
    a, b = parse_table(args.table)
    kernel_words, controls, derivs = [], [], ()
    if args.with_kernel:
        rep = load_json(_rep_path(args), "rep", "representation")
        ker = load_json(out / "kernel.json", "kernel", "kernel")
        reps, derivs = reps_from_json(rep)
        joint = sample_from_json(ker["joint"], ker["max_len"])
        kernel_words = [w for w, _ in joint.hyperbolic()]
        controls = pipeline.control_words(reps, derivs, args.controls)
    jobs = pipeline.scan_jobs(a, b, args.horizon, args.n_generic, args.seed,
                              kernel_words, controls, derivs)
    runs = pipeline.run_jobs(jobs, args.jobs)
    failed = [r for r in runs if r.times is None]
    data = {"version": schemas.VERSION, "table": _table_json((a, b)), "seed": args.seed,
            "horizon": dec(args.horizon), "runs": [_run_json(r) for r in runs]}
    dump(out / "scan.json", data)
    lines = ["kind,label,angle,slope,reflections,retries"]
    lines += [f"{r.kind},{r.label},{dec(r.angle)},{'' if r.slope is None else dec(r.slope)},"
              f"{r.reflections},{r.retries}" for r in runs]
    (out / "scan.csv").write_text("\n".join(lines) + "\n")
    print(f"{len(runs)} runs ({sum(r.kind == 'kernel' for r in runs)} kernel directions)")
    if failed:
        raise CornerHit(float("nan"))
    return [out / "scan.json", out / "scan.csv"]


def cmd_rank_check(args) -> list[Path]:
    out = args.out_dir
    table = WindTreeTable(*parse_table(args.table))
    spec = windtree_cover(table)
    strips = strip_core_curves(table)
    M, det, ok = rank2_check(spec, strips)
    dump(out / "rank2.json", {"version": schemas.VERSION, "table": _table_json((table.a, table.b)),
                              "classes": [list(f.coefficients) for f in spec.classes],
                              "strips": [list(s) for s in strips], "matrix": M,
                              "determinant": int(det), "verdict": ok})
    print(f"pairing matrix {M}, det {det}: {'rank 2' if ok else 'degenerate'}")
    return [out / "rank2.json"]


def cmd_report(args) -> list[Path]:
    out = args.out_dir
    rep = load_json(out / "rep.json", "rep", "representation")
    ker = load_json(out / "kernel.json", "kernel", "kernel")
    scan = load_json(out / "scan.json", "scan", "scan")
    rank2 = load_json(out / "rank2.json", "rank2", "rank-check")
    generic = sorted(float(r["slope"]) for r in scan["runs"]
                     if r["kind"] == "generic" and r["slope"] is not None)
    by_label = {r["label"]: r for r in scan["runs"]}
    kernel_rows = []
    for e in ker["joint"]["words"]:
        if not e["hyperbolic"]:
            continue
        label = str(GroupWord.from_json(e["word"]))
        run = by_label.get(label)
        kernel_rows.append({"word": e["word"], "label": label,
                            "direction": e["expanding_direction"],
                            "slope": None if run is None else run["slope"]})
    stats = {"count": len(generic)}
    if generic:
        stats.update({"median": dec(np.median(generic)), "p5": dec(np.percentile(generic, 5)),
                      "p95": dec(np.percentile(generic, 95)), "slopes": [dec(x) for x in generic]})
    report = {
        "version": schemas.VERSION,
        "table": scan["table"],
        "representation": {"genus": rep["genus"], "generators": len(rep["generators"]),
                           "subspace_ranks": [len(s["basis"]) for s in rep["subspaces"]],
                           "zero_drift": all(s["zero_drift"] for s in rep["subspaces"])},
        "kernel_depth": ker["max_len"],
        "kernel_directions": kernel_rows,
        "generic": stats,
        "controls": [{"label": r["label"], "direction": r["angle"], "slope": r["slope"]}
                     for r in scan["runs"] if r["kind"] == "control"],
        "rank2": {"matrix": rank2["matrix"], "determinant": rank2["determinant"],
                  "verdict": rank2["verdict"]},
    }
    dump(out / "report.json", report)
    lines = ["kind,label,direction,slope"]
    lines += [f"kernel,{r['label']},{r['direction']},{r['slope'] or ''}" for r in kernel_rows]
    lines += [f"control,{c['label']},{c['direction']},{c['slope'] or ''}"
              for c in report["controls"]]
    (out / "report.csv").write_text("\n".join(lines) + "\n")
    print(f"report: {len(kernel_rows)} kernel directions, {len(generic)} generic runs")
    return [out / "report.json", out / "report.csv"]


# -- argument parsing ---------------------------------------------------------------


def _budgets(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="artifact directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="windtree", parents=[common],
                                description="Wind-tree surfaces, Veech group kernels and diffusion.")
    sub = p.add_subparsers(dest="command", required=True)

    surf = sub.add_parser("surface", help="surface files").add_subparsers(dest="action", required=True)
    v = surf.add_parser("validate", parents=[common], help="check a surface file or build one")
    v.add_argument("file", nargs="?")
    v.add_argument("--table", help="build the wind-tree surface for obstacle sides a,b")
    v.set_defaults(func=cmd_surface_validate, name="surface validate")

    rep = sub.add_parser("rep", help="homology representations").add_subparsers(dest="action", required=True)
    c = rep.add_parser("compute", parents=[common])
    c.add_argument("surface", nargs="?", help="surface JSON (with --seeds)")
    c.add_argument("--seeds", help="JSON file with seed cohomology classes")
    c.add_argument("--table", help="wind-tree obstacle sides a,b (seeds = cover classes)")
    c.add_argument("--search-bound", type=int, default=pipeline.SEARCH_BOUND)
    c.set_defaults(func=cmd_rep_compute, name="rep compute")

    ker = sub.add_parser("kernel", help="kernel words").add_subparsers(dest="action", required=True)
    s = ker.add_parser("search", parents=[common])
    s.add_argument("rep", nargs="?", help="rep.json (default: in --out-dir)")
    s.add_argument("--max-len", type=int, default=pipeline.DESK_DEPTH)
    s.set_defaults(func=cmd_kernel_search, name="kernel search")
    ch = ker.add_parser("chain", parents=[common])
    ch.add_argument("--rep")
    ch.add_argument("--depth", type=int, default=2, help="conjugator depth")
    ch.set_defaults(func=cmd_kernel_chain, name="kernel chain")
    g = ker.add_parser("gaps", parents=[common])
    g.add_argument("--rep")
    g.add_argument("--budget", type=_budgets, default=[1, 2, 3], help="comma-separated budgets")
    g.add_argument("--words", type=int, default=8, help="kernel words used as seeds")
    g.set_defaults(func=cmd_kernel_gaps, name="kernel gaps")

    d = sub.add_parser("diffuse", parents=[common], help="one billiard run")
    d.add_argument("--table", default="1/2,1/2")
    which = d.add_mutually_exclusive_group(required=True)
    which.add_argument("--direction", help="angle in radians")
    which.add_argument("--kernel-word", help="JSON file with a word and generator derivatives")
    d.add_argument("--horizon", type=float, default=pipeline.HORIZON)
    d.add_argument("--start", type=int, default=0, help="index of the deterministic start point")
    d.set_defaults(func=cmd_diffuse, name="diffuse")

    sc = sub.add_parser("scan", parents=[common], help="generic, kernel and control directions")
    sc.add_argument("--table", default="1/2,1/2")
    sc.add_argument("--horizon", type=float, default=pipeline.HORIZON)
    sc.add_argument("--n-generic", type=int, default=pipeline.N_GENERIC)
    sc.add_argument("--controls", type=int, default=pipeline.N_CONTROLS)
    sc.add_argument("--no-kernel", dest="with_kernel", action="store_false",
                    help="skip kernel and control directions")
    sc.add_argument("--rep")
    sc.add_argument("--jobs", type=int, default=None, help="worker processes")
    sc.set_defaults(func=cmd_scan, name="scan")

    r = sub.add_parser("rank-check", parents=[common], help="rank-2 pairing of strip curves")
    r.add_argument("--table", default="1/2,1/2")
    r.set_defaults(func=cmd_rank_check, name="rank-check")

    rp = sub.add_parser("report", parents=[common], help="combine artifacts")
    rp.set_defaults(func=cmd_report, name="report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except CornerHit as exc:
        print(f"error: corner hits persisted after retries ({exc})", file=sys.stderr)
        return EXIT_CORNER
    except (ValidationFailure, SurfaceFormatError, InvalidParameter, NonUnitDirection,
            NotFound, EmptyStage, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    write_manifest(args.out_dir, args.name, args, outputs, started)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
