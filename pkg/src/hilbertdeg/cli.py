"""Batch front end.

    hilbertdeg deg --map standard_gradient_map -p m=-2
    hilbertdeg stab --config run.yaml --out runs/a --csv
    hilbertdeg demo annulus
    hilbertdeg catalog annulus

Exit status: 0 success, 2 certification failure, 1 usage, config or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import config as cfgmod
from .catalog import annulus_example, list_catalog, standard_gradient_map
from .errors import AuditFailure, CertificationFailure, ConfigError, ShapeNotRotatable
from .maps import rotate, straight_line_homotopy
from .otopy import (
    approximate_by_suspension,
    audit_otopy,
    certify_otopy,
    invariance_audit,
    rotation_family,
    suspend_finite_otopy,
)
from .pipeline import CSV_COLUMNS, DegreeReport, compute_Deg, region_reports

TASKS = ("deg", "stab", "otopy", "basis", "region", "demo")


@dataclass
class RunResult:
    status: int
    text: list = field(default_factory=list)
    doc: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)  # [(name, DegreeReport)]

    def csv(self, tagged: bool) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow((["map"] if tagged else []) + CSV_COLUMNS)
        for name, rep in self.reports:
            for row in rep.csv_rows():
                w.writerow(([name] if tagged else []) + row)
        return buf.getvalue()


def _add(res: RunResult, name: str, rep: DegreeReport):
    res.reports.append((name, rep))
    res.doc.setdefault("reports", {})[name] = rep.to_dict()
    res.text.append(rep.summary() if name == rep.label else f"[{name}] {rep.summary()}")


def _failure(res: RunResult, err: CertificationFailure, where: str) -> RunResult:
    res.status = 2
    res.doc.setdefault("failures", []).append({"stage": where, "error": type(err).__name__, "message": str(err)})
    res.text.append(f"{where}: {type(err).__name__}: {err}")
    return res


def run(cfg: cfgmod.ExperimentConfig) -> RunResult:
    """Execute one validated config.  Certification failures are reported, not raised."""
    res = RunResult(0, doc={"task": cfg.task, "seed": cfg.seed})
    eng = cfg.engine_config()
    stage = cfg.task
    try:
        if cfg.task == "demo":
            return _demo(cfg, res)
        f = cfgmod.build_map(cfg.map, cfg.seed)
        if cfg.task in ("deg", "stab"):
            rep = compute_Deg(f, cfg.window, cfg.seed, eng, cap=cfg.cap)
            _add(res, f.label, rep)
            res.doc["value"] = rep.value
        elif cfg.task == "otopy":
            _otopy(cfg, f, res, eng)
        elif cfg.task == "basis":
            if not f.domain.ball_only:
                raise ShapeNotRotatable("basis check needs a region made of balls")
            Q = cfgmod.rotation_from(cfg.rotation)
            a = compute_Deg(f, cfg.window, cfg.seed, eng, cap=cfg.cap)
            b = compute_Deg(rotate(f, Q), cfg.window, cfg.seed, eng, cap=cfg.cap)
            _add(res, f.label, a)
            _add(res, f"rotated({f.label})", b)
            res.doc["equal"] = a.value == b.value
            if a.value != b.value:
                raise AuditFailure(f"Deg changed under rotation: {a.value} -> {b.value}")
        elif cfg.task == "region":
            other = cfgmod.region_from(cfg.other_region, "other_region")
            a, b = region_reports(f, other, cfg.window, cfg.seed, eng)
            _add(res, "original", a)
            _add(res, "other_region", b)
            res.doc["equal"] = a.value == b.value
            if a.value != b.value:
                raise AuditFailure(f"Deg depends on the region: {a.value} vs {b.value}")
    except CertificationFailure as err:
        return _failure(res, err, stage)
    return res


def _otopy(cfg, f, res, eng):
    if cfg.target is not None:
        g = cfgmod.build_map(cfg.target, cfg.seed, "target")
        audit = audit_otopy(straight_line_homotopy(f, g), cfg.seed, cfg.window, eng)
        _add(res, "h0", audit.start)
        _add(res, "h1", audit.end)
        res.doc["otopy"] = audit.certificate.to_dict()
        res.text.append(f"straight line certified with epsilon = {audit.certificate.epsilon:.4g}")
        return
    chain = approximate_by_suspension(f)
    res.text.append(f"suspension chain at n = {chain.n} (N = {chain.N})")
    links = []
    for i, link in enumerate(chain.links):
        entry = {"relation": link.relation, "source": link.source.label, "target": link.target.label}
        if link.relation == "straight_line":
            a, b = invariance_audit(link.otopy, cfg.seed, cfg.window, eng, link.certificate)
            _add(res, f"link{i}.start", a)
            _add(res, f"link{i}.end", b)
            entry["certificate"] = link.certificate.to_dict()
        links.append(entry)
    res.doc["chain"] = {"n": chain.n, "N": chain.N, "links": links}


def _demo(cfg, res):
    eng = cfg.engine_config()
    if cfg.demo == "annulus":
        f0, f1 = annulus_example(0), annulus_example(1)
        for name, f in (("f0", f0), ("f1", f1)):
            try:
                _add(res, name, compute_Deg(f, cfg.window, cfg.seed, eng, cap=cfg.cap))
            except CertificationFailure as err:
                _failure(res, err, name)
        vals = [rep.value for _, rep in res.reports]
        if len(vals) == 2:
            res.doc["equal"] = vals[0] == vals[1]
            res.text.append(f"Deg f0 = {vals[0]}, Deg f1 = {vals[1]}")
        try:
            cert = certify_otopy(straight_line_homotopy(f0, f1))
            res.doc["otopy"] = cert.to_dict()
            res.text.append(f"straight line certified with epsilon = {cert.epsilon:.4g}")
        except CertificationFailure as err:
            _failure(res, err, "straight line otopy")
        return res
    # suspension: chain for a catalog map plus a suspended finite family
    f = cfgmod.build_map(cfg.map, cfg.seed) if cfg.map else standard_gradient_map(2)
    try:
        _otopy(cfg, f, res, eng)
        h = suspend_finite_otopy(rotation_family(2), bound=2.0, seed=cfg.seed)
        a, b = invariance_audit(h, cfg.seed, cfg.window, eng)
        _add(res, "rotation.start", a)
        _add(res, "rotation.end", b)
    except CertificationFailure as err:
        _failure(res, err, "suspension demo")
    return res


# -- argument handling ------------------------------------------------------------


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--workers", type=int, help="engine worker threads")
    common.add_argument("--out", help="directory for report.txt, report.json and the CSV")
    common.add_argument("--csv", action="store_true", help="emit CSV (to stdout when --out is absent)")
    common.add_argument("--map", dest="map_name", help="catalog map name, instead of a config map")
    common.add_argument("-p", "--param", action="append", type=_param, default=[], help="catalog parameter key=value")
    common.add_argument("--window", type=int, help="stabilization window length")

    ap = argparse.ArgumentParser(prog="hilbertdeg", description="Galerkin degree of compact perturbations of the identity")
    sub = ap.add_subparsers(dest="command", required=True)
    for t in TASKS:
        sp = sub.add_parser(t, parents=[common])
        if t == "demo":
            sp.add_argument("which", nargs="?", choices=["annulus", "suspension"])
    cp = sub.add_parser("catalog")
    cp.add_argument("filter", nargs="?", default="")
    return ap


def _merge(args) -> cfgmod.ExperimentConfig:
    data = cfgmod.read(args.config) if args.config else {}
    if "task" in data and data["task"] != args.command:
        raise ConfigError(f"config task {data['task']!r} does not match subcommand {args.command!r}", "task")
    data["task"] = args.command
    if args.map_name:
        data["map"] = {"catalog": args.map_name, "params": dict(args.param)}
    elif args.param:
        raise ConfigError("--param needs --map", "map")
    if args.command == "demo" and args.which:
        data["demo"] = args.which
    if args.seed is not None:
        data["seed"] = args.seed
    eng = data.setdefault("engine", {})
    if isinstance(eng, dict):
        if args.workers is not None:
            eng["workers"] = args.workers
        if args.window is not None:
            eng["window"] = args.window
    return cfgmod.validate(data)


def _write(res: RunResult, cfg, out: str | None, want_csv: bool) -> None:
    tagged = cfg.task not in ("deg", "stab")
    out = out or cfg.output.get("dir")
    want_csv = want_csv or bool(cfg.output.get("csv")) or cfg.task == "stab"
    if out is None:
        if want_csv:
            sys.stdout.write(res.csv(tagged))
        else:
            print("\n".join(res.text))
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.txt").write_text("\n".join(res.text) + "\n")
    (d / "report.json").write_text(json.dumps(res.doc, indent=2, sort_keys=True) + "\n")
    if want_csv:
        (d / f"{cfg.task}.csv").write_text(res.csv(tagged))
    print("\n".join(res.text))


def main(argv=None) -> int:
    ap = parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    if args.command == "catalog":
        fams = list_catalog(args.filter)
        for fam in fams:
            print(fam.describe())
        return 0
    try:
        cfg = _merge(args)
        res = run(cfg)
        _write(res, cfg, args.out, args.csv)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return res.status


if __name__ == "__main__":
    sys.exit(main())
