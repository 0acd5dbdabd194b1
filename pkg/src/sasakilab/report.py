"""Run configuration and report assembly (JSON canonical, markdown rendering)."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .expr import parse_expr
from .fixtures import fixture, load_manifold, sample_points
from .identities import FAIL, IDS, UNMET, potential_growth_check, run_all
from .sasaki import (SolitonCandidate, check_sasakian_axioms, holomorphicity_residual, pr1_residual)
from .spectral import ClassifyTolerances, classify, ricci_spectra
from .tensor import fd_oracle_riemann, riemann

SCHEMA_RESOURCE = "schemas/report.schema.json"


class ConfigError(ValueError):
    """Invalid run configuration (operational failure, exit code 2)."""


@dataclass
class RunConfig:
    fixture: str | None = None
    manifold: str | None = None
    samples: int = 50
    seed: int = 0
    tol_axiom: float = 1e-8
    tol_identity: float = 1e-7
    cluster_tol: float = 1e-5
    constancy_tol: float = 1e-6
    fd_step: float = 1e-4
    format: str = "json"
    identities: list[str] | None = None
    threads: int = field(default_factory=lambda: threads_from_env())

    def validate(self) -> None:
        if (self.fixture is None) == (self.manifold is None):
            raise ConfigError("give exactly one of --fixture or --manifold")
        if self.samples < 10:
            raise ConfigError("sample count must be at least 10")
        for name in ("tol_axiom", "tol_identity", "cluster_tol", "constancy_tol", "fd_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name.replace('_', '-')} must be positive")
        if self.format not in ("json", "md"):
            raise ConfigError("format must be json or md")
        if self.identities is not None:
            unknown = [i for i in self.identities if i not in IDS]
            if unknown:
                raise ConfigError(f"unknown identity ids: {', '.join(unknown)}")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d


def threads_from_env() -> int:
    raw = os.environ.get("SASAKILAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def load_target(cfg: RunConfig):
    """Return (structure, candidate, notes, minimal_length)."""
    notes: list[str] = []
    if cfg.fixture is not None:
        fx = fixture(cfg.fixture)
        S, cand = fx.structure, fx.candidate
        notes += [f"{k} = {v!r}" for k, v in sorted(fx.notes.items())]
    else:
        lm = load_manifold(cfg.manifold)
        S, cand = lm.structure, lm.candidate
        notes += lm.warnings
    if cand is None:
        cand = SolitonCandidate(S, parse_expr("0", S.chart))
        notes.append("no potential supplied; psi = 0 used")
    return S, cand, notes


def _fd_section(S, pts, h: float) -> dict:
    worst = 0.0
    for p in pts:
        ad = riemann(S.metric, p).components
        fd = fd_oracle_riemann(S.metric, p, h).components
        worst = max(worst, float(np.max(np.abs(ad - fd)) / max(1.0, float(np.max(np.abs(ad))))))
    return {"points": len(pts), "step": h, "max_relative_deviation": worst}


def build_report(cfg: RunConfig, spectral_only: bool = False) -> dict:
    cfg.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    S, cand, notes = load_target(cfg)
    pts = sample_points(S, cfg.samples, cfg.seed)
    timings["load"] = time.perf_counter() - t0

    t = time.perf_counter()
    axioms = check_sasakian_axioms(S, pts, cfg.tol_axiom)
    timings["axioms"] = time.perf_counter() - t

    report: dict = {
        "tool": "sasakilab",
        "version": __version__,
        "config": cfg.echo(),
        "structure": {"name": S.name, "n": S.n, "dim": S.dim, "coords": list(S.chart.names),
                      "psi": str(cand.psi), "notes": notes},
        "axioms": {"passed": axioms.passed, "tolerance": axioms.tolerance, "points": axioms.points,
                   "residuals": dict(sorted(axioms.residuals.items())), "failures": axioms.failures()},
    }

    tols = ClassifyTolerances(constancy=cfg.constancy_tol, cluster=cfg.cluster_tol, identity=cfg.tol_identity)
    t = time.perf_counter()
    spectra = ricci_spectra(S, pts, cfg.cluster_tol, seed=cfg.seed)
    ranks = sorted({s.rank_ric_minus_g for s in spectra})
    report["spectrum"] = {
        "points": len(spectra),
        "ranks_seen": ranks,
        "all_in_range_1_2n": all(s.in_range_1_2n for s in spectra),
        "min_xi_alignment": min(s.xi_alignment for s in spectra),
        "samples": [s.to_dict() for s in spectra[:5]],
    }
    timings["spectrum"] = time.perf_counter() - t

    t = time.perf_counter()
    verdict = classify(cand, pts, tols, seed=cfg.seed)
    report["classification"] = verdict.to_dict()
    timings["classify"] = time.perf_counter() - t

    if not spectral_only:
        t = time.perf_counter()
        reps = run_all(cand, pts, cfg.tol_identity, seed=cfg.seed, axiom_tol=cfg.tol_axiom, ids=cfg.identities)
        report["identities"] = [r.to_dict() for r in reps]
        timings["identities"] = time.perf_counter() - t

        t = time.perf_counter()
        few = pts[:5]
        report["hamiltonian"] = {
            "points": len(few),
            "pr1_residual": pr1_residual(S, cand.psi, few, seed=cfg.seed),
            "holomorphicity_residual": holomorphicity_residual(S, cand.psi, few, seed=cfg.seed),
        }
        report["fd_check"] = _fd_section(S, pts[:3], cfg.fd_step)
        c1 = next((r.values.get("C1") for r in reps if r.id == "soliton.n1.iv"), None)
        growth = potential_growth_check(cand, pts, c1=c1, max_points=6, seed=cfg.seed, threads=cfg.threads)
        report["growth"] = growth.to_dict()
        timings["extras"] = time.perf_counter() - t

        conflicts = []
        pos = next((r for r in reps if r.id == "ineq.positivity"), None)
        if pos is not None and pos.verdict == FAIL:
            eq = {r.id: r.verdict for r in reps}
            conflicts.append(
                "negative scalar curvature on a candidate whose soliton equation "
                f"(soliton.n1.i: {eq.get('soliton.n1.i', 'not run')}) and Hamiltonian holomorphicity "
                f"(residual {report['hamiltonian']['holomorphicity_residual']:.3g}) hold: "
                "conflicts with the nonnegativity theorem for complete shrinking solitons")
        report["conflicts"] = conflicts

    report["exit_code"] = exit_code_for(report)
    report["timings"] = {k: round(v, 6) for k, v in timings.items()}
    return report


def exit_code_for(report: dict) -> int:
    if not report["axioms"]["passed"]:
        return 1
    for r in report.get("identities", []):
        if r["verdict"] == FAIL:
            return 1
    if report.get("growth", {}).get("verdict") == FAIL:
        return 1
    return 0


def to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def load_schema() -> dict:
    return json.loads(resources.files("sasakilab").joinpath(SCHEMA_RESOURCE).read_text(encoding="utf-8"))


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.3e}"
    return str(x)


def to_markdown(report: dict) -> str:
    s = report["structure"]
    out = [f"# sasakilab report: {s['name']}", "",
           f"n = {s['n']}, coordinates {', '.join(s['coords'])}, psi = `{s['psi']}`", ""]
    for note in s["notes"]:
        out.append(f"- {note}")
    ax = report["axioms"]
    out += ["", "## Axioms", "", f"passed: {ax['passed']} (tol {ax['tolerance']}, {ax['points']} points)", "",
            "| axiom | max residual |", "|---|---|"]
    out += [f"| {k} | {_fmt(v)} |" for k, v in ax["residuals"].items()]
    if "identities" in report:
        out += ["", "## Identities", "", "| id | kind | verdict | max residual | notes |", "|---|---|---|---|---|"]
        for r in report["identities"]:
            extra = "; ".join(r["notes"] + [f"{k}={_fmt(v)}" for k, v in r["values"].items()])
            out.append(f"| {r['id']} | {r['kind']} | {r['verdict']} | {_fmt(r['max_residual'])} | {extra} |")
    sp = report["spectrum"]
    out += ["", "## Spectrum", "", f"ranks of Ric - g seen: {sp['ranks_seen']}",
            f"all eigenvalues in [1, 2n]: {sp['all_in_range_1_2n']}"]
    cl = report["classification"]
    out += ["", "## Classification", "", f"**{cl['line']}**", ""]
    out += [f"- {n}" for n in cl["notes"]]
    if "hamiltonian" in report:
        hm = report["hamiltonian"]
        out += ["", "## Hamiltonian field", "", f"pr1 residual {_fmt(hm['pr1_residual'])}, "
                f"holomorphicity residual {_fmt(hm['holomorphicity_residual'])}"]
        out += ["", "## Growth", "", f"verdict: {report['growth']['verdict']}"]
        out += [f"- {n}" for n in report["growth"]["notes"]]
        if report["conflicts"]:
            out += ["", "## Conflicts", ""] + [f"- {c}" for c in report["conflicts"]]
    return "\n".join(out) + "\n"
