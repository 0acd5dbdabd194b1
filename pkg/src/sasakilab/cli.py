"""Command-line front end: ``sasakilab list|verify|classify``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .expr import ExprError
from .fixtures import FIXTURES, ManifoldFormatError, UnknownFixtureError
from .identities import REGISTRY
from .report import ConfigError, RunConfig, build_report, to_json, to_markdown

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _run_options(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixture", help="shipped fixture name, e.g. sphere3 or sphere3.dhom(2)")
    src.add_argument("--manifold", help="path to a manifold file")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-axiom", type=float, default=1e-8)
    p.add_argument("--tol-identity", type=float, default=1e-7)
    p.add_argument("--cluster-tol", type=float, default=1e-5)
    p.add_argument("--fd-step", type=float, default=1e-4)
    p.add_argument("--format", choices=("json", "md"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--identities", help="comma-separated identity ids to run")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sasakilab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    lp = sub.add_parser("list", help="show fixture or identity catalogues")
    lp.add_argument("what", choices=("fixtures", "identities"))
    _run_options(sub.add_parser("verify", help="axioms, identities, spectrum and classification"))
    _run_options(sub.add_parser("classify", help="spectral classification only"))
    return parser


def _config(args) -> RunConfig:
    ids = None
    if args.identities:
        ids = [s.strip() for s in args.identities.split(",") if s.strip()]
    return RunConfig(
        fixture=args.fixture, manifold=args.manifold, samples=args.samples, seed=args.seed,
        tol_axiom=args.tol_axiom, tol_identity=args.tol_identity, cluster_tol=args.cluster_tol,
        fd_step=args.fd_step, format=args.format, identities=ids,
    )


def cmd_list(what: str) -> int:
    if what == "fixtures":
        for name, desc in FIXTURES.items():
            print(f"{name:18s} {desc}")
    else:
        for spec in REGISTRY:
            print(f"{spec.id} → {spec.anchor}")
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_verify(cfg: RunConfig, out: str | None = None) -> tuple[int, dict]:
    report = build_report(cfg)
    _emit(to_json(report) if cfg.format == "json" else to_markdown(report), out)
    return report["exit_code"], report


def cmd_classify(cfg: RunConfig, out: str | None = None) -> tuple[int, dict]:
    report = build_report(cfg, spectral_only=True)
    cl = report["classification"]
    lines = [cl["line"]]
    for key, val in cl["evidence"].items():
        lines.append(f"  {key:28s} {val}")
    lines += [f"  note: {n}" for n in cl["notes"]]
    _emit("\n".join(lines) + "\n", out)
    return (EXIT_OK if report["axioms"]["passed"] else EXIT_FAIL), report


def main(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list(args.what)
    try:
        cfg = _config(args)
        if args.command == "verify":
            code, _ = cmd_verify(cfg, args.out)
        else:
            code, _ = cmd_classify(cfg, args.out)
        return code
    except (ConfigError, ManifoldFormatError, UnknownFixtureError, ExprError, OSError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, UnknownFixtureError) and exc.args else exc
        print(f"sasakilab: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
