"""Closed-form Sasakian fixtures and the line-oriented manifold file format.

Every shipped fixture is authored as manifold-file text, so the loader and
the fixture catalogue share one code path.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import Chart, ExprError, ExprSyntaxError, parse_expr
from .sasaki import SasakianStructure, SolitonCandidate, StructureSample, check_sasakian_axioms
from .tensor import MetricSpec

SECTIONS = ("manifold", "domain", "metric", "eta", "xi", "potential", "flags")
SAMPLE_MARGIN = 0.1


class ManifoldFormatError(ValueError):
    """Malformed manifold file; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<text>"):
        self.line, self.column, self.source = line, column, source
        where = f"{source}:{line}:{column}" if line else source
        super().__init__(f"{where}: {message}")


class DimensionMismatchError(ManifoldFormatError):
    pass


class UnknownFixtureError(KeyError):
    pass


@dataclass
class ManifoldFile:
    name: str
    n: int
    coords: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    metric: dict[tuple[int, int], str]   # 0-based, i <= j
    eta: tuple[str, ...]
    xi: tuple[str, ...]
    psi: str | None = None
    phi_sign: int = 1

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def dumps(self) -> str:
        lines = ["[manifold]", f"name={self.name}", f"n={self.n}", "coords=" + ",".join(self.coords), "", "[domain]"]
        lines += [f"{c}={_num(lo)}..{_num(hi)}" for c, (lo, hi) in zip(self.coords, self.box)]
        lines += ["", "[metric]"]
        lines += [f"g[{i + 1}][{j + 1}]={self.metric[i, j]}" for (i, j) in sorted(self.metric)]
        lines += ["", "[eta]"] + [f"eta[{i + 1}]={e}" for i, e in enumerate(self.eta)]
        lines += ["", "[xi]"] + [f"xi[{i + 1}]={e}" for i, e in enumerate(self.xi)]
        if self.psi is not None:
            lines += ["", "[potential]", f"psi={self.psi}"]
        if self.phi_sign != 1:
            lines += ["", "[flags]", "phi_sign=-1"]
        return "\n".join(lines) + "\n"

    def build(self) -> tuple[SasakianStructure, SolitonCandidate | None]:
        chart = Chart(self.coords, self.box)
        d = self.dim
        rows = [[self.metric.get((min(i, j), max(i, j)), "0") for j in range(d)] for i in range(d)]
        metric = MetricSpec.from_strings(chart, rows)
        S = SasakianStructure(
            n=self.n,
            metric=metric,
            eta=tuple(parse_expr(e, chart) for e in self.eta),
            xi=tuple(parse_expr(e, chart) for e in self.xi),
            phi_sign=self.phi_sign,
            name=self.name,
        )
        cand = SolitonCandidate(S, parse_expr(self.psi, chart)) if self.psi is not None else None
        return S, cand


def _num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


_INDEXED = {
    "metric": re.compile(r"g\[(\d+)\]\[(\d+)\]$"),
    "eta": re.compile(r"eta\[(\d+)\]$"),
    "xi": re.compile(r"xi\[(\d+)\]$"),
}


def parse_manifold_text(text: str, source: str = "<text>") -> ManifoldFile:
    section = None
    header: dict[str, tuple[str, int]] = {}
    domain: dict[str, tuple[str, int, int]] = {}
    entries: dict[str, dict] = {"metric": {}, "eta": {}, "xi": {}}
    psi = None
    flags: dict[str, tuple[str, int]] = {}

    def err(msg, line, col=1):
        return ManifoldFormatError(msg, line, col, source)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        col0 = len(raw) - len(raw.lstrip()) + 1
        m = re.match(r"\[(\w+)\]\s*(.*)$", stripped)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise err(f"unknown section [{section}]", lineno, col0)
            rest = m.group(2)
            if not rest:
                continue
            if section not in ("manifold", "domain", "flags"):
                raise err(f"section [{section}] takes one entry per line", lineno, col0)
            stripped = rest
            col0 = raw.index(rest) + 1
        if section is None:
            raise err("entry before any section header", lineno, col0)

        if section in ("manifold", "domain", "flags"):
            for tm in re.finditer(r"\S+", stripped):
                tok, col = tm.group(), col0 + tm.start()
                if "=" not in tok:
                    raise err(f"expected key=value, got {tok!r}", lineno, col)
                key, val = tok.split("=", 1)
                if section == "manifold":
                    if key not in ("name", "n", "coords"):
                        raise err(f"unknown key {key!r} in [manifold]", lineno, col)
                    header[key] = (val, lineno)
                elif section == "domain":
                    domain[key] = (val, lineno, col)
                else:
                    if key != "phi_sign":
                        raise err(f"unknown flag {key!r}", lineno, col)
                    flags[key] = (val, lineno)
            continue

        if "=" not in stripped:
            raise err("expected key=expression", lineno, col0)
        key, val = stripped.split("=", 1)
        key = key.strip()
        vcol = col0 + stripped.index("=") + 1
        vcol += len(val) - len(val.lstrip())
        val = val.strip()
        if section == "potential":
            if key != "psi":
                raise err(f"unknown key {key!r} in [potential]", lineno, col0)
            psi = (val, lineno, vcol)
            continue
        km = _INDEXED[section].match(key)
        if not km:
            raise err(f"malformed key {key!r} in [{section}]", lineno, col0)
        idx = tuple(int(g) - 1 for g in km.groups())
        if idx in entries[section]:
            raise err(f"duplicate entry {key}", lineno, col0)
        entries[section][idx] = (val, lineno, vcol)

    for key in ("name", "n", "coords"):
        if key not in header:
            raise err(f"[manifold] is missing {key}=", 0)
    name = header["name"][0]
    try:
        n = int(header["n"][0])
    except ValueError:
        raise err(f"n must be an integer, got {header['n'][0]!r}", header["n"][1]) from None
    if n < 1:
        raise err("n must be positive", header["n"][1])
    coords = tuple(c for c in header["coords"][0].split(",") if c)
    d = 2 * n + 1
    if len(coords) != d:
        raise DimensionMismatchError(f"n={n} needs {d} coordinates, got {len(coords)}", header["coords"][1], 1, source)
    try:
        chart = Chart(coords)
    except ValueError as exc:
        raise err(str(exc), header["coords"][1]) from None

    box = []
    for c in coords:
        if c not in domain:
            raise err(f"[domain] has no interval for {c}", 0)
        val, ln, col = domain.pop(c)
        bm = re.fullmatch(r"([-+0-9.eE]+)\.\.([-+0-9.eE]+)", val)
        try:
            lo, hi = float(bm.group(1)), float(bm.group(2))
        except (AttributeError, ValueError):
            raise err(f"bad interval {val!r}", ln, col) from None
        if not lo < hi:
            raise err(f"empty interval {val!r}", ln, col)
        box.append((lo, hi))
    if domain:
        key, (_, ln, col) = next(iter(domain.items()))
        raise err(f"[domain] names undeclared coordinate {key!r}", ln, col)

    def check_expr(val, ln, col):
        try:
            parse_expr(val, chart)
        except ExprSyntaxError as exc:
            raise ManifoldFormatError(f"{exc}", ln, col + exc.offset, source) from None
        except ExprError as exc:
            off = getattr(exc, "offset", 0)
            raise ManifoldFormatError(f"{exc}", ln, col + off, source) from None
        return val

    metric = {}
    for (i, j), (val, ln, col) in entries["metric"].items():
        if not (0 <= i < d and 0 <= j < d):
            raise DimensionMismatchError(f"metric index g[{i + 1}][{j + 1}] out of range for dimension {d}", ln, 1, source)
        if i > j:
            raise err(f"lower-triangle entry g[{i + 1}][{j + 1}]; give the upper triangle only", ln)
        metric[i, j] = check_expr(val, ln, col)
    missing = [(i, j) for i in range(d) for j in range(i, d) if (i, j) not in metric]
    if missing:
        i, j = missing[0]
        raise DimensionMismatchError(f"metric is missing g[{i + 1}][{j + 1}] (upper triangle of a {d}x{d} table required)", 0, 0, source)

    vecs = {}
    for sec in ("eta", "xi"):
        comps = entries[sec]
        for (i,), (_, ln, _) in comps.items():
            if not 0 <= i < d:
                raise DimensionMismatchError(f"{sec}[{i + 1}] out of range for dimension {d}", ln, 1, source)
        if len(comps) != d:
            raise DimensionMismatchError(f"[{sec}] needs {d} components, got {len(comps)}", 0, 0, source)
        vecs[sec] = tuple(check_expr(*comps[(i,)]) for i in range(d))

    phi_sign = 1
    if "phi_sign" in flags:
        val, ln = flags["phi_sign"]
        if val not in ("+1", "1", "-1"):
            raise err(f"phi_sign must be +1 or -1, got {val!r}", ln)
        phi_sign = -1 if val == "-1" else 1

    return ManifoldFile(
        name=name, n=n, coords=coords, box=tuple(box), metric=metric,
        eta=vecs["eta"], xi=vecs["xi"],
        psi=check_expr(*psi) if psi else None, phi_sign=phi_sign,
    )


@dataclass
class LoadedManifold:
    structure: SasakianStructure
    candidate: SolitonCandidate | None
    source: ManifoldFile
    warnings: list[str] = field(default_factory=list)


def load_manifold(path, check_points: int = 20, tol: float = 1e-8) -> LoadedManifold:
    """Parse, build and axiom-check a manifold file; axiom failures only warn."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ManifoldFormatError(f"not valid UTF-8: {exc}", 0, 0, str(path)) from None
    mf = parse_manifold_text(text, str(path))
    S, cand = mf.build()
    notes = []
    try:
        report = check_sasakian_axioms(S, sample_points(S, check_points, seed=0), tol)
        if not report.passed:
            notes.append("Sasakian axioms fail: " + ", ".join(report.failures()))
    except (ArithmeticError, ValueError) as exc:
        notes.append(f"axiom check could not run: {exc}")
    for note in notes:
        warnings.warn(f"{path}: {note}", stacklevel=2)
    return LoadedManifold(S, cand, mf, notes)


def sample_box(S: SasakianStructure) -> np.ndarray:
    box = np.array(S.chart.box if S.chart.box is not None else [(-1.0, 1.0)] * S.dim, dtype=float)
    return np.column_stack([box[:, 0] + SAMPLE_MARGIN, box[:, 1] - SAMPLE_MARGIN])


def sample_points(S: SasakianStructure, count: int, seed: int = 0) -> np.ndarray:
    """Seeded uniform sample inside the domain box shrunk by the boundary margin."""
    box = sample_box(S)
    rng = np.random.default_rng(seed)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, S.dim))


# -- shipped fixtures ----------------------------------------------------------


@dataclass
class Fixture:
    name: str
    structure: SasakianStructure
    candidate: SolitonCandidate | None
    source: ManifoldFile
    minimal_length: float = float("inf")   # geodesics shorter than this are minimizing
    notes: dict = field(default_factory=dict)


def _sphere_file(n: int) -> ManifoldFile:
    d = 2 * n + 1
    u = [f"u{i + 1}" for i in range(d)]
    s = "(" + "+".join(f"{c}^2" for c in u) + ")"
    conf = f"4/(1+{s})^2"
    w = u[-1]
    xi = []
    for i in range(n):
        a, b = u[2 * i], u[2 * i + 1]
        xi += [f"-{b}+{a}*{w}", f"{a}+{b}*{w}"]
    xi.append(f"(1-{s})/2+{w}^2")
    metric = {(i, j): (conf if i == j else "0") for i in range(d) for j in range(i, d)}
    return ManifoldFile(
        name=f"sphere{d}", n=n, coords=tuple(u), box=((-2.0, 2.0),) * d, metric=metric,
        eta=tuple(f"{conf}*({x})" for x in xi), xi=tuple(xi),
        psi=_fraction(n * (2 * n + 1), 2 * n - 1),
    )


def _fraction(p: int, q: int) -> str:
    return str(p // q) if p % q == 0 else f"{p}/{q}"


def _dhom_file(a: float) -> ManifoldFile:
    base = _sphere_file(1)
    d = base.dim
    A = _num(a)
    metric = {}
    for (i, j), gij in base.metric.items():
        metric[i, j] = f"{A}*({gij})+({A}^2-{A})*({base.eta[i]})*({base.eta[j]})"
    return ManifoldFile(
        name=f"sphere3.dhom({A})", n=1, coords=base.coords, box=base.box, metric=metric,
        eta=tuple(f"{A}*({e})" for e in base.eta), xi=tuple(f"({x})/{A}" for x in base.xi),
    )


def _heisenberg_file(n: int, c: str | None) -> ManifoldFile:
    d = 2 * n + 1
    xs = [f"x{i + 1}" for i in range(n)]
    ys = [f"y{i + 1}" for i in range(n)]
    coords = tuple(v for pair in zip(xs, ys) for v in pair) + ("z",)
    # eta = (dz - sum y dx)/2, g = (dx^2 + dy^2)/4 + eta (x) eta, xi = 2 d/dz
    eta = ["0"] * d
    for i in range(n):
        eta[2 * i] = f"-{ys[i]}/2"
    eta[-1] = "1/2"
    metric = {}
    for i in range(d):
        for j in range(i, d):
            flat = "1/4" if (i == j and i < d - 1) else "0"
            ei, ej = eta[i], eta[j]
            if ei == "0" or ej == "0":
                metric[i, j] = flat
            else:
                prod = f"({ei})*({ej})"
                metric[i, j] = prod if flat == "0" else f"{flat}+{prod}"
    xi = ["0"] * (d - 1) + ["2"]
    psi = None
    if c is not None:
        psi = f"{c}*(" + "+".join(f"{v}^2" for v in coords[:-1]) + ")"
    return ManifoldFile(
        name=f"heisenberg{d}", n=n, coords=coords, box=((-2.0, 2.0),) * d, metric=metric,
        eta=tuple(eta), xi=tuple(xi), psi=psi,
    )


def solve_gaussian_coefficient(S: SasakianStructure, points) -> tuple[float, float]:
    """Least-squares c making Ric_jk - 2n g_jk + c * Hess(|w|^2)_jk vanish on D.

    Returns (c, max residual at the optimum).
    """
    coords = S.chart.names[:-1]
    q = parse_expr("+".join(f"{v}^2" for v in coords), S.chart)
    sample = StructureSample(S, points, order=2, psi=q)
    h = sample.h
    base = sample.RicD - 2 * S.n * np.eye(2 * S.n)
    H = sample.Hpsi[:, h, h]
    c = -float(np.sum(base * H) / np.sum(H * H))
    resid = base + c * H
    return c, float(np.max(np.sqrt(np.sum(resid.reshape(len(resid), -1) ** 2, axis=1))))


def _heisenberg_fixture(n: int) -> Fixture:
    S0, _ = _heisenberg_file(n, None).build()
    c, res = solve_gaussian_coefficient(S0, sample_points(S0, 32, seed=0))
    mf = _heisenberg_file(n, repr(c))
    S, cand = mf.build()
    return Fixture(mf.name, S, cand, mf, notes={"gaussian_coefficient": c, "coefficient_residual": res})


def _from_file(mf: ManifoldFile, minimal_length: float = float("inf")) -> Fixture:
    S, cand = mf.build()
    return Fixture(mf.name, S, cand, mf, minimal_length=minimal_length)


FIXTURES = {
    "sphere3": "round 3-sphere, stereographic chart, Hopf Reeb field, trivial soliton psi = 3",
    "sphere5": "round 5-sphere, stereographic chart, Hopf Reeb field, trivial soliton psi = 10/3",
    "sphere3.dhom(a)": "D-homothetic deformation of sphere3 with parameter a > 0 (eta-Einstein)",
    "heisenberg3": "Heisenberg group, transversely flat, Gaussian potential (diagnostic)",
    "heisenberg5": "5-dimensional Heisenberg group with Gaussian potential (diagnostic)",
}

_DHOM = re.compile(r"sphere3\.dhom\(([^)]*)\)$")


def fixture(name: str, a: float | None = None) -> Fixture:
    """Shipped fixture by name; the D-homothetic family takes ``a`` or ``sphere3.dhom(2)``."""
    m = _DHOM.match(name)
    if m or name == "sphere3.dhom":
        if m:
            try:
                a = float(m.group(1))
            except ValueError:
                raise UnknownFixtureError(f"bad deformation parameter in {name!r}") from None
        if a is None or not a > 0:
            raise ValueError("sphere3.dhom needs a parameter a > 0")
        return _from_file(_dhom_file(a), minimal_length=float("nan"))
    if name == "sphere3":
        return _from_file(_sphere_file(1), minimal_length=np.pi)
    if name == "sphere5":
        return _from_file(_sphere_file(2), minimal_length=np.pi)
    if name == "heisenberg3":
        return _heisenberg_fixture(1)
    if name == "heisenberg5":
        return _heisenberg_fixture(2)
    raise UnknownFixtureError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
