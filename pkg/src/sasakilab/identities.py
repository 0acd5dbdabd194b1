"""Registry of soliton identities and inequalities, evaluated as sampled residuals.

All tensor quantities are full ambient tensors evaluated on an adapted frame
(horizontal vectors first, unit Reeb vector last).  Repeated lower indices
p, q, j in a formula are summed over the horizontal part only.  Residual norms
are Frobenius norms of frame components, hence independent of the frame seed.
In the einsum strings below ``z`` is the point axis.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .expr import CoordExpr
from .sasaki import SolitonCandidate, StructureSample, check_sasakian_axioms
from .tensor import GeodesicPath, LocalGeometry, distance_estimate, expr_jets
from .jets import algebra

PASS, FAIL, UNMET = "pass", "fail", "precondition-unmet"
KINDS = ("tensor-equality", "scalar-equality", "inequality", "constancy")

# Sign of the drift term in the weighted basic Laplacian:
# Delta_{B,psi} f = Delta_B f + WEIGHT_SIGN * <grad f, grad psi>.
WEIGHT_SIGN = -1.0


@dataclass(frozen=True)
class IdentitySpec:
    id: str
    kind: str
    anchor: str         # the relation encoded, in plain notation
    order: int          # metric jet order required
    evaluate: Callable = field(repr=False, compare=False)


@dataclass
class IdentityResidualReport:
    id: str
    kind: str
    points: int
    max_residual: float
    mean_residual: float
    tolerance: float
    verdict: str
    notes: list[str] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "points": self.points,
            "max_residual": _json_float(self.max_residual),
            "mean_residual": _json_float(self.mean_residual),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "notes": list(self.notes),
            "values": {k: _json_float(v) for k, v in sorted(self.values.items())},
        }


def _json_float(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (list, tuple)):
        return [_json_float(v) for v in x]
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class _Outcome:
    residual: np.ndarray    # per point; equality residuals >= 0, inequality violations signed
    values: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    unmet: str | None = None


class IdentityContext:
    """Shared evaluation state for one candidate on one point sample."""

    def __init__(self, candidate: SolitonCandidate, points, seed: int = 0, order: int = 4,
                 lam: float | None = None, V: Sequence[CoordExpr] | None = None,
                 basic_tol: float = 1e-8):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 0 or pts.size == 0:
            raise ValueError("empty point set")
        self.candidate = candidate
        self.S = candidate.structure
        self.n = self.S.n
        self.points = pts
        self.seed = seed
        self.s = StructureSample(self.S, pts, order=order, seed=seed, psi=candidate.psi)
        self.s.require_basic(basic_tol)
        self.lam = -(2 * self.n + 2) if lam is None else float(lam)
        self.V = None if V is None else tuple(V)

    @property
    def h(self):
        return self.s.h

    @cached_property
    def Q(self):
        """R + |grad psi|^2 - (4n-2) psi, constant on a normalized soliton."""
        s = self.s
        return s.R + s.grad_psi_norm2 - (4 * self.n - 2) * s.psi

    @cached_property
    def c1(self) -> float:
        if self.candidate.c1 is not None:
            return float(self.candidate.c1)
        return float(np.mean(self.Q))

    @property
    def c2(self) -> float:
        return self.c1 / (4 * self.n - 2)

    @cached_property
    def dpsi_h(self):
        return self.s.dpsi[:, self.h]

    @cached_property
    def RicD(self):
        return self.s.Ric[:, self.h, self.h]

    @cached_property
    def RicD_norm2(self):
        return np.sum(self.RicD ** 2, axis=(1, 2))

    @cached_property
    def RicT_norm2(self):
        return np.sum(self.s.RicT ** 2, axis=(1, 2))

    @cached_property
    def lap_R(self):
        return np.trace(self.s.HR[:, self.h, self.h], axis1=1, axis2=2)

    @cached_property
    def wlap_R(self):
        return self.lap_R + WEIGHT_SIGN * np.einsum("za,za->z", self.s.dR, self.s.dpsi)

    @cached_property
    def lap_psi(self):
        return np.trace(self.s.Hpsi[:, self.h, self.h], axis1=1, axis2=2)

    @cached_property
    def Rm_h(self):
        h = self.h
        return self.s.Rm[:, h, h, h, h]

    @cached_property
    def radial(self):
        """R(e_k, grad psi, grad psi, e_i) for horizontal k, i."""
        return np.einsum("zkabi,za,zb->zki", self.Rm_h, self.dpsi_h, self.dpsi_h)

    @cached_property
    def eye(self):
        return np.eye(2 * self.n)

    def wlap_tensor(self, d2: np.ndarray, d1: np.ndarray) -> np.ndarray:
        """Weighted basic Laplacian of a tensor, restricted to D, from its covariant derivatives."""
        h = self.h
        rank = d1.ndim - 2
        lap = np.einsum("zaa...->z...", d2[(slice(None), h, h) + (h,) * rank])
        drift = np.einsum("za...,za->z...", d1[(slice(None), h) + (h,) * rank], self.dpsi_h)
        return lap + WEIGHT_SIGN * drift


def _tnorm(T: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(T.reshape(len(T), -1) ** 2, axis=1))


# -- identity bodies -----------------------------------------------------------


def _n1_i(c: IdentityContext) -> _Outcome:
    return _Outcome(_tnorm(c.RicD - 2 * c.n * c.eye + c.s.Hpsi[:, c.h, c.h]))


def _n1_ii(c: IdentityContext) -> _Outcome:
    n = c.n
    return _Outcome(np.abs(c.s.R + c.lap_psi - (4 * n * n + 2 * n)))


def _n1_iii(c: IdentityContext) -> _Outcome:
    base = c.s.dR[:, c.h] - 2 * np.einsum("zij,zj->zi", c.RicD, c.dpsi_h)
    # diagnostic: the contracted-Bianchi consequence of the transverse soliton equation
    transverse = _tnorm(base - 4 * c.dpsi_h)
    return _Outcome(_tnorm(base + 2 * c.dpsi_h), {"transverse_form_residual": float(transverse.max())})


def _n1_iv(c: IdentityContext) -> _Outcome:
    vals = {"C1": c.c1, "C2": c.c2, "C1_fitted": c.candidate.c1 is None}
    # diagnostic: spread of R + |grad psi|^2 - (4n+4) psi, the transverse first integral
    alt = c.s.R + c.s.grad_psi_norm2 - (4 * c.n + 4) * c.s.psi
    vals["transverse_form_spread"] = float(np.max(np.abs(alt - alt.mean())))
    return _Outcome(np.abs(c.Q - c.c1), vals)


def _n1_v(c: IdentityContext) -> _Outcome:
    n = c.n
    res = c.wlap_R + 2 * c.RicD_norm2 - 2 * (2 * n + 1) * c.s.R + 4 * n * (4 * n + 1)
    return _Outcome(np.abs(res))


def _n1_v_weighted(c: IdentityContext) -> _Outcome:
    n = c.n
    RT = c.s.RT
    res = c.wlap_R + 2 * c.RicT_norm2 - 2 * (2 * n + 5) * RT + 24 * n * (n + 1)
    return _Outcome(np.abs(res))


def _norm_ricD(c: IdentityContext) -> _Outcome:
    return _Outcome(np.abs(c.RicD_norm2 - (c.RicT_norm2 + 8 * c.n - 4 * c.s.RT)))


def _s1_i(c: IdentityContext) -> _Outcome:
    h = c.h
    div = np.einsum("ziijkl->zjkl", c.s.dRm[:, h, h, h, h, h])
    potential_form = div - np.einsum("zijkl,zi->zjkl", c.Rm_h, c.dpsi_h)
    dRic = c.s.dRic[:, h, h, h]                 # dRic[z, l, j, k] = R_jk,l
    bianchi_form = div - (np.einsum("zljk->zjkl", dRic) - np.einsum("zkjl->zjkl", dRic))
    ra, rb = _tnorm(potential_form), _tnorm(bianchi_form)
    vals = {"max_potential_form": float(ra.max()), "max_bianchi_form": float(rb.max())}
    return _Outcome(np.maximum(ra, rb), vals)


def _s1_ii(c: IdentityContext) -> _Outcome:
    h, n, s = c.h, c.n, c.s
    res = (np.einsum("zijkl,zj,zk->zil", c.Rm_h, c.dpsi_h, c.dpsi_h)
           + 0.5 * s.HR[:, h, h]
           + s.Hpsi[:, h, h]
           - np.einsum("zpil,zp->zil", s.dRic[:, h, h, h], c.dpsi_h)
           - 2 * n * c.RicD
           + np.einsum("zip,zpl->zil", c.RicD, c.RicD))
    return _Outcome(_tnorm(res))


def _s1_iii(c: IdentityContext) -> _Outcome:
    R = c.Rm_h
    lap = c.wlap_tensor(c.s.d2Rm, c.s.dRm)
    quad = np.einsum("zipkq,zjplq->zijkl", R, R) - np.einsum("ziplq,zjpkq->zijkl", R, R)
    res = lap - (4 * c.n - 2) * R - 2 * quad - np.einsum("zpqij,zpqkl->zijkl", R, R)
    return _Outcome(_tnorm(res))


def _s1_iv(c: IdentityContext) -> _Outcome:
    lap = c.wlap_tensor(c.s.d2Ric, c.s.dRic)
    res = lap - 4 * c.n * (c.RicD - c.eye) - 2 * np.einsum("zpq,ziplq->zil", c.RicD, c.Rm_h)
    return _Outcome(_tnorm(res))


def _s1_v(c: IdentityContext) -> _Outcome:
    shifted = c.s.psi - c.c2
    prod = c.s.R * shifted
    c3 = float(prod.min())
    vals = {"C3_candidate": c3, "C2_shift": c.c2}
    # violation > 0 means R * psi <= 0 somewhere
    return _Outcome(-prod, vals)


def _a3(c: IdentityContext) -> _Outcome:
    n = c.n
    A = c.RicD - c.eye
    B = 2 * n * c.eye - c.RicD
    res = 0.5 * c.wlap_R - np.einsum("zij,zji->z", A, B)
    return _Outcome(np.abs(res))


def _a4(c: IdentityContext) -> _Outcome:
    h, n, s = c.h, c.n, c.s
    A = c.RicD - c.eye
    B = 2 * n * c.eye - c.RicD
    rhs = (-0.5 * s.HR[:, h, h]
           + np.einsum("zij,zjk->zik", A, B)
           + np.einsum("zjik,zj->zik", s.dRic[:, h, h, h], c.dpsi_h))
    return _Outcome(_tnorm(np.swapaxes(c.radial, 1, 2) - rhs))


def _radialflat(c: IdentityContext) -> _Outcome:
    return _Outcome(_tnorm(c.radial))


def _a8(c: IdentityContext) -> _Outcome:
    n = c.n
    R = c.s.R
    RD = R - 2 * n
    trless = c.RicD - (RD / (2 * n))[:, None, None] * c.eye
    res = 0.5 * c.wlap_R + np.sum(trless ** 2, axis=(1, 2)) - (R - 4 * n) * (2 * n * (2 * n + 1) - R) / (2 * n)
    return _Outcome(np.abs(res))


def _lemma1(c: IdentityContext) -> _Outcome:
    n, s, lam = c.n, c.s, c.lam
    d = c.S.dim
    eta_frame = np.zeros(d)
    eta_frame[-1] = 1.0
    T = s.Ric + (lam + 2) * np.eye(d) - (lam + 2 * n + 2) * np.einsum("i,j->ij", eta_frame, eta_frame)
    vals = {"lambda": lam, "V": "0" if c.V is None else ",".join(str(v) for v in c.V)}
    if c.V is not None:
        T = T + 0.5 * s.F(_lie_gT(c))
    return _Outcome(_tnorm(T), vals)


def _lie_gT(c: IdentityContext) -> np.ndarray:
    """Coordinate components of L_V g^T with g^T = g - eta (x) eta."""
    s = c.s
    d = c.S.dim
    pts = c.points
    Vj = expr_jets(list(c.V), pts, 1)
    alg = algebra(d, 1)
    dV = alg.grad(Vj, 1)[0]                 # dV[z, k, i] = d_i V^k
    V = Vj[0]
    dg = alg.grad(s.geo.cut(s.geo.g, 1), 1)[0]   # dg[z, i, j, k] = d_k g_ij
    deta = alg.grad(s.geo.cut(s.eta_jet, 1), 1)[0]   # deta[z, i, k] = d_k eta_i
    g, eta = s.g, s.eta
    Lg = (np.einsum("zk,zijk->zij", V, dg)
          + np.einsum("zkj,zki->zij", g, dV)
          + np.einsum("zik,zkj->zij", g, dV))
    Leta = np.einsum("zk,zik->zi", V, deta) + np.einsum("zk,zki->zi", eta, dV)
    return Lg - np.einsum("zi,zj->zij", Leta, eta) - np.einsum("zi,zj->zij", eta, Leta)


def _cauchyschwarz(c: IdentityContext) -> _Outcome:
    n = c.n
    R = c.s.R
    gap = R ** 2 - (2 * n * c.RicD_norm2 + 4 * n * R + 12 * n * n)
    return _Outcome(gap, {"max_gap": float(gap.max())})


def _positivity(c: IdentityContext) -> _Outcome:
    R = c.s.R
    i = int(np.argmin(R))
    vals = {"min_R": float(R[i])}
    notes = []
    if R[i] < 0:
        notes.append("negative scalar curvature conflicts with the nonnegativity theorem for complete "
                     "noncompact shrinking Sasaki-Ricci solitons; see the holomorphicity residual")
    return _Outcome(-R, vals, notes)


def _gradpsi(c: IdentityContext) -> _Outcome:
    n = c.n
    base = c.s.psi + c.c2
    if np.any(base < -1e-12 * max(1.0, float(np.abs(c.s.psi).max()))):
        return _Outcome(np.zeros(len(base)), {"min_psi_plus_C2": float(base.min())},
                        unmet="psi + C2 is negative at some sampled point")
    gap = np.sqrt(c.s.grad_psi_norm2) - math.sqrt(4 * n - 2) * np.sqrt(np.clip(base, 0.0, None))
    return _Outcome(gap, {"max_gap": float(gap.max())})


def _basepoint(c: IdentityContext) -> _Outcome:
    n = c.n
    i = int(np.argmin(c.s.psi))
    val = (4 * n - 2) * c.s.psi[i] + c.c1
    upper = 4 * n * n + 2 * n
    violation = max(-val, val - upper)
    vals = {"value_at_min": float(val), "upper": float(upper), "R_at_min": float(c.s.R[i]),
            "argmin": [float(x) for x in c.points[i]]}
    return _Outcome(np.array([violation]), vals)


REGISTRY: tuple[IdentitySpec, ...] = (
    IdentitySpec("soliton.n1.i", "tensor-equality", "R_jk = 2n g_jk - psi_jk on D", 2, _n1_i),
    IdentitySpec("soliton.n1.ii", "scalar-equality", "R + Delta_B psi = 4n^2 + 2n", 2, _n1_ii),
    IdentitySpec("soliton.n1.iii", "tensor-equality", "R_,i = 2 R_ij psi_j - 2 psi_i", 3, _n1_iii),
    IdentitySpec("soliton.n1.iv", "constancy", "R + |grad psi|^2 = (4n-2) psi + C1", 2, _n1_iv),
    IdentitySpec("soliton.n1.v", "scalar-equality",
                 "Delta_B R^T + 2|Ric_D|^2 - 2(2n+1)R + 4n(4n+1) - <grad R^T, grad psi> = 0", 4, _n1_v),
    IdentitySpec("soliton.n1.v.weighted", "scalar-equality",
                 "Delta_{B,psi} R^T + 2|Ric^T|^2 - 2(2n+5)R^T + 24n(n+1) = 0", 4, _n1_v_weighted),
    IdentitySpec("norm.ricD", "scalar-equality", "|Ric_D|^2 = |Ric^T|^2 + 8n - 4R^T", 2, _norm_ricD),
    IdentitySpec("soliton.s1.i", "tensor-equality", "R_ijkl,i = R_ijkl psi_i = R_jk,l - R_jl,k", 3, _s1_i),
    IdentitySpec("soliton.s1.ii", "tensor-equality",
                 "R_ijkl psi_j psi_k + R_,il/2 + psi_il - R_il,p psi_p - 2n R_il + R_ip R_pl = 0", 4, _s1_ii),
    IdentitySpec("soliton.s1.iii", "tensor-equality",
                 "Delta_{B,psi} R_ijkl = (4n-2)R_ijkl + 2(R_ipkq R_jplq - R_iplq R_jpkq) + R_pqij R_pqkl", 4, _s1_iii),
    IdentitySpec("soliton.s1.iv", "tensor-equality",
                 "Delta_{B,psi} R_il = 4n(R_il - g_il) + 2 R_pq R_iplq", 4, _s1_iv),
    IdentitySpec("soliton.s1.v", "inequality", "R psi >= C3 > 0 with C1 = 0", 2, _s1_v),
    IdentitySpec("rigid.a3", "scalar-equality",
                 "Delta_{B,psi} R / 2 = tr((Ric_D - g^T)(2n g^T - Ric_D))", 4, _a3),
    IdentitySpec("rigid.a4", "tensor-equality",
                 "R(e_k, grad psi, grad psi, e_i) = -R_,ik/2 + (R_ij - g_ij)(2n g_jk - R_jk) + R_ik,j psi_j", 4, _a4),
    IdentitySpec("rigid.radialflat", "tensor-equality", "R(., grad psi, grad psi, .) = 0 on D", 2, _radialflat),
    IdentitySpec("rigid.a8", "scalar-equality",
                 "Delta_{B,psi} R / 2 = -|Ric_D - (R_D/2n) g^T|^2 + (R - 4n)(2n(2n+1) - R)/(2n)", 4, _a8),
    IdentitySpec("lemma1", "tensor-equality",
                 "Ric + (lambda+2) g - (lambda+2n+2) eta(x)eta + L_V g^T / 2 = 0", 2, _lemma1),
    IdentitySpec("ineq.cauchyschwarz", "inequality", "R^2 <= 2n|Ric_D|^2 + 4nR + 12n^2", 2, _cauchyschwarz),
    IdentitySpec("ineq.positivity", "inequality", "R >= 0", 2, _positivity),
    IdentitySpec("ineq.gradpsi", "inequality", "|grad psi| <= sqrt(4n-2) sqrt(psi + C2)", 2, _gradpsi),
    IdentitySpec("ineq.basepoint", "inequality", "0 <= (4n-2) psi(y) + C1 <= 4n^2 + 2n at the minimum y of psi", 2, _basepoint),
)

IDS = tuple(spec.id for spec in REGISTRY)
_BY_ID = {spec.id: spec for spec in REGISTRY}


def get_spec(identity_id: str) -> IdentitySpec:
    try:
        return _BY_ID[identity_id]
    except KeyError:
        raise KeyError(f"unknown identity {identity_id!r}") from None


def _report(spec: IdentitySpec, ctx: IdentityContext, tol: float) -> IdentityResidualReport:
    out = spec.evaluate(ctx)
    P = len(ctx.points)
    if out.unmet:
        return IdentityResidualReport(spec.id, spec.kind, P, float("nan"), float("nan"), tol, UNMET,
                                      [out.unmet] + out.notes, out.values)
    r = np.asarray(out.residual, dtype=float)
    if spec.kind == "inequality":
        worst = float(r.max())
        ok = worst <= tol
        values = dict(out.values)
        values.setdefault("margin", -worst)
        return IdentityResidualReport(spec.id, spec.kind, P, worst, float(r.mean()), tol,
                                      PASS if ok else FAIL, out.notes, values)
    worst = float(r.max())
    return IdentityResidualReport(spec.id, spec.kind, P, worst, float(r.mean()), tol,
                                  PASS if worst < tol else FAIL, out.notes, out.values)


def _axiom_gate(candidate: SolitonCandidate, points, tol: float) -> str | None:
    report = check_sasakian_axioms(candidate.structure, points, tol)
    if report.passed:
        return None
    return "Sasakian axioms fail: " + ", ".join(report.failures())


def run_identity(identity_id: str, candidate: SolitonCandidate, points, tol: float = 1e-7,
                 seed: int = 0, axiom_tol: float = 1e-8, **options) -> IdentityResidualReport:
    spec = get_spec(identity_id)
    return run_all(candidate, points, tol, seed=seed, axiom_tol=axiom_tol, ids=[spec.id], **options)[0]


def run_all(candidate: SolitonCandidate, points, tol: float = 1e-7, seed: int = 0,
            axiom_tol: float = 1e-8, ids: Sequence[str] | None = None,
            lam: float | None = None, V: Sequence[CoordExpr] | None = None) -> list[IdentityResidualReport]:
    """Evaluate registry entries in declared order.

    Raises ValueError for an empty sample and NonBasicError when psi is not
    basic; failing axioms turn every entry into precondition-unmet.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0 or pts.size == 0:
        raise ValueError("empty point set")
    selected = [spec for spec in REGISTRY if ids is None or spec.id in set(ids)]
    if ids is not None:
        for i in ids:
            get_spec(i)
    order = max((spec.order for spec in selected), default=2)
    ctx = IdentityContext(candidate, pts, seed=seed, order=order, lam=lam, V=V, basic_tol=axiom_tol)
    gate = _axiom_gate(candidate, pts, axiom_tol)
    if gate:
        return [IdentityResidualReport(spec.id, spec.kind, len(pts), float("nan"), float("nan"), tol, UNMET, [gate])
                for spec in selected]
    return [_report(spec, ctx, tol) for spec in selected]


# -- geodesic and growth checks ---------------------------------------------------


@dataclass
class SecondVariationReport:
    length: float
    lhs: float
    rhs: float
    closed_form_constant_ricci: float | None
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"length": self.length, "lhs": self.lhs, "rhs": self.rhs,
                "closed_form_constant_ricci": self.closed_form_constant_ricci,
                "passed": self.passed, "notes": list(self.notes)}


def trapezoid_test_function(t, s0: float):
    t = np.asarray(t, dtype=float)
    return np.minimum(np.minimum(t, 1.0), s0 - t).clip(0.0, None)


def second_variation_check(candidate: SolitonCandidate, geodesic: GeodesicPath,
                           minimal_length: float = float("inf"), quad_nodes: int = 24) -> SecondVariationReport:
    """Compare the weighted Ricci integral along a minimal geodesic with 2n * int (phi')^2 = 4n."""
    s0 = geodesic.length
    n = candidate.structure.n
    if not s0 > 2:
        raise ValueError(f"geodesic length {s0} must exceed 2")
    if not (math.isnan(minimal_length) or s0 < minimal_length):
        raise ValueError(f"geodesic length {s0} exceeds the minimality bound {minimal_length}")
    geo = LocalGeometry(geodesic.metric, geodesic.x, order=2)
    ric_vv = np.einsum("zij,zi,zj->z", geo.ricci[0], geodesic.v, geodesic.v)
    spline = CubicSpline(geodesic.s, ric_vv)
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    lhs = 0.0
    for a, b in ((0.0, 1.0), (1.0, s0 - 1.0), (s0 - 1.0, s0)):
        t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        lhs += 0.5 * (b - a) * float(np.sum(weights * trapezoid_test_function(t, s0) ** 2 * spline(t)))
    rhs = 4.0 * n
    closed = None
    notes = []
    if np.ptp(ric_vv) < 1e-9 * max(1.0, abs(float(ric_vv.mean()))):
        closed = float(ric_vv.mean()) * (s0 - 4.0 / 3.0)
        notes.append("Ric(v, v) constant along the path; closed form Ric(v,v) * (s0 - 4/3) reported")
    if math.isnan(minimal_length):
        notes.append("no minimality bound documented for this structure")
    return SecondVariationReport(float(s0), lhs, rhs, closed, lhs <= rhs + 1e-12, notes)


@dataclass
class GrowthReport:
    verdict: str
    base_point: list[float] | None = None
    upper_ok: bool | None = None
    lower_ok: bool | None = None
    lipschitz_ok: bool | None = None
    worst_upper_margin: float | None = None
    worst_lower_margin: float | None = None
    worst_lipschitz_margin: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "verdict", "base_point", "upper_ok", "lower_ok", "lipschitz_ok",
            "worst_upper_margin", "worst_lower_margin", "worst_lipschitz_margin", "notes")}


def potential_growth_check(candidate: SolitonCandidate, points, c1: float | None = None,
                           tol: float = 1e-9, max_points: int = 12, seed: int = 0,
                           threads: int = 1) -> GrowthReport:
    """Quadratic growth bounds and the Lipschitz bound for sqrt(psi + C2).

    Distances come from ``distance_estimate`` (an upper bound), so the lower
    bound check is advisory.  Distance estimates run on ``threads`` workers;
    results are gathered in input order.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))[:max_points]
    if len(pts) == 0:
        raise ValueError("empty point set")
    cand = candidate if c1 is None else SolitonCandidate(candidate.structure, candidate.psi, c1)
    ctx = IdentityContext(cand, pts, seed=seed, order=2)
    n = ctx.n
    if float(ctx.s.R.min()) < -tol:
        return GrowthReport(UNMET, notes=[f"scalar curvature is negative (min R = {float(ctx.s.R.min()):.6g})"])
    base = ctx.s.psi + ctx.c2
    if float(base.min()) < -tol:
        return GrowthReport(UNMET, notes=["psi + C2 is negative at some sampled point"])
    root = np.sqrt(np.clip(base, 0.0, None))
    metric = cand.structure.metric
    iy = int(np.argmin(ctx.s.psi))
    y = pts[iy]
    # pairs to the base point plus consecutive pairs keep the cost linear in len(pts)
    pairs = sorted({tuple(sorted((i, iy))) for i in range(len(pts)) if i != iy}
                   | {(i, i + 1) for i in range(len(pts) - 1)})
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        dist = list(pool.map(lambda ij: distance_estimate(metric, pts[ij[0]], pts[ij[1]]), pairs))
    D = np.zeros((len(pts), len(pts)))
    for (i, j), dij in zip(pairs, dist):
        D[i, j] = D[j, i] = dij
    d = D[:, iy]
    upper = n * (d + math.sqrt(3.0)) ** 2 - base
    lower = base - n * np.clip(d - 7.0, 0.0, None) ** 2
    lip = np.array([math.sqrt(n - 0.5) * D[i, j] - abs(root[i] - root[j]) for i, j in pairs] or [0.0])
    rep = GrowthReport(
        PASS, [float(v) for v in y],
        bool(upper.min() >= -tol), bool(lower.min() >= -tol), bool(lip.min() >= -tol),
        float(upper.min()), float(lower.min()), float(lip.min()),
        ["lower bound is advisory: distances are upper-bound estimates"],
    )
    if not (rep.upper_ok and rep.lipschitz_ok):
        rep.verdict = FAIL
    return rep
