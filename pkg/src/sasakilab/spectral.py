"""Ricci-operator spectra, scalar-curvature quantization and rigidity verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import parse_expr
from .sasaki import SasakianStructure, SolitonCandidate, StructureSample

VERDICTS = ("SasakiEinstein", "RigidByCriterion1", "RigidByCriterion2",
            "NonexistentByTheory", "ViolatesPositivity", "Indeterminate")


@dataclass
class SpectrumReport:
    point: list[float]
    eigenvalues: list[float]
    clusters: list[tuple[float, int]]
    rank_ric_minus_g: int
    in_range_1_2n: bool
    rank_threshold: float
    gap: tuple[float, float]        # (largest |lambda - 1| counted as zero, smallest counted as nonzero)
    xi_alignment: float             # norm of the projection of xi onto the 2n-eigenspace

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "eigenvalues": self.eigenvalues,
            "clusters": [[v, m] for v, m in self.clusters],
            "rank_ric_minus_g": self.rank_ric_minus_g,
            "in_range_1_2n": self.in_range_1_2n,
            "rank_threshold": self.rank_threshold,
            "gap": [_nullable(g) for g in self.gap],
            "xi_alignment": self.xi_alignment,
        }


def _nullable(x: float):
    return x if math.isfinite(x) else None


def cluster_values(values: Sequence[float], tol: float) -> list[tuple[float, int]]:
    """Group sorted values whose consecutive gaps are below ``tol``."""
    vals = sorted(values)
    groups: list[list[float]] = []
    for v in vals:
        if groups and v - groups[-1][-1] <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(float(np.mean(g)), len(g)) for g in groups]


def _spectrum_from_matrix(ric: np.ndarray, n: int, point, cluster_tol: float) -> SpectrumReport:
    """``ric`` is the Ricci form on an adapted orthonormal frame (Reeb vector last)."""
    w, v = np.linalg.eigh(0.5 * (ric + ric.T))
    scale = max(1.0, float(np.max(np.abs(w))))
    thr = cluster_tol * scale
    dev = np.abs(w - 1.0)
    rank = int(np.sum(dev > thr))
    below = dev[dev <= thr]
    above = dev[dev > thr]
    gap = (float(below.max()) if below.size else float("nan"), float(above.min()) if above.size else float("nan"))
    in_range = bool(np.all(w >= 1.0 - thr) and np.all(w <= 2 * n + thr))
    top = np.abs(w - 2 * n) <= thr
    align = float(np.sqrt(np.sum(v[-1, top] ** 2))) if np.any(top) else 0.0
    return SpectrumReport(
        point=[float(x) for x in point],
        eigenvalues=[float(x) for x in w],
        clusters=cluster_values(w, thr),
        rank_ric_minus_g=rank,
        in_range_1_2n=in_range,
        rank_threshold=thr,
        gap=gap,
        xi_alignment=align,
    )


def ricci_spectra(S: SasakianStructure, points, cluster_tol: float = 1e-5, seed: int = 0) -> list[SpectrumReport]:
    sample = StructureSample(S, points, order=2, seed=seed)
    return [_spectrum_from_matrix(sample.Ric[i], S.n, sample.points[i], cluster_tol) for i in range(sample.P)]


def ricci_spectrum(S: SasakianStructure, point, cluster_tol: float = 1e-5, seed: int = 0) -> SpectrumReport:
    return ricci_spectra(S, np.atleast_2d(point), cluster_tol, seed)[0]


def quantized_values(n: int) -> list[int]:
    return [(2 * n - 1) * k + (2 * n + 1) for k in range(1, 2 * n + 2)]


def quantize_scalar(R: float, n: int, tol: float = 1e-6) -> int | None:
    """The k in 1..2n+1 with R = (2n-1)k + 2n+1 within ``tol``, else None."""
    hits = [k for k, q in enumerate(quantized_values(n), start=1) if abs(R - q) < tol]
    return hits[0] if len(hits) == 1 else None


def rigidity_certificate(R: float, n: int, k: int) -> float:
    """Closed-form sum over the rank-k eigenvalues of (R_j - 2n)^2; negative means inconsistent."""
    if not 1 <= k <= 2 * n + 1:
        raise ValueError(f"k must lie in 1..{2 * n + 1}, got {k}")
    return (2 * n - 1) * ((2 * n - 1) * k + (2 * n + 1) - R)


@dataclass
class EigenPair:
    R1: float
    R2: float
    in_range: bool


def eigenvalue_system_solve(R: float, n: int, k1: int, k2: int, mult_2n: int = 1,
                            mult_one: int = 1, range_tol: float = 1e-12) -> list[EigenPair]:
    """Real solutions (R1, R2) of the power-sum system for two extra Ricci eigenvalues.

    k1 R1 + k2 R2 = R - 2n*mult_2n - mult_one
    k1 R1^2 + k2 R2^2 = |Ric|^2 - 4n^2*mult_2n - mult_one, with |Ric|^2 = (2n+1)R - 4n^2 - 2n.
    The defaults mult_2n = mult_one = 1 give the two-seat bookkeeping.
    """
    if k1 < 1 or k2 < 1:
        raise ValueError("multiplicities k1 and k2 must be at least 1")
    if mult_2n < 1 or mult_one < 0:
        raise ValueError("the 2n-eigenvalue needs multiplicity >= 1 and the 1-eigenvalue >= 0")
    if k1 + k2 + mult_2n + mult_one > 2 * n + 1:
        raise ValueError(f"k1 + k2 + {mult_2n + mult_one} exceeds the dimension {2 * n + 1}")
    s1 = R - 2 * n * mult_2n - mult_one
    s2 = (2 * n + 1) * R - 4 * n * n - 2 * n - 4 * n * n * mult_2n - mult_one
    a = k1 * (k1 + k2)
    b = -2.0 * s1 * k1
    c = s1 * s1 - s2 * k2
    disc = b * b - 4 * a * c
    scale = max(1.0, b * b, abs(4 * a * c))
    if disc < -1e-13 * scale:
        return []
    if abs(disc) <= 1e-13 * scale:
        roots = [-b / (2 * a)]
    else:
        sq = math.sqrt(disc)
        # stable pair of roots
        q = -0.5 * (b + math.copysign(sq, b))
        roots = sorted({q / a, c / q} if q != 0 else {sq / (2 * a), -sq / (2 * a)})
    out = []
    for r1 in roots:
        r2 = (s1 - k1 * r1) / k2
        ok = all(1 - range_tol <= r <= 2 * n + range_tol for r in (r1, r2))
        out.append(EigenPair(float(r1), float(r2), ok))
    return out


@dataclass
class ExtremalNote:
    R: float
    n: int
    k: int | None
    case: str
    message: str

    def to_dict(self) -> dict:
        return {"R": self.R, "n": self.n, "k": self.k, "case": self.case, "message": self.message}


def extremal_value_report(R: float, n: int, tol: float = 1e-6) -> ExtremalNote:
    k = quantize_scalar(R, n, tol)
    if abs(R - (4 * n * n + 2 * n)) < tol:
        return ExtremalNote(R, n, k, "k=2n+1",
                            f"Sasaki-Einstein (k=2n+1 extremal): expect Ric^T = {2 * n + 2} g^T")
    if abs(R - (4 * n * n + 1)) < tol:
        return ExtremalNote(R, n, k, "k=2n",
                            "Sasaki-Einstein (k=2n extremal): expect sum (R_j - 2n)^2 = 0")
    if abs(R - 4 * n) < tol:
        return ExtremalNote(R, n, k, "k=1", "nonexistent; would force Ric^T=3g^T")
    return ExtremalNote(R, n, k, "none", "not an extremal value")


@dataclass
class Verdict:
    kind: str
    route: str | None = None
    evidence: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def line(self) -> str:
        ev = self.evidence
        parts = []
        if ev.get("rank") is not None:
            parts.append(f"rank={ev['rank']}")
        if ev.get("R_mean") is not None:
            parts.append(f"R={_short(ev['R_mean'])}")
        if ev.get("k") is not None:
            parts.append(f"k={ev['k']}")
        tail = f" ({', '.join(parts)})" if parts else ""
        return f"{self.kind}{tail}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "route": self.route, "line": self.line(),
                "evidence": {k: self.evidence[k] for k in sorted(self.evidence)}, "notes": list(self.notes)}


def _short(x: float) -> str:
    r = round(x)
    return str(int(r)) if abs(x - r) < 1e-6 else f"{x:.6g}"


@dataclass
class ClassifyTolerances:
    constancy: float = 1e-6     # relative stddev of R
    quantize: float = 1e-6
    cluster: float = 1e-5
    identity: float = 1e-7
    positivity: float = 1e-9


def classify_evidence(n: int, R_values: Sequence[float], spectra: Sequence[SpectrumReport] | None = None,
                      soliton_ok: bool = True, positivity_min: float | None = None,
                      tols: ClassifyTolerances | None = None, extra: dict | None = None) -> Verdict:
    """Decision tree on precomputed evidence.

    The rank and eigenvalue-range routes apply only to samples that satisfy
    the soliton equation with quantized constant R whose k matches the rank.
    """
    t = tols or ClassifyTolerances()
    R = np.asarray(R_values, dtype=float)
    if R.size == 0:
        raise ValueError("no scalar curvature samples")
    mean = float(R.mean())
    spread = float(R.std())
    constant = spread < t.constancy * max(1.0, abs(mean))
    k = quantize_scalar(mean, n, t.quantize) if constant else None
    ev = {"R_mean": mean, "R_std": spread, "constant_R": constant, "k": k,
          "soliton_equation": soliton_ok, "rank": None, "rank_constant": None,
          "eigen_in_range": None, "positivity_min": positivity_min}
    if extra:
        ev.update(extra)
    notes: list[str] = []
    if spectra:
        ranks = sorted({s.rank_ric_minus_g for s in spectra})
        ev["rank_constant"] = len(ranks) == 1
        ev["rank"] = ranks[0] if len(ranks) == 1 else None
        ev["ranks_seen"] = ranks
        ev["eigen_in_range"] = all(s.in_range_1_2n for s in spectra)
    if constant and k == 1:
        note = extremal_value_report(mean, n, t.quantize)
        return Verdict("NonexistentByTheory", None, ev, [note.message])
    if constant and k is not None and soliton_ok and spectra:
        if ev["rank_constant"] and ev["rank"] == k:
            ev["certificate"] = rigidity_certificate(mean, n, k)
            notes.append(extremal_value_report(mean, n, t.quantize).message)
            return Verdict("SasakiEinstein", "RigidByCriterion2", ev, notes)
        if ev["eigen_in_range"]:
            return Verdict("SasakiEinstein", "RigidByCriterion1", ev, notes)
    if positivity_min is not None and positivity_min < -t.positivity:
        notes.append("scalar curvature is negative on the sample")
        return Verdict("ViolatesPositivity", None, ev, notes)
    if not soliton_ok:
        notes.append("soliton equation fails on the sample; rigidity criteria not applicable")
    elif constant and k is None:
        notes.append("constant scalar curvature outside the quantized set")
    return Verdict("Indeterminate", None, ev, notes)


def classify(candidate: SolitonCandidate | SasakianStructure, points, tols: ClassifyTolerances | None = None,
             seed: int = 0) -> Verdict:
    t = tols or ClassifyTolerances()
    notes = []
    if isinstance(candidate, SasakianStructure):
        S = candidate
        candidate = SolitonCandidate(S, parse_expr("0", S.chart))
        notes.append("no potential supplied; psi = 0 used")
    S = candidate.structure
    n = S.n
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    # sort for reshuffle invariance of everything derived from the sample
    pts = pts[np.lexsort(pts.T[::-1])]
    sample = StructureSample(S, pts, order=2, seed=seed, psi=candidate.psi)
    sample.require_basic(t.identity)
    h = sample.h
    sol = np.sqrt(np.sum((sample.RicD - 2 * n * np.eye(2 * n) + sample.Hpsi[:, h, h]) ** 2, axis=(1, 2)))
    soliton_ok = bool(sol.max() < t.identity)
    spectra = [_spectrum_from_matrix(sample.Ric[i], n, pts[i], t.cluster) for i in range(sample.P)]
    radial = np.einsum("zkabi,za,zb->zki", sample.Rm[:, h, h, h, h], sample.dpsi[:, h], sample.dpsi[:, h])
    lam = np.trace(sample.RicT, axis1=1, axis2=2) / (2 * n)
    aniso = np.sqrt(np.sum((sample.RicT - lam[:, None, None] * np.eye(2 * n)) ** 2, axis=(1, 2)))
    eta_einstein = bool(aniso.max() < t.identity and np.ptp(lam) < t.constancy * max(1.0, abs(float(lam.mean()))))
    extra = {
        "soliton_residual": float(sol.max()),
        "radialflat_residual": float(np.sqrt(np.sum(radial ** 2, axis=(1, 2))).max()),
        "eta_einstein": eta_einstein,
        "transverse_einstein_constant": float(lam.mean()) if eta_einstein else None,
    }
    v = classify_evidence(n, sample.R, spectra, soliton_ok, float(sample.R.min()), t, extra)
    if eta_einstein:
        c = float(lam.mean())
        what = "transversely Einstein" if abs(c - (2 * n + 2)) < 1e-6 else "eta-Einstein, not Einstein"
        v.notes.append(f"Ric^T = {_short(c)} g^T constant over the sample ({what})")
    v.notes[:0] = notes
    return v
