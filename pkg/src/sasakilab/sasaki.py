"""Sasakian structures, axiom checks and transverse (foliated) quantities.

Only (g, eta, xi) are authored; phi is derived pointwise as
``phi X = -phi_sign * nabla_X xi``.  Index 2n of every adapted frame is the
Reeb direction; indices 0..2n-1 span the contact distribution D = ker eta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import CoordExpr, DomainError, eval_jet_batch
from .tensor import LocalGeometry, MetricSpec, TensorValue, expr_jets

AXIOMS = (
    "eta_xi",          # eta(xi) = 1
    "phi_xi",          # phi xi = 0
    "eta_phi",         # eta o phi = 0
    "phi_squared",     # phi^2 = -Id + xi (x) eta
    "metric_compat",   # g(phi X, phi Y) = g(X,Y) - eta(X) eta(Y)
    "d_eta",           # d eta(X,Y) = 2 g(X, phi Y)
    "killing",         # L_xi g = 0
    "ricci_xi",        # Ric(., xi) = 2n eta
    "curvature_xi",    # R(X,Y) xi = eta(Y) X - eta(X) Y
)


class NonBasicError(ValueError):
    """A function expected to be basic has xi f != 0."""


class DegenerateFrameError(ValueError):
    """Projection onto the contact distribution lost rank."""


@dataclass(frozen=True)
class SasakianStructure:
    n: int
    metric: MetricSpec
    eta: tuple[CoordExpr, ...]
    xi: tuple[CoordExpr, ...]
    phi_sign: int = 1
    name: str = ""

    def __post_init__(self):
        d = 2 * self.n + 1
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.metric.dim != d or len(self.eta) != d or len(self.xi) != d:
            raise ValueError(f"dimension mismatch: n={self.n} needs {d} coordinates")
        if self.phi_sign not in (1, -1):
            raise ValueError("phi_sign must be +1 or -1")

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def chart(self):
        return self.metric.chart


@dataclass(frozen=True)
class SolitonCandidate:
    structure: SasakianStructure
    psi: CoordExpr
    c1: float | None = None
    meta: dict = field(default_factory=dict, compare=False)


@dataclass
class HorizontalFrame:
    point: np.ndarray
    vectors: np.ndarray  # (2n, d) coordinate components


@dataclass
class AxiomReport:
    residuals: dict[str, float]
    tolerance: float
    points: int

    @property
    def passed(self) -> bool:
        return all(v < self.tolerance for v in self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v < self.tolerance]


# -- frame helpers -------------------------------------------------------------


def to_frame(T: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Covariant tensor components (P, d, ..., d) evaluated on frame vectors F (P, m, d)."""
    rank = T.ndim - 1
    for _ in range(rank):
        T = np.einsum("pai,pi...->pa...", F, T)
        T = np.moveaxis(T, 1, -1)
    return T


def cholesky_frame(g: np.ndarray) -> np.ndarray:
    """Rows form a g-orthonormal basis at each point."""
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L)


def frame_norm(T: np.ndarray, F: np.ndarray) -> np.ndarray:
    Tf = to_frame(T, F)
    return np.sqrt(np.sum(Tf.reshape(len(Tf), -1) ** 2, axis=1))


def _gram_schmidt(V: np.ndarray, g: np.ndarray) -> np.ndarray:
    """g-orthonormalise the rows of V (P, m, d) pointwise."""
    P, m, _ = V.shape
    out = np.empty_like(V)
    for a in range(m):
        v = V[:, a].copy()
        for b in range(a):
            v -= np.einsum("pi,pij,pj->p", v, g, out[:, b])[:, None] * out[:, b]
        nrm = np.sqrt(np.einsum("pi,pij,pj->p", v, g, v))
        scale = np.sqrt(np.einsum("pi,pij,pj->p", V[:, a], g, V[:, a]))
        if np.any(nrm < 1e-8 * scale):
            raise DegenerateFrameError("horizontal projection is degenerate")
        out[:, a] = v / nrm[:, None]
    return out


# -- evaluation over a point sample -------------------------------------------


class StructureSample:
    """Everything the checks need at a batch of points, computed once.

    ``order`` is the metric jet order: 2 for axioms/curvature, 4 when second
    covariant derivatives of curvature are required.
    """

    def __init__(self, S: SasakianStructure, points, order: int = 2, seed: int = 0,
                 psi: CoordExpr | None = None):
        self.S = S
        self.n = S.n
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self.points) == 0:
            raise ValueError("empty point set")
        self.seed = seed
        self.psi_expr = psi
        self.geo = LocalGeometry(S.metric, self.points, order=order)
        self.order = order
        self.P = len(self.points)
        d = S.dim
        self.xi_jet = expr_jets(list(S.xi), self.points, order)
        self.eta_jet = expr_jets(list(S.eta), self.points, order)
        self.g = self.geo.g[0]
        self.ginv = np.linalg.inv(self.g)
        self.xi = self.xi_jet[0]
        self.eta = self.eta_jet[0]
        self.eye = np.broadcast_to(np.eye(d), (self.P, d, d))

    # -- structure tensors ---------------------------------------------------

    @cached_property
    def nabla_xi(self) -> np.ndarray:
        """nabla_xi[p, a, i] = (nabla_a xi)^i."""
        return self.geo.nabla_vector(self.xi_jet)[0]

    @cached_property
    def phi(self) -> np.ndarray:
        """phi[p, i, a]: (phi X)^i = phi[i, a] X^a."""
        return -self.S.phi_sign * np.swapaxes(self.nabla_xi, 1, 2)

    @cached_property
    def d_eta(self) -> np.ndarray:
        de = self.geo.grad(self.eta_jet)[0]  # de[i, j] = d_i eta_j
        return de - np.swapaxes(de, 1, 2)

    def lower(self, V: np.ndarray) -> np.ndarray:
        return np.einsum("pij,pj->pi", self.g, V)

    # -- axioms ----------------------------------------------------------------

    def axiom_residuals(self) -> dict[str, np.ndarray]:
        n, g, xi, eta, phi = self.n, self.g, self.xi, self.eta, self.phi
        E = cholesky_frame(g)
        out = {}
        out["eta_xi"] = np.abs(np.einsum("pi,pi->p", eta, xi) - 1.0)
        out["phi_xi"] = frame_norm(self.lower(np.einsum("pia,pa->pi", phi, xi)), E)
        out["eta_phi"] = frame_norm(np.einsum("pi,pia->pa", eta, phi), E)
        phi2 = np.einsum("pij,pjk->pik", phi, phi) + self.eye - np.einsum("pi,pj->pij", xi, eta)
        out["phi_squared"] = frame_norm(np.einsum("pij,pjk->pik", g, phi2), E)
        compat = np.einsum("pki,pkl,plj->pij", phi, g, phi) - g + np.einsum("pi,pj->pij", eta, eta)
        out["metric_compat"] = frame_norm(compat, E)
        # phi_sign * phi is the default-convention phi, so the check is flag independent
        two_g_phi = 2.0 * self.S.phi_sign * np.einsum("pik,pkj->pij", g, phi)
        out["d_eta"] = frame_norm(self.d_eta - two_g_phi, E)
        gx = np.einsum("pjk,pik->pij", g, self.nabla_xi)
        out["killing"] = frame_norm(gx + np.swapaxes(gx, 1, 2), E)
        ric = self.geo.ricci[0]
        out["ricci_xi"] = frame_norm(np.einsum("pij,pj->pi", ric, xi) - 2 * n * eta, E)
        rxi = np.einsum("pijkm,pk->pijm", self.geo.riemann_up[0], xi)
        target = np.einsum("pj,im->pijm", eta, np.eye(self.S.dim)) - np.einsum("pi,jm->pijm", eta, np.eye(self.S.dim))
        out["curvature_xi"] = frame_norm(np.einsum("pijm,pml->pijl", rxi - target, g), E)
        return out

    # -- adapted frames ------------------------------------------------------

    @cached_property
    def horizontal(self) -> np.ndarray:
        """(P, 2n, d) g-orthonormal vectors in ker eta, seeded."""
        rng = np.random.default_rng(self.seed)
        raw = rng.standard_normal((2 * self.n, self.S.dim))
        V = np.broadcast_to(raw, (self.P,) + raw.shape).copy()
        V -= np.einsum("pi,pai->pa", self.eta, V)[:, :, None] * self.xi[:, None, :]
        return _gram_schmidt(V, self.g)

    @cached_property
    def frame(self) -> np.ndarray:
        """Horizontal frame with the unit Reeb vector appended as the last row."""
        xi = self.xi
        nrm = np.sqrt(np.einsum("pi,pij,pj->p", xi, self.g, xi))
        return np.concatenate([self.horizontal, (xi / nrm[:, None])[:, None, :]], axis=1)

    def F(self, T: np.ndarray) -> np.ndarray:
        return to_frame(T, self.frame)

    # -- curvature in the adapted frame --------------------------------------

    @cached_property
    def Rm(self):
        return self.F(self.geo.riemann[0])

    @cached_property
    def Ric(self):
        return self.F(self.geo.ricci[0])

    @cached_property
    def R(self):
        return self.geo.scalar[0]

    @cached_property
    def _nabla_rm(self):
        return self.geo.nabla(self.geo.riemann)

    @cached_property
    def dRm(self):
        return self.F(self._nabla_rm[0])

    @cached_property
    def d2Rm(self):
        return self.F(self.geo.nabla(self._nabla_rm)[0])

    @cached_property
    def _nabla_ric(self):
        return self.geo.nabla(self.geo.ricci)

    @cached_property
    def dRic(self):
        return self.F(self._nabla_ric[0])

    @cached_property
    def d2Ric(self):
        return self.F(self.geo.nabla(self._nabla_ric)[0])

    @cached_property
    def _grad_r(self):
        return self.geo.grad(self.geo.scalar)

    @cached_property
    def dR(self):
        return self.F(self._grad_r[0])

    @cached_property
    def HR(self):
        return self.F(self.geo.nabla(self._grad_r)[0])

    # -- potential -------------------------------------------------------------

    @cached_property
    def _psi_jet(self):
        if self.psi_expr is None:
            raise ValueError("sample has no potential")
        return eval_jet_batch(self.psi_expr, self.points, min(self.order, 2))

    @cached_property
    def psi(self):
        return self._psi_jet[0]

    @cached_property
    def _grad_psi(self):
        return self.geo.grad(self._psi_jet)

    @cached_property
    def dpsi(self):
        return self.F(self._grad_psi[0])

    @cached_property
    def Hpsi(self):
        return self.F(self.geo.nabla(self._grad_psi)[0])

    @cached_property
    def xi_psi(self):
        return np.einsum("pi,pi->p", self.xi, self._grad_psi[0])

    @cached_property
    def grad_psi_norm2(self):
        return np.einsum("pi,pij,pj->p", self._grad_psi[0], self.ginv, self._grad_psi[0])

    def require_basic(self, tol: float) -> None:
        bad = np.abs(self.xi_psi)
        if np.any(bad >= tol):
            i = int(np.argmax(bad))
            raise NonBasicError(f"potential is not basic: |xi psi| = {bad[i]:.3e} at {self.points[i].tolist()}")

    # -- transverse quantities -----------------------------------------------

    @property
    def h(self) -> slice:
        return slice(0, 2 * self.n)

    @cached_property
    def RicD(self):
        return self.Ric[:, self.h, self.h]

    @cached_property
    def RicT(self):
        return self.RicD + 2.0 * np.eye(2 * self.n)

    @cached_property
    def RT(self):
        return self.R + 2 * self.n

    @cached_property
    def J(self):
        """phi restricted to D in the horizontal frame: J[a, b] = g(e_a, phi e_b)."""
        phi_e = np.einsum("pia,pba->pbi", self.phi, self.horizontal)
        return np.einsum("pai,pij,pbj->pab", self.horizontal, self.g, phi_e)


# -- public single-structure operations -----------------------------------------


def check_sasakian_axioms(S: SasakianStructure, points, tol: float = 1e-8) -> AxiomReport:
    sample = StructureSample(S, points, order=2)
    res = sample.axiom_residuals()
    return AxiomReport({k: float(np.max(res[k])) for k in AXIOMS}, tol, sample.P)


def horizontal_frame(S: SasakianStructure, point, seed: int = 0) -> HorizontalFrame:
    sample = StructureSample(S, point, order=1, seed=seed)
    return HorizontalFrame(np.asarray(point, dtype=float), sample.horizontal[0])


def transverse_ricci(S: SasakianStructure, point, seed: int = 0) -> TensorValue:
    """Ric^T on D in a horizontal orthonormal frame (Ric + 2g restricted to D)."""
    sample = StructureSample(S, point, order=2, seed=seed)
    return TensorValue((2, 0), sample.RicT[0])


def transverse_scalar(S: SasakianStructure, point, seed: int = 0) -> float:
    sample = StructureSample(S, point, order=2, seed=seed)
    return float(np.trace(sample.RicT[0]))


def _basic_sample(f: CoordExpr, S: SasakianStructure, point, seed: int, tol: float) -> StructureSample:
    sample = StructureSample(S, point, order=2, seed=seed, psi=f)
    sample.require_basic(tol)
    return sample


def transverse_hessian(f: CoordExpr, S: SasakianStructure, point, seed: int = 0, tol: float = 1e-8) -> TensorValue:
    sample = _basic_sample(f, S, point, seed, tol)
    return TensorValue((2, 0), sample.Hpsi[0, sample.h, sample.h])


def basic_laplacian(f: CoordExpr, S: SasakianStructure, point, seed: int = 0, tol: float = 1e-8) -> float:
    sample = _basic_sample(f, S, point, seed, tol)
    return float(np.trace(sample.Hpsi[0, sample.h, sample.h]))


def weighted_basic_laplacian(f: CoordExpr, S: SasakianStructure, psi: CoordExpr, point,
                             seed: int = 0, tol: float = 1e-8) -> float:
    """Delta_B f - g(grad f, grad psi)."""
    sf = _basic_sample(f, S, point, seed, tol)
    sp = _basic_sample(psi, S, point, seed, tol)
    return float(np.trace(sf.Hpsi[0, sf.h, sf.h]) - sf.dpsi[0] @ sp.dpsi[0])


@dataclass
class HamiltonianField:
    point: np.ndarray
    horizontal: np.ndarray   # complex coordinate components of X_D
    eta_x: complex           # eta(X) = -i psi
    vector: np.ndarray       # X = X_D + eta(X) xi


def hamiltonian_field_from_potential(S: SasakianStructure, psi: CoordExpr, point,
                                     seed: int = 0, tol: float = 1e-8) -> HamiltonianField:
    """Solve psi = i eta(X), omega^T(X_D, .) = i dbar_B psi on D, omega^T = d eta / 2."""
    sample = _basic_sample(psi, S, point, seed, tol)
    E = sample.horizontal[0]
    omega = 0.5 * E @ sample.d_eta[0] @ E.T           # omega[a, b] = omega^T(e_a, e_b)
    J = sample.J[0]
    dpsi = sample.dpsi[0, sample.h]                    # dpsi(e_b)
    dpsi_J = J.T @ dpsi                                # dpsi(phi e_b), phi e_b = sum_a J[a, b] e_a
    dbar = 0.5 * (dpsi + 1j * dpsi_J)
    try:
        x = np.linalg.solve(omega.T.astype(complex), 1j * dbar)
    except np.linalg.LinAlgError:
        raise DegenerateFrameError("transverse symplectic form is singular") from None
    XD = x @ E
    eta_x = -1j * float(sample.psi[0])
    return HamiltonianField(sample.points[0], XD, eta_x, XD + eta_x * sample.xi[0])


def holomorphicity_residual(S: SasakianStructure, psi: CoordExpr, points, seed: int = 0,
                            tol: float = 1e-8) -> float:
    """Max norm of the J-anti-invariant part of the transverse Hessian of psi.

    This is the dbar-derivative of the (1,0) gradient field carried by X_D, so
    it vanishes exactly when X_D is transversely holomorphic.
    """
    sample = StructureSample(S, points, order=2, seed=seed, psi=psi)
    sample.require_basic(tol)
    H = sample.Hpsi[:, sample.h, sample.h]
    J = sample.J
    HJ = np.einsum("pab,pac,pbd->pcd", H, J, J)
    anti = 0.5 * (H - HJ)
    return float(np.max(np.sqrt(np.sum(anti.reshape(len(anti), -1) ** 2, axis=1))))


def pr1_residual(S: SasakianStructure, psi: CoordExpr, points, seed: int = 0, tol: float = 1e-8) -> float:
    """Max defect of psi = i eta(X) and omega^T(X_D, Y) = i dbar_B psi(Y), re-evaluated in coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sample = StructureSample(S, pts, order=2, seed=seed, psi=psi)
    sample.require_basic(tol)
    worst = 0.0
    for i, p in enumerate(pts):
        X = hamiltonian_field_from_potential(S, psi, p, seed=seed, tol=tol)
        E = sample.horizontal[i]
        phi = sample.phi[i]
        dpsi = sample._grad_psi[0][i]
        lhs = 0.5 * (E @ sample.d_eta[i].T @ X.horizontal)      # omega(X_D, e_b)
        dbar = 0.5 * (E @ dpsi + 1j * (E @ phi.T @ dpsi))
        gap_eq = np.max(np.abs(lhs - 1j * dbar))
        gap_psi = abs(sample.psi[i] - 1j * (sample.eta[i] @ X.vector))
        worst = max(worst, float(gap_eq), float(gap_psi))
    return worst
