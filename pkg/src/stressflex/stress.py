"""Izmestiev stresses of coned polytopes and their certificates.

The block matrix [[M, alpha], [alpha^t, b]] is recovered from the stress space of
the coned framework, not from a volume construction.  Every property the
block form should have is then checked and recorded in a
:class:`Certificate`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .errors import EmptyStressSpaceError, NoProperStressError, SpectralCertificateError
from .polytope import ConedFramework, Polytope, cone, framework_in_convex_position
from .rigidity import TOL_RANK, numerical_rank, stress_matrix, stress_space

TOL_EIG = 1e-9


def edge_roles(fw: ConedFramework) -> np.ndarray:
    """+1 for skeleton (cable) edges, -1 for cone (strut) edges.

    Roles follow the geometry, not the labels, so all-bar frameworks get the
    same treatment.
    """
    return np.array([-1.0 if fw.is_cone_edge(e) else 1.0 for e in fw.edges])


def translate_to_apex_origin(fw: ConedFramework) -> ConedFramework:
    if not np.any(fw.apex):
        return fw
    return fw.with_configuration(fw.configuration - fw.apex)


def count_signs(eigenvalues, tol_eig=TOL_EIG):
    """(negative, zero, positive) counts with |lambda| <= tol_eig*max|lambda| as zero."""
    lam = np.asarray(eigenvalues)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    cut = tol_eig * scale
    return int(np.sum(lam < -cut)), int(np.sum(np.abs(lam) <= cut)), int(np.sum(lam > cut))


def strictly_proper_check(omega, fw):
    """Per-edge verdicts: Omega_ij < 0 on cables, > 0 on struts.

    Bars carry no sign requirement.  Returns ``(ok, per_edge)`` where
    ``per_edge`` is a list of booleans aligned with ``fw.edges``.  A zero
    entry never counts as strict.
    """
    omega = np.asarray(omega)
    per_edge = []
    for e in fw.edges:
        entry = omega[e.i, e.j]
        if e.label == "cable":
            per_edge.append(bool(entry < 0))
        elif e.label == "strut":
            per_edge.append(bool(entry > 0))
        else:
            per_edge.append(bool(entry != 0))
    return all(per_edge) and len(per_edge) > 0, per_edge


@dataclass(frozen=True)
class Certificate:
    applicable: bool
    stress_dim: int
    sign_margin: float
    zero_pattern: bool
    edges_negative: bool
    annihilates_configuration: bool
    m_rank_ok: bool
    m_one_negative: bool
    alpha_positive: bool
    b_negative: bool
    block_identities: bool
    omega_rank_ok: bool
    omega_nullity_ok: bool
    omega_one_negative: bool
    strictly_proper: bool
    omega_rank: int
    omega_negative: int
    m_rank: int
    m_negative: int

    CHECKS = (
        "zero_pattern", "edges_negative", "annihilates_configuration", "m_rank_ok",
        "m_one_negative", "alpha_positive", "b_negative", "block_identities",
        "omega_rank_ok", "omega_nullity_ok", "omega_one_negative", "strictly_proper",
    )

    @property
    def passed(self) -> bool:
        return all(getattr(self, name) for name in self.CHECKS)

    def failures(self):
        return [name for name in self.CHECKS if not getattr(self, name)]

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass(frozen=True, eq=False)
class IzmestievStress:
    omega: np.ndarray
    coefficients: np.ndarray
    certificate: Certificate

    @property
    def n(self) -> int:
        return self.omega.shape[0] - 1

    @property
    def m_block(self) -> np.ndarray:
        return self.omega[:-1, :-1]

    @property
    def alpha(self) -> np.ndarray:
        return self.omega[:-1, -1]

    @property
    def b(self) -> float:
        return float(self.omega[-1, -1])


def max_margin_stress(coefficient_basis, roles):
    """Stress in the span maximising min(role_e * w_e) under sum(role_e * w_e) = 1.

    Returns ``(w, margin)``.  A positive margin means every cable coefficient
    is positive and every strut coefficient negative.
    """
    basis = np.asarray(coefficient_basis)
    s = len(basis)
    signed = basis.T * roles[:, None]  # (E, s): role_e * w_e as a function of c
    # variables (c_1..c_s, t); maximise t
    cost = np.zeros(s + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-signed, np.ones((len(roles), 1))])
    a_eq = np.append(signed.sum(axis=0), 0.0)[None, :]
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(len(roles)), A_eq=a_eq, b_eq=[1.0],
                  bounds=[(None, None)] * (s + 1), method="highs")
    if res.status != 0:
        return None, -np.inf
    c = res.x[:s]
    return c @ basis, float(res.x[-1])


def proper_stress(fw: ConedFramework, tol_rel=TOL_RANK, basis=None):
    """Best sign-proper element of the stress space, normalised.

    One-dimensional spaces are only oriented (cables positive on balance).
    Larger spaces go through :func:`max_margin_stress`.  The result is scaled
    so the smallest cable coefficient has magnitude 1, unless that is zero.
    In that case it is scaled to unit norm.

    Returns ``(w, margin, basis)``.  The margin is the smallest value of
    role * coefficient after normalisation.
    """
    if basis is None:
        basis = stress_space(fw, tol_rel)
    if basis.dim == 0:
        raise EmptyStressSpaceError("the framework has no nonzero equilibrium stress")
    roles = edge_roles(fw)
    if basis.dim == 1:
        w = basis.coefficients[0].copy()
        if np.sum(roles * w) < 0:
            w = -w
    else:
        w, _ = max_margin_stress(basis.coefficients, roles)
        if w is None:
            w = basis.coefficients[0].copy()
    cables = np.abs(w[roles > 0])
    smallest = cables.min() if cables.size else 0.0
    w = w / smallest if smallest > 0 else w / np.linalg.norm(w)
    return w, float(np.min(roles * w)), basis


def certify(fw: ConedFramework, w, stress_dim=1, tol_rel=TOL_RANK, tol_eig=TOL_EIG) -> Certificate:
    """Check every block property of the stress with coefficients ``w``."""
    fw0 = translate_to_apex_origin(fw)
    roles = edge_roles(fw0)
    omega = stress_matrix(fw0, w)
    n = fw0.cone_index
    d = fw0.dim
    m = omega[:n, :n]
    alpha = omega[:n, n]
    b = omega[n, n]
    scale = np.max(np.abs(omega))

    nonedge = np.ones((n, n), dtype=bool)
    np.fill_diagonal(nonedge, False)
    for e in fw0.edges:
        if not fw0.is_cone_edge(e):
            nonedge[e.i, e.j] = nonedge[e.j, e.i] = False
    zero_pattern = bool(np.all(m[nonedge] == 0.0))
    skeleton = [e for e in fw0.edges if not fw0.is_cone_edge(e)]
    edges_negative = all(m[e.i, e.j] < 0 for e in skeleton)

    p = fw0.base
    annihilates = bool(np.max(np.abs(m @ p)) <= tol_rel * scale * np.max(np.abs(p)) * (n + 1))
    ones = np.ones(n)
    block_ok = bool(
        np.max(np.abs(alpha + m.T @ ones)) <= tol_rel * scale * n
        and abs(b - ones @ m @ ones) <= tol_rel * scale * n * n
    )

    lam_m = np.linalg.eigvalsh(m)
    lam_o = np.linalg.eigvalsh(omega)
    m_rank = numerical_rank(np.sort(np.abs(lam_m))[::-1], tol_eig).rank
    o_rank = numerical_rank(np.sort(np.abs(lam_o))[::-1], tol_eig).rank
    m_neg = count_signs(lam_m, tol_eig)[0]
    o_neg = count_signs(lam_o, tol_eig)[0]

    return Certificate(
        applicable=framework_in_convex_position(fw0),
        stress_dim=int(stress_dim),
        sign_margin=float(np.min(roles * w)),
        zero_pattern=zero_pattern,
        edges_negative=bool(edges_negative),
        annihilates_configuration=annihilates,
        m_rank_ok=m_rank == n - d,
        m_one_negative=m_neg == 1,
        alpha_positive=bool(np.all(alpha > 0)),
        b_negative=bool(b < 0),
        block_identities=block_ok,
        omega_rank_ok=o_rank == n - d,
        omega_nullity_ok=(n + 1 - o_rank) == d + 1,
        omega_one_negative=o_neg == 1,
        strictly_proper=strictly_proper_check(omega, _as_tensegrity(fw0))[0],
        omega_rank=o_rank,
        omega_negative=o_neg,
        m_rank=m_rank,
        m_negative=m_neg,
    )


def _as_tensegrity(fw):
    edges = tuple((e.i, e.j, "strut" if fw.is_cone_edge(e) else "cable") for e in fw.edges)
    return ConedFramework(fw.configuration, edges, cone_index=fw.cone_index, faces=fw.faces)


def izmestiev_stress(fw: ConedFramework, tol_rel=TOL_RANK, tol_eig=TOL_EIG,
                     strict=True) -> IzmestievStress:
    """Recover and certify the Izmestiev stress of a coned framework.

    With ``strict`` (the default) a sign-improper result raises
    :class:`NoProperStressError`, and a failed spectral or rank check raises
    :class:`SpectralCertificateError`.  The exception's ``stress`` attribute
    holds the certified object.  With ``strict=False`` the object is
    returned and failure shows up in ``certificate.passed``.  An empty
    stress space always raises.
    """
    fw0 = translate_to_apex_origin(fw)
    w, margin, basis = proper_stress(fw0, tol_rel)
    cert = certify(fw0, w, basis.dim, tol_rel, tol_eig)
    result = IzmestievStress(stress_matrix(fw0, w), w, cert)
    if strict:
        if margin <= 0:
            raise NoProperStressError(
                f"no sign-proper stress in the {basis.dim}-dimensional stress space", result)
        if not cert.passed:
            raise SpectralCertificateError(
                "certificate failed: " + ", ".join(cert.failures()), result)
    return result


class WachspressResult(NamedTuple):
    alpha: np.ndarray
    total: float


def wachspress(poly: Polytope, point) -> WachspressResult:
    """Unnormalised Wachspress coordinates of ``point`` in ``poly``.

    ``total`` is ``-b`` as assembled, which equals ``alpha.sum()``.
    """
    stress = izmestiev_stress(cone(poly, point))
    return WachspressResult(stress.alpha.copy(), -stress.b)
