"""Stress-flex residuals, the one-negative-eigenvalue lemma, and stability verdicts.

Residual verdicts use two thresholds: relative residuals at or below
``HOLD_THRESHOLD`` count as the condition holding and those above
``FAIL_THRESHOLD`` as failing.  Anything between is inconclusive.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import CertificationError, GeometryError, InputError, StressFlexError
from .polytope import (
    ConedFramework,
    Framework,
    Polytope,
    choose_apex,
    cone,
    framework_in_convex_position,
    make_named,
    random_simple_polytope,
)
from .rigidity import (
    TOL_RANK,
    FlexBasis,
    StressBasis,
    flex_space,
    numerical_rank,
    stress_matrix,
    stress_space,
)
from .stress import TOL_EIG, count_signs, izmestiev_stress, proper_stress, strictly_proper_check

HOLD_THRESHOLD = 1e-8
FAIL_THRESHOLD = 1e-3
TOL_PD = 1e-9
TOL_LEMMA = 1e-10


def classify_residual(relative, hold=HOLD_THRESHOLD, fail=FAIL_THRESHOLD) -> str:
    if relative <= hold:
        return "holds"
    if relative > fail:
        return "fails"
    return "inconclusive"


def worst_verdict(verdicts) -> str:
    order = {"vacuous": 0, "holds": 1, "inconclusive": 2, "fails": 3}
    verdicts = list(verdicts)
    return max(verdicts, key=order.__getitem__) if verdicts else "vacuous"


# -- stress-flex condition -------------------------------------------------------

class Residual(NamedTuple):
    vector: np.ndarray
    relative: float


def _check_shapes(omega, flex):
    omega = np.asarray(omega, dtype=float)
    flex = np.asarray(flex, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise InputError(f"stress matrix must be square, got {omega.shape}")
    if flex.ndim == 1:
        flex = flex.reshape(omega.shape[0], -1)
    if flex.ndim != 2 or flex.shape[0] != omega.shape[0]:
        raise InputError(f"flex of shape {flex.shape} does not match stress of shape {omega.shape}")
    return omega, flex


def stress_flex_residual(omega, flex, fw=None) -> Residual:
    """Apex row of Omega @ flex, and its norm relative to |Omega|_F |flex|_F."""
    omega, flex = _check_shapes(omega, flex)
    row = fw.cone_index if isinstance(fw, ConedFramework) else omega.shape[0] - 1
    r = omega[row] @ flex
    scale = np.linalg.norm(omega) * np.linalg.norm(flex)
    rel = float(np.linalg.norm(r) / scale) if scale > 0 else 0.0
    return Residual(r, rel)


def prestress_energy(omega, flex) -> float:
    """tr(flex^t Omega flex)."""
    omega, flex = _check_shapes(omega, flex)
    return float(np.trace(flex.T @ omega @ flex))


# -- lemma on one negative eigenvalue ------------------------------------------------

@dataclass(frozen=True)
class LemmaReport:
    status: str  # "satisfied", "violated", "not_applicable"
    value: float
    normalized_value: float
    one_negative: bool
    corner_negative: bool
    last_entry_zero: bool
    last_entry: float

    @property
    def hypotheses_hold(self) -> bool:
        return self.one_negative and self.corner_negative and self.last_entry_zero


def check_lemma_psd(omega, x, tol_eig=TOL_EIG, tol_hyp=1e-9, tol_value=TOL_LEMMA,
                    eigenvalues=None) -> LemmaReport:
    """Check x^t Omega x >= 0 when its hypotheses hold.

    The hypotheses are: exactly one negative eigenvalue, a negative last
    diagonal entry, and (Omega x) vanishing in the last entry.  Failed
    hypotheses give ``not_applicable``, never ``violated``.  Values are
    compared against ``-tol_value * |Omega|_2 * |x|^2``.
    """
    omega = np.asarray(omega, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    lam = np.linalg.eigvalsh(omega) if eigenvalues is None else np.asarray(eigenvalues)
    norm = float(np.max(np.abs(lam))) if lam.size else 0.0
    xx = float(x @ x)
    one_negative = count_signs(lam, tol_eig)[0] == 1
    corner_negative = bool(omega[-1, -1] < 0)
    last = float(omega[-1] @ x)
    last_zero = abs(last) <= tol_hyp * norm * np.sqrt(xx)
    value = float(x @ omega @ x)
    normalized = value / (norm * xx) if norm * xx > 0 else 0.0
    if not (one_negative and corner_negative and last_zero):
        status = "not_applicable"
    elif normalized >= -tol_value:
        status = "satisfied"
    else:
        status = "violated"
    return LemmaReport(status, value, normalized, one_negative, corner_negative, last_zero, last)


def lemma_random_suite(omega, count=1000, seed=0, tol_value=TOL_LEMMA):
    """Random vectors projected onto {x : (Omega x)_last = 0}; returns all reports."""
    omega = np.asarray(omega, dtype=float)
    rng = np.random.default_rng(seed)
    row = omega[-1]
    xs = rng.standard_normal((count, omega.shape[0]))
    xs -= np.outer(xs @ row, row) / (row @ row)
    lam = np.linalg.eigvalsh(omega)
    return [check_lemma_psd(omega, x, tol_value=tol_value, eigenvalues=lam) for x in xs]


# -- affine flexes and conics at infinity ----------------------------------------------

@dataclass(frozen=True, eq=False)
class AffineFit:
    linear: np.ndarray
    translation: np.ndarray
    residual: float
    is_affine: bool
    skew_part: np.ndarray
    symmetric_part: np.ndarray
    is_trivial: bool


def affine_flex_test(flex, configuration, tol=HOLD_THRESHOLD) -> AffineFit:
    """Least-squares fit flex_i ~ A p_i + t, with the skew/symmetric split of A."""
    p = np.asarray(configuration, dtype=float)
    flex = np.asarray(flex, dtype=float).reshape(p.shape)
    design = np.hstack([p, np.ones((len(p), 1))])
    sol, *_ = np.linalg.lstsq(design, flex, rcond=None)
    a = sol[:-1].T
    t = sol[-1]
    norm = np.linalg.norm(flex)
    resid = float(np.linalg.norm(design @ sol - flex) / norm) if norm > 0 else 0.0
    skew = 0.5 * (a - a.T)
    sym = 0.5 * (a + a.T)
    is_affine = resid <= tol
    a_norm = np.linalg.norm(a)
    is_trivial = is_affine and (a_norm == 0 or np.linalg.norm(sym) <= tol * max(a_norm, 1.0))
    return AffineFit(a, t, resid, is_affine, skew, sym, bool(is_trivial))


class ConicResult(NamedTuple):
    exists: bool
    form: np.ndarray | None
    nullity: int


def conic_at_infinity(fw, tol_rel=TOL_RANK) -> ConicResult:
    """Nonzero symmetric Q with u^t Q u = 0 for every edge direction u, if any."""
    p = fw.configuration
    d = fw.dim
    slots = [(a, b) for a in range(d) for b in range(a, d)]
    rows = []
    for i, j in fw.pairs:
        u = p[i] - p[j]
        u = u / np.linalg.norm(u)
        rows.append([u[a] * u[b] * (1.0 if a == b else 2.0) for a, b in slots])
    system = np.array(rows).reshape(-1, len(slots))
    _, s, vt = np.linalg.svd(system, full_matrices=True)
    rank = numerical_rank(s, tol_rel).rank
    nullity = len(slots) - rank
    if nullity == 0:
        return ConicResult(False, None, 0)
    q = np.zeros((d, d))
    for coef, (a, b) in zip(vt[rank], slots):
        q[a, b] = q[b, a] = coef
    return ConicResult(True, q / np.linalg.norm(q), nullity)


# -- prestress stability ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StabilityVerdict:
    verdict: str  # prestress_stable, indefinite, degenerate, not_applicable
    form: np.ndarray
    eigenvalues: np.ndarray
    note: str = ""
    strictly_proper: bool | None = None
    zero_modes: list = field(default_factory=list)
    conic: ConicResult | None = None

    @property
    def min_eigenvalue(self) -> float | None:
        return float(self.eigenvalues[0]) if len(self.eigenvalues) else None


def stability_test(fw, omega, flexes: FlexBasis | None = None, tol_pd=TOL_PD) -> StabilityVerdict:
    """Restrict the stress energy to the nontrivial flexes and test positivity.

    Eigenvalues of the k x k form are compared against ``tol_pd * |Omega|_2``
    (the flex basis is orthonormal).  Near-zero modes get an affine fit and a
    conic-at-infinity check attached.
    """
    omega = np.asarray(omega, dtype=float)
    if flexes is None:
        flexes = flex_space(fw)
    proper = strictly_proper_check(omega, fw)[0]
    basis = flexes.nontrivial
    k = len(basis)
    if k == 0:
        return StabilityVerdict("prestress_stable", np.zeros((0, 0)), np.zeros(0),
                                note="no nontrivial flexes; infinitesimally rigid",
                                strictly_proper=proper)
    form = np.einsum("anx,nm,bmx->ab", basis, omega, basis)
    form = 0.5 * (form + form.T)
    lam, vecs = np.linalg.eigh(form)
    cut = tol_pd * np.max(np.abs(np.linalg.eigvalsh(omega)))
    if lam[0] > cut:
        verdict = "prestress_stable"
    elif lam[0] < -cut:
        verdict = "indefinite"
    else:
        verdict = "degenerate"
    zero_modes = []
    conic = None
    for idx in np.flatnonzero(np.abs(lam) <= cut):
        mode = np.tensordot(vecs[:, idx], basis, axes=1)
        zero_modes.append(affine_flex_test(mode, fw.configuration))
    if zero_modes:
        conic = conic_at_infinity(fw)
    return StabilityVerdict(verdict, form, lam, strictly_proper=proper,
                            zero_modes=zero_modes, conic=conic)


# -- projection reformulation -----------------------------------------------------------------

def random_rotation(d, rng) -> np.ndarray:
    """Haar-distributed rotation (det +1) via QR with sign correction."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass(frozen=True, eq=False)
class ProjectionRow:
    stress_index: int
    flex_index: int
    trivial: bool
    height_condition: np.ndarray  # (d-1,) values of h^t Psi q'
    radial_condition: float  # h^t Psi (q'.q)
    height_relative: float
    radial_relative: float


@dataclass(frozen=True, eq=False)
class ProjectionReport:
    rotation: np.ndarray
    attempts: int
    stress_dim: int
    flex_dim: int
    nontrivial_flex_dim: int
    rank_gap: float
    rows: list
    hold: float = HOLD_THRESHOLD
    fail: float = FAIL_THRESHOLD

    @property
    def max_relative(self) -> float:
        vals = [max(r.height_relative, r.radial_relative) for r in self.rows]
        return max(vals) if vals else 0.0

    @property
    def verdict(self) -> str:
        if not self.rows:
            return "vacuous"
        return classify_residual(self.max_relative, self.hold, self.fail)


def projection_check(poly: Polytope, seed=0, tol_rel=TOL_RANK, max_retries=10,
                     hold=HOLD_THRESHOLD, fail=FAIL_THRESHOLD) -> ProjectionReport:
    """Project the skeleton along the last axis after a seeded rotation and test the
    two projected conditions for every (stress, flex) basis pair.

    Both conditions are linear in the flex, so a flex basis covers every flex.
    """
    if poly.dim < 2:
        raise InputError("projection needs d >= 2")
    rng = np.random.default_rng(seed)
    pts = poly.vertices - poly.centroid
    diam = poly.diameter
    for attempt in range(1, max_retries + 1):
        rot = random_rotation(poly.dim, rng)
        rotated = pts @ rot.T
        q = rotated[:, :-1]
        h = rotated[:, -1]
        gaps = [np.linalg.norm(q[i] - q[j]) for i, j in itertools.combinations(range(poly.n), 2)]
        if min(gaps) <= 1e-6 * diam:
            continue
        fw = Framework.bars(q, poly.edges)
        try:
            flexes = flex_space(fw, tol_rel)
        except GeometryError:
            continue
        stresses = stress_space(fw, tol_rel)
        break
    else:
        raise GeometryError(f"projection stayed degenerate after {max_retries} rotations")

    rows = []
    radius = np.max(np.linalg.norm(q, axis=1))
    h_norm = np.linalg.norm(h)
    all_flexes = flexes.all
    for s_idx, psi in enumerate(stresses.matrices):
        psi_norm = np.linalg.norm(psi)
        for f_idx, qp in enumerate(all_flexes):
            cond1 = h @ psi @ qp
            radial = np.einsum("ij,ij->i", qp, q)
            cond2 = float(h @ psi @ radial)
            scale = h_norm * psi_norm * np.linalg.norm(qp)
            rel1 = float(np.linalg.norm(cond1) / scale) if scale > 0 else 0.0
            rel2 = abs(cond2) / (scale * radius) if scale * radius > 0 else 0.0
            rows.append(ProjectionRow(s_idx, f_idx, f_idx < flexes.dim_trivial,
                                      cond1, cond2, rel1, float(rel2)))
    return ProjectionReport(rot, attempt, stresses.dim, len(all_flexes),
                            flexes.dim_nontrivial, stresses.rank.gap_ratio, rows, hold, fail)


# -- full framework analysis ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResidualRow:
    stress: str  # "basis[k]" or "izmestiev"
    flex_index: int
    vector: np.ndarray
    relative: float
    verdict: str


@dataclass(frozen=True, eq=False)
class FrameworkAnalysis:
    framework: ConedFramework
    flexes: FlexBasis
    stresses: StressBasis
    izmestiev: object | None
    izmestiev_status: str  # certified, failed, not_applicable, empty
    izmestiev_message: str
    residuals: list
    trivial_max_relative: float
    stability: StabilityVerdict
    hold: float
    fail: float

    @property
    def max_relative(self) -> float:
        return max((r.relative for r in self.residuals), default=0.0)

    @property
    def verdict(self) -> str:
        return worst_verdict(r.verdict for r in self.residuals)

    def dimensions(self) -> dict:
        n_total = self.framework.n_points * self.framework.dim
        return {
            "n": self.framework.cone_index,
            "d": self.framework.dim,
            "edges": len(self.framework.edges),
            "rank": self.flexes.rank.rank,
            "flex_kernel": n_total - self.flexes.rank.rank,
            "trivial_flex": self.flexes.dim_trivial,
            "nontrivial_flex": self.flexes.dim_nontrivial,
            "stress": self.stresses.dim,
            "rank_gap_ratio": self.flexes.rank.gap_ratio,
            "rank_ambiguous": self.flexes.rank.ambiguous,
        }


def stress_choices(analysis_stresses: StressBasis, izmestiev=None):
    """(label, matrix) pairs: every basis stress, plus the Izmestiev element if given."""
    out = [(f"basis[{k}]", m) for k, m in enumerate(analysis_stresses.matrices)]
    if izmestiev is not None:
        out.append(("izmestiev", izmestiev.omega))
    return out


def analyze_framework(fw: ConedFramework, tol_rank=TOL_RANK, hold=HOLD_THRESHOLD,
                      fail=FAIL_THRESHOLD) -> FrameworkAnalysis:
    """Dimensions, Izmestiev certificate, residual table and stability for ``fw``.

    The Izmestiev stress is only sought when the faces are flat, in convex
    position, and the apex is interior.  Otherwise the status is
    ``not_applicable`` and only the basis stresses are examined.
    """
    flexes = flex_space(fw, tol_rank)
    stresses = stress_space(fw, tol_rank)

    iz, status, message = None, "empty", ""
    if stresses.dim == 0:
        message = "no nonzero equilibrium stress"
    elif not framework_in_convex_position(fw):
        status = "not_applicable"
        message = "faces not flat and convex with an interior apex"
    else:
        try:
            iz = izmestiev_stress(fw, tol_rank)
            status = "certified"
        except CertificationError as exc:
            iz, status, message = exc.stress, "failed", str(exc)

    rows = []
    trivial_max = 0.0
    for label, omega in stress_choices(stresses, iz if status == "certified" else None):
        for v in flexes.trivial:
            trivial_max = max(trivial_max, stress_flex_residual(omega, v, fw).relative)
        for k, v in enumerate(flexes.nontrivial):
            res = stress_flex_residual(omega, v, fw)
            rows.append(ResidualRow(label, k, res.vector, res.relative,
                                    classify_residual(res.relative, hold, fail)))

    stability = _stability_for(fw, flexes, stresses, iz if status == "certified" else None, tol_rank)
    return FrameworkAnalysis(fw, flexes, stresses, iz, status, message, rows, trivial_max,
                             stability, hold, fail)


def _stability_for(fw, flexes, stresses, iz, tol_rank):
    # stress matrices depend only on edge coefficients, so the Izmestiev
    # matrix built at the translated apex applies unchanged
    if iz is not None:
        return stability_test(fw, iz.omega, flexes)
    if stresses.dim == 0:
        return StabilityVerdict("not_applicable", np.zeros((0, 0)), np.zeros(0),
                                note="no nonzero equilibrium stress")
    w, margin, _ = proper_stress(fw, tol_rank, basis=stresses)
    if margin <= 0:
        return StabilityVerdict("not_applicable", np.zeros((0, 0)), np.zeros(0),
                                note="no strictly proper stress found")
    return stability_test(fw, stress_matrix(fw, w), flexes)


# -- sweeps ---------------------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    """Where sweep polytopes come from: ``random_simple`` with ``planes``, or a named model."""

    kind: str = "random_simple"
    planes: int = 10
    name: str | None = None
    polytope: Polytope | None = None

    def build(self, seed) -> Polytope:
        if self.polytope is not None:
            return self.polytope
        if self.kind == "random_simple":
            return random_simple_polytope(seed, self.planes)
        if self.kind == "named":
            return make_named(self.name)
        raise InputError(f"unknown generator kind {self.kind!r}")

    def describe(self) -> dict:
        if self.polytope is not None:
            return {"kind": "fixed"}
        if self.kind == "random_simple":
            return {"kind": "random_simple", "planes": self.planes}
        return {"kind": "named", "name": self.name}


APEX_ALIASES = {
    "interior": ("interior-random",),
    "exterior": ("exterior-random",),
    "both": ("interior-random", "exterior-random"),
    "centroid": ("centroid",),
    "interior-random": ("interior-random",),
    "exterior-random": ("exterior-random",),
}


def expand_apex_strategy(strategy: str):
    try:
        return APEX_ALIASES[strategy]
    except KeyError:
        raise InputError(f"unknown apex strategy {strategy!r}") from None


def sweep_instance(generator: GeneratorSpec, seed: int, apex_kind: str, tol_rank=TOL_RANK,
                   hold=HOLD_THRESHOLD, fail=FAIL_THRESHOLD,
                   labeling="tensegrity") -> dict:
    row = {"seed": seed, "apex": apex_kind}
    try:
        poly = generator.build(seed)
        fw = cone(poly, choose_apex(poly, apex_kind, seed), labeling)
        res = analyze_framework(fw, tol_rank, hold, fail)
    except StressFlexError as exc:
        row.update(error=f"{type(exc).__name__}: {exc}", verdict="error")
        return row
    dims = res.dimensions()
    row.update(
        n=dims["n"], edges=dims["edges"], rank=dims["rank"], stress_dim=dims["stress"],
        nontrivial_flex_dim=dims["nontrivial_flex"], rank_gap_ratio=dims["rank_gap_ratio"],
        pairs=len(res.residuals), max_relative_residual=res.max_relative,
        trivial_max_relative=res.trivial_max_relative, izmestiev=res.izmestiev_status,
        verdict=res.verdict, error=None,
    )
    return row


def _sweep_job(args):
    generator, seed, apex_kind, tol_rank, hold, fail, labeling = args
    return sweep_instance(generator, seed, apex_kind, tol_rank, hold, fail, labeling)


def sweep_strong_conjecture(generator: GeneratorSpec, seeds, apex_strategy="both",
                            tol_rank=TOL_RANK, hold=HOLD_THRESHOLD, fail=FAIL_THRESHOLD,
                            labeling="tensegrity", runner: Callable | None = None) -> dict:
    """Residuals over every basis stress and nontrivial flex for each instance.

    ``runner`` may be a ``map``-like callable such as ``executor.map``.  Rows
    are sorted by (seed, apex), so the result does not depend on completion
    order.
    """
    jobs = [(generator, s, a, tol_rank, hold, fail, labeling)
            for s in seeds for a in expand_apex_strategy(apex_strategy)]
    rows = list((runner or map)(_sweep_job, jobs))
    rows.sort(key=lambda r: (r["seed"], r["apex"]))
    ok = [r for r in rows if r.get("error") is None]
    residuals = np.array([r["max_relative_residual"] for r in ok if r["pairs"] > 0])
    verdicts = {}
    for r in rows:
        verdicts[r["verdict"]] = verdicts.get(r["verdict"], 0) + 1
    summary = {
        "instances": len(rows),
        "errors": len(rows) - len(ok),
        "max_relative_residual": float(residuals.max()) if residuals.size else 0.0,
        "median_relative_residual": float(np.median(residuals)) if residuals.size else 0.0,
        "verdicts": dict(sorted(verdicts.items())),
        "verdict": worst_verdict(r["verdict"] for r in ok) if ok else "error",
    }
    return {"rows": rows, "summary": summary}


def projection_cross_check(poly: Polytope, seed=0, apex="centroid", tol_rank=TOL_RANK,
                           hold=HOLD_THRESHOLD, fail=FAIL_THRESHOLD):
    """Projection verdict next to the coned residual verdict for the same polytope."""
    proj = projection_check(poly, seed, tol_rank, hold=hold, fail=fail)
    coned = analyze_framework(cone(poly, choose_apex(poly, apex, seed)), tol_rank, hold, fail)
    return proj, coned, _agree(proj.verdict, coned.verdict)


def _agree(a, b):
    # a vacuous side carries no claim either way
    return a == b or "vacuous" in (a, b)
