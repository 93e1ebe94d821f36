import numpy as np
import pytest

from stressflex.analysis import (
    GeneratorSpec,
    affine_flex_test,
    analyze_framework,
    check_lemma_psd,
    classify_residual,
    conic_at_infinity,
    lemma_random_suite,
    prestress_energy,
    projection_check,
    projection_cross_check,
    stability_test,
    stress_flex_residual,
    sweep_strong_conjecture,
)
from stressflex.errors import InputError
from stressflex.polytope import Framework, Polytope, cone, make_named, slide
from stressflex.rigidity import flex_space, stress_space
from stressflex.stress import izmestiev_stress


@pytest.fixture
def cube_iz(coned_cube):
    return izmestiev_stress(coned_cube)


def test_classify_thresholds():
    assert classify_residual(1e-8) == "holds"
    assert classify_residual(1e-5) == "inconclusive"
    assert classify_residual(2e-3) == "fails"


def test_trivial_flex_residual_zero(coned_cube, cube_iz):
    for v in flex_space(coned_cube).trivial:
        res = stress_flex_residual(cube_iz.omega, v, coned_cube)
        assert res.vector.shape == (3,)
        assert res.relative < 1e-15


def test_cube_nontrivial_residuals(coned_cube, cube_iz):
    flexes = flex_space(coned_cube)
    for v in flexes.nontrivial:
        assert stress_flex_residual(cube_iz.omega, v, coned_cube).relative <= 1e-8


def test_slid_cube_fails(coned_cube):
    t = np.random.default_rng(5).uniform(0.5, 1.5, 8)
    slid = slide(coned_cube, t)
    omega = stress_space(slid).matrices[0]
    rel = max(stress_flex_residual(omega, v, slid).relative for v in flex_space(slid).nontrivial)
    assert rel > 1e-3


def test_residual_shape_mismatch(cube_iz):
    with pytest.raises(InputError):
        stress_flex_residual(cube_iz.omega, np.zeros((8, 3)))
    with pytest.raises(InputError):
        prestress_energy(cube_iz.omega[:, :4], np.zeros((9, 3)))


def test_residual_linear_in_stress():
    poly = make_named("cuboctahedron")
    fw = cone(poly, poly.centroid)
    mats = stress_space(fw).matrices
    flex = flex_space(fw).nontrivial[0]
    coeffs = np.array([0.3, -1.2, 2.0, 0.7])
    combo = np.tensordot(coeffs, mats, axes=1)
    expected = sum(c * stress_flex_residual(m, flex, fw).vector for c, m in zip(coeffs, mats))
    np.testing.assert_allclose(stress_flex_residual(combo, flex, fw).vector, expected, atol=1e-14)


def test_lemma_indicator_not_applicable(cube_iz):
    e = np.zeros(9)
    e[-1] = 1.0
    rep = check_lemma_psd(cube_iz.omega, e)
    assert rep.status == "not_applicable"
    assert not rep.last_entry_zero and rep.last_entry == pytest.approx(cube_iz.b)
    assert rep.one_negative and rep.corner_negative


def test_lemma_kernel_vector(coned_cube, cube_iz):
    x = coned_cube.configuration[:, 0].copy()  # a column of p-hat lies in the kernel
    rep = check_lemma_psd(cube_iz.omega, x)
    assert rep.hypotheses_hold
    assert rep.status == "satisfied"
    assert abs(rep.value) < 1e-13


def test_lemma_random_suite(cube_iz):
    reports = lemma_random_suite(cube_iz.omega, count=1000, seed=1)
    assert all(r.hypotheses_hold for r in reports)
    assert min(r.normalized_value for r in reports) >= -1e-10
    assert {r.status for r in reports} == {"satisfied"}


def test_lemma_failed_hypotheses_are_not_violations():
    # two negative eigenvalues
    omega = np.diag([1.0, -1.0, -1.0])
    assert check_lemma_psd(omega, np.array([0.0, 1.0, 0.0])).status == "not_applicable"
    # one negative eigenvalue but a positive corner: x^t Omega x < 0 is allowed
    omega = np.diag([-1.0, 1.0])
    rep = check_lemma_psd(omega, np.array([1.0, 0.0]))
    assert rep.value < 0 and rep.last_entry_zero and not rep.corner_negative
    assert rep.status == "not_applicable"


def test_prestress_energy(coned_cube, cube_iz):
    flexes = flex_space(coned_cube)
    for v in flexes.trivial:
        assert abs(prestress_energy(cube_iz.omega, v)) < 1e-13
    x = np.zeros((9, 3))
    x[:, 1] = coned_cube.configuration[:, 2]
    assert abs(prestress_energy(cube_iz.omega, x)) < 1e-13
    energies = [prestress_energy(cube_iz.omega, v) for v in flexes.nontrivial]
    assert len(energies) == 2 and min(energies) > 0


def test_cube_prestress_stable(coned_cube, cube_iz):
    verdict = stability_test(coned_cube, cube_iz.omega)
    assert verdict.verdict == "prestress_stable"
    assert verdict.form.shape == (2, 2)
    assert verdict.min_eigenvalue > 0
    assert verdict.strictly_proper


def test_tetrahedron_vacuous(tetrahedron):
    fw = cone(tetrahedron, tetrahedron.centroid)
    verdict = stability_test(fw, izmestiev_stress(fw).omega)
    assert verdict.verdict == "prestress_stable"
    assert "no nontrivial" in verdict.note


def test_generic_placement_not_applicable(coned_cube):
    fw = coned_cube.with_configuration(np.random.default_rng(2).standard_normal((9, 3)))
    res = analyze_framework(fw)
    assert res.stability.verdict == "not_applicable"
    assert res.izmestiev_status == "empty"
    assert res.verdict == "vacuous"


def test_degenerate_form_gets_diagnostics():
    # zero stress: every flex is a zero mode of the form
    fw = Framework.bars(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
                        [(0, 1), (1, 3), (3, 2), (2, 0)])
    verdict = stability_test(fw, np.zeros((4, 4)))
    assert verdict.verdict == "degenerate"
    assert len(verdict.zero_modes) == 1
    assert verdict.conic is not None and verdict.conic.exists


def test_affine_fit(coned_cube, rng):
    p = coned_cube.configuration
    for v in flex_space(coned_cube).trivial:
        fit = affine_flex_test(v, p)
        assert fit.residual < 1e-12 and fit.is_affine and fit.is_trivial
        np.testing.assert_allclose(fit.symmetric_part, 0, atol=1e-12)
    a = rng.standard_normal((3, 3))
    a = a + a.T
    fit = affine_flex_test(p @ a.T + [1.0, 2.0, 3.0], p)
    assert fit.is_affine and not fit.is_trivial
    np.testing.assert_allclose(fit.linear, a, atol=1e-12)
    np.testing.assert_allclose(fit.translation, [1.0, 2.0, 3.0], atol=1e-12)
    for v in flex_space(coned_cube).nontrivial:
        assert not affine_flex_test(v, p).is_affine


def test_conic_at_infinity(cube, coned_cube):
    skeleton = Framework.bars(cube.vertices, cube.edges)
    res = conic_at_infinity(skeleton)
    # three axis directions: Q_aa = 0, off-diagonal free, explicit nullity 3
    assert res.exists and res.nullity == 3
    np.testing.assert_allclose(np.diag(res.form), 0, atol=1e-12)
    assert not conic_at_infinity(coned_cube).exists
    edge = Framework.bars(np.array([[0.0, 0.0], [1.0, 2.0]]), [(0, 1)])
    assert conic_at_infinity(edge).exists and conic_at_infinity(edge).nullity == 2


def test_projection_cube():
    rep = projection_check(make_named("cube"), seed=1)
    assert rep.stress_dim == 1 and rep.nontrivial_flex_dim == 2
    assert rep.rows
    assert all(r.height_relative <= 1e-8 and r.radial_relative <= 1e-8 for r in rep.rows)
    assert rep.verdict == "holds"
    np.testing.assert_allclose(rep.rotation @ rep.rotation.T, np.eye(3), atol=1e-12)


def test_projection_empty_stress_space():
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    open_surface = Polytope(verts, ((0, 1, 2), (0, 1, 3)))
    rep = projection_check(open_surface, seed=0)
    assert rep.stress_dim == 0 and rep.rows == []
    assert rep.verdict == "vacuous"


def test_projection_is_seeded():
    a = projection_check(make_named("cuboctahedron"), seed=4)
    b = projection_check(make_named("cuboctahedron"), seed=4)
    np.testing.assert_array_equal(a.rotation, b.rotation)
    assert a.max_relative == b.max_relative


def test_projection_cross_check_agrees():
    proj, coned, agrees = projection_cross_check(make_named("cube"), seed=2)
    assert proj.verdict == coned.verdict == "holds" and agrees


def test_projection_condition_fails_off_polytope(rng):
    # perturbing the heights breaks face flatness; the conditions should notice
    cube = make_named("cube")
    rep = projection_check(cube, seed=1)
    assert rep.verdict == "holds"
    from stressflex.analysis import random_rotation
    rot = random_rotation(3, np.random.default_rng(1))
    rotated = (cube.vertices - cube.centroid) @ rot.T
    q, h = rotated[:, :2], rotated[:, 2] + rng.uniform(-0.3, 0.3, 8)
    fw = Framework.bars(q, cube.edges)
    psi = stress_space(fw).matrices[0]
    worst = max(np.linalg.norm(h @ psi @ v) / (np.linalg.norm(h) * np.linalg.norm(psi))
                for v in flex_space(fw).nontrivial)
    assert worst > 1e-3


@pytest.mark.parametrize("name", ["cuboctahedron", "rhombic_dodecahedron", "hypercube4"])
def test_sweep_named_both_apexes(name):
    out = sweep_strong_conjecture(GeneratorSpec(kind="named", name=name), range(3), "both")
    assert out["summary"]["instances"] == 6
    assert out["summary"]["verdict"] == "holds"
    assert out["summary"]["max_relative_residual"] <= 1e-8


def test_sweep_random_rows_sorted_and_complete():
    out = sweep_strong_conjecture(GeneratorSpec(planes=9), [5, 3, 4], "both")
    keys = [(r["seed"], r["apex"]) for r in out["rows"]]
    assert keys == sorted(keys) and len(keys) == 6
    assert all(r["verdict"] == "holds" for r in out["rows"])


def test_sweep_records_errors_and_continues():
    out = sweep_strong_conjecture(GeneratorSpec(planes=3), range(2), "interior")
    assert out["summary"]["errors"] == 2
    assert all(r["error"].startswith("UnboundedRegionError") for r in out["rows"])


def test_stability_consistency():
    for name in ["cube", "cuboctahedron", "rhombic_dodecahedron"]:
        poly = make_named(name)
        res = analyze_framework(cone(poly, poly.centroid + 0.05))
        assert res.stability.verdict == "prestress_stable"
        omega = res.izmestiev.omega
        for v in res.flexes.nontrivial:
            assert prestress_energy(omega, v) > 0
