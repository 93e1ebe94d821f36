import numpy as np
import pytest

from stressflex.errors import EmptyStressSpaceError, NoProperStressError
from stressflex.polytope import Framework, choose_apex, cone, make_named, random_simple_polytope
from stressflex.rigidity import stress_space
from stressflex.stress import (
    izmestiev_stress,
    max_margin_stress,
    edge_roles,
    strictly_proper_check,
    translate_to_apex_origin,
    wachspress,
)


def wachspress_oracle(poly, x):
    """Normalised 3D Wachspress coordinates of a simple polytope.

    w_v = |det(n_1, n_2, n_3)| / (h_1 h_2 h_3) over the three facets at v, with
    unit outward normals n_k and distances h_k from x to the facet planes.
    """
    planes = []
    for cycle in poly.facets:
        pts = poly.vertices[list(cycle)]
        normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        normal /= np.linalg.norm(normal)
        if np.dot(pts.mean(axis=0) - poly.centroid, normal) < 0:
            normal = -normal
        planes.append((normal, np.dot(pts[0] - x, normal)))
    w = []
    for v in range(poly.n):
        incident = [planes[k] for k, c in enumerate(poly.facets) if v in c]
        assert len(incident) == 3
        normals = np.array([n for n, _ in incident])
        w.append(abs(np.linalg.det(normals)) / np.prod([h for _, h in incident]))
    w = np.array(w)
    return w / w.sum()


def test_coned_cube_izmestiev(coned_cube):
    iz = izmestiev_stress(coned_cube)
    cert = iz.certificate
    assert cert.passed and cert.applicable
    lam = np.linalg.eigvalsh(iz.omega)
    assert np.sum(lam < -1e-9) == 1
    assert cert.omega_rank == 5
    assert 9 - cert.omega_rank == 4
    cube_edges = [e for e in coned_cube.edges if e.label == "cable"]
    assert all(iz.m_block[e.i, e.j] < 0 for e in cube_edges)
    assert np.all(iz.alpha > 0)
    assert iz.b < 0
    np.testing.assert_allclose(iz.alpha, iz.alpha[0], rtol=1e-12)


def test_block_identities(coned_cube):
    iz = izmestiev_stress(cone(make_named("cube"), [0.1, -0.2, 0.05]))
    ones = np.ones(iz.n)
    np.testing.assert_allclose(iz.alpha, -ones @ iz.m_block, atol=1e-12)
    assert iz.b == pytest.approx(ones @ iz.m_block @ ones, abs=1e-12)
    np.testing.assert_allclose(iz.omega @ np.ones(iz.n + 1), 0, atol=1e-12)


def test_interlacing_counts(coned_cube):
    iz = izmestiev_stress(coned_cube)
    m_neg = np.sum(np.linalg.eigvalsh(iz.m_block) < -1e-9)
    o_neg = np.sum(np.linalg.eigvalsh(iz.omega) < -1e-9)
    assert m_neg == o_neg == 1
    cert = iz.certificate
    assert (iz.n + 1 - cert.omega_rank) == (iz.n - cert.m_rank) + 1


def test_normalisation_min_cable_is_one(coned_cube):
    iz = izmestiev_stress(coned_cube)
    cables = iz.coefficients[edge_roles(coned_cube) > 0]
    assert np.min(np.abs(cables)) == pytest.approx(1.0)


def test_strictly_proper_check(coned_cube):
    iz = izmestiev_stress(coned_cube)
    ok, per_edge = strictly_proper_check(iz.omega, coned_cube)
    assert ok and all(per_edge)
    ok, per_edge = strictly_proper_check(-iz.omega, coned_cube)
    assert not ok and not any(per_edge)
    ok, per_edge = strictly_proper_check(np.zeros((9, 9)), coned_cube)
    assert not ok and not any(per_edge)


@pytest.mark.parametrize("name", ["tetrahedron", "cuboctahedron", "rhombic_dodecahedron", "hypercube4"])
def test_named_certificates(name):
    poly = make_named(name)
    iz = izmestiev_stress(cone(poly, poly.centroid))
    assert iz.certificate.passed
    assert iz.certificate.omega_rank == poly.n - poly.dim


def test_multidimensional_space_uses_margin_lp():
    poly = make_named("cuboctahedron")
    fw = cone(poly, poly.centroid)
    basis = stress_space(fw)
    w, margin = max_margin_stress(basis.coefficients, edge_roles(fw))
    assert margin > 0
    assert np.sum(edge_roles(fw) * w) == pytest.approx(1.0)
    assert izmestiev_stress(fw).certificate.stress_dim == 4


def test_errors_are_distinct(coned_cube, rng):
    generic = coned_cube.with_configuration(rng.standard_normal((9, 3)))
    with pytest.raises(EmptyStressSpaceError):
        izmestiev_stress(generic)
    cube = make_named("cube")
    outside = cone(cube, [2.0, 0.3, -0.1])
    with pytest.raises(NoProperStressError) as info:
        izmestiev_stress(outside)
    assert info.value.stress is not None
    relaxed = izmestiev_stress(outside, strict=False)
    assert not relaxed.certificate.passed and not relaxed.certificate.applicable


def test_translation(cube):
    fw = cone(cube, [0.1, 0.2, 0.3])
    moved = translate_to_apex_origin(fw)
    np.testing.assert_array_equal(moved.apex, 0.0)
    before, after = stress_space(fw), stress_space(moved)
    assert before.dim == after.dim == 1
    np.testing.assert_allclose(before.matrices, after.matrices, atol=1e-12)
    at_origin = cone(cube, [0.0, 0.0, 0.0])
    assert translate_to_apex_origin(at_origin) is at_origin


def test_scale_covariance(cube):
    a = izmestiev_stress(cone(cube, [0.1, 0.05, -0.2])).certificate
    scaled = type(cube)(cube.vertices * 7.5, cube.facets)
    b = izmestiev_stress(cone(scaled, [0.75, 0.375, -1.5])).certificate
    for name in a.CHECKS:
        assert getattr(a, name) == getattr(b, name)


def test_wachspress_cube(cube):
    res = wachspress(cube, cube.centroid)
    np.testing.assert_allclose(res.alpha, res.alpha[0], rtol=1e-12)
    assert res.total == pytest.approx(res.alpha.sum(), rel=1e-14)


def test_wachspress_tetrahedron_share_moves(tetrahedron):
    centre = wachspress(tetrahedron, tetrahedron.centroid).alpha
    np.testing.assert_allclose(centre, centre[0], rtol=1e-12)
    toward = 0.3 * tetrahedron.vertices[0]
    moved = wachspress(tetrahedron, toward).alpha
    assert moved[0] / moved.sum() > centre[0] / centre.sum()
    np.testing.assert_allclose(moved / moved.sum(), wachspress_oracle(tetrahedron, toward), atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_wachspress_matches_rational_formula(seed):
    poly = random_simple_polytope(seed, 7 + seed)
    x = choose_apex(poly, "interior-random", seed)
    alpha = wachspress(poly, x).alpha
    np.testing.assert_allclose(alpha / alpha.sum(), wachspress_oracle(poly, x), atol=1e-12)


def test_bars_labeling_certifies_the_same(cube):
    iz = izmestiev_stress(cone(cube, cube.centroid, labeling="bars"))
    assert iz.certificate.passed
