"""Polytopes, coned frameworks, and the ways of producing them.

A :class:`Polytope` is a vertex array plus a list of flat face cycles.  In
3D the cycles are the facets.  For the 4D hypercube they are the square
2-faces, which is all the edge derivation needs.  The one-skeleton is always
derived from consecutive pairs in the cycles.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .errors import (
    DegenerateDrawError,
    GeometryError,
    InputError,
    OffParseError,
    UnboundedRegionError,
)

TOL_GEOM = 1e-9
# Rejection threshold for near-degenerate random draws; looser than TOL_GEOM
# so that accepted draws are simple with margin.
TOL_DRAW = 1e-7


class EdgeLabel(str, enum.Enum):
    CABLE = "cable"
    STRUT = "strut"
    BAR = "bar"


class Edge(NamedTuple):
    i: int
    j: int
    label: EdgeLabel


def _affine_rank(points, tol_rel=TOL_GEOM):
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rel * s[0]))


def _flatness_defect(points):
    """Largest distance from ``points`` to their best-fit 2-flat."""
    centered = points - points.mean(axis=0)
    if points.shape[1] <= 2:
        return 0.0
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    plane = vt[:2]
    resid = centered - (centered @ plane.T) @ plane
    return float(np.max(np.linalg.norm(resid, axis=1)))


def _diameter(points):
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def derive_edges(facets):
    """Sorted, deduplicated (i, j) pairs, i < j, from consecutive cycle entries."""
    edges = set()
    for cycle in facets:
        k = len(cycle)
        for a in range(k):
            i, j = cycle[a], cycle[(a + 1) % k]
            edges.add((min(i, j), max(i, j)))
    return tuple(sorted(edges))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Vertices in R^d together with flat face cycles.

    Construction validates full affine span, cycle lengths, index ranges and
    face flatness (relative to the bounding-box diameter).  Convexity is
    reported by :meth:`is_convex`, never enforced.
    """

    vertices: np.ndarray
    facets: tuple
    tol_geom: float = TOL_GEOM
    edges: tuple = field(init=False, repr=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] < 1:
            raise GeometryError("vertices must be an (n, d) array")
        facets = tuple(tuple(int(i) for i in f) for f in self.facets)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "facets", facets)
        n, d = verts.shape
        if n < d + 1:
            raise GeometryError(f"need at least {d + 1} vertices in R^{d}, got {n}")
        if _affine_rank(verts) < d:
            raise GeometryError("vertices do not have full affine span")
        diam = _diameter(verts)
        for k, cycle in enumerate(facets):
            if len(cycle) < 3:
                raise GeometryError(f"facet {k} has fewer than 3 vertices")
            if len(set(cycle)) != len(cycle):
                raise GeometryError(f"facet {k} repeats a vertex")
            if min(cycle) < 0 or max(cycle) >= n:
                raise GeometryError(f"facet {k} has a vertex index out of range")
            if _flatness_defect(verts[list(cycle)]) > self.tol_geom * diam:
                raise GeometryError(f"facet {k} is not flat")
        object.__setattr__(self, "edges", derive_edges(facets))

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def diameter(self) -> float:
        return _diameter(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def degrees(self):
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def edge_facet_counts(self):
        counts = dict.fromkeys(self.edges, 0)
        for cycle in self.facets:
            k = len(cycle)
            for a in range(k):
                i, j = cycle[a], cycle[(a + 1) % k]
                counts[(min(i, j), max(i, j))] += 1
        return counts

    def is_closed(self) -> bool:
        """Every edge lies in exactly two face cycles (closed 2-manifold surface)."""
        return all(c == 2 for c in self.edge_facet_counts().values())

    def euler_characteristic(self) -> int:
        return self.n - len(self.edges) + len(self.facets)

    def is_convex(self) -> bool:
        return in_convex_position(self.vertices, self.facets, self.tol_geom)

    def contains_in_interior(self, point) -> bool:
        return point_in_interior(self.vertices, point)


def in_convex_position(vertices, faces, tol_geom=TOL_GEOM) -> bool:
    """Whether ``faces`` are supporting faces of the convex hull of ``vertices``.

    In 3D every face plane must have all other vertices strictly on one side.
    In other dimensions the faces are lower dimensional, so only flatness and
    extremality of every vertex are checked.
    """
    vertices = np.asarray(vertices, dtype=float)
    n, d = vertices.shape
    diam = _diameter(vertices)
    for cycle in faces:
        if _flatness_defect(vertices[list(cycle)]) > tol_geom * diam:
            return False
    if d == 3:
        if not faces:
            return False
        for cycle in faces:
            pts = vertices[list(cycle)]
            center = pts.mean(axis=0)
            _, _, vt = np.linalg.svd(pts - center)
            normal = vt[-1]
            others = np.setdiff1d(np.arange(n), cycle)
            dist = (vertices[others] - center) @ normal
            margin = tol_geom * diam
            if not (np.all(dist > margin) or np.all(dist < -margin)):
                return False
        return True
    try:
        hull = ConvexHull(vertices)
    except Exception:
        return False
    return len(hull.vertices) == n


def point_in_interior(vertices, point, tol=TOL_GEOM) -> bool:
    """Whether ``point`` is strictly inside the convex hull of ``vertices``.

    Solved as the LP: maximise t subject to point = sum w_i p_i,
    sum w_i = 1, w_i >= t.  For a full-dimensional hull the optimum is
    positive exactly on the interior.
    """
    vertices = np.asarray(vertices, dtype=float)
    point = np.asarray(point, dtype=float)
    n, d = vertices.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq = np.zeros((d + 1, n + 1))
    a_eq[:d, :n] = vertices.T
    a_eq[d, :n] = 1.0
    b_eq = np.append(point, 1.0)
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=b_eq,
                  bounds=[(None, None)] * (n + 1), method="highs")
    return bool(res.status == 0 and -res.fun > tol)


# -- OFF and JSON ------------------------------------------------------------

def parse_off(text: str) -> Polytope:
    """Parse OFF text into a :class:`Polytope`.

    Comments (``#`` to end of line) and blank lines are skipped.  Tokens after
    the ``k`` indices of a face line (colour data) are ignored.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            lines.append((lineno, content.split()))
    if not lines:
        raise OffParseError("empty input", 1)

    lineno, tokens = lines[0]
    if tokens[0] != "OFF":
        raise OffParseError(f"expected 'OFF' header, got {tokens[0]!r}", lineno)
    pos = 1
    counts = tokens[1:]
    if not counts:
        if len(lines) < 2:
            raise OffParseError("missing counts line", lineno)
        lineno, counts = lines[1]
        pos = 2
    if len(counts) < 2:
        raise OffParseError("counts line needs 'n f [e]'", lineno)
    try:
        n_verts, n_faces = int(counts[0]), int(counts[1])
    except ValueError:
        raise OffParseError("non-integer count", lineno) from None
    if n_verts < 0 or n_faces < 0:
        raise OffParseError("negative count", lineno)

    body = lines[pos:]
    if len(body) < n_verts + n_faces:
        last = lines[-1][0]
        raise OffParseError(
            f"expected {n_verts} vertex and {n_faces} face lines, found {len(body)}", last)

    coords = []
    dim = None
    for lineno, tokens in body[:n_verts]:
        try:
            row = [float(t) for t in tokens]
        except ValueError:
            raise OffParseError(f"non-numeric coordinate in {' '.join(tokens)!r}", lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise OffParseError("non-finite coordinate", lineno)
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise OffParseError(f"expected {dim} coordinates, got {len(row)}", lineno)
        coords.append(row)

    facets = []
    for lineno, tokens in body[n_verts:n_verts + n_faces]:
        try:
            k = int(tokens[0])
            idx = [int(t) for t in tokens[1:k + 1]]
        except ValueError:
            raise OffParseError("non-integer face entry", lineno) from None
        if len(idx) != k:
            raise OffParseError(f"face declares {k} vertices but lists {len(idx)}", lineno)
        if k < 3:
            raise OffParseError(f"face with {k} < 3 vertices", lineno)
        for i in idx:
            if not 0 <= i < n_verts:
                raise OffParseError(f"vertex index {i} out of range [0, {n_verts})", lineno)
        facets.append(tuple(idx))

    try:
        return Polytope(np.array(coords, dtype=float).reshape(n_verts, dim or 0), tuple(facets))
    except GeometryError as exc:
        raise OffParseError(str(exc)) from exc


def read_off(path) -> Polytope:
    with open(path, encoding="utf-8") as fh:
        return parse_off(fh.read())


def serialize_off(poly: Polytope) -> str:
    out = ["OFF", f"{poly.n} {len(poly.facets)} {len(poly.edges)}"]
    for row in poly.vertices:
        out.append(" ".join(repr(float(x)) for x in row))
    for cycle in poly.facets:
        out.append(" ".join(str(x) for x in (len(cycle), *cycle)))
    return "\n".join(out) + "\n"


def polytope_to_json(poly: Polytope) -> dict:
    return {
        "dim": poly.dim,
        "vertices": poly.vertices.tolist(),
        "facets": [list(f) for f in poly.facets],
    }


def polytope_from_json(data: dict) -> Polytope:
    try:
        verts = np.array(data["vertices"], dtype=float)
        poly = Polytope(verts, tuple(tuple(f) for f in data["facets"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid polytope JSON: {exc}") from exc
    if poly.dim != int(data.get("dim", poly.dim)):
        raise InputError("declared dim does not match vertex coordinates")
    return poly


# -- generators ---------------------------------------------------------------

def _order_cycle(vertices, members, normal):
    """Order ``members`` counterclockwise when viewed against ``normal``."""
    pts = vertices[members]
    center = pts.mean(axis=0)
    e1 = pts[0] - center
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    rel = pts - center
    angles = np.arctan2(rel @ e2, rel @ e1)
    return tuple(int(members[k]) for k in np.argsort(angles, kind="stable"))


def hull_facets_3d(vertices, tol=TOL_GEOM):
    """Facet cycles of the convex hull of a small 3D point set in convex position.

    Brute force over vertex triples; intended for the named solids only.
    """
    vertices = np.asarray(vertices, dtype=float)
    n = len(vertices)
    center = vertices.mean(axis=0)
    margin = tol * _diameter(vertices)
    seen = set()
    facets = []
    for i, j, k in itertools.combinations(range(n), 3):
        normal = np.cross(vertices[j] - vertices[i], vertices[k] - vertices[i])
        norm = np.linalg.norm(normal)
        if norm <= margin:
            continue
        normal /= norm
        dist = (vertices - vertices[i]) @ normal
        if np.all(dist <= margin):
            pass
        elif np.all(dist >= -margin):
            normal, dist = -normal, -dist
        else:
            continue
        members = np.flatnonzero(np.abs(dist) <= margin)
        key = frozenset(members.tolist())
        if key in seen:
            continue
        seen.add(key)
        if np.dot(vertices[members].mean(axis=0) - center, normal) < 0:
            normal = -normal
        facets.append(_order_cycle(vertices, members, normal))
    facets.sort()
    return tuple(facets)


def _hypercube4():
    verts = np.array(list(itertools.product((-1.0, 1.0), repeat=4)))
    index = {tuple(v): k for k, v in enumerate(verts.tolist())}
    faces = []
    for a, b in itertools.combinations(range(4), 2):
        rest = [c for c in range(4) if c not in (a, b)]
        for signs in itertools.product((-1.0, 1.0), repeat=2):
            cycle = []
            for sa, sb in ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)):
                v = [0.0] * 4
                v[a], v[b] = sa, sb
                v[rest[0]], v[rest[1]] = signs
                cycle.append(index[tuple(v)])
            faces.append(tuple(cycle))
    return verts, tuple(faces)


def _named_vertices(name):
    if name == "tetrahedron":
        return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    if name == "cube":
        # unit edge length, centred at the origin
        return 0.5 * np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
    if name == "cuboctahedron":
        pts = set()
        for perm in set(itertools.permutations((1.0, 1.0, 0.0))):
            for s in itertools.product((-1.0, 1.0), repeat=3):
                pts.add(tuple(p * q for p, q in zip(perm, s)))
        return np.array(sorted(pts))
    if name == "rhombic_dodecahedron":
        pts = [tuple(v) for v in itertools.product((-1.0, 1.0), repeat=3)]
        for axis in range(3):
            for s in (-2.0, 2.0):
                v = [0.0, 0.0, 0.0]
                v[axis] = s
                pts.append(tuple(v))
        return np.array(pts)
    raise InputError(f"unknown polytope name {name!r}")


NAMED_POLYTOPES = ("tetrahedron", "cube", "cuboctahedron", "rhombic_dodecahedron", "hypercube4")


def make_named(name: str) -> Polytope:
    """One of :data:`NAMED_POLYTOPES` in standard coordinates, centred at the origin."""
    if name not in NAMED_POLYTOPES:
        raise InputError(f"unknown polytope name {name!r}; choose from {', '.join(NAMED_POLYTOPES)}")
    if name == "hypercube4":
        verts, faces = _hypercube4()
        return Polytope(verts, faces)
    verts = _named_vertices(name)
    return Polytope(verts, hull_facets_3d(verts))


class _Degenerate(Exception):
    pass


class _Unbounded(Exception):
    pass


def _origin_strictly_inside_hull(points):
    """Halfspaces u_k.x <= 1 bound a region iff 0 is interior to conv(u_k)."""
    return point_in_interior(points, np.zeros(points.shape[1]), tol=TOL_DRAW)


def halfspace_polytope(normals, tol=TOL_DRAW) -> Polytope:
    """Simple 3D polytope {x : u_k . x <= 1} by plane-triple enumeration.

    Raises the private degeneracy markers on unbounded or non-simple input;
    :func:`random_simple_polytope` turns these into retries.
    """
    normals = np.asarray(normals, dtype=float)
    m = len(normals)
    if m < 4 or not _origin_strictly_inside_hull(normals):
        raise _Unbounded()
    triples = np.array(list(itertools.combinations(range(m), 3)))
    mats = normals[triples]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-12
    triples, mats = triples[ok], mats[ok]
    pts = np.linalg.solve(mats, np.ones((len(mats), 3, 1)))[..., 0]
    slack = 1.0 - pts @ normals.T
    in_triple = np.zeros_like(slack, dtype=bool)
    np.put_along_axis(in_triple, triples, True, axis=1)
    others = np.where(in_triple, np.inf, slack)
    min_other = others.min(axis=1)
    if np.any(np.abs(min_other) <= tol):
        raise _Degenerate()
    keep = min_other > tol
    verts = pts[keep]
    planes = triples[keep]
    if len(verts) < 4:
        raise _Degenerate()

    facets = []
    for k in range(m):
        members = np.flatnonzero(np.any(planes == k, axis=1))
        if len(members) == 0:
            continue
        if len(members) < 3:
            raise _Degenerate()
        facets.append(_order_cycle(verts, members, normals[k]))
    try:
        poly = Polytope(verts, tuple(facets))
    except GeometryError:
        raise _Degenerate() from None
    if np.any(poly.degrees() != 3) or poly.euler_characteristic() != 2 or not poly.is_closed():
        raise _Degenerate()
    return poly


def random_simple_halfspaces(seed: int, m: int, max_retries: int = 200):
    """Like :func:`random_simple_polytope`, also returning the accepted normals."""
    if m < 4:
        raise UnboundedRegionError(f"{m} halfspaces cannot bound a polytope in R^3")
    last = None
    for attempt in range(max_retries + 1):
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        normals = rng.standard_normal((m, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        try:
            return halfspace_polytope(normals), normals
        except (_Degenerate, _Unbounded) as exc:
            last = exc
    if isinstance(last, _Unbounded):
        raise UnboundedRegionError(f"no bounded draw for seed={seed}, m={m} in {max_retries} retries")
    raise DegenerateDrawError(f"no simple draw for seed={seed}, m={m} in {max_retries} retries")


def random_simple_polytope(seed: int, m: int, max_retries: int = 200) -> Polytope:
    """Intersection of ``m`` random halfspaces u.x <= 1, u uniform on the sphere.

    Degenerate or unbounded draws are redrawn from the seed sequence
    ``(seed, attempt)``; the result is a pure function of ``(seed, m)``.
    """
    return random_simple_halfspaces(seed, m, max_retries)[0]


# -- frameworks ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Framework:
    """Points in R^d with labelled edges."""

    configuration: np.ndarray
    edges: tuple

    def __post_init__(self):
        conf = np.array(self.configuration, dtype=float)
        if conf.ndim != 2:
            raise GeometryError("configuration must be an (N, d) array")
        edges = tuple(Edge(int(e[0]), int(e[1]), EdgeLabel(e[2])) for e in self.edges)
        seen = set()
        for e in edges:
            if e.i == e.j:
                raise GeometryError(f"loop edge at vertex {e.i}")
            if not (0 <= e.i < len(conf) and 0 <= e.j < len(conf)):
                raise GeometryError(f"edge ({e.i}, {e.j}) out of range")
            key = (min(e.i, e.j), max(e.i, e.j))
            if key in seen:
                raise GeometryError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "configuration", conf)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def bars(cls, configuration, pairs):
        return cls(configuration, tuple((i, j, EdgeLabel.BAR) for i, j in pairs))

    @property
    def n_points(self) -> int:
        return self.configuration.shape[0]

    @property
    def dim(self) -> int:
        return self.configuration.shape[1]

    @property
    def pairs(self) -> np.ndarray:
        return np.array([(e.i, e.j) for e in self.edges], dtype=int).reshape(-1, 2)

    def with_configuration(self, configuration):
        return type(self)(**{**self.__dict__, "configuration": configuration})


@dataclass(frozen=True, eq=False)
class ConedFramework(Framework):
    """Polytope skeleton plus an apex joined to every polytope vertex.

    ``faces`` carries the polytope's face cycles so that flatness and
    convex position can be re-checked after the configuration moves.
    """

    cone_index: int = -1
    faces: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if self.cone_index != self.n_points - 1:
            raise GeometryError("the apex must be the last point of the configuration")

    @property
    def apex(self) -> np.ndarray:
        return self.configuration[self.cone_index]

    @property
    def base(self) -> np.ndarray:
        return self.configuration[: self.cone_index]

    def is_cone_edge(self, e) -> bool:
        return self.cone_index in (e[0], e[1])

    def skeleton_edges(self):
        return [e for e in self.edges if not self.is_cone_edge(e)]


def cone(poly: Polytope, apex, labeling="tensegrity") -> ConedFramework:
    """Cone the one-skeleton of ``poly`` over ``apex`` (any point; interior not required)."""
    apex = np.asarray(apex, dtype=float).reshape(-1)
    if apex.shape != (poly.dim,):
        raise InputError(f"apex must have {poly.dim} coordinates")
    if labeling not in ("tensegrity", "bars"):
        raise InputError(f"unknown labeling {labeling!r}")
    bars = labeling == "bars"
    n = poly.n
    edges = [(i, j, EdgeLabel.BAR if bars else EdgeLabel.CABLE) for i, j in poly.edges]
    edges += [(i, n, EdgeLabel.BAR if bars else EdgeLabel.STRUT) for i in range(n)]
    return ConedFramework(np.vstack([poly.vertices, apex]), tuple(edges), cone_index=n,
                          faces=poly.facets)


def slide(fw: ConedFramework, t: Sequence[float]) -> ConedFramework:
    """Move each base vertex along its line to the apex: p_i -> a + t_i (p_i - a)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    n = fw.cone_index
    if t.shape != (n,):
        raise InputError(f"need {n} slide factors, got {t.size}")
    if np.any(t <= 0):
        raise InputError("slide factors must be positive")
    conf = fw.configuration.copy()
    apex = conf[n]
    # written as an increment so that t_i = 1 leaves p_i bit-for-bit unchanged
    conf[:n] = conf[:n] + (t[:, None] - 1.0) * (conf[:n] - apex)
    return fw.with_configuration(conf)


def framework_in_convex_position(fw: ConedFramework) -> bool:
    """Flat faces in convex position, with the apex strictly inside."""
    return (bool(fw.faces) and in_convex_position(fw.base, fw.faces)
            and point_in_interior(fw.base, fw.apex))


# -- apex placement -------------------------------------------------------------

APEX_STRATEGIES = ("centroid", "interior-random", "exterior-random")


def choose_apex(poly: Polytope, strategy, seed: int = 0) -> np.ndarray:
    """Apex for ``poly``: a strategy name or explicit coordinates.

    ``interior-random`` averages the centroid with a random convex
    combination of the vertices, so it stays off the boundary.
    ``exterior-random`` lies beyond the farthest vertex from the centroid
    and is therefore outside the convex hull.
    """
    if not isinstance(strategy, str):
        apex = np.asarray(strategy, dtype=float).reshape(-1)
        if apex.shape != (poly.dim,):
            raise InputError(f"apex must have {poly.dim} coordinates")
        return apex
    c = poly.centroid
    rng = np.random.default_rng(seed)
    if strategy == "centroid":
        return c
    if strategy == "interior-random":
        w = rng.dirichlet(np.ones(poly.n))
        return 0.5 * c + 0.5 * (w @ poly.vertices)
    if strategy == "exterior-random":
        radius = np.max(np.linalg.norm(poly.vertices - c, axis=1))
        u = rng.standard_normal(poly.dim)
        u /= np.linalg.norm(u)
        return c + radius * rng.uniform(1.5, 3.0) * u
    raise InputError(f"unknown apex strategy {strategy!r}")
