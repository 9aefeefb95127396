"""Conforming triangular meshes of a rectangle with electrode-tagged boundary.

Elements are stored counterclockwise. Local edge ``i`` of an element is the
edge opposite local vertex ``i``; ``refinement_edge`` holds the local index of
the newest-vertex-bisection reference edge. Refinement appends vertices, so
the vertex set of a coarse mesh is always a prefix of the refined one and
``vertex_parents`` records the edge each new vertex bisected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, InvalidLayoutError, ResolutionError

INTERIOR = -1
INSULATED = -2

_TOL = 1e-10


@dataclass(frozen=True)
class ElectrodeLayout:
    """Electrodes as arclength intervals on the boundary of a rectangle.

    Arclength runs counterclockwise from the lower-left corner.
    """

    segments: tuple = ()
    impedances: tuple = ()

    def __post_init__(self):
        segs = tuple((float(a), float(b)) for a, b in self.segments)
        z = tuple(float(v) for v in self.impedances) if self.impedances else (1.0,) * len(segs)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "impedances", z)
        if len(z) != len(segs):
            raise InvalidLayoutError("one contact impedance per electrode is required")
        if any(v <= 0 for v in z):
            raise InvalidLayoutError("contact impedances must be positive")
        for a, b in segs:
            if not b > a:
                raise InvalidLayoutError(f"electrode segment ({a}, {b}) is empty")
        order = sorted(segs)
        for (a0, b0), (a1, b1) in zip(order, order[1:]):
            if a1 <= b0:
                raise InvalidLayoutError("electrode closures must be disjoint")

    @property
    def L(self):
        return len(self.segments)

    @classmethod
    def evenly_spaced(cls, L, length, perimeter, offset=0.0, impedance=1.0):
        """``L`` electrodes of equal ``length`` starting every ``perimeter / L``."""
        pitch = perimeter / L if L else 0.0
        if L and length >= pitch:
            raise InvalidLayoutError("electrodes of this length would touch")
        segs = [(offset + k * pitch, offset + k * pitch + length) for k in range(L)]
        return cls(tuple(segs), (impedance,) * L)

    def locate(self, s):
        """Electrode index containing arclength ``s`` (open interval), else -1."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.full(s.shape, -1, dtype=int)
        for l, (a, b) in enumerate(self.segments):
            out[(s > a + _TOL) & (s < b - _TOL)] = l
        return out

    def to_dict(self):
        return {"segments": [list(s) for s in self.segments], "impedances": list(self.impedances)}


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    elements: np.ndarray
    refinement_edge: np.ndarray
    generation: np.ndarray
    extents: tuple
    layout: ElectrodeLayout = field(default_factory=ElectrodeLayout)
    parent: np.ndarray | None = None
    vertex_parents: np.ndarray | None = None

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=float)
        elems = np.ascontiguousarray(self.elements, dtype=np.int64)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "refinement_edge", np.asarray(self.refinement_edge, dtype=np.int64))
        object.__setattr__(self, "generation", np.asarray(self.generation, dtype=np.int64))
        object.__setattr__(self, "extents", tuple(float(v) for v in self.extents))
        if self.parent is None:
            object.__setattr__(self, "parent", np.full(len(elems), -1, dtype=np.int64))
        if self.vertex_parents is None:
            object.__setattr__(self, "vertex_parents", np.full((len(verts), 2), -1, dtype=np.int64))
        for arr in (self.vertices, self.elements, self.refinement_edge, self.generation,
                    self.parent, self.vertex_parents):
            arr.flags.writeable = False
        if not np.all(np.isfinite(verts)):
            raise GeometryError("vertex coordinates must be finite")
        if np.any(self.signed_areas <= 0):
            raise GeometryError("elements must have positive signed area")

    # -- sizes -------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_faces(self):
        return len(self.face_vertices)

    @property
    def perimeter(self):
        x0, x1, y0, y1 = self.extents
        return 2.0 * ((x1 - x0) + (y1 - y0))

    @property
    def domain_area(self):
        x0, x1, y0, y1 = self.extents
        return (x1 - x0) * (y1 - y0)

    # -- element geometry ----------------------------------------------------
    @cached_property
    def signed_areas(self):
        p = self.vertices[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self):
        return self.signed_areas

    @cached_property
    def grad_basis(self):
        """Constant gradients of the three hat functions per element, (m, 3, 2)."""
        p = self.vertices[self.elements]
        g = np.empty((self.n_elements, 3, 2))
        for i in range(3):
            a = p[:, (i + 1) % 3]
            b = p[:, (i + 2) % 3]
            # inward normal of the opposite edge scaled by its length
            g[:, i, 0] = -(b[:, 1] - a[:, 1])
            g[:, i, 1] = b[:, 0] - a[:, 0]
        return g / (2.0 * self.signed_areas)[:, None, None]

    def gradient(self, values):
        """Elementwise constant gradient of a nodal P1 field, (m, 2)."""
        v = np.asarray(values)[self.elements]
        # differences against vertex 0 make constants exactly gradient free
        d = v[:, 1:] - v[:, :1]
        return np.einsum("mi,mid->md", d, self.grad_basis[:, 1:])

    @cached_property
    def centroids(self):
        return self.vertices[self.elements].mean(axis=1)

    # -- faces ---------------------------------------------------------------
    @cached_property
    def _face_data(self):
        m = self.n_elements
        local = np.array([[1, 2], [2, 0], [0, 1]])
        # half-edges in counterclockwise order of their element
        he = self.elements[:, local].reshape(-1, 2)
        key = np.sort(he, axis=1)
        uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        nf = len(uniq)
        counts = np.bincount(inv, minlength=nf)
        if np.any(counts > 2):
            raise GeometryError("an edge is shared by more than two elements")
        owner = np.repeat(np.arange(m), 3)
        face_elems = np.full((nf, 2), -1, dtype=np.int64)
        face_elems[inv[first], 0] = owner[first]
        rest = np.setdiff1d(np.arange(3 * m), first)
        face_elems[inv[rest], 1] = owner[rest]
        # orient each face counterclockwise with respect to its first element
        face_verts = he[first]
        elem_faces = inv.reshape(m, 3)
        return face_verts, face_elems, elem_faces

    @property
    def face_vertices(self):
        return self._face_data[0]

    @property
    def face_elements(self):
        return self._face_data[1]

    @property
    def element_faces(self):
        """Face id of local edge ``i`` (opposite vertex ``i``), (m, 3)."""
        return self._face_data[2]

    @cached_property
    def face_lengths(self):
        d = self.vertices[self.face_vertices[:, 1]] - self.vertices[self.face_vertices[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def face_normals(self):
        """Unit normals pointing out of ``face_elements[:, 0]`` (outward on the boundary)."""
        d = self.vertices[self.face_vertices[:, 1]] - self.vertices[self.face_vertices[:, 0]]
        n = np.stack([d[:, 1], -d[:, 0]], axis=1)
        return n / self.face_lengths[:, None]

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_elements[:, 1] < 0)

    @property
    def interior_faces(self):
        return np.flatnonzero(self.face_elements[:, 1] >= 0)

    def boundary_arclength(self, points):
        """Counterclockwise arclength parameter of boundary points."""
        x0, x1, y0, y1 = self.extents
        w, h = x1 - x0, y1 - y0
        pts = np.atleast_2d(points)
        s = np.full(len(pts), np.nan)
        x, y = pts[:, 0], pts[:, 1]
        tol = _TOL * max(w, h)
        left = np.abs(x - x0) <= tol
        top = np.abs(y - y1) <= tol
        right = np.abs(x - x1) <= tol
        bottom = np.abs(y - y0) <= tol
        s[left] = 2 * w + h + (y1 - y[left])
        s[top] = w + h + (x1 - x[top])
        s[right] = w + (y[right] - y0)
        s[bottom] = x[bottom] - x0
        return s

    @cached_property
    def face_tags(self):
        """INTERIOR, INSULATED, or the electrode index of each face."""
        tags = np.full(self.n_faces, INTERIOR, dtype=np.int64)
        bf = self.boundary_faces
        mids = self.vertices[self.face_vertices[bf]].mean(axis=1)
        s = self.boundary_arclength(mids)
        if np.any(np.isnan(s)):
            raise GeometryError("boundary face off the rectangle boundary")
        loc = self.layout.locate(s)
        tags[bf] = np.where(loc >= 0, loc, INSULATED)
        return tags

    def face_kind(self, f):
        t = int(self.face_tags[f])
        if t == INTERIOR:
            return "interior"
        if t == INSULATED:
            return "insulated"
        return f"electrode:{t}"

    def electrode_faces(self, l):
        return np.flatnonzero(self.face_tags == l)

    # -- topology ------------------------------------------------------------
    @cached_property
    def vertex_element_incidence(self):
        m = self.n_elements
        rows = self.elements.ravel()
        cols = np.repeat(np.arange(m), 3)
        return sp.csr_matrix((np.ones(3 * m), (rows, cols)), shape=(self.n_vertices, m))

    @cached_property
    def boundary_vertices(self):
        return np.unique(self.face_vertices[self.boundary_faces])

    @cached_property
    def interior_vertices(self):
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    def min_angle(self):
        """Smallest interior angle over all elements, in radians."""
        p = self.vertices[self.elements]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.arccos(np.clip(c, -1.0, 1.0)))
        return float(np.min(angles))


def element_patch(mesh, T):
    """Elements sharing at least one vertex with element ``T`` (including ``T``)."""
    inc = mesh.vertex_element_incidence
    cols = inc[mesh.elements[T]].indices
    return set(np.unique(cols).tolist())


def mesh_size(mesh, element=None, face=None):
    """``h_T = |T|^(1/2)`` for an element or ``h_F = |F|`` for a face."""
    if (element is None) == (face is None):
        raise ValueError("give exactly one of element= or face=")
    if element is not None:
        area = float(mesh.areas[element])
        if area <= 0:
            raise GeometryError(f"element {element} is degenerate")
        return area ** 0.5
    length = float(mesh.face_lengths[face])
    if length <= 0:
        raise GeometryError(f"face {face} is degenerate")
    return length


def _longest_edge(vertices, elements):
    p = vertices[elements]
    lengths = np.stack(
        [np.linalg.norm(p[:, (i + 2) % 3] - p[:, (i + 1) % 3], axis=1) for i in range(3)], axis=1
    )
    # first index of the longest edge up to roundoff
    longest = lengths.max(axis=1, keepdims=True)
    return np.argmax(lengths >= longest * (1 - 1e-12), axis=1)


def build_initial_mesh(extents=(-1.0, 1.0, -1.0, 1.0), layout=None, n0=8):
    """Structured criss-cross triangulation of a rectangle with ``n0 x n0`` cells.

    Diagonals alternate so that every interior grid vertex of even parity has
    valence eight. Each cell's diagonal is the reference edge of both halves.
    """
    if layout is None:
        layout = ElectrodeLayout()
    if n0 < 1:
        raise ResolutionError("n0 must be positive")
    x0, x1, y0, y1 = (float(v) for v in extents)
    if not (x1 > x0 and y1 > y0):
        raise GeometryError("empty rectangle")
    perimeter = 2 * ((x1 - x0) + (y1 - y0))
    for a, b in layout.segments:
        if a < -_TOL or b > perimeter + _TOL:
            raise InvalidLayoutError("electrode segment leaves the boundary")
    xs = np.linspace(x0, x1, n0 + 1)
    ys = np.linspace(y0, y1, n0 + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (n0 + 1) + i

    tris = []
    for j in range(n0):
        for i in range(n0):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    elements = np.array(tris, dtype=np.int64)
    mesh = Mesh(
        vertices=vertices,
        elements=elements,
        refinement_edge=_longest_edge(vertices, elements),
        generation=np.zeros(len(elements), dtype=np.int64),
        extents=(x0, x1, y0, y1),
        layout=layout,
    )
    _check_electrode_resolution(mesh)
    return mesh


def _check_electrode_resolution(mesh):
    layout = mesh.layout
    if layout.L == 0:
        return
    s = mesh.boundary_arclength(mesh.vertices[mesh.boundary_vertices])
    scale = mesh.perimeter
    for l, (a, b) in enumerate(layout.segments):
        for end in (a, b):
            # the corner at arclength 0 is also arclength == perimeter
            d = np.minimum(np.abs(s - end), np.abs(s + scale - end))
            if d.min() > _TOL * scale:
                raise ResolutionError(
                    f"electrode {l} endpoint at arclength {end} is not a mesh vertex; increase n0"
                )
        if mesh.electrode_faces(l).size == 0:
            raise ResolutionError(f"electrode {l} contains no boundary face")
    tags = mesh.face_tags[mesh.element_faces]
    for row in tags:
        if len({t for t in row.tolist() if t >= 0}) > 1:
            raise ResolutionError("an element touches more than one electrode; increase n0")


def refine(mesh, marked):
    """Newest vertex bisection of the marked elements plus conforming closure.

    Returns a new mesh; ``parent`` maps each new element to the element of
    ``mesh`` it came from.
    """
    marked = np.unique(np.fromiter((int(t) for t in marked), dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_elements:
        raise IndexError("marked element id out of range")

    ef = mesh.element_faces
    m = mesh.n_elements
    ref_face = ef[np.arange(m), mesh.refinement_edge]
    edge_marked = np.zeros(mesh.n_faces, dtype=bool)
    edge_marked[ref_face[marked]] = True
    while True:
        need = edge_marked[ef].any(axis=1) & ~edge_marked[ref_face]
        if not need.any():
            break
        edge_marked[ref_face[need]] = True

    split = np.flatnonzero(edge_marked)
    n_old = mesh.n_vertices
    midpoint = np.full(mesh.n_faces, -1, dtype=np.int64)
    midpoint[split] = n_old + np.arange(split.size)
    fv = mesh.face_vertices[split]
    new_vertices = np.vstack([mesh.vertices, mesh.vertices[fv].mean(axis=1)])
    vertex_parents = np.vstack([np.full((n_old, 2), -1, dtype=np.int64), np.sort(fv, axis=1)])

    elems, refs, gens, parents = [], [], [], []
    E, R, G = mesh.elements, mesh.refinement_edge, mesh.generation
    for e in range(m):
        r = R[e]
        if not edge_marked[ref_face[e]]:
            elems.append(tuple(E[e]))
            refs.append(r)
            gens.append(G[e])
            parents.append(e)
            continue
        v = E[e]
        peak, a, b = v[r], v[(r + 1) % 3], v[(r + 2) % 3]
        mid = midpoint[ref_face[e]]
        # children (mid, peak, a) and (mid, b, peak); their reference edges
        # are the parent's edges opposite b and opposite a respectively
        for child, f in (((mid, peak, a), ef[e, (r + 2) % 3]), ((mid, b, peak), ef[e, (r + 1) % 3])):
            if edge_marked[f]:
                m2 = midpoint[f]
                top, left, right = child
                for grandchild in ((m2, top, left), (m2, right, top)):
                    elems.append(grandchild)
                    refs.append(0)
                    gens.append(G[e] + 2)
                    parents.append(e)
            else:
                elems.append(child)
                refs.append(0)
                gens.append(G[e] + 1)
                parents.append(e)

    return Mesh(
        vertices=new_vertices,
        elements=np.array(elems, dtype=np.int64),
        refinement_edge=np.array(refs, dtype=np.int64),
        generation=np.array(gens, dtype=np.int64),
        extents=mesh.extents,
        layout=mesh.layout,
        parent=np.array(parents, dtype=np.int64),
        vertex_parents=_merge_vertex_parents(mesh.vertex_parents, vertex_parents, n_old),
    )


def _merge_vertex_parents(old, new, n_old):
    out = new.copy()
    out[:n_old] = old
    return out


def refine_uniform(mesh, sweeps=1):
    """Bisect every element ``sweeps`` times."""
    for _ in range(sweeps):
        mesh = refine(mesh, range(mesh.n_elements))
    return mesh


def check_conforming(mesh):
    """Exhaustive face scan. Returns a list of problems (empty when conforming)."""
    problems = []
    fe = mesh.face_elements
    for f in range(mesh.n_faces):
        if fe[f, 1] >= 0:
            continue
        s = mesh.boundary_arclength(mesh.vertices[mesh.face_vertices[f]])
        if np.any(np.isnan(s)):
            problems.append(f"face {f} has one element but is not on the boundary")
    counts = np.bincount(mesh.elements.ravel(), minlength=mesh.n_vertices)
    if np.any(counts == 0):
        problems.append("unused vertices")
    if not np.isclose(mesh.areas.sum(), mesh.domain_area, rtol=1e-12):
        problems.append("elements do not cover the domain")
    return problems


def is_nested(coarse, fine):
    """True if ``fine`` descends from ``coarse`` by refinement."""
    n = coarse.n_vertices
    if fine.n_vertices < n or not np.array_equal(fine.vertices[:n], coarse.vertices):
        return False
    vp = fine.vertex_parents[n:]
    return bool(np.all(vp >= 0) and np.all(vp.max(axis=1, initial=-1) < np.arange(n, fine.n_vertices)))


# -- dump format ----------------------------------------------------------------

def mesh_to_dict(mesh):
    tags = mesh.face_tags
    return {
        "extents": list(mesh.extents),
        "layout": mesh.layout.to_dict(),
        "vertices": mesh.vertices.tolist(),
        "elements": [
            {"vertices": e.tolist(), "refinement_edge": int(r), "generation": int(g), "parent": int(p)}
            for e, r, g, p in zip(mesh.elements, mesh.refinement_edge, mesh.generation, mesh.parent)
        ],
        "vertex_parents": mesh.vertex_parents.tolist(),
        "faces": [
            {"vertices": fv.tolist(), "elements": fe.tolist(), "tag": _tag_name(t)}
            for fv, fe, t in zip(mesh.face_vertices, mesh.face_elements, tags)
        ],
    }


def _tag_name(t):
    if t == INTERIOR:
        return "interior"
    if t == INSULATED:
        return "insulated"
    return f"electrode:{int(t)}"


def mesh_from_dict(data):
    layout = ElectrodeLayout(
        tuple(tuple(s) for s in data["layout"]["segments"]), tuple(data["layout"]["impedances"])
    )
    els = data["elements"]
    return Mesh(
        vertices=np.array(data["vertices"], dtype=float).reshape(-1, 2),
        elements=np.array([e["vertices"] for e in els], dtype=np.int64).reshape(-1, 3),
        refinement_edge=np.array([e["refinement_edge"] for e in els], dtype=np.int64),
        generation=np.array([e["generation"] for e in els], dtype=np.int64),
        extents=tuple(data["extents"]),
        layout=layout,
        parent=np.array([e["parent"] for e in els], dtype=np.int64),
        vertex_parents=np.array(data["vertex_parents"], dtype=np.int64).reshape(-1, 2),
    )


def dump_mesh(mesh, path):
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(mesh), fh, sort_keys=True)


def load_mesh(path):
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))
