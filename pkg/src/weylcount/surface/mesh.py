"""Triangle meshes of closed surfaces: validation, areas, OFF files, icospheres."""

import numpy as np

from ..errors import MeshQualityError

DEGENERATE_AREA = 1e-14


class SurfaceMesh:
    """Watertight, consistently oriented triangle mesh with outward normals.

    Validation enforces: every directed edge appears exactly once (so every
    undirected edge is shared by exactly two triangles with opposite
    orientation), no degenerate triangles, and positive signed volume
    (outward orientation).
    """

    def __init__(self, vertices, triangles, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self._vertex_areas = None
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshQualityError("vertices must have shape (n, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshQualityError("triangles must have shape (m, 3)")
        if validate:
            self.validate()

    # ------------------------------------------------------------------
    # topology / validity
    # ------------------------------------------------------------------
    def validate(self):
        nv = len(self.vertices)
        tri = self.triangles
        if len(tri) == 0:
            raise MeshQualityError("mesh has no triangles")
        if tri.min() < 0 or tri.max() >= nv:
            raise MeshQualityError("triangle index out of range")
        if np.any((tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2])
                  | (tri[:, 0] == tri[:, 2])):
            raise MeshQualityError("triangle with repeated vertex")
        directed = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        keys = directed[:, 0] * nv + directed[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise MeshQualityError("directed edge used twice: inconsistent orientation")
        swapped = directed[:, 1] * nv + directed[:, 0]
        if not np.array_equal(np.sort(keys), np.sort(swapped)):
            raise MeshQualityError("boundary edge found: mesh is not watertight")
        areas = self.face_areas()
        if np.any(areas < DEGENERATE_AREA):
            worst = int(np.argmin(areas))
            raise MeshQualityError(
                f"degenerate triangle {worst} with area {areas[worst]:.3e}")
        if self.signed_volume() <= 0.0:
            raise MeshQualityError("negative signed volume: mesh oriented inward")

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def triangle_count(self):
        return len(self.triangles)

    @property
    def edge_count(self):
        directed = np.concatenate([self.triangles[:, [0, 1]],
                                   self.triangles[:, [1, 2]],
                                   self.triangles[:, [2, 0]]])
        directed = np.sort(directed, axis=1)
        return len(np.unique(directed[:, 0] * len(self.vertices) + directed[:, 1]))

    def euler_characteristic(self):
        return self.vertex_count - self.edge_count + self.triangle_count

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------
    def _corner_vectors(self):
        v = self.vertices[self.triangles]
        return v[:, 0], v[:, 1], v[:, 2]

    def face_cross(self):
        p0, p1, p2 = self._corner_vectors()
        return np.cross(p1 - p0, p2 - p0)

    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross(), axis=-1)

    @property
    def area(self):
        return float(np.sum(self.face_areas()))

    def signed_volume(self):
        p0, p1, p2 = self._corner_vectors()
        return float(np.sum(np.einsum("ij,ij->i", p0, np.cross(p1, p2))) / 6.0)

    def face_normals(self):
        cross = self.face_cross()
        return cross / np.linalg.norm(cross, axis=-1)[:, None]

    def vertex_normals(self):
        """Area-weighted average of incident face normals, unit length."""
        cross = self.face_cross()  # = 2 * area * unit normal
        normals = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(normals, self.triangles[:, k], cross)
        norms = np.linalg.norm(normals, axis=-1)
        if np.any(norms == 0.0):
            raise MeshQualityError("vertex with vanishing averaged normal")
        return normals / norms[:, None]

    def vertex_areas(self):
        """Lumped vertex areas: Voronoi weights, barycentric fallback.

        Non-obtuse triangles distribute their area by the cotangent Voronoi
        rule; obtuse ones fall back to equal thirds.  Either way the weights
        of one triangle sum to its area, so the total equals the mesh area.
        """
        if self._vertex_areas is not None:
            return self._vertex_areas
        p0, p1, p2 = self._corner_vectors()
        corners = (p0, p1, p2)
        areas = self.face_areas()
        double = 2.0 * areas

        cots = []
        for k in range(3):
            a, b, c = corners[k], corners[(k + 1) % 3], corners[(k + 2) % 3]
            cots.append(np.einsum("ij,ij->i", b - a, c - a) / double)
        cots = np.asarray(cots)  # (3, faces); cot of angle at each corner

        obtuse = np.any(cots < 0.0, axis=0)
        weights = np.empty((3, len(areas)))
        for k in range(3):
            # Voronoi weight at corner k: (|e_j|^2 cot_j + |e_i|^2 cot_i)/8
            # with i, j the other two corners and e_i the edge opposite i.
            i, j = (k + 1) % 3, (k + 2) % 3
            edge_i = np.sum((corners[j] - corners[k]) ** 2, axis=-1)
            edge_j = np.sum((corners[i] - corners[k]) ** 2, axis=-1)
            weights[k] = (edge_i * cots[i] + edge_j * cots[j]) / 8.0
        weights[:, obtuse] = areas[obtuse] / 3.0

        out = np.zeros(len(self.vertices))
        for k in range(3):
            np.add.at(out, self.triangles[:, k], weights[k])
        self._vertex_areas = out
        return out

    def integrate(self, f):
        """Lumped vertex-rule integral of ``f`` (callable on points or array)."""
        if callable(f):
            values = np.asarray(f(self.vertices), dtype=float)
        else:
            values = np.asarray(f, dtype=float)
        values = np.broadcast_to(values, (len(self.vertices),))
        return float(np.dot(self.vertex_areas(), values))

    def content_hash(self):
        """Hex digest identifying geometry and connectivity bit-for-bit."""
        import hashlib

        digest = hashlib.sha256()
        digest.update(np.int64(self.vertices.shape[0]).tobytes())
        digest.update(np.int64(self.triangles.shape[0]).tobytes())
        digest.update(self.vertices.tobytes())
        digest.update(self.triangles.tobytes())
        return digest.hexdigest()


# ----------------------------------------------------------------------
# generators / IO
# ----------------------------------------------------------------------

def icosphere(level):
    """Icosahedron subdivided ``level`` times, vertices projected to the unit sphere."""
    if level < 0:
        raise MeshQualityError("subdivision level must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    vertices /= np.linalg.norm(vertices, axis=-1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in vertices]

    for _ in range(level):
        cache = {}
        points = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                mid = np.asarray(points[i]) + np.asarray(points[j])
                mid /= np.linalg.norm(mid)
                cache[key] = len(points)
                points.append(tuple(mid))
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        verts, faces = points, new_faces

    return SurfaceMesh(np.asarray(verts, dtype=float), np.asarray(faces, dtype=np.int64))


def _off_tokens(path):
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.split("#", 1)[0].strip()
            if line:
                yield from line.split()


def read_off(path):
    """Read an ASCII OFF triangle mesh (validated on construction)."""
    tokens = _off_tokens(path)
    try:
        header = next(tokens)
    except StopIteration:
        raise MeshQualityError(f"{path}: empty OFF file") from None
    if header != "OFF":
        raise MeshQualityError(f"{path}: missing OFF header, got {header!r}")
    try:
        nv = int(next(tokens))
        nf = int(next(tokens))
        next(tokens)  # edge count, ignored
        vertices = np.fromiter(
            (float(next(tokens)) for _ in range(3 * nv)), dtype=float, count=3 * nv
        ).reshape(nv, 3)
        faces = np.empty((nf, 3), dtype=np.int64)
        for f in range(nf):
            arity = int(next(tokens))
            if arity != 3:
                raise MeshQualityError(f"{path}: face {f} has {arity} vertices; "
                                       "only triangles are supported")
            faces[f] = [int(next(tokens)) for _ in range(3)]
    except (StopIteration, ValueError) as exc:
        raise MeshQualityError(f"{path}: truncated or malformed OFF data") from exc
    return SurfaceMesh(vertices, faces)


def write_off(mesh, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("OFF\n")
        handle.write(f"{mesh.vertex_count} {mesh.triangle_count} {mesh.edge_count}\n")
        for v in mesh.vertices:
            handle.write("%.17g %.17g %.17g\n" % tuple(v))
        for t in mesh.triangles:
            handle.write("3 %d %d %d\n" % tuple(t))


def read_vertex_values(path, expected_count=None):
    """Read a per-vertex scalar table: one decimal value per line."""
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for ln, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise MeshQualityError(f"{path}:{ln}: not a number: {line!r}") from None
    values = np.asarray(values, dtype=float)
    if expected_count is not None and len(values) != expected_count:
        raise MeshQualityError(
            f"{path}: {len(values)} values for {expected_count} vertices")
    return values
