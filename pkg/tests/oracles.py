"""Independent reference implementations used only by the tests.

These loop over elements and faces in plain Python and share no assembly
code with the package.
"""
import numpy as np

from adaptive_eit.cem import sum_zero_basis


def p1_gradients(P):
    """Gradients of the three barycentric functions of triangle P (3, 2)."""
    M = np.array([[1.0, *P[0]], [1.0, *P[1]], [1.0, *P[2]]])
    C = np.linalg.inv(M)          # columns: coefficients of each basis function
    return C[1:, :].T             # (3, 2)


def boundary_edges_on(mesh, a, b):
    """Electrode segment (a, b) in arclength -> list of vertex pairs on it."""
    out = []
    for f in mesh.boundary_faces:
        i, j = mesh.face_vertices[f]
        s = mesh.boundary_arclength(mesh.vertices[[i, j]])
        lo, hi = min(s), max(s)
        if hi - lo > mesh.perimeter / 2:  # wraps around arclength 0
            continue
        if lo >= a - 1e-12 and hi <= b + 1e-12:
            out.append((i, j))
    return out


def dense_cem(mesh, sigma, z):
    """Reduced CEM matrix built entry by entry with Gauss quadrature on faces."""
    n, L = mesh.n_vertices, len(z)
    A = np.zeros((n + L, n + L))
    for e in mesh.elements:
        P = mesh.vertices[e]
        d1, d2 = P[1] - P[0], P[2] - P[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        G = p1_gradients(P)
        s = np.mean(np.asarray(sigma)[e])
        for i in range(3):
            for j in range(3):
                A[e[i], e[j]] += s * area * G[i] @ G[j]
    gx = np.array([0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)])
    for l, (a, b) in enumerate(mesh.layout.segments):
        for i, j in boundary_edges_on(mesh, a, b):
            h = np.linalg.norm(mesh.vertices[i] - mesh.vertices[j])
            for t in gx:
                phi = {i: 1 - t, j: t}
                for p, vp in phi.items():
                    A[n + l, p] -= 0.5 * h * vp / z[l]
                    A[p, n + l] -= 0.5 * h * vp / z[l]
                    for q, vq in phi.items():
                        A[p, q] += 0.5 * h * vp * vq / z[l]
                A[n + l, n + l] += 0.5 * h / z[l]
    B = sum_zero_basis(L)
    R = np.zeros((n + L, n + L - 1))
    R[:n, :n] = np.eye(n)
    R[n:, n:] = B
    return R.T @ A @ R, A, R


def dense_solve(mesh, sigma, z, I):
    import scipy.linalg as sla
    Ared, _, R = dense_cem(mesh, sigma, z)
    b = np.zeros(Ared.shape[0])
    b[mesh.n_vertices:] = sum_zero_basis(len(z)).T @ I
    c = sla.cho_factor(Ared)
    x = R @ sla.cho_solve(c, b)
    return x[:mesh.n_vertices], x[mesh.n_vertices:]


def collapsed_gauss(n=10):
    """Tensor Gauss-Legendre rule mapped to the reference triangle (Duffy).

    Returns barycentric points (k, 3) and weights summing to one.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    pts, wts = [], []
    for a, wa in zip(x, w):
        for b, wb in zip(x, w):
            s, t = a, b * (1 - a)
            pts.append((1 - s - t, s, t))
            wts.append(2.0 * wa * wb * (1 - a))
    return np.array(pts), np.array(wts)


def integrate_elementwise(mesh, f_of_values, nodal, n=10):
    """sum_T int_T f(P1 field) with the collapsed rule; f acts on point values."""
    bary, wts = collapsed_gauss(n)
    total = 0.0
    for e in mesh.elements:
        P = mesh.vertices[e]
        d1, d2 = P[1] - P[0], P[2] - P[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        vals = bary @ np.asarray(nodal)[e]
        total += area * np.dot(wts, f_of_values(vals))
    return total


def gradient_energy_oracle(mesh, sigma):
    total = 0.0
    for e in mesh.elements:
        P = mesh.vertices[e]
        d1, d2 = P[1] - P[0], P[2] - P[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        g = p1_gradients(P).T @ np.asarray(sigma)[e]
        total += area * g @ g
    return total


def indicator_oracle(mesh, sigma, us, Us, ps, Ps, params, q=2.0):
    """Element loop for eta1^2, eta2^2 and eta3^q; faces found by edge matching."""
    m = mesh.n_elements
    V = mesh.vertices
    sigma = np.asarray(sigma)
    grads = {}
    for t, e in enumerate(mesh.elements):
        grads[t] = p1_gradients(V[e]).T   # (2, 3): grad = G @ values
    edges = {}
    for t, e in enumerate(mesh.elements):
        for i in range(3):
            key = tuple(sorted((int(e[(i + 1) % 3]), int(e[(i + 2) % 3]))))
            edges.setdefault(key, []).append(t)
    z = mesh.layout.impedances
    gx = np.array([0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)])

    def area(t):
        P = V[mesh.elements[t]]
        d1, d2 = P[1] - P[0], P[2] - P[0]
        return 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])

    def outward(t, a, b):
        d = V[b] - V[a]
        n = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        c = V[mesh.elements[t]].mean(axis=0)
        return n if n @ (0.5 * (V[a] + V[b]) - c) > 0 else -n

    def electrode_of(a, b):
        s = mesh.boundary_arclength(V[[a, b]])
        mid = mesh.boundary_arclength(0.5 * (V[a] + V[b])[None])[0]
        for l, (lo, hi) in enumerate(mesh.layout.segments):
            if lo - 1e-12 <= mid <= hi + 1e-12 and abs(s[1] - s[0]) < mesh.perimeter / 2:
                return l
        return -1

    def flux_eta(w_list, W_list):
        out = np.zeros(m)
        for w, W in zip(w_list, W_list):
            for t, e in enumerate(mesh.elements):
                gs, gw = grads[t] @ sigma[e], grads[t] @ np.asarray(w)[e]
                out[t] += area(t) * area(t) * (gs @ gw) ** 2
            for (a, b), ts in edges.items():
                h = np.linalg.norm(V[a] - V[b])
                t0 = ts[0]
                n = outward(t0, a, b)
                flux0 = grads[t0] @ np.asarray(w)[mesh.elements[t0]] @ n
                if len(ts) == 2:
                    flux1 = grads[ts[1]] @ np.asarray(w)[mesh.elements[ts[1]]] @ n
                    jump = lambda s_: s_ * (flux0 - flux1)
                    robin = lambda t_: 0.0
                else:
                    jump = lambda s_: s_ * flux0
                    l = electrode_of(a, b)
                    if l >= 0:
                        robin = lambda t_: ((1 - t_) * w[a] + t_ * w[b] - W[l]) / z[l]
                    else:
                        robin = lambda t_: 0.0
                val = 0.0
                for t_ in gx:
                    s_ = (1 - t_) * sigma[a] + t_ * sigma[b]
                    val += 0.5 * h * (jump(s_) + robin(t_)) ** 2
                for t in ts:
                    out[t] += h * val
        return out

    eta1 = flux_eta(us, Us)
    eta2 = flux_eta(ps, Ps)
    eta3 = np.zeros(m)
    bary, wts = collapsed_gauss(12)
    a_e = params.alpha * params.eps
    for t, e in enumerate(mesh.elements):
        coup = sum((grads[t] @ np.asarray(u)[e]) @ (grads[t] @ np.asarray(p)[e]) for u, p in zip(us, ps))
        s = bary @ sigma[e]
        Wp = 2 * (s - params.c0) * (s - params.c1) * (2 * s - params.c0 - params.c1)
        R = params.alpha / (2 * params.eps) * Wp - coup
        eta3[t] += area(t) ** (q / 2) * area(t) * np.dot(wts, np.abs(R) ** q)
    for (a, b), ts in edges.items():
        h = np.linalg.norm(V[a] - V[b])
        n = outward(ts[0], a, b)
        j = grads[ts[0]] @ sigma[mesh.elements[ts[0]]] @ n
        if len(ts) == 2:
            j -= grads[ts[1]] @ sigma[mesh.elements[ts[1]]] @ n
        for t in ts:
            eta3[t] += h * h * abs(a_e * j) ** q
    return eta1, eta2, eta3


# -- mesh topology -----------------------------------------------------------------

def brute_force_faces(mesh):
    """Edge -> list of elements, by enumerating element edges."""
    faces = {}
    for t, e in enumerate(mesh.elements.tolist()):
        for i in range(3):
            key = tuple(sorted((e[(i + 1) % 3], e[(i + 2) % 3])))
            faces.setdefault(key, []).append(t)
    return faces


def on_boundary(mesh, a, b):
    x0, x1, y0, y1 = mesh.extents
    p, q = mesh.vertices[a], mesh.vertices[b]
    for k, v in ((0, x0), (0, x1), (1, y0), (1, y1)):
        if abs(p[k] - v) < 1e-12 and abs(q[k] - v) < 1e-12:
            return True
    return False


def assert_conforming_brute(mesh):
    for (a, b), ts in brute_force_faces(mesh).items():
        if on_boundary(mesh, a, b):
            assert len(ts) == 1
        else:
            assert len(ts) == 2, f"hanging edge {(a, b)}"
    # no vertex lies in the relative interior of another element's edge
    V = mesh.vertices
    for (a, b) in brute_force_faces(mesh):
        pa, pb = V[a], V[b]
        d = pb - pa
        t = (V - pa) @ d / (d @ d)
        dist = np.abs((V[:, 0] - pa[0]) * d[1] - (V[:, 1] - pa[1]) * d[0])
        inside = (t > 1e-12) & (t < 1 - 1e-12) & (dist < 1e-12)
        assert not inside.any()
