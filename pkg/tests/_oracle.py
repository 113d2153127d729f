"""Independent brute-force reference for the splitting scheme.

Written deliberately against the flux form

    A (u' - u)/tau + sum_i B_i (U_face+ - U_face-)/h = 0

with per-cell python loops, an explicit A^-1 solve and a least-squares
boundary solve, sharing no code path with the production kernels.
"""
import numpy as np


def _invariant_line(u, T_inv, axis_dim, fixed, N, n):
    line = np.empty((N, n))
    for i in range(N):
        idx = list(fixed)
        idx.insert(axis_dim, i)
        line[i] = T_inv @ u[tuple(idx)]
    return line


def _face_values_line(line, mu, eps, boundary, T, N, n):
    """Faces 0..N of one pencil, filled by upwind copies; boundary faces
    either wrap or solve (phi T) V = 0 with outgoing/zero components pinned."""
    W = np.zeros((N + 1, n))
    for c in range(n):
        if mu[c] > eps:
            W[1:, c] = line[:, c]
            W[0, c] = line[-1, c] if boundary is None else 0.0
        elif mu[c] < -eps:
            W[:-1, c] = line[:, c]
            W[N, c] = line[0, c] if boundary is None else 0.0
    if boundary is not None:
        phi_low, phi_high = boundary
        W[0] = _solve_face(phi_low, T, mu, eps, line[0], incoming_positive=True)
        W[N] = _solve_face(phi_high, T, mu, eps, line[-1], incoming_positive=False)
    return W


def _solve_face(phi, T, mu, eps, v_int, incoming_positive):
    n = mu.shape[0]
    if incoming_positive:
        inc = [c for c in range(n) if mu[c] > eps]
    else:
        inc = [c for c in range(n) if mu[c] < -eps]
    rest = [c for c in range(n) if c not in inc]
    V = np.zeros(n)
    for c in rest:
        V[c] = v_int[c]
    if inc:
        G = np.atleast_2d(phi) @ T
        rhs = -G[:, rest] @ V[rest] if rest else np.zeros(G.shape[0])
        sol, *_ = np.linalg.lstsq(G[:, inc], rhs, rcond=None)
        for c, val in zip(inc, sol):
            V[c] = val
    return V


def upwind_step_reference(u, A, Bs, transforms, tau, h, boundary=None):
    """One step of the scheme on a value array ``u`` of shape (N,)*m + (n,).

    ``boundary`` is None for periodic wrap or a dict axis -> (phi_low,
    phi_high) of boundary matrices on physical variables.
    """
    m = len(Bs)
    N = u.shape[0]
    n = u.shape[-1]
    flux = np.zeros_like(u)
    for axis in range(1, m + 1):
        tr = transforms[axis - 1]
        d = m - axis  # storage dimension of this axis
        bnd = None if boundary is None else boundary.get(axis)
        other_shapes = [u.shape[i] for i in range(m) if i != d]
        for fixed in np.ndindex(*other_shapes):
            line = _invariant_line(u, tr.T_inv, d, fixed, N, n)
            W = _face_values_line(line, tr.mu, tr.eps0, bnd, tr.T, N, n)
            U = W @ tr.T.T
            for i in range(N):
                idx = list(fixed)
                idx.insert(d, i)
                flux[tuple(idx)] += Bs[axis - 1] @ (U[i + 1] - U[i])
    return u - (tau / h) * np.linalg.solve(A, flux.reshape(-1, n).T).T.reshape(u.shape)
