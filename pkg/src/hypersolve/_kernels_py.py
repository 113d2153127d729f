"""Pure-numpy implementation of the per-axis sweep kernels.

Both backends implement the same two operations on a batch of 1-D pencils
of canonical (Riemannian-invariant) variables ``v`` with shape
``(pencils, cells, components)``:

``axis_sweep_convex``
    next-level invariants ``(v - a*v) + a*up`` where ``up`` is the value at
    the upwind face of each cell and ``a`` the per-component Courant number.
    The grouping is chosen so that ``a == 1`` reproduces the upwind neighbour
    bit-for-bit (exact transport at Courant number one).

``axis_sweep_delta``
    the per-axis increment ``a*(v - up)``; the caller maps it back to
    physical variables and subtracts, which realises the simultaneous
    multi-axis update.

``up`` is the left neighbour for positive wave speed, the right neighbour
for negative speed and the cell itself for zero speed (where ``a`` is zero).
At the two boundary faces the missing neighbour comes either from the
periodic wrap or from the pre-solved face vectors ``v_low`` / ``v_high``.

The compiled backend in ``_kernels.pyx`` mirrors these formulas operation
for operation; outputs are required to be bit-identical.
"""
def _upwind(v, sgn, v_low, v_high, wrap):
    up = v.copy()
    pos = sgn > 0
    neg = sgn < 0
    if pos.any():
        up[:, 1:, pos] = v[:, :-1, pos]
        up[:, 0, pos] = v[:, -1, pos] if wrap else v_low[:, pos]
    if neg.any():
        up[:, :-1, neg] = v[:, 1:, neg]
        up[:, -1, neg] = v[:, 0, neg] if wrap else v_high[:, neg]
    return up


def axis_sweep_convex(v, a, sgn, v_low, v_high, wrap):
    up = _upwind(v, sgn, v_low, v_high, wrap)
    return (v - a * v) + a * up


def axis_sweep_delta(v, a, sgn, v_low, v_high, wrap):
    up = _upwind(v, sgn, v_low, v_high, wrap)
    return a * (v - up)
