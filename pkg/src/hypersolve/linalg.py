"""Dense symmetric spectral routines and canonical transforms.

For each coordinate axis the system ``A u_t + B u_x = 0`` is decoupled into
independent transport equations by the transform ``T = L D K``:

* ``L``  orthonormal eigenbasis of ``A`` (``L^T A L = diag(lam)``),
* ``D = diag(lam)^(-1/2)``,
* ``K``  orthonormal eigenbasis of the symmetric matrix ``D L^T B L D``.

The eigenvalues ``mu`` of that inner matrix are exactly the roots of
``det(mu*A - B)``, i.e. the characteristic wave speeds of the pencil, and
``T^-1 A^-1 B T = diag(mu)``.  Everything here is IEEE double precision with
explicit tolerances; eigenvector sign is normalised so repeated runs are
bit-identical.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EigenSolverError, UsageError

# Near-collision gap (distinct eigenvalues closer than this, relative to the
# spectral radius) below which eigenvector selection becomes unreliable.
CLUSTER_GAP = 1e-8


class EigenvalueClusterWarning(UserWarning):
    """Distinct pencil eigenvalues are nearly colliding; the computed
    eigenvectors (hence the canonical transform) may be poorly determined."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymMatrix:
    """A real symmetric matrix; construction symmetrises the input."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError(f"expected a square matrix, got shape {arr.shape}")
        object.__setattr__(self, "a", _readonly((arr + arr.T) / 2.0))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def max_norm(self) -> float:
        return float(np.abs(self.a).max()) if self.n else 0.0


def as_sym(m) -> SymMatrix:
    """Coerce an array-like (or pass through a SymMatrix)."""
    return m if isinstance(m, SymMatrix) else SymMatrix(np.asarray(m, dtype=np.float64))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues ascending, eigenvectors as orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_column_signs(q: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """First component of each column with magnitude > eps made nonnegative.

    Pins down the sign ambiguity of the eigensolver so that transforms are
    reproducible across runs (the scheme requires a basis fixed once).
    """
    q = q.copy()
    for j in range(q.shape[1]):
        col = q[:, j]
        significant = np.nonzero(np.abs(col) > eps)[0]
        if significant.size and col[significant[0]] < 0.0:
            q[:, j] = -col
    return q


def sym_eigen(m) -> SpectralDecomposition:
    """Orthonormal eigendecomposition of a symmetric matrix.

    Deterministic: eigenvalues ascending and a fixed eigenvector sign
    convention.  Raises :class:`EigenSolverError` if LAPACK's iteration does
    not converge or the result fails the reconstruction tolerance.
    """
    sm = as_sym(m)
    try:
        lam, q = np.linalg.eigh(sm.a)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"symmetric eigensolver did not converge on a {sm.n}x{sm.n} matrix "
            f"(max|entry| = {sm.max_norm:.3e}): {exc}"
        ) from exc
    q = _fix_column_signs(q)
    dec = SpectralDecomposition(lam, q)
    _validate_decomposition(dec, sm)
    return dec


def _validate_decomposition(dec: SpectralDecomposition, sm: SymMatrix) -> None:
    q = dec.eigenvectors
    ortho = np.abs(q.T @ q - np.eye(dec.n)).max() if dec.n else 0.0
    if ortho > 1e-12:
        raise EigenSolverError(
            f"eigenvector columns not orthonormal (defect {ortho:.3e}) "
            f"for a {sm.n}x{sm.n} matrix"
        )
    recon = np.abs((q * dec.eigenvalues) @ q.T - sm.a).max() if dec.n else 0.0
    if recon > 1e-10 * (1.0 + sm.max_norm):
        raise EigenSolverError(
            f"eigendecomposition reconstruction defect {recon:.3e} exceeds "
            f"tolerance for a {sm.n}x{sm.n} matrix"
        )


@dataclass(frozen=True)
class CanonicalTransform:
    """Per-axis diagonalising transform of the pencil ``mu A - B``.

    ``signs`` classifies each eigenvalue of ``mu`` as +1/0/-1 under the
    resolved threshold ``eps0``; ``counts`` is the (n_plus, n_zero, n_minus)
    partition.  Downstream code must only rely on (mu, counts, eigenspaces):
    the orthonormal bases are not unique.
    """

    axis: int
    T: np.ndarray
    T_inv: np.ndarray
    mu: np.ndarray
    counts: tuple[int, int, int]
    signs: np.ndarray
    eps0: float

    def __post_init__(self):
        for name in ("T", "T_inv", "mu"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        object.__setattr__(
            self, "signs", np.ascontiguousarray(self.signs, dtype=np.int64)
        )
        self.signs.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def max_speed(self) -> float:
        return float(np.abs(self.mu).max())


def _sign_threshold(mu: np.ndarray, eps0: float | None) -> float:
    if eps0 is not None:
        return float(eps0)
    scale = float(np.abs(mu).max()) if mu.size else 0.0
    return 1e-12 * (1.0 + scale)


def canonical_transform(A, B, eps0: float | None = None, axis: int = 1) -> CanonicalTransform:
    """Build ``T = L D K`` and its exact-factor inverse for one axis.

    ``eps0`` is the eigenvalue sign-classification threshold; by default it
    is ``1e-12 * (1 + max|mu|)``.  ``A`` must be positive definite.
    """
    sa, sb = as_sym(A), as_sym(B)
    if sa.n != sb.n:
        raise UsageError(f"dimension mismatch: A is {sa.n}x{sa.n}, B is {sb.n}x{sb.n}")
    dec_a = sym_eigen(sa)
    lam = dec_a.eigenvalues
    pd_floor = eps0 if eps0 is not None else 1e-12 * (1.0 + float(np.abs(lam).max()))
    if lam[0] <= pd_floor:
        raise ConfigurationError(
            f"A is not positive definite: smallest eigenvalue {lam[0]:.6e}"
        )
    L = dec_a.eigenvectors
    d = 1.0 / np.sqrt(lam)
    # inner = D L^T B L D, symmetric by construction up to roundoff
    inner = (L * d).T @ sb.a @ (L * d)
    dec_inner = sym_eigen(inner)
    K = dec_inner.eigenvectors
    mu = dec_inner.eigenvalues

    T = (L * d) @ K
    T_inv = (K.T * np.sqrt(lam)) @ L.T  # K^-1 D^-1 L^-1 from the exact factors

    thresh = _sign_threshold(mu, eps0)
    signs = np.zeros(sa.n, dtype=np.int64)
    signs[mu > thresh] = 1
    signs[mu < -thresh] = -1
    counts = (int((signs == 1).sum()), int((signs == 0).sum()), int((signs == -1).sum()))

    _warn_near_collisions(mu, thresh)
    tr = CanonicalTransform(axis, T, T_inv, mu, counts, signs, thresh)
    _validate_transform(tr, sa, sb)
    return tr


def _warn_near_collisions(mu: np.ndarray, thresh: float) -> None:
    # Eigenvalues that are distinct (gap > thresh) but closer than the
    # cluster gap: eigenvector computation is ill-conditioned there.  Exact
    # repeats (within thresh) are fine; eigenspace projectors handle them.
    if mu.size < 2:
        return
    gaps = np.diff(mu)
    scale = 1.0 + float(np.abs(mu).max())
    risky = (gaps > thresh) & (gaps < CLUSTER_GAP * scale)
    if risky.any():
        warnings.warn(
            f"pencil has nearly colliding eigenvalues (min distinct gap "
            f"{gaps[risky].min():.3e}); eigenvectors may be unreliable",
            EigenvalueClusterWarning,
            stacklevel=3,
        )


def _validate_transform(tr: CanonicalTransform, sa: SymMatrix, sb: SymMatrix) -> None:
    n = tr.n
    inv_defect = np.abs(tr.T @ tr.T_inv - np.eye(n)).max()
    if inv_defect > 1e-10:
        raise EigenSolverError(
            f"canonical transform inverse defect {inv_defect:.3e} (axis {tr.axis})"
        )
    diag_defect = np.abs(
        tr.T_inv @ np.linalg.solve(sa.a, sb.a) @ tr.T - np.diag(tr.mu)
    ).max()
    if diag_defect > 1e-9 * (1.0 + sb.max_norm):
        raise EigenSolverError(
            f"canonical transform fails to diagonalise the sub-system "
            f"(defect {diag_defect:.3e}, axis {tr.axis})"
        )


def pencil_eigenvalues(A, B, eps0: float | None = None) -> np.ndarray:
    """Roots of ``det(mu A - B)`` ascending, for positive definite ``A``."""
    return canonical_transform(A, B, eps0=eps0).mu
