"""Small 3-vector and 3x3 symmetric-matrix helpers shared across modules."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def as_vec3(value, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 array of shape (3,)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise ConfigError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite, got {arr}")
    return arr


def planar_norm(v: np.ndarray) -> float:
    """Length of the x/y part only."""
    return float(np.hypot(v[0], v[1]))


def angle_between_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two vectors in degrees; 0 when either is null."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    c = float(np.dot(a, b)) / (na * nb)
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def inv3(matrix: np.ndarray) -> np.ndarray:
    """Inverse of a 3x3 matrix by cofactors, preserving the input dtype.

    The stock inverse rejects longdouble input; this one keeps extended
    precision so identities involving inflated covariances stay exact.
    """
    a = np.asarray(matrix)
    if a.shape != (3, 3):
        raise ConfigError(f"inv3 expects shape (3, 3), got {a.shape}")
    adj = np.empty_like(a)
    adj[0, 0] = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    adj[0, 1] = a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]
    adj[0, 2] = a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]
    adj[1, 0] = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    adj[1, 1] = a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
    adj[1, 2] = a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]
    adj[2, 0] = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    adj[2, 1] = a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]
    adj[2, 2] = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    det = a[0, 0] * adj[0, 0] + a[0, 1] * adj[1, 0] + a[0, 2] * adj[2, 0]
    if det == 0:
        raise ConfigError("inv3: matrix is singular")
    return adj / det


def sym_eig3(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix, ascending.

    Cyclic Jacobi iteration carried out in the matrix's own dtype.  Stays in
    extended precision when fed a longdouble matrix, which the stock
    eigensolver refuses; also stable when diagonal entries differ by
    hundreds of orders of magnitude, which happens to forgetting-inflated
    covariances with an unexcited direction.
    """
    a = np.array(matrix, dtype=matrix.dtype if hasattr(matrix, "dtype") else np.float64)
    if a.shape != (3, 3):
        raise ConfigError(f"sym_eig3 expects shape (3, 3), got {a.shape}")
    a = (a + a.T) / 2
    one = a.dtype.type(1)
    with np.errstate(over="ignore"):
        for _ in range(64):
            off = abs(a[0, 1]) + abs(a[0, 2]) + abs(a[1, 2])
            if off == 0:
                break
            for p, q in ((0, 1), (0, 2), (1, 2)):
                apq = a[p, q]
                if apq == 0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * apq)
                if not np.isfinite(tau):
                    # rotation angle underflows; dropping apq shifts the
                    # eigenvalues by apq^2/gap which is below resolution
                    a[p, q] = a[q, p] = 0
                    continue
                if tau >= 0:
                    t = one / (tau + np.sqrt(one + tau * tau))
                else:
                    t = -one / (-tau + np.sqrt(one + tau * tau))
                c = one / np.sqrt(one + t * t)
                s = t * c
                for r in range(3):
                    arp, arq = a[r, p], a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(3):
                    apr, aqr = a[p, r], a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
                a[p, q] = a[q, p] = 0
    eig = np.sort(np.diag(a))
    return eig
