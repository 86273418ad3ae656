"""Dense Hermitian / symmetric matrix helpers shared by the solver and the schemes."""

from __future__ import annotations

import numpy as np

PSD_TOL = 1e-9


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return (m + m^H)/2, the nearest Hermitian matrix."""
    m = np.asarray(m)
    return 0.5 * (m + m.conj().T)


def is_hermitian(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def _check_square_finite(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.

    Returns ``(w, v)`` with ``m == v @ diag(w) @ v^H`` and orthonormal columns in ``v``.
    """
    m = _check_square_finite(m)
    w, v = np.linalg.eigh(hermitize(m))
    return w[::-1].copy(), v[:, ::-1].copy()


def jacobi_eig_hermitian(m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Cyclic complex Jacobi eigensolver.

    Slow reference implementation kept independent of LAPACK; used to
    cross-check :func:`eig_hermitian`.
    """
    a = hermitize(_check_square_finite(m)).astype(complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # phase-rotate so the pivot becomes real, then a real Jacobi rotation
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * abs(apq), aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s * phase
                rot[q, p] = -s * np.conj(phase)
                a = rot.conj().T @ a @ rot
                v = v @ rot
    w = np.real(np.diag(a))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    """True iff the smallest eigenvalue of ``m`` is >= -tol * max(1, max|eig|)."""
    m = _check_square_finite(m)
    if m.size == 0:
        return True
    w = np.linalg.eigvalsh(hermitize(m))
    scale = max(1.0, float(np.max(np.abs(w))))
    return bool(w[0] >= -tol * scale)


def real_embed(m: np.ndarray) -> np.ndarray:
    """Map an n x n Hermitian matrix to the 2n x 2n real symmetric [[Re, -Im], [Im, Re]]."""
    m = np.asarray(m)
    re, im = np.real(m), np.imag(m)
    return np.block([[re, -im], [im, re]])


def real_unembed(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_embed` after averaging the redundant copies."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0] // 2
    re = 0.5 * (x[:n, :n] + x[n:, n:])
    im = 0.5 * (x[n:, :n] - x[:n, n:])
    return hermitize(re + 1j * im)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Trace inner product Re tr(a^H b)."""
    return float(np.real(np.vdot(a, b)))


def rand_hermitian(rng: np.random.Generator, n: int, complex_: bool = True) -> np.ndarray:
    g = rng.standard_normal((n, n))
    if complex_:
        g = g + 1j * rng.standard_normal((n, n))
    return hermitize(g)
