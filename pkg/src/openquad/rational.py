"""Barycentric rational approximation (AAA) with pole and residue extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class BarycentricRational:
    """``r(z) = sum_j w_j f_j / (z - z_j) / sum_j w_j / (z - z_j)``."""

    support: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    error: float
    rms_history: tuple[float, ...] = ()

    def __call__(self, z):
        z = np.asarray(z, complex)
        flat = z.reshape(-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            C = 1.0 / (flat[:, None] - self.support[None, :])
            out = (C @ (self.weights * self.values)) / (C @ self.weights)
        # exact interpolation at support points
        hit = np.isinf(C) | np.isnan(C)
        rows = np.flatnonzero(hit.any(axis=1))
        for i in rows:
            out[i] = self.values[np.flatnonzero(hit[i])[0]]
        return out.reshape(z.shape)

    def poles(self) -> np.ndarray:
        """Finite poles from the arrowhead generalized eigenproblem."""
        m = len(self.support)
        if m < 2:
            return np.zeros(0, complex)
        E = np.zeros((m + 1, m + 1), complex)
        E[0, 1:] = self.weights
        E[1:, 0] = 1.0
        E[1:, 1:] = np.diag(self.support)
        B = np.eye(m + 1, dtype=complex)
        B[0, 0] = 0.0
        ev = sla.eigvals(E, B)
        return ev[np.isfinite(ev)]

    def residues(self, poles: np.ndarray) -> np.ndarray:
        """Residues ``n(p) / d'(p)`` at the given simple poles."""
        poles = np.asarray(poles, complex)
        C = 1.0 / (poles[:, None] - self.support[None, :])
        n = C @ (self.weights * self.values)
        dprime = -(C**2) @ self.weights
        return n / dprime


def aaa(z, f, tol: float = 1e-13, max_terms: int = 100, min_gain: float = 10 * EPS) -> BarycentricRational:
    """Adaptive Antoulas-Anderson rational fit of samples ``f`` at points ``z``.

    Support points are added greedily at the sample of largest error. The
    iteration stops when the maximum error drops below ``tol * max|f|``, when
    an extra term improves the rms error by less than ``min_gain * max|f|``,
    or after ``max_terms`` support points.
    """
    z = np.asarray(z, complex).reshape(-1)
    f = np.asarray(f, complex).reshape(-1)
    if z.shape != f.shape:
        raise ValueError("z and f must have the same length")
    scale = float(np.max(np.abs(f))) if f.size else 0.0
    if scale == 0.0:
        return BarycentricRational(z[:1], f[:1], np.ones(1, complex), 0.0)
    mask = np.ones(len(z), bool)
    R = np.full(len(z), np.mean(f))
    sup, vals = [], []
    weights = np.ones(1, complex)
    history: list[float] = []
    best = None
    for _ in range(min(max_terms, len(z) - 1)):
        j = int(np.argmax(np.where(mask, np.abs(f - R), -1.0)))
        sup.append(z[j])
        vals.append(f[j])
        mask[j] = False
        zs, fs = np.array(sup), np.array(vals)
        C = 1.0 / (z[mask][:, None] - zs[None, :])
        A = (f[mask][:, None] - fs[None, :]) * C
        _, _, vh = np.linalg.svd(A, full_matrices=False)
        weights = vh[-1].conj()
        num = C @ (weights * fs)
        den = C @ weights
        R = f.copy()
        R[mask] = num / den
        err = np.abs(f - R)
        rms = float(np.sqrt(np.mean(err**2)))
        cand = BarycentricRational(zs.copy(), fs.copy(), weights.copy(), float(err.max()), tuple(history + [rms]))
        if history and history[-1] - rms < min_gain * scale:
            break
        history.append(rms)
        best = cand
        if err.max() <= tol * scale:
            break
    return best
