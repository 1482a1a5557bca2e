"""Exact wave maps used as oracles by the solver tests."""

from dataclasses import dataclass

import numpy as np


@dataclass
class RotatingGeodesic:
    """phi(t) = (cos wt, sin wt, 0): spatially constant, box phi = -w^2 phi = phi Q0."""

    omega: float = 1.3
    t_init: float = 0.0

    def at(self, t, X1, X2):
        shape = np.broadcast_shapes(np.shape(X1), np.shape(X2))
        phi = np.zeros(shape + (3,))
        pi = np.zeros(shape + (3,))
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        phi[..., 0], phi[..., 1] = c, s
        pi[..., 0], pi[..., 1] = -self.omega * s, self.omega * c
        return phi, pi

    def sample(self, X1, X2):
        return self.at(self.t_init, X1, X2)


@dataclass
class NullComposedWave:
    """phi = (cos a, sin a, 0) with a = A sin(k(x1 - t)) + B cos(2k(x2 + t)), periodic on [-L, L]^2."""

    L: float = 1.0
    A: float = 0.7
    B: float = 0.3
    t_init: float = 0.0

    def at(self, t, X1, X2):
        k = np.pi / self.L
        a = self.A * np.sin(k * (X1 - t)) + self.B * np.cos(2 * k * (X2 + t))
        at = -self.A * k * np.cos(k * (X1 - t)) - 2 * k * self.B * np.sin(2 * k * (X2 + t))
        phi = np.stack([np.cos(a), np.sin(a), 0 * a], -1)
        pi = np.stack([-np.sin(a) * at, np.cos(a) * at, 0 * a], -1)
        return phi, pi

    def sample(self, X1, X2):
        return self.at(self.t_init, X1, X2)


def restrict(fine: np.ndarray) -> np.ndarray:
    """Periodic fine-grid field (2n, 2n, ...) sampled at the n coarse cell centres.

    Coarse centres sit half a fine cell from fine centres, so the field is
    shifted spectrally by half a cell in each direction and then decimated.
    """
    m = fine.shape[0]
    k = np.fft.fftfreq(m) * 2 * np.pi
    shift = np.exp(1j * k * 0.5)
    F = np.fft.fft2(fine, axes=(0, 1))
    F = F * shift[:, None, None] * shift[None, :, None]
    return np.real(np.fft.ifft2(F, axes=(0, 1)))[::2, ::2]
