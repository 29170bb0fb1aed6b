"""Constitutive evaluation and 1-D kinematics.

Strain and wryness follow E_ij = u_{j,i} - eps_ijh phi_h, Psi_ij = phi_{i,j};
with fields varying along x1 only, row 1 of E carries the displacement
gradient and column 1 of Psi the micro-rotation gradient.  The stress map is
evaluated two ways that must stay identical: a readable einsum transcription
of the constitutive display, and a packed linear operator probed column by
column from that transcription (used on the hot path).
"""

from dataclasses import dataclass
import numpy as np

from .errors import RangeError

# Levi-Civita
EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_i, _j, _k] = 1.0
    EPS[_i, _k, _j] = -1.0

NX = 23  # E(9) | Psi(9) | varphi | varphi,k(3) | theta


@dataclass
class StressState:
    """Strain measures and the stresses they induce, nodewise."""

    E: np.ndarray          # (n,3,3)
    Psi: np.ndarray        # (n,3,3)
    gradvarphi: np.ndarray  # (n,3)
    gradtheta: np.ndarray   # (n,3)
    T: np.ndarray          # (n,3,3)
    M: np.ndarray          # (n,3,3)
    g: np.ndarray          # (n,)
    hvec: np.ndarray       # (n,3)
    rho_eta: np.ndarray    # (n,)


def strain_from_gradients(du, phi):
    """E_ij = u_{j,i} - eps_ijh phi_h with u_{j,1} = du_j, other rows zero."""
    E = -np.einsum("ijh,nh->nij", EPS, phi)
    E[:, 0, :] += du
    return E


def wryness_from_gradients(dphi):
    """Psi_ij = phi_{i,j}; only the x1 column survives."""
    n = dphi.shape[0]
    Psi = np.zeros((n, 3, 3))
    Psi[:, :, 0] = dphi
    return Psi


def evaluate_constitutive(mc, E, Psi, varphi, gradvarphi, theta):
    """Direct transcription of the constitutive display (see module header).

    Index order matters: the wryness always enters transposed (Psi_lk against
    C-like tensors, Psi_ji against couplings), the strain-wryness tensor Gc
    appears with swapped pairs in M, and H3/P3 contract their first two slots
    against E/Psi in the equilibrated stress h.
    """
    E = np.asarray(E, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    varphi = np.asarray(varphi, dtype=float)
    gradvarphi = np.asarray(gradvarphi, dtype=float)
    theta = np.asarray(theta, dtype=float)

    T = (np.einsum("ijkl,nkl->nij", mc.C, E)
         + np.einsum("ijkl,nlk->nij", mc.Gc, Psi)
         + mc.H2[None, :, :] * varphi[:, None, None]
         + np.einsum("ijk,nk->nij", mc.H3, gradvarphi)
         + mc.A[None, :, :] * theta[:, None, None])
    M = (np.einsum("klij,nkl->nij", mc.Gc, E)
         + np.einsum("ijkl,nlk->nij", mc.Gam, Psi)
         + mc.P2[None, :, :] * varphi[:, None, None]
         + np.einsum("ijk,nk->nij", mc.P3, gradvarphi)
         + mc.Gth[None, :, :] * theta[:, None, None])
    g = -(np.einsum("ij,nij->n", mc.H2, E)
          + np.einsum("ij,nji->n", mc.P2, Psi)
          + mc.a_scalar * varphi
          + gradvarphi @ mc.a_vec
          + mc.b * theta)
    hvec = (np.einsum("jki,njk->ni", mc.H3, E)
            + np.einsum("jki,nkj->ni", mc.P3, Psi)
            + np.outer(varphi, mc.a_vec)
            + gradvarphi @ mc.D.T
            + np.outer(theta, mc.gamma))
    rho_eta = (-np.einsum("ij,nij->n", mc.A, E)
               - np.einsum("ij,nji->n", mc.Gth, Psi)
               - mc.b * varphi
               - gradvarphi @ mc.gamma
               + mc.c * theta)
    return T, M, g, hvec, rho_eta


def pack_inputs(E, Psi, varphi, gradvarphi, theta):
    n = E.shape[0]
    X = np.empty((n, NX))
    X[:, 0:9] = E.reshape(n, 9)
    X[:, 9:18] = Psi.reshape(n, 9)
    X[:, 18] = varphi
    X[:, 19:22] = gradvarphi
    X[:, 22] = theta
    return X


class ConstitutiveOperator:
    """(n, 23) -> (n, 23) linear stress map, probed from evaluate_constitutive.

    Output layout mirrors the input: T(9) | M(9) | g | h(3) | rho_eta.
    Building it by unit probes keeps the hot path identical to the reference
    transcription by construction.
    """

    def __init__(self, mc):
        self.mc = mc
        Q = np.empty((NX, NX))
        for col in range(NX):
            X = np.zeros((1, NX))
            X[0, col] = 1.0
            T, M, g, hvec, rho_eta = evaluate_constitutive(
                mc, X[:, 0:9].reshape(1, 3, 3), X[:, 9:18].reshape(1, 3, 3),
                X[:, 18], X[:, 19:22], X[:, 22])
            Q[:, col] = np.concatenate(
                [T.reshape(9), M.reshape(9), g, hvec.reshape(3), rho_eta])
        self.Q = Q

    def apply(self, X):
        n = X.shape[0]
        Y = X @ self.Q.T
        return (Y[:, 0:9].reshape(n, 3, 3), Y[:, 9:18].reshape(n, 3, 3),
                Y[:, 18], Y[:, 19:22], Y[:, 22])


def algebraic_flux(mc, gradtheta):
    """Non-relaxing branch (tau = 0): q_i = K_ij theta,j directly."""
    return np.asarray(gradtheta, dtype=float) @ mc.K.T


def flux_rate(mc, q, gradtheta):
    """Relaxing branch: q'_i = (K_ij theta,j - q_i) / tau.  tau = 0 has no
    flux ODE; use algebraic_flux there."""
    if mc.tau <= 0.0:
        raise RangeError("flux_rate needs tau > 0; tau = 0 is algebraic")
    return (algebraic_flux(mc, gradtheta) - np.asarray(q, dtype=float)) / mc.tau
