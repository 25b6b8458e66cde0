"""Independent reference solutions used only by the tests.

``exact_full_solution`` solves the full constant-coefficient-per-piece problem
monolithically: on (1, inf) the decaying solutions span the stable invariant
subspace of the first-order companion matrix, on (0, 1) the flow is a matrix
exponential.  It shares no code with the package solvers.
"""

import numpy as np
import scipy.linalg


def _companion(A2mat, P, rho):
    n = A2mat.shape[0]
    C = np.linalg.inv(P.A0 - np.eye(n))
    K = rho * A2mat + P.A2
    return np.block([[np.zeros((n, n)), np.eye(n)], [-C @ K, -C @ P.A1]])


def exact_full_solution(A, weight, P, phi):
    """Return ``u(t, order)`` for ``(A0 - I) u'' + A1 u' + (rho A^2 + A2) u = 0``, ``u(0) = phi``."""
    n = A.n
    A2mat = A.power_matrix(2)
    MI = _companion(A2mat, P, weight.alpha**2)
    ME = _companion(A2mat, P, weight.beta**2)
    ev, V = np.linalg.eig(ME)
    stable = np.argsort(ev.real)[:n]
    if np.any(ev[stable].real >= 0):
        raise ValueError("exterior problem lacks n decaying modes")
    VE, rE = V[:, stable], ev[stable]
    E1 = scipy.linalg.expm(MI)
    phi = np.asarray(phi, dtype=complex)
    # E1 @ [phi; s] = VE @ c
    lhs = np.hstack([E1[:, n:], -VE])
    sc = np.linalg.solve(lhs, -E1[:, :n] @ phi)
    z0 = np.concatenate([phi, sc[:n]])
    c = sc[n:]

    def u(t, order=0):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, n), dtype=complex)
        for i, ti in enumerate(t):
            if ti < 1.0:
                z = scipy.linalg.expm(MI * ti) @ z0
                zd = MI @ z
            else:
                z = VE @ (np.exp(rE * (ti - 1.0)) * c)
                zd = VE @ (rE * np.exp(rE * (ti - 1.0)) * c)
            out[i] = [z[:n], z[n:], zd[n:]][order]
        return out

    return u


def random_sector_eigenvalues(rng, n, epsilon, modulus=(0.5, 8.0)):
    r = np.exp(rng.uniform(np.log(modulus[0]), np.log(modulus[1]), n))
    return r * np.exp(1j * rng.uniform(-epsilon, epsilon, n))


def admissible_perturbations(A, weight, q, rng):
    """Random ``A_j = B_j A^j`` with ``sum c_j ||B_j|| = q`` under the adopted condition."""
    from sector_bvp import PerturbationOperators, constants

    c = constants(A.epsilon, weight.alpha, weight.beta)
    shares = rng.dirichlet([1.0, 1.0, 1.0])
    mats = []
    for j in range(3):
        Z = rng.standard_normal((A.n, A.n)) + 1j * rng.standard_normal((A.n, A.n))
        Z /= np.linalg.norm(Z, 2)
        B = Z * q * shares[j] / c[j]
        mats.append(B @ A.power_matrix(j))
    return PerturbationOperators(*mats)
