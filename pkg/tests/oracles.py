"""Independent reference implementations used as test oracles.

Nothing here reuses the package's superoperator code: generators are built
from Kronecker products of 2x2 matrices and the Gorini-Kossakowski-Sudarshan
form of the dissipator, and integration is delegated to scipy.
"""
import numpy as np
from scipy.integrate import solve_ivp

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
# row-major vec(rho) = (r11, r12, r21, r22) -> package order (r11, r22, r12, r21)
PERM = [0, 3, 1, 2]


def to_package_order(m_rowmajor):
    return m_rowmajor[np.ix_(PERM, PERM)]


def commutator_superop(h):
    """Matrix of rho -> -i[h, rho] in package ordering."""
    eye = np.eye(2)
    m = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    return to_package_order(m)


def gks_superop(k):
    """Matrix of sum_ij K_ij (s_i rho s_j - {s_j s_i, rho}/2) in package ordering."""
    eye = np.eye(2)
    m = np.zeros((4, 4), dtype=complex)
    for i in range(3):
        for j in range(3):
            si, sj = SIGMA[i], SIGMA[j]
            prod = sj @ si
            m += k[i, j] * (np.kron(si, sj.T) - 0.5 * (np.kron(prod, eye) + np.kron(eye, prod.T)))
    return to_package_order(m)


def kossakowski(a, b, c, alpha, beta, gamma):
    r = 0.5 * (alpha + gamma - a)
    s = 0.5 * (a + gamma - alpha)
    t = 0.5 * (a + alpha - gamma)
    return np.array([[r, -b, -c], [-b, s, -beta], [-c, -beta, t]])


def hamiltonian(omega0, mu, nu, lam, t):
    off = nu * np.exp(-1j * lam * t)
    return np.array([[omega0 + mu, off], [np.conj(off), omega0 - mu]])


def lab_generator(h_params, d_params):
    omega0, mu, nu, lam = h_params
    diss = gks_superop(kossakowski(*d_params))
    return lambda t: commutator_superop(hamiltonian(omega0, mu, nu, lam, t)) + diss


def integrate(generator, y0, times, rtol=1e-12, atol=1e-13):
    """Adaptive DOP853 integration of y' = G(t) y (complex, via real stacking)."""
    def rhs(t, y):
        z = y[:4] + 1j * y[4:]
        dz = generator(t) @ z
        return np.concatenate([dz.real, dz.imag])

    y0 = np.asarray(y0, dtype=complex)
    sol = solve_ivp(rhs, (times[0], times[-1]), np.concatenate([y0.real, y0.imag]),
                    method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    assert sol.success
    return (sol.y[:4] + 1j * sol.y[4:]).T


def trace_with(obs, rho):
    return float(np.real(np.trace(obs @ rho)))


def rho_from_vec(v):
    return np.array([[v[0], v[2]], [v[3], v[1]]])
