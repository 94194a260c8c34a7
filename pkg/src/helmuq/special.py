"""Special functions and quadrature rules used across the library.

Cylindrical Bessel functions J_n, Y_n (integer order, real positive
argument) are computed in-repo from power series below z = 18 and from the
large-argument Hankel expansion above, with Miller's downward recurrence for
higher orders of J and stable upward recurrence for Y.  Spherical Bessel
functions and Legendre polynomials follow the same recurrence strategy.
Everything is vectorized over the argument.

Gauss rules: Gauss-Legendre on [0, 1] (cached), and a Gauss rule for the
weight -ln(x) on (0, 1) with precomputed high-precision tables, so that

    int_0^1 f(x) * (-ln x) dx  ~=  sum_i w_i f(x_i).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

# crossover between power series and Hankel asymptotics for J/Y; below this
# the extended-precision series keeps cancellation under ~4 digits, above it
# the Hankel expansion reaches machine accuracy for orders 0 and 1
_SERIES_CUTOFF = 12.0


# ---------------------------------------------------------------------------
# Gauss rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1]."""
    if n < 1:
        raise ValueError(f"quadrature order must be >= 1, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# Nodes/weights for weight function -ln(x) on (0, 1); generated once with
# 40-digit arithmetic (Chebyshev algorithm + Golub-Welsch) and frozen here.
_LOG_GAUSS_TABLES: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {
    4: (
        (0.04144848019938322080332, 0.2452749143206022519397,
         0.5561654535602758371802, 0.8489823945329851746478),
        (0.38346406814513512485, 0.386875317774762627336,
         0.1904351269501424153614, 0.03922548712995983245259),
    ),
    8: (
        (0.01332024416089246501225, 0.07975042901389493840983,
         0.1978710293261880537945, 0.3541539943519094196715,
         0.5294585752349172777061, 0.7018145299390999638372,
         0.8493793204411066760483, 0.9533264500563597887674),
        (0.1644166047280028868315, 0.2375256100233060205013,
         0.2268419844319191263688, 0.1757540790060702449881,
         0.112924030246759051855, 0.05787221071778207239853,
         0.02097907374213297804346, 0.003686407104027619013352),
    ),
    16: (
        (0.003897834487115915924055, 0.02302894561687323982033,
         0.05828039830624041234838, 0.1086783650910540364878,
         0.1726094549098439377609, 0.2479370544705784951477,
         0.3320945491299171559848, 0.4221839105819486001152,
         0.5150824733814626034763, 0.6075561204477287240864,
         0.6963756532282140611564, 0.7784325658732654052039,
         0.8508502697153910832339, 0.9110868572222719054188,
         0.9570255717035421575915, 0.9870478002479844767587),
        (0.06079171004359123285119, 0.1029156775175821443877,
         0.1223556620460091935576, 0.1275692469370159887171,
         0.1230135746000709154231, 0.1118472448554857226218,
         0.09659638515212434125295, 0.07935666435147313878243,
         0.06185049458196520709512, 0.04543524650772666862882,
         0.03109897475158180640924, 0.01945976592736084207808,
         0.01077625496320552564554, 0.004972542890087641712503,
         0.001678201110051194515035, 0.000282353764668436321778),
    ),
}


def gauss_log_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the weight -ln(x) on (0, 1); n in {4, 8, 16}."""
    try:
        x, w = _LOG_GAUSS_TABLES[n]
    except KeyError:
        raise ValueError(f"log-weight Gauss rule available for n in {sorted(_LOG_GAUSS_TABLES)}, got {n}") from None
    return np.asarray(x), np.asarray(w)


# ---------------------------------------------------------------------------
# Cylindrical Bessel functions (integer order, real z > 0)
# ---------------------------------------------------------------------------

def _series_j0_j1(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # extended precision soaks up the alternating-series cancellation
    q = (np.asarray(z, dtype=np.longdouble) / 2.0) ** 2
    j0 = np.ones_like(q)
    j1 = np.ones_like(q)
    t0 = np.ones_like(q)
    t1 = np.ones_like(q)
    for k in range(1, 40):
        t0 = -t0 * q / (k * k)
        t1 = -t1 * q / (k * (k + 1))
        j0 = j0 + t0
        j1 = j1 + t1
    z_ld = np.asarray(z, dtype=np.longdouble)
    return j0.astype(np.float64), (0.5 * z_ld * j1).astype(np.float64)


def _series_y0_y1(z: np.ndarray, j0: np.ndarray, j1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zl = np.asarray(z, dtype=np.longdouble)
    q = (zl / 2.0) ** 2
    lg = np.log(zl / 2.0) + EULER_GAMMA

    # Y0 = (2/pi)[ (ln(z/2)+gamma) J0 + sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2 ]
    s0 = np.zeros_like(q)
    t = np.ones_like(q)
    h = 0.0
    for k in range(1, 40):
        t = -t * q / (k * k)
        h += 1.0 / k
        s0 = s0 - t * h
    y0 = (2.0 / np.pi) * (lg * np.asarray(j0, dtype=np.longdouble) + s0)

    # Y1 = (2/pi) ln(z/2) J1 - 2/(pi z)
    #      - (z/2pi) sum_{k>=0} (-1)^k (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    s1 = np.zeros_like(q)
    t = np.ones_like(q)
    hk, hk1 = 0.0, 1.0        # H_0 = 0, H_1 = 1
    psi_sum = -2.0 * EULER_GAMMA + hk + hk1
    s1 = s1 + t * psi_sum
    for k in range(1, 40):
        t = -t * q / (k * (k + 1))
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        s1 = s1 + t * (-2.0 * EULER_GAMMA + hk + hk1)
    jl = np.asarray(j1, dtype=np.longdouble)
    y1 = (2.0 / np.pi) * np.log(zl / 2.0) * jl - 2.0 / (np.pi * zl) - (zl / (2.0 * np.pi)) * s1
    return y0.astype(np.float64), y1.astype(np.float64)


def _hankel_asymptotic(nu: int, z: np.ndarray) -> np.ndarray:
    """H^(1)_nu(z) for large real z via the Hankel expansion."""
    z = np.asarray(z, dtype=np.float64)
    mu = 4.0 * nu * nu
    s = np.ones(z.shape, dtype=np.complex128)
    t = np.ones(z.shape, dtype=np.complex128)
    for k in range(30):
        t = t * 1j * (mu - (2 * k + 1) ** 2) / (8.0 * z * (k + 1))
        if np.max(np.abs(t)) < 1e-18:
            s = s + t
            break
        s = s + t
    phase = z - 0.5 * nu * np.pi - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * phase) * s


def _j0y0j1y1(z: np.ndarray) -> tuple[np.ndarray, ...]:
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0.0):
        raise ValueError("Bessel argument must be positive")
    small = z < _SERIES_CUTOFF
    j0 = np.empty_like(z)
    j1 = np.empty_like(z)
    y0 = np.empty_like(z)
    y1 = np.empty_like(z)
    if np.any(small):
        zs = z[small]
        a, b = _series_j0_j1(zs)
        c, d = _series_y0_y1(zs, a, b)
        j0[small], j1[small], y0[small], y1[small] = a, b, c, d
    if np.any(~small):
        zl = z[~small]
        h0 = _hankel_asymptotic(0, zl)
        h1 = _hankel_asymptotic(1, zl)
        j0[~small], y0[~small] = h0.real, h0.imag
        j1[~small], y1[~small] = h1.real, h1.imag
    return j0, y0, j1, y1


def bessel_j0(z):
    """J_0(z) for real z > 0 (scalar or array)."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = _j0y0j1y1(zz)[0]
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


def bessel_y0(z):
    """Y_0(z) for real z > 0."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = _j0y0j1y1(zz)[1]
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


def bessel_j1(z):
    """J_1(z) for real z > 0."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = _j0y0j1y1(zz)[2]
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


def bessel_y1(z):
    """Y_1(z) for real z > 0."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = _j0y0j1y1(zz)[3]
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


def bessel_jn_table(nmax: int, z) -> np.ndarray:
    """J_n(z) for n = 0..nmax, shape (nmax+1,) + shape(z).

    Miller downward recurrence, normalized with J_0 + 2*(J_2 + J_4 + ...) = 1.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(z <= 0):
        raise ValueError("Bessel argument must be positive")
    # downward recurrence must start well inside the decaying regime m > z
    base = max(nmax, int(np.ceil(np.max(z))))
    m_start = int(base + 20 + np.ceil(np.sqrt(40.0 * max(base, 1))))
    if m_start % 2:
        m_start += 1
    fp = np.zeros_like(z)                       # f_{m+1}
    fc = np.full_like(z, 1e-290)                # f_m, tiny seed
    table = np.zeros((nmax + 1,) + z.shape)
    norm = np.zeros_like(z)                     # accumulates f0 + 2*sum f_{2k}
    for m in range(m_start, -1, -1):
        fm = (2.0 * (m + 1) / z) * fc - fp
        fp, fc = fc, fm
        # rescale to dodge overflow of the unnormalized recurrence
        big = np.abs(fc) > 1e250
        if np.any(big):
            fc[big] *= 1e-250
            fp[big] *= 1e-250
            norm[big] *= 1e-250
            table[:, big] *= 1e-250
        if m <= nmax:
            table[m] = fc
        if m % 2 == 0:
            norm += (1.0 if m == 0 else 2.0) * fc
    return table / norm


def bessel_yn_table(nmax: int, z) -> np.ndarray:
    """Y_n(z) for n = 0..nmax by stable upward recurrence."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    _, y0, _, y1 = _j0y0j1y1(z)
    table = np.zeros((nmax + 1,) + z.shape)
    table[0] = y0
    if nmax >= 1:
        table[1] = y1
    for n in range(1, nmax):
        table[n + 1] = (2.0 * n / z) * table[n] - table[n - 1]
    return table


def hankel1_table(nmax: int, z) -> np.ndarray:
    """H^(1)_n(z) = J_n(z) + i Y_n(z), n = 0..nmax."""
    return bessel_jn_table(nmax, z) + 1j * bessel_yn_table(nmax, z)


def hankel1_0(z):
    """H^(1)_0(z) for real z > 0 (kernel workhorse)."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    j0, y0, _, _ = _j0y0j1y1(zz)
    out = j0 + 1j * y0
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


def hankel1_1(z):
    """H^(1)_1(z) for real z > 0."""
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    _, _, j1, y1 = _j0y0j1y1(zz)
    out = j1 + 1j * y1
    return out[0] if np.isscalar(z) or np.ndim(z) == 0 else out.reshape(np.shape(z))


# ---------------------------------------------------------------------------
# Spherical Bessel functions
# ---------------------------------------------------------------------------

def spherical_jn_table(nmax: int, z) -> np.ndarray:
    """j_n(z) for n = 0..nmax (downward recurrence, normalized by j_0)."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(z <= 0):
        raise ValueError("argument must be positive")
    j0 = np.sin(z) / z
    if nmax == 0:
        return j0[None, ...].copy()
    base = max(nmax, int(np.ceil(np.max(z))))
    m_start = int(base + 20 + np.ceil(np.sqrt(40.0 * base)))
    fp = np.zeros_like(z)
    fc = np.full_like(z, 1e-290)
    table = np.zeros((nmax + 1,) + z.shape)
    for m in range(m_start, -1, -1):
        fm = (2.0 * (m + 1) + 1.0) / z * fc - fp
        fp, fc = fc, fm
        big = np.abs(fc) > 1e250
        if np.any(big):
            fc[big] *= 1e-250
            fp[big] *= 1e-250
            table[:, big] *= 1e-250
        if m <= nmax:
            table[m] = fc
    scale = j0 / table[0]
    return table * scale


def spherical_yn_table(nmax: int, z) -> np.ndarray:
    """y_n(z) for n = 0..nmax by upward recurrence."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    table = np.zeros((nmax + 1,) + z.shape)
    table[0] = -np.cos(z) / z
    if nmax >= 1:
        table[1] = -np.cos(z) / z ** 2 - np.sin(z) / z
    for n in range(1, nmax):
        table[n + 1] = (2.0 * n + 1.0) / z * table[n] - table[n - 1]
    return table


def spherical_h1_table(nmax: int, z) -> np.ndarray:
    """h^(1)_n(z) = j_n(z) + i y_n(z), n = 0..nmax."""
    return spherical_jn_table(nmax, z) + 1j * spherical_yn_table(nmax, z)


def cyl_derivative(table: np.ndarray, z) -> np.ndarray:
    """d/dz of a cylindrical Bessel table via C_n' = C_{n-1} - (n/z) C_n.

    Row 0 uses C_0' = -C_1.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty_like(table)
    out[0] = -table[1]
    n = np.arange(1, table.shape[0]).reshape((-1,) + (1,) * z.ndim)
    out[1:] = table[:-1] - n / z * table[1:]
    return out


def sph_derivative(table: np.ndarray, z) -> np.ndarray:
    """d/dz of a spherical Bessel table via c_n' = c_{n-1} - ((n+1)/z) c_n."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty_like(table)
    out[0] = -table[1] if table.shape[0] > 1 else -np.sin(z) / z  # c_0' = -c_1
    if table.shape[0] > 1:
        n = np.arange(1, table.shape[0]).reshape((-1,) + (1,) * z.ndim)
        out[1:] = table[:-1] - (n + 1) / z * table[1:]
    return out


# ---------------------------------------------------------------------------
# Legendre polynomials
# ---------------------------------------------------------------------------

def legendre_table(nmax: int, x) -> np.ndarray:
    """P_n(x) for n = 0..nmax by the three-term recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    table = np.zeros((nmax + 1,) + x.shape)
    table[0] = 1.0
    if nmax >= 1:
        table[1] = x
    for n in range(1, nmax):
        table[n + 1] = ((2 * n + 1) * x * table[n] - n * table[n - 1]) / (n + 1)
    return table
