"""Microscopic pair potentials with dipolar far fields, traps, and scalings.

The central construction: a smeared Coulomb profile W(x) = (1 - e^-|x|)/|x|
(finite at the origin, Coulomb at infinity) placed twice with opposite signs
at the ends of a dipole of length d gives

    w_dip(x) = 2 W(x) - W(x + d n) - W(x - d n),

a bounded potential whose far field is exactly d^2 times the anisotropic
kernel (1 - 3 cos^2 theta)/|x|^3 and whose Fourier transform

    w_dip_hat(k) = 8 pi (1 - cos(k . d n)) / (|k|^2 (1 + |k|^2))

is nonnegative, i.e. the potential is of positive type and classically
stable.  Its effective short-range coupling, the zero-momentum limit of
w_dip_hat - d^2 K_hat, is (4 pi / 3) d^2.  A companion construction
wtilde_dip (axis e3 only) is also of positive type but carries a negative
dipolar coupling b = -d^2 with short-range coupling a = -8 pi b / 3.

Also here: the stabilizer profile psi built from two exponentials, trap
specifications with their growth data, and the mean-field scaling
w_N(x) = N^{3 beta} w(N^beta x).
"""

import numpy as np
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import NoLimit, NoRealSpaceForm
from .kernels import khat_closed_dipolar, _as_unit

_SERIES_RADIUS = 1e-4


def smeared_coulomb(r):
    """W(r) = (1 - exp(-r)) / r on radii r >= 0, series-stable at 0.

    W(0) = 1, W(1) = 1 - 1/e, and W ~ 1/r at infinity.
    """
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    small = r < _SERIES_RADIUS
    rs = r[small]
    out[small] = 1.0 - rs / 2.0 + rs**2 / 6.0 - rs**3 / 24.0
    rb = r[~small]
    out[~small] = -np.expm1(-rb) / rb
    return float(out[0]) if scalar else out


def w_dip(x, d=1.0, axis=(0.0, 0.0, 1.0)):
    """Dipole pair potential 2W(x) - W(x + dn) - W(x - dn) on (..., 3) points."""
    if not d > 0.0:
        raise ValueError(f"dipole length d must be positive, got {d}")
    n = _as_unit(axis)
    x = np.asarray(x, dtype=float)
    shift = d * n
    r0 = np.linalg.norm(x, axis=-1)
    rp = np.linalg.norm(x + shift, axis=-1)
    rm = np.linalg.norm(x - shift, axis=-1)
    return 2.0 * smeared_coulomb(r0) - smeared_coulomb(rp) - smeared_coulomb(rm)


def w_dip_hat(k, d=1.0, axis=(0.0, 0.0, 1.0)):
    """Transform 8 pi (1 - cos(k.dn)) / (|k|^2 (1 + |k|^2)), >= 0 everywhere.

    At k = 0 the transform has no limit (it approaches 4 pi d^2 cos^2 of the
    incoming direction); the returned value there is the angular average
    (4 pi / 3) d^2, which equals the effective short-range coupling, so that
    lattice zero modes see exactly the matched local interaction.
    """
    if not d > 0.0:
        raise ValueError(f"dipole length d must be positive, got {d}")
    n = _as_unit(axis)
    k = np.asarray(k, dtype=float)
    scalar = k.ndim == 1
    kk = np.atleast_2d(k)
    k2 = np.sum(kk * kk, axis=-1)
    kdn = kk @ (d * n)
    # 1 - cos via sin^2 for relative accuracy at small arguments
    num = 16.0 * np.pi * np.sin(0.5 * kdn) ** 2
    out = np.empty_like(k2)
    nz = k2 > 0.0
    out[nz] = num[nz] / (k2[nz] * (1.0 + k2[nz]))
    out[~nz] = 4.0 * np.pi * d * d / 3.0
    out = out.reshape(np.asarray(k).shape[:-1]) if not scalar else out
    return float(out[0]) if scalar else out


def wtilde_dip_hat(k, d=1.0):
    """Transform of the negative-coupling construction, axis e3 only.

    f_hat(p) = 4 pi / ((1 + p^2)(d^-2 + (p1^2 + p2^2)/4)) dominates
    w_dip_hat pointwise, so wtilde = f - w_dip is of positive type while its
    dipolar far-field coupling is b = -d^2.  At k = 0 the same angular-average
    convention as w_dip_hat gives f_hat(0) - (4 pi / 3) d^2 = (8 pi / 3) d^2.
    """
    if not d > 0.0:
        raise ValueError(f"dipole length d must be positive, got {d}")
    k = np.asarray(k, dtype=float)
    scalar = k.ndim == 1
    kk = np.atleast_2d(k)
    p2 = np.sum(kk * kk, axis=-1)
    perp2 = kk[..., 0] ** 2 + kk[..., 1] ** 2
    fhat = 4.0 * np.pi / ((1.0 + p2) * (1.0 / d**2 + perp2 / 4.0))
    out = fhat - w_dip_hat(kk, d=d)
    return float(out[0]) if scalar else out.reshape(k.shape[:-1])


def stabilizer_psi(r, amplitude=1.0, rate=2.0):
    """psi(r) = mu (exp(-lam r / 2) - exp(-lam r)) / r, positive and bounded.

    Requires amplitude mu > 0 and rate lam > 1.  psi(0) = mu lam / 2, and
    psi(r) <= mu exp(-lam r / 2) / r.
    """
    mu, lam = amplitude, rate
    if not mu > 0.0:
        raise ValueError(f"amplitude must be positive, got {mu}")
    if not lam > 1.0:
        raise ValueError(f"rate must exceed 1, got {lam}")
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    small = r < _SERIES_RADIUS
    rs = r[small]
    out[small] = mu * (
        lam / 2.0 - 3.0 * lam**2 * rs / 8.0 + 7.0 * lam**3 * rs**2 / 48.0
    )
    rb = r[~small]
    out[~small] = mu * (np.exp(-lam * rb / 2.0) - np.exp(-lam * rb)) / rb
    return float(out[0]) if scalar else out


def stabilizer_psi_hat(k, amplitude=1.0, rate=2.0):
    """Transform (3/4) lam^2 mu / ((p^2 + lam^2/4)(p^2 + lam^2)).

    Strictly positive, and bounded below by (3/4) lam^2 mu / (p^2 + lam^2)^2.
    Accepts radii or (..., 3) wavevectors.
    """
    mu, lam = amplitude, rate
    if not mu > 0.0:
        raise ValueError(f"amplitude must be positive, got {mu}")
    if not lam > 1.0:
        raise ValueError(f"rate must exceed 1, got {lam}")
    k = np.asarray(k, dtype=float)
    p2 = np.sum(k * k, axis=-1) if k.ndim >= 1 and k.shape[-1] == 3 else k * k
    val = 0.75 * lam**2 * mu / ((p2 + lam**2 / 4.0) * (p2 + lam**2))
    return float(val) if np.ndim(val) == 0 else val


@dataclass
class PairPotential:
    """A microscopic pair interaction in one or both representations.

    At least one of eval_real (pointwise values on (..., 3) separations) and
    eval_fourier (transform on (..., 3) wavevectors) must be present.
    dipole_strength d >= 0 sets the far-field scale; dipolar_coupling is the
    matched kernel coupling b with |b| = d^2 (sign distinguishes the parallel
    and antiparallel constructions).  cutoff_R records the radius beyond
    which the potential is essentially its dipolar far field.
    """

    dipole_strength: float
    axis: np.ndarray
    description: str
    eval_real: Optional[Callable[[np.ndarray], np.ndarray]] = None
    eval_fourier: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dipolar_coupling: float = 0.0
    cutoff_R: Optional[float] = None

    def __post_init__(self):
        if self.eval_real is None and self.eval_fourier is None:
            raise ValueError("a pair potential needs at least one representation")
        if self.dipole_strength < 0.0:
            raise ValueError("dipole_strength must be >= 0")
        if abs(self.dipolar_coupling) - self.dipole_strength**2 > 1e-12:
            raise ValueError("need |dipolar_coupling| = dipole_strength^2")

    def at_origin(self):
        if self.eval_real is None:
            raise NoRealSpaceForm(
                f"{self.description}: no pointwise values available"
            )
        return float(self.eval_real(np.zeros((1, 3)))[0])


def dipole_pair_potential(d=1.0, axis=(0.0, 0.0, 1.0)):
    """w_dip as a PairPotential (both representations, b = +d^2)."""
    n = _as_unit(axis)
    return PairPotential(
        dipole_strength=float(d),
        axis=n,
        description=f"smeared dipole pair potential, d={d}",
        eval_real=lambda x: w_dip(x, d=d, axis=n),
        eval_fourier=lambda k: w_dip_hat(k, d=d, axis=n),
        dipolar_coupling=float(d) ** 2,
        cutoff_R=1.0 + float(d),
    )


def antiparallel_pair_potential(d=1.0, axis=(0.0, 0.0, 1.0)):
    """wtilde_dip as a PairPotential (transform only, b = -d^2, axis e3)."""
    n = _as_unit(axis)
    if not np.allclose(n, [0.0, 0.0, 1.0], atol=1e-12):
        raise NotImplementedError(
            "the negative-coupling construction is only available for axis e3"
        )
    return PairPotential(
        dipole_strength=float(d),
        axis=n,
        description=f"antiparallel (negative-coupling) pair potential, d={d}",
        eval_real=None,
        eval_fourier=lambda k: wtilde_dip_hat(k, d=d),
        dipolar_coupling=-float(d) ** 2,
        cutoff_R=1.0 + float(d),
    )


def gaussian_pair_potential(mass=1.0, width=1.0):
    """Normalized Gaussian bump scaled to integral `mass`; no dipolar tail."""
    if not width > 0.0:
        raise ValueError("width must be positive")
    s2 = width * width

    def _real(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return mass * (2.0 * np.pi * s2) ** -1.5 * np.exp(-r2 / (2.0 * s2))

    def _fourier(k):
        k = np.asarray(k, dtype=float)
        k2 = np.sum(k * k, axis=-1)
        return mass * np.exp(-k2 * s2 / 2.0)

    return PairPotential(
        dipole_strength=0.0,
        axis=np.array([0.0, 0.0, 1.0]),
        description=f"gaussian pair potential, mass={mass}, width={width}",
        eval_real=_real,
        eval_fourier=_fourier,
        dipolar_coupling=0.0,
        cutoff_R=3.0 * width,
    )


def stabilizer_pair_potential(amplitude=1.0, rate=2.0):
    """The two-exponential stabilizer profile as a PairPotential."""

    def _real(x):
        x = np.asarray(x, dtype=float)
        return stabilizer_psi(
            np.linalg.norm(x, axis=-1), amplitude=amplitude, rate=rate
        )

    return PairPotential(
        dipole_strength=0.0,
        axis=np.array([0.0, 0.0, 1.0]),
        description=f"stabilizer profile, amplitude={amplitude}, rate={rate}",
        eval_real=_real,
        eval_fourier=lambda k: stabilizer_psi_hat(k, amplitude=amplitude, rate=rate),
        dipolar_coupling=0.0,
        cutoff_R=2.0 / rate,
    )


def combine_potentials(first, second):
    """Pointwise sum of two pair potentials (representations both must have)."""
    if first.dipole_strength > 0.0 and second.dipole_strength > 0.0:
        raise ValueError("at most one summand may carry a dipolar far field")
    lead = first if first.dipole_strength >= second.dipole_strength else second
    er = None
    if first.eval_real is not None and second.eval_real is not None:
        er = lambda x: first.eval_real(x) + second.eval_real(x)
    ef = None
    if first.eval_fourier is not None and second.eval_fourier is not None:
        ef = lambda k: first.eval_fourier(k) + second.eval_fourier(k)
    return PairPotential(
        dipole_strength=lead.dipole_strength,
        axis=lead.axis,
        description=f"{first.description} + {second.description}",
        eval_real=er,
        eval_fourier=ef,
        dipolar_coupling=lead.dipolar_coupling,
        cutoff_R=max(first.cutoff_R or 0.0, second.cutoff_R or 0.0) or None,
    )


def short_range_strength(pot, p0=0.5, levels=7, rtol=1e-6):
    """Zero-momentum limit of w_hat - b K_hat along the diagonal direction.

    Samples g(p) = w_hat(p u) - b K_hat(p u) at p = p0 2^-j, j = 0..levels-1,
    with u = (1, 1, 1)/sqrt(3), and accelerates with Richardson steps for an
    even series in p.  Raises NoLimit when the extrapolation tableau fails to
    settle (e.g. for transforms that blow up at the origin).  For the dipole
    potential the limit is (4 pi / 3) d^2; for a potential without far field
    it is plain w_hat(0).
    """
    if pot.eval_fourier is None:
        raise NoRealSpaceForm(
            f"{pot.description}: transform needed for the strength limit"
        )
    if levels < 3:
        raise ValueError("need at least three extrapolation levels")
    u = np.ones(3) / np.sqrt(3.0)
    p = p0 * 0.5 ** np.arange(levels)
    pts = p[:, None] * u[None, :]
    g = np.asarray(pot.eval_fourier(pts), dtype=float)
    if pot.dipolar_coupling != 0.0:
        g = g - pot.dipolar_coupling * khat_closed_dipolar(pts, axis=pot.axis)
    if not np.all(np.isfinite(g)):
        raise NoLimit(f"{pot.description}: transform not finite along the ray")
    # Richardson tableau for a series in p^2 (step ratio 2 -> factor 4)
    tableau = [g]
    for m in range(1, levels):
        prev = tableau[-1]
        fac = 4.0**m
        tableau.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    diag = np.array([row[0] for row in tableau])
    steps = np.abs(np.diff(diag))
    scale = max(1.0, abs(diag[-1]))
    if steps[-1] > rtol * scale and steps[-1] >= 0.5 * steps[-2]:
        raise NoLimit(
            f"{pot.description}: extrapolation not settling "
            f"(last corrections {steps[-2]:.2e}, {steps[-1]:.2e})"
        )
    return float(diag[-1])


@dataclass
class HartreeScaling:
    """Mean-field scaling w_N(x) = N^{3 beta} w(N^beta x)."""

    beta: float
    N: int

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if int(self.N) < 2 or self.N != int(self.N):
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        self.N = int(self.N)

    @property
    def momentum_scale(self):
        return float(self.N) ** self.beta

    @staticmethod
    def beta_threshold(growth_power):
        """Largest exponent covered by the mean-field derivation for a trap
        growing like |x|^s: 1/3 + s / (45 + 42 s)."""
        s = float(growth_power)
        if s <= 0:
            raise ValueError("growth power must be positive")
        return 1.0 / 3.0 + s / (45.0 + 42.0 * s)

    def within_derivation_range(self, growth_power):
        return self.beta < HartreeScaling.beta_threshold(growth_power)


def scale_potential(pot, scaling):
    """The scaled potential: transform w_hat(k / N^beta), pointwise
    N^{3 beta} w(N^beta x)."""
    lam = scaling.momentum_scale
    er = None
    if pot.eval_real is not None:
        er = lambda x: lam**3 * pot.eval_real(np.asarray(x) * lam)
    ef = None
    if pot.eval_fourier is not None:
        ef = lambda k: pot.eval_fourier(np.asarray(k) / lam)
    return PairPotential(
        dipole_strength=pot.dipole_strength,
        axis=pot.axis,
        description=f"{pot.description}, scaled N={scaling.N}, beta={scaling.beta}",
        eval_real=er,
        eval_fourier=ef,
        dipolar_coupling=pot.dipolar_coupling,
        cutoff_R=(pot.cutoff_R / lam) if pot.cutoff_R else None,
    )


@dataclass
class TrapSpec:
    """External trap: potential, optional vector potential, and growth data.

    potential maps meshes (X, Y, Z) to V; vector_potential maps them to the
    three components (A1, A2, A3) or is None.  growth_power is the s in the
    confinement bound V(x) >= C^-1 (|A|^2 + |x|^s) - C.
    """

    potential: Callable
    growth_power: float
    name: str = "custom"
    vector_potential: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def growth_margin(self, grid, constant=10.0):
        """min over the grid of V - C^-1 (|A|^2 + |x|^s) + C; >= 0 certifies
        the declared growth for this C."""
        x, y, z = grid.meshes
        v = self.potential(x, y, z)
        a2 = 0.0
        if self.vector_potential is not None:
            a1, a2_, a3 = self.vector_potential(x, y, z)
            a2 = a1**2 + a2_**2 + a3**2
        r = np.sqrt(x * x + y * y + z * z)
        bound = (a2 + r**self.growth_power) / constant - constant
        return float(np.min(v - bound))


def _rotation_vector_potential(rate):
    def _a(x, y, z):
        return (-rate * y, rate * x, np.zeros_like(z))

    return _a


def harmonic_trap(omegas=(1.0, 1.0, 1.0), rotation=0.0):
    """V = sum (omega_j x_j)^2, optionally with a uniform-rotation gauge
    A = rotation * (-y, x, 0)."""
    w1, w2, w3 = (float(w) for w in omegas)
    if min(w1, w2, w3) <= 0.0:
        raise ValueError("trap frequencies must be positive")

    def _v(x, y, z):
        return (w1 * x) ** 2 + (w2 * y) ** 2 + (w3 * z) ** 2

    return TrapSpec(
        potential=_v,
        growth_power=2.0,
        name="harmonic" if w1 == w2 == w3 else "anisotropic-harmonic",
        vector_potential=_rotation_vector_potential(rotation) if rotation else None,
        params={"omegas": (w1, w2, w3), "rotation": float(rotation)},
    )


def quartic_trap(coefficient=1.0, rotation=0.0):
    """V = coefficient |x|^4."""
    c = float(coefficient)
    if c <= 0.0:
        raise ValueError("quartic coefficient must be positive")

    def _v(x, y, z):
        return c * (x * x + y * y + z * z) ** 2

    return TrapSpec(
        potential=_v,
        growth_power=4.0,
        name="quartic",
        vector_potential=_rotation_vector_potential(rotation) if rotation else None,
        params={"coefficient": c, "rotation": float(rotation)},
    )


@dataclass
class StabilityProbeResult:
    """Outcome of the classical many-body energy scan."""

    min_total: float
    min_per_particle: float
    argmin_family: str
    family_minima: dict
    n_configurations: int
    w_at_origin: float


def classical_stability_probe(
    pot, n_particles=16, n_trials=1000, box=8.0, seed=0
):
    """Scan many-body configurations for the minimum of sum_{i<j} w(x_i - x_j).

    Draws n_trials uniform configurations of n_particles in a cube of side
    `box`, plus deterministic adversarial families (all particles coincident,
    two clusters at several separations, a cubic lattice at several
    spacings).  For potentials of positive type every configuration obeys
    U >= -n w(0) / 2; potentials failing positivity reveal U ~ -c n^2 on the
    clustered families.  Needs pointwise values (NoRealSpaceForm otherwise).
    """
    n = int(n_particles)
    if not 2 <= n <= 64:
        raise ValueError(f"n_particles must be in [2, 64], got {n}")
    if not 1 <= n_trials <= 100_000:
        raise ValueError(f"n_trials must be in [1, 1e5], got {n_trials}")
    if pot.eval_real is None:
        raise NoRealSpaceForm(
            f"{pot.description}: pointwise values needed for the classical scan"
        )
    w0 = pot.at_origin()
    iu, ju = np.triu_indices(n, k=1)

    def pair_energy(configs):
        # configs: (batch, n, 3)
        diffs = configs[:, iu, :] - configs[:, ju, :]
        vals = pot.eval_real(diffs.reshape(-1, 3)).reshape(len(configs), -1)
        return vals.sum(axis=1)

    rng = np.random.default_rng(seed)
    family_minima = {}
    count = 0

    uniform = box * (rng.random(size=(n_trials, n, 3)) - 0.5)
    u_energies = pair_energy(uniform)
    family_minima["uniform"] = float(u_energies.min())
    count += n_trials

    coincident = np.zeros((1, n, 3))
    family_minima["coincident"] = float(pair_energy(coincident)[0])
    count += 1

    d_scale = max(pot.dipole_strength, 1.0)
    clusters = []
    for sep in (0.25 * d_scale, d_scale, 2.0 * d_scale):
        for direction in (pot.axis, np.array([1.0, 0.0, 0.0])):
            cfg = np.zeros((n, 3))
            cfg[n // 2 :] = sep * direction
            clusters.append(cfg)
    family_minima["two-cluster"] = float(pair_energy(np.array(clusters)).min())
    count += len(clusters)

    side = int(np.ceil(n ** (1.0 / 3.0)))
    lattices = []
    for spacing in (0.5 * d_scale, d_scale, 2.0 * d_scale):
        pts = np.array(
            [
                (i, j, k)
                for i in range(side)
                for j in range(side)
                for k in range(side)
            ][:n],
            dtype=float,
        )
        lattices.append(spacing * pts)
    family_minima["lattice"] = float(pair_energy(np.array(lattices)).min())
    count += len(lattices)

    argmin_family = min(family_minima, key=family_minima.get)
    min_total = family_minima[argmin_family]
    return StabilityProbeResult(
        min_total=min_total,
        min_per_particle=min_total / n,
        argmin_family=argmin_family,
        family_minima=family_minima,
        n_configurations=count,
        w_at_origin=w0,
    )
