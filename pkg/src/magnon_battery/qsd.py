"""Noise-averaged charging of the one-to-one chain through a jittery mode.

The mediating mode frequency is shaken by a real Gaussian noise with
Ornstein-Uhlenbeck correlation (gamma_noise * memory_gamma / 2) *
exp(-memory_gamma * |t - s|).  Averaging the diffusion unraveling over
noise realizations and tracing out the mode leaves deterministic
equations for the coefficient functions of the single-excitation sector.
In the white-noise limit (memory_gamma = inf) these close into two
coupled quadratic ODEs; their difference obeys a scalar Riccati equation
whose running integral yields the charger and battery amplitudes

    a(t) = (exp(-2 I(t)) + 1) / 2,   b(t) = (exp(-2 I(t)) - 1) / 2,

with I(t) the integral of the reduced coefficient, so a - b = 1 exactly
and the stored energy is E(t) = |b(t)|^2 * omega.  The double-excitation
configuration never mixes in: the dynamics lives on the three states
{charger excited, battery excited, both ground}.

Only the white-noise limit is propagated into reduced dynamics; for
finite memory the correlation kernels are available but no solver is.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "QsdParams",
    "FSolution",
    "RiccatiBlowupError",
    "ou_correlation",
    "bath_correlation",
    "solve_f12",
    "solve_calF",
    "qsd_energy",
]

DEFAULT_TOL = 1e-10

# multiple of |g| above which a coefficient is declared runaway
BLOWUP_FACTOR = 1e6


class RiccatiBlowupError(RuntimeError):
    """A coefficient function escaped toward infinity during integration."""


@dataclass(frozen=True)
class QsdParams:
    """Parameters of the noisy one-charger/one-battery chain.

    g couples each spin to the mode, omega is the spin splitting (and
    the energy unit of the battery), omega_m the mean mode frequency,
    gamma_noise the noise strength, and memory_gamma the inverse memory
    time of the noise.  memory_gamma = math.inf selects the white-noise
    limit, the only regime the reduced solvers accept.
    """

    g: float
    omega: float
    omega_m: float
    gamma_noise: float
    memory_gamma: float = math.inf

    def __post_init__(self) -> None:
        for name in ("g", "omega", "omega_m"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not (math.isfinite(self.gamma_noise) and self.gamma_noise >= 0.0):
            raise ValueError(f"gamma_noise must be finite and >= 0, got {self.gamma_noise!r}")
        if not self.memory_gamma > 0.0:
            raise ValueError(
                "memory_gamma must be positive (math.inf selects the white-noise limit), "
                f"got {self.memory_gamma!r}"
            )

    @property
    def delta(self) -> float:
        """Mode frequency minus spin splitting."""
        return self.omega_m - self.omega

    @property
    def is_markov(self) -> bool:
        return math.isinf(self.memory_gamma)


@dataclass(frozen=True)
class FSolution:
    """Reduced coefficient ℱ(t), its running integral, and the amplitudes.

    Invariants: calf[0] = 0, a - b = 1 identically, and |a|^2 + |b|^2
    never exceeds 1 beyond integrator tolerance (the remainder has
    leaked to the shared ground state).
    """

    times: np.ndarray
    calf: np.ndarray
    integral: np.ndarray
    a: np.ndarray
    b: np.ndarray
    energy: np.ndarray

    def __post_init__(self) -> None:
        n = self.times.shape[0]
        for name in ("calf", "integral", "a", "b", "energy"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        for name in ("times", "calf", "integral", "a", "b", "energy"):
            getattr(self, name).setflags(write=False)


def ou_correlation(params: QsdParams, t: float, s: float) -> float:
    """Noise autocorrelation at lag t - s.

    In the white-noise limit the kernel degenerates to a delta spike:
    infinite at zero lag, zero elsewhere (zero everywhere if the noise
    is off).
    """
    if params.gamma_noise == 0.0:
        return 0.0
    if params.is_markov:
        return math.inf if t == s else 0.0
    return 0.5 * params.gamma_noise * params.memory_gamma * math.exp(
        -params.memory_gamma * abs(t - s)
    )


def bath_correlation(params: QsdParams, t: float, s: float) -> complex:
    """Memory kernel of the mode dressed by the frequency noise.

    g^2 exp(-i omega_m (t-s)) times the noise-averaged dephasing factor
    exp(-(gamma_noise/2) [(t-s) + (exp(-memory_gamma (t-s)) - 1)/memory_gamma]);
    the bracket collapses to the bare lag in the white-noise limit.
    Defined for t >= s only.
    """
    if t < s:
        raise ValueError(f"bath correlation requires t >= s, got t={t!r}, s={s!r}")
    tau = t - s
    if params.is_markov:
        bracket = tau
    else:
        bracket = tau + math.expm1(-params.memory_gamma * tau) / params.memory_gamma
    return (
        params.g**2
        * math.exp(-0.5 * params.gamma_noise * bracket)
        * cmath.exp(-1j * params.omega_m * tau)
    )


def _validated_grid(t_grid) -> np.ndarray:
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.shape[0] < 2:
        raise ValueError("time grid must be 1-D with at least two points")
    if times[0] != 0.0:
        raise ValueError("time grid must start at 0 (coefficients vanish there)")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("time grid must be strictly increasing")
    return times


def _require_markov(params: QsdParams) -> None:
    if not params.is_markov:
        raise ValueError(
            "reduced coefficient dynamics hold only in the white-noise limit; "
            "set memory_gamma=math.inf"
        )


def _integrate(params: QsdParams, rhs, y0, times, tol, n_watch):
    """Run the adaptive integrator with a runaway guard.

    Only the first n_watch components are coefficient functions subject
    to the guard; trailing components (the running integral) may grow.
    """
    threshold = BLOWUP_FACTOR * abs(params.g) if params.g != 0.0 else 1.0

    def escape(t, y):
        return threshold - max(abs(y[k]) for k in range(n_watch))

    escape.terminal = True

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=tol,
        atol=tol,
        events=escape,
    )
    if sol.status == 1:
        t_esc = float(sol.t_events[0][0])
        raise RiccatiBlowupError(
            f"coefficient magnitude crossed {threshold:g} at t={t_esc:.6g}; "
            "the quadratic terms run away for these parameters"
        )
    if not sol.success:
        raise RuntimeError(f"coefficient integration failed: {sol.message}")
    return sol.y


def solve_f12(params: QsdParams, t_grid, tol: float = DEFAULT_TOL):
    """Integrate the coupled pair of coefficient ODEs on a time grid.

    dF1/dt = g^2 + (-i delta - gamma_noise/2) F1 + F1^2 + 3 F2^2
    dF2/dt =       (-i delta - gamma_noise/2) F2 - F1^2 + F2^2 + 4 F1 F2

    from F1(0) = F2(0) = 0.  Returns the pair (F1, F2) of complex
    arrays on the grid.  White-noise limit only.
    """
    _require_markov(params)
    times = _validated_grid(t_grid)
    lam = complex(-0.5 * params.gamma_noise, -params.delta)
    gsq = params.g**2

    def rhs(t, y):
        f1, f2 = y
        return [
            gsq + lam * f1 + f1 * f1 + 3.0 * f2 * f2,
            lam * f2 - f1 * f1 + f2 * f2 + 4.0 * f1 * f2,
        ]

    y = _integrate(params, rhs, np.zeros(2, dtype=complex), times, tol, n_watch=2)
    return y[0].copy(), y[1].copy()


def solve_calF(params: QsdParams, t_grid, tol: float = DEFAULT_TOL) -> FSolution:
    """Integrate the scalar Riccati reduction and its running integral.

    The difference of the paired coefficients obeys

        dℱ/dt = g^2 + (-i delta - gamma_noise/2) ℱ + 2 ℱ^2,  ℱ(0) = 0,

    and only its integral I(t) enters the amplitudes, so I is carried
    as a second ODE component instead of post-hoc quadrature.  Returns
    the full FSolution (coefficient, integral, amplitudes, energy).
    White-noise limit only.
    """
    _require_markov(params)
    times = _validated_grid(t_grid)
    lam = complex(-0.5 * params.gamma_noise, -params.delta)
    gsq = params.g**2

    def rhs(t, y):
        f = y[0]
        return [gsq + lam * f + 2.0 * f * f, f]

    y = _integrate(params, rhs, np.zeros(2, dtype=complex), times, tol, n_watch=1)
    calf = y[0].copy()
    integral = y[1].copy()
    decay = np.exp(-2.0 * integral)
    a = 0.5 * (decay + 1.0)
    b = 0.5 * (decay - 1.0)
    return FSolution(
        times=times.copy(),
        calf=calf,
        integral=integral,
        a=a,
        b=b,
        energy=np.abs(b) ** 2 * params.omega,
    )


def qsd_energy(fsol: FSolution) -> np.ndarray:
    """Stored energy series |b(t)|^2 * omega of a computed solution."""
    return fsol.energy
