"""Time evolution under the pumped effective master equation.

The generator is the T-periodic family

    L_t = L_at + eta cos(omega t) L_p + lambda^2 L_R,      T = 2 pi / omega,

acting on vectorized states.  `evolve` integrates the initial-value
problem with an adaptive embedded Runge-Kutta 4(5) scheme; a fixed-step
commutator-free 4th-order exponential (Magnus-type) integrator is provided
as an independent cross-check.  The trace is conserved structurally (every
Runge-Kutta stage lies in the kernel of the trace functional because the
adjoint generator annihilates the identity), so trace drift is a pure
roundoff health metric and is never renormalized away.

`propagator` integrates the superoperator-valued equation
d/dt tau(t,s) = L_t tau(t,s), tau(s,s) = 1, whose value over one period is
the monodromy map used by the Floquet cross-checks.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    DegenerateKernelError,
    DimensionMismatchError,
    NonPositiveKernelError,
    PositivityBreachError,
    StepSizeUnderflowError,
)
from .operator_core import Superoperator, unvec, validate_state, vec

__all__ = [
    "GeneratorBundle",
    "Trajectory",
    "averaged_generator",
    "evolve",
    "generator_at",
    "monodromy_interval",
    "populations",
    "propagator",
    "stationary_state",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class GeneratorBundle:
    """Static parts and couplings of the periodic generator."""

    l_at: Superoperator
    l_p: Superoperator
    l_r: Superoperator
    lam: float
    eta: float
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DimensionMismatchError(f"pump frequency {self.omega} must be > 0")
        d = self.l_at.dim
        if self.l_p.dim != d or self.l_r.dim != d:
            raise DimensionMismatchError("generator parts act on different spaces")

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    @property
    def static_matrix(self):
        return self.l_at.matrix + self.lam**2 * self.l_r.matrix


def generator_at(bundle, t):
    """L_t = L_at + eta cos(omega t) L_p + lambda^2 L_R."""
    drive = bundle.eta * np.cos(bundle.omega * t)
    return Superoperator(bundle.static_matrix + drive * bundle.l_p.matrix)


def averaged_generator(bundle):
    """Rotating-frame time average (eta/2) L_p + lambda^2 L_R."""
    return Superoperator(0.5 * bundle.eta * bundle.l_p.matrix
                         + bundle.lam**2 * bundle.l_r.matrix)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """States on an increasing time grid with per-point health metrics."""

    times: np.ndarray
    states: np.ndarray        # shape (n, d, d)
    trace_error: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DimensionMismatchError("output grid must be strictly increasing")


def _diagnose(states):
    tr_err = np.array([abs(np.trace(r) - 1.0) for r in states])
    min_eig = np.array([
        float(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min()) for r in states
    ])
    purity = np.array([float(np.trace(r @ r).real) for r in states])
    return tr_err, min_eig, purity


def evolve(bundle, rho0, t_end, output_grid=None, rtol=1e-8, atol=1e-10,
           method="rk45", n_steps=None):
    """Integrate rho' = L_t rho from the validated state rho0 over [0, t_end].

    method="rk45" (default): adaptive embedded Runge-Kutta with dense
    output sampled on `output_grid` (default: 201 uniform points).
    method="magnus-cf4": fixed-step commutator-free exponential integrator
    with `n_steps` uniform steps (cross-check mode; output grid is the step
    grid).

    A state whose minimum eigenvalue falls below -100*atol aborts with
    PositivityBreach; integrator stall raises StepSizeUnderflow.  The trace
    is never renormalized.
    """
    rho0 = validate_state(rho0)
    d = rho0.shape[0]
    if not t_end > 0:
        raise DimensionMismatchError(f"t_end={t_end} must be positive")
    if output_grid is None:
        output_grid = np.linspace(0.0, t_end, 201)
    output_grid = np.asarray(output_grid, dtype=float)

    if method == "rk45":
        static = bundle.static_matrix
        pump = bundle.l_p.matrix
        eta, omega = bundle.eta, bundle.omega

        def rhs(t, y):
            return static @ y + (eta * np.cos(omega * t)) * (pump @ y)

        sol = solve_ivp(rhs, (0.0, t_end), vec(rho0), method="RK45",
                        t_eval=output_grid, rtol=rtol, atol=atol)
        if not sol.success:
            raise StepSizeUnderflowError(f"integrator failed: {sol.message}")
        states = np.array([unvec(sol.y[:, i], d) for i in range(sol.y.shape[1])])
        times = sol.t
    elif method == "magnus-cf4":
        if n_steps is None:
            n_steps = max(int(np.ceil(200 * t_end / bundle.period)), 100)
        times = np.linspace(0.0, t_end, n_steps + 1)
        y = vec(rho0)
        states = [rho0]
        h = t_end / n_steps
        for i in range(n_steps):
            y = _cf4_step(bundle, times[i], h) @ y
            states.append(unvec(y, d))
        states = np.array(states)
    else:
        raise DimensionMismatchError(f"unknown method {method!r}")

    tr_err, min_eig, purity = _diagnose(states)
    worst = int(np.argmin(min_eig))
    if min_eig[worst] < -100.0 * atol:
        raise PositivityBreachError(
            f"state lost positivity at t={times[worst]:.6g}: "
            f"min eigenvalue {min_eig[worst]:.3e}",
            t=float(times[worst]), min_eig=float(min_eig[worst]),
        )
    return Trajectory(times=times, states=states, trace_error=tr_err,
                      min_eig=min_eig, purity=purity,
                      meta={"method": method, "rtol": rtol, "atol": atol})


# 4th-order commutator-free scheme on the two Gauss nodes
# c = 1/2 -/+ sqrt(3)/6 with cross weights (3 -/+ 2 sqrt(3))/12:
# the factor applied first weights the earlier node more.
_CF4_F1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_CF4_F2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0
_CF4_C1 = 0.5 - np.sqrt(3.0) / 6.0
_CF4_C2 = 0.5 + np.sqrt(3.0) / 6.0


def _cf4_step(bundle, t, h):
    a1 = generator_at(bundle, t + _CF4_C1 * h).matrix
    a2 = generator_at(bundle, t + _CF4_C2 * h).matrix
    first = expm(h * (_CF4_F2 * a1 + _CF4_F1 * a2))
    second = expm(h * (_CF4_F1 * a1 + _CF4_F2 * a2))
    return second @ first


# --------------------------------------------------------------------------
# propagator and monodromy interval
# --------------------------------------------------------------------------

def propagator(bundle, s, t, rtol=1e-10, atol=1e-12):
    """Two-parameter propagator tau(t, s) as a superoperator.

    Integrates d/dt tau = L_t tau with tau(s, s) = 1 on the matrix-valued
    ODE (dimension d^4).  t >= s required.
    """
    if t < s:
        raise DimensionMismatchError(f"need t >= s, got s={s}, t={t}")
    d = bundle.l_at.dim
    n = d * d
    if t == s:
        return Superoperator.identity(d)
    static = bundle.static_matrix
    pump = bundle.l_p.matrix
    eta, omega = bundle.eta, bundle.omega

    def rhs(tt, y):
        u = y.reshape(n, n)
        du = static @ u + (eta * np.cos(omega * tt)) * (pump @ u)
        return du.reshape(-1)

    y0 = np.eye(n, dtype=complex).reshape(-1)
    sol = solve_ivp(rhs, (s, t), y0, method="RK45", rtol=rtol, atol=atol)
    if not sol.success:
        raise StepSizeUnderflowError(f"propagator integration failed: {sol.message}")
    return Superoperator(sol.y[:, -1].reshape(n, n))


def monodromy_interval(bundle, rtol=1e-10):
    """Propagator over one pump period, tau(T, 0)."""
    return propagator(bundle, 0.0, bundle.period, rtol=rtol)


# --------------------------------------------------------------------------
# populations and export
# --------------------------------------------------------------------------

def populations(atom, traj):
    """Level populations Tr(P_k rho(t)) as an (n_times, N) real table."""
    table = np.empty((len(traj.times), atom.n_levels))
    for i, rho in enumerate(traj.states):
        for k, p in enumerate(atom.projections):
            table[i, k] = float(np.trace(p @ rho).real)
    return table


def trajectory_to_csv(atom, traj, path):
    """Write `t,pop_1..pop_N,trace,min_eig,purity` with 17-digit floats, LF."""
    pops = populations(atom, traj)
    n = atom.n_levels
    header = "t," + ",".join(f"pop_{k}" for k in range(1, n + 1)) + ",trace,min_eig,purity"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i, t in enumerate(traj.times):
            trace = float(np.trace(traj.states[i]).real)
            row = [t, *pops[i], trace, traj.min_eig[i], traj.purity[i]]
            fh.write(",".join("%.17g" % x for x in row) + "\n")


# --------------------------------------------------------------------------
# stationary states
# --------------------------------------------------------------------------

def stationary_state(superop, kernel_tol=1e-12):
    """Normalized positive kernel element of a generator.

    The kernel is found by SVD; it must be one-dimensional
    (DegenerateKernel otherwise) and the normalized element must be a
    genuine state (NonPositiveKernel otherwise).  Residual ||L(rho)||
    is verified to 1e-10.
    """
    m = superop.matrix
    d = superop.dim
    _u, s, vh = np.linalg.svd(m)
    cutoff = kernel_tol * max(1.0, s[0])
    n_null = int(np.sum(s <= cutoff))
    if n_null != 1:
        raise DegenerateKernelError(
            f"kernel dimension {n_null} (singular values {s[-max(n_null, 2):]})"
        )
    x = unvec(vh.conj().T[:, -1], d)
    tr = np.trace(x)
    if abs(tr) < 1e-10:
        raise NonPositiveKernelError("kernel element is traceless; no state in kernel")
    rho = x / tr
    rho = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-9:
        raise NonPositiveKernelError(f"kernel element has eigenvalue {w.min():.3e}")
    residual = np.linalg.norm(superop(rho), "fro")
    if residual > 1e-10 * max(1.0, np.linalg.norm(m, 2)):
        raise DegenerateKernelError(f"stationary residual {residual:.3e} too large")
    return rho
