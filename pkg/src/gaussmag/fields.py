"""Electromagnetic field models and the Penning trap scaling.

Every model evaluates its potentials and derivatives on batches of points
``x`` of shape ``(..., d)``. Index conventions for the tensors:

``J[k, l]``          ``d_l A_k`` (Jacobian of ``A``)
``H[m, k, l]``       ``d_k d_l A_m``
``T3[m, k, l, n]``   ``d_k d_l d_n A_m``

with any leading batch axes in front.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gaussmag.errors import UnstableTrap


@dataclass(frozen=True)
class Capabilities:
    is_linear_A: bool = False
    is_quadratic_phi: bool = False
    has_analytic_averages: bool = False
    time_dependent: bool = False


class FieldModel:
    """Base class for a vector potential ``A`` and a scalar potential ``phi``.

    Subclasses implement the evaluation methods below. All methods accept
    ``x`` with arbitrary leading batch axes and are pure.
    """

    dim: int = 3
    capabilities: Capabilities = Capabilities()

    def A(self, t, x):
        raise NotImplementedError

    def dtA(self, t, x):
        raise NotImplementedError

    def J(self, t, x):
        raise NotImplementedError

    def dtJ(self, t, x):
        raise NotImplementedError

    def hessA(self, t, x):
        raise NotImplementedError

    def d3A(self, t, x):
        raise NotImplementedError

    def phi(self, t, x):
        raise NotImplementedError

    def grad_phi(self, t, x):
        raise NotImplementedError

    def hess_phi(self, t, x):
        raise NotImplementedError

    def curl(self, t, x):
        """``curl A``: a 3-vector for d=3, the scalar ``d_1 A_2 - d_2 A_1`` for d=2."""
        J = self.J(t, x)
        if self.dim == 2:
            return J[..., 1, 0] - J[..., 0, 1]
        return np.stack(
            [J[..., 2, 1] - J[..., 1, 2], J[..., 0, 2] - J[..., 2, 0], J[..., 1, 0] - J[..., 0, 1]],
            axis=-1,
        )

    def B3(self, t, x):
        """Magnetic field embedded in 3D, ``(0, 0, curl)`` for d=2."""
        c = np.asarray(self.curl(t, x))
        if self.dim == 2:
            z = np.zeros_like(c)
            return np.stack([z, z, c], axis=-1)
        return c


def field_derivatives(model: FieldModel, t, x) -> dict:
    """All potentials and derivative tensors of ``model`` at ``(t, x)``."""
    return {
        "A": model.A(t, x),
        "dtA": model.dtA(t, x),
        "J": model.J(t, x),
        "dtJ": model.dtJ(t, x),
        "hessA": model.hessA(t, x),
        "d3A": model.d3A(t, x),
        "phi": model.phi(t, x),
        "grad_phi": model.grad_phi(t, x),
        "hess_phi": model.hess_phi(t, x),
        "B": model.curl(t, x),
    }


def cross_with_field(w, B, dim: int):
    """Column-wise ``w x B`` for a vector or a matrix of column vectors.

    For ``dim == 2`` the field is ``(0, 0, b)`` with scalar ``b`` and the
    product projects back to ``(w_2 b, -w_1 b)``.
    """
    w = np.asarray(w)
    if dim == 2:
        b = float(np.asarray(B).reshape(-1)[-1])
        return b * np.stack([w[1], -w[0]], axis=0)
    B = np.asarray(B, dtype=float)
    if w.ndim == 1:
        return np.cross(w, B)
    return np.cross(w.T, B).T


class TrigField2D(FieldModel):
    """``A = (sin s, -sin s)`` with ``s = x_1 + x_2 + alpha t`` and ``phi = sin(x_1 + x_2)``."""

    dim = 2

    def __init__(self, alpha: float = 1.0):
        self.alpha = float(alpha)
        self.capabilities = Capabilities(
            is_linear_A=False,
            is_quadratic_phi=False,
            has_analytic_averages=True,
            time_dependent=self.alpha != 0.0,
        )

    _u = np.array([1.0, -1.0])

    def _s(self, t, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] + x[..., 1] + self.alpha * t

    def A(self, t, x):
        return np.sin(self._s(t, x))[..., None] * self._u

    def dtA(self, t, x):
        return self.alpha * np.cos(self._s(t, x))[..., None] * self._u

    def J(self, t, x):
        c = np.cos(self._s(t, x))
        return c[..., None, None] * np.outer(self._u, np.ones(2))

    def dtJ(self, t, x):
        s = np.sin(self._s(t, x))
        return -self.alpha * s[..., None, None] * np.outer(self._u, np.ones(2))

    def hessA(self, t, x):
        s = np.sin(self._s(t, x))
        return -s[..., None, None, None] * np.multiply.outer(self._u, np.ones((2, 2)))

    def d3A(self, t, x):
        c = np.cos(self._s(t, x))
        return -c[..., None, None, None, None] * np.multiply.outer(self._u, np.ones((2, 2, 2)))

    def _r(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] + x[..., 1]

    def phi(self, t, x):
        return np.sin(self._r(x))

    def grad_phi(self, t, x):
        return np.cos(self._r(x))[..., None] * np.ones(2)

    def hess_phi(self, t, x):
        return -np.sin(self._r(x))[..., None, None] * np.ones((2, 2))

    def curl(self, t, x):
        return -2.0 * np.cos(self._s(t, x))


class ZeroMagneticField(FieldModel):
    """``A = 0`` with a user-supplied scalar potential and its derivatives.

    Used for reductions to standard variational Gaussian dynamics.
    """

    def __init__(self, dim, phi, grad_phi, hess_phi, quadratic: bool = False):
        self.dim = int(dim)
        self._phi, self._gphi, self._hphi = phi, grad_phi, hess_phi
        self.capabilities = Capabilities(is_linear_A=True, is_quadratic_phi=quadratic)

    def _zeros(self, x, *shape):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + shape)

    def A(self, t, x):
        return self._zeros(x, self.dim)

    def dtA(self, t, x):
        return self._zeros(x, self.dim)

    def J(self, t, x):
        return self._zeros(x, self.dim, self.dim)

    def dtJ(self, t, x):
        return self._zeros(x, self.dim, self.dim)

    def hessA(self, t, x):
        return self._zeros(x, *(self.dim,) * 3)

    def d3A(self, t, x):
        return self._zeros(x, *(self.dim,) * 4)

    def phi(self, t, x):
        return self._phi(np.asarray(x, dtype=float))

    def grad_phi(self, t, x):
        return self._gphi(np.asarray(x, dtype=float))

    def hess_phi(self, t, x):
        return self._hphi(np.asarray(x, dtype=float))


class PenningField3D(FieldModel):
    """Dimensionless Penning trap.

    ``A = ratio_B/2 (-x_2, x_1, 0)`` and
    ``phi = charge_sign * ratio_omega * (x_3^2 - (x_1^2 + x_2^2)/2)``.
    """

    dim = 3
    capabilities = Capabilities(is_linear_A=True, is_quadratic_phi=True)

    def __init__(self, ratio_B: float, ratio_omega: float, charge_sign: int = 1):
        if charge_sign not in (1, -1):
            raise ValueError("charge_sign must be +1 or -1")
        self.ratio_B = float(ratio_B)
        self.ratio_omega = float(ratio_omega)
        self.charge_sign = int(charge_sign)
        b = self.ratio_B
        self._J = 0.5 * b * np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        self._hphi = self.charge_sign * self.ratio_omega * np.diag([-1.0, -1.0, 2.0])

    @property
    def B(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.ratio_B])

    def _batch(self, x, *shape):
        x = np.asarray(x, dtype=float)
        return x.shape[:-1] + shape

    def A(self, t, x):
        return np.asarray(x, dtype=float) @ self._J.T

    def dtA(self, t, x):
        return np.zeros(self._batch(x, 3))

    def J(self, t, x):
        return np.broadcast_to(self._J, self._batch(x, 3, 3)).copy()

    def dtJ(self, t, x):
        return np.zeros(self._batch(x, 3, 3))

    def hessA(self, t, x):
        return np.zeros(self._batch(x, 3, 3, 3))

    def d3A(self, t, x):
        return np.zeros(self._batch(x, 3, 3, 3, 3))

    def phi(self, t, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...k,kl,...l->...", x, self._hphi, x)

    def grad_phi(self, t, x):
        return np.asarray(x, dtype=float) @ self._hphi

    def hess_phi(self, t, x):
        return np.broadcast_to(self._hphi, self._batch(x, 3, 3)).copy()


# Physical constants [SI]. The elementary charge and hbar are the exact
# and recommended values; the masses are the four-digit values commonly
# quoted with trap data.
HBAR = 1.054571817e-34
E_CHARGE = 1.602176634e-19
M_PROTON = 1.673e-27
M_ELECTRON = 9.109e-31

SPECIES = {
    "proton": {"delta_m": 0.00112, "B0_T": 5.050, "phi0_V": 53.10, "mass": M_PROTON, "charge": E_CHARGE},
    "electron": {"delta_m": 0.00335, "B0_T": 5.872, "phi0_V": 10.22, "mass": M_ELECTRON, "charge": E_CHARGE},
}


@dataclass(frozen=True)
class TrapParameters:
    """SI trap data: size [m], field [T], electrode potential [V], mass [kg], charge [C]."""

    delta: float
    B0: float
    phi0: float
    mass: float
    charge: float
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("delta", "B0", "phi0", "mass", "charge", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_species(cls, species: str, **overrides) -> "TrapParameters":
        if species not in SPECIES:
            raise ValueError(f"unknown species {species!r}")
        d = dict(SPECIES[species])
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls(delta=d["delta_m"], B0=d["B0_T"], phi0=d["phi0_V"], mass=d["mass"], charge=d["charge"])


@dataclass(frozen=True)
class PenningScaling:
    eps: float
    ratio_B: float
    ratio_omega: float
    omega_c: float
    omega_3: float
    omega_plus: float
    omega_minus: float
    Omega: float
    B_m: float

    @property
    def nu_plus(self) -> float:
        return self.omega_plus / (2 * np.pi)

    @property
    def nu_3(self) -> float:
        return self.omega_3 / (2 * np.pi)

    @property
    def nu_minus(self) -> float:
        return self.omega_minus / (2 * np.pi)

    def field(self, charge_sign: int = 1) -> PenningField3D:
        return PenningField3D(self.ratio_B, self.ratio_omega, charge_sign)


def penning_scaling(params: TrapParameters) -> PenningScaling:
    """Trap frequencies and the dimensionless parameters of the scaled equation.

    Raises
    ------
    UnstableTrap
        If ``omega_c^2 <= 2 omega_3^2``.
    """
    wc = params.charge * params.B0 / params.mass
    w3 = np.sqrt(params.charge * params.phi0 / (params.mass * params.delta**2))
    disc = wc**2 - 2 * w3**2
    if disc <= 0:
        raise UnstableTrap(f"omega_c^2 = {wc**2:.4e} <= 2 omega_3^2 = {2 * w3**2:.4e}")
    Om = np.sqrt(disc)
    wp = 0.5 * (wc + Om)
    wm = 0.5 * (wc - Om)
    Bm = params.mass * wm / params.charge
    eps = params.hbar / (params.charge * Bm * params.delta**2)
    return PenningScaling(
        eps=float(eps),
        ratio_B=float(params.B0 / Bm),
        ratio_omega=float(wp / wm),
        omega_c=float(wc),
        omega_3=float(w3),
        omega_plus=float(wp),
        omega_minus=float(wm),
        Omega=float(Om),
        B_m=float(Bm),
    )
