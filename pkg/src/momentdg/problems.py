"""Heat-transfer and shock-structure problem setups."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .collision import BgkParams
from .dg import BoundaryCondition, DGProblem, Mesh1D
from .errors import ConfigError
from .goal import GoalSpec
from .velocity import GaussianParams, RenormSpec


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(name, f"must be a positive number, got {value!r}")


def _count(name, value, minimum=1):
    if not (isinstance(value, int) and not isinstance(value, bool) and value >= minimum):
        raise ConfigError(name, f"must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class HeatTransferConfig:
    theta_left: float = 1.0
    theta_ratio: float = 1.2
    knudsen: float = 1e-3
    n_elements: int = 100
    renorm_n: int = 1
    initial_order: int = 4
    dual_increment: int = 2
    reference_order: int = 14

    FULL_SCALE_ELEMENTS = 1000

    def __post_init__(self):
        for f in ("theta_left", "theta_ratio", "knudsen"):
            _positive(f, getattr(self, f))
        _count("n_elements", self.n_elements)
        _count("renorm_n", self.renorm_n)
        _count("initial_order", self.initial_order, 2)
        _count("dual_increment", self.dual_increment)
        _count("reference_order", self.reference_order, 2)

    @property
    def theta_right(self) -> float:
        return self.theta_left * self.theta_ratio


@dataclass(frozen=True)
class ShockConfig:
    mach: float = 1.4
    mean_free_path: float = 3.67e-3
    n_elements: int = 125
    renorm_n: int = 2
    initial_order: int = 4
    dual_increment: int = 4
    reference_order: int = 12
    dof_n: int = 3
    rho_left: float = 1.0
    theta_left: float = 1.0

    FULL_SCALE_ELEMENTS = 1250

    def __post_init__(self):
        _positive("mach", self.mach)
        if not self.mach >= 1.0:
            raise ConfigError("mach", f"must be >= 1 for a compressive shock, got {self.mach}")
        for f in ("mean_free_path", "rho_left", "theta_left"):
            _positive(f, getattr(self, f))
        _count("n_elements", self.n_elements)
        _count("renorm_n", self.renorm_n)
        _count("initial_order", self.initial_order, 2)
        _count("dual_increment", self.dual_increment)
        _count("reference_order", self.reference_order, 2)
        _count("dof_n", self.dof_n)

    @property
    def gamma(self) -> float:
        return 1.0 + 2.0 / self.dof_n

    @property
    def domain(self):
        return -40.0 * self.mean_free_path, 40.0 * self.mean_free_path


def heat_transfer_background(x: float, cfg: HeatTransferConfig) -> GaussianParams:
    """Linear temperature and isobaric density between the walls."""
    tl, tr = cfg.theta_left, cfg.theta_right
    theta = tl + (tr - tl) * x
    return GaussianParams(0.5 * (tl + tr) / theta, 0.0, theta)


def rankine_hugoniot(left: GaussianParams, mach: float, gamma: float) -> tuple:
    """Upstream state with its sonic-scaled velocity, and the downstream state.

    The ``u`` of ``left`` is ignored; the upstream velocity is
    ``mach * sqrt(gamma * theta_left)``.
    """
    if not mach > 0.0 or not gamma > 1.0:
        raise ValueError("need mach > 0 and gamma > 1")
    m2 = mach * mach
    d = m2 - 1.0
    gp = gamma + 1.0
    rho_l, th_l = left.rho, left.theta
    u_l = mach * math.sqrt(gamma * th_l)
    # numerators written as gp + O(Ma**2 - 1) so the sonic case is exact
    compress = gp * m2 / (gp + (gamma - 1.0) * d)
    rho_r = rho_l * compress
    th_r = th_l / compress * (gp + 2.0 * gamma * d) / gp
    u_r = u_l * ((gp + (gamma - 1.0) * d) / (gp * m2))
    return GaussianParams(rho_l, u_l, th_l), GaussianParams(rho_r, u_r, th_r)


def shock_interpolant(x: float, cfg: ShockConfig) -> float:
    return 0.5 - 0.5 * math.tanh(2.0 * x / (40.0 * cfg.mean_free_path))


def shock_states(cfg: ShockConfig):
    return rankine_hugoniot(GaussianParams(cfg.rho_left, 0.0, cfg.theta_left), cfg.mach, cfg.gamma)


def shock_background(x: float, cfg: ShockConfig) -> GaussianParams:
    """Smooth tanh profile between the Rankine-Hugoniot states."""
    left, right = shock_states(cfg)
    X = shock_interpolant(x, cfg)
    ur = right.u / left.u  # u_r / u_l
    rho = left.rho * (X + (1.0 - X) / ur)
    q = left.rho / rho
    theta = left.theta * (
        q * (X + (right.theta / left.theta) * (1.0 - X) / ur)
        + cfg.gamma / 3.0 * q * q * (1.0 - ur) ** 2 * cfg.mach ** 2 * (1.0 - X) * X
    )
    return GaussianParams(rho, left.u * left.rho / rho, theta)


@dataclass
class ProblemSetup:
    name: str
    dg: DGProblem
    goal: GoalSpec
    initial_order: int
    dual_increment: int
    reference_order: int


def build_problem(cfg) -> ProblemSetup:
    if isinstance(cfg, HeatTransferConfig):
        mesh = Mesh1D(0.0, 1.0, cfg.n_elements)
        bgs = [heat_transfer_background(x, cfg) for x in mesh.centers]
        # pin the left wall at the background density there to fix the scale
        bcl = BoundaryCondition.wall(cfg.theta_left, heat_transfer_background(0.0, cfg).rho)
        bcr = BoundaryCondition.wall(cfg.theta_right)
        params = BgkParams(cfg.knudsen)
        name = "heat_transfer"
    elif isinstance(cfg, ShockConfig):
        mesh = Mesh1D(*cfg.domain, cfg.n_elements)
        bgs = [shock_background(x, cfg) for x in mesh.centers]
        left, right = shock_states(cfg)
        bcl = BoundaryCondition.maxwellian(left)
        bcr = BoundaryCondition.maxwellian(right)
        params = BgkParams(cfg.mean_free_path)
        name = "shock"
    else:
        raise TypeError(f"unsupported configuration {type(cfg).__name__}")
    dg = DGProblem(mesh, bgs, bcl, bcr, RenormSpec(cfg.renorm_n), params)
    return ProblemSetup(name, dg, GoalSpec.from_backgrounds(bgs), cfg.initial_order,
                        cfg.dual_increment, cfg.reference_order)
