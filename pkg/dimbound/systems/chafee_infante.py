"""Spectral Galerkin truncation of the Chafee–Infante equation u_t = u_xx + λu − u³ on (0, 1), u(0) = u(1) = 0

The state is the coefficient vector a of u = Σ aₙ√2 sin(nπx), n = 1…N. The problem is written as the semilinear
equation a' + Aa = F(a) with the shifted operator A = diag(n²π² − λ + μ) and F(u) = μu − u³, where the shift μ makes
the first eigenvalue of A at least one. The truncation plays the role of the compact part: e^(−At) is diagonal and
its tails are checked directly.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from loguru import logger

from dimbound.dimension import SemilinearConstants, admissibility_constant
from dimbound.exception import InvalidInputError
from dimbound.norms import NormDescriptor
from dimbound.systems import DynamicalSystem, register_system

MIN_MODES = 4


@dataclass(frozen=True, eq=False)
class GalerkinParabolic:
    """Diagonal model of the fractional power spaces X^α and of the semigroup e^(−At)

    Attributes:
        n_modes: number N of sine modes
        lambda_param: the reaction parameter λ
        alpha: fractional exponent of the phase space X^α
        quadrature: number of midpoint nodes evaluating the cubic
        M: configured admissibility constant, checked against the measured one
    """

    n_modes: int
    lambda_param: float
    alpha: float = 0.01
    quadrature: int = 0
    M: float | None = None

    def __post_init__(self):
        if self.n_modes < MIN_MODES:
            raise InvalidInputError(
                text=f"The Galerkin truncation needs at least {MIN_MODES} modes, got {self.n_modes}"
            )
        if not 0 < self.alpha < 1:
            raise InvalidInputError(text=f"The fractional exponent must lie in (0, 1), got {self.alpha}")
        if self.quadrature == 0:
            object.__setattr__(self, "quadrature", 4 * self.n_modes)

    @property
    def shift(self) -> float:
        """μ = max(0, λ − π² + 1)"""
        return max(0.0, self.lambda_param - math.pi**2 + 1)

    @cached_property
    def dirichlet_eigenvalues(self) -> np.ndarray:
        return (np.arange(1, self.n_modes + 1) * math.pi) ** 2

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Strictly increasing eigenvalues of the shifted operator A"""
        return self.dirichlet_eigenvalues - self.lambda_param + self.shift

    @cached_property
    def modes(self) -> np.ndarray:
        """Q×N matrix of the modes at the quadrature nodes"""
        nodes = (np.arange(self.quadrature) + 0.5) / self.quadrature
        return math.sqrt(2) * np.sin(np.outer(nodes, np.arange(1, self.n_modes + 1)) * math.pi)

    def to_grid(self, a: np.ndarray) -> np.ndarray:
        return a @ self.modes.T

    def project(self, u: np.ndarray) -> np.ndarray:
        return u @ self.modes / self.quadrature

    def nonlinearity(self, a: np.ndarray) -> np.ndarray:
        """F(a) = P(μu − u³) in mode space"""
        u = self.to_grid(a)
        return self.project(self.shift * u - u**3)

    def nonlinearity_jacobian(self, a: np.ndarray) -> np.ndarray:
        u = self.to_grid(a)
        weights = (self.shift - 3 * u**2) / self.quadrature
        return np.einsum("qi,...q,qj->...ij", self.modes, weights, self.modes)

    def vector_field(self, a: np.ndarray) -> np.ndarray:
        return -self.eigenvalues * a + self.nonlinearity(a)

    def jacobian(self, a: np.ndarray) -> np.ndarray:
        return self.nonlinearity_jacobian(a) - np.diag(self.eigenvalues)

    def projection(self, n: int) -> np.ndarray:
        """P_n onto the first n modes"""
        return np.diag((np.arange(self.n_modes) < n).astype(float))

    def semigroup(self, t: float) -> np.ndarray:
        return np.diag(np.exp(-self.eigenvalues * t))

    def tail_norm(self, n: int, t: float) -> float:
        """‖e^(−At)Q_n‖ in X, which equals e^(−λ t) for the first eigenvalue λ of the tail"""
        return float(np.linalg.norm(self.semigroup(t) @ (np.eye(self.n_modes) - self.projection(n)), 2))

    def fractional_norm(self) -> NormDescriptor:
        """‖a‖_(X^α) = ‖A^α a‖₂"""
        return NormDescriptor.induced(np.diag(self.eigenvalues**self.alpha), base="l2")

    def admissibility_constant(self, t: float = 1.0) -> float:
        """Measured M for the triples (β, γ) ∈ {(0, 0), (α, 0), (α, α)}"""
        measured = max(
            admissibility_constant(self.eigenvalues, beta, gamma_, t)
            for beta, gamma_ in ((0.0, 0.0), (self.alpha, 0.0), (self.alpha, self.alpha))
        )
        if self.M is not None and measured > self.M:
            logger.warning(f"Measured admissibility constant {measured:.6g} exceeds the configured M={self.M}")
        return measured

    def lipschitz_constant(self, points: np.ndarray) -> float:
        """N = sup ‖DF(a)A^(−α)‖ over the points, the Lipschitz constant of F from X^α to X on the sample"""
        scaled = self.nonlinearity_jacobian(np.atleast_2d(points)) * self.eigenvalues ** (-self.alpha)
        return float(np.linalg.norm(scaled, 2, axis=(-2, -1)).max())

    def constants(self, points: np.ndarray, t: float = 1.0) -> SemilinearConstants:
        M = self.admissibility_constant(t)
        N = self.lipschitz_constant(points)
        return SemilinearConstants(
            M=M,
            M_bar=M,
            N=N,
            alpha=self.alpha,
            eigenvalues=self.eigenvalues.tolist(),
            t=t,
            constants_provenance={
                "M": f"measured admissibility constant of the diagonal semigroup at t={t}",
                "M_bar": "taken equal to M",
                "N": f"sup ‖DF A^-α‖ over {len(np.atleast_2d(points))} attractor points",
                "alpha": "configured fractional exponent",
                "eigenvalues": f"n²π² − λ + μ with μ = {self.shift:.6g}",
            },
        )

    def equilibrium_guesses(self) -> np.ndarray:
        """The origin and ±a₁φ₁ with the amplitude of the one-mode balance (λ − π²) = 3/2·a₁²"""
        amplitude = math.sqrt(max(self.lambda_param - math.pi**2, 0.0) / 1.5)
        guesses = np.zeros((3, self.n_modes))
        guesses[1, 0], guesses[2, 0] = amplitude, -amplitude
        return guesses


def chafee_infante_galerkin(
    n_modes: int = 16, lambda_param: float = 10.5, alpha: float = 0.01, M: float | None = None
) -> tuple[GalerkinParabolic, DynamicalSystem]:
    """The spectral model and the system of its coefficient vector

    Example:
    >>> model, system = chafee_infante_galerkin(8, 5.0)
    >>> model.shift, bool(np.all(np.diff(model.eigenvalues) > 0))
    (0.0, True)
    """
    model = GalerkinParabolic(n_modes=n_modes, lambda_param=lambda_param, alpha=alpha, M=M)
    system = DynamicalSystem(
        name="chafee_infante",
        state_dim=n_modes,
        vector_field=model.vector_field,
        jacobian=model.jacobian,
        nonlinear_jacobian=model.nonlinearity_jacobian,
        norm=model.fractional_norm(),
        spread=1.0,
        model=model,
        metadata={"n_modes": n_modes, "lambda_param": lambda_param, "alpha": alpha},
    )
    return model, system


@register_system()
def chafee_infante(
    n_modes: int = 16, lambda_param: float = 10.5, alpha: float = 0.01, M: float | None = None
) -> DynamicalSystem:
    return chafee_infante_galerkin(n_modes, lambda_param, alpha, M)[1]
