"""Core set bookkeeping.

The core set is the ordered collection of state-action tuples whose features
anchor the regression targets during policy evaluation. Elements are only
ever appended (never evicted); restarts clear value estimates, not elements.
The regularized precision of the collected features is maintained as a
Cholesky factor and updated rank-one per insertion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import PrecisionState, precision_update, solve_from_factor

E_RATIO = math.e / (math.e - 1.0)


@dataclass
class CoreElement:
    """One anchor tuple: state handle, action vector, feature, value estimate.

    ``q`` stays None until a rollout from this element completes.
    ``uncertainty`` records the quadratic form that admitted the element,
    for diagnostics only.
    """

    state: object
    action: tuple
    phi: np.ndarray
    q: Optional[float] = None
    uncertainty: Optional[float] = None


@dataclass
class CoreSet:
    """Ordered elements plus the precision factor of their features."""

    elements: list
    precision: PrecisionState
    tau: float
    lam: float
    insertion_uncertainties: list = field(default_factory=list)

    @classmethod
    def seed(cls, rho, abar, fmap, lam: float, tau: float) -> "CoreSet":
        """Single-element core set holding the start state and default action."""
        phi = fmap.joint(rho, abar)
        precision = precision_update(PrecisionState.identity(fmap.dim, lam), phi)
        first = CoreElement(state=rho, action=tuple(abar), phi=phi)
        return cls(
            elements=[first],
            precision=precision,
            tau=tau,
            lam=lam,
            insertion_uncertainties=[None],
        )

    def add(self, element: CoreElement) -> "CoreSet":
        """Append an element that failed an uncertainty check.

        Duplicate features are tolerated; the precision update is still
        applied so the factor always reconstructs lam*I + sum phi phi^T.
        """
        self.elements.append(element)
        self.precision = precision_update(self.precision, element.phi)
        self.insertion_uncertainties.append(element.uncertainty)
        return self

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def version(self) -> int:
        """Changes exactly when the precision changes; cache key for checks."""
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.precision.dim

    def clear_q(self) -> None:
        """Reset all value estimates (policy iteration restart)."""
        for element in self.elements:
            element.q = None

    def q_vector(self) -> np.ndarray:
        values = [element.q for element in self.elements]
        if any(v is None for v in values):
            raise ValueError("core set has unset value estimates")
        return np.asarray(values, dtype=np.float64)

    def features_matrix(self) -> np.ndarray:
        return np.vstack([element.phi for element in self.elements])

    def solve_weights(self, targets=None) -> np.ndarray:
        """Ridge weights for the stored targets via the maintained factor."""
        q = self.q_vector() if targets is None else np.asarray(targets, float)
        rhs = self.features_matrix().T @ q
        return solve_from_factor(self.precision, rhs)

    def info_gain(self) -> float:
        """log det(I + Phi^T Phi / lam), read off the factor diagonal."""
        return self.precision.logdet() - self.dim * math.log(self.lam)

    def diagnostics(self) -> dict:
        return {
            "count": len(self.elements),
            "dim": self.dim,
            "tau": self.tau,
            "lambda": self.lam,
            "insertion_uncertainties": [
                None if u is None else float(u) for u in self.insertion_uncertainties
            ],
            "info_gain": self.info_gain(),
        }

    def to_json(self) -> str:
        return json.dumps(self.diagnostics())


def cmax_bound(d: int, tau: float, lam: float) -> float:
    """Worst-case core set size for threshold tau and regularizer lam.

    Any insertion stream whose every element has quadratic-form uncertainty
    above tau at insertion time is capped at
    ``e/(e-1) * (1+tau)/tau * d * (log(1 + 1/tau) + log(1 + 1/lam))``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (tau > 0 and lam > 0):
        raise ValueError("tau and lam must be positive")
    return (
        E_RATIO
        * (1.0 + tau)
        / tau
        * d
        * (math.log1p(1.0 / tau) + math.log1p(1.0 / lam))
    )
