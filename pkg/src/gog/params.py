"""Hyperparameter containers shared by the model components."""

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError
from .tessellation import Geometric, ShiftedNegBinomial

SIMILARITIES = ("tree", "matrix_t", "none")


def _sub(D, idx):
    if D is None:
        return None
    D = np.asarray(D, dtype=float)
    if D.ndim == 0:
        return float(D) * np.eye(len(idx))
    return D[np.ix_(idx, idx)]


@dataclass(frozen=True)
class TreeHyper:
    """G-Wishart hyperparameters of the within-supernode tree models.

    `D` is None for the identity, or a matrix indexed by node.
    """

    delta: float = 3.0
    D: object = None

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError("delta must be positive")

    def rate(self, members):
        D = _sub(self.D, list(members))
        return np.eye(len(members)) if D is None else D


@dataclass(frozen=True)
class GWishartHyper:
    """G-Wishart hyperparameters of the supergraph model.

    `D_G` is None for the identity, or a p x p matrix indexed by augmented slot.
    """

    delta_G: float = 3.0
    D_G: object = None

    def __post_init__(self):
        if self.delta_G <= 0:
            raise ConfigError("delta_G must be positive")

    def rate(self, slots):
        D = _sub(self.D_G, list(slots))
        return np.eye(len(slots)) if D is None else D


@dataclass(frozen=True)
class HyperParams:
    tree: TreeHyper = field(default_factory=TreeHyper)
    gw: GWishartHyper = field(default_factory=GWishartHyper)
    cohesion: object = field(default_factory=lambda: ShiftedNegBinomial(2.0, 1.0 / 6.0))
    zeta: float = 1.0
    xi_se: float = 0.1
    xi_q: float = 0.1
    similarity: str = "tree"

    def __post_init__(self):
        if not 0 < self.zeta <= 1:
            raise ConfigError(f"zeta must lie in (0, 1], got {self.zeta}")
        for name in ("xi_se", "xi_q"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.similarity not in SIMILARITIES:
            raise ConfigError(f"similarity must be one of {SIMILARITIES}")

    def replace(self, **changes):
        fields = {
            "tree": self.tree, "gw": self.gw, "cohesion": self.cohesion,
            "zeta": self.zeta, "xi_se": self.xi_se, "xi_q": self.xi_q,
            "similarity": self.similarity,
        }
        fields.update(changes)
        return HyperParams(**fields)

    def to_dict(self):
        def mat(D):
            return None if D is None else np.asarray(D).tolist()

        coh = asdict(self.cohesion)
        coh["kind"] = type(self.cohesion).__name__
        return {
            "delta": self.tree.delta, "D": mat(self.tree.D),
            "delta_G": self.gw.delta_G, "D_G": mat(self.gw.D_G),
            "cohesion": coh, "zeta": self.zeta, "xi_se": self.xi_se,
            "xi_q": self.xi_q, "similarity": self.similarity,
        }

    @classmethod
    def from_dict(cls, d):
        coh = dict(d.get("cohesion", {"kind": "ShiftedNegBinomial", "r": 2.0, "pi": 1 / 6}))
        kind = coh.pop("kind")
        cohesion = {"Geometric": Geometric, "ShiftedNegBinomial": ShiftedNegBinomial}[kind](**coh)
        return cls(
            tree=TreeHyper(d.get("delta", 3.0), d.get("D")),
            gw=GWishartHyper(d.get("delta_G", 3.0), d.get("D_G")),
            cohesion=cohesion, zeta=d.get("zeta", 1.0), xi_se=d.get("xi_se", 0.1),
            xi_q=d.get("xi_q", 0.1), similarity=d.get("similarity", "tree"),
        )
