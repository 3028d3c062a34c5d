"""Problem description and result containers."""
from dataclasses import dataclass, field

import numpy as np

from ..algebra import Metric
from ..constitutive import COUPLINGS, MagnetoElasticEnergy
from ..errors import ConfigError
from ..mesh import SimplicialMesh


@dataclass(frozen=True)
class AffineField:
    """``x -> value + gradient @ x``; used for prescribed displacements and potentials."""

    value: tuple = (0.0, 0.0, 0.0)
    gradient: tuple = ((0.0, 0.0, 0.0),) * 3

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        g = np.asarray(self.gradient, dtype=float)
        if v.shape != (3,) or g.shape != (3, 3):
            raise ConfigError("affine field needs a 3-vector 'value' and a 3x3 'gradient'")
        object.__setattr__(self, "value", tuple(v.tolist()))
        object.__setattr__(self, "gradient", tuple(map(tuple, g.tolist())))

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return np.asarray(self.value) + pts @ np.asarray(self.gradient).T

    def to_dict(self):
        return {"value": list(self.value), "gradient": [list(r) for r in self.gradient]}


@dataclass
class SolverSettings:
    tol: float = 1e-10
    max_iter: int | None = None
    outer_tol: float = 1e-8
    max_outer: int = 50
    damping: float = 1.0
    compat_tol: float = 1e-8
    freeze_metric: bool = False
    extension: str = "laplace"

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}")
        if self.extension not in ("laplace", "graded_laplace"):
            raise ConfigError(f"unknown displacement extension {self.extension!r}")


@dataclass
class ProblemSpec:
    """Boundary-value problem on a tagged mesh.

    Parameters
    ----------
    materials : dict region tag -> MagnetoElasticEnergy
        Regions whose material has an elastic part form the body M unless
        ``body_regions`` is given.
    displacement_bc : dict boundary tag -> callable
        Prescribed displacement on S_e (points -> vectors).
    traction : dict boundary tag -> 3-vector
        Surface force per unit area on parts of the body boundary.
    body_force : dict region tag -> 3-vector or callable
        Coefficient of ``dx^dy^dz`` per covector component.
    potential_bc : dict boundary tag -> callable
        Prescribed covector potential on S_m (points -> 1-form components).
    surface_field : dict boundary tag -> 3 components of a 1-form
    current : dict region tag -> 3 components of a 2-form, or callable
    magnetic_forces : bool
        Model A only; False switches the magnetic stress off.
    """

    mesh: SimplicialMesh
    materials: dict
    body_regions: tuple | None = None
    displacement_bc: dict = field(default_factory=dict)
    traction: dict = field(default_factory=dict)
    body_force: dict = field(default_factory=dict)
    potential_bc: dict = field(default_factory=dict)
    surface_field: dict = field(default_factory=dict)
    current: dict = field(default_factory=dict)
    settings: SolverSettings = field(default_factory=SolverSettings)
    magnetic_forces: bool = True
    coupling: str | None = None

    def __post_init__(self):
        present = set(np.unique(self.mesh.regions).tolist())
        missing = present - set(self.materials)
        if missing:
            raise ConfigError(f"no material for region(s) {sorted(missing)}")
        for tag, mat in self.materials.items():
            if not isinstance(mat, MagnetoElasticEnergy):
                raise ConfigError(f"material for region {tag} is not a MagnetoElasticEnergy")
        couplings = {m.coupling for m in self.materials.values()}
        if self.coupling is None:
            if len(couplings) != 1:
                raise ConfigError(f"regions disagree on coupling: {sorted(couplings)}")
            self.coupling = couplings.pop()
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"unknown coupling {self.coupling!r}")
        if self.body_regions is None:
            self.body_regions = tuple(sorted(t for t, m in self.materials.items() if m.elastic is not None))
        else:
            self.body_regions = tuple(self.body_regions)
            for t in self.body_regions:
                if self.materials[t].elastic is None:
                    raise ConfigError(f"body region {t} has no elastic parameters")
        both = set(self.displacement_bc) & set(self.traction)
        if both:
            raise ConfigError(f"boundary tag(s) {sorted(both)} carry both displacement and traction")
        both = set(self.potential_bc) & set(self.surface_field)
        if both:
            raise ConfigError(f"boundary tag(s) {sorted(both)} carry both potential and surface field")
        Gs = [m.G for m in self.materials.values()]
        if any(not np.allclose(g.g, Gs[0].g) or g.orientation_sign != Gs[0].orientation_sign for g in Gs):
            raise ConfigError("all regions must share the base metric")

    @property
    def metric(self) -> Metric:
        return next(iter(self.materials.values())).G

    @property
    def body_mask(self):
        return self.mesh.region_mask(self.body_regions)

    def element_values(self, attr):
        """Per-tet array of a material attribute (lam, mu, reluctivity)."""
        out = np.zeros(self.mesh.n_tets)
        for tag, mat in self.materials.items():
            mask = self.mesh.regions == tag
            if attr == "reluctivity":
                out[mask] = mat.reluctivity
            elif mat.elastic is not None:
                out[mask] = getattr(mat.elastic, attr)
        return out

    def with_coupling(self, coupling):
        """Copy of the spec with every material switched to ``coupling``."""
        from dataclasses import replace
        mats = {t: replace(m, coupling=coupling) for t, m in self.materials.items()}
        return replace(self, materials=mats, coupling=coupling)


@dataclass
class SolveReport:
    """Fields, energies and solver diagnostics of a solve.

    Element fields are batched forms with one entry per tetrahedron; the
    elastic fields are zero outside the body.
    """

    coupling: str
    nu: np.ndarray | None = None
    a: np.ndarray | None = None
    eps: object = None
    b: object = None
    sigma: object = None
    h: object = None
    magnetic_stress: object = None
    energies: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    converged: bool = True
    spec: ProblemSpec | None = None
    systems: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def summary(self):
        return {
            "coupling": self.coupling,
            "energies": {k: float(v) for k, v in self.energies.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "iterations": {k: int(v) for k, v in self.iterations.items()},
            "outer_history": [{k: float(v) for k, v in h.items()} for h in self.history],
            "converged": bool(self.converged),
            "warnings": list(self.warnings),
        }
