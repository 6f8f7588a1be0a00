from .archive import RunArchive
from .storage.filestorage import FileStorage
from .fields import GridSpec, UnitSystem, ScalarField, SpinorField, RealField, VectorField
from .propagator import Potential, PropagatorConfig, SpinCoupling, evolve, evolve_stages

from .version import __version__, __version_info__

__all__ = [
    "FileStorage",
    "GridSpec",
    "Potential",
    "PropagatorConfig",
    "RealField",
    "RunArchive",
    "ScalarField",
    "SpinCoupling",
    "SpinorField",
    "UnitSystem",
    "VectorField",
    "evolve",
    "evolve_stages",
]
