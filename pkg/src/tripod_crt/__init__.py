"""Conical Radon transform with vertices on a tripod detector, and its inversion."""

from .errors import (BadMagic, CrcMismatch, CRTError, InsufficientDerivOrder, InsufficientGrid,
                     NoIntersection, OutOfRange, SchemaMismatch, SpecMismatch, TripodError,
                     ZeroDirection)
from .forward import (QuadratureConfig, cone_transform, plane_transform, ray_transform,
                      simulate_cone_data)
from .geometry import Arm, Vertex, lambda_point
from .phantom import (PhantomComponent, PhantomSpec, analytic_radon, analytic_ray_p1,
                      default_phantom, eval_phantom, validate_support)
from .sigproc import (ConeDataGrid, PhiGrid, ProcessedGrid, SGrid, YGrid, diff_y, hilbert_s,
                      process_cone_data)
from .inversion import (SphereGrid, VolumeGrid, VolumeSpec, backproject, p1_eval, pk_eval,
                        radon_invert, reconstruct, rf_eval)
from .cli_io import RunConfig, metrics, read_crt, write_crt

__all__ = [
    "BadMagic",
    "CrcMismatch",
    "CRTError",
    "InsufficientDerivOrder",
    "InsufficientGrid",
    "NoIntersection",
    "OutOfRange",
    "SchemaMismatch",
    "SpecMismatch",
    "TripodError",
    "ZeroDirection",
    "QuadratureConfig",
    "cone_transform",
    "plane_transform",
    "ray_transform",
    "simulate_cone_data",
    "Arm",
    "Vertex",
    "lambda_point",
    "PhantomComponent",
    "PhantomSpec",
    "analytic_radon",
    "analytic_ray_p1",
    "default_phantom",
    "eval_phantom",
    "validate_support",
    "ConeDataGrid",
    "PhiGrid",
    "ProcessedGrid",
    "SGrid",
    "YGrid",
    "diff_y",
    "hilbert_s",
    "process_cone_data",
    "SphereGrid",
    "VolumeGrid",
    "VolumeSpec",
    "backproject",
    "p1_eval",
    "pk_eval",
    "radon_invert",
    "reconstruct",
    "rf_eval",
    "RunConfig",
    "metrics",
    "read_crt",
    "write_crt",
]

__version__ = "0.1.0"
