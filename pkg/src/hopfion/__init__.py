"""Lattice solver for Hopf solitons of the Faddeev model."""
__version__ = "0.1.0"

from .lattice import Boundary, DirectorField, Grid, ScalarField, VectorField3, normalize
from .ansatz import AnsatzSpec, Profile, build_ansatz, perturb
from .topology import charge_report, compute_H, hopf_charge_whitehead
from .fieldlines import hopf_charge_linking, linking_number, trace_preimage
from .relax import RelaxParams, Status, relax

__all__ = [
    "Boundary", "DirectorField", "Grid", "ScalarField", "VectorField3", "normalize",
    "AnsatzSpec", "Profile", "build_ansatz", "perturb",
    "charge_report", "compute_H", "hopf_charge_whitehead",
    "hopf_charge_linking", "linking_number", "trace_preimage",
    "RelaxParams", "Status", "relax",
]
