"""Scattering on a ring with weakly coupled semi-infinite leads."""

__version__ = "0.1.0"

from .domain import (EigenData, RingDomain, monodromy, piecewise_ring_eigendata,  # noqa: E402
                     transfer_matrix, uniform_ring_eigendata)
from .greens import GreenValue, green_direct, green_matrix, green_series  # noqa: E402
from .oracle import assemble_full_s, scatter_direct  # noqa: E402
from .qmatrix import QMatrix, ResonanceData, build_q, orthogonalize_images, resonance_data  # noqa: E402
from .scattering import (ScatteringMatrix, smatrix, smatrix_asymptotic,  # noqa: E402
                         smatrix_at_resonance, smatrix_near_resonance, unitarity_defect)
from .transport import (ConductanceReport, SwitchSpec, averaged_conductance,  # noqa: E402
                        barrier_switch, fermi_weight, interference_switch, switch_report,
                        transmission)
