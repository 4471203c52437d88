"""Exact PEPS contraction, PEPS <-> postselected-circuit compilation,
Toffoli-Hadamard path sums and imaginary-time cooling networks.
"""

from .circuits import CNF, Gate, PostselectedCircuit, simulate
from .cooling import CoolingSchedule, LocalHamiltonian, convergence_report, cooling_network
from .duality import CompiledCircuit, CompiledPeps, circuit_to_peps, peps_to_circuit
from .pathsum import THCircuit, counting_identity_check, path_amplitude
from .peps import Observable, Peps, PepsGraph, nev, norm_squared, uev
from .tensornet import Tensor, TensorNetwork, contract_network, recover_complex_contraction

__version__ = "0.1.0"
