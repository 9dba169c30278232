"""Benchmark drivers: linear transport, eikonal Hamilton-Jacobi and heterogeneous wave."""
from .hj import HJProblem, HJResult, exact_hj_solution, run_hj
from .transport import TransportProblem, TransportResult, run_transport
from .wave import WaveProblem, WaveResult, exact_standing_wave, run_wave

__all__ = ["HJProblem", "HJResult", "exact_hj_solution", "run_hj", "TransportProblem",
           "TransportResult", "run_transport", "WaveProblem", "WaveResult",
           "exact_standing_wave", "run_wave"]
