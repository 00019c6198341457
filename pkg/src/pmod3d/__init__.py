"""Link-level simulation and analysis of 3D polarized modulation."""
from .analysis import (
    BerBound,
    TableRow,
    distance_sq,
    exact_psk_ber,
    hamming,
    min_distance,
    mindist_table,
    pair_distance_sq,
    qfunc,
    union_bound,
)
from .channel import ChannelMatrix, awgn, make_rng, snr_to_n0, xpd_pdl_matrix
from .constellation import (
    JonesVector,
    Packing,
    SpherePoint,
    StokesVector,
    builtin_packing,
    degree_of_polarization,
    jones_to_stokes,
    load_packing,
    psk_alphabet,
    qam_alphabet,
    ring_sliced_packing,
    spherical_to_jones,
    stokes_to_jones,
)
from .modem import (
    BaselineKind,
    BaselineModem,
    Filter,
    PmodConfig,
    PmodModem,
    Receiver,
    baseline_modem,
    cascade_demodulate,
    joint_ml_demodulate,
    pmod_modulate,
)
from .montecarlo import BerReport, SimSpec, StopRule, run_point, run_sweep

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
