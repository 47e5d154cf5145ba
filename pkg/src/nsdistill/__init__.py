"""Exact non-signaling box algebra and two-copy non-locality distillation."""
from .boxes import (
    B_CC,
    B_Q,
    Box,
    DomainError,
    InvalidBoxError,
    OffPlaneError,
    PlaneCoords,
    SignalingError,
    chsh,
    chsh_all8,
    correlators,
    depolarize,
    is_local,
    is_nonsignaling,
    is_valid,
    make_antipr,
    make_correlated,
    make_one,
    make_pa,
    make_pc,
    make_plane,
    make_pr,
    mix,
    to_plane_coords,
)
from .dynamics import chsh_after, fixed_points_1d, fixed_points_2d, iterate, map_t, map_t2
from .wiring import (
    PartyWiring,
    ProtocolWiring,
    compose,
    decode,
    encode,
    enumerate_party_wirings,
    paper_protocol,
)

__version__ = "0.1.0"
