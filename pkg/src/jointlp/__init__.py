"""Joint linear-programming decoding of LDPC codes on finite-state ISI channels."""
from .channel import FscSpec, Trellis, build_trellis, get_channel, simulate
from .ldpc import LdpcCode, load_alist, random_regular, save_alist, spc
from .ijlp import DecoderParams, NumericalAbort, cyclic_decode, decode, turbo_equalize
from .lpexact import solve_joint_lp

__all__ = [
    "FscSpec", "Trellis", "build_trellis", "get_channel", "simulate",
    "LdpcCode", "load_alist", "random_regular", "save_alist", "spc",
    "DecoderParams", "NumericalAbort", "cyclic_decode", "decode", "turbo_equalize",
    "solve_joint_lp",
]
