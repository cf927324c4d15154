"""Phaseless STFT sampling: uniqueness gates and constructive recovery of compactly supported signals."""
from __future__ import annotations

from .errors import PhaselessError
from .geometry import CompactBox, CountableSet, Lattice, reciprocal
from .grid import Grid, GridField, aligned_error
from .recovery import RecoveryConfig, RecoveryReport, recover
from .transforms import SpectrogramSamples, cft, sample_spectrogram, stft_eval
from .uniqueness import GateReport, gamma_gate, lambda_gate
from .windows import WindowSpec, eval_window

__version__ = "0.1.0"

__all__ = [
    "CompactBox",
    "CountableSet",
    "GateReport",
    "Grid",
    "GridField",
    "Lattice",
    "PhaselessError",
    "RecoveryConfig",
    "RecoveryReport",
    "SpectrogramSamples",
    "WindowSpec",
    "aligned_error",
    "cft",
    "eval_window",
    "gamma_gate",
    "lambda_gate",
    "recover",
    "reciprocal",
    "sample_spectrogram",
    "stft_eval",
]
