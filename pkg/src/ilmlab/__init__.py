"""Intrinsic localized modes of lattices with competing power nonlinearities.

The stationary lattice

    eps (u_{n+1} - 2 u_n + u_{n-1}) - u_n + |u_n|^(p-1) u_n - gamma |u_n|^(q-1) u_n = 0

is solved from anticontinuum seeds labelled by codes over {a+, a-, A+, A-};
the package classifies their spectral stability, follows branches in eps and
integrates the time-dependent lattice.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .codes import Code, StackedCode, Symbol, Variant, canonicalize, count_irreducible, enumerate_irreducible
from .errors import ILMError
from .model import ModelParams, PhysicalParams, RootPair, energy_mass, find_roots, gamma_crit
from .solver import LatticeProfile, NewtonSettings, newton_solve, seed_profile, solve_code
from .spectrum import SpectrumReport, Verdict, analyze_profile, analyze_truncated

__all__ = [
    "Code",
    "ILMError",
    "LatticeProfile",
    "ModelParams",
    "NewtonSettings",
    "PhysicalParams",
    "RootPair",
    "SpectrumReport",
    "StackedCode",
    "Symbol",
    "Variant",
    "Verdict",
    "analyze_profile",
    "analyze_truncated",
    "canonicalize",
    "count_irreducible",
    "energy_mass",
    "enumerate_irreducible",
    "find_roots",
    "gamma_crit",
    "newton_solve",
    "seed_profile",
    "solve_code",
]
