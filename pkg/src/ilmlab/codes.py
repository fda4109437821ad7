"""ILM codes: words over {a+, a-, A+, A-} modulo sign flip and reflection.

A code records the nonzero site values of an anticontinuum seed.  Four codes
are equivalent when they are related by ``u -> -u``, ``u -> Ru`` (reversal)
or ``u -> -Ru``; the lexicographically least member under the symbol order
a+ < a- < A+ < A- is the canonical (irreducible) representative.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError

N_MAX = 10


class Symbol(enum.IntEnum):
    SMALL_PLUS = 0
    SMALL_MINUS = 1
    LARGE_PLUS = 2
    LARGE_MINUS = 3

    @property
    def is_large(self) -> bool:
        return self >= 2

    @property
    def sign(self) -> int:
        return 1 if self % 2 == 0 else -1

    def negated(self) -> Symbol:
        return Symbol(self ^ 1)

    @property
    def token(self) -> str:
        return _TOKENS[self]


_TOKENS = {
    Symbol.SMALL_PLUS: "a+",
    Symbol.SMALL_MINUS: "a-",
    Symbol.LARGE_PLUS: "A+",
    Symbol.LARGE_MINUS: "A-",
}
_FROM_TOKEN = {v: k for k, v in _TOKENS.items()}
_TOKEN_RE = re.compile(r"^[aA][+-]$")


@dataclass(frozen=True, order=True)
class Code:
    symbols: tuple[Symbol, ...]

    def __post_init__(self):
        syms = tuple(Symbol(s) for s in self.symbols)
        if not syms:
            raise PreconditionError("a code needs at least one symbol")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def parse(cls, text: str) -> Code:
        """Parse ``"a+,A-,..."``; whitespace around tokens is ignored."""
        tokens = [t.strip() for t in text.split(",")]
        bad = [t for t in tokens if not _TOKEN_RE.match(t)]
        if bad:
            raise PreconditionError(f"bad code token(s) {bad!r} in {text!r}")
        return cls(tuple(_FROM_TOKEN[t] for t in tokens))

    @classmethod
    def from_digits(cls, digits: Iterable[int]) -> Code:
        return cls(tuple(Symbol(int(d)) for d in digits))

    def __str__(self) -> str:
        return ",".join(s.token for s in self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __neg__(self) -> Code:
        return Code(tuple(s.negated() for s in self.symbols))

    def reversed(self) -> Code:
        return Code(self.symbols[::-1])

    @property
    def n_small(self) -> int:
        """Number of small-amplitude symbols (K)."""
        return sum(1 for s in self.symbols if not s.is_large)

    @property
    def signs(self) -> np.ndarray:
        return np.array([s.sign for s in self.symbols], dtype=float)

    @property
    def large_mask(self) -> np.ndarray:
        return np.array([s.is_large for s in self.symbols], dtype=bool)

    def amplitudes(self, a: float, A: float) -> np.ndarray:
        """Signed seed values: +-a for small symbols, +-A for large ones."""
        return self.signs * np.where(self.large_mask, A, a)


def as_code(c) -> Code:
    if isinstance(c, Code):
        return c
    if isinstance(c, str):
        return Code.parse(c)
    return Code(tuple(c))


def equivalent_set(c: Code) -> set[Code]:
    """The orbit {c, -c, Rc, -Rc} with duplicates removed."""
    c = as_code(c)
    r = c.reversed()
    return {c, -c, r, -r}


def canonicalize(c: Code) -> Code:
    return min(equivalent_set(c))


def is_canonical(c: Code) -> bool:
    return canonicalize(c) == c


def _canonical_indices(N: int) -> np.ndarray:
    # every code of length N is a base-4 integer, most significant digit first,
    # so integer order is lexicographic symbol order
    idx = np.arange(4**N, dtype=np.int64)
    powers = 4 ** np.arange(N - 1, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // powers) % 4
    neg = digits ^ 1
    keys = np.stack(
        [
            idx,
            neg @ powers,
            digits[:, ::-1] @ powers,
            neg[:, ::-1] @ powers,
        ]
    )
    return np.unique(keys.min(axis=0))


def enumerate_irreducible(N: int, n_max: int = N_MAX) -> list[Code]:
    """One canonical code per equivalence class, in canonical order.

    Brute force over all 4**N words, so it doubles as the oracle for
    :func:`count_irreducible`.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N!r}")
    if N > n_max:
        raise PreconditionError(f"N={N} exceeds the enumeration limit n_max={n_max}")
    reps = _canonical_indices(int(N))
    powers = 4 ** np.arange(N - 1, -1, -1, dtype=np.int64)
    digits = (reps[:, None] // powers) % 4
    return [Code.from_digits(row) for row in digits]


def count_irreducible(N: int) -> int:
    """Closed-form number of irreducible codes of length N."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N!r}")
    k = N // 2
    if N % 2:
        return 16**k + 4**k
    return (16**k + 2 * 4**k) // 4


class Variant(enum.Enum):
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class StackedCode:
    """``n`` copies of A+ followed by ``m`` alternating small symbols."""

    n: int
    m: int
    variant: Variant = Variant.PLUS

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise PreconditionError(f"need n, m >= 0 and n + m >= 1, got n={self.n}, m={self.m}")
        object.__setattr__(self, "variant", Variant(self.variant))

    def __str__(self) -> str:
        return f"A{self.variant.value}[{self.n},{self.m}]"


def expand_stacked(s: StackedCode) -> Code:
    first = Symbol.SMALL_PLUS if s.variant is Variant.PLUS else Symbol.SMALL_MINUS
    small = [first if j % 2 == 0 else first.negated() for j in range(s.m)]
    return Code(tuple([Symbol.LARGE_PLUS] * s.n + small))


def uniform_large(N: int) -> Code:
    """(A+ A+ ... A+)"""
    return expand_stacked(StackedCode(N, 0))


def uniform_small(N: int) -> Code:
    """(a+ a- a+ ...)"""
    return expand_stacked(StackedCode(0, N))


def flips(c: Code) -> int:
    """Number of sign changes between neighbouring symbols."""
    signs = as_code(c).signs
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def describe(c: Code) -> str:
    """Name a canonical code by the stacked family it belongs to, if any.

    Returns e.g. ``"A_A"``, ``"A_a"``, ``"A-[2,1]"`` or the plain token string.
    """
    c = canonicalize(c)
    N = len(c)
    if c == canonicalize(uniform_large(N)):
        return "A_A"
    if c == canonicalize(uniform_small(N)):
        return "A_a"
    for n in range(1, N):
        for variant in Variant:
            if c == canonicalize(expand_stacked(StackedCode(n, N - n, variant))):
                return f"A{variant.value}[{n},{N - n}]"
    return str(c)


def parse_codes(texts: Sequence[str]) -> list[Code]:
    return [Code.parse(t) for t in texts]
