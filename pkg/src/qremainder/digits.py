"""Exact base-q digits and the shift map T(x) = qx - floor(qx).

Scalars use arbitrary-precision binary fixed point (``FixedPointReal``).
Arrays of floats go through a 64-bit fixed-point path that is exact for the
64-bit truncation of each value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, PrecisionError

DEFAULT_BITS = 128
GUARD_BITS = 64


def required_bits(q, n):
    return int(math.ceil(n * math.log2(q))) + GUARD_BITS


@dataclass(frozen=True)
class FixedPointReal:
    """``numerator / 2**bits`` with ``0 <= numerator < 2**bits``."""

    numerator: int
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.bits < 1:
            raise DomainError("bits must be positive")
        if not 0 <= self.numerator < (1 << self.bits):
            raise DomainError("fixed-point value must lie in [0, 1)")

    @classmethod
    def from_fraction(cls, x, bits=DEFAULT_BITS):
        """Round ``x`` down to the grid 2**-bits (exact when x is dyadic enough)."""
        x = Fraction(x)
        if not 0 <= x < 1:
            raise DomainError("value must lie in [0, 1)")
        return cls((x.numerator << bits) // x.denominator, bits)

    @classmethod
    def from_float(cls, x, bits=None):
        """Exact conversion of a binary float; ``bits`` grows to hold every bit of ``x``."""
        x = float(x)
        if not 0.0 <= x < 1.0:
            raise DomainError("value must lie in [0, 1)")
        fr = Fraction(x)
        need = max(fr.denominator.bit_length() - 1, 0)
        if bits is None:
            bits = max(DEFAULT_BITS, need)
        return cls.from_fraction(fr, bits)

    def to_fraction(self):
        return Fraction(self.numerator, 1 << self.bits)

    def __float__(self):
        return self.numerator / (1 << self.bits) if self.bits < 1000 else float(self.to_fraction())

    def with_bits(self, bits):
        if bits < self.bits:
            raise PrecisionError("cannot drop precision exactly")
        return FixedPointReal(self.numerator << (bits - self.bits), bits)


@dataclass(frozen=True)
class DigitString:
    """The first base-``q`` digits (X_1, ..., X_n); empty for n = 0."""

    q: int
    digits: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if self.q < 2:
            raise DomainError("base must be >= 2")
        if any(not 0 <= d < self.q for d in self.digits):
            raise DomainError(f"digit out of range for base {self.q}")

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    @property
    def cell_index(self):
        """0-based index k of the cell I_{k+1;n} the digits select."""
        k = 0
        for d in self.digits:
            k = k * self.q + d
        return k

    def prefix_indices(self):
        """Cell indices of the prefixes of length 0..n."""
        out = [0]
        k = 0
        for d in self.digits:
            k = k * self.q + d
            out.append(k)
        return out


def _coerce(x):
    if isinstance(x, FixedPointReal):
        return x
    if isinstance(x, Fraction):
        return FixedPointReal.from_fraction(x)
    return FixedPointReal.from_float(x)


def _check_precision(x, q, n):
    if q < 2 or int(q) != q:
        raise DomainError("base must be an integer >= 2")
    if n < 0:
        raise DomainError("depth must be nonnegative")
    need = required_bits(q, n)
    if x.bits < need:
        raise PrecisionError(f"{x.bits} bits cannot support depth {n} in base {q}; need {need}")


def apply_T(x, q, n=1):
    """T^n(x) = frac(q**n x), exact in fixed point."""
    x = _coerce(x)
    _check_precision(x, q, n)
    return FixedPointReal((x.numerator * q**n) % (1 << x.bits), x.bits)


def digits_of(x, q, n):
    """First ``n`` base-``q`` digits X_1..X_n of ``x``."""
    x = _coerce(x)
    _check_precision(x, q, n)
    mask = (1 << x.bits) - 1
    m = x.numerator
    out = []
    for _ in range(n):
        m *= q
        out.append(m >> x.bits)
        m &= mask
    return DigitString(q, tuple(out))


# -- vectorized 64-bit path ------------------------------------------------

_LO = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def to_fixed64(x):
    """floor(x * 2**64) for an array of floats in [0, 1), split into 32-bit halves."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= 1)):
        raise DomainError("values must lie in [0, 1)")
    m = np.ldexp(x, 64)
    # values below 2**63 convert directly; the top bit is handled separately
    top = m >= 2.0**63
    m = np.where(top, m - 2.0**63, m).astype(np.uint64)
    m = m | (top.astype(np.uint64) << np.uint64(63))
    return m >> _SHIFT, m & _LO


def _shift_digit(hi, lo, q):
    qq = np.uint64(q)
    t = lo * qq
    lo2 = t & _LO
    u = hi * qq + (t >> _SHIFT)
    return u >> _SHIFT, u & _LO, lo2


def digit_matrix(x, q, count, start=1):
    """Digits X_start .. X_{start+count-1} of each value, shape ``(len(x), count)``.

    Depth is limited to what a double resolves (53 bits). Values are read on
    the 2**-64 grid, which is exact for power-of-two bases; for other bases
    the rare tiny values whose digits depend on finer bits use the exact path.
    """
    if q < 2 or q >= 2**31:
        raise DomainError("base must satisfy 2 <= q < 2**31")
    last = start + count - 1
    if start < 1 or count < 0:
        raise DomainError("need start >= 1 and count >= 0")
    if last * math.log2(q) > 53:
        raise PrecisionError(f"digit {last} in base {q} is below double resolution")
    x = np.ravel(np.asarray(x, dtype=float))
    hi, lo = to_fixed64(x)
    out = _digits_fixed(hi, lo, q, start, count)
    off = _off_grid(x)
    if off.size and q & (q - 1):
        # x lies in [t, t + 2**-64) with t its truncation; the digits are
        # settled wherever both ends agree
        upper = _digits_fixed(hi[off], lo[off] + np.uint64(1), q, start, count)
        for i in off[np.any(upper != out[off], axis=1)]:
            out[i] = digits_of(float(x[i]), q, last).digits[start - 1 :]
    return out


def _digits_fixed(hi, lo, q, start, count):
    out = np.empty((hi.size, count), dtype=np.int64)
    for pos in range(1, start + count):
        d, hi, lo = _shift_digit(hi, lo, q)
        if pos >= start:
            out[:, pos - start] = d.astype(np.int64)
    return out


def _off_grid(x):
    """Indices of values (necessarily below 2**-11) with bits finer than 2**-64."""
    m = np.ldexp(x, 64)
    return np.nonzero(m != np.floor(m))[0]


def digit_codes(x, q, count, start=1):
    """Encode the digit block X_start..X_{start+count-1} as an integer in [0, q**count)."""
    mat = digit_matrix(x, q, count, start)
    code = np.zeros(mat.shape[0], dtype=np.int64)
    for c in range(count):
        code = code * q + mat[:, c]
    return code


def remainder_array(x, q, n):
    """T^n(x) for an array of floats via the 64-bit path."""
    if n * math.log2(q) > 53:
        raise PrecisionError(f"depth {n} in base {q} is below double resolution")
    x = np.ravel(np.asarray(x, dtype=float))
    hi, lo = to_fixed64(x)
    for _ in range(n):
        _, hi, lo = _shift_digit(hi, lo, q)
    out = np.ldexp(hi.astype(float), -32) + np.ldexp(lo.astype(float), -64)
    for i in _off_grid(x):
        out[i] = float(apply_T(float(x[i]), q, n))
    return out


def cell_index_array(x, q, n):
    """0-based depth-``n`` cell index floor(q**n x) for an array of floats."""
    if n == 0:
        return np.zeros(np.size(x), dtype=np.int64)
    return digit_codes(x, q, n, start=1)
