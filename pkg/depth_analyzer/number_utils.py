from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

DEPTH_PLACES = 2
COST_PLACES = 1


def to_decimal(value, places: int) -> Decimal:
    """Rounds an int, Fraction, float or Decimal half-even to `places` decimals."""
    with localcontext() as ctx:
        ctx.prec = 60
        if isinstance(value, Fraction):
            exact = Decimal(value.numerator) / Decimal(value.denominator)
        elif isinstance(value, float):
            exact = Decimal(repr(value))
        else:
            exact = Decimal(value)
        return exact.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN)


def scaled(value: int, unit: int, places: int = COST_PLACES) -> Decimal:
    """Exact integer rendered in `unit`s (1e6 for M, 1e9 for G)."""
    return to_decimal(Fraction(value, unit), places)
