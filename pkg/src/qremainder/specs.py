"""Parse model spec strings such as ``benford:q=10`` or ``power:alpha=0.5``.

Grammar::

    uniform
    benford:q=<int>
    power:alpha=<float>
    pwc:q=<int>,m=<int>,w=<float>;<float>;...
    punctured:x0=<float>
    clipped-power:alpha=<float>,eps=<float>
    product:<spec>|<spec>|...

Every built-in model's ``spec`` attribute parses back to an equal model.
"""

from .density_models import (
    BenfordSignificandDensity,
    ClippedPowerDensity,
    PiecewiseConstantDensity,
    PowerDensity,
    ProductDensity,
    PuncturedUniformDensity,
    uniform,
)
from .errors import DomainError


def _params(text, allowed):
    out = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise DomainError(f"unexpected parameter {part!r}; expected one of {sorted(allowed)}")
        if key in out:
            raise DomainError(f"parameter {key!r} given twice")
        out[key] = value.strip()
    missing = set(allowed) - set(out)
    if missing:
        raise DomainError(f"missing parameter(s) {sorted(missing)}")
    return out


def _int(text, name):
    try:
        return int(text)
    except ValueError:
        raise DomainError(f"{name} must be an integer, got {text!r}") from None


def _float(text, name):
    try:
        return float(text)
    except ValueError:
        raise DomainError(f"{name} must be a number, got {text!r}") from None


def parse_model(spec):
    """Build a density model from its spec string."""
    spec = spec.strip()
    family, _, rest = spec.partition(":")
    family = family.strip().lower()
    if family == "product":
        return ProductDensity(tuple(parse_model(s) for s in rest.split("|")))
    if family == "uniform":
        if rest:
            raise DomainError("uniform takes no parameters")
        return uniform()
    if family == "benford":
        p = _params(rest, {"q"})
        return BenfordSignificandDensity(_int(p["q"], "q"))
    if family == "power":
        p = _params(rest, {"alpha"})
        return PowerDensity(_float(p["alpha"], "alpha"))
    if family == "pwc":
        p = _params(rest, {"q", "m", "w"})
        weights = tuple(_float(w, "weight") for w in p["w"].split(";"))
        return PiecewiseConstantDensity(_int(p["q"], "q"), _int(p["m"], "m"), weights)
    if family == "punctured":
        p = _params(rest, {"x0"})
        return PuncturedUniformDensity(_float(p["x0"], "x0"))
    if family == "clipped-power":
        p = _params(rest, {"alpha", "eps"})
        return ClippedPowerDensity(_float(p["alpha"], "alpha"), _float(p["eps"], "eps"))
    raise DomainError(f"unknown model family {family!r} in {spec!r}")
