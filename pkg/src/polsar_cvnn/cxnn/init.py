"""Parameter containers and complex Xavier/He initialisation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cxcore import CTensor
from ..errors import ConfigError

SCHEMES = (
    "complex-he-normal",
    "complex-he-uniform",
    "complex-xavier-normal",
    "complex-xavier-uniform",
    "he-normal",  # real-valued baseline
    "xavier-normal",
    "zeros",
    "ones",
    "constant",
)


@dataclass
class LayerParam:
    name: str
    value: CTensor
    init_scheme: str
    opt_state: dict = field(default_factory=dict)

    @property
    def data(self):
        return self.value.data

    @property
    def grad(self):
        return self.value.grad


def _bound(scheme, fan_in, fan_out):
    if scheme == "complex-he-normal":
        return np.sqrt(1.0 / fan_in)
    if scheme == "complex-he-uniform":
        return np.sqrt(3.0 / fan_in)
    if scheme == "complex-xavier-normal":
        return np.sqrt(1.0 / (fan_in + fan_out))
    if scheme == "complex-xavier-uniform":
        # symmetric bound; the lower bound's fan_in + fan_out is used on both sides
        return np.sqrt(3.0 / (fan_in + fan_out))
    if scheme == "he-normal":
        return np.sqrt(2.0 / fan_in)
    if scheme == "xavier-normal":
        return np.sqrt(2.0 / (fan_in + fan_out))
    raise ConfigError(f"unknown init scheme {scheme!r}")


def init_param(shape, scheme, fan_in=None, fan_out=None, rng=None, dtype=np.complex64,
               name="", value=0.0) -> LayerParam:
    """Draw a parameter; complex schemes sample Re and Im independently."""
    rng = np.random.default_rng() if rng is None else rng
    shape = tuple(shape)
    if scheme in ("zeros", "ones", "constant"):
        fill = {"zeros": 0.0, "ones": 1.0}.get(scheme, value)
        data = np.full(shape, fill, dtype=dtype)
    else:
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown init scheme {scheme!r}")
        if not fan_in or fan_in <= 0 or (fan_out is not None and fan_out <= 0):
            raise ConfigError(f"fans must be positive, got fan_in={fan_in}, fan_out={fan_out}")
        fan_out = fan_in if fan_out is None else fan_out
        a = _bound(scheme, fan_in, fan_out)
        complex_out = np.dtype(dtype).kind == "c"
        if scheme.endswith("uniform"):
            draw = lambda: rng.uniform(-a, a, size=shape)  # noqa: E731
        else:
            draw = lambda: rng.normal(0.0, a, size=shape)  # noqa: E731
        data = draw()
        if complex_out:
            data = data + 1j * draw()
        data = data.astype(dtype)
    return LayerParam(name, CTensor(data, requires_grad=True, name=name), scheme)
