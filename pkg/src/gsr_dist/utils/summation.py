"""
Compensated summation

Kahan-Babuska (Neumaier) accumulation for real or complex series. Complex
values are compensated component-wise.
"""

from typing import Union

Number = Union[float, complex]


class CompensatedSum:
    """Running sum that carries the low-order bits lost by each addition"""

    __slots__ = ("_re", "_re_c", "_im", "_im_c")

    def __init__(self, start: Number = 0.0):
        self._re = 0.0
        self._re_c = 0.0
        self._im = 0.0
        self._im_c = 0.0
        self.add(start)

    @staticmethod
    def _step(total: float, comp: float, x: float):
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        return t, comp

    def add(self, x: Number) -> "CompensatedSum":
        if isinstance(x, complex):
            self._re, self._re_c = self._step(self._re, self._re_c, x.real)
            self._im, self._im_c = self._step(self._im, self._im_c, x.imag)
        else:
            self._re, self._re_c = self._step(self._re, self._re_c, float(x))
        return self

    __iadd__ = add

    @property
    def value(self) -> complex:
        return complex(self._re + self._re_c, self._im + self._im_c)

    @property
    def real(self) -> float:
        return self._re + self._re_c
