"""Forward-mode dual numbers.

A ``Dual`` carries a value and one tangent component. Components may
themselves be duals, so nesting two levels gives exact second
derivatives: seed the outer tangent along direction i and the inner
tangent along direction j, and ``.dx.dx`` of the result is d2f/dqi dqj.
"""

import math


class Dual:
    __slots__ = ("x", "dx")

    def __init__(self, x, dx=0.0):
        self.x = x
        self.dx = dx

    def __repr__(self):
        return f"Dual({self.x!r}, {self.dx!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.x + other.x, self.dx + other.dx)
        return Dual(self.x + other, self.dx)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.x - other.x, self.dx - other.dx)
        return Dual(self.x - other, self.dx)

    def __rsub__(self, other):
        return Dual(other - self.x, -self.dx)

    def __neg__(self):
        return Dual(-self.x, -self.dx)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.x * other.x, self.x * other.dx + self.dx * other.x)
        return Dual(self.x * other, self.dx * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.x / other.x,
                (self.dx * other.x - self.x * other.dx) / (other.x * other.x),
            )
        return Dual(self.x / other, self.dx / other)

    def __rtruediv__(self, other):
        return Dual(other / self.x, -other * self.dx / (self.x * self.x))

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("dual exponent must be an integer")
        if n == 0:
            return Dual(self.x * 0 + 1.0, self.dx * 0)
        return Dual(self.x ** n, n * self.x ** (n - 1) * self.dx)


def value(x):
    """Strip all dual layers, returning the underlying float."""
    while isinstance(x, Dual):
        x = x.x
    return x


def tangent(x):
    """Tangent component; zero for expressions the seed never reaches."""
    return x.dx if isinstance(x, Dual) else 0.0


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.x), cos(x.x) * x.dx)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.x), -sin(x.x) * x.dx)
    return math.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.x)
        return Dual(e, e * x.dx)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.x), x.dx / x.x)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.x)
        return Dual(s, x.dx / (2.0 * s))
    return math.sqrt(x)


FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt}
