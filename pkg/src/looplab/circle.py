"""Analytic circle diffeomorphisms, rotation numbers, and the commutator
decomposition.

All maps use the period-1 lift convention: a diffeo is represented by its
lift F with F(x+1) = F(x) + 1 and F' > 0, and rotation amounts are fractions
of a full turn.  The Mobius angle parameter theta is in radians (the disk
automorphism z -> e^{i theta}(z+c)/(conj(c) z + 1)); rotate(alpha) with
alpha in turns equals Mobius(2 pi alpha, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

TWO_PI = 2.0 * math.pi

MAX_ITERATIONS = 20_000_000


class NotInvertible(ValueError):
    """Raised when a lift's derivative certificate fails."""


class IterationBudgetExceeded(RuntimeError):
    """Raised when the requested accuracy needs more iterations than allowed."""


class MonotonicityViolation(RuntimeError):
    """Raised when sampled rotation numbers break monotonicity in alpha."""


# ---------------------------------------------------------------------------
# Diffeomorphism representations


@dataclass(frozen=True)
class Rotation:
    """Rigid rotation by `alpha` turns; lift F(x) = x + alpha."""

    alpha: float
    orientation: int = 1

    def lift(self, x: float) -> float:
        return x + self.alpha

    def lift_iterate(self, x: float, n: int) -> float:
        return x + n * self.alpha

    def derivative(self, x: float) -> float:
        return 1.0


@dataclass(frozen=True)
class Mobius:
    """Disk automorphism z -> e^{i theta}(z + c)/(conj(c) z + 1), |c| < 1."""

    theta: float
    c: complex
    orientation: int = 1

    def __post_init__(self) -> None:
        if abs(self.c) >= 1.0:
            raise NotInvertible(f"Mobius parameter needs |c| < 1, got |c| = {abs(self.c)}")

    def lift(self, x: float) -> float:
        t = TWO_PI * x
        ct, st = math.cos(t), math.sin(t)
        cr, ci = self.c.real, self.c.imag
        # c * exp(-i t), then the principal argument is safe: Re >= 1 - |c| > 0
        wr = 1.0 + cr * ct + ci * st
        wi = ci * ct - cr * st
        return x + (self.theta + 2.0 * math.atan2(wi, wr)) / TWO_PI

    def derivative(self, x: float) -> float:
        h = 1e-7
        return (self.lift(x + h) - self.lift(x - h)) / (2 * h)

    @cached_property
    def su_pair(self) -> tuple[complex, complex]:
        """(a, b) with z -> (a z + b)/(conj(b) z + conj(a)), |a|^2 - |b|^2 = 1."""
        s = 1.0 / math.sqrt(1.0 - abs(self.c) ** 2)
        phase = complex(math.cos(self.theta / 2.0), math.sin(self.theta / 2.0))
        return phase * s, phase * self.c * s


def _mobius_from_pair(a: complex, b: complex) -> Mobius:
    theta = 2.0 * math.atan2(a.imag, a.real)
    return Mobius(theta, b / a)


@dataclass(frozen=True)
class TrigLift:
    """Lift x + a0 + sum_k (a_k cos(2 pi k x) + b_k sin(2 pi k x)).

    Invertibility is certified at construction: either the coefficient bound
    2 pi sum k (|a_k| + |b_k|) < 1 holds, or the derivative stays positive on
    a dense grid with a second-derivative Lipschitz margin.
    """

    a0: float
    coeffs: tuple[tuple[float, float], ...]
    orientation: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple((float(a), float(b)) for a, b in self.coeffs))
        norm1 = TWO_PI * sum(k * (abs(a) + abs(b)) for k, (a, b) in enumerate(self.coeffs, 1))
        if norm1 < 1.0:
            return
        grid = 4096
        dmin = min(self.derivative(j / grid) for j in range(grid))
        lip = TWO_PI ** 2 * sum(k * k * (abs(a) + abs(b)) for k, (a, b) in enumerate(self.coeffs, 1))
        if dmin - lip / (2 * grid) <= 0.0:
            raise NotInvertible(
                f"derivative not certifiably positive (grid min {dmin:.3g}, margin {lip / (2 * grid):.3g})"
            )

    def lift(self, x: float) -> float:
        y = x + self.a0
        for k, (a, b) in enumerate(self.coeffs, 1):
            t = TWO_PI * k * x
            y += a * math.cos(t) + b * math.sin(t)
        return y

    def derivative(self, x: float) -> float:
        d = 1.0
        for k, (a, b) in enumerate(self.coeffs, 1):
            t = TWO_PI * k * x
            d += TWO_PI * k * (-a * math.sin(t) + b * math.cos(t))
        return d


@dataclass(frozen=True)
class InverseTrig:
    """Pointwise inverse of a TrigLift, solved to 1e-13 per evaluation."""

    base: TrigLift
    orientation: int = 1

    def lift(self, y: float) -> float:
        f = self.base
        spread = sum(abs(a) + abs(b) for a, b in f.coeffs)
        lo = y - f.a0 - spread
        hi = y - f.a0 + spread
        x = y - f.a0  # Newton from the rotation part, bisection as a net
        for _ in range(200):
            r = f.lift(x) - y
            if abs(r) < 1e-14:
                break
            if r > 0:
                hi = min(hi, x)
            else:
                lo = max(lo, x)
            step = r / f.derivative(x)
            x -= step
            if not lo <= x <= hi:
                x = 0.5 * (lo + hi)
            if hi - lo < 1e-15:
                break
        return x

    def derivative(self, y: float) -> float:
        return 1.0 / self.base.derivative(self.lift(y))


@dataclass(frozen=True)
class Composed:
    """Composition of factors, leftmost applied last: factors[0] is outermost."""

    factors: tuple
    orientation: int = 1

    def lift(self, x: float) -> float:
        for f in reversed(self.factors):
            x = f.lift(x)
        return x

    def derivative(self, x: float) -> float:
        d = 1.0
        for f in reversed(self.factors):
            d *= f.derivative(x)
            x = f.lift(x)
        return d


CircleDiffeo = Rotation | Mobius | TrigLift | InverseTrig | Composed


# ---------------------------------------------------------------------------
# Group operations


def rotate(alpha: float) -> Rotation:
    return Rotation(float(alpha))


def _flatten(f: CircleDiffeo) -> tuple:
    return f.factors if isinstance(f, Composed) else (f,)


def compose(f: CircleDiffeo, g: CircleDiffeo) -> CircleDiffeo:
    """The map x -> f(g(x)); rotation and Mobius pairs stay in closed form."""
    if isinstance(f, Rotation) and isinstance(g, Rotation):
        return Rotation(f.alpha + g.alpha)
    fm = _as_mobius(f)
    gm = _as_mobius(g)
    if fm is not None and gm is not None:
        a1, b1 = fm.su_pair
        a2, b2 = gm.su_pair
        return _mobius_from_pair(a1 * a2 + b1 * b2.conjugate(), a1 * b2 + b1 * a2.conjugate())
    return Composed(_flatten(f) + _flatten(g))


def _as_mobius(f: CircleDiffeo) -> Optional[Mobius]:
    if isinstance(f, Mobius):
        return f
    if isinstance(f, Rotation):
        return Mobius(TWO_PI * (f.alpha - math.floor(f.alpha)), 0.0)
    return None


def invert(f: CircleDiffeo) -> CircleDiffeo:
    if isinstance(f, Rotation):
        return Rotation(-f.alpha)
    if isinstance(f, Mobius):
        a, b = f.su_pair
        return _mobius_from_pair(a.conjugate(), -b)
    if isinstance(f, TrigLift):
        return InverseTrig(f)
    if isinstance(f, InverseTrig):
        return f.base
    if isinstance(f, Composed):
        return Composed(tuple(invert(g) for g in reversed(f.factors)))
    raise TypeError(f"cannot invert {type(f).__name__}")


def identity() -> Rotation:
    return Rotation(0.0)


# ---------------------------------------------------------------------------
# Rotation numbers


@dataclass(frozen=True)
class RotationResult:
    value: float  # in [0, 1)
    error_bound: float
    iterations: int
    certificate: Optional[tuple[int, int]] = None


def _mean_displacement(f: CircleDiffeo, n: int, x0: float = 0.0, shift: float = 0.0) -> float:
    """(F^(n)(x0) - x0)/n on the real line, without reduction mod 1.

    `shift` iterates the lift x -> F(x) + shift, the lift of rotate(shift) o f;
    adding the shift directly keeps the displacement exactly degree one in it
    (closed-form composition would reduce the angle mod one turn).
    """
    if isinstance(f, Rotation):
        return (f.lift_iterate(x0, n) + n * shift - x0) / n
    x = x0
    if shift == 0.0:
        for _ in range(n):
            x = f.lift(x)
    else:
        for _ in range(n):
            x = f.lift(x) + shift
    return (x - x0) / n


def rotation_number(
    f: CircleDiffeo, eps: float = 1e-6, x0: float = 0.0, max_iterations: int = MAX_ITERATIONS
) -> RotationResult:
    """Certified rotation number: n >= 1/eps iterations of the lift give
    |value - r(f)| <= 1/n <= eps, by the bound |F^(n)(x) - x - n r| <= 1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = max(1, math.ceil(1.0 / eps))
    if n > max_iterations and not isinstance(f, Rotation):
        raise IterationBudgetExceeded(
            f"accuracy {eps} needs {n} iterations, budget is {max_iterations}"
        )
    value = _mean_displacement(f, n, x0)
    return RotationResult(value - math.floor(value), 1.0 / n, n)


def rational_certificate(
    f: CircleDiffeo, q_max: int, grid: int = 64, tol: float = 1e-9
) -> Optional[tuple[int, int]]:
    """Smallest q <= q_max with a certified fixed point of the q-th iterate.

    Looks for a sign change (or an exact zero within tol) of G(x) - x - p on
    a cyclic grid, where G is the lift of f^(q); returns (p, q) or None.
    """
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    xs = [j / grid for j in range(grid)]
    lifted = list(xs)
    for q in range(1, q_max + 1):
        lifted = [f.lift(x) for x in lifted]
        disp = [y - x for x, y in zip(xs, lifted)]
        lo = math.floor(min(disp))
        hi = math.ceil(max(disp))
        for p in range(lo, hi + 1):
            s = [d - p for d in disp]
            if min(abs(v) for v in s) <= tol:
                return (p, q)
            if min(s) < -tol and max(s) > tol:
                return (p, q)
    return None


def solve_alpha(
    f: CircleDiffeo,
    theta: float,
    eps: float = 1e-6,
    max_steps: int = 200,
    max_iterations: int = MAX_ITERATIONS,
) -> float:
    """alpha with |r(rotate(alpha) o f) - theta| <= eps, by bisection.

    The map alpha -> r(R_alpha o f) is non-decreasing and shifts by 1 under
    alpha -> alpha + 1, which brackets the root in a unit window around
    theta - r(f)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    eps_r = eps / 4.0
    n = max(1, math.ceil(1.0 / eps_r))
    if n > max_iterations and not isinstance(f, Rotation):
        raise IterationBudgetExceeded(
            f"accuracy {eps} needs {n} iterations per probe, budget is {max_iterations}"
        )

    def phi(alpha: float) -> float:
        return _mean_displacement(f, n, shift=alpha)

    base = phi(0.0)
    lo = theta - base - 1.0
    hi = theta - base + 1.0
    phi_lo = phi(lo)
    phi_hi = phi(hi)
    slack = 2.0 * eps_r
    if phi_lo > theta + slack or phi_hi < theta - slack:
        raise MonotonicityViolation(
            f"unit bracket failed: phi({lo:.6f}) = {phi_lo:.6f}, phi({hi:.6f}) = {phi_hi:.6f}"
        )
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        val = phi(mid)
        if val < phi_lo - slack or val > phi_hi + slack:
            raise MonotonicityViolation(
                f"phi({mid:.9f}) = {val:.9f} outside [{phi_lo:.9f}, {phi_hi:.9f}]"
            )
        if abs(val - theta) <= eps / 2.0:
            return mid
        if val < theta:
            lo, phi_lo = mid, val
        else:
            hi, phi_hi = mid, val
    raise IterationBudgetExceeded(f"bisection did not converge in {max_steps} steps")


# ---------------------------------------------------------------------------
# Commutator decomposition


@dataclass(frozen=True)
class CommutatorReport:
    sup_defect: float
    theta: float
    beta: float
    alpha: float
    alpha_error: float
    eps: float

    def __float__(self) -> float:
        return self.sup_defect


def commutator_decomposition_check(
    h: CircleDiffeo,
    theta: float,
    beta: float = 0.1,
    eps: float = 1e-3,
    grid: int = 256,
) -> CommutatorReport:
    """Verify f = R_{-alpha} o (h^{-1} o R_theta o h o R_theta^{-1}) o R_theta
    for f = h^{-1} o R_theta o h (the alpha = 0 case), and that solve_alpha
    recovers beta from the shifted variant R_{-beta} o f.

    Returns the sup over `grid` points of |lift(f) - lift(rhs)| after
    removing the constant integer offset between the two lifts.
    """
    r_theta = rotate(theta)
    h_inv = invert(h)
    f = compose(h_inv, compose(r_theta, h))
    block = compose(h_inv, compose(r_theta, compose(h, invert(r_theta))))
    rhs = compose(rotate(-0.0), compose(block, r_theta))
    xs = [j / grid for j in range(grid)]
    d = [f.lift(x) - rhs.lift(x) for x in xs]
    offset = round(sorted(d)[len(d) // 2])
    sup_defect = max(abs(v - offset) for v in d)
    f_beta = compose(rotate(-beta), f)
    alpha = solve_alpha(f_beta, theta - math.floor(theta), eps)
    # lifts are canonical only up to an integer, so compare alpha to beta mod 1
    gap = (alpha - beta) % 1.0
    return CommutatorReport(
        float(sup_defect), theta, beta, float(alpha), min(gap, 1.0 - gap), eps
    )
