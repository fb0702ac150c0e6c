"""Free-knot piecewise linear interpolation and approximation of convex 1D functions.

Knot sets are strictly increasing float arrays ``c_0 = a < ... < c_N = b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize, sparse

BISECTION_XTOL = 1e-12


@dataclass(frozen=True)
class ConvexFunction1D:
    """A strictly convex C¹ function on ``[a, b]`` with its derivative.

    Strict convexity is spot-checked at construction by requiring the
    derivative to be strictly increasing on a sample grid.
    """

    f: Callable[[float], float]
    df: Callable[[float], float]
    a: float
    b: float
    integral: float | None = None
    name: str = ""

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("domain must satisfy a < b")
        xs = np.linspace(self.a, self.b, 257)
        d = np.array([self.df(x) for x in xs])
        if not np.all(np.diff(d) > 0):
            raise ValueError("derivative is not strictly increasing: function not strictly convex")

    def __call__(self, x):
        return self.f(x)

    def exact_or_quad_integral(self) -> float:
        if self.integral is not None:
            return self.integral
        val, _ = integrate.quad(self.f, self.a, self.b, epsabs=0.0, epsrel=1e-10, limit=500)
        return val


@dataclass(frozen=True)
class Spline1D:
    """Continuous piecewise linear function given by its values at the knots."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.knots) != len(self.values):
            raise ValueError("knots and values differ in length")

    def __call__(self, x):
        return np.interp(x, self.knots, self.values)


def check_knots(knots, a: float | None = None, b: float | None = None) -> np.ndarray:
    c = np.asarray(knots, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need at least two knots")
    if not np.all(np.diff(c) > 0):
        raise ValueError("knots must be strictly increasing")
    if a is not None and c[0] != a or b is not None and c[-1] != b:
        raise ValueError("end knots must coincide with the interval ends")
    return c


def uniform_knots(f: ConvexFunction1D, n_knots: int) -> np.ndarray:
    c = np.linspace(f.a, f.b, n_knots)
    c[0], c[-1] = f.a, f.b
    return c


def _values(f: ConvexFunction1D, c: np.ndarray) -> np.ndarray:
    return np.array([f(x) for x in c], dtype=float)


def trapezoid_sum(f: ConvexFunction1D, knots) -> float:
    c = np.asarray(knots, dtype=float)
    v = _values(f, c)
    return 0.5 * float(np.sum(np.diff(c) * (v[1:] + v[:-1])))


def l1_interp_error(f: ConvexFunction1D, knots) -> float:
    """L1 error of the interpolating linear spline: trapezoid sum minus the integral."""
    c = check_knots(knots, f.a, f.b)
    return trapezoid_sum(f, c) - f.exact_or_quad_integral()


def l1_spline_error(f: ConvexFunction1D, spline: Spline1D) -> float:
    """``∫_a^b |S(x) - f(x)| dx`` for an arbitrary linear spline ``S``.

    On each knot interval ``S - f`` is concave, so it has at most two sign
    changes; they are located first and each sign-definite piece is
    integrated separately.
    """
    c = check_knots(spline.knots, f.a, f.b)
    total = 0.0
    for lo, hi, vlo, vhi in zip(c[:-1], c[1:], spline.values[:-1], spline.values[1:]):
        slope = (vhi - vlo) / (hi - lo)

        def diff(x, lo=lo, vlo=vlo, slope=slope):
            return vlo + slope * (x - lo) - f(x)

        # the concave difference peaks where f' equals the line slope
        if f.df(lo) >= slope:
            peak = lo
        elif f.df(hi) <= slope:
            peak = hi
        else:
            peak = optimize.brentq(lambda x: f.df(x) - slope, lo, hi, xtol=1e-14)
        cuts = [lo]
        if diff(peak) > 0:
            if lo < peak and diff(lo) < 0:
                cuts.append(optimize.brentq(diff, lo, peak, xtol=1e-14))
            if peak < hi and diff(hi) < 0:
                cuts.append(optimize.brentq(diff, peak, hi, xtol=1e-14))
        cuts.append(hi)
        cuts.sort()
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            if x1 > x0:
                val, _ = integrate.quad(diff, x0, x1, epsabs=1e-13, epsrel=1e-12, limit=200)
                total += abs(val)
    return total


def _inverse_derivative(f: ConvexFunction1D, slope: float, lo: float, hi: float) -> float:
    """Solve ``f'(x) = slope`` on ``[lo, hi]`` by bisection."""
    glo = f.df(lo) - slope
    ghi = f.df(hi) - slope
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if glo > 0 or ghi < 0:
        raise ValueError(
            f"no sign change of f' - s on [{lo}, {hi}]: function is not strictly convex there"
        )
    return optimize.bisect(lambda x: f.df(x) - slope, lo, hi, xtol=BISECTION_XTOL, maxiter=400)


class KnotResult(NamedTuple):
    knots: np.ndarray
    errors: list  # L1 error of the initial knots followed by one entry per sweep
    iterations: int
    converged: bool
    history: list  # knot set after every sweep, starting with the initial one


def optimize_knots_interpolation(
    f: ConvexFunction1D,
    n_knots: int,
    init="uniform",
    max_iters: int = 5000,
    tol: float = 1e-10,
) -> KnotResult:
    """Optimal knots for L1 linear spline interpolation (red-black fixed point).

    Each sweep first moves all even interior knots, then all odd ones, to
    the point where ``f'`` equals the slope of the chord between the two
    neighbouring knots. Every move minimises the error on the neighbours'
    interval, so the total error never increases.
    """
    if n_knots < 3:
        raise ValueError("need N >= 2, i.e. at least three knots")
    c = uniform_knots(f, n_knots) if isinstance(init, str) else check_knots(init, f.a, f.b).copy()
    if len(c) != n_knots:
        raise ValueError("initial knot set has the wrong size")
    integral = f.exact_or_quad_integral()
    errors = [trapezoid_sum(f, c) - integral]
    history = [c.copy()]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        old = c.copy()
        for parity in (0, 1):
            start = 2 if parity == 0 else 1
            # knots of one parity depend only on the other parity: update from a frozen copy
            frozen = c.copy()
            for i in range(start, n_knots - 1, 2):
                lo, hi = frozen[i - 1], frozen[i + 1]
                slope = (f(hi) - f(lo)) / (hi - lo)
                c[i] = _inverse_derivative(f, slope, lo, hi)
        if not np.all(np.diff(c) > 0):
            raise RuntimeError("knot ordering lost; bisection tolerance too coarse for this spacing")
        history.append(c.copy())
        errors.append(trapezoid_sum(f, c) - integral)
        if np.max(np.abs(c - old)) < tol:
            converged = True
            break
    return KnotResult(c, errors, it, converged, history)


def _segment_lines(f: ConvexFunction1D, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slope and intercept of the L1-optimal line on each knot interval."""
    lo, hi = c[:-1], c[1:]
    x1 = (3 * lo + hi) / 4
    x2 = (lo + 3 * hi) / 4
    y1 = _values(f, x1)
    y2 = _values(f, x2)
    slope = (y2 - y1) / (x2 - x1)
    return slope, y1 - slope * x1


def best_line_points(a: float, b: float) -> tuple[float, float]:
    """Interpolation points of the best L1 straight line for a strictly convex function."""
    return 0.75 * a + 0.25 * b, 0.25 * a + 0.75 * b


def hamideh_knots(
    f: ConvexFunction1D,
    n_knots: int,
    init="uniform",
    max_iters: int = 5000,
    tol: float = 1e-10,
    parallel_eps: float = 1e-14,
) -> tuple[KnotResult, Spline1D]:
    """Free-knot L1 approximation by intersecting locally optimal lines.

    Returns the knot iteration record (errors are L1 errors of the segment
    line spline) and the final piecewise linear approximant.
    """
    if n_knots < 3:
        raise ValueError("need N >= 2, i.e. at least three knots")
    c = uniform_knots(f, n_knots) if isinstance(init, str) else check_knots(init, f.a, f.b).copy()

    def spline_of(knots):
        m, k = _segment_lines(f, knots)
        vals = np.empty(len(knots))
        vals[0] = m[0] * knots[0] + k[0]
        vals[-1] = m[-1] * knots[-1] + k[-1]
        inner = knots[1:-1]
        vals[1:-1] = 0.5 * ((m[:-1] * inner + k[:-1]) + (m[1:] * inner + k[1:]))
        return Spline1D(knots.copy(), vals)

    errors = [l1_spline_error(f, spline_of(c))]
    history = [c.copy()]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        m, k = _segment_lines(f, c)
        new = c.copy()
        for i in range(1, n_knots - 1):
            dm = m[i - 1] - m[i]
            if abs(dm) < parallel_eps:
                continue
            new[i] = (k[i] - k[i - 1]) / dm
        if not np.all(np.diff(new) > 0):
            raise RuntimeError("line intersections lost the knot ordering")
        move = np.max(np.abs(new - c))
        c = new
        history.append(c.copy())
        errors.append(l1_spline_error(f, spline_of(c)))
        if move < tol:
            converged = True
            break
    return KnotResult(c, errors, it, converged, history), spline_of(c)


class TonalResult(NamedTuple):
    spline: Spline1D
    error: float
    lp_iterations: int


def tonal_optimize_1d(f: ConvexFunction1D, knots, points_per_interval: int = 200) -> TonalResult:
    """Best L1 linear spline on fixed knots.

    The integral is discretised by the trapezoidal rule on a grid with
    ``points_per_interval`` cells per knot interval (rounded up to a
    multiple of 4, so the quarter points of each interval are nodes). The
    discrete problem ``min sum w |B g - f|`` is solved exactly as a linear
    program over ``(g, t)`` with ``-t <= B g - f <= t``.
    """
    c = check_knots(knots, f.a, f.b)
    cells = int(np.ceil(points_per_interval / 4) * 4)
    xs, ws = [], []
    for j, (lo, hi) in enumerate(zip(c[:-1], c[1:])):
        x = np.linspace(lo, hi, cells + 1)
        w = np.full(cells + 1, (hi - lo) / cells)
        w[0] = w[-1] = 0.5 * (hi - lo) / cells
        if j > 0:
            # shared knot: merge its half-weights
            ws[-1][-1] += w[0]
            x, w = x[1:], w[1:]
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    fx = _values(f, x)
    basis = sparse.csr_matrix(_hat_basis(c, x))
    n, m = c.size, x.size
    eye = sparse.identity(m, format="csr")
    a_ub = sparse.vstack([sparse.hstack([basis, -eye]), sparse.hstack([-basis, -eye])], format="csr")
    b_ub = np.concatenate([fx, -fx])
    cost = np.concatenate([np.zeros(n), w])
    bounds = [(None, None)] * n + [(0, None)] * m
    res = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"L1 fit failed: {res.message}")
    spline = Spline1D(c.copy(), res.x[:n])
    return TonalResult(spline, l1_spline_error(f, spline), int(res.nit))


def _hat_basis(knots: np.ndarray, x: np.ndarray) -> np.ndarray:
    eye = np.eye(len(knots))
    return np.stack([np.interp(x, knots, eye[j]) for j in range(len(knots))], axis=1)


# built-in test functions -------------------------------------------------

def exp2x3px() -> ConvexFunction1D:
    """``exp(2x - 3) + x`` on [-4, 4]."""
    return ConvexFunction1D(
        f=lambda x: np.exp(2 * x - 3) + x,
        df=lambda x: 2 * np.exp(2 * x - 3) + 1,
        a=-4.0,
        b=4.0,
        integral=0.5 * (np.exp(5.0) - np.exp(-11.0)),
        name="exp2x3px",
    )


def expx(a: float = -15.0, b: float = 15.0) -> ConvexFunction1D:
    return ConvexFunction1D(
        f=np.exp, df=np.exp, a=a, b=b, integral=np.exp(b) - np.exp(a), name="expx"
    )


def square(a: float = -1.0, b: float = 1.0) -> ConvexFunction1D:
    return ConvexFunction1D(
        f=lambda x: x * x,
        df=lambda x: 2 * x,
        a=a,
        b=b,
        integral=(b**3 - a**3) / 3,
        name="square",
    )


TEST_FUNCTIONS = {"exp2x3px": exp2x3px, "expx": expx, "square": square}


NONCONVEX_U1 = np.array([-15.0, 10.65, 14.65, 15.0])
NONCONVEX_U2 = np.array([-15.0, -1.2, 12.5, 15.0])


def nonconvexity_witness(samples: int = 101) -> np.ndarray:
    """Interpolation error of ``exp`` along the segment between two knot sets.

    Evaluates ``E((1 - t) U1 + t U2)`` on ``samples`` uniform ``t`` in [0, 1].
    """
    f = expx()
    ts = np.linspace(0.0, 1.0, samples)
    out = []
    for t in ts:
        c = (1 - t) * NONCONVEX_U1 + t * NONCONVEX_U2
        c[0], c[-1] = f.a, f.b
        out.append(l1_interp_error(f, c))
    return np.array(out)


def midpoint_violations(curve, rel_tol: float = 1e-12) -> np.ndarray:
    """Indices ``i`` where ``curve[i]`` exceeds the mean of its two neighbours."""
    y = np.asarray(curve, dtype=float)
    chord = 0.5 * (y[:-2] + y[2:])
    excess = y[1:-1] - chord
    return np.flatnonzero(excess > rel_tol * np.max(np.abs(y))) + 1
