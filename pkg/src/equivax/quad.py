"""Log-domain adaptive quadrature on the real line and the positive half-line.

Every generalized Bayes formula in this package is a ratio of one-dimensional
integrals of the form ``integral exp(g(t)) dt`` where ``g`` is a log-integrand
that may reach magnitudes around ``-1e4`` (products of many kernel factors),
so all accumulation happens in the log domain via log-sum-exp with numpy's
pairwise summation.

The integration strategy:

1. locate the integrand mode with an expanding coarse scan refined by a
   parabolic vertex step (golden section as the fallback for plateaus and
   support edges);
2. set the window to ``mode +- window * s`` where ``s`` is a curvature-based
   scale (``1/sqrt(-g''(mode))``), then push each endpoint outward until the
   log-integrand has dropped ``_TAIL_DROP`` below the mode, or bisect back to
   the support edge when the integrand becomes -inf;
3. run a trapezoid ladder (doubling panel counts, breakpoints pinned to panel
   boundaries); convergence is accepted from the raw ladder (spectral for
   integrands decaying smoothly inside the window) or from the Romberg
   diagonal with its within-row error estimate (the piecewise-smooth case).

Positive half-line integrals are computed after the substitution
``sigma = exp(u)``, which maps them to the real line; the Gaussian-in-log
priors used for scale estimation make the transformed integrands
well-conditioned.

Integrands must be vectorized: they receive a 1-D float array and return a
1-D array of the same length, with ``-inf`` off the support.  They are
expected to be unimodal with connected support on the integration domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMassError, ToleranceFailureError

REAL_LINE = "real-line"
POSITIVE_HALF_LINE = "positive-half-line"

_LOG_CLIP = 700.0  # exp() overflows just above 709
_TAIL_DROP = 45.0  # exp(-45) ~ 3e-20, far below any supported tolerance
_EDGE_BISECTIONS = 90
_MAX_EXPANSIONS = 80
_GOLDEN_STEPS = 26
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
# (half-width multiplier, point count) for the expanding mode scan
_PROBE_LEVELS = ((24.0, 97), (3.0, 193), (192.0, 385), (1536.0, 769), (12288.0, 1537))
_BASE_PANELS = 64


@dataclass(frozen=True)
class Domain1D:
    """Integration domain plus optional hints about where the mass sits.

    ``center`` is a point near the bulk of the integrand (a sigma value on
    the positive half-line); ``scale`` is a rough width of the bulk (in log
    units on the positive half-line).  Hints are optional but make the mode
    scan immune to mass sitting far from the origin.
    """

    kind: str = REAL_LINE
    center: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in (REAL_LINE, POSITIVE_HALF_LINE):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.scale is not None and not self.scale > 0:
            raise ValueError("scale hint must be positive")
        if (
            self.kind == POSITIVE_HALF_LINE
            and self.center is not None
            and not self.center > 0
        ):
            raise ValueError("center hint must be positive on the half-line")


@dataclass(frozen=True)
class QuadConfig:
    """Accuracy knobs for the adaptive integrator.

    ``max_subdivisions`` caps the total panel count of the finest trapezoid
    level; ``window`` is the half-width of the integration window in
    curvature-standardized units (12 units bound the truncation error of a
    Gaussian-tailed integrand below 1e-30 relative).
    """

    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    window: float = 12.0

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-2:
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if self.window < 6.0:
            raise ValueError("window must be at least 6 standardized units")
        if self.max_subdivisions < 4 * _BASE_PANELS:
            raise ValueError(
                f"max_subdivisions must be at least {4 * _BASE_PANELS}"
            )


def _logsumexp(a):
    """Log-sum-exp of a 1-D array; np.sum gives pairwise accumulation."""
    m = np.max(a)
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(a - m))))


def _internalize(g, h, domain):
    """Map integrand (and optional ratio weight) to real-line coordinates.

    Returns (f, hf, center, scale, mode_cap); a mode found beyond mode_cap
    means the transformed integrand is still growing where exp() saturates,
    i.e. the original integral diverges within double precision.
    """
    if domain.kind == REAL_LINE:
        center = 0.0 if domain.center is None else float(domain.center)
        scale = 1.0 if domain.scale is None else float(domain.scale)

        def f(u):
            return np.asarray(g(u), dtype=float)

        hf = None if h is None else (lambda u: np.asarray(h(u), dtype=float))
        return f, hf, center, scale, np.inf

    center = 0.0 if domain.center is None else math.log(domain.center)
    scale = 1.0 if domain.scale is None else float(domain.scale)

    def f(u):
        u = np.asarray(u, dtype=float)
        sig = np.exp(np.clip(u, -_LOG_CLIP, _LOG_CLIP))
        return np.asarray(g(sig), dtype=float) + u

    if h is None:
        hf = None
    else:

        def hf(u):
            u = np.asarray(u, dtype=float)
            sig = np.exp(np.clip(u, -_LOG_CLIP, _LOG_CLIP))
            return np.asarray(h(sig), dtype=float)

    return f, hf, center, scale, _LOG_CLIP - 20.0


def _internal_breaks(breakpoints, domain):
    if breakpoints is None:
        return ()
    pts = np.asarray(breakpoints, dtype=float).ravel()
    if domain.kind == POSITIVE_HALF_LINE:
        pts = np.log(pts[pts > 0])
    return tuple(np.unique(pts[np.isfinite(pts)]))


def _scalar(f):
    buf = np.empty(1)

    def fs(x):
        buf[0] = x
        return float(f(buf)[0])

    return fs


def _initial_grid(f, center, scale):
    """Probe successively wider (and one finer) grids until mass is found."""
    for half_mult, npts in _PROBE_LEVELS:
        half = half_mult * scale
        xs = np.linspace(center - half, center + half, npts)
        vs = f(xs)
        if np.any(vs > -np.inf):
            return xs, vs
    raise EmptyMassError(
        "log-integrand is -inf everywhere probed; check support and hints"
    )


def _interiorize(f, xs, vs, scale, cfg):
    """Extend the scan until the running maximum is interior to it."""
    for _ in range(_MAX_EXPANSIONS):
        i = int(np.argmax(vs))
        if 0 < i < len(xs) - 1:
            return xs, vs, i
        span = xs[-1] - xs[0]
        if span > 1e9 * scale:
            raise ToleranceFailureError(
                "integrand keeps increasing toward the domain boundary; "
                "the integral may diverge"
            )
        if i == len(xs) - 1:
            ext = np.linspace(xs[-1] + span / len(xs), xs[-1] + 2.0 * span, len(xs))
            xs = np.concatenate([xs, ext])
            vs = np.concatenate([vs, f(ext)])
        else:
            ext = np.linspace(xs[0] - 2.0 * span, xs[0] - span / len(xs), len(xs))
            xs = np.concatenate([ext, xs])
            vs = np.concatenate([f(ext), vs])
    raise ToleranceFailureError(
        "mode scan failed to bracket an interior maximum"
    )


def _golden_max(fs, a, b, steps=_GOLDEN_STEPS):
    """Golden-section maximization on [a, b]; returns (x, f(x))."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fs(c), fs(d)
    best_x, best_v = (c, fc) if fc >= fd else (d, fd)
    for _ in range(steps):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fs(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fs(d)
        if fc > best_v:
            best_x, best_v = c, fc
        if fd > best_v:
            best_x, best_v = d, fd
    return best_x, best_v


def _refine_mode(fs, xs, vs, i):
    """Mode from the scan's argmax triple.

    A parabolic vertex through three finite points nails smooth peaks in a
    single extra evaluation; golden section is the fallback for plateaus or
    support edges.  Window placement only needs the mode to within a scan
    spacing, the tail-drop expansion absorbs the rest.
    """
    xl, xm, xr = xs[i - 1], xs[i], xs[i + 1]
    vl, vm, vr = vs[i - 1], vs[i], vs[i + 1]
    if np.isfinite(vl) and np.isfinite(vr):
        denom = (vl - vm) + (vr - vm)
        if denom < 0.0:
            t = 0.5 * (vl - vr) / denom
            if abs(t) < 1.0:
                x = xm + t * (xr - xm if t > 0 else xm - xl)
                v = fs(x)
                return (x, v) if v >= vm else (xm, vm)
        if vl == vm == vr:  # flat top: keep the scan point
            return xm, vm
    return _golden_max(fs, xl, xr, steps=12)


def _curvature_scale(fs, m, fm, scale, xs, vs):
    """Standardized width 1/sqrt(-g''); scan-based fallback for plateaus."""
    for h in (1e-3 * scale, 1e-2 * scale, 0.1 * scale, 0.5 * scale):
        lo, hi = fs(m - h), fs(m + h)
        if lo == -np.inf or hi == -np.inf:
            # support edge within h of the mode; use h itself as the width
            return h
        d2 = (lo + hi - 2.0 * fm) / (h * h)
        if np.isfinite(d2) and d2 < 0.0:
            s = 1.0 / math.sqrt(-d2)
            if s < 1e3 * scale:
                return s
    # flat top: half-width of the near-maximal region of the scan grid
    near = xs[vs >= np.max(vs) - 1.0]
    spacing = xs[1] - xs[0]
    return max((near[-1] - near[0]) / 2.0, spacing)


def _bisect_edge(fs, a, b):
    """Support edge between finite f(a) and f(b) = -inf; returns inside point."""
    for _ in range(_EDGE_BISECTIONS):
        mid = 0.5 * (a + b)
        if fs(mid) > -np.inf:
            a = mid
        else:
            b = mid
    return a


def _expand_side(fs, m, fm, s, sign, cfg):
    """Push one window endpoint out until the tail is negligible."""
    x = m + sign * cfg.window * s
    last_finite = m
    for _ in range(_MAX_EXPANSIONS):
        v = fs(x)
        if v == -np.inf:
            return _bisect_edge(fs, last_finite, x)
        if v <= fm - _TAIL_DROP:
            return x
        last_finite = x
        x = m + (x - m) * 1.7
        if abs(x - m) > 1e9 * max(s, 1e-300):
            break
    raise ToleranceFailureError(
        "tail mass does not decay; the integral may diverge"
    )


class _Piece:
    """Trapezoid nodes for one smooth piece, refined by interleaving."""

    __slots__ = ("a", "b", "panels", "nodes", "gvals", "hvals")

    def __init__(self, a, b, panels):
        self.a = a
        self.b = b
        self.panels = panels
        self.nodes = None
        self.gvals = None
        self.hvals = None

    def refine(self, f, hf):
        if self.nodes is None:
            self.nodes = np.linspace(self.a, self.b, self.panels + 1)
            self.gvals = f(self.nodes)
            self.hvals = None if hf is None else hf(self.nodes)
            return
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        gm = f(mids)
        hm = None if hf is None else hf(mids)
        n_new = len(self.nodes) + len(mids)
        nodes = np.empty(n_new)
        nodes[0::2] = self.nodes
        nodes[1::2] = mids
        gvals = np.empty(n_new)
        gvals[0::2] = self.gvals
        gvals[1::2] = gm
        self.nodes, self.gvals = nodes, gvals
        if hf is not None:
            hvals = np.empty(n_new)
            hvals[0::2] = self.hvals
            hvals[1::2] = hm
            self.hvals = hvals
        self.panels *= 2

    def log_weights(self):
        h = (self.b - self.a) / self.panels
        w = np.full(len(self.nodes), math.log(h))
        w[0] -= math.log(2.0)
        w[-1] -= math.log(2.0)
        return w


def _make_pieces(a, b, breaks, budget):
    inner = [p for p in breaks if a < p < b]
    edges = [a] + inner + [b]
    total = b - a
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-12 * total:
            continue
        n = max(1, round(budget * (hi - lo) / total))
        pieces.append(_Piece(lo, hi, n))
    if not pieces:
        pieces = [_Piece(a, b, budget)]
    return pieces


def _richardson(values):
    """Richardson table over an h^2 ladder.

    Returns the last two entries of the final row; their difference is the
    standard Romberg error estimate for the best (last) entry.
    """
    row = [values[0]]
    for i in range(1, len(values)):
        new = [values[i]]
        for k in range(1, i + 1):
            fac = 4.0**k
            new.append((fac * new[k - 1] - row[k - 1]) / (fac - 1.0))
        row = new
    if len(row) == 1:
        return row[0], row[0]
    return row[-1], row[-2]


class _Ladder:
    """Accumulates trapezoid levels and extrapolated integrals per channel."""

    def __init__(self, f, hf, a, b, breaks, cfg):
        self.f = f
        self.hf = hf
        self.cfg = cfg
        self.pieces = _make_pieces(a, b, breaks, _BASE_PANELS)
        self.raw = {"den": [], "pos": [], "neg": []}

    def total_panels(self):
        return sum(p.panels for p in self.pieces)

    def step(self):
        """Refine every piece once and append the new level's integrals."""
        for p in self.pieces:
            p.refine(self.f, self.hf)
        gw = []
        hv = []
        for p in self.pieces:
            gw.append(p.gvals + p.log_weights())
            if self.hf is not None:
                hv.append(p.hvals)
        gw = np.concatenate(gw)
        if np.any(np.isposinf(gw)) or np.any(np.isnan(gw)):
            raise ValueError("log-integrand returned +inf or nan")
        self.raw["den"].append(_logsumexp(gw))
        if self.hf is not None:
            hv = np.concatenate(hv)
            if not np.all(np.isfinite(hv)):
                raise ValueError("numerator weight returned a non-finite value")
            with np.errstate(divide="ignore"):
                if np.any(hv > 0.0):
                    self.raw["pos"].append(_logsumexp(gw + np.log(np.maximum(hv, 0.0))))
                else:
                    self.raw["pos"].append(-np.inf)
                if np.any(hv < 0.0):
                    self.raw["neg"].append(_logsumexp(gw + np.log(np.maximum(-hv, 0.0))))
                else:
                    self.raw["neg"].append(-np.inf)

    def log_values(self, channel, level):
        """(raw, extrapolated, lower-order extrapolated) log-integral at a level.

        Raw trapezoid values converge spectrally for integrands that decay
        smoothly inside the window; the Richardson diagonal accelerates the
        piecewise-smooth h^2 cases.  Convergence is checked on both tracks:
        Cauchy differences of the raw ladder, and the within-row Romberg
        error estimate (best minus second-best) for the extrapolation.
        """
        logs = self.raw[channel][: level + 1]
        shift = max(logs)
        if shift == -np.inf:
            return -np.inf, -np.inf, -np.inf
        vals = [math.exp(v - shift) for v in logs]
        best, second = _richardson(vals)
        if not best > 0.0:
            best = second = vals[-1]  # overshoot; fall back to raw trapezoid
        elif not second > 0.0:
            second = vals[-1]
        return logs[-1], math.log(best) + shift, math.log(second) + shift


def _run_integral(ladder, cfg):
    prev_raw = None
    level = 0
    while True:
        ladder.step()
        raw, ext, ext2 = ladder.log_values("den", level)
        if raw == -np.inf:
            raise EmptyMassError("integrand mass underflowed to zero")
        if level >= 1 and abs(raw - prev_raw) <= cfg.rel_tol:
            return raw
        if level >= 2 and abs(ext - ext2) <= cfg.rel_tol:
            return ext
        if 2 * ladder.total_panels() > cfg.max_subdivisions:
            raise ToleranceFailureError(
                "trapezoid ladder exhausted max_subdivisions before reaching "
                "rel_tol",
                estimate=ext,
            )
        prev_raw = raw
        level += 1


def _converged(curr, prev, tol):
    return abs(curr - prev) <= tol * (1.0 + max(abs(curr), abs(prev)))


def _ratio_from_logs(logpos, logneg, logden):
    curr = 0.0
    if logpos > -np.inf:
        curr += math.exp(logpos - logden)
    if logneg > -np.inf:
        curr -= math.exp(logneg - logden)
    return curr


def _run_ratio(ladder, cfg):
    prev_raw = None
    level = 0
    while True:
        ladder.step()
        den_raw, den_ext, den_ext2 = ladder.log_values("den", level)
        if den_raw == -np.inf:
            raise EmptyMassError("denominator mass underflowed to zero")
        pos_raw, pos_ext, pos_ext2 = ladder.log_values("pos", level)
        neg_raw, neg_ext, neg_ext2 = ladder.log_values("neg", level)
        raw = _ratio_from_logs(pos_raw, neg_raw, den_raw)
        ext = _ratio_from_logs(pos_ext, neg_ext, den_ext)
        ext2 = _ratio_from_logs(pos_ext2, neg_ext2, den_ext2)
        if level >= 1 and _converged(raw, prev_raw, cfg.rel_tol):
            return raw
        if level >= 2 and _converged(ext, ext2, cfg.rel_tol):
            return ext
        if 2 * ladder.total_panels() > cfg.max_subdivisions:
            raise ToleranceFailureError(
                "trapezoid ladder exhausted max_subdivisions before reaching "
                "rel_tol",
                estimate=ext,
            )
        prev_raw = raw
        level += 1


def _build_ladder(g, h, domain, cfg, breakpoints):
    f, hf, center, scale, mode_cap = _internalize(g, h, domain)
    fs = _scalar(f)
    xs, vs = _initial_grid(f, center, scale)
    xs, vs, i = _interiorize(f, xs, vs, scale, cfg)
    m, fm = _refine_mode(fs, xs, vs, i)
    if vs[i] > fm:
        m, fm = xs[i], vs[i]
    if abs(m) > mode_cap:
        raise ToleranceFailureError(
            "integrand mode sits at the edge of double-precision range; "
            "the integral likely diverges"
        )
    s = _curvature_scale(fs, m, fm, scale, xs, vs)
    if hf is None:
        win = fs
        wm = fm
    else:
        hs = _scalar(hf)

        def win(x):
            hv = hs(x)
            if not math.isfinite(hv):
                raise ValueError("numerator weight returned a non-finite value")
            return fs(x) + math.log1p(abs(hv))

        wm = win(m)
    a = _expand_side(win, m, wm, s, -1.0, cfg)
    b = _expand_side(win, m, wm, s, +1.0, cfg)
    breaks = _internal_breaks(breakpoints, domain)
    return _Ladder(f, hf, a, b, breaks, cfg)


def log_integral(g, domain=None, cfg=None, breakpoints=None):
    """Log of ``integral exp(g)`` over the domain.

    Parameters
    ----------
    g : callable
        Vectorized log-integrand; -inf off the support.
    domain : Domain1D, optional
        Defaults to the real line with no hints.
    cfg : QuadConfig, optional
    breakpoints : array_like, optional
        Known kink locations (in natural coordinates); they are pinned to
        panel boundaries so Richardson extrapolation stays valid for
        piecewise-smooth integrands.

    Returns
    -------
    float
        ``log integral exp(g)``; deterministic for a fixed config.

    Raises
    ------
    EmptyMassError
        If every probed evaluation is -inf.
    ToleranceFailureError
        If the ladder cannot reach ``cfg.rel_tol`` (best estimate attached)
        or the integrand appears to diverge.
    """
    domain = domain or Domain1D()
    cfg = cfg or QuadConfig()
    ladder = _build_ladder(g, None, domain, cfg, breakpoints)
    return _run_integral(ladder, cfg)


def log_integral_ratio(h, g_den, domain=None, cfg=None, breakpoints=None):
    """Ratio ``integral h * exp(g_den) / integral exp(g_den)`` on the natural scale.

    The numerator integrand is ``h(t) * exp(g_den(t))`` with the plain-scale
    weight ``h`` supplied separately, so signed numerators stay exact: ``h``
    is split into positive and negative parts that are integrated separately
    on the shared node set and recombined.  When both parts carry zero mass
    the ratio is 0.

    Raises
    ------
    EmptyMassError
        If the denominator carries no mass.
    ValueError
        If ``h`` returns non-finite values on the window.
    """
    domain = domain or Domain1D()
    cfg = cfg or QuadConfig()
    ladder = _build_ladder(g_den, h, domain, cfg, breakpoints)
    return _run_ratio(ladder, cfg)
