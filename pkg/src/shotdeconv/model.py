"""Domain types, parameter normalization, and analytic characteristic-function oracles.

The process under study is a stationary exponential shot noise: pulses arrive at
Poisson times, each carrying a random amplitude (the mark), and decay
exponentially. Everything downstream works with the dimensionless parameters
obtained by normalizing to the sampling interval, so this module owns that
normalization plus the closed-form mark characteristic functions and a
quadrature oracle for the characteristic function of the sampled process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidParameterError, NumericalFailure

__all__ = [
    "ModelParams",
    "GaussianMixture",
    "Exponential",
    "PointMass",
    "MarkDistribution",
    "SmoothnessConfig",
    "normalize",
    "mark_cf",
    "true_shot_cf",
    "cf_lower_bound",
    "mark_sobolev_norm",
    "mark_cf_tail_energy",
    "check_smoothness",
    "marks_to_json",
    "marks_from_json",
    "model_to_json",
    "model_from_json",
]


def _require_finite_number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Normalized shot-noise parameters.

    Parameters
    ----------
    lambda_norm : float
        Mean number of pulse arrivals per sampling interval (physical
        intensity times the sampling step). Nonnegative.
    alpha_norm : float
        Pulse decay per sampling interval (physical decay rate times the
        sampling step). Strictly positive.
    ratio : float
        Intensity over decay rate. Dimensionless, independent of the
        sampling step, and the only parameter the density estimator needs.
    """

    lambda_norm: float
    alpha_norm: float
    ratio: float

    def __post_init__(self):
        lam = _require_finite_number(self.lambda_norm, "lambda_norm")
        alpha = _require_finite_number(self.alpha_norm, "alpha_norm")
        ratio = _require_finite_number(self.ratio, "ratio")
        if lam < 0:
            raise InvalidParameterError(f"lambda_norm must be >= 0, got {lam}")
        if alpha <= 0:
            raise InvalidParameterError(f"alpha_norm must be > 0, got {alpha}")
        if ratio < 0:
            raise InvalidParameterError(f"ratio must be >= 0, got {ratio}")
        implied = lam / alpha
        scale = max(abs(implied), abs(ratio))
        if abs(ratio - implied) > 1e-12 * max(scale, 1e-300):
            raise InvalidParameterError(
                f"ratio {ratio} inconsistent with lambda_norm/alpha_norm = {implied}"
            )
        object.__setattr__(self, "lambda_norm", lam)
        object.__setattr__(self, "alpha_norm", alpha)
        object.__setattr__(self, "ratio", ratio)


def normalize(lambda_phys, alpha_phys, delta):
    """Convert physical rates and a sampling step into normalized parameters.

    Parameters
    ----------
    lambda_phys : float
        Pulse intensity per unit time. Nonnegative.
    alpha_phys : float
        Pulse decay rate per unit time. Strictly positive.
    delta : float
        Sampling step. Strictly positive.

    Returns
    -------
    ModelParams
        ``lambda_norm = lambda_phys * delta``, ``alpha_norm = alpha_phys * delta``
        and ``ratio = lambda_phys / alpha_phys``.
    """
    lam = _require_finite_number(lambda_phys, "lambda_phys")
    alpha = _require_finite_number(alpha_phys, "alpha_phys")
    step = _require_finite_number(delta, "delta")
    if lam < 0:
        raise InvalidParameterError(f"lambda_phys must be >= 0, got {lam}")
    if alpha <= 0:
        raise InvalidParameterError(f"alpha_phys must be > 0, got {alpha}")
    if step <= 0:
        raise InvalidParameterError(f"delta must be > 0, got {step}")
    return ModelParams(lam * step, alpha * step, lam / alpha)


@dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of normal laws for the marks.

    Parameters
    ----------
    weights : sequence of float
        Mixture weights, nonnegative, summing to 1 within 1e-12.
    means : sequence of float
        Component means, same length as ``weights``.
    sds : sequence of float
        Component standard deviations, strictly positive.
    """

    weights: tuple
    means: tuple
    sds: tuple

    def __post_init__(self):
        weights = tuple(_require_finite_number(w, "weight") for w in self.weights)
        means = tuple(_require_finite_number(m, "mean") for m in self.means)
        sds = tuple(_require_finite_number(s, "sd") for s in self.sds)
        if not weights:
            raise InvalidParameterError("mixture needs at least one component")
        if len(weights) != len(means) or len(weights) != len(sds):
            raise InvalidParameterError(
                f"component arrays disagree in length: {len(weights)} weights, "
                f"{len(means)} means, {len(sds)} sds"
            )
        if any(w < 0 for w in weights):
            raise InvalidParameterError(f"weights must be nonnegative, got {weights}")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-12:
            raise InvalidParameterError(f"weights must sum to 1, got {total!r}")
        if any(s <= 0 for s in sds):
            raise InvalidParameterError(f"sds must be strictly positive, got {sds}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)

    def cf(self, u):
        """Characteristic function, elementwise over `u`."""
        u_arr = np.asarray(u, dtype=float)
        out = np.zeros(u_arr.shape, dtype=complex)
        for w, mu, sd in zip(self.weights, self.means, self.sds):
            out += w * np.exp(1j * mu * u_arr - 0.5 * (sd * u_arr) ** 2)
        return out if u_arr.ndim else complex(out)

    def pdf(self, x):
        """Probability density, elementwise over `x`."""
        x_arr = np.asarray(x, dtype=float)
        out = np.zeros(x_arr.shape, dtype=float)
        for w, mu, sd in zip(self.weights, self.means, self.sds):
            out += w / (sd * math.sqrt(2.0 * math.pi)) * np.exp(-0.5 * ((x_arr - mu) / sd) ** 2)
        return out if x_arr.ndim else float(out)

    def mean(self):
        return math.fsum(w * mu for w, mu in zip(self.weights, self.means))

    def abs_moment(self, order):
        """E|Y|^order by numeric integration."""
        order = _require_finite_number(order, "order")
        if order < 0:
            raise InvalidParameterError(f"order must be >= 0, got {order}")

        def integrand(y):
            return abs(y) ** order * self.pdf(y)

        left, _ = integrate.quad(integrand, -np.inf, 0.0, limit=200)
        right, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
        return left + right

    def sample(self, rng, size):
        """Draw `size` marks using `rng` (component choice, then normal draw)."""
        cum = np.cumsum(self.weights)
        comp = np.searchsorted(cum, rng.random(size), side="right")
        comp = np.minimum(comp, len(self.weights) - 1)
        mu = np.asarray(self.means)[comp]
        sd = np.asarray(self.sds)[comp]
        return mu + sd * rng.standard_normal(size)


@dataclass(frozen=True)
class Exponential:
    """Exponential mark law with the given rate (mean ``1/rate``)."""

    rate: float

    def __post_init__(self):
        rate = _require_finite_number(self.rate, "rate")
        if rate <= 0:
            raise InvalidParameterError(f"rate must be > 0, got {rate}")
        object.__setattr__(self, "rate", rate)

    def cf(self, u):
        u_arr = np.asarray(u, dtype=float)
        out = self.rate / (self.rate - 1j * u_arr)
        return out if u_arr.ndim else complex(out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(x_arr >= 0, self.rate * np.exp(-self.rate * np.clip(x_arr, 0, None)), 0.0)
        return out if x_arr.ndim else float(out)

    def mean(self):
        return 1.0 / self.rate

    def abs_moment(self, order):
        order = _require_finite_number(order, "order")
        if order < 0:
            raise InvalidParameterError(f"order must be >= 0, got {order}")
        return math.gamma(order + 1.0) / self.rate**order

    def sample(self, rng, size):
        return rng.exponential(scale=1.0 / self.rate, size=size)


@dataclass(frozen=True)
class PointMass:
    """Degenerate mark law putting all mass at one value (test oracle only)."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", _require_finite_number(self.value, "value"))

    def cf(self, u):
        u_arr = np.asarray(u, dtype=float)
        out = np.exp(1j * self.value * u_arr)
        return out if u_arr.ndim else complex(out)

    def pdf(self, x):
        raise InvalidParameterError("a point mass has no density")

    def mean(self):
        return self.value

    def abs_moment(self, order):
        order = _require_finite_number(order, "order")
        if order < 0:
            raise InvalidParameterError(f"order must be >= 0, got {order}")
        return abs(self.value) ** order

    def sample(self, rng, size):
        return np.full(size, self.value, dtype=float)


MarkDistribution = GaussianMixture | Exponential | PointMass


@dataclass(frozen=True)
class SmoothnessConfig:
    """Hypothesis-class bounds for the mark law, supplied by the user.

    Fields follow the class definition: `s` is the Sobolev exponent of the
    mark density, `K` bounds the absolute moment of order ``4 + m``, `L`
    bounds the Sobolev semi-norm of the mark characteristic function, and
    `m` is the extra moment order. These are configuration, never estimated.
    """

    s: float
    K: float
    L: float
    m: float

    def __post_init__(self):
        s = _require_finite_number(self.s, "s")
        big_k = _require_finite_number(self.K, "K")
        big_l = _require_finite_number(self.L, "L")
        extra = _require_finite_number(self.m, "m")
        if s <= 0.5:
            raise InvalidParameterError(f"s must be > 1/2, got {s}")
        if big_k <= 0 or big_l <= 0 or extra <= 0:
            raise InvalidParameterError(
                f"K, L, m must all be > 0, got K={big_k}, L={big_l}, m={extra}"
            )
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "K", big_k)
        object.__setattr__(self, "L", big_l)
        object.__setattr__(self, "m", extra)


def mark_cf(marks, u):
    """Characteristic function of the mark law at `u` (scalar or array)."""
    return marks.cf(u)


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth, max_depth):
    """One adaptive-Simpson refinement step; returns (integral, converged)."""
    mid = 0.5 * (a + b)
    lmid = 0.5 * (a + mid)
    rmid = 0.5 * (mid + b)
    flm = f(lmid)
    frm = f(rmid)
    left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0, True
    if depth >= max_depth:
        return left + right + err / 15.0, False
    lval, lok = _adaptive_simpson(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth)
    rval, rok = _adaptive_simpson(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth)
    return lval + rval, lok and rok


def _integrate_segment(f, a, b, rel_tol, scale, max_depth):
    """Adaptive Simpson of complex-valued `f` over [a, b]."""
    if a == b:
        return 0.0 + 0.0j, True
    fa = f(a)
    fm = f(0.5 * (a + b))
    fb = f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = rel_tol * max(abs(whole), scale, 1e-300)
    return _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0, max_depth)


def true_shot_cf(params, marks, u, rel_tol=1e-8, _max_depth=60):
    """Characteristic function of the stationary sampled shot noise.

    Evaluates ``exp(ratio * I(u))`` where ``I(u)`` is the integral from 0 to
    `u` of ``(mark_cf(z) - 1) / z``, the integrand extended by continuity to
    ``i * E[Y]`` at 0. Quadrature is adaptive Simpson, refined until the
    estimated error of the log is below `rel_tol` relative to its magnitude.

    Parameters
    ----------
    params : ModelParams
    marks : MarkDistribution
    u : float or array_like
        Evaluation point(s).
    rel_tol : float, optional
        Relative tolerance on the log of the result, in ``(0, 1e-2]``.

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    NumericalFailure
        If any quadrature segment fails to converge within the subdivision
        cap. The best available value is attached as ``partial``.
    """
    rel_tol = _require_finite_number(rel_tol, "rel_tol")
    if not 0.0 < rel_tol <= 1e-2:
        raise InvalidParameterError(f"rel_tol must be in (0, 1e-2], got {rel_tol}")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_flat = np.atleast_1d(u_arr).ravel()
    if not np.all(np.isfinite(u_flat)):
        raise InvalidParameterError("u must be finite")

    mean_mark = marks.mean()

    def integrand(z):
        if z == 0.0:
            return 1j * mean_mark
        return (marks.cf(z) - 1.0) / z

    points = np.unique(np.concatenate([u_flat, [0.0]]))
    zero_idx = int(np.searchsorted(points, 0.0))
    seg_vals = np.zeros(max(len(points) - 1, 0), dtype=complex)
    converged = True
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        scale = abs(b - a) * (abs(mean_mark) + 1.0) * 1e-3
        val, ok = _integrate_segment(integrand, a, b, rel_tol, scale, _max_depth)
        seg_vals[i] = val
        converged = converged and ok
    # cumulative integral from 0 to every breakpoint
    log_at = np.zeros(len(points), dtype=complex)
    for i in range(zero_idx + 1, len(points)):
        log_at[i] = log_at[i - 1] + seg_vals[i - 1]
    for i in range(zero_idx - 1, -1, -1):
        log_at[i] = log_at[i + 1] - seg_vals[i]
    idx = np.searchsorted(points, u_flat)
    phi = np.exp(params.ratio * log_at[idx])
    phi[u_flat == 0.0] = 1.0 + 0.0j
    phi = phi.reshape(np.atleast_1d(u_arr).shape)
    result = complex(phi[0]) if scalar else phi
    if not converged:
        raise NumericalFailure(
            f"quadrature did not converge within {_max_depth} subdivision levels "
            f"at rel_tol={rel_tol}",
            partial=result,
        )
    return result


def cf_lower_bound(config, params, u):
    """Guaranteed lower bound on the modulus of the sampled-process CF.

    Returns ``exp(-ratio * (L + K**(1/(4+m)))) * (1 + |u|)**(-ratio)``, valid
    whenever the mark law satisfies the moment and Sobolev bounds in `config`.
    """
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise InvalidParameterError("u must be finite")
    const = math.exp(-params.ratio * (config.L + config.K ** (1.0 / (4.0 + config.m))))
    out = const * (1.0 + np.abs(u_arr)) ** (-params.ratio)
    return out if u_arr.ndim else float(out)


def mark_sobolev_norm(marks, s):
    """Sobolev semi-norm sqrt(integral of (1+u^2)^s |mark_cf(u)|^2 du).

    Raises
    ------
    InvalidParameterError
        When the integral provably diverges (point mass for any s;
        exponential marks for s >= 1/2, where the integrand decays like
        u^(2s-2)).
    """
    s = _require_finite_number(s, "s")
    if s <= 0:
        raise InvalidParameterError(f"s must be > 0, got {s}")
    if isinstance(marks, PointMass):
        raise InvalidParameterError(
            "Sobolev integral diverges for a point mass (|mark_cf| = 1 everywhere)"
        )
    if isinstance(marks, Exponential) and s >= 0.5:
        raise InvalidParameterError(
            f"Sobolev integral diverges for exponential marks when s >= 1/2 (got s={s}); "
            "the integrand decays only like u^(2s-2)"
        )

    def integrand(v):
        c = marks.cf(v)
        return (1.0 + v * v) ** s * (c.real * c.real + c.imag * c.imag)

    half, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return math.sqrt(2.0 * half)


def mark_cf_tail_energy(marks):
    """sqrt(integral over [1, inf) of Re(mark_cf(u))^2 du).

    This is the weaker tail quantity that actually drives the CF decay bound
    when the full Sobolev integral is infinite (exponential marks).
    """
    if isinstance(marks, PointMass):
        raise InvalidParameterError("tail integral diverges for a point mass")

    def integrand(v):
        return marks.cf(v).real ** 2

    val, _ = integrate.quad(integrand, 1.0, np.inf, limit=400)
    return math.sqrt(val)


def check_smoothness(marks, config):
    """Brute-force admissibility check of a mark law against class bounds.

    Computes the absolute moment of order ``4 + m`` and a norm of the mark
    characteristic function, and compares them to ``K`` and ``L``. The norm
    is the full Sobolev semi-norm when it is finite; otherwise the tail
    energy over [1, inf) is used (the quantity the decay bound needs).

    Returns
    -------
    dict
        Keys: ``moment_value``, ``moment_ok``, ``norm_value``, ``norm_kind``
        (``"sobolev"`` or ``"cf_tail"``), ``norm_ok``, ``admissible``.
    """
    moment_value = marks.abs_moment(4.0 + config.m)
    try:
        norm_value = mark_sobolev_norm(marks, config.s)
        norm_kind = "sobolev"
    except InvalidParameterError:
        norm_value = mark_cf_tail_energy(marks)
        norm_kind = "cf_tail"
    moment_ok = moment_value <= config.K
    norm_ok = norm_value <= config.L
    return {
        "moment_value": moment_value,
        "moment_ok": moment_ok,
        "norm_value": norm_value,
        "norm_kind": norm_kind,
        "norm_ok": norm_ok,
        "admissible": moment_ok and norm_ok,
    }


def _check_no_unknown(obj, allowed, where):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise InvalidParameterError(f"unknown fields {unknown} in {where}")


def _get_number(obj, key, where):
    if key not in obj:
        raise InvalidParameterError(f"missing field {key!r} in {where}")
    return _require_finite_number(obj[key], f"{where}.{key}")


def marks_to_json(marks):
    """JSON-compatible dict for a mark law."""
    if isinstance(marks, GaussianMixture):
        return {
            "type": "gaussian_mixture",
            "weights": list(marks.weights),
            "means": list(marks.means),
            "sds": list(marks.sds),
        }
    if isinstance(marks, Exponential):
        return {"type": "exponential", "rate": marks.rate}
    if isinstance(marks, PointMass):
        return {"type": "point_mass", "value": marks.value}
    raise InvalidParameterError(f"unsupported mark distribution {type(marks).__name__}")


def marks_from_json(obj):
    """Parse a mark law from its JSON dict; unknown fields are rejected."""
    if not isinstance(obj, dict):
        raise InvalidParameterError(f"marks must be an object, got {type(obj).__name__}")
    kind = obj.get("type")
    if kind == "gaussian_mixture":
        _check_no_unknown(obj, {"type", "weights", "means", "sds"}, "marks")
        for key in ("weights", "means", "sds"):
            if key not in obj or not isinstance(obj[key], (list, tuple)):
                raise InvalidParameterError(f"marks.{key} must be an array")
        return GaussianMixture(tuple(obj["weights"]), tuple(obj["means"]), tuple(obj["sds"]))
    if kind == "exponential":
        _check_no_unknown(obj, {"type", "rate"}, "marks")
        return Exponential(_get_number(obj, "rate", "marks"))
    if kind == "point_mass":
        _check_no_unknown(obj, {"type", "value"}, "marks")
        return PointMass(_get_number(obj, "value", "marks"))
    raise InvalidParameterError(f"unknown marks type {kind!r}")


def model_to_json(lambda_phys, alpha_phys, delta, marks):
    """Combined JSON dict for physical parameters plus the mark law."""
    return {
        "lambda": float(lambda_phys),
        "alpha": float(alpha_phys),
        "delta": float(delta),
        "marks": marks_to_json(marks),
    }


def model_from_json(obj):
    """Parse physical parameters and marks; returns (ModelParams, MarkDistribution)."""
    if not isinstance(obj, dict):
        raise InvalidParameterError(f"model must be an object, got {type(obj).__name__}")
    _check_no_unknown(obj, {"lambda", "alpha", "delta", "marks"}, "model")
    lam = _get_number(obj, "lambda", "model")
    alpha = _get_number(obj, "alpha", "model")
    delta = _get_number(obj, "delta", "model")
    if "marks" not in obj:
        raise InvalidParameterError("missing field 'marks' in model")
    marks = marks_from_json(obj["marks"])
    return normalize(lam, alpha, delta), marks
