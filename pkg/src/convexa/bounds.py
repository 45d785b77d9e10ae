"""Evaluators for explicit bound formulas, with every universal constant set to 1.

Each evaluator returns a :class:`BoundValue`: a "shape value" meant to be
compared with measured functionals through a fitted constant.  Logarithms are
natural.  Profiles (k -> value) may be passed as a ProfileCurve or a plain
sequence indexed from k = 1; missing indices are filled by shape-preserving
(PCHIP) interpolation in log space and the result is flagged.
"""
from __future__ import annotations

import inspect
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .functionals import ProfileCurve

E = math.e


@dataclass(frozen=True)
class BoundValue:
    value: float
    formula_id: str
    inputs: dict
    valid: bool = True
    interpolated: bool = False
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"bound value must be >= 0, got {self.value}")

    @property
    def inputs_digest(self) -> str:
        return json.dumps(self.inputs, sort_keys=True, default=_jsonable)

    def to_dict(self):
        return {"value": self.value, "formula_id": self.formula_id,
                "inputs": json.loads(self.inputs_digest), "valid": self.valid,
                "interpolated": self.interpolated, "extras": self.extras}


def _jsonable(x):
    if isinstance(x, ProfileCurve):
        return {str(int(i)): v for i, v in zip(x.indices, x.values)}
    if isinstance(x, np.ndarray):
        return x.tolist()
    return float(x)


def _pref(n, k):
    """(n/k) log(e + n/k), the ubiquitous prefactor."""
    return (n / k) * math.log(E + n / k)


def profile_values(profile, upto, start=1):
    """Values at k = start..upto and whether any were interpolated.

    Interpolation is PCHIP on log values (monotone data stays monotone);
    outside the measured range the nearest measured value is used.
    """
    if isinstance(profile, ProfileCurve):
        idx, vals = profile.indices, profile.values
    else:
        vals = np.asarray(profile, dtype=float)
        idx = np.arange(1, len(vals) + 1, dtype=float)
    if len(vals) == 0:
        raise ValueError("profile is empty")
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("profile values must be positive and finite")
    want = np.arange(start, upto + 1, dtype=float)
    have = {float(i): v for i, v in zip(idx, vals)}
    if all(w in have for w in want):
        return np.array([have[w] for w in want]), False
    if len(vals) == 1:
        return np.full(len(want), vals[0]), True
    f = PchipInterpolator(idx, np.log(vals), extrapolate=False)
    out = f(np.clip(want, idx[0], idx[-1]))
    return np.exp(out), True


def ellipsoid_entropy(semiaxes, j) -> BoundValue:
    """sup_{1<=m<=min(j,n)} 2^{-j/m} (geometric mean of the m largest semiaxes)."""
    a = np.sort(np.asarray(semiaxes, dtype=float))[::-1]
    if a.size == 0:
        raise ValueError("semiaxes must be nonempty")
    if np.any(a <= 0):
        raise ValueError("semiaxes must be positive")
    if int(j) != j or j < 1:
        raise ValueError("j must be a positive integer")
    j = int(j)
    m = np.arange(1, min(j, a.size) + 1)
    geo = np.exp(np.cumsum(np.log(a))[: m[-1]] / m)
    terms = 2.0 ** (-j / m) * geo
    return BoundValue(float(np.max(terms)), "ellipsoid_entropy",
                      {"semiaxes": a.tolist(), "j": j},
                      extras={"argmax_m": int(m[np.argmax(terms)])})


def _check_nk(n, k):
    if int(n) != n or n < 1 or int(k) != k or k < 1:
        raise ValueError("n and k must be positive integers")
    return int(n), int(k)


def covering_bound_thm31(w_profile, k, n) -> BoundValue:
    """(n/k) log(e+n/k) sup_{m<=min(k,n)} 2^{-k/(3m)} w_m."""
    n, k = _check_nk(n, k)
    top = min(k, n)
    w, interp = profile_values(w_profile, top)
    m = np.arange(1, top + 1)
    sup = float(np.max(2.0 ** (-k / (3.0 * m)) * w))
    return BoundValue(_pref(n, k) * sup, "thm31", {"w_profile": w_profile, "k": k, "n": n},
                      interpolated=interp)


def covering_bound_thm31_dual(v_minus_profile, k, n) -> BoundValue:
    """(n/k) log(e+n/k) sup_{m<=min(k,n)} 2^{-k/(3m)} / v_m^-: compare with e_k(B_2^n, K)."""
    n, k = _check_nk(n, k)
    top = min(k, n)
    v, interp = profile_values(v_minus_profile, top)
    m = np.arange(1, top + 1)
    sup = float(np.max(2.0 ** (-k / (3.0 * m)) / v))
    return BoundValue(_pref(n, k) * sup, "thm31_dual",
                      {"v_minus_profile": v_minus_profile, "k": k, "n": n}, interpolated=interp)


def _dudley(profile, clamp, n, invert):
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    vals, interp = profile_values(profile, n)
    k = np.arange(1, n + 1)
    pref = (n / k) * np.log(E + n / k)
    inner = pref / vals if invert else pref * vals
    total = np.sum(np.minimum(clamp, inner) / np.sqrt(k)) / math.sqrt(n)
    return float(total), interp


def dudley_M_bound(v_minus_profile, r, n) -> BoundValue:
    """(1/sqrt n) sum_k k^{-1/2} min(1/r, (n/k) log(e+n/k) / v_k^-): compare with M(K)."""
    if not r > 0:
        raise ValueError("r must be positive")
    val, interp = _dudley(v_minus_profile, 1.0 / r, n, invert=True)
    return BoundValue(val, "cor44_M", {"v_minus_profile": v_minus_profile, "r": r, "n": n},
                      interpolated=interp)


def dudley_Mstar_bound(w_profile, R, n) -> BoundValue:
    """(1/sqrt n) sum_k k^{-1/2} min(R, (n/k) log(e+n/k) w_k): compare with M*(K)."""
    if not R > 0:
        raise ValueError("R must be positive")
    val, interp = _dudley(w_profile, R, n, invert=False)
    return BoundValue(val, "cor44_Mstar", {"w_profile": w_profile, "R": R, "n": n},
                      interpolated=interp)


def _gelfand(fid, w, k, n):
    n, k = _check_nk(n, k)
    if 2 * k > n:
        raise ValueError("need 1 <= k <= n/2")
    if not w > 0:
        raise ValueError("profile value must be positive")
    return BoundValue(_pref(n, k) * w, fid, {"value": w, "k": k, "n": n})


def gelfand_bound_thm42(w_k, k, n) -> BoundValue:
    """(n/k) log(e+n/k) w_k: out-radius of the best (n-2k)-dimensional section."""
    return _gelfand("thm42", w_k, k, n)


def gelfand_bound_milman_pisier(v_k, k, n) -> BoundValue:
    """(n/k) log(e+n/k) v_k."""
    return _gelfand("thm41", v_k, k, n)


def inradius_bound_thm42(v_minus_k, k, n) -> BoundValue:
    """v_k^- / ((n/k) log(e+n/k)): in-radius shape for the best P_F K, F in G_{n,n-2k}."""
    n, k = _check_nk(n, k)
    if 2 * k > n:
        raise ValueError("need 1 <= k <= n/2")
    if not v_minus_k > 0:
        raise ValueError("profile value must be positive")
    return BoundValue(v_minus_k / _pref(n, k), "thm42_inradius",
                      {"value": v_minus_k, "k": k, "n": n})


def _check_q(q):
    if not q >= 2:
        raise ValueError("q must be >= 2")


def R_kq(n, k, q) -> BoundValue:
    """min(1, (n/k) log(e+n/k) / min(sqrt q, k^{1/4}))."""
    n, k = _check_nk(n, k)
    _check_q(q)
    if k > n:
        raise ValueError("need k <= n")
    val = min(1.0, _pref(n, k) / min(math.sqrt(q), k**0.25))
    return BoundValue(val, "R_kq", {"n": n, "k": k, "q": q})


def q0_threshold(n) -> float:
    """(n log(e+n))^{2/5}."""
    return (n * math.log(E + n)) ** 0.4


def M_Zq_bound(n, q) -> BoundValue:
    """sqrt(log q) / q^{1/4}; ``valid`` iff q <= (n log(e+n))^{2/5}."""
    _check_q(q)
    if n < 1:
        raise ValueError("n must be >= 1")
    q0 = q0_threshold(n)
    return BoundValue(math.sqrt(math.log(q)) / q**0.25, "M_Zq_bound", {"n": n, "q": q},
                      valid=q <= q0, extras={"q0": q0})


def mZq_sum_split(n, q) -> BoundValue:
    """Two-block Dudley sum with the split k(n,q) = n log q / sqrt q.

    (1/sqrt n) [sum_{k <= k(n,q)} k^{-1/2} + sum_{k > k(n,q)} (n/sqrt q) k^{-3/2} log(e+n/k)],
    the first block always holding k = 1.  ``extras["closed"]`` is the closed
    shape sqrt(log q)/q^{1/4}.
    """
    _check_q(q)
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    split = n * math.log(q) / math.sqrt(q)
    k = np.arange(1, n + 1, dtype=float)
    first = (k <= max(1.0, split))
    s1 = np.sum(1.0 / np.sqrt(k[first]))
    kk = k[~first]
    s2 = np.sum((n / math.sqrt(q)) * kk**-1.5 * np.log(E + n / kk))
    val = (s1 + s2) / math.sqrt(n)
    closed = math.sqrt(math.log(q)) / q**0.25
    return BoundValue(float(val), "mZq_sum_split", {"n": n, "q": q},
                      extras={"closed": closed, "split": split, "ratio": float(val) / closed})


def M_isotropic_bound(n) -> BoundValue:
    """log^{2/5}(e+n) / n^{1/10} (the 1/L_K factor is left to the caller)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return BoundValue(math.log(E + n) ** 0.4 / n**0.1, "M_isotropic", {"n": n})


def R_k_conditional(n, k, q) -> BoundValue:
    """min(1, (n/k) log(e+n/k) / sqrt(min(q, k)))."""
    n, k = _check_nk(n, k)
    _check_q(q)
    return BoundValue(min(1.0, _pref(n, k) / math.sqrt(min(q, k))), "R_k_conditional",
                      {"n": n, "k": k, "q": q})


def R_kq_psi_alpha(n, k, q, alpha, b_alpha) -> BoundValue:
    """min(1, (n/k) log(e+n/k) / sqrt(min(q, k^{alpha/2} / b^alpha))).

    ``extras["q_valid_max"]`` is the shape (n log(e+n))^{2a/(a+4)} / b^{4a/(a+4)}
    of the extended validity range for the M(Z_q) estimate.
    """
    n, k = _check_nk(n, k)
    _check_q(q)
    if not 1 <= alpha <= 2:
        raise ValueError("alpha must lie in [1, 2]")
    if not b_alpha > 0:
        raise ValueError("b_alpha must be positive")
    den = math.sqrt(min(q, k ** (alpha / 2) / b_alpha**alpha))
    qmax = (n * math.log(E + n)) ** (2 * alpha / (alpha + 4)) / b_alpha ** (4 * alpha / (alpha + 4))
    return BoundValue(min(1.0, _pref(n, k) / den), "R_kq_psi_alpha",
                      {"n": n, "k": k, "q": q, "alpha": alpha, "b_alpha": b_alpha},
                      valid=q <= qmax, extras={"q_valid_max": qmax})


def low_Mstar_bound(n, k, m_star) -> BoundValue:
    """sqrt(n/k) M*: compare with the out-radius of a codimension-k section."""
    n, k = _check_nk(n, k)
    if not m_star > 0:
        raise ValueError("m_star must be positive")
    return BoundValue(math.sqrt(n / k) * m_star, "low_Mstar", {"n": n, "k": k, "m_star": m_star})


def converse_carl_bound(e_profile, k, n) -> BoundValue:
    """log(e+n/k) sup_{k<=m<=n} sqrt(m) e_m / sqrt(k)."""
    n, k = _check_nk(n, k)
    if k > n:
        raise ValueError("need k <= n")
    e, interp = profile_values(e_profile, n, start=k)
    m = np.arange(k, n + 1)
    sup = float(np.max(np.sqrt(m) * e))
    return BoundValue(math.log(E + n / k) * sup / math.sqrt(k), "lemma72",
                      {"e_profile": e_profile, "k": k, "n": n}, interpolated=interp)


REGISTRY = {
    "ellipsoid_entropy": ellipsoid_entropy,
    "thm31": covering_bound_thm31,
    "thm31_dual": covering_bound_thm31_dual,
    "cor44_M": dudley_M_bound,
    "cor44_Mstar": dudley_Mstar_bound,
    "thm42": gelfand_bound_thm42,
    "thm41": gelfand_bound_milman_pisier,
    "thm42_inradius": inradius_bound_thm42,
    "R_kq": R_kq,
    "M_Zq_bound": M_Zq_bound,
    "mZq_sum_split": mZq_sum_split,
    "M_isotropic": M_isotropic_bound,
    "R_k_conditional": R_k_conditional,
    "R_kq_psi_alpha": R_kq_psi_alpha,
    "low_Mstar": low_Mstar_bound,
    "lemma72": converse_carl_bound,
}
# function names double as ids
for _fn in list(REGISTRY.values()):
    REGISTRY.setdefault(_fn.__name__, _fn)


def formula_params(formula_id):
    """Parameter names of a registered evaluator."""
    if formula_id not in REGISTRY:
        raise KeyError(formula_id)
    return list(inspect.signature(REGISTRY[formula_id]).parameters)


def evaluate(formula_id, **params) -> BoundValue:
    if formula_id not in REGISTRY:
        raise KeyError(f"unknown formula {formula_id!r}; known: {sorted(REGISTRY)}")
    need = formula_params(formula_id)
    missing = [p for p in need if p not in params]
    extra = [p for p in params if p not in need]
    if missing or extra:
        raise ValueError(f"{formula_id} takes {need}; missing {missing}, unexpected {extra}")
    return REGISTRY[formula_id](**params)


def registry_table():
    """formula_id -> {"arity", "params"} for every registered evaluator."""
    return {fid: {"arity": len(formula_params(fid)), "params": formula_params(fid),
                  "function": fn.__name__} for fid, fn in sorted(REGISTRY.items())}
