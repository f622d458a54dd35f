"""Patch-occupancy metapopulation model and its drift decomposition.

The model tracks, for each size ``i >= 0``, the number of patches holding
``i`` individuals, out of ``N`` patches total.  Individuals are born and
die inside patches, attempt migration at rate ``gamma`` (succeeding with
probability ``rho``, otherwise dying), and whole patches are wiped out by
catastrophes at rate ``kappa``.  Five jump families result:

* down-step ``i -> i-1``   rate ``i x^i (d_i + gamma (1 - rho))``; for
  ``i = 1`` the catastrophe rate ``kappa`` is folded in as well
* up-step ``i -> i+1``     rate ``i x^i b_i``
* catastrophe ``i -> 0``   rate ``kappa x^i`` for ``i >= 2``
* migration ``(i, k)``     rate ``rho gamma i x^i x^k``: a migrant leaves
  a size-``i`` patch and lands in a size-``k`` patch

All rates above are per patch, in density form ``x = X / N``; the count
process jumps at ``N`` times these rates.  The total drift splits into a
linear part ``A x`` (a tridiagonal operator) plus a quadratic migration
exchange ``F(x)``, an identity that holds exactly on the simplex
``sum_j x^j = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import JumpVector, as_density

__all__ = [
    "ModelSpec",
    "WeightStructure",
    "TruncatedOperator",
    "truncated_A",
    "alpha",
    "fluid_jumps",
    "drift_F",
    "drift_DF",
    "df_matrix",
    "df_apply",
    "d2f_entry",
    "drift_total",
    "jump_drift",
    "moment_S",
    "moment_UV",
    "weighted_norm",
    "check_assumptions",
    "AssumptionReport",
]

LAWS = ("constant", "logistic", "custom")

#: largest total displacement of any single jump (migration touches four slots)
JUMP_MASS_BOUND = 4


@dataclass(frozen=True)
class ModelSpec:
    """Parameter set for the metapopulation model.

    ``law`` selects the demographic family: "constant" keeps per-capita
    birth and death rates flat in patch size, "logistic" adds a crowding
    term ``d_i = d + c i``, "custom" reads per-size tables (index 1 is
    patch size 1) with constant extrapolation past ``size_cap``.
    """

    law: str = "logistic"
    b: float = 2.0
    d: float = 0.5
    c: float = 0.1
    gamma: float = 0.5
    rho: float = 0.8
    kappa: float = 0.2
    b_table: tuple[float, ...] = ()
    d_table: tuple[float, ...] = ()
    size_cap: int | None = None

    def __post_init__(self) -> None:
        if self.law not in LAWS:
            raise ValueError(f"unknown demographic law {self.law!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        for name in ("b", "d", "c", "gamma", "kappa"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.law == "custom":
            if not self.b_table or not self.d_table:
                raise ValueError("custom law requires b_table and d_table")
            if min(self.b_table) < 0.0 or min(self.d_table) < 0.0:
                raise ValueError("rate tables must be nonnegative")
        if self.size_cap is not None and self.size_cap < 1:
            raise ValueError("size_cap must be positive")

    def _per_size(self, table: tuple[float, ...], flat: float, sizes: np.ndarray,
                  slope: float = 0.0) -> np.ndarray:
        if self.law == "custom":
            tab = np.asarray(table, dtype=float)
            if self.size_cap is not None:
                tab = tab[: self.size_cap]
            idx = np.clip(sizes - 1, 0, len(tab) - 1)
            out = tab[idx].astype(float)
        else:
            out = flat + slope * sizes.astype(float)
            if self.size_cap is not None:
                capped = flat + slope * min(self.size_cap, 1e18)
                out = np.where(sizes > self.size_cap, capped, out)
        return np.where(sizes >= 1, out, 0.0)

    def birth_rates(self, width: int) -> np.ndarray:
        """Per-capita birth rate b_i for sizes 0..width-1 (zero at size 0)."""
        sizes = np.arange(width)
        return self._per_size(self.b_table, self.b, sizes)

    def death_rates(self, width: int) -> np.ndarray:
        """Per-capita death rate d_i for sizes 0..width-1 (zero at size 0)."""
        sizes = np.arange(width)
        slope = self.c if self.law == "logistic" else 0.0
        return self._per_size(self.d_table, self.d, sizes, slope=slope)

    @property
    def migration_rate(self) -> float:
        """Successful per-capita migration rate rho * gamma."""
        return self.rho * self.gamma

    @property
    def migration_loss(self) -> float:
        """Per-capita death rate from failed migration, gamma * (1 - rho)."""
        return self.gamma * (1.0 - self.rho)

    def drift_bound_w(self, scan: int = 1024) -> float:
        """Growth constant w = max_i (b_i - d_i - gamma - kappa)_+ .

        The transposed linear part satisfies A^T mu <= w mu for the weight
        mu(j) = j + 1.  The maximum is scanned over sizes 1..scan, enough
        for the supported laws where b_i - d_i is nonincreasing.
        """
        vals = self.birth_rates(scan + 1)[1:] - self.death_rates(scan + 1)[1:]
        return float(max(np.max(vals - self.gamma - self.kappa), 0.0))

    def weights(self, r0: float | None = None) -> "WeightStructure":
        if self.law == "logistic" and self.c > 0.0 and self.size_cap is None:
            betas = (1.0, 2.0, 1.0, 2.0, 1.0)
        else:
            # bounded per-capita rates: diagonal of A grows linearly
            betas = (1.0, 2.0, 1.0, 1.0, 0.0)
        ws = WeightStructure(betas=betas, r0=0.0)
        if r0 is None:
            r0 = ws.moment_threshold + 2.0
        return WeightStructure(betas=betas, r0=float(r0))


@dataclass(frozen=True)
class WeightStructure:
    """Weight functions and growth exponents entering the error theory.

    ``nu(j) = mu(j) = j + 1``; betas are the structural exponents
    (jump-weight, rate-growth, mu-vs-nu, diagonal growth, Lipschitz).
    """

    betas: tuple[float, float, float, float, float]
    r0: float

    def nu(self, j):
        return np.asarray(j) + 1.0

    def mu(self, j):
        return np.asarray(j) + 1.0

    @property
    def r1(self) -> float:
        return self.r0 + 1.0

    def p(self, r: float) -> float:
        return 2.0 * r

    @property
    def moment_threshold(self) -> float:
        """Smallest moment order that the convergence rates require."""
        _, b2, b3, b4, b5 = self.betas
        return 4.0 * (b2 + b3 + b4) + 2.0 * b5


def mu_weights(width: int) -> np.ndarray:
    return np.arange(1, width + 1, dtype=float)


def weighted_norm(x, weights: WeightStructure | None = None) -> float:
    """Weighted l1 norm sum_j mu(j) |x^j| with mu(j) = j + 1."""
    arr = as_density(x)
    return float(np.sum(mu_weights(arr.size) * np.abs(arr)))


def moment_S(x, r: float) -> float:
    """Weighted moment S_r(x) = sum_j x^j (j + 1)^r."""
    arr = as_density(x)
    return float(np.sum(arr * mu_weights(arr.size) ** r))


def _mean_size(x: np.ndarray) -> float:
    """s(x) = sum_{j>=1} j x^j, the individual density."""
    return float(np.sum(np.arange(x.size) * x))


def _exchange_g(x: np.ndarray) -> np.ndarray:
    """g^i(x) = x^{i-1} - x^i with x^{-1} := 0, so g^0 = -x^0."""
    g = -x.copy()
    g[1:] += x[:-1]
    return g


def drift_F(model: ModelSpec, x) -> np.ndarray:
    """Quadratic drift part F(x): migration exchange plus catastrophe inflow.

    F^i(x) = rho gamma (x^{i-1} - x^i) s(x) for i >= 1 and
    F^0(x) = -rho gamma x^0 s(x) + kappa.
    """
    arr = as_density(x)
    out = model.migration_rate * _mean_size(arr) * _exchange_g(arr)
    out[0] += model.kappa
    return out


def drift_DF(model: ModelSpec, x, h) -> np.ndarray:
    """Directional derivative DF(x)[h] = rho gamma (g(x) s(h) + s(x) g(h))."""
    xa = as_density(x)
    ha = as_density(h, width=xa.size)
    xa = as_density(xa, width=ha.size)
    return model.migration_rate * (
        _exchange_g(xa) * _mean_size(ha) + _mean_size(xa) * _exchange_g(ha)
    )


def df_matrix(model: ModelSpec, x) -> np.ndarray:
    """Dense Jacobian DF(x) on the truncation implied by len(x)."""
    arr = as_density(x)
    n = arr.size
    m = np.arange(n, dtype=float)
    out = model.migration_rate * np.outer(_exchange_g(arr), m)
    s = model.migration_rate * _mean_size(arr)
    idx = np.arange(n)
    out[idx, idx] -= s
    out[idx[1:], idx[:-1]] += s
    return out


def df_apply(model: ModelSpec, x: np.ndarray, V: np.ndarray) -> np.ndarray:
    """DF(x) @ V without forming the Jacobian; V may be a vector or matrix."""
    g = _exchange_g(x)
    s = _mean_size(x)
    m = np.arange(x.size, dtype=float)
    shifted = np.zeros_like(V, dtype=float)
    shifted[1:] = V[:-1]
    if V.ndim == 1:
        return model.migration_rate * (g * (m @ V) + s * (shifted - V))
    return model.migration_rate * (np.outer(g, m @ V) + s * (shifted - V))


def d2f_entry(model: ModelSpec, i: int, k: int, l: int) -> float:
    """Second derivative D_{kl} F^i, constant in x since F is quadratic."""
    term_k = float(l == i - 1) - float(l == i)
    term_l = float(k == i - 1) - float(k == i)
    return model.migration_rate * (k * term_k + l * term_l)


class TruncatedOperator:
    """The linear drift part A restricted to sizes {0..M}.

    Tridiagonal: the diagonal collects every outflow from size j, the
    superdiagonal the down-flows j+1 -> j, the subdiagonal the birth
    flows j-1 -> j.  Truncation drops the birth flow out of size M.
    """

    def __init__(self, model: ModelSpec, M: int):
        if M < 1:
            raise ValueError("truncation level must be at least 1")
        self.model = model
        self.M = M
        w = M + 1
        sizes = np.arange(w, dtype=float)
        b = model.birth_rates(w)
        d = model.death_rates(w)
        self.diag = -(model.kappa + sizes * (b + d + model.gamma))
        self.diag[0] = -model.kappa
        # A[i, i+1] = (i+1)(d_{i+1} + gamma): down-flow into size i
        self.super = sizes[1:] * (d[1:] + model.gamma)
        # A[i+1, i] = i b_i: birth flow out of size i
        self.sub = sizes[:-1] * b[:-1]

    def dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        idx = np.arange(self.M)
        out[idx, idx + 1] = self.super
        out[idx + 1, idx] = self.sub
        return out

    def apply(self, V: np.ndarray) -> np.ndarray:
        """A @ V for a vector or a matrix of stacked columns."""
        V = np.asarray(V, dtype=float)
        if V.shape[0] != self.M + 1:
            raise ValueError("operand height must match truncation")
        if V.ndim == 1:
            out = self.diag * V
            out[:-1] += self.super * V[1:]
            out[1:] += self.sub * V[:-1]
        else:
            out = self.diag[:, None] * V
            out[:-1] += self.super[:, None] * V[1:]
            out[1:] += self.sub[:, None] * V[:-1]
        return out

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[1:] += self.super * v[:-1]
        out[:-1] += self.sub * v[1:]
        return out

    def mu_drift_slack(self) -> np.ndarray:
        """w mu - A^T mu entrywise; nonnegative when the drift bound holds."""
        mu = mu_weights(self.M + 1)
        w = self.model.drift_bound_w()
        return w * mu - self.apply_transpose(mu)


def truncated_A(model: ModelSpec, M: int) -> TruncatedOperator:
    return TruncatedOperator(model, M)


def drift_total(model: ModelSpec, x, scale: float | None = None) -> np.ndarray:
    """Total drift sum_J J alpha_J(x) = A x + F(x), dense.

    With ``scale`` set to the patch number N, the drift of the finite
    system is returned instead: the same-size migration pair rate is
    i x^i (x^i - 1/N) rather than i (x^i)^2, because a migrant cannot
    land in its own patch while counting it at its pre-departure size.
    """
    arr = as_density(x)
    out = TruncatedOperator(model, arr.size - 1).apply(arr) + drift_F(model, arr)
    if scale is not None:
        c = model.migration_rate / float(scale) * np.arange(arr.size) * arr
        out -= _second_difference(c)
    return out


def drift_total_batch(model: ModelSpec, X: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Row-wise drift for a stack of densities (rows are states)."""
    X = np.asarray(X, dtype=float)
    w = X.shape[1]
    op = TruncatedOperator(model, w - 1)
    out = op.apply(X.T).T
    g = -X.copy()
    g[:, 1:] += X[:, :-1]
    s = X @ np.arange(w, dtype=float)
    out += model.migration_rate * s[:, None] * g
    out[:, 0] += model.kappa
    if scale is not None:
        c = model.migration_rate / float(scale) * np.arange(w) * X
        out -= _second_difference_rows(c)
    return out


def _second_difference(c: np.ndarray) -> np.ndarray:
    """sum_i c_i (e^{i+1} - 2 e^i + e^{i-1}) componentwise."""
    out = -2.0 * c
    out[1:] += c[:-1]
    out[:-1] += c[1:]
    return out


def _second_difference_rows(c: np.ndarray) -> np.ndarray:
    out = -2.0 * c
    out[:, 1:] += c[:, :-1]
    out[:, :-1] += c[:, 1:]
    return out


def _migration_jump(i: int, k: int) -> JumpVector:
    deltas: dict[int, int] = {}
    for j, d in ((k + 1, 1), (k, -1), (i - 1, 1), (i, -1)):
        deltas[j] = deltas.get(j, 0) + d
    return JumpVector.from_dict(deltas)


def fluid_jumps(model: ModelSpec, x, include_null: bool = False):
    """Yield (jump, rate, family, i, k) over the active jump set at density x.

    Rates are the limiting per-patch intensities (the table rates); the
    migration family is enumerated lazily over pairs of occupied sizes.
    Null moves (migration into a patch of size i-1, which relabels two
    patches without changing the count vector) carry a zero jump and are
    skipped unless ``include_null``.
    """
    arr = np.maximum(as_density(x), 0.0)
    support = np.nonzero(arr)[0]
    w = int(support[-1]) + 2 if support.size else 2
    bi = model.birth_rates(w)
    di = model.death_rates(w)
    for i in support:
        i = int(i)
        xi = arr[i]
        if i >= 1:
            if i == 1:
                rate = xi * (di[1] + model.migration_loss + model.kappa)
            else:
                rate = i * xi * (di[i] + model.migration_loss)
            if rate > 0.0:
                yield JumpVector.from_dict({i - 1: 1, i: -1}), rate, "down", i, -1
            if bi[i] > 0.0:
                yield JumpVector.from_dict({i + 1: 1, i: -1}), i * xi * bi[i], "up", i, -1
        if i >= 2 and model.kappa * xi > 0.0:
            yield JumpVector.from_dict({0: 1, i: -1}), model.kappa * xi, "catastrophe", i, -1
    if model.migration_rate > 0.0:
        for i in support:
            i = int(i)
            if i < 1:
                continue
            for k in support:
                k = int(k)
                J = _migration_jump(i, k)
                if J.is_null and not include_null:
                    continue
                rate = i * arr[i] * arr[k] * model.migration_rate
                if rate > 0.0:
                    yield J, rate, "migration", i, k


def jump_drift(model: ModelSpec, x, width: int | None = None) -> np.ndarray:
    """sum_J J alpha_J(x) by direct enumeration over the active jumps.

    This is the route independent of the A + F split; the two must agree
    on the simplex.
    """
    arr = as_density(x)
    w = width if width is not None else arr.size + 2
    out = np.zeros(w)
    for J, rate, _, _, _ in fluid_jumps(model, arr):
        for j, d in J.entries:
            out[j] += d * rate
    return out


def alpha(model: ModelSpec, J: JumpVector, x) -> float:
    """Rate function alpha_J(x) for a jump of one of the five families."""
    arr = as_density(x)

    def comp(j: int) -> float:
        return float(arr[j]) if j < arr.size else 0.0

    fam = _classify(J)
    if fam is None:
        raise ValueError(f"jump {J} does not belong to the model's families")
    kind, i, k = fam
    w = max(i, k) + 2
    if kind == "down":
        if i == 1:
            return comp(1) * (model.death_rates(2)[1] + model.migration_loss + model.kappa)
        return i * comp(i) * (model.death_rates(w)[i] + model.migration_loss)
    if kind == "up":
        return i * comp(i) * model.birth_rates(w)[i]
    if kind == "catastrophe":
        return model.kappa * comp(i)
    return i * comp(i) * comp(k) * model.migration_rate


def _classify(J: JumpVector) -> tuple[str, int, int] | None:
    e = dict(J.entries)
    if not e:
        return None
    if len(e) == 2:
        neg = [j for j, d in e.items() if d == -1]
        pos = [j for j, d in e.items() if d == 1]
        if len(neg) != 1 or len(pos) != 1:
            return None
        i, p = neg[0], pos[0]
        if p == i - 1 and i >= 1:
            return ("down", i, -1)
        if p == i + 1 and i >= 1:
            return ("up", i, -1)
        if p == 0 and i >= 2:
            return ("catastrophe", i, -1)
        return None
    if len(e) == 3:
        if sorted(e.values()) == [-2, 1, 1]:
            i = next(j for j, d in e.items() if d == -2)
            if e.get(i - 1) == 1 and e.get(i + 1) == 1 and i >= 1:
                return ("migration", i, i)
        if sorted(e.values()) == [-1, -1, 2]:
            mid = next(j for j, d in e.items() if d == 2)
            if e.get(mid - 1) == -1 and e.get(mid + 1) == -1 and mid >= 1:
                return ("migration", mid + 1, mid - 1)
        return None
    if len(e) == 4:
        negs = sorted(j for j, d in e.items() if d == -1)
        poss = sorted(j for j, d in e.items() if d == 1)
        if len(negs) != 2 or len(poss) != 2:
            return None
        for i, k in ((negs[0], negs[1]), (negs[1], negs[0])):
            if sorted((k + 1, i - 1)) == poss and i >= 1 and k >= 0:
                return ("migration", i, k)
        return None
    return None


def moment_UV(model: ModelSpec, x, r: float) -> tuple[float, float]:
    """Jump-weighted moment rates U_r and V_r at density x.

    U_r drives d S_r / dt; V_r is its quadratic-variation analogue.
    """
    arr = as_density(x)
    nu_r = mu_weights(arr.size + JUMP_MASS_BOUND) ** r
    U = 0.0
    V = 0.0
    for J, rate, _, _, _ in fluid_jumps(model, arr):
        inc = sum(d * nu_r[j] for j, d in J.entries)
        U += rate * inc
        V += rate * inc * inc
    return float(U), float(V)


@dataclass
class AssumptionReport:
    """Structural audit of the model against the error-theory assumptions.

    Boolean fields are exact structural checks; the ``*_fit`` fields are
    empirical constants fitted over sampled states, reported rather than
    asserted because the theory leaves them unspecified.
    """

    M: int
    w: float
    betas: tuple[float, float, float, float, float]
    r0: float
    offdiag_nonneg: bool
    mu_drift_ok: bool
    mu_drift_worst: float
    mu_growth_ok: bool
    diag_growth_fit: float
    diag_growth_order: float
    zeta_fit: tuple[float, float, float]
    lipschitz_fit: float
    u_bound_fit: float
    v_bound_fit: float
    r0_above_threshold: bool
    threshold: float
    flags: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flags


def _sample_density(rng: np.random.Generator, width: int) -> np.ndarray:
    """Random normalized density with geometric-type tail."""
    decay = rng.uniform(0.3, 0.9)
    raw = rng.random(width) * decay ** np.arange(width)
    return raw / raw.sum()


def check_assumptions(model: ModelSpec, M: int = 50, r0: float | None = None,
                      samples: int = 64, seed: int = 0) -> AssumptionReport:
    """Audit the model structure on the truncation {0..M}.

    Exact checks: sign pattern of A, the weighted drift bound
    A^T mu <= w mu, and mu(j) <= nu(j)^beta3.  Fitted constants: diagonal
    growth against nu^beta4, the zeta moment bound, the Lipschitz
    constant of the rates, and the U/V moment-rate dominations.
    """
    ws = model.weights(r0)
    r0v = ws.r0
    op = TruncatedOperator(model, M)
    A = op.dense()
    off = A - np.diag(np.diag(A))
    offdiag_nonneg = bool(np.min(off) >= 0.0)
    slack = op.mu_drift_slack()
    mu_drift_worst = float(np.min(slack))
    mu_drift_ok = bool(mu_drift_worst >= -1e-12)

    nu = mu_weights(M + 1)
    mu_growth_ok = bool(np.all(nu <= nu ** ws.betas[2] + 1e-12))
    ratios = np.abs(np.diag(A)) / nu ** ws.betas[3]
    diag_growth_fit = float(np.max(ratios))
    # growth order of |A_jj| in nu(j), from the top half of the range
    half = max(M // 2, 2)
    with np.errstate(divide="ignore"):
        logs = np.log(np.maximum(np.abs(np.diag(A)), 1e-300))
    order = np.polyfit(np.log(nu[half:]), logs[half:], 1)[0]
    diag_growth_order = float(order)

    rng = np.random.default_rng(seed)
    zeta_ratio = 0.0
    lip_fit = 0.0
    u_fit = 0.0
    v_fit = 0.0
    nu_r0 = mu_weights(M + 1 + JUMP_MASS_BOUND) ** r0v
    for _ in range(samples):
        x = _sample_density(rng, M + 1)
        lhs = 0.0
        for J, rate, _, _, _ in fluid_jumps(model, x):
            lhs += rate * sum(abs(d) * nu_r0[j] for j, d in J.entries)
        s_r1 = moment_S(x, ws.r1)
        zeta_ratio = max(zeta_ratio, lhs / (1.0 + s_r1) ** 2)

        y = _sample_density(rng, M + 1)
        dist = weighted_norm(x - y)
        if dist > 1e-12:
            at_x: dict[tuple, float] = {}
            for J, rate, fam, i, k in fluid_jumps(model, x, include_null=True):
                at_x[(fam, i, k)] = rate
            covered = set()
            for J, rate, fam, i, k in fluid_jumps(model, y, include_null=True):
                covered.add((fam, i, k))
                prev = at_x.get((fam, i, k), 0.0)
                loc = (i + 1.0) ** ws.betas[4]
                lip_fit = max(lip_fit, abs(rate - prev) / (loc * dist))
            for (fam, i, k), rate in at_x.items():
                if (fam, i, k) not in covered:
                    loc = (i + 1.0) ** ws.betas[4]
                    lip_fit = max(lip_fit, rate / (loc * dist))

        for r in (r0v / 2.0, r0v):
            U, V = moment_UV(model, x, r)
            denom = 1.0 + moment_S(x, ws.p(r))
            u_fit = max(u_fit, abs(U) / denom)
            v_fit = max(v_fit, V / denom)

    threshold = ws.moment_threshold
    flags = []
    if not offdiag_nonneg:
        flags.append("negative off-diagonal entry in A")
    if not mu_drift_ok:
        flags.append("weighted drift bound A^T mu <= w mu violated")
    if not mu_growth_ok:
        flags.append("mu exceeds nu^beta3")
    if diag_growth_order > ws.betas[3] + 0.1:
        flags.append("diagonal of A grows faster than nu^beta4")
    if r0v <= threshold:
        flags.append(
            f"r0 = {r0v:g} does not exceed the moment threshold {threshold:g}")
    return AssumptionReport(
        M=M,
        w=model.drift_bound_w(),
        betas=ws.betas,
        r0=r0v,
        offdiag_nonneg=offdiag_nonneg,
        mu_drift_ok=mu_drift_ok,
        mu_drift_worst=mu_drift_worst,
        mu_growth_ok=mu_growth_ok,
        diag_growth_fit=diag_growth_fit,
        diag_growth_order=diag_growth_order,
        zeta_fit=(float(zeta_ratio), 0.0, 2.0),
        lipschitz_fit=float(lip_fit),
        u_bound_fit=float(u_fit),
        v_bound_fit=float(v_fit),
        r0_above_threshold=bool(r0v > threshold),
        threshold=float(threshold),
        flags=flags,
    )
