"""Block entropy functionals of process models.

Everything is exact (enumeration, transfer-matrix powers, max-product
dynamic programming) except the plug-in corpus estimator and the declared
Monte Carlo estimator for finite-context conditional entropies.  Values are
in nats; 0 log 0 = 0 and zero-probability blocks contribute nothing for
positive orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InputError
from .sequence import Sequence, concat
from .processes import (
    IIDProcess,
    HiddenMarkovProcess,
    MarkovProcess,
    PeriodicProcess,
    ProcessModel,
    UniformlyDitheredProcess,
)

__all__ = [
    "DEFAULT_BUDGET",
    "renyi_block_entropy",
    "conditional_renyi_entropy",
    "conditional_renyi_entropy_mc",
    "conditional_min_entropy",
    "plugin_entropy_from_corpus",
    "entropy_rate",
    "entropy_chain",
    "conditional_order_skew",
    "EntropyCurve",
    "entropy_curve",
]

DEFAULT_BUDGET = 2**24

INF = float("inf")


def _check_gamma(gamma) -> float:
    if gamma == INF:
        return INF
    gamma = float(gamma)
    if gamma < 0 or math.isnan(gamma):
        raise InputError(f"entropy order must be >= 0 or inf, got {gamma}")
    return gamma


def _renyi_of_probs(q: np.ndarray, gamma: float) -> float:
    """Rényi entropy of a probability multiset (zeros allowed)."""
    q = q[q > 0]
    if q.size == 0:
        raise InputError("no positive probabilities")
    if gamma == 0:
        return math.log(q.size)
    if gamma == 1:
        return float(-(q * np.log(q)).sum())
    if gamma == INF:
        return float(-math.log(q.max()))
    return math.log(float((q**gamma).sum())) / (1.0 - gamma)


def _log_big(x: int) -> float:
    if x <= 0:
        raise ValueError("log of nonpositive count")
    b = x.bit_length() - 53
    if b <= 0:
        return math.log(x)
    return math.log(x >> b) + b * math.log(2.0)


def _budget_blocks(alphabet_size: int, n: int, budget: int) -> None:
    if alphabet_size**n > budget:
        raise CapabilityError(
            f"enumeration over {alphabet_size}^{n} blocks exceeds the budget of {budget}"
        )


def _oracle_model(model: ProcessModel) -> ProcessModel:
    """Unwrap a dithered model to its exact hidden-chain view."""
    if isinstance(model, UniformlyDitheredProcess):
        if model._hidden is None:
            raise CapabilityError("dithered base process has no exact oracle")
        return model._hidden
    return model


def dense_block_probs(model: ProcessModel, n: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Probabilities of all alphabet_size**n blocks in lexicographic order
    (last symbol varies fastest)."""
    if n < 0:
        raise InputError("block length must be >= 0")
    model = _oracle_model(model)
    s = model.alphabet_size
    _budget_blocks(s, n, budget)
    if n == 0:
        return np.ones(1)
    if isinstance(model, IIDProcess):
        probs = model.probs.copy()
        for _ in range(n - 1):
            probs = (probs[:, None] * model.probs[None, :]).ravel()
        return probs
    if isinstance(model, MarkovProcess):
        probs = model.initial.copy()
        for t in range(1, n):
            last = np.arange(s**t) % s
            probs = (probs[:, None] * model.transition[last, :]).ravel()
        return probs
    if isinstance(model, HiddenMarkovProcess):
        alphas = model.emission.T * model.initial[None, :]  # (s, m)
        for _ in range(1, n):
            beta = alphas @ model.transition
            alphas = (beta[:, None, :] * model.emission.T[None, :, :]).reshape(
                -1, model.num_states
            )
        return alphas.sum(axis=1)
    if isinstance(model, PeriodicProcess):
        support = _periodic_support(model, n)
        probs = np.zeros(s**n)
        codes = (support["blocks"] * (s ** np.arange(n - 1, -1, -1))[None, :]).sum(axis=1)
        probs[codes] = support["probs"]
        return probs
    raise CapabilityError(f"{model.kind} model has no exact probability oracle")


def _periodic_support(model: PeriodicProcess, n: int) -> dict:
    p = model.period_length
    idx = (np.arange(p)[:, None] + np.arange(n)[None, :]) % p
    blocks = model.period[idx]
    uniq, counts = np.unique(blocks, axis=0, return_counts=True)
    return {"blocks": uniq, "probs": counts / p}


def block_prob_multiset(model: ProcessModel, n: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Positive block probabilities only; cheap for periodic models at any n."""
    model = _oracle_model(model)
    if isinstance(model, PeriodicProcess):
        return _periodic_support(model, n)["probs"] if n else np.ones(1)
    q = dense_block_probs(model, n, budget)
    return q[q > 0]


# ---------------------------------------------------------------------------
# transfer-matrix and DP methods for markov chains
# ---------------------------------------------------------------------------


def _markov_renyi_matrix_power(model: MarkovProcess, n: int, gamma: float) -> float:
    """(1/(1-gamma)) log sum_w P(w)^gamma via powers of the entrywise-gamma kernel."""
    tg = model.transition**gamma
    v = model.initial**gamma
    logscale = 0.0
    for _ in range(n - 1):
        v = v @ tg
        peak = v.max()
        if peak == 0.0:
            raise InputError("no block has positive probability")
        v = v / peak
        logscale += math.log(peak)
    return (logscale + math.log(float(v.sum()))) / (1.0 - gamma)


def _markov_support_count(model: MarkovProcess, n: int) -> int:
    """Exact count of positive-probability blocks (integer arithmetic)."""
    s = model.alphabet_size
    adj = (model.transition > 0).astype(object)
    v = [1 if pi > 0 else 0 for pi in model.initial]
    for _ in range(n - 1):
        v = [
            sum(v[a] * adj[a, b] for a in range(s))
            for b in range(s)
        ]
    return int(sum(v))


def _max_plus(v: np.ndarray, log_t: np.ndarray) -> np.ndarray:
    return (v[:, None] + log_t).max(axis=0)


def _markov_min_entropy(model: MarkovProcess, n: int) -> float:
    with np.errstate(divide="ignore"):
        log_pi = np.log(model.initial)
        log_t = np.log(model.transition)
    v = log_pi
    for _ in range(n - 1):
        v = _max_plus(v, log_t)
    return -float(v.max())


def _markov_shannon(model: MarkovProcess, n: int) -> float:
    return _renyi_of_probs(model.initial, 1.0) + (n - 1) * entropy_rate(model)


# ---------------------------------------------------------------------------
# the entropy family
# ---------------------------------------------------------------------------


def _renyi_with_method(
    model: ProcessModel, n: int, gamma, method: str = "auto", budget: int = DEFAULT_BUDGET
) -> tuple[float, str]:
    gamma = _check_gamma(gamma)
    if n < 0:
        raise InputError("block length must be >= 0")
    if n == 0:
        return 0.0, "closed-form"
    oracle = _oracle_model(model)
    if method == "auto":
        if isinstance(oracle, IIDProcess):
            method = "closed-form"
        elif isinstance(oracle, MarkovProcess):
            method = {
                0.0: "support-count",
                1.0: "closed-form",
                INF: "max-product-dp",
            }.get(gamma, "matrix-power")
        else:
            method = "enumeration"
    if method == "closed-form":
        if isinstance(oracle, IIDProcess):
            return n * _renyi_of_probs(oracle.probs, gamma), method
        if isinstance(oracle, MarkovProcess) and gamma == 1.0:
            return _markov_shannon(oracle, n), method
        raise CapabilityError("no closed form for this model and order")
    if method == "support-count":
        if not isinstance(oracle, MarkovProcess) or gamma != 0.0:
            raise CapabilityError("support counting applies to markov at order 0")
        return _log_big(_markov_support_count(oracle, n)), method
    if method == "max-product-dp":
        if not isinstance(oracle, MarkovProcess) or gamma != INF:
            raise CapabilityError("max-product applies to markov at infinite order")
        return _markov_min_entropy(oracle, n), method
    if method == "matrix-power":
        if not isinstance(oracle, MarkovProcess) or gamma in (0.0, 1.0, INF):
            raise CapabilityError(
                "transfer-matrix powers apply to markov at finite orders not in {0, 1}"
            )
        return _markov_renyi_matrix_power(oracle, n, gamma), method
    if method == "enumeration":
        return _renyi_of_probs(block_prob_multiset(model, n, budget), gamma), method
    raise InputError(f"unknown method {method!r}")


def renyi_block_entropy(
    model: ProcessModel, n: int, gamma, method: str = "auto", budget: int = DEFAULT_BUDGET
) -> float:
    """Block Rényi entropy of order gamma in nats.

    gamma = 0, 1 and inf select the Hartley, Shannon and min-entropy limits
    by their closed forms rather than numerical limits.
    """
    return _renyi_with_method(model, n, gamma, method, budget)[0]


def conditional_renyi_entropy(
    model: ProcessModel,
    n: int,
    gamma: float,
    context_mode: str = "infinite_reduced",
    context_length: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Conditional block Rényi entropy of order gamma > 1 given the past.

    infinite_reduced: the conditional law given the whole past collapses to
    a finite statistic (iid: nothing; markov: the previous symbol; periodic:
    the phase).  finite: condition on exactly `context_length` preceding
    symbols and enumerate them.
    """
    gamma = float(gamma)
    if gamma <= 1.0 or math.isinf(gamma):
        raise InputError("conditional order must be finite and > 1")
    if n < 0:
        raise InputError("block length must be >= 0")
    if n == 0:
        return 0.0
    oracle = _oracle_model(model)
    if context_mode == "infinite_reduced":
        if isinstance(oracle, IIDProcess):
            return n * _renyi_of_probs(oracle.probs, gamma)
        if isinstance(oracle, MarkovProcess):
            tg = oracle.transition**gamma
            v = np.ones(oracle.alphabet_size)
            logscale = 0.0
            for _ in range(n):
                v = tg @ v
                peak = v.max()
                v /= peak
                logscale += math.log(peak)
            mean = float(oracle.initial @ v)
            return (logscale + math.log(mean)) / (1.0 - gamma)
        if isinstance(oracle, PeriodicProcess):
            return 0.0
        raise CapabilityError(
            f"conditional law of a {oracle.kind} model does not reduce to a finite statistic"
        )
    if context_mode == "finite":
        if context_length is None or context_length < 0:
            raise InputError("finite mode needs context_length >= 0")
        return _finite_context_renyi(model, n, gamma, context_length, budget)
    raise InputError(f"unknown context mode {context_mode!r}")


def _finite_context_renyi(
    model: ProcessModel, n: int, gamma: float, context_length: int, budget: int
) -> float:
    s = model.alphabet_size
    _budget_blocks(s, context_length + n, budget)
    joint = dense_block_probs(model, context_length + n, budget)
    ctx = dense_block_probs(model, context_length, budget)
    rows = joint.reshape(len(ctx), -1)
    mask = ctx > 0
    cond = rows[mask] / ctx[mask, None]
    mean = float((ctx[mask] * (cond**gamma).sum(axis=1)).sum())
    return math.log(mean) / (1.0 - gamma)


def conditional_renyi_entropy_mc(
    model: ProcessModel,
    n: int,
    gamma: float,
    context_length: int,
    replicas: int,
    seed: int,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, float]:
    """Monte Carlo estimate of the finite-context conditional Rényi entropy.

    Contexts are sampled from the model; the inner block sum is exact.
    Returns (estimate, standard error); the estimate is biased by the outer
    log and must not be presented as exact.
    """
    gamma = float(gamma)
    if gamma <= 1.0 or math.isinf(gamma):
        raise InputError("conditional order must be finite and > 1")
    if replicas < 2:
        raise InputError("need at least 2 replicas")
    s = model.alphabet_size
    _budget_blocks(s, n, budget)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    contexts = model.sample_batch(replicas, context_length, rng)
    words = [Sequence(w, s) for w in _all_blocks(s, n)]
    g = np.empty(replicas)
    for i in range(replicas):
        ctx = Sequence(contexts[i], s)
        lc = model.block_log_prob(ctx)
        total = 0.0
        for w in words:
            lj = model.block_log_prob(concat(ctx, w))
            if lj > -INF:
                total += math.exp(gamma * (lj - lc))
        g[i] = total
    mean = float(g.mean())
    se_mean = float(g.std(ddof=1) / math.sqrt(replicas))
    value = math.log(mean) / (1.0 - gamma)
    se = se_mean / (mean * (gamma - 1.0))
    return value, se


def _all_blocks(s: int, n: int) -> np.ndarray:
    codes = np.arange(s**n)
    out = np.empty((s**n, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        out[:, j] = codes % s
        codes //= s
    return out


def conditional_min_entropy(model: ProcessModel, n: int, budget: int = DEFAULT_BUDGET) -> float:
    """-log of the largest conditional block probability given the past.

    For hidden-chain models the conditioning statistic is the hidden state,
    which upper-bounds the true conditional probability, so the returned
    value is a certified lower bound on the conditional min-entropy.
    """
    if n < 0:
        raise InputError("block length must be >= 0")
    if n == 0:
        return 0.0
    oracle = _oracle_model(model)
    if isinstance(oracle, IIDProcess):
        return -n * math.log(float(oracle.probs.max()))
    if isinstance(oracle, MarkovProcess):
        with np.errstate(divide="ignore"):
            log_t = np.log(oracle.transition)
        support = oracle.initial > 0
        v = np.where(support[:, None], log_t, -INF).max(axis=0)
        for _ in range(n - 1):
            v = _max_plus(v, log_t)
        return -float(v.max())
    if isinstance(oracle, HiddenMarkovProcess):
        _budget_blocks(oracle.alphabet_size, n, budget)
        best = 0.0
        for x0 in np.flatnonzero(oracle.initial > 0):
            start = oracle.transition[x0]
            alphas = oracle.emission.T * start[None, :]
            for _ in range(1, n):
                beta = alphas @ oracle.transition
                alphas = (beta[:, None, :] * oracle.emission.T[None, :, :]).reshape(
                    -1, oracle.num_states
                )
            best = max(best, float(alphas.sum(axis=1).max()))
        return -math.log(best)
    if isinstance(oracle, PeriodicProcess):
        return 0.0
    raise CapabilityError(f"{oracle.kind} model is not supported")


def plugin_entropy_from_corpus(x: Sequence, k: int, gamma) -> float:
    """Rényi entropy of the empirical distribution of overlapping k-blocks.

    A biased estimator, intended for exploratory corpus curves only.
    """
    gamma = _check_gamma(gamma)
    if k < 1 or k > len(x):
        raise InputError(f"block length must lie in [1, {len(x)}], got {k}")
    windows = np.lib.stride_tricks.sliding_window_view(x.symbols, k)
    _, counts = np.unique(windows, axis=0, return_counts=True)
    return _renyi_of_probs(counts / counts.sum(), gamma)


def entropy_rate(model: ProcessModel) -> float:
    """Shannon entropy rate in nats per symbol (iid and markov closed forms)."""
    oracle = _oracle_model(model)
    if isinstance(oracle, IIDProcess):
        return _renyi_of_probs(oracle.probs, 1.0)
    if isinstance(oracle, MarkovProcess):
        total = 0.0
        for pi_s, row in zip(oracle.initial, oracle.transition):
            if pi_s > 0:
                total += pi_s * _renyi_of_probs(row, 1.0)
        return total
    raise CapabilityError(f"no closed-form entropy rate for a {oracle.kind} model")


def entropy_chain(
    model: ProcessModel, n: int, gamma: float, budget: int = DEFAULT_BUDGET
) -> dict[str, float]:
    """All members of the ordering chain at one block length.

    For every gamma > 1:  cond_min <= cond_renyi <= n * rate <= shannon <= hartley.
    """
    return {
        "cond_min": conditional_min_entropy(model, n, budget),
        "cond_renyi": conditional_renyi_entropy(model, n, gamma, budget=budget),
        "rate_times_n": n * entropy_rate(model),
        "shannon": renyi_block_entropy(model, n, 1.0, budget=budget),
        "hartley": renyi_block_entropy(model, n, 0.0, budget=budget),
    }


def conditional_order_skew(
    model: ProcessModel, n: int, gamma: float, budget: int = DEFAULT_BUDGET
) -> tuple[float, float]:
    """Data point for the order-skew question: returns (conditional Rényi,
    gamma/(gamma-1) times conditional min-entropy).  The first may exceed
    the second; callers record, not assert."""
    lhs = conditional_renyi_entropy(model, n, gamma, budget=budget)
    rhs = gamma / (gamma - 1.0) * conditional_min_entropy(model, n, budget)
    return lhs, rhs


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

_FUNCTIONALS = {
    "hartley": 0.0,
    "shannon": 1.0,
    "renyi": None,
    "min": INF,
    "cond_renyi": None,
    "cond_min": None,
    "tilde_cond_renyi": None,
}


@dataclass
class EntropyCurve:
    """Values of one entropy functional over a grid of block lengths."""

    functional: str
    gamma: float | None
    points: list[tuple[int, float]]
    method: str
    model: str = ""

    def __post_init__(self):
        if any(v < -1e-12 for _, v in self.points):
            raise InputError("entropy values must be nonnegative")

    def to_rows(self) -> list[dict]:
        return [
            {
                "functional": self.functional,
                "gamma": "" if self.gamma is None else self.gamma,
                "n": n,
                "value_nats": v,
                "method": self.method,
            }
            for n, v in self.points
        ]


def entropy_curve(
    model: ProcessModel,
    functional: str,
    n_grid: list[int],
    gamma: float | None = None,
    context_length: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> EntropyCurve:
    if functional not in _FUNCTIONALS:
        raise InputError(f"unknown functional {functional!r}; choose from {sorted(_FUNCTIONALS)}")
    fixed = _FUNCTIONALS[functional]
    if fixed is not None:
        gamma = fixed
    points: list[tuple[int, float]] = []
    method = ""
    for n in n_grid:
        if functional == "cond_min":
            value, method = conditional_min_entropy(model, n, budget), "max-product-dp"
        elif functional == "cond_renyi":
            if gamma is None:
                raise InputError("cond_renyi needs a gamma")
            value, method = (
                conditional_renyi_entropy(model, n, gamma, budget=budget),
                "infinite-reduced",
            )
        elif functional == "tilde_cond_renyi":
            if gamma is None or context_length is None:
                raise InputError("tilde_cond_renyi needs gamma and context_length")
            value, method = (
                conditional_renyi_entropy(
                    model, n, gamma, "finite", context_length, budget
                ),
                "finite-context",
            )
        else:
            if gamma is None:
                raise InputError(f"{functional} needs a gamma")
            value, method = _renyi_with_method(model, n, gamma, "auto", budget)
        points.append((n, value))
    label = None if functional in ("cond_min",) else gamma
    return EntropyCurve(functional, label, points, method, model.kind)
