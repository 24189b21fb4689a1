"""Stochastic source models.

Every model owns a reproducible sampler (explicit integer seeds, PCG64);
kinds with tractable structure additionally expose exact block and
conditional block probabilities in nats.  Models are immutable after
construction, so concurrent sampling with distinct seeds is safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ConfigError, DomainError, InputError
from .sequence import Sequence, concat

__all__ = [
    "ProcessModel",
    "IIDProcess",
    "MarkovProcess",
    "HiddenMarkovProcess",
    "UniformlyDitheredProcess",
    "PeriodicProcess",
    "EmpiricalPermutationProcess",
    "ModelDiagnostics",
    "hmm_finite_energy_constant",
    "doeblin_check",
    "stationary_distribution",
    "model_from_dict",
    "load_model",
    "save_model",
]

_PROB_ATOL = 1e-12
_STATIONARY_ATOL = 1e-9

NEG_INF = float("-inf")


def _validate_dist(vec: np.ndarray, what: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1:
        raise ConfigError(f"{what} must be a vector")
    if (vec < 0).any():
        raise ConfigError(f"{what} has negative entries")
    if abs(vec.sum() - 1.0) > _PROB_ATOL:
        raise ConfigError(f"{what} sums to {vec.sum()!r}, not 1")
    return vec


def _validate_stochastic(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ConfigError(f"{what} must be a matrix")
    for i, row in enumerate(mat):
        _validate_dist(row, f"{what} row {i}")
    return mat


def _log(vec: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(vec)


def stationary_distribution(transition: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Stationary row vector by damped power iteration.

    Iterates pi <- pi (I + T)/2, which shares fixed points with T but is
    aperiodic, so the iteration settles even for cyclic chains.
    """
    t = np.asarray(transition, dtype=float)
    m = t.shape[0]
    pi = np.full(m, 1.0 / m)
    for _ in range(1_000_000):
        nxt = 0.5 * (pi + pi @ t)
        if np.abs(nxt - pi).sum() < tol:
            pi = nxt
            break
        pi = nxt
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _cumulative(vec_or_rows: np.ndarray) -> np.ndarray:
    cum = np.cumsum(vec_or_rows, axis=-1)
    cum[..., -1] = 1.0  # guard against 1e-16 shortfall so u < 1 always lands
    return cum


def _inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    ix = np.searchsorted(cum, u, side="right")
    return np.minimum(ix, len(cum) - 1)


class ProcessModel:
    """Common sampling plumbing; probability oracles are kind-specific."""

    kind: str = "abstract"

    def __init__(self, alphabet_size: int):
        if alphabet_size < 1:
            raise ConfigError(f"alphabet_size must be positive, got {alphabet_size}")
        self.alphabet_size = int(alphabet_size)

    # -- sampling -----------------------------------------------------------

    def sample(self, n: int, seed: int) -> Sequence:
        """Deterministic draw of X_1..X_n for the given seed."""
        if n < 0:
            raise InputError(f"sample length must be >= 0, got {n}")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        return Sequence(self._draw_batch(rng, 1, n)[0], self.alphabet_size)

    def sample_batch(self, replicas: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """(replicas, n) int64 array of independent draws from one generator."""
        if n < 0 or replicas < 0:
            raise InputError("replicas and length must be >= 0")
        return self._draw_batch(rng, replicas, n)

    def _draw_batch(self, rng: np.random.Generator, replicas: int, n: int) -> np.ndarray:
        raise NotImplementedError

    # -- exact probabilities --------------------------------------------------

    @property
    def supports_exact_probs(self) -> bool:
        return False

    def block_log_prob(self, w: Sequence) -> float:
        """log P(X_1..X_k = w) under the stationary law, in nats."""
        raise CapabilityError(f"{self.kind} model has no exact probability oracle")

    def conditional_block_log_prob(self, w: Sequence, context: Sequence) -> float:
        """log P(block = w | preceding block = context)."""
        if len(context) == 0:
            return self.block_log_prob(w)
        lc = self.block_log_prob(context)
        if lc == NEG_INF:
            raise DomainError("conditioning on a zero-probability context")
        return self.block_log_prob(concat(context, w)) - lc

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(alphabet_size={self.alphabet_size})"


class IIDProcess(ProcessModel):
    """Independent draws from one category distribution."""

    kind = "iid"

    def __init__(self, probs):
        probs = _validate_dist(probs, "category probabilities")
        super().__init__(len(probs))
        self.probs = probs
        self._cum = _cumulative(probs)
        self._logp = _log(probs)

    @classmethod
    def uniform(cls, alphabet_size: int) -> "IIDProcess":
        return cls(np.full(alphabet_size, 1.0 / alphabet_size))

    def _draw_batch(self, rng, replicas, n):
        u = rng.random((replicas, n))
        return _inverse_cdf(self._cum, u)

    @property
    def supports_exact_probs(self) -> bool:
        return True

    def block_log_prob(self, w: Sequence) -> float:
        return float(self._logp[w.symbols].sum()) if len(w) else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "probs": self.probs.tolist()}


class MarkovProcess(ProcessModel):
    """First-order chain over the observable alphabet (state = last symbol)."""

    kind = "markov"

    def __init__(self, transition, initial=None, stationary: bool = True):
        transition = _validate_stochastic(transition, "transition matrix")
        super().__init__(transition.shape[0])
        if transition.shape[0] != transition.shape[1]:
            raise ConfigError("transition matrix must be square")
        self.transition = transition
        self.stationary = bool(stationary)
        if initial is None:
            self.initial = stationary_distribution(transition)
        else:
            self.initial = _validate_dist(initial, "initial distribution")
            if stationary:
                drift = np.abs(self.initial @ transition - self.initial).max()
                if drift > _STATIONARY_ATOL:
                    raise ConfigError(
                        f"initial distribution drifts by {drift:.3e} under the kernel; "
                        "pass stationary=False or fix the distribution"
                    )
        self._cum_initial = _cumulative(self.initial)
        self._cum_rows = _cumulative(self.transition)
        self._log_initial = _log(self.initial)
        self._log_t = _log(self.transition)

    def _draw_batch(self, rng, replicas, n):
        out = np.empty((replicas, n), dtype=np.int64)
        if n == 0 or replicas == 0:
            return out
        state = _inverse_cdf(self._cum_initial, rng.random(replicas))
        out[:, 0] = state
        for t in range(1, n):
            rows = self._cum_rows[state]
            u = rng.random(replicas)
            state = np.minimum(
                (u[:, None] < rows).argmax(axis=1), self.alphabet_size - 1
            )
            out[:, t] = state
        return out

    @property
    def supports_exact_probs(self) -> bool:
        return True

    def block_log_prob(self, w: Sequence) -> float:
        if len(w) == 0:
            return 0.0
        a = w.symbols
        return float(self._log_initial[a[0]] + self._log_t[a[:-1], a[1:]].sum())

    def conditional_block_log_prob(self, w: Sequence, context: Sequence) -> float:
        if len(context) == 0:
            return self.block_log_prob(w)
        if self.block_log_prob(context) == NEG_INF:
            raise DomainError("conditioning on a zero-probability context")
        if len(w) == 0:
            return 0.0
        a = w.symbols
        first = self._log_t[context[len(context) - 1], a[0]]
        return float(first + self._log_t[a[:-1], a[1:]].sum())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "transition": self.transition.tolist(),
            "initial": self.initial.tolist(),
            "stationary": self.stationary,
        }


class HiddenMarkovProcess(ProcessModel):
    """Observable emitted from a hidden chain: P(Y_i = y | X_i = x) = emission[x, y]."""

    kind = "hidden_markov"

    def __init__(self, transition, emission, initial=None, stationary: bool = True):
        transition = _validate_stochastic(transition, "hidden transition matrix")
        emission = _validate_stochastic(emission, "emission matrix")
        if transition.shape[0] != transition.shape[1]:
            raise ConfigError("hidden transition matrix must be square")
        if emission.shape[0] != transition.shape[0]:
            raise ConfigError("emission rows must match the hidden state count")
        super().__init__(emission.shape[1])
        self.transition = transition
        self.emission = emission
        self.num_states = transition.shape[0]
        self.stationary = bool(stationary)
        if initial is None:
            self.initial = stationary_distribution(transition)
        else:
            self.initial = _validate_dist(initial, "hidden initial distribution")
            if stationary:
                drift = np.abs(self.initial @ transition - self.initial).max()
                if drift > _STATIONARY_ATOL:
                    raise ConfigError(
                        f"hidden initial distribution drifts by {drift:.3e}; "
                        "pass stationary=False or fix the distribution"
                    )
        self._cum_initial = _cumulative(self.initial)
        self._cum_rows = _cumulative(self.transition)
        self._cum_emit = _cumulative(self.emission)

    def _draw_batch(self, rng, replicas, n):
        out = np.empty((replicas, n), dtype=np.int64)
        if n == 0 or replicas == 0:
            return out
        state = _inverse_cdf(self._cum_initial, rng.random(replicas))
        for t in range(n):
            if t > 0:
                rows = self._cum_rows[state]
                state = np.minimum(
                    (rng.random(replicas)[:, None] < rows).argmax(axis=1),
                    self.num_states - 1,
                )
            erows = self._cum_emit[state]
            out[:, t] = np.minimum(
                (rng.random(replicas)[:, None] < erows).argmax(axis=1),
                self.alphabet_size - 1,
            )
        return out

    @property
    def supports_exact_probs(self) -> bool:
        return True

    def forward(self, w: Sequence, start: np.ndarray | None = None) -> float:
        """Scaled forward recursion; returns log P(w) from the given hidden start law."""
        if len(w) == 0:
            return 0.0
        alpha = (self.initial if start is None else start) * self.emission[:, w[0]]
        logprob = 0.0
        for t in range(1, len(w)):
            total = alpha.sum()
            if total == 0.0:
                return NEG_INF
            logprob += math.log(total)
            alpha = ((alpha / total) @ self.transition) * self.emission[:, w[t]]
        total = alpha.sum()
        if total == 0.0:
            return NEG_INF
        return logprob + math.log(total)

    def block_log_prob(self, w: Sequence) -> float:
        return self.forward(w)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "transition": self.transition.tolist(),
            "emission": self.emission.tolist(),
            "initial": self.initial.tolist(),
            "stationary": self.stationary,
        }


class UniformlyDitheredProcess(ProcessModel):
    """X_i = W_i + Z_i (mod alphabet size) with an IID dither Z.

    The dither's largest point mass must stay below 1; the declared bound c
    certifies it.  Exact probabilities are available for iid and markov base
    processes via an equivalent hidden-chain view.
    """

    kind = "uniformly_dithered"

    def __init__(self, base: ProcessModel, dither, dither_bound: float | None = None):
        dither = _validate_dist(dither, "dither distribution")
        if len(dither) != base.alphabet_size:
            raise ConfigError("dither must live on the base alphabet")
        super().__init__(base.alphabet_size)
        peak = float(dither.max())
        if peak >= 1.0:
            raise ConfigError("dither has a unit point mass; no dithering at all")
        if dither_bound is None:
            dither_bound = peak
        if not (peak <= dither_bound < 1.0):
            raise ConfigError(
                f"declared dither bound {dither_bound} must lie in [{peak}, 1)"
            )
        self.base = base
        self.dither = dither
        self.dither_bound = float(dither_bound)
        self._cum_dither = _cumulative(dither)
        s = self.alphabet_size
        # emission[w, y] = P(Z = y - w mod s)
        self._emit = dither[(np.arange(s)[None, :] - np.arange(s)[:, None]) % s]
        self._hidden = self._hidden_view()

    def _hidden_view(self) -> ProcessModel | None:
        if isinstance(self.base, IIDProcess):
            marginal = self.base.probs @ self._emit
            return IIDProcess(marginal / marginal.sum())
        if isinstance(self.base, MarkovProcess):
            return HiddenMarkovProcess(
                self.base.transition,
                self._emit,
                initial=self.base.initial,
                stationary=self.base.stationary,
            )
        return None

    def _draw_batch(self, rng, replicas, n):
        w = self.base._draw_batch(rng, replicas, n)
        z = _inverse_cdf(self._cum_dither, rng.random((replicas, n)))
        return (w + z) % self.alphabet_size

    @property
    def supports_exact_probs(self) -> bool:
        return self._hidden is not None

    def block_log_prob(self, w: Sequence) -> float:
        if self._hidden is None:
            raise CapabilityError(
                "exact probabilities need an iid or markov base process"
            )
        return self._hidden.block_log_prob(w)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "base": self.base.to_dict(),
            "dither": self.dither.tolist(),
            "dither_bound": self.dither_bound,
        }


class PeriodicProcess(ProcessModel):
    """A fixed period repeated forever, observed from a uniformly random phase."""

    kind = "periodic_random_phase"

    def __init__(self, period, alphabet_size: int | None = None):
        period = np.asarray(
            period.symbols if isinstance(period, Sequence) else period, dtype=np.int64
        )
        if period.size == 0:
            raise ConfigError("period must be nonempty")
        if alphabet_size is None:
            alphabet_size = int(period.max()) + 1
        super().__init__(alphabet_size)
        if period.min() < 0 or period.max() >= alphabet_size:
            raise ConfigError("period symbols out of alphabet range")
        self.period = period
        self.period_length = int(period.size)

    def _draw_batch(self, rng, replicas, n):
        p = self.period_length
        phases = rng.integers(0, p, size=replicas)
        idx = (phases[:, None] + np.arange(n)[None, :]) % p
        return self.period[idx]

    @property
    def supports_exact_probs(self) -> bool:
        return True

    def _matched_phases(self, w: Sequence) -> int:
        p = self.period_length
        if len(w) == 0:
            return p
        idx = (np.arange(p)[:, None] + np.arange(len(w))[None, :]) % p
        return int((self.period[idx] == w.symbols[None, :]).all(axis=1).sum())

    def block_log_prob(self, w: Sequence) -> float:
        count = self._matched_phases(w)
        return math.log(count / self.period_length) if count else NEG_INF

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period.tolist(),
            "alphabet_size": self.alphabet_size,
        }


class EmpiricalPermutationProcess(ProcessModel):
    """Uniformly random permutation of a fixed source sequence (no oracle)."""

    kind = "empirical_permutation"

    def __init__(self, source: Sequence):
        super().__init__(source.alphabet_size)
        self.source = source

    def _draw_batch(self, rng, replicas, n):
        if n > len(self.source):
            raise InputError(
                f"cannot draw {n} symbols from a source of length {len(self.source)}"
            )
        out = np.empty((replicas, n), dtype=np.int64)
        for r in range(replicas):
            out[r] = rng.permutation(self.source.symbols)[:n]
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "source": self.source.tolist(),
            "alphabet_size": self.alphabet_size,
        }


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelDiagnostics:
    """Certified constants for the finite-energy and one-step-bound checks."""

    finite_energy_c: float | None = None
    finite_energy_K: float | None = None
    doeblin_d: float | None = None
    doeblin_D: float | None = None
    doeblin_r: int | None = None

    @property
    def finite_energy(self) -> bool:
        return self.finite_energy_c is not None and self.finite_energy_c < 1.0

    @property
    def lower_bound_holds(self) -> bool:
        """Uniform lower bound d > 0 on r-step conditional symbol probabilities."""
        return self.doeblin_d is not None and self.doeblin_d > 0.0

    @property
    def upper_bound_holds(self) -> bool:
        """Uniform upper bound D < 1 on r-step conditional symbol probabilities."""
        return self.doeblin_D is not None and self.doeblin_D < 1.0


def hmm_finite_energy_constant(model: HiddenMarkovProcess) -> float:
    """max over hidden x and observable y of P(Y_i = y | X_{i-1} = x).

    The process is certified finite energy with K = 1 exactly when the
    returned constant is below 1.
    """
    if not isinstance(model, HiddenMarkovProcess):
        raise CapabilityError("finite-energy constant is defined for hidden-chain models")
    return float((model.transition @ model.emission).max())


def doeblin_check(model: ProcessModel, r: int) -> ModelDiagnostics:
    """Uniform bounds on the r-step conditional symbol law.

    The conditioning runs over the model's finite sufficient statistic: the
    previous symbol for a markov chain, the hidden state for a hidden-chain
    model (a conservative reduction), nothing for iid.  Only states with
    positive stationary mass are considered.
    """
    if r < 1:
        raise InputError(f"step count must be >= 1, got {r}")
    if isinstance(model, IIDProcess):
        kernel = model.probs[None, :]
        support = np.array([True])
    elif isinstance(model, MarkovProcess):
        kernel = np.linalg.matrix_power(model.transition, r)
        support = model.initial > 0
    elif isinstance(model, HiddenMarkovProcess):
        kernel = np.linalg.matrix_power(model.transition, r) @ model.emission
        support = model.initial > 0
    else:
        raise CapabilityError(
            f"{model.kind} model has no finite conditional sufficient statistic"
        )
    rows = kernel[support]
    d = float(rows.min())
    big_d = float(rows.max())
    fe_c = fe_k = None
    if big_d < 1.0:
        # P(block | past) <= D**(n/r - 1): energy constant D**(1/r), prefactor 1/D
        fe_c = big_d ** (1.0 / r)
        fe_k = 1.0 / big_d
    return ModelDiagnostics(
        doeblin_d=d,
        doeblin_D=big_d,
        doeblin_r=r,
        finite_energy_c=fe_c,
        finite_energy_K=fe_k,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_KINDS = {}


def model_from_dict(spec: dict) -> ProcessModel:
    """Rebuild a model from its to_dict form."""
    try:
        kind = spec["kind"]
    except (TypeError, KeyError):
        raise ConfigError("model spec must be a mapping with a 'kind' entry") from None
    if kind == "iid":
        return IIDProcess(spec["probs"])
    if kind == "markov":
        return MarkovProcess(
            spec["transition"], spec.get("initial"), spec.get("stationary", True)
        )
    if kind == "hidden_markov":
        return HiddenMarkovProcess(
            spec["transition"],
            spec["emission"],
            spec.get("initial"),
            spec.get("stationary", True),
        )
    if kind == "uniformly_dithered":
        return UniformlyDitheredProcess(
            model_from_dict(spec["base"]), spec["dither"], spec.get("dither_bound")
        )
    if kind == "periodic_random_phase":
        return PeriodicProcess(spec["period"], spec.get("alphabet_size"))
    if kind == "empirical_permutation":
        return EmpiricalPermutationProcess(
            Sequence(spec["source"], spec["alphabet_size"])
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def load_model(path) -> ProcessModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model: ProcessModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
