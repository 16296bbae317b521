"""Attractor classification, basin metrics, and KL divergence estimation.

Fixed-point systems use a tail test (or an energy-barrier test when the full
state and a potential barrier are available); chaotic systems compare the
empirical state distribution of a trajectory tail against reference
attractor distributions with a Kullback-Leibler divergence estimated from
Gaussian kernel mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateCloudError, DimensionMismatchError
from .systems import CHAOTIC, FIXED_POINT, AttractorDescriptor, SystemDef
from .timeseries import TimeSeries

#: Sentinel labels returned by the classifiers alongside attractor indices.
SPURIOUS = "spurious"
UNRESOLVED = "unresolved"

#: Outcome categories of a prediction compared against the truth.
CORRECT = "correct"
WRONG = "wrong"
CATEGORIES = (CORRECT, WRONG, SPURIOUS, UNRESOLVED)

Label = Union[int, str]


@dataclass(frozen=True)
class ConvergenceCriteria:
    """Thresholds of the convergence tests.

    Attributes:
        eps_c: Distance threshold for the fixed-point tail test.
        tail_len: Number of trailing samples that must all sit within eps_c.
        energy_barrier: Energy level separating the wells; enables the
            energy test for fully observed states when the system defines
            an energy function.
        kl_threshold: Divergence threshold below which a trajectory tail is
            assigned to a chaotic attractor.
        kl_tail: Number of trailing samples forming the empirical tail
            distribution.
    """

    eps_c: float
    tail_len: int = 25
    energy_barrier: float | None = None
    kl_threshold: float | None = None
    kl_tail: int = 500

    def __post_init__(self):
        if self.eps_c <= 0.0:
            raise ValueError("eps_c must be positive")
        if self.tail_len < 1:
            raise ValueError("tail_len must be at least 1")
        if self.kl_tail < 2:
            raise ValueError("kl_tail must be at least 2")


@dataclass(frozen=True)
class BasinOutcome:
    """Category of one prediction plus the predicted attractor, if any."""

    category: str
    attractor: int | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown outcome category {self.category!r}")
        if self.category in (CORRECT, WRONG) and self.attractor is None:
            raise ValueError(f"{self.category} outcomes must name an attractor")


def make_outcome(predicted: Label, truth: int) -> BasinOutcome:
    """Combine a predicted label and a true basin label into an outcome."""
    if predicted == SPURIOUS:
        return BasinOutcome(SPURIOUS)
    if predicted == UNRESOLVED:
        return BasinOutcome(UNRESOLVED)
    if predicted == truth:
        return BasinOutcome(CORRECT, attractor=int(predicted))
    return BasinOutcome(WRONG, attractor=int(predicted))


def classify_fixed_point(traj: TimeSeries, sys: SystemDef, crit: ConvergenceCriteria,
                         full_state: bool = False,
                         components: Sequence[int] | None = None) -> Label:
    """Decide which fixed-point attractor (if any) a trajectory reached.

    The candidate is the attractor nearest the final point.  With the full
    state, a defined energy function, and a barrier level, convergence means
    the final energy is below the barrier; otherwise all of the last
    ``tail_len`` samples must lie within ``eps_c`` of the candidate.  A tail
    that has settled (every sample within eps_c of the tail mean) farther
    than eps_c from every true attractor is reported as ``SPURIOUS``;
    anything else is ``UNRESOLVED``.

    Args:
        components: State components carried by ``traj`` when it is a
            partial observation; defaults to the leading components.
    """
    if traj.n_samples < crit.tail_len:
        raise ValueError(f"need at least {crit.tail_len} samples to classify")
    values = traj.values
    if components is None:
        components = tuple(range(values.shape[1]))
    if len(components) != values.shape[1]:
        raise DimensionMismatchError("components must match trajectory width")
    locations = sys.attractor_locations(components)

    tail = values[-crit.tail_len:]
    if not np.all(np.isfinite(tail)):
        return UNRESOLVED
    end = values[-1]
    candidate = int(np.argmin(np.linalg.norm(locations - end, axis=1)))

    use_energy = (full_state and sys.energy is not None
                  and crit.energy_barrier is not None
                  and values.shape[1] == sys.dim)
    if use_energy:
        converged = bool(sys.energy(end) < crit.energy_barrier)
    else:
        converged = bool(
            np.all(np.linalg.norm(tail - locations[candidate], axis=1) <= crit.eps_c))
    if converged:
        return candidate

    center = tail.mean(axis=0)
    settled = np.all(np.linalg.norm(tail - center, axis=1) <= crit.eps_c)
    far_from_all = np.all(np.linalg.norm(locations - center, axis=1) > crit.eps_c)
    if settled and far_from_all:
        return SPURIOUS
    return UNRESOLVED


def classify_chaotic(traj: TimeSeries, refs: Sequence[AttractorDescriptor],
                     crit: ConvergenceCriteria,
                     rng: np.random.Generator | None = None) -> Label:
    """Assign a trajectory tail to the nearest reference attractor by divergence.

    Computes the divergence of each reference distribution relative to the
    distribution of the last ``kl_tail`` samples and assigns the minimizer
    when it falls below ``kl_threshold``.
    """
    if crit.kl_threshold is None:
        raise ValueError("criteria carry no kl_threshold")
    if traj.n_samples < crit.kl_tail:
        raise ValueError(f"need at least {crit.kl_tail} samples to classify")
    tail = traj.values[-crit.kl_tail:]
    if not np.all(np.isfinite(tail)):
        return UNRESOLVED
    divergences = []
    for ref in refs:
        if ref.kind != CHAOTIC:
            raise ValueError("references must be chaotic attractors")
        divergences.append(kl_divergence_safe(ref.reference, tail, rng=rng))
    best = int(np.argmin(divergences))
    if divergences[best] < crit.kl_threshold:
        return best
    return UNRESOLVED


def _log_mixture_density(queries: np.ndarray, centers: np.ndarray,
                         bandwidth: float) -> np.ndarray:
    """Exact log density of an equal-weight isotropic Gaussian mixture.

    Evaluated through logsumexp so that far-away queries yield very negative
    finite values rather than underflowing to zero.
    """
    d = centers.shape[1]
    sq = (
        np.sum(queries**2, axis=1)[:, None]
        - 2.0 * queries @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    log_kernel = -sq / (2.0 * bandwidth**2)
    log_norm = np.log(centers.shape[0]) + 0.5 * d * np.log(2.0 * np.pi * bandwidth**2)
    return logsumexp(log_kernel, axis=1) - log_norm


def kl_divergence(ref_samples: np.ndarray, test_samples: np.ndarray,
                  n_samples: int = 1000, sigma_scale: float = 1.0,
                  eps: float = 1e-10, rng: np.random.Generator | None = None,
                  scale_floor: float = 0.0) -> float:
    """Monte Carlo divergence of the test distribution relative to the reference.

    Both point sets are mapped into the coordinates in which the reference
    set has zero mean and unit variance per component; each set is then
    modeled as an equal-weight Gaussian kernel mixture with isotropic
    bandwidth ``sigma_scale``.  Smoothing at the scale of the reference
    spread makes the estimate insensitive to sample count, so two windows of
    the same attractor score near zero while separated sets score roughly
    half their squared standardized distance.  ``n_samples`` draws from the
    reference mixture estimate the mean log density ratio; densities are
    evaluated exactly in log space, with ``eps`` as a last-resort floor for
    genuinely zero densities.

    Raises :class:`DegenerateCloudError` when the reference set has a
    zero-variance component (all points identical there) and no
    ``scale_floor`` is given to substitute for it.
    """
    ref = np.atleast_2d(np.asarray(ref_samples, dtype=float))
    test = np.atleast_2d(np.asarray(test_samples, dtype=float))
    if ref.shape[0] < 2 or test.shape[0] < 2:
        raise ValueError("both sample sets need at least 2 points")
    if ref.shape[1] != test.shape[1]:
        raise DimensionMismatchError("sample sets must share a dimension")
    if sigma_scale <= 0.0:
        raise ValueError("sigma_scale must be positive")
    if rng is None:
        rng = np.random.default_rng(0)

    center = ref.mean(axis=0)
    spread = ref.std(axis=0)
    if np.any(spread == 0.0):
        if scale_floor > 0.0:
            spread = np.maximum(spread, scale_floor)
        else:
            raise DegenerateCloudError(
                "reference set is degenerate along some component")
    ref = (ref - center) / spread
    test = (test - center) / spread
    bandwidth = sigma_scale

    picks = rng.integers(0, ref.shape[0], size=n_samples)
    draws = ref[picks] + bandwidth * rng.standard_normal((n_samples, ref.shape[1]))

    log_p_ref = _log_mixture_density(draws, ref, bandwidth)
    log_p_test = _log_mixture_density(draws, test, bandwidth)
    log_eps = np.log(eps)
    log_p_ref[~np.isfinite(log_p_ref)] = log_eps
    log_p_test[~np.isfinite(log_p_test)] = log_eps
    return float(np.mean(log_p_ref - log_p_test))


def kl_divergence_safe(ref_samples: np.ndarray, test_samples: np.ndarray,
                       rng: np.random.Generator | None = None, **kwargs) -> float:
    """Like :func:`kl_divergence`, substituting an eps scale when the
    reference cloud is degenerate along some component."""
    try:
        return kl_divergence(ref_samples, test_samples, rng=rng, **kwargs)
    except DegenerateCloudError:
        return kl_divergence(ref_samples, test_samples, rng=rng,
                             scale_floor=1e-10, **kwargs)


@dataclass(frozen=True)
class PerBasinMetrics:
    basin: int
    n_true: int
    f_c: float
    false_negative_rate: float
    false_positive_rate: float


@dataclass(frozen=True)
class BasinMetrics:
    """Aggregate and per-basin scores of a batch of predictions.

    The four fractions partition the predictions, so they sum to one.
    """

    n: int
    f_c: float
    f_wrong: float
    f_spurious: float
    f_unresolved: float
    per_basin: tuple[PerBasinMetrics, ...]

    def as_flat_dict(self) -> dict[str, float]:
        flat = {
            "n": self.n,
            "f_c": self.f_c,
            "f_wrong": self.f_wrong,
            "f_spurious": self.f_spurious,
            "f_unresolved": self.f_unresolved,
        }
        for pb in self.per_basin:
            flat[f"basin{pb.basin}_n_true"] = pb.n_true
            flat[f"basin{pb.basin}_f_c"] = pb.f_c
            flat[f"basin{pb.basin}_fnr"] = pb.false_negative_rate
            flat[f"basin{pb.basin}_fpr"] = pb.false_positive_rate
        return flat


def score(outcomes: Sequence[BasinOutcome], truth: Sequence[int]) -> BasinMetrics:
    """Fraction correct, spurious rate, and per-basin error rates.

    Per-basin fraction correct conditions on the true basin; the false
    positive rate for basin b counts predictions of b whose truth differs,
    over all cells whose truth differs.
    """
    if len(outcomes) != len(truth):
        raise DimensionMismatchError("outcomes and truth must align")
    n = len(outcomes)
    truth = np.asarray(truth, dtype=int)
    cats = np.array([o.category for o in outcomes])
    predicted = np.array([-1 if o.attractor is None else o.attractor for o in outcomes])

    f_c = float(np.mean(cats == CORRECT)) if n else 0.0
    f_wrong = float(np.mean(cats == WRONG)) if n else 0.0
    f_spurious = float(np.mean(cats == SPURIOUS)) if n else 0.0
    f_unresolved = float(np.mean(cats == UNRESOLVED)) if n else 0.0

    per_basin = []
    for basin in sorted(b for b in np.unique(truth) if b >= 0):
        in_basin = truth == basin
        n_true = int(np.sum(in_basin))
        fc_b = float(np.mean(cats[in_basin] == CORRECT))
        others = ~in_basin
        fp = float(np.mean(predicted[others] == basin)) if np.any(others) else 0.0
        per_basin.append(PerBasinMetrics(basin=int(basin), n_true=n_true, f_c=fc_b,
                                         false_negative_rate=1.0 - fc_b,
                                         false_positive_rate=fp))
    return BasinMetrics(n=n, f_c=f_c, f_wrong=f_wrong, f_spurious=f_spurious,
                        f_unresolved=f_unresolved, per_basin=tuple(per_basin))


def nearest_magnet_baseline(test_signals: Sequence[TimeSeries],
                            sys: SystemDef) -> np.ndarray:
    """Guess the attractor nearest the state at the end of each test signal.

    Distances are taken in the observed components (the leading state
    components carried by the signals).  Ties break to the lowest attractor
    index.
    """
    if any(a.kind != FIXED_POINT for a in sys.attractors):
        raise ValueError("baseline requires fixed-point attractors")
    width = test_signals[0].n_components
    locations = sys.attractor_locations(range(width))
    labels = np.empty(len(test_signals), dtype=int)
    for i, signal in enumerate(test_signals):
        end = signal.values[-1]
        labels[i] = int(np.argmin(np.linalg.norm(locations - end, axis=1)))
    return labels
