"""Fixed random reservoirs and their open-loop / closed-loop evolution.

The reservoir is a sparse random recurrent network with a dense input layer
and a bias vector, all drawn once from a seeded generator and frozen.  States
advance by

    r' = (1 - leakage) * r + leakage * tanh(w_r r + w_in u + bias)

either driven by an external signal (open loop) or by the trained readout's
own output (closed loop).  Batched variants evolve many independent runs in
lock step; columns never interact, and each run follows the same recursion
as the single-run functions.
"""

from __future__ import annotations

import zipfile
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import DimensionMismatchError, NonFiniteError, SingularSpectrumError
from .timeseries import TimeSeries

if TYPE_CHECKING:  # pragma: no cover
    from .training import Readout

#: Dense eigensolves are affordable (and used as a fallback) up to this size.
DENSE_EIG_MAX = 300

_ARPACK_TOL = 1e-10
_ARPACK_MAXITER = 10_000


@dataclass(frozen=True)
class ReservoirSpec:
    """Construction parameters for a random reservoir.

    Attributes:
        n_r: Node count.
        mean_degree: Expected in-degree; each ordered node pair is connected
            independently with probability mean_degree / n_r.
        spectral_radius: Target largest absolute eigenvalue of the adjacency
            matrix after rescaling.
        input_strength: Input weights are uniform on [-input_strength, +].
        bias_strength: Biases are uniform on [-bias_strength, +].
        leakage: State mixing coefficient in [0, 1].
        n_in: Input dimension.
        seed: Seed for all construction randomness.
    """

    n_r: int
    mean_degree: float
    spectral_radius: float
    input_strength: float
    bias_strength: float
    leakage: float
    n_in: int
    seed: int

    def __post_init__(self):
        if self.n_r < 1:
            raise ValueError("n_r must be at least 1")
        if not 0.0 < self.mean_degree <= self.n_r:
            raise ValueError("mean_degree must be in (0, n_r]")
        if self.spectral_radius < 0.0:
            raise ValueError("spectral_radius must be non-negative")
        if self.input_strength < 0.0 or self.bias_strength < 0.0:
            raise ValueError("strength ranges must be non-negative")
        if not 0.0 <= self.leakage <= 1.0:
            raise ValueError("leakage must lie in [0, 1]")
        if self.n_in < 1:
            raise ValueError("n_in must be at least 1")


class Reservoir:
    """Frozen weight triple (w_r, w_in, bias) plus the leakage rate.

    Instances are immutable after construction and safe to share across
    parallel runs; every evolution owns its private state vector.
    """

    def __init__(self, w_r: sparse.csr_matrix, w_in: np.ndarray, bias: np.ndarray,
                 leakage: float, spec: ReservoirSpec | None = None):
        w_r = sparse.csr_matrix(w_r, dtype=float)
        w_in = np.array(w_in, dtype=float)
        bias = np.array(bias, dtype=float)
        n_r = w_r.shape[0]
        if w_r.shape != (n_r, n_r):
            raise DimensionMismatchError("w_r must be square")
        if w_in.shape[0] != n_r or w_in.ndim != 2:
            raise DimensionMismatchError("w_in must be (n_r, n_in)")
        if bias.shape != (n_r,):
            raise DimensionMismatchError("bias must be (n_r,)")
        w_r.data.flags.writeable = False
        w_in.flags.writeable = False
        bias.flags.writeable = False
        self.w_r = w_r
        self.w_in = w_in
        self.bias = bias
        self.leakage = float(leakage)
        self.spec = spec

    @property
    def n_r(self) -> int:
        return self.w_r.shape[0]

    @property
    def n_in(self) -> int:
        return self.w_in.shape[1]

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.n_r)

    def __repr__(self) -> str:
        return f"<Reservoir n_r={self.n_r} n_in={self.n_in} leakage={self.leakage}>"


def estimate_spectral_radius(w: sparse.spmatrix, seed: int = 0) -> float:
    """Largest absolute eigenvalue of a sparse matrix.

    Uses an Arnoldi iteration (largest-magnitude mode, tolerance 1e-10,
    at most 10^4 iterations) with a seeded start vector, falling back to a
    dense eigensolve for small matrices or when the iteration fails.
    """
    n = w.shape[0]
    if n <= 2:
        return float(np.max(np.abs(np.linalg.eigvals(w.toarray()))))
    try:
        v0 = np.random.default_rng(seed).random(n)
        vals = splinalg.eigs(w, k=1, which="LM", v0=v0, tol=_ARPACK_TOL,
                             maxiter=_ARPACK_MAXITER, return_eigenvectors=False)
        return float(np.abs(vals[0]))
    except (splinalg.ArpackNoConvergence, splinalg.ArpackError):
        if n <= DENSE_EIG_MAX:
            return float(np.max(np.abs(np.linalg.eigvals(w.toarray()))))
        raise


def build_reservoir(spec: ReservoirSpec) -> Reservoir:
    """Draw the random weight triple and rescale w_r to the target radius.

    Deterministic given ``spec.seed``.  Raises
    :class:`SingularSpectrumError` if the generated matrix cannot be
    rescaled because its spectral radius is numerically zero; the caller
    should retry with a different seed.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_r

    mask = rng.random((n, n)) < spec.mean_degree / n
    weights = rng.uniform(-1.0, 1.0, size=(n, n))
    w_r = sparse.csr_matrix(np.where(mask, weights, 0.0))

    if spec.spectral_radius == 0.0:
        w_r = sparse.csr_matrix((n, n))
    else:
        radius = estimate_spectral_radius(w_r, seed=spec.seed)
        if radius < 1e-12:
            raise SingularSpectrumError(
                f"generated matrix has spectral radius {radius:.3e}; retry with a new seed"
            )
        w_r = w_r * (spec.spectral_radius / radius)

    w_in = rng.uniform(-spec.input_strength, spec.input_strength, size=(n, spec.n_in))
    bias = rng.uniform(-spec.bias_strength, spec.bias_strength, size=n)
    return Reservoir(w_r, w_in, bias, spec.leakage, spec=spec)


def _step(res: Reservoir, state: np.ndarray, u: np.ndarray) -> np.ndarray:
    lam = res.leakage
    return (1.0 - lam) * state + lam * np.tanh(res.w_r @ state + res.w_in @ u + res.bias)


def drive_open_loop(res: Reservoir, signal: TimeSeries | np.ndarray,
                    r0: np.ndarray) -> np.ndarray:
    """Evolve the driven reservoir and return all post-input states.

    ``r0`` is the state before any input is consumed; returned row k is the
    state after consuming sample k, so the output has one row per sample.
    """
    values = signal.values if isinstance(signal, TimeSeries) else np.asarray(signal, float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[1] != res.n_in:
        raise DimensionMismatchError(
            f"signal width {values.shape[1]} does not match reservoir n_in {res.n_in}"
        )
    r0 = np.asarray(r0, dtype=float)
    if r0.shape != (res.n_r,):
        raise DimensionMismatchError(f"r0 must have shape ({res.n_r},)")
    states = np.empty((values.shape[0], res.n_r))
    r = r0
    for k in range(values.shape[0]):
        r = _step(res, r, values[k])
        states[k] = r
    return states


def run_closed_loop(res: Reservoir, readout: "Readout", r_start: np.ndarray,
                    n_steps: int, dt: float = 1.0, t0: float = 0.0) -> TimeSeries:
    """Let the reservoir run on its own readout for ``n_steps`` outputs.

    The first emitted sample is ``w_out @ r_start`` (the one-step forecast
    from the synchronized state); each later sample requires one reservoir
    update that consumes the previous emission.  The loop runs in
    standardized coordinates internally and the returned series is mapped
    back through the readout's standardizer.

    Raises :class:`NonFiniteError` as soon as a state or output leaves the
    finite range, which signals an unstable readout.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    w_out = readout.w_out
    if w_out.shape[1] != res.n_r or w_out.shape[0] != res.n_in:
        raise DimensionMismatchError("readout shape does not match reservoir")
    outputs = np.empty((n_steps, res.n_in))
    r = np.asarray(r_start, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(n_steps):
            u = w_out @ r
            if not np.all(np.isfinite(u)):
                raise NonFiniteError(f"closed-loop output became non-finite at step {k}")
            outputs[k] = u
            if k + 1 < n_steps:
                r = _step(res, r, u)
                if not np.all(np.isfinite(r)):
                    raise NonFiniteError(
                        f"reservoir state became non-finite at step {k + 1}")
    return TimeSeries(readout.standardizer.invert_values(outputs), dt, t0)


def synchronize(res: Reservoir, readout: "Readout", test_signal: TimeSeries) -> np.ndarray:
    """Drive from the zero state through the standardized test signal.

    Returns the final reservoir state, ready for :func:`run_closed_loop`.
    """
    standardized = readout.standardizer.apply(test_signal)
    states = drive_open_loop(res, standardized, res.zero_state())
    return states[-1]


def drive_open_loop_batch(res: Reservoir, inputs: np.ndarray,
                          r0: np.ndarray | None = None) -> np.ndarray:
    """Drive many equal-length signals at once.

    Args:
        inputs: Array of shape (n_runs, n_samples, n_in).
        r0: Optional (n_runs, n_r) start states; zeros when omitted.

    Returns:
        Final states, shape (n_runs, n_r).  Each run follows exactly the
        same recursion as :func:`drive_open_loop`.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 3 or inputs.shape[2] != res.n_in:
        raise DimensionMismatchError("inputs must be (n_runs, n_samples, n_in)")
    n_runs = inputs.shape[0]
    states = np.zeros((res.n_r, n_runs)) if r0 is None else np.array(r0, float).T
    lam = res.leakage
    for k in range(inputs.shape[1]):
        pre = res.w_r @ states + res.w_in @ inputs[:, k, :].T + res.bias[:, None]
        states = (1.0 - lam) * states + lam * np.tanh(pre)
    return states.T


def run_closed_loop_batch(res: Reservoir, readout: "Readout", r_start: np.ndarray,
                          n_steps: int, keep_last: int | None = None) -> np.ndarray:
    """Closed-loop evolution of many runs at once.

    Non-finite runs are not fatal here: a NaN stays confined to its own
    column and the caller can detect it in the returned tail.

    Args:
        r_start: Start states, shape (n_runs, n_r).
        n_steps: Number of emitted samples per run.
        keep_last: If given, only this many trailing samples are stored,
            which bounds memory for long horizons.

    Returns:
        Unstandardized outputs, shape (n_runs, kept, n_in) where kept is
        min(n_steps, keep_last or n_steps).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    kept = n_steps if keep_last is None else min(keep_last, n_steps)
    n_runs = r_start.shape[0]
    w_out = readout.w_out
    out = np.empty((kept, n_runs, res.n_in))
    states = np.array(r_start, dtype=float).T
    lam = res.leakage
    first_kept = n_steps - kept
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(n_steps):
            u = w_out @ states
            if k >= first_kept:
                out[k - first_kept] = u.T
            if k + 1 < n_steps:
                pre = res.w_r @ states + res.w_in @ u + res.bias[:, None]
                states = (1.0 - lam) * states + lam * np.tanh(pre)
    out = np.swapaxes(out, 0, 1)
    return readout.standardizer.invert_values(out)


_RESERVOIR_SCHEMA = "rcbasin-reservoir-1"


def save_reservoir(res: Reservoir, path) -> None:
    """Serialize spec and weights so that loading reproduces bit-identical dynamics."""
    if res.spec is None:
        raise ValueError("only reservoirs built from a ReservoirSpec can be saved")
    arrays = {
        "schema": np.array(_RESERVOIR_SCHEMA),
        "spec": _spec_to_array(res.spec),
        "w_r_data": res.w_r.data,
        "w_r_indices": res.w_r.indices,
        "w_r_indptr": res.w_r.indptr,
        "w_in": res.w_in,
        "bias": res.bias,
    }
    write_npz_deterministic(path, arrays)


def load_reservoir(path) -> Reservoir:
    from .errors import SchemaMismatchError

    with np.load(path, allow_pickle=False) as archive:
        if str(archive["schema"]) != _RESERVOIR_SCHEMA:
            raise SchemaMismatchError(f"unexpected reservoir schema {archive['schema']}")
        spec = _spec_from_array(archive["spec"])
        w_r = sparse.csr_matrix(
            (archive["w_r_data"], archive["w_r_indices"], archive["w_r_indptr"]),
            shape=(spec.n_r, spec.n_r),
        )
        return Reservoir(w_r, archive["w_in"], archive["bias"], spec.leakage, spec=spec)


def _spec_to_array(spec: ReservoirSpec) -> np.ndarray:
    return np.array([spec.n_r, spec.mean_degree, spec.spectral_radius,
                     spec.input_strength, spec.bias_strength, spec.leakage,
                     spec.n_in, spec.seed], dtype=float)


def _spec_from_array(arr: np.ndarray) -> ReservoirSpec:
    return ReservoirSpec(n_r=int(arr[0]), mean_degree=float(arr[1]),
                         spectral_radius=float(arr[2]), input_strength=float(arr[3]),
                         bias_strength=float(arr[4]), leakage=float(arr[5]),
                         n_in=int(arr[6]), seed=int(arr[7]))


def write_npz_deterministic(path, arrays: dict) -> None:
    """Write an .npz archive with fixed zip metadata.

    ``np.savez`` stamps entries with the current time, which breaks the
    byte-identical-rerun contract; this writer pins the timestamps.
    """
    from numpy.lib import format as npformat
    import io

    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            npformat.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())
