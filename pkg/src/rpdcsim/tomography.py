"""Single-qubit polarization tomography through a 2-port device.

Measurement model: three two-outcome bases, each realized by a QWP+HWP
pair that maps the basis onto the device axes, followed by the coupler
whose two output ports are both detected.

Wave-plate settings (QWP angle, HWP angle), for a device at alpha = 0:

    HV: ( 0.0,  0.0 )   D/A: ( 45.0, 22.5 )   R/L: ( 0.0, 67.5 )

Light passes the QWP first, then the HWP. For a device rotated to alpha
the HWP angle shifts by alpha/2, which rotates the analyzed pair onto the
device's slow/fast axes. Outcome 0 is the cross port (slow axis), outcome
1 the bar port.

Reconstruction: linear Stokes inversion (raw differences of the paired
probabilities; may be unphysical on noisy data) and maximum-likelihood
estimation over the Cholesky-style parametrization rho = T^dag T / tr,
which is physical by construction. The likelihood is maximized with a
deterministic Nelder-Mead descent plus a fixed restart schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import RpdcDevice, port_transfer_matrices
from .polarization import (
    DensityMatrix,
    StokesVector,
    cardinal_state,
    density_to_stokes,
    fidelity,
    jones_to_density,
    stokes_to_density,
)
from .birefringence import RotatedRetarder, retarder_jones

BASES = ("HV", "DA", "RL")
BASIS_STATES = {"HV": ("H", "V"), "DA": ("D", "A"), "RL": ("R", "L")}

# (qwp_deg, hwp_deg) mapping each basis pair onto H/V for alpha = 0
BASIS_WAVEPLATES = {"HV": (0.0, 0.0), "DA": (45.0, 22.5), "RL": (0.0, 67.5)}

_TINY = 1e-300


class MleDivergenceError(RuntimeError):
    """MLE failed to converge; `.result` carries the best iterate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class MeasurementRecord:
    """One basis measurement: both port powers, optional photon counts."""

    basis: str
    p0: float
    p1: float
    counts: tuple = None

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")
        if not (math.isfinite(self.p0) and math.isfinite(self.p1)):
            raise ValueError("record powers must be finite")
        if self.p0 < 0 or self.p1 < 0:
            raise ValueError(f"record powers must be >= 0, got "
                             f"({self.p0}, {self.p1})")
        if self.p0 + self.p1 <= 0:
            raise ValueError("record needs p0 + p1 > 0")
        if self.counts is not None:
            n0, n1 = self.counts
            if n0 != int(n0) or n1 != int(n1) or n0 < 0 or n1 < 0:
                raise ValueError(f"counts must be non-negative integers, "
                                 f"got {self.counts!r}")
            object.__setattr__(self, "counts", (int(n0), int(n1)))

    @property
    def weights(self) -> tuple:
        """Likelihood weights: counts when present, else the powers."""
        if self.counts is not None:
            return (float(self.counts[0]), float(self.counts[1]))
        return (self.p0, self.p1)


@dataclass(frozen=True)
class MleConfig:
    """Optimizer knobs; defaults match the convergence contract."""

    xatol: float = 1e-10
    fatol: float = 1e-12
    max_iterations: int = 800
    restarts: int = 3


@dataclass(frozen=True)
class NoiseConfig:
    """counts_per_basis = None keeps records noiseless (the default)."""

    counts_per_basis: float = None
    seed: int = 0

    def __post_init__(self):
        if self.counts_per_basis is not None and self.counts_per_basis <= 0:
            raise ValueError("counts_per_basis must be > 0 or None")


@dataclass(frozen=True)
class TomographyResult:
    """Reconstruction output.

    nll_trace holds the running best negative log-likelihood over the
    whole optimization, one entry per simplex iteration (restarts
    included); it never increases and ends at -log_likelihood.
    """

    rho: DensityMatrix
    stokes: StokesVector
    log_likelihood: float
    iterations: int
    converged: bool
    nll_trace: tuple = ()

    @property
    def physical(self) -> bool:
        return self.rho.is_physical()


def waveplate_settings(basis: str, device_alpha_deg: float = 0.0) -> tuple:
    """(qwp_deg, hwp_deg) mapping `basis` onto a device at the given alpha."""
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}, got {basis!r}")
    qwp, hwp = BASIS_WAVEPLATES[basis]
    return qwp, (hwp + device_alpha_deg / 2.0) % 180.0


def _waveplate_operator(qwp_deg: float, hwp_deg: float) -> np.ndarray:
    qwp = retarder_jones(RotatedRetarder(qwp_deg % 180.0, math.pi / 2))
    hwp = retarder_jones(RotatedRetarder(hwp_deg % 180.0, math.pi))
    return hwp @ qwp


def project_probabilities(rho: DensityMatrix, device: RpdcDevice,
                          settings: tuple) -> tuple:
    """Port powers (p0, p1) for a state analyzed at one plate setting.

    p0 is the cross-port power, p1 the bar-port power; for a lossless
    ideal device these are the Born probabilities of the analyzed basis.
    """
    w = _waveplate_operator(*settings)
    rho_in = w @ rho.matrix @ w.conj().T
    j_t, j_r = port_transfer_matrices(device)
    p0 = float(np.real(np.trace(j_t @ rho_in @ j_t.conj().T)))
    p1 = float(np.real(np.trace(j_r @ rho_in @ j_r.conj().T)))
    return max(p0, 0.0), max(p1, 0.0)


def measure_records(state: DensityMatrix, device: RpdcDevice,
                    noise: NoiseConfig = None) -> tuple:
    """Simulate the full three-basis measurement of one state.

    With counting noise enabled, each port's count is Poisson with mean
    counts_per_basis times the port power, drawn from a generator seeded
    by (noise.seed, basis index); the record powers become frequencies.
    """
    records = []
    for idx, basis in enumerate(BASES):
        settings = waveplate_settings(basis, device.alpha_deg)
        p0, p1 = project_probabilities(state, device, settings)
        if noise is None or noise.counts_per_basis is None:
            records.append(MeasurementRecord(basis, p0, p1))
            continue
        rng = np.random.default_rng([noise.seed, idx])
        n0 = int(rng.poisson(noise.counts_per_basis * p0))
        n1 = int(rng.poisson(noise.counts_per_basis * p1))
        total = n0 + n1
        if total == 0:
            raise ValueError(
                f"basis {basis}: zero total counts at rate "
                f"{noise.counts_per_basis}; raise counts_per_basis")
        records.append(MeasurementRecord(basis, n0 / total, n1 / total,
                                         counts=(n0, n1)))
    return tuple(records)


def _records_by_basis(records) -> dict:
    by_basis = {}
    for rec in records:
        if rec.basis in by_basis:
            raise ValueError(f"duplicate record for basis {rec.basis}")
        by_basis[rec.basis] = rec
    missing = [b for b in BASES if b not in by_basis]
    if missing:
        raise ValueError(f"missing record for basis: {', '.join(missing)}")
    return by_basis


def _weight_vector(by_basis: dict) -> tuple:
    """(w_h, w_v, w_d, w_a, w_r, w_l)."""
    w = []
    for basis in BASES:
        w.extend(by_basis[basis].weights)
    return tuple(w)


def _log_likelihood_of_probs(qs, ws) -> float:
    """sum w log q with 0 log 0 = 0; -inf if q <= 0 where w > 0."""
    ll = 0.0
    for q, w in zip(qs, ws):
        if w == 0.0:
            continue
        if q <= 0.0:
            return -math.inf
        ll += w * math.log(q)
    return ll


def _probs_from_rho(m: np.ndarray) -> tuple:
    r00 = float(np.real(m[0, 0]))
    r11 = float(np.real(m[1, 1]))
    s1 = 2.0 * float(np.real(m[0, 1]))
    s2 = -2.0 * float(np.imag(m[0, 1]))
    return (r00, r11, 0.5 * (1 + s1), 0.5 * (1 - s1),
            0.5 * (1 + s2), 0.5 * (1 - s2))


def linear_reconstruct(records) -> TomographyResult:
    """Direct Stokes inversion of one complete record set.

    s0 is the summed H/V power and s1, s2, s3 the raw paired differences;
    rho follows by the Pauli expansion. Noisy data can land outside the
    Bloch ball; the result is returned as-is (check `.physical`) and the
    reported Stokes vector keeps the raw measured powers.
    """
    by_basis = _records_by_basis(records)
    hv, da, rl = by_basis["HV"], by_basis["DA"], by_basis["RL"]
    stokes = StokesVector(s0=hv.p0 + hv.p1,
                          s1=da.p0 - da.p1,
                          s2=rl.p0 - rl.p1,
                          s3=hv.p0 - hv.p1)
    rho = stokes_to_density(stokes)
    ll = _log_likelihood_of_probs(_probs_from_rho(rho.matrix),
                                  _weight_vector(by_basis))
    return TomographyResult(rho=rho, stokes=stokes, log_likelihood=ll,
                            iterations=0, converged=True)


def _rho_from_params(t: np.ndarray) -> np.ndarray:
    """rho = T^dag T / tr for lower-triangular T = [[t0, 0], [t2+i t3, t1]]."""
    t0, t1, t2, t3 = t
    n = t0 * t0 + t1 * t1 + t2 * t2 + t3 * t3
    return np.array([[t0 * t0 + t2 * t2 + t3 * t3, t1 * (t2 - 1j * t3)],
                     [t1 * (t2 + 1j * t3), t1 * t1]]) / n


def _params_from_rho(m: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Cholesky factor of the eigenvalue-clipped physical part of m."""
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, floor, None)
    phys = (vecs * vals) @ vecs.conj().T
    phys /= np.trace(phys).real
    c = np.linalg.cholesky(phys)
    # lower-triangular: [[c00, 0], [c10, c11]] with real diagonal
    return np.array([c[0, 0].real, c[1, 1].real, c[1, 0].real, c[1, 0].imag])


def _nelder_mead(f, x0, xatol, fatol, maxiter, trace):
    """Minimize f over plain float lists; returns (x, fx, nit, success).

    Standard reflection/expansion/contraction/shrink coefficients
    (1, 2, 0.5, 0.5); terminates when both the simplex spread (max
    coordinate distance to the best vertex) is <= xatol and the value
    spread is <= fatol. Appends the running best value to `trace` once
    per iteration. Kept dependency-free: the tomography fuzz budget
    needs a few hundred microseconds per solve, which general-purpose
    minimizers do not reach on a 4-parameter problem.
    """
    n = len(x0)
    sim = [list(x0)]
    for i in range(n):
        v = list(x0)
        v[i] = v[i] * 1.05 if v[i] != 0.0 else 0.00025
        sim.append(v)
    fs = [f(v) for v in sim]

    nit = 0
    while nit < maxiter:
        order = sorted(range(n + 1), key=fs.__getitem__)
        sim = [sim[j] for j in order]
        fs = [fs[j] for j in order]
        trace.append(fs[0])

        x_spread = max(abs(sim[j][i] - sim[0][i])
                       for j in range(1, n + 1) for i in range(n))
        if x_spread <= xatol and fs[-1] - fs[0] <= fatol:
            return sim[0], fs[0], nit, True
        nit += 1

        centroid = [sum(sim[j][i] for j in range(n)) / n for i in range(n)]
        worst = sim[-1]
        xr = [2.0 * centroid[i] - worst[i] for i in range(n)]
        fr = f(xr)
        if fr < fs[0]:
            xe = [3.0 * centroid[i] - 2.0 * worst[i] for i in range(n)]
            fe = f(xe)
            sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = [1.5 * centroid[i] - 0.5 * worst[i] for i in range(n)]
            else:
                xc = [0.5 * centroid[i] + 0.5 * worst[i] for i in range(n)]
            fc = f(xc)
            if fc < min(fr, fs[-1]):
                sim[-1], fs[-1] = xc, fc
            else:
                for j in range(1, n + 1):
                    sim[j] = [0.5 * (sim[j][i] + sim[0][i])
                              for i in range(n)]
                    fs[j] = f(sim[j])
    order = sorted(range(n + 1), key=fs.__getitem__)
    trace.append(fs[order[0]])
    return sim[order[0]], fs[order[0]], nit, False


def mle_reconstruct(records, config: MleConfig = MleConfig()) -> TomographyResult:
    """Maximum-likelihood density matrix for one complete record set.

    Minimizes the negative log-likelihood over the 4 real Cholesky
    parameters, starting from the clipped linear estimate, with a fixed
    schedule of perturbed restarts if the simplex stalls. The returned
    state is the lowest-likelihood-cost point seen across attempts;
    `converged` reports whether a descent met both tolerances.

    Raises:
        MleDivergenceError: no attempt met the tolerances; the exception's
            `result` field holds the best iterate (converged=False).
    """
    by_basis = _records_by_basis(records)
    ws = _weight_vector(by_basis)
    w_h, w_v, w_d, w_a, w_r, w_l = ws
    # rho is invariant under rescaling all four parameters, which leaves
    # the likelihood flat along that ray and can stall the simplex; the
    # quadratic term pins the normalization at 1 without moving the
    # optimum in rho (any state is reachable at n = 1, penalty zero)
    gauge = sum(ws)

    def nll(t):
        t0, t1, t2, t3 = t
        n = t0 * t0 + t1 * t1 + t2 * t2 + t3 * t3
        if n <= 0.0 or not math.isfinite(n):
            return math.inf
        r00 = (t0 * t0 + t2 * t2 + t3 * t3) / n
        r11 = (t1 * t1) / n
        # rho01 = t1 (t2 - i t3)/n, so s1/2 = t1 t2/n and s2/2 = t1 t3/n
        half_s1 = t1 * t2 / n
        half_s2 = t1 * t3 / n
        q_d = 0.5 + half_s1
        q_a = 0.5 - half_s1
        q_r = 0.5 + half_s2
        q_l = 0.5 - half_s2
        out = gauge * (n - 1.0) * (n - 1.0)
        if w_h:
            out -= w_h * math.log(r00 if r00 > _TINY else _TINY)
        if w_v:
            out -= w_v * math.log(r11 if r11 > _TINY else _TINY)
        if w_d:
            out -= w_d * math.log(q_d if q_d > _TINY else _TINY)
        if w_a:
            out -= w_a * math.log(q_a if q_a > _TINY else _TINY)
        if w_r:
            out -= w_r * math.log(q_r if q_r > _TINY else _TINY)
        if w_l:
            out -= w_l * math.log(q_l if q_l > _TINY else _TINY)
        return out

    linear = linear_reconstruct(records)
    x = list(_params_from_rho(linear.rho.matrix))
    raw_trace = []
    total_iterations = 0
    converged = False
    best = nll(x)
    # fixed multiplicative perturbations keep the restart schedule
    # deterministic; the first attempt runs from the linear estimate and
    # each restart perturbs the best point found so far
    for scale in (1.0, 1.05, 0.8, 1.3)[:min(config.restarts, 3) + 1]:
        x0 = [scale * v for v in x]
        xb, fb, nit, success = _nelder_mead(
            nll, x0, config.xatol, config.fatol, config.max_iterations,
            raw_trace)
        total_iterations += nit
        if fb <= best:
            x, best = xb, fb
        if success:
            converged = True
            break

    nll_trace = []
    seen = math.inf
    for v in raw_trace:
        seen = v if v < seen else seen
        nll_trace.append(seen)

    rho = DensityMatrix(_rho_from_params(np.asarray(x)))
    result = TomographyResult(rho=rho,
                              stokes=density_to_stokes(rho),
                              log_likelihood=-best,
                              iterations=total_iterations,
                              converged=converged,
                              nll_trace=tuple(nll_trace))
    if not converged:
        raise MleDivergenceError(
            f"MLE did not converge within {config.restarts} restarts "
            f"({total_iterations} iterations)", result)
    return result


def run_tomography_experiment(true_state: DensityMatrix, device: RpdcDevice,
                              noise: NoiseConfig = None,
                              config: MleConfig = MleConfig()) -> tuple:
    """Measure, reconstruct by MLE, and score against the true state."""
    records = measure_records(true_state, device, noise)
    result = mle_reconstruct(records, config)
    return fidelity(result.rho, true_state), result


def cardinal_density(label: str) -> DensityMatrix:
    return jones_to_density(cardinal_state(label))


def load_measurement_csv(path) -> tuple:
    """Read records from `basis,p0,p1` CSV (optional n0,n1 columns)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows = [(i + 1, line.strip()) for i, line in enumerate(lines)
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty measurement file")
    header_no, header = rows[0]
    cols = [c.strip() for c in header.split(",")]
    if cols != ["basis", "p0", "p1"] and cols != ["basis", "p0", "p1",
                                                  "n0", "n1"]:
        raise ValueError(f"{path}:{header_no}: expected header "
                         f"'basis,p0,p1[,n0,n1]', got {header!r}")
    with_counts = len(cols) == 5
    records = []
    for line_no, line in rows[1:]:
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != len(cols):
            raise ValueError(f"{path}:{line_no}: expected {len(cols)} "
                             f"columns, got {len(parts)}")
        try:
            p0, p1 = float(parts[1]), float(parts[2])
            counts = ((int(parts[3]), int(parts[4])) if with_counts
                      else None)
            records.append(MeasurementRecord(parts[0], p0, p1, counts))
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: {exc}") from None
    return tuple(records)


def save_measurement_csv(records, path, header_comment: str = "") -> None:
    with_counts = all(r.counts is not None for r in records)
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("basis,p0,p1,n0,n1" if with_counts else "basis,p0,p1")
    for r in records:
        row = f"{r.basis},{r.p0!r},{r.p1!r}"
        if with_counts:
            row += f",{r.counts[0]},{r.counts[1]}"
        lines.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def result_to_dict(result: TomographyResult, fidelity_value=None) -> dict:
    """JSON-ready reconstruction report (rho row-major as [re, im] pairs)."""
    rho = [[float(z.real), float(z.imag)] for z in result.rho.matrix.ravel()]
    return {
        "rho": rho,
        "stokes": list(result.stokes.as_tuple()),
        "fidelity": (None if fidelity_value is None else float(fidelity_value)),
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
    }
