"""Projective polarization tomography for one and two qubits.

States are plain complex numpy arrays. Measurement settings are strings of
projector letters, one per qubit, e.g. ``"H"`` or ``"DA"``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError, InvariantError, RankDeficiencyError, UndefinedVisibilityError

_S = 1.0 / np.sqrt(2.0)
KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}
LETTERS = "HVDARL"

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


def check_density(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise InvariantError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if np.linalg.norm(rho - rho.conj().T) >= HERMITIAN_TOL:
        raise InvariantError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise InvariantError("density matrix trace is not 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -PSD_TOL:
        raise InvariantError("density matrix is not positive semidefinite")
    return rho


def ket(label):
    vec = np.array([1.0 + 0j])
    for ch in label:
        vec = np.kron(vec, KETS[ch])
    return vec


def projector(label):
    v = ket(label)
    return np.outer(v, v.conj())


def pure(vec):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def phi_plus(phase=0.0):
    return pure([1.0, 0.0, 0.0, np.exp(1j * phase)])


def maximally_mixed(dim):
    return np.eye(dim, dtype=complex) / dim


def werner(rho, eps):
    dim = rho.shape[0]
    return (1.0 - eps) * rho + eps * maximally_mixed(dim)


def dephased_bell(fidelity, phase=0.0):
    """|Phi+> with partial HH/VV decoherence, tuned to ``fidelity`` with |Phi+>."""
    if not 0.5 <= fidelity <= 1.0:
        raise DomainError("dephasing alone reaches fidelities in [0.5, 1]")
    d = 2.0 * (1.0 - fidelity)
    classical = 0.5 * (projector("HH") + projector("VV"))
    return (1.0 - d) * phi_plus(phase) + d * classical


def settings_for(dim):
    n = {2: 1, 4: 2}.get(dim)
    if n is None:
        raise DomainError(f"unsupported dimension {dim}")
    return ["".join(p) for p in itertools.product(LETTERS, repeat=n)]


@dataclass(frozen=True)
class CountRecord:
    setting: str
    counts: int
    seconds: float = 1.0

    def __post_init__(self):
        if self.counts < 0:
            raise DomainError("counts must be >= 0")
        if not self.seconds > 0:
            raise DomainError("integration time must be > 0")


def probabilities(rho, settings):
    return np.array([np.real(np.trace(projector(s) @ rho)) for s in settings])


def simulate_counts(rho, settings: Sequence[str], expected_total, noise_floor=0.0, seed=0, seconds=60.0):
    """Poisson counts with mean ``expected_total * tr(P rho) + noise_floor`` per setting."""
    rho = check_density(rho)
    if not expected_total > 0:
        raise DomainError("expected total must be > 0")
    mean = expected_total * np.clip(probabilities(rho, settings), 0.0, None) + noise_floor
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean)
    return [CountRecord(s, int(c), float(seconds)) for s, c in zip(settings, counts)]


def expected_records(rho, settings, expected_total, seconds=1.0):
    """Noise-free records: the rounded mean counts."""
    mean = expected_total * np.clip(probabilities(check_density(rho), settings), 0.0, None)
    return [CountRecord(s, int(round(c)), float(seconds)) for s, c in zip(settings, mean)]


def _tril_unpack(x, dim):
    t = np.zeros((dim, dim), dtype=complex)
    rows, cols = np.tril_indices(dim)
    n = rows.size
    t[rows, cols] = x[:n]
    off = rows != cols
    t[rows[off], cols[off]] += 1j * x[n:]
    return t


def _tril_pack(t):
    dim = t.shape[0]
    rows, cols = np.tril_indices(dim)
    off = rows != cols
    return np.concatenate([t[rows, cols].real, t[rows[off], cols[off]].imag])


def _linear_inversion(ops, rates, dim):
    a = np.array([op.reshape(-1) for op in ops])
    vec, *_ = np.linalg.lstsq(a.conj(), rates.astype(complex), rcond=None)
    m = vec.reshape(dim, dim)
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 1e-6 * max(w.max(), 1e-12), None)
    return (v * w) @ v.conj().T


def mle_reconstruct(records: Sequence[CountRecord], dim, tol=1e-10, max_iter=10_000):
    """Maximum-likelihood state under Poisson statistics.

    Parameterises the unnormalised state as ``T^dag T`` with ``T`` lower
    triangular and maximises the likelihood with L-BFGS. Stops when the
    relative objective change drops below ``tol`` or after ``max_iter``
    iterations.
    """
    if dim not in (2, 4):
        raise DomainError(f"unsupported dimension {dim}")
    ops = [projector(r.setting) for r in records]
    if any(op.shape[0] != dim for op in ops):
        raise DomainError("setting labels do not match the dimension")
    a = np.array([op.reshape(-1) for op in ops])
    if np.linalg.matrix_rank(a) < dim * dim:
        raise RankDeficiencyError("measurement settings are not informationally complete")
    n = np.array([r.counts for r in records], dtype=float)
    t_int = np.array([r.seconds for r in records], dtype=float)
    if n.sum() <= 0:
        raise DomainError("no counts recorded")
    stack = np.array(ops)

    guess = _linear_inversion(ops, n / t_int, dim)
    chol = np.linalg.cholesky(guess + 1e-12 * np.eye(dim))
    x0 = _tril_pack(chol)  # guess = L L^dag

    def unpack(x):
        low = _tril_unpack(x, dim)
        return low @ low.conj().T

    def objective(x):
        low = _tril_unpack(x, dim)
        rho_un = low @ low.conj().T
        lam = t_int * np.real(np.einsum("kij,ji->k", stack, rho_un))
        lam = np.maximum(lam, 1e-300)
        f = np.sum(lam - n * np.log(lam))
        g_mat = np.einsum("k,kij->ij", t_int * (1.0 - n / lam), stack)
        grad_low = 2.0 * g_mat @ low
        rows, cols = np.tril_indices(dim)
        off = rows != cols
        grad = np.concatenate([grad_low[rows, cols].real, grad_low[rows[off], cols[off]].imag])
        return f, grad

    res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "maxfun": 4 * max_iter, "ftol": tol,
                            "gtol": 1e-12, "maxcor": 30})
    rho_un = unpack(res.x)
    rho = rho_un / np.real(np.trace(rho_un))
    rho = 0.5 * (rho + rho.conj().T)
    if not res.success and res.nit >= max_iter:
        raise ConvergenceError(f"MLE did not converge: {res.message}", last_iterate=rho)
    return check_density(rho)


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DomainError("fidelity needs states of equal dimension")
    s = _psd_sqrt(rho)
    inner = s @ sigma @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    # round-off eigenvalues (~1e-17) would otherwise add ~1e-8 after the sqrt
    w = np.where(w > 1e-13 * max(w.max(), 0.0), w, 0.0)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def purity(rho):
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def coexistence_state(rho_dark, rates, dark_rates=None):
    """Mix unpolarized noise coincidences into ``rho_dark``.

    Without ``dark_rates`` the whole noise fraction ``1 - V`` of ``rates`` is
    added as white noise. With the dark-fiber prediction given, only the extra
    accidentals are added, since ``rho_dark`` already contains the dark-fiber
    ones.
    """
    rho_dark = check_density(rho_dark)
    total = rates.true_coincidences + 2.0 * rates.multipair_orthogonal + rates.accidentals
    if total <= 0:
        raise UndefinedVisibilityError("zero coincidence rate")
    if dark_rates is None:
        eps = (2.0 * rates.multipair_orthogonal + rates.accidentals) / total
    else:
        eps = max(rates.accidentals - dark_rates.accidentals, 0.0) / total
    dim = rho_dark.shape[0]
    return check_density((1.0 - eps) * rho_dark + eps * maximally_mixed(dim)), eps


def concurrence(rho):
    rho = check_density(rho)
    if rho.shape[0] != 4:
        raise DomainError("concurrence is defined for two qubits")
    yy = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.real(np.linalg.eigvals(r)))[::-1], 0.0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def density_to_dict(rho):
    rho = np.asarray(rho, dtype=complex)
    return {"dimension": int(rho.shape[0]), "real": rho.real.tolist(), "imag": rho.imag.tolist()}


def density_from_dict(d):
    rho = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)
    if rho.shape[0] != d.get("dimension", rho.shape[0]):
        raise DomainError("dimension field does not match matrix")
    return check_density(rho)


def dumps_density(rho):
    return json.dumps(density_to_dict(rho))


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting_label", "counts", "seconds"])
    for r in records:
        w.writerow([r.setting, r.counts, repr(float(r.seconds))])
    return buf.getvalue()


def records_from_csv(text):
    rows = csv.DictReader(io.StringIO(text))
    return [CountRecord(r["setting_label"], int(r["counts"]), float(r["seconds"])) for r in rows]
