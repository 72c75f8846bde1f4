"""Generalized eigensolvers for the assembled pencil K w = lambda M w.

K is positive semidefinite with a large kernel (the discretely
divergence-free fields, physical eigenvalue zero) and M is positive
definite whenever the stabilization weight is positive. Both solver paths
work on the shifted positive definite pencil:

* dense: eigendecomposition of (K + M, M), eigenvalues minus one, kernel
  cluster split off by a relative threshold. A zero stabilization weight
  routes to a QZ factorization that tolerates a singular M.
* shift-invert: the equivalent pencil M v = mu (K + M) v with
  mu = 1/(1 + lambda) is definite on both sides, so Lanczos iterations at
  the transformed shift mu0 = 1/(1 + sigma_shift) enumerate the eigenvalues
  just above sigma_shift in increasing order while the kernel sits isolated
  at mu = 1. The factorized matrix is exactly K - sigma_shift * M.

Eigenvectors are returned M-orthonormal with the largest-magnitude entry
made positive; the kernel cluster never mixes into them because the two
pencils share eigenvectors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import GlobalSystem

__all__ = [
    "EigenOptions",
    "Spectrum",
    "solve",
    "solve_dense",
    "solve_shift_invert",
    "pressure_field",
    "displacement_at_centroids",
]


@dataclass
class EigenOptions:
    """Knobs of the eigenvalue solve."""

    modes: int = 5
    method: str = "auto"            # auto | dense | si
    sigma_shift: float = 4.0        # raw (unscaled) shift for the si path
    dense_cutoff: int = 6000
    zero_threshold_rel: float = 1e-8
    si_extra: int = 2               # extra Lanczos modes as a safety buffer
    probe_below_shift: bool = True  # certify nothing hides in (0, sigma_shift)
    maxiter: int = 20000


@dataclass
class Spectrum:
    """Positive part of the computed spectrum plus kernel diagnostics."""

    eigenvalues: np.ndarray             # ascending, kernel cluster removed
    vectors: np.ndarray                 # (n, modes), M-orthonormal when M is PD
    kernel_multiplicity: int | None     # None when the solver cannot see the kernel
    kernel_eigenvalues: np.ndarray      # the cluster members (dense paths only)
    zero_threshold: float
    residuals: np.ndarray               # ||K v - lambda M v|| per returned mode
    residual_bounds: np.ndarray         # (||K|| + |lambda| ||M||) ||v|| per mode
    method: str
    below_shift: float | None = None    # smallest eigenvalue seen below the shift
    solve_seconds: float = 0.0

    @property
    def scaled(self) -> np.ndarray:
        """Eigenvalues divided by pi^2, the normalization of the test cavity."""
        return self.eigenvalues / np.pi**2


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def _residuals(K, M, lam, vecs):
    nk = spla.norm(K, np.inf) if sp.issparse(K) else np.linalg.norm(K, np.inf)
    nm = spla.norm(M, np.inf) if sp.issparse(M) else np.linalg.norm(M, np.inf)
    res = np.empty(len(lam))
    bound = np.empty(len(lam))
    for j, l in enumerate(lam):
        v = vecs[:, j]
        res[j] = np.linalg.norm(K @ v - l * (M @ v))
        bound[j] = (nk + abs(l) * nm) * np.linalg.norm(v)
    return res, bound


def solve_dense(system: GlobalSystem, opts: EigenOptions | None = None) -> Spectrum:
    """Full dense solve; splits the kernel cluster and returns the positive modes."""
    opts = opts or EigenOptions()
    n = system.n_dofs
    if n > opts.dense_cutoff:
        raise ValueError(f"dense path limited to n <= {opts.dense_cutoff}, got {n}")
    t0 = time.perf_counter()
    K = system.K.toarray()
    M = system.M.toarray()

    singular_m = system.sigma == 0.0
    if not singular_m:
        values = sla.eigh(K + M, M, eigvals_only=True) - 1.0
        lam_max = float(values.max())
        thr = opts.zero_threshold_rel * max(lam_max, 1.0)
        kernel = values[np.abs(values) <= thr]
        pos = values[values > thr]
        kdim = len(kernel)
        m = min(opts.modes, len(pos))
        _, vecs = sla.eigh(K + M, M, subset_by_index=[kdim, kdim + m - 1])
        method = "dense"
    else:
        w, vr = sla.eig(K, M)
        real = np.isfinite(w) & (np.abs(w.imag) <= 1e-8 * (1.0 + np.abs(w.real)))
        values = np.sort(w[real].real)
        vr = vr[:, real][:, np.argsort(w[real].real)]
        lam_max = float(values.max())
        thr = opts.zero_threshold_rel * max(lam_max, 1.0)
        kernel = values[np.abs(values) <= thr]
        posmask = values > thr
        pos = values[posmask]
        kdim = len(kernel)
        m = min(opts.modes, len(pos))
        vecs = vr[:, posmask][:, :m].real
        vecs /= np.linalg.norm(vecs, axis=0)
        method = "dense_qz"

    lam = pos[:m].copy()
    vecs = _sign_fix(np.ascontiguousarray(vecs))
    res, bound = _residuals(system.K, system.M, lam, vecs)
    return Spectrum(
        eigenvalues=lam,
        vectors=vecs,
        kernel_multiplicity=kdim,
        kernel_eigenvalues=kernel,
        zero_threshold=thr,
        residuals=res,
        residual_bounds=bound,
        method=method,
        solve_seconds=time.perf_counter() - t0,
    )


def solve_shift_invert(system: GlobalSystem, opts: EigenOptions | None = None) -> Spectrum:
    """Lanczos shift-invert enumeration of the eigenvalues above the shift.

    Requires a positive stabilization weight (M positive definite). The
    shift must sit strictly between the kernel and the modes of interest;
    a factorization failure (shift hitting an eigenvalue) retries with a
    slightly perturbed shift before giving up.
    """
    opts = opts or EigenOptions()
    if system.sigma <= 0.0:
        raise ValueError("shift-invert path needs a positive stabilization weight")
    if opts.sigma_shift <= 0.0:
        raise ValueError("the shift must be positive to separate the kernel")
    n = system.n_dofs
    want = opts.modes + opts.si_extra
    if want >= n - 1:
        raise ValueError("mesh too small for the Lanczos path, use the dense solver")
    t0 = time.perf_counter()
    K = system.K.tocsc()
    M = system.M.tocsc()
    B = (K + M).tocsc()

    shift = opts.sigma_shift
    lu = None
    for attempt in range(3):
        try:
            lu = spla.splu(K - shift * M)
            break
        except RuntimeError:
            shift *= 1.0 + 0.05 * (attempt + 1)
    if lu is None:
        raise RuntimeError("factorization of K - shift*M failed for perturbed shifts")
    mu0 = 1.0 / (1.0 + shift)
    opinv = spla.LinearOperator((n, n), matvec=lambda x: (-1.0 / mu0) * lu.solve(x), dtype=float)
    v0 = np.ones(n)

    try:
        mu, vecs = spla.eigsh(
            M, k=want, M=B, sigma=mu0, mode="normal", which="SA",
            v0=v0, OPinv=opinv, maxiter=opts.maxiter,
        )
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues) < opts.modes:
            raise
        mu, vecs = exc.eigenvalues, exc.eigenvectors
    lam = 1.0 / mu - 1.0
    order = np.argsort(lam)
    lam = lam[order][: opts.modes]
    vecs = vecs[:, order][:, : opts.modes]

    # vectors come back (K+M)-orthonormal; rescale to the M inner product
    for j in range(vecs.shape[1]):
        vecs[:, j] /= np.sqrt(vecs[:, j] @ (M @ vecs[:, j]))
    vecs = _sign_fix(vecs)

    below = None
    if opts.probe_below_shift:
        try:
            mu_hi, _ = spla.eigsh(
                M, k=1, M=B, sigma=mu0, mode="normal", which="LA",
                v0=v0, OPinv=opinv, maxiter=opts.maxiter,
            )
            below = float(1.0 / mu_hi[0] - 1.0)
        except spla.ArpackNoConvergence:
            below = None

    res, bound = _residuals(K, M, lam, vecs)
    lam_ref = max(float(lam.max()), 1.0) if len(lam) else 1.0
    return Spectrum(
        eigenvalues=lam,
        vectors=vecs,
        kernel_multiplicity=None,
        kernel_eigenvalues=np.array([]),
        zero_threshold=opts.zero_threshold_rel * lam_ref,
        residuals=res,
        residual_bounds=bound,
        method="shift_invert",
        below_shift=below,
        solve_seconds=time.perf_counter() - t0,
    )


def solve(system: GlobalSystem, opts: EigenOptions | None = None) -> Spectrum:
    """Route to the dense or shift-invert path by size and stabilization."""
    opts = opts or EigenOptions()
    if opts.method == "dense":
        return solve_dense(system, opts)
    if opts.method == "si":
        return solve_shift_invert(system, opts)
    if opts.method != "auto":
        raise ValueError(f"unknown method {opts.method!r}")
    if system.sigma == 0.0 or system.n_dofs <= opts.dense_cutoff:
        return solve_dense(system, opts)
    return solve_shift_invert(system, opts)


def pressure_field(system: GlobalSystem, vec: np.ndarray) -> np.ndarray:
    """Cellwise monomial coefficients of the pressure p_h = -div(w_h)."""
    out = []
    for ci in range(system.mesh.n_cells):
        ops = system.local_ops(ci)
        out.append(-ops.divergence_coeffs(system.local_dof_values(ci, vec)))
    return np.array(out)


def displacement_at_centroids(system: GlobalSystem, vec: np.ndarray) -> np.ndarray:
    """Projected displacement field evaluated at each cell centroid."""
    out = np.empty((system.mesh.n_cells, 2))
    for ci in range(system.mesh.n_cells):
        ops = system.local_ops(ci)
        coeff = ops.proj_coeff @ system.local_dof_values(ci, vec)
        h = ops.geometry.diameter
        # only the two linear monomial gradients survive at the centroid
        out[ci] = coeff[:2] / h
    return out
