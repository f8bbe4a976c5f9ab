"""Classification of linear optomechanical couplings.

The model is brought to its canonical form (diagonal optical frequencies and
decay rates at zero displacement) with degenerate first-order perturbation
theory, and each mechanical coordinate is sorted into

* dispersive: eigenfrequencies shift linearly with ``x_j``;
* coherent: ``x_j`` mixes non-degenerate eigenmodes without shifting them;
* dissipative: ``x_j`` changes the decay rate of an eigenmode.

Mode-operator convention: for eigenmode ``i`` the displacement-dependent
annihilation operator is ``a_i(x) = a_i + sum_l x_j F_j[i, l] a_l`` with
``F_j[i, l] = <i|H_j|l> / (w_i - w_l)`` for modes in different degenerate
clusters and zero otherwise.  In terms of the basis matrix ``V`` whose
columns are eigenvectors, ``V(x)^dag ~ (I + x F) V^dag``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigensolverFailure
from .system_model import LinearSystemModel, rotate_basis

DEG_RTOL = 1e-9
ZERO_RTOL = 1e-10
# sub-block eigenvalues closer than this (relative to |H_j|_max) stay grouped
SPLIT_RTOL = 1e-9


@dataclass(frozen=True)
class EigenStructure:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    clusters: tuple
    tol_deg: float
    # eigenvalues relative to the mean diagonal; gaps are taken from these
    offsets: np.ndarray = None
    shift: float = 0.0

    def gaps(self) -> np.ndarray:
        """Matrix of ``w_i - w_l`` without carrier-frequency round-off."""
        d = self.eigvals - self.shift if self.offsets is None else self.offsets
        return d[:, None] - d[None, :]

    def cluster_of(self) -> np.ndarray:
        """Cluster id of every mode index."""
        out = np.empty(len(self.eigvals), dtype=int)
        for c, idx in enumerate(self.clusters):
            out[list(idx)] = c
        return out


@dataclass(frozen=True)
class CoordinateReport:
    index: int
    label: str
    dispersive_shifts: np.ndarray
    coherent_mixing: np.ndarray
    dissipative_derivs: np.ndarray
    dispersive: bool
    coherent: bool
    dissipative: bool
    basis: np.ndarray
    conflict: bool = False

    @property
    def flags(self) -> dict:
        return {"dispersive": self.dispersive, "coherent": self.coherent,
                "dissipative": self.dissipative}


@dataclass(frozen=True)
class ClassificationReport:
    eig: EigenStructure
    basis: np.ndarray
    coordinates: tuple

    @property
    def flags(self) -> dict:
        """Flags OR-ed over all coordinates."""
        keys = ("dispersive", "coherent", "dissipative")
        return {k: any(c.flags[k] for c in self.coordinates) for k in keys}

    @property
    def basis_conflict(self) -> bool:
        return any(c.conflict for c in self.coordinates)

    def __getitem__(self, j) -> CoordinateReport:
        return self.coordinates[j]


@dataclass(frozen=True)
class CanonicalForm:
    model: LinearSystemModel
    basis: np.ndarray
    mixing: tuple


def _fix_phases(V: np.ndarray, cols=None) -> np.ndarray:
    """Make the largest-magnitude component of each column real and positive.

    Ties (within 1e-12 relative) go to the lowest index so that symmetric
    vectors such as (1, -1)/sqrt(2) come out with a positive first entry.
    """
    cols = range(V.shape[1]) if cols is None else cols
    for c in cols:
        mag = np.abs(V[:, c])
        top = mag.max()
        if top == 0:
            continue
        k = int(np.flatnonzero(mag >= top * (1 - 1e-12))[0])
        V[:, c] *= np.conj(V[k, c]) / mag[k]
    return V


def _group(values, tol) -> list:
    """Chain sorted values into groups whose neighbours differ by <= tol."""
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _eigh(M):
    try:
        return scipy.linalg.eigh(M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverFailure(str(exc)) from exc


def diagonalize_unperturbed(model: LinearSystemModel) -> EigenStructure:
    """Diagonalize ``H0`` and group eigenvalues into degenerate clusters.

    The eigensolver runs on ``H0 - mu I`` with ``mu`` the mean diagonal, which
    keeps small splittings on top of optical carriers accurate.
    """
    n = model.n_modes
    H0 = np.asarray(model.H0)
    if not np.all(np.isfinite(H0)):
        raise EigensolverFailure("H0 contains non-finite entries")
    mu = np.trace(H0).real / n
    w, V = _eigh(H0 - mu * np.eye(n))
    V = _fix_phases(np.array(V, dtype=complex))
    tol = DEG_RTOL * max(float(np.abs(w + mu).max()), 1.0)
    clusters = tuple(tuple(g) for g in _group(w, tol))
    return EigenStructure(eigvals=w + mu, eigvecs=V, clusters=clusters, tol_deg=tol,
                          offsets=w, shift=mu)


def _scale(mats) -> float:
    return max((float(np.abs(m).max()) if m.size else 0.0) for m in mats) if mats else 0.0


def refine_basis(model: LinearSystemModel, eig: EigenStructure) -> np.ndarray:
    """Rotate eigenvectors inside degenerate clusters to diagonalize the ``H_j``.

    Coordinates are processed in order.  Each cluster is split into sub-parts
    once a coordinate lifts the degeneracy, and later coordinates may only
    rotate inside sub-parts that are still degenerate.
    """
    V = eig.eigvecs.copy()
    parts = [list(c) for c in eig.clusters if len(c) > 1]
    for Hj in model.Hj:
        scale = _scale([Hj])
        if scale == 0 or not parts:
            continue
        new_parts = []
        for idx in parts:
            Vs = V[:, idx]
            block = Vs.conj().T @ Hj @ Vs
            block = 0.5 * (block + block.conj().T)
            w, W = _eigh(block)
            V[:, idx] = Vs @ W
            _fix_phases(V, idx)
            for g in _group(w, SPLIT_RTOL * scale):
                if len(g) > 1:
                    new_parts.append([idx[k] for k in g])
        parts = new_parts
    return V


def _row_norm_derivative(g0: np.ndarray, gj: np.ndarray) -> np.ndarray:
    n0 = np.linalg.norm(g0, axis=1)
    cross = np.real(np.sum(np.conj(g0) * gj, axis=1))
    out = np.empty(g0.shape[0])
    nz = n0 > 0
    out[nz] = cross[nz] / n0[nz]
    # |x g_j| has one-sided slope |g_j| when the mode is otherwise closed
    out[~nz] = np.linalg.norm(gj[~nz], axis=1)
    return out


def first_order_analysis(model: LinearSystemModel, eig: EigenStructure, j: int,
                         basis: np.ndarray | None = None) -> CoordinateReport:
    """First-order report for mechanical coordinate ``j``.

    ``basis`` is the cluster-refined eigenbasis (from :func:`refine_basis`);
    by default it is refined for this coordinate alone.  If a cluster block
    of ``H_j`` is not diagonal in ``basis`` (a conflict with an earlier
    coordinate) the block is re-diagonalized for this coordinate only and the
    report is marked with ``conflict=True``.
    """
    Hj = np.asarray(model.Hj[j])
    if basis is None:
        single = LinearSystemModel(H0=model.H0, Hj=(Hj,), Gamma0=model.Gamma0,
                                   Gammaj=(model.Gammaj[j],))
        basis = refine_basis(single, eig)
    V = basis.copy()
    scale = _scale([Hj])
    Ht = V.conj().T @ Hj @ V
    conflict = False
    for idx in eig.clusters:
        if len(idx) < 2:
            continue
        idx = list(idx)
        block = Ht[np.ix_(idx, idx)]
        off = block - np.diag(np.diag(block))
        if scale > 0 and np.abs(off).max() > ZERO_RTOL * scale:
            conflict = True
            _, W = _eigh(0.5 * (block + block.conj().T))
            V[:, idx] = V[:, idx] @ W
            _fix_phases(V, idx)
    if conflict:
        Ht = V.conj().T @ Hj @ V
    Ht = 0.5 * (Ht + Ht.conj().T)

    gap = eig.gaps()
    cid = eig.cluster_of()
    n = len(cid)
    shifts = np.real(np.diag(Ht)).copy()
    mixing = np.zeros((n, n), dtype=complex)
    cross = cid[:, None] != cid[None, :]
    mixing[cross] = Ht[cross] / gap[cross]

    g0 = V.conj().T @ np.asarray(model.Gamma0)
    gj = V.conj().T @ np.asarray(model.Gammaj[j])
    diss = _row_norm_derivative(g0, gj) if g0.shape[1] else np.zeros(n)

    g_scale = _scale([np.asarray(model.Gammaj[j])])
    label = model.mech_labels[j] if j < len(model.mech_labels) else f"x{j + 1}"
    return CoordinateReport(
        index=j,
        label=label,
        dispersive_shifts=shifts,
        coherent_mixing=mixing,
        dissipative_derivs=diss,
        dispersive=bool(np.abs(shifts).max() > ZERO_RTOL * scale) if n else False,
        coherent=bool(np.abs(mixing * gap).max() > ZERO_RTOL * scale) if n else False,
        dissipative=bool(np.abs(diss).max() > ZERO_RTOL * g_scale) if n else False,
        basis=V,
        conflict=conflict,
    )


def classify(model: LinearSystemModel) -> ClassificationReport:
    eig = diagonalize_unperturbed(model)
    V = refine_basis(model, eig)
    coords = tuple(first_order_analysis(model, eig, j, basis=V) for j in range(model.n_mech))
    return ClassificationReport(eig=eig, basis=V, coordinates=coords)


def canonicalize(model: LinearSystemModel) -> CanonicalForm:
    """Re-express ``model`` in the cluster-refined eigenbasis.

    Returns the rotated model (``H0`` diagonal, ``H_j`` diagonal inside each
    degenerate cluster), the basis matrix ``V`` such that
    ``V @ H_canonical @ V^dag`` reproduces the original, and the per-coordinate
    mode-mixing matrices ``F_j``.
    """
    report = classify(model)
    V = report.basis
    canon = rotate_basis(model, V)
    H0 = np.diag(report.eig.eigvals).astype(complex)
    canon = LinearSystemModel(H0=H0, Hj=canon.Hj, Gamma0=canon.Gamma0, Gammaj=canon.Gammaj,
                              mode_labels=tuple(f"mode{i + 1}" for i in range(model.n_modes)),
                              mech_labels=model.mech_labels)
    return CanonicalForm(model=canon, basis=V,
                         mixing=tuple(c.coherent_mixing for c in report.coordinates))
