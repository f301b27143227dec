"""Executable positivity machinery on distinguished bases.

The distinguished cone is always the nonnegative-coefficient cone over a
concrete basis: the configuration basis of a sector, or its product with a
position grid for the phonon-dressed case.  In that setting

* an operator preserves positivity iff its matrix is entrywise >= 0,
* the exponential of such an operator improves positivity iff the support
  digraph is strongly connected,
* a Hamiltonian whose negated off-diagonal part is entrywise >= 0 and
  irreducible has a unique, entrywise strictly positive ground vector.

The certificates below check those statements numerically and treat any
violation of the last implication as a hard inconsistency, since it can
only come from a solver failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InconsistencyError, ModelValidationError
from .hamiltonian import SectorHamiltonian, effective_coulomb, lang_firsov_constant
from .manybody import SparseHermitian, guard_dimension, sector_lowering
from .model import LatticeModel
from .sector import enumerate_sector
from .spectral import CLUSTER_TOL, eig_lowest

STRICT_POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class PositivityCertificate:
    offdiag_sign_ok: bool
    irreducible: bool
    ground_unique: bool
    ground_strictly_positive: bool
    min_entry: float
    basis_tag: str


def _as_matrix(a) -> sp.csr_matrix:
    if isinstance(a, SectorHamiltonian):
        return a.op.matrix
    if isinstance(a, SparseHermitian):
        return a.matrix
    if isinstance(a, np.ndarray):
        return sp.csr_matrix(a)
    return a.tocsr()


def preserves_positivity(a, tol: float = 0.0) -> bool:
    """Entrywise nonnegativity in the distinguished basis."""
    mat = _as_matrix(a)
    if mat.nnz == 0:
        return True
    data = mat.data
    return bool(np.all(np.abs(data.imag) <= tol) if np.iscomplexobj(data) else True) \
        and bool(np.all(data.real >= -tol))


def improves_positivity_exp(a, tol: float = 0.0) -> bool:
    """Whether exp(A) is entrywise strictly positive for an entrywise
    nonnegative A: every pair must be linked by some power of A, which is
    strong connectivity of the support digraph (the zeroth power covers the
    diagonal)."""
    mat = _as_matrix(a)
    if not preserves_positivity(mat, tol):
        raise ValueError("defined only for positivity-preserving matrices")
    if mat.shape[0] <= 1:
        return True
    support = sp.csr_matrix((np.ones(mat.data.shape), mat.indices, mat.indptr),
                            shape=mat.shape)
    n_comp, _ = connected_components(support, directed=True, connection="strong")
    return n_comp == 1


def _offdiagonal_support(mat: sp.csr_matrix) -> sp.csr_matrix:
    off = mat - sp.diags(mat.diagonal())
    off.eliminate_zeros()
    return off.tocsr()


def ergodicity_certificate(h) -> bool:
    """Connectivity of the off-diagonal support graph of -H.

    On a configuration-basis Hamiltonian this is, by construction, the same
    predicate as the hole-move connectivity of the sector.
    """
    off = _offdiagonal_support(_as_matrix(h))
    if off.shape[0] <= 1:
        return True
    n_comp, _ = connected_components(abs(off), directed=False)
    return n_comp == 1


def pf_certificate(h, ground_vector: np.ndarray, degeneracy: int,
                   basis_tag: str = "configuration") -> PositivityCertificate:
    """Certificate tying the sign structure of -H to ground-state uniqueness
    and strict positivity.

    The ground vector's global phase is normalized so its largest-magnitude
    entry is positive; strict positivity then means every entry exceeds the
    threshold.  If the sign structure and irreducibility hold but uniqueness
    or positivity fail, the certificate raises instead of reporting, because
    the implication is a theorem at finite dimension.
    """
    mat = _as_matrix(h)
    neg_off = -_offdiagonal_support(mat)
    sign_ok = preserves_positivity(neg_off, tol=STRICT_POSITIVITY_TOL)
    irreducible = ergodicity_certificate(mat)

    v = np.asarray(ground_vector).ravel()
    pivot = v[int(np.argmax(np.abs(v)))]
    v = v * np.conj(pivot) / abs(pivot)
    real_ok = not np.iscomplexobj(v) or float(np.max(np.abs(v.imag))) <= STRICT_POSITIVITY_TOL
    min_entry = float(np.min(v.real))
    unique = degeneracy == 1
    strictly_positive = bool(real_ok and min_entry > STRICT_POSITIVITY_TOL)

    if sign_ok and irreducible and not (unique and strictly_positive):
        raise InconsistencyError(
            f"sign structure and irreducibility hold but degeneracy = {degeneracy}, "
            f"min entry = {min_entry:.3e}; the eigensolve cannot be trusted")
    return PositivityCertificate(
        offdiag_sign_ok=sign_ok, irreducible=irreducible, ground_unique=unique,
        ground_strictly_positive=strictly_positive, min_entry=min_entry,
        basis_tag=basis_tag)


def diagonal_perturbation_equivalence(h, diagonal) -> bool:
    """Adding any real diagonal never changes the ergodicity certificate:
    diagonal operators leave the off-diagonal support graph untouched."""
    mat = _as_matrix(h)
    d = np.asarray(diagonal, dtype=float)
    if d.shape != (mat.shape[0],):
        raise ValueError(f"diagonal must have length {mat.shape[0]}")
    return ergodicity_certificate(mat) == ergodicity_certificate(mat + sp.diags(d))


def spin_lowering_positivity(model: LatticeModel, m) -> bool:
    """The sector-to-sector spin-lowering matrix, built from the fermionic
    operator, must be entrywise in {0, +1} with one entry per flippable up
    spin, i.e. column sums equal to n_up of the source sector."""
    low, basis_hi, _ = sector_lowering(model, m)
    dense = low.toarray()
    near_zero = np.abs(dense) <= 1e-12
    near_one = np.abs(dense - 1.0) <= 1e-12
    if not np.all(near_zero | near_one):
        return False
    col_sums = dense.sum(axis=0)
    return bool(np.all(np.abs(col_sums - basis_hi.n_up) <= 1e-9))


# ---------------------------------------------------------------------------
# position-grid certificate for the phonon-dressed sector
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridCertificate:
    certificate: PositivityCertificate
    ground_energy: float
    dropped_constant: float
    points: int
    spacing: float


def _oscillator_matrix(points: int, spacing: float, frequency: float) -> sp.csr_matrix:
    """Second-difference-plus-quadratic oscillator on a Dirichlet grid,
    shifted by -omega/2 so its spectrum approximates omega {0, 1, 2, ...}.
    Off-diagonal entries are negative, so -H is entrywise >= 0."""
    q = (np.arange(points) - (points - 1) / 2.0) * spacing
    kinetic = sp.diags([np.full(points, 1.0 / spacing**2),
                        np.full(points - 1, -0.5 / spacing**2),
                        np.full(points - 1, -0.5 / spacing**2)],
                       offsets=[0, 1, -1])
    potential = sp.diags(0.5 * frequency**2 * q**2 - 0.5 * frequency)
    return (kinetic + potential).tocsr()


def _grid_shift(points: int, steps: int) -> sp.csr_matrix:
    """Translation by ``steps`` grid cells with zero fill at the walls;
    entries are exactly 0 or 1."""
    if steps == 0:
        return sp.identity(points, format="csr")
    return sp.eye(points, points, k=steps, format="csr")


def _embed(op: sp.spmatrix, mode: int, modes: int, points: int) -> sp.csr_matrix:
    out = sp.identity(1, format="csr")
    for z in range(modes):
        out = sp.kron(out, op if z == mode else sp.identity(points, format="csr"),
                      format="csr")
    return out


def qgrid_holstein_certify(model: LatticeModel, m, points: int, spacing: float) -> GridCertificate:
    """Polaron-frame Hamiltonian on a product of position grids, certified
    in the product cone basis.

    The phase-dressed hopping becomes an exact index shift, so every grid
    displacement sqrt(2) omega^{-3/2} (g_xz - g_yz) must be an integer
    multiple of the spacing; incommensurate couplings are rejected rather
    than interpolated, since interpolation would introduce negative weights
    and destroy the very cone structure under test.
    """
    if model.phonon is None:
        raise ValueError("grid certificate needs a phonon block")
    if model.sites > 3:
        raise ModelValidationError("budget", "grid certificate supports at most 3 sites")
    ph = model.phonon
    omega = ph.frequency
    g = ph.coupling
    sites = model.sites
    basis = enumerate_sector(model, m)
    grid_dim = points ** sites
    guard_dimension(basis.dimension * grid_dim, "grid certificate")

    t = model.hopping
    shifts: dict[tuple[int, int], list[int]] = {}
    for x in range(sites):
        for y in range(x + 1, sites):
            if t[x, y] == 0.0:
                continue
            steps = []
            for z in range(sites):
                a = -math.sqrt(2.0) * omega ** (-1.5) * (g[x, z] - g[y, z])
                ratio = a / spacing
                if abs(ratio - round(ratio)) > 1e-9:
                    raise ModelValidationError(
                        "commensurability",
                        f"displacement {a} for bond ({x}, {y}) mode {z} is not an "
                        f"integer multiple of the grid spacing {spacing}")
                steps.append(int(round(ratio)))
            shifts[(x, y)] = steps

    theta: dict[tuple[int, int], sp.csr_matrix] = {}
    for (x, y), steps in shifts.items():
        op = sp.identity(1, format="csr")
        for s in steps:
            op = sp.kron(op, _grid_shift(points, s), format="csr")
        theta[(x, y)] = op
        theta[(y, x)] = op.T.tocsr()

    from .hamiltonian import hole_moves  # shared hop enumeration

    move_blocks: dict[tuple[int, int], sp.lil_matrix] = {}
    for i, j, x, y in hole_moves(model, basis):
        block = move_blocks.setdefault((x, y), sp.lil_matrix((basis.dimension, basis.dimension)))
        block[i, j] += -t[x, y]
    total = sp.csr_matrix((basis.dimension * grid_dim, basis.dimension * grid_dim))
    for (x, y), block in move_blocks.items():
        total = total + sp.kron(block.tocsr(), theta[(x, y)], format="csr")

    occ = np.ones((basis.dimension, sites))
    for i, c in enumerate(basis.configs):
        occ[i, c.hole] = 0.0
    ueff = effective_coulomb(model)
    ueff_offdiag = ueff - np.diag(np.diag(ueff))
    diag = np.einsum("ix,xy,iy->i", occ, ueff_offdiag, occ)
    diag += occ @ np.diag(t)
    gsq_diag = np.diag(g @ g)
    diag += occ @ (-(gsq_diag - np.mean(gsq_diag)) / omega)
    total = total + sp.kron(sp.diags(diag), sp.identity(grid_dim, format="csr"), format="csr")

    osc = _oscillator_matrix(points, spacing, omega)
    grid_h = sp.csr_matrix((grid_dim, grid_dim))
    for z in range(sites):
        grid_h = grid_h + _embed(osc, z, sites, points)
    total = total + sp.kron(sp.identity(basis.dimension, format="csr"), grid_h, format="csr")

    neg_off = -_offdiagonal_support(total)
    if not preserves_positivity(neg_off, tol=STRICT_POSITIVITY_TOL):
        raise InconsistencyError("grid assembly lost the off-diagonal sign structure")

    hermitian = SparseHermitian(total, hermitian=True)
    vals, vecs = eig_lowest(hermitian, min(hermitian.dimension, 4))
    tol = CLUSTER_TOL * (1.0 + abs(vals[0]))
    degeneracy = int(np.sum(vals - vals[0] <= tol))
    cert = pf_certificate(hermitian, vecs[:, 0], degeneracy,
                          basis_tag="configuration x grid")
    return GridCertificate(certificate=cert, ground_energy=float(vals[0]),
                           dropped_constant=lang_firsov_constant(model),
                           points=points, spacing=spacing)
