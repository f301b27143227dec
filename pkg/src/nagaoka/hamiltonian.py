"""Hamiltonian assembly on finite bases.

Every operator lives either on the fixed-N Fock basis (finite-U forms) or
on a magnetization-sector configuration basis (infinite-U forms), possibly
tensored with a truncated boson space.  The infinite-U electron block is
assembled by two independent routes:

* ``direct_formula``: hole moves contribute -t_xy directly, diagonal terms
  are evaluated on configuration occupations;
* ``projected``: the U = 0 Hamiltonian is built on the full fixed-N basis,
  sandwiched with the no-double-occupancy projection and rotated into the
  signed canonical sector vectors.

Entrywise agreement of the two routes certifies the fermionic sign
convention and is enforced by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import DimensionBudgetError
from .manybody import (
    DOWN,
    UP,
    BosonBasis,
    SparseHermitian,
    boson_basis,
    build_boson_op,
    full_fock_basis,
    guard_dimension,
    hopping_bilinear,
    momentum_quadrature,
    projected_restriction,
    sector_embedding,
)
from .model import LatticeModel
from .sector import SectorBasis, apply_move, enumerate_sector


@dataclass(frozen=True, eq=False)
class SectorHamiltonian:
    """A Hamiltonian on one magnetization sector, with provenance tag."""

    model: LatticeModel
    m: Fraction
    basis: SectorBasis
    op: SparseHermitian
    provenance: str
    boson: BosonBasis | None = None
    dropped_constant: float = 0.0
    cutoff: int | None = None

    @property
    def dimension(self) -> int:
        return self.op.dimension


def _require_infinite_u(model: LatticeModel, what: str):
    if not model.u_is_infinite:
        raise ValueError(f"{what} is an infinite-U construction; model has U = {model.onsite_u}")


def _config_occupations(basis: SectorBasis) -> np.ndarray:
    """occ[i, x] = electron count at site x in configuration i (0 at the hole)."""
    occ = np.ones((basis.dimension, basis.sites))
    for i, c in enumerate(basis.configs):
        occ[i, c.hole] = 0.0
    return occ


def _sector_diagonal(model: LatticeModel, basis: SectorBasis) -> np.ndarray:
    """Off-site Coulomb plus on-site hopping diagonal on configurations."""
    occ = _config_occupations(basis)
    uxy = model.offsite_u
    diag = np.einsum("ix,xy,iy->i", occ, uxy, occ)      # ordered pairs, diag(U) is 0
    diag += occ @ np.diag(model.hopping)                # t_xx acts as a site potential
    return diag


def hole_moves(model: LatticeModel, basis: SectorBasis):
    """All (target_index, source_index, from_site, to_site) hole hops."""
    t = model.hopping
    moves = []
    for j, c in enumerate(basis.configs):
        x = c.hole
        for y in range(model.sites):
            if y == x or t[x, y] == 0.0:
                continue
            moves.append((basis.index[apply_move(c, x, y)], j, x, y))
    return moves


def assemble_nagaoka_sector(model: LatticeModel, m) -> SectorHamiltonian:
    """Infinite-U sector Hamiltonian straight from the hole-move rule.

    Every hop contributes the matrix element -t_xy between a configuration
    and its moved image, so -H has entrywise nonnegative off-diagonal part
    in this basis.
    """
    _require_infinite_u(model, "sector assembly")
    basis = enumerate_sector(model, m)
    n = basis.dimension
    mat = sp.lil_matrix((n, n))
    for i, j, x, y in hole_moves(model, basis):
        mat[i, j] += -model.hopping[x, y]
    mat = mat.tocsr() + sp.diags(_sector_diagonal(model, basis))
    return SectorHamiltonian(model=model, m=basis.m, basis=basis,
                             op=SparseHermitian(mat.tocsr(), hermitian=True),
                             provenance="direct_formula")


def hubbard_electron_matrix(model: LatticeModel, u: float) -> sp.csr_matrix:
    """Finite-U Hubbard matrix on the fixed-N Fock basis (no bosons)."""
    if not math.isfinite(u):
        raise ValueError("finite-U assembly needs a finite U; use the sector forms for U = INFINITE")
    fock = full_fock_basis(model.sites, model.n_electrons)
    t = model.hopping
    mat = sp.csr_matrix((fock.dimension, fock.dimension))
    for x in range(model.sites):
        for y in range(model.sites):
            if t[x, y] == 0.0:
                continue
            for spin in (UP, DOWN):
                mat = mat + t[x, y] * hopping_bilinear(fock, x, y, spin)

    site_mask = (1 << model.sites) - 1
    diag = np.zeros(fock.dimension)
    uxy = model.offsite_u
    for i, w in enumerate(fock.states):
        up_w, down_w = w & site_mask, (w >> model.sites) & site_mask
        diag[i] += u * (up_w & down_w).bit_count()
        n_site = np.array([((up_w >> x) & 1) + ((down_w >> x) & 1)
                           for x in range(model.sites)], dtype=float)
        diag[i] += n_site @ uxy @ n_site
    return (mat + sp.diags(diag)).tocsr()


def assemble_hubbard_full(model: LatticeModel, u: float) -> SparseHermitian:
    """Full-space finite-U Hamiltonian; phonon terms included when present.

    With phonons the space is (electrons) x (truncated local oscillators)
    and H gains sum_xy g_xy n_x (b*_y + b_y) + omega N_b.
    """
    hel = hubbard_electron_matrix(model, u)
    if model.phonon is None:
        return SparseHermitian(hel, hermitian=True)

    ph = model.phonon
    fock = full_fock_basis(model.sites, model.n_electrons)
    bosons = boson_basis(model.sites, ph.per_site_cutoff)
    guard_dimension(fock.dimension * bosons.dimension, "full-space phonon assembly")

    n_site = np.zeros((fock.dimension, model.sites))
    site_mask = (1 << model.sites) - 1
    for i, w in enumerate(fock.states):
        up_w, down_w = w & site_mask, (w >> model.sites) & site_mask
        for x in range(model.sites):
            n_site[i, x] = ((up_w >> x) & 1) + ((down_w >> x) & 1)

    eye_b = sp.identity(bosons.dimension, format="csr")
    eye_e = sp.identity(fock.dimension, format="csr")
    total = sp.kron(hel, eye_b, format="csr")
    for y in range(model.sites):
        gcol = ph.coupling[:, y]
        if not np.any(gcol):
            continue
        bdag = build_boson_op(bosons, "create", y).matrix
        displ = bdag + bdag.conjugate().T
        coupling_diag = sp.diags(n_site @ gcol)
        total = total + sp.kron(coupling_diag, displ, format="csr")
    nb = build_boson_op(bosons, "number_total").matrix
    total = total + sp.kron(eye_e, ph.frequency * nb, format="csr")
    return SparseHermitian(total, hermitian=True)


def assemble_nagaoka_projected(model: LatticeModel, m) -> SectorHamiltonian:
    """Infinite-U sector Hamiltonian via projection of the U = 0 matrix.

    Serves as the independent oracle for the fermionic signs: it must agree
    entrywise with the direct formula.
    """
    _require_infinite_u(model, "projected sector assembly")
    basis, _, rows, signs = sector_embedding(model, m)
    hfull = hubbard_electron_matrix(model, u=0.0)
    mat = projected_restriction(hfull, rows, signs)
    return SectorHamiltonian(model=model, m=basis.m, basis=basis,
                             op=SparseHermitian(mat, hermitian=True),
                             provenance="projected")


def effective_coulomb(model: LatticeModel) -> np.ndarray:
    """Phonon-dressed Coulomb matrix U_xy - (1/omega) sum_z g_xz g_zy."""
    if model.phonon is None:
        raise ValueError("effective Coulomb needs a phonon block")
    g = model.phonon.coupling
    return model.offsite_u - (g @ g) / model.phonon.frequency


def lang_firsov_constant(model: LatticeModel) -> float:
    """Scalar part of the density-density term generated by the polaron
    displacement: -(1/omega) * mean((g^2)_xx) * N.  Exact whenever the
    diagonal of g^2 is uniform (any diagonal coupling)."""
    if model.phonon is None:
        raise ValueError("needs a phonon block")
    g = model.phonon.coupling
    gsq_diag = np.diag(g @ g)
    return -float(np.mean(gsq_diag)) * model.n_electrons / model.phonon.frequency


def assemble_holstein_sector(model: LatticeModel, m, cutoff: int | None = None) -> SectorHamiltonian:
    """Infinite-U electron block tensored with truncated local phonons."""
    if model.phonon is None:
        raise ValueError("Holstein assembly needs a phonon block")
    ph = model.phonon
    cut = ph.per_site_cutoff if cutoff is None else int(cutoff)
    electron = assemble_nagaoka_sector(model, m)
    bosons = boson_basis(model.sites, cut)
    guard_dimension(electron.dimension * bosons.dimension, "Holstein sector assembly")

    occ = _config_occupations(electron.basis)
    eye_b = sp.identity(bosons.dimension, format="csr")
    eye_e = sp.identity(electron.dimension, format="csr")
    total = sp.kron(electron.op.matrix, eye_b, format="csr")
    for y in range(model.sites):
        gcol = ph.coupling[:, y]
        if not np.any(gcol):
            continue
        bdag = build_boson_op(bosons, "create", y).matrix
        displ = bdag + bdag.conjugate().T
        total = total + sp.kron(sp.diags(occ @ gcol), displ, format="csr")
    nb = build_boson_op(bosons, "number_total").matrix
    total = total + sp.kron(eye_e, ph.frequency * nb, format="csr")
    return SectorHamiltonian(model=model, m=electron.m, basis=electron.basis,
                             op=SparseHermitian(total, hermitian=True),
                             provenance="holstein_direct", boson=bosons, cutoff=cut)


#: Dressed hopping phases are dense in the boson space; cap that factor
#: separately from the total-dimension budget (memory grows quadratically).
DENSE_PHASE_LIMIT = 4096


def _guard_dense_phase(dim: int, what: str):
    if dim > DENSE_PHASE_LIMIT:
        raise DimensionBudgetError(
            f"{what} needs dense {dim}x{dim} phase matrices "
            f"(limit {DENSE_PHASE_LIMIT}); reduce the cutoff or the mode set")


def unitary_exp(hermitian: np.ndarray) -> np.ndarray:
    """exp(i H) for Hermitian H via eigendecomposition; exactly unitary."""
    w, v = np.linalg.eigh(hermitian)
    return (v * np.exp(1j * w)) @ v.conjugate().T


def assemble_lang_firsov_sector(model: LatticeModel, m, cutoff: int | None = None) -> SectorHamiltonian:
    """Polaron-frame sector Hamiltonian: phase-dressed hopping plus the
    effective Coulomb diagonal and the free phonon term.

    The hopping phases theta_xy = exp(-i sqrt(2) omega^{-3/2}
    sum_z (g_xz - g_yz) p_z) are exponentials of truncated Hermitian
    generators, hence exactly unitary.  The scalar part of the displacement
    energy is not added to the matrix; it is reported separately as
    ``dropped_constant`` so energies can be reconciled against the direct
    Holstein form.  Any site-dependent remainder of the displacement energy
    (possible for non-uniform diag(g^2)) stays in the matrix.
    """
    if model.phonon is None:
        raise ValueError("polaron-frame assembly needs a phonon block")
    ph = model.phonon
    cut = ph.per_site_cutoff if cutoff is None else int(cutoff)
    basis = enumerate_sector(model, m)
    bosons = boson_basis(model.sites, cut)
    nb_dim = bosons.dimension
    guard_dimension(basis.dimension * nb_dim, "polaron-frame sector assembly")
    _guard_dense_phase(nb_dim, "polaron-frame sector assembly")

    omega = ph.frequency
    g = ph.coupling
    p_ops = [momentum_quadrature(bosons, z, omega) for z in range(model.sites)]

    thetas: dict[tuple[int, int], np.ndarray] = {}
    t = model.hopping
    for x in range(model.sites):
        for y in range(x + 1, model.sites):
            if t[x, y] == 0.0:
                continue
            gen = np.zeros((nb_dim, nb_dim), dtype=complex)
            for z in range(model.sites):
                coeff = -math.sqrt(2.0) * omega ** (-1.5) * (g[x, z] - g[y, z])
                if coeff != 0.0:
                    gen = gen + coeff * p_ops[z]
            theta = unitary_exp(gen)
            thetas[(x, y)] = theta
            thetas[(y, x)] = theta.conjugate().T

    # hopping blocks grouped by ordered bond, dressed by theta
    move_blocks: dict[tuple[int, int], sp.lil_matrix] = {}
    for i, j, x, y in hole_moves(model, basis):
        block = move_blocks.setdefault((x, y), sp.lil_matrix((basis.dimension, basis.dimension)))
        block[i, j] += -t[x, y]
    total = sp.csr_matrix((basis.dimension * nb_dim, basis.dimension * nb_dim), dtype=complex)
    for (x, y), block in move_blocks.items():
        phase = thetas.get((x, y), np.eye(nb_dim))
        total = total + sp.kron(block.tocsr(), sp.csr_matrix(phase), format="csr")

    occ = _config_occupations(basis)
    ueff = effective_coulomb(model)
    ueff_offdiag = ueff - np.diag(np.diag(ueff))
    diag = np.einsum("ix,xy,iy->i", occ, ueff_offdiag, occ)
    diag += occ @ np.diag(t)
    gsq_diag = np.diag(g @ g)
    residual = -(gsq_diag - np.mean(gsq_diag)) / omega   # zero for uniform diag(g^2)
    diag += occ @ residual
    eye_b = sp.identity(nb_dim, format="csr")
    total = total + sp.kron(sp.diags(diag), eye_b, format="csr")

    nb = build_boson_op(bosons, "number_total").matrix
    total = total + sp.kron(sp.identity(basis.dimension, format="csr"), omega * nb, format="csr")

    return SectorHamiltonian(model=model, m=basis.m, basis=basis,
                             op=SparseHermitian(total, hermitian=True),
                             provenance="lang_firsov", boson=bosons,
                             dropped_constant=lang_firsov_constant(model), cutoff=cut)


# ---------------------------------------------------------------------------
# radiation: quantized straight-line hopping phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhotonMode:
    """One (k, lambda) mode of the box field."""

    nvec: tuple[int, int, int]    # k in units of 2 pi / L
    lam: int                      # polarization index, 1 or 2
    k: np.ndarray                 # wave vector
    omega: float                  # |k|, or the mass at k = 0
    eps: np.ndarray               # polarization vector (zero when k1 = k2 = 0)


def photon_modes(model: LatticeModel) -> list[PhotonMode]:
    """Mode set {(k, lambda): 0 < |k| <= kappa} plus the k = 0 pair,
    ordered lexicographically in (k, lambda)."""
    rad = model.radiation
    if rad is None:
        raise ValueError("model has no radiation block")
    unit = 2.0 * math.pi / rad.box_length
    nmax = int(math.floor(rad.uv_cutoff / unit + 1e-12))
    nvecs = [(0, 0, 0)]
    for nx in range(-nmax, nmax + 1):
        for ny in range(-nmax, nmax + 1):
            for nz in range(-nmax, nmax + 1):
                if (nx, ny, nz) == (0, 0, 0):
                    continue
                if unit * math.sqrt(nx * nx + ny * ny + nz * nz) <= rad.uv_cutoff + 1e-12:
                    nvecs.append((nx, ny, nz))
    nvecs.sort()
    modes = []
    for nvec in nvecs:
        k = unit * np.array(nvec, dtype=float)
        norm = float(np.linalg.norm(k))
        omega = norm if norm > 0 else rad.mass
        if k[0] == 0.0 and k[1] == 0.0:
            eps1 = np.zeros(3)
            eps2 = np.zeros(3)
        else:
            perp = math.hypot(k[0], k[1])
            eps1 = np.array([k[1], -k[0], 0.0]) / perp
            eps2 = np.cross(k / norm, eps1)
        for lam, eps in ((1, eps1), (2, eps2)):
            modes.append(PhotonMode(nvec=nvec, lam=lam, k=k, omega=omega, eps=eps))
    return modes


def peierls_kernel(x, y, k) -> complex:
    """Straight-line phase kernel (e^{ik.y} - e^{ik.x}) / (i k.(y-x)).

    Evaluated through the stable half-angle form, so the k.(y-x) -> 0 limit
    e^{ik.x} comes out exactly; |kernel| <= 1 always.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.array_equal(x, y):
        raise ValueError("kernel needs two distinct endpoints")
    k = np.asarray(k, dtype=float)
    theta = float(k @ (y - x))
    # (e^{i theta} - 1)/(i theta) = e^{i theta/2} sinc(theta/2)
    return complex(np.exp(1j * (k @ x)) * np.exp(0.5j * theta) * np.sinc(theta / (2.0 * math.pi)))


def riemann_kernel(x, y, k, n_segments: int) -> complex:
    """Riemann-sum approximation of the straight-line kernel with N+1
    equally weighted samples; converges to the exact kernel like 1/N."""
    if n_segments < 1:
        raise ValueError("need at least one segment")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = np.asarray(k, dtype=float)
    total = 0.0j
    for j in range(1, n_segments + 2):
        point = x + (j - 1) / n_segments * (y - x)
        total += np.exp(1j * (k @ point))
    return complex(total / n_segments)


def _mode_coefficients(model: LatticeModel, modes, x: int, y: int, kernel) -> np.ndarray:
    """Per-mode complex amplitude of the line-integrated vector potential
    between two sites; the operator is sum_j (c_j a_j + conj(c_j) a*_j)."""
    rad = model.radiation
    pos = rad.site_positions
    volume = rad.box_length ** 3
    coeffs = np.zeros(len(modes), dtype=complex)
    for j, mode in enumerate(modes):
        direction = float(mode.eps @ (pos[y] - pos[x]))
        if direction == 0.0:
            continue
        coeffs[j] = direction / math.sqrt(2.0 * mode.omega * volume) * kernel(pos[x], pos[y], mode.k)
    return coeffs


def peierls_phase(model: LatticeModel, modes, x: int, y: int,
                  basis: BosonBasis, n_segments: int | None = None) -> SparseHermitian:
    """Hermitian line-integral field operator between sites x and y on the
    truncated photon basis.  With ``n_segments`` the Riemann-sum kernel is
    used instead of the exact one."""
    if x == y:
        raise ValueError("phase needs two distinct sites")
    kernel = peierls_kernel if n_segments is None else (
        lambda px, py, k: riemann_kernel(px, py, k, n_segments))
    coeffs = _mode_coefficients(model, modes, x, y, kernel)
    mat = sp.csr_matrix((basis.dimension, basis.dimension), dtype=complex)
    for j, c in enumerate(coeffs):
        if c == 0.0:
            continue
        a = build_boson_op(basis, "annihilate", j).matrix
        mat = mat + c * a + np.conj(c) * a.conjugate().T
    return SparseHermitian(mat, hermitian=True)


def riemann_peierls(model: LatticeModel, modes, x: int, y: int,
                    n_segments: int, basis: BosonBasis) -> SparseHermitian:
    """The Riemann-sum field operator; converges to the exact phase."""
    return peierls_phase(model, modes, x, y, basis, n_segments=n_segments)


def _single_mode_unitary(c: complex, cutoff: int) -> np.ndarray:
    dim = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1)
    return unitary_exp(c * a + np.conj(c) * a.conjugate().T)


def peierls_unitary(model: LatticeModel, modes, x: int, y: int,
                    basis: BosonBasis, n_segments: int | None = None) -> np.ndarray:
    """exp(i phase) built as a product of commuting single-mode exponentials.

    Exactly equal to the matrix exponential of the truncated phase (the
    summands act on disjoint tensor factors) and exactly unitary.
    """
    _guard_dense_phase(basis.dimension, "hopping-phase unitary")
    kernel = peierls_kernel if n_segments is None else (
        lambda px, py, k: riemann_kernel(px, py, k, n_segments))
    coeffs = _mode_coefficients(model, modes, x, y, kernel)
    out = np.eye(1, dtype=complex)
    for c in coeffs:
        out = np.kron(out, _single_mode_unitary(c, basis.cutoff))
    return out


def assemble_radiation_sector(model: LatticeModel, m, cutoff: int | None = None,
                              modes: list[PhotonMode] | None = None) -> SectorHamiltonian:
    """Infinite-U sector Hamiltonian with quantized hopping phases.

    H = sum over bonds of (hole move) x (-t_xy e^{i phase_xy}) + field
    energy + the Coulomb diagonal.  Reversed bonds carry the adjoint phase
    (path reversal flips the phase sign), so hermiticity is structural.
    ``modes`` overrides the model's mode set for reduced desk-scale runs.
    """
    rad = model.radiation
    if rad is None:
        raise ValueError("radiation assembly needs a radiation block")
    cut = rad.photon_cutoff if cutoff is None else int(cutoff)
    if modes is None:
        modes = photon_modes(model)
    basis = enumerate_sector(model, m)
    bosons = boson_basis(len(modes), cut)
    guard_dimension(basis.dimension * bosons.dimension, "radiation sector assembly")
    _guard_dense_phase(bosons.dimension, "radiation sector assembly")

    move_blocks: dict[tuple[int, int], sp.lil_matrix] = {}
    for i, j, x, y in hole_moves(model, basis):
        block = move_blocks.setdefault((x, y), sp.lil_matrix((basis.dimension, basis.dimension)))
        block[i, j] += -model.hopping[x, y]

    nb_dim = bosons.dimension
    total = sp.csr_matrix((basis.dimension * nb_dim, basis.dimension * nb_dim), dtype=complex)
    for x in range(model.sites):
        for y in range(x + 1, model.sites):
            if (x, y) not in move_blocks and (y, x) not in move_blocks:
                continue
            phase = sp.csr_matrix(peierls_unitary(model, modes, x, y, bosons))
            if (x, y) in move_blocks:
                total = total + sp.kron(move_blocks[(x, y)].tocsr(), phase, format="csr")
            if (y, x) in move_blocks:
                total = total + sp.kron(move_blocks[(y, x)].tocsr(),
                                        phase.conjugate().T.tocsr(), format="csr")

    diag = _sector_diagonal(model, basis)
    total = total + sp.kron(sp.diags(diag), sp.identity(nb_dim, format="csr"), format="csr")

    field_diag = np.array([sum(mode.omega * occ for mode, occ in zip(modes, state))
                           for state in bosons.states])
    total = total + sp.kron(sp.identity(basis.dimension, format="csr"),
                            sp.diags(field_diag), format="csr")

    return SectorHamiltonian(model=model, m=basis.m, basis=basis,
                             op=SparseHermitian(total, hermitian=True),
                             provenance="radiation", boson=bosons, cutoff=cut)
