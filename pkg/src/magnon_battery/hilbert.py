"""Sector-restricted bases and sparse Hamiltonian assembly.

Basis labels are occupation tuples ``(c_1..c_N, n_magnon, b_1..b_M)``
with charger and battery bits in {0, 1} and the magnon number bounded
by a Fock cutoff.  The full Hamiltonian conserves the total excitation
number, so dynamics started from a product state stays inside one
sector; restricting the basis to that sector with cutoff equal to the
excitation number is exact, not a truncation.

Labels are ordered descending-lexicographically, which puts the fully
charged configuration ``(1,..,1, 0, 0,..,0)`` first and makes matrix
files reproducible byte for byte.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import SystemConfig

__all__ = [
    "SectorBasis",
    "HamiltonianMatrix",
    "StateVector",
    "enumerate_sector_basis",
    "enumerate_composite_basis",
    "build_full_hamiltonian",
    "battery_occupation_operator",
    "magnon_occupation_operator",
    "total_excitation_operator",
    "basis_state",
    "charged_initial_state",
    "dump_matrix",
]

Label = tuple[int, ...]


class SectorBasis:
    """Ordered set of occupation tuples closed under the model Hamiltonian.

    ``n_excitations`` is the common excitation count of all labels, or
    ``None`` for a composite (multi-sector) basis used in conservation
    checks.
    """

    def __init__(
        self,
        n_charger: int,
        m_battery: int,
        cutoff: int,
        labels: tuple[Label, ...],
        n_excitations: int | None,
    ):
        self.n_charger = int(n_charger)
        self.m_battery = int(m_battery)
        self.cutoff = int(cutoff)
        self.n_excitations = n_excitations
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate labels in basis")

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def split(self, label: Label) -> tuple[tuple[int, ...], int, tuple[int, ...]]:
        """Split a label into (charger bits, magnon number, battery bits)."""
        n = self.n_charger
        return label[:n], label[n], label[n + 1:]

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        sector = "all" if self.n_excitations is None else self.n_excitations
        return (
            f"SectorBasis(N={self.n_charger}, M={self.m_battery}, "
            f"cutoff={self.cutoff}, n_excitations={sector}, dim={self.dimension})"
        )


class HamiltonianMatrix:
    """Sparse Hermitian operator bound to the basis it acts on."""

    def __init__(self, matrix: sp.spmatrix, basis: SectorBasis):
        csr = sp.csr_matrix(matrix, dtype=complex)
        csr.sum_duplicates()
        csr.sort_indices()
        if csr.shape != (basis.dimension, basis.dimension):
            raise ValueError(
                f"matrix shape {csr.shape} does not match basis dimension {basis.dimension}"
            )
        if (csr != csr.getH()).nnz != 0:
            raise ValueError("matrix is not Hermitian")
        self.matrix = csr
        self.basis = basis

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, amplitudes: np.ndarray) -> float:
        """Real expectation value on a state; Hermiticity is guaranteed."""
        psi = np.asarray(amplitudes, dtype=complex)
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def __repr__(self) -> str:
        return f"HamiltonianMatrix(dim={self.dimension}, nnz={self.nnz})"


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over a basis."""

    amplitudes: np.ndarray
    basis: SectorBasis

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude vector of length {amps.shape} does not match "
                f"basis dimension {self.basis.dimension}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _battery_patterns(m_battery: int, count: int):
    """Battery bit tuples with a fixed excitation count, descending lex order."""
    for ones in itertools.combinations(range(m_battery), count):
        bits = [0] * m_battery
        for pos in ones:
            bits[pos] = 1
        yield tuple(bits)


def enumerate_sector_basis(
    n_charger: int, m_battery: int, cutoff: int, n_excitations: int
) -> SectorBasis:
    """All occupation tuples with the given total excitation number.

    Raises if the sector is empty (more excitations than the registers
    and the magnon ladder can hold).
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    if n_excitations < 0:
        raise ValueError("n_excitations must be non-negative")
    if n_excitations > n_charger + m_battery + cutoff:
        raise ValueError(
            f"empty sector: {n_excitations} excitations exceed capacity "
            f"{n_charger + m_battery + cutoff}"
        )
    labels = []
    for c_bits in itertools.product((1, 0), repeat=n_charger):
        remaining = n_excitations - sum(c_bits)
        if remaining < 0:
            continue
        for n_magnon in range(min(cutoff, remaining), -1, -1):
            b_count = remaining - n_magnon
            if b_count > m_battery:
                continue
            for b_bits in _battery_patterns(m_battery, b_count):
                labels.append(c_bits + (n_magnon,) + b_bits)
    return SectorBasis(n_charger, m_battery, cutoff, tuple(labels), n_excitations)


def enumerate_composite_basis(n_charger: int, m_battery: int, cutoff: int) -> SectorBasis:
    """Union of all excitation sectors up to the Fock cutoff.

    Exponentially large in N+M; intended for conservation checks on
    small registers, not for production sweeps.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    labels = []
    for c_bits in itertools.product((1, 0), repeat=n_charger):
        for n_magnon in range(cutoff, -1, -1):
            for b_bits in itertools.product((1, 0), repeat=m_battery):
                labels.append(c_bits + (n_magnon,) + b_bits)
    return SectorBasis(n_charger, m_battery, cutoff, tuple(labels), None)


def _check_compatible(config: SystemConfig, basis: SectorBasis):
    if (config.n_charger, config.m_battery) != (basis.n_charger, basis.m_battery):
        raise ValueError(
            f"config registers ({config.n_charger}, {config.m_battery}) do not match "
            f"basis registers ({basis.n_charger}, {basis.m_battery})"
        )
    if config.fock_cutoff is not None and config.fock_cutoff != basis.cutoff:
        raise ValueError(
            f"config fock_cutoff {config.fock_cutoff} does not match basis cutoff {basis.cutoff}"
        )


def build_full_hamiltonian(config: SystemConfig, basis: SectorBasis) -> HamiltonianMatrix:
    """Assemble the full spin-magnon Hamiltonian on the given basis.

    Free part omega*(spin excitations) + omega_m*n_magnon, flip-flop
    exchange within each register, and spin-mode exchange with bosonic
    factors sqrt(n), sqrt(n+1).  Every off-diagonal term is emitted
    together with its conjugate partner, so the matrix is Hermitian by
    construction.
    """
    _check_compatible(config, basis)
    n, m = basis.n_charger, basis.m_battery
    rows, cols, vals = [], [], []

    def add(q: int, p: int, v: float):
        rows.append(q)
        cols.append(p)
        vals.append(v)

    groups = (
        (0, config.g_charger, config.j_charger),
        (n + 1, config.g_battery, config.j_battery),
    )
    for p, label in enumerate(basis.labels):
        n_magnon = label[n]
        n_spins = sum(label) - n_magnon
        add(p, p, config.omega * n_spins + config.omega_m * n_magnon)
        for offset, g, jmat in groups:
            size = len(g)
            bits = label[offset:offset + size]
            for i in range(size):
                if bits[i] == 1 and n_magnon < basis.cutoff:
                    # spin lowers, magnon raises
                    target = list(label)
                    target[offset + i] = 0
                    target[n] = n_magnon + 1
                    q = basis.index.get(tuple(target))
                    if q is not None:
                        add(q, p, g[i] * math.sqrt(n_magnon + 1))
                elif bits[i] == 0 and n_magnon > 0:
                    # spin raises, magnon lowers
                    target = list(label)
                    target[offset + i] = 1
                    target[n] = n_magnon - 1
                    q = basis.index.get(tuple(target))
                    if q is not None:
                        add(q, p, g[i] * math.sqrt(n_magnon))
            for i in range(size):
                for j in range(size):
                    if i != j and bits[i] == 1 and bits[j] == 0 and jmat[i, j] != 0.0:
                        target = list(label)
                        target[offset + i] = 0
                        target[offset + j] = 1
                        q = basis.index.get(tuple(target))
                        if q is not None:
                            add(q, p, jmat[i, j])

    dim = basis.dimension
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return HamiltonianMatrix(matrix.tocsr(), basis)


def _diagonal_operator(diag: np.ndarray, basis: SectorBasis) -> HamiltonianMatrix:
    return HamiltonianMatrix(sp.diags(diag.astype(complex), format="csr"), basis)


def battery_occupation_operator(basis: SectorBasis) -> HamiltonianMatrix:
    """Diagonal count of excited battery spins."""
    diag = np.array([sum(basis.split(lab)[2]) for lab in basis.labels], dtype=float)
    return _diagonal_operator(diag, basis)


def magnon_occupation_operator(basis: SectorBasis) -> HamiltonianMatrix:
    """Diagonal magnon number."""
    diag = np.array([basis.split(lab)[1] for lab in basis.labels], dtype=float)
    return _diagonal_operator(diag, basis)


def total_excitation_operator(basis: SectorBasis) -> HamiltonianMatrix:
    """Diagonal total excitation number (constant on a single sector)."""
    diag = np.array([sum(lab) for lab in basis.labels], dtype=float)
    return _diagonal_operator(diag, basis)


def basis_state(basis: SectorBasis, label: Label) -> StateVector:
    """Unit amplitude on one occupation tuple."""
    try:
        pos = basis.index[tuple(label)]
    except KeyError:
        raise ValueError(f"label {tuple(label)} is not in the basis") from None
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[pos] = 1.0
    return StateVector(amps, basis)


def charged_initial_state(basis: SectorBasis) -> StateVector:
    """All chargers excited, magnon vacuum, battery in the ground state."""
    label = (1,) * basis.n_charger + (0,) + (0,) * basis.m_battery
    if tuple(label) not in basis.index:
        raise ValueError(
            "fully charged configuration is outside this basis; it requires "
            f"n_excitations={basis.n_charger}"
        )
    return basis_state(basis, label)


def dump_matrix(h: HamiltonianMatrix, path) -> None:
    """Write coordinate-format text: header, then 'row col re im' lines.

    Entries come out sorted by (row, col); floats use shortest
    round-trip formatting so the dump is deterministic.
    """
    coo = h.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"# dim={h.dimension} nnz={h.nnz}"]
    for k in order:
        v = coo.data[k]
        # plain-float repr: numpy scalar reprs are not round-trip text
        lines.append(f"{coo.row[k]} {coo.col[k]} {float(v.real)!r} {float(v.imag)!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
