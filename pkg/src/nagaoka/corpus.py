"""Built-in model corpus: small graphs spanning connected and disconnected
sectors, all at infinite U with unit hopping."""

from __future__ import annotations

from .model import LatticeModel, generate_lattice


def pair2() -> LatticeModel:
    return LatticeModel(2, generate_lattice("complete", 2, 1.0))


def chain3() -> LatticeModel:
    return LatticeModel(3, generate_lattice("chain", 3, 1.0))


def triangle3() -> LatticeModel:
    return LatticeModel(3, generate_lattice("complete", 3, 1.0))


def cycle4() -> LatticeModel:
    """2 x 2 square patch, i.e. the 4-cycle."""
    return LatticeModel(4, generate_lattice("square_patch", (2, 2), 1.0))


def complete4() -> LatticeModel:
    return LatticeModel(4, generate_lattice("complete", 4, 1.0))


def square_diag4() -> LatticeModel:
    """2 x 2 patch with one cell diagonal."""
    return LatticeModel(4, generate_lattice("triangular_patch", (2, 2), 1.0))


CORPUS = {
    "pair2": pair2,
    "chain3": chain3,
    "triangle3": triangle3,
    "cycle4": cycle4,
    "complete4": complete4,
    "square_diag4": square_diag4,
}


def corpus_models() -> dict[str, LatticeModel]:
    return {name: factory() for name, factory in CORPUS.items()}
