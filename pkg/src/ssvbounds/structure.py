"""Uncertainty block structures and structured perturbations."""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from .linalg import sigma_max

__all__ = [
    "RepeatedScalar",
    "FullBlock",
    "RepeatedFullBlock",
    "BlockStructure",
    "Perturbation",
]


@dataclass(frozen=True)
class RepeatedScalar:
    """delta * I_v."""

    v: int

    def __post_init__(self):
        if int(self.v) < 1:
            raise ValueError("RepeatedScalar.v must be >= 1")

    @property
    def rows(self):
        return self.v

    cols = rows


@dataclass(frozen=True)
class FullBlock:
    """An unstructured dim x dim complex block."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("FullBlock.dim must be >= 1")

    @property
    def rows(self):
        return self.dim

    cols = rows


@dataclass(frozen=True)
class RepeatedFullBlock:
    """I_v kron Delta_1 with Delta_1 of size m1 x n1 (n1 defaults to m1).

    Rectangular blocks are experimental; the solvers are exercised mainly on
    square ones.
    """

    v: int
    m1: int
    n1: Union[int, None] = None

    def __post_init__(self):
        if int(self.v) < 1 or int(self.m1) < 1:
            raise ValueError("RepeatedFullBlock needs v >= 1 and m1 >= 1")
        if self.n1 is None:
            object.__setattr__(self, "n1", self.m1)
        elif int(self.n1) < 1:
            raise ValueError("RepeatedFullBlock.n1 must be >= 1")

    @property
    def rows(self):
        return self.v * self.m1

    @property
    def cols(self):
        return self.v * self.n1


Block = Union[RepeatedScalar, FullBlock, RepeatedFullBlock]

_TYPE_NAMES = {
    "repeated_scalar": RepeatedScalar,
    "full": FullBlock,
    "repeated_full": RepeatedFullBlock,
}


@dataclass(frozen=True)
class BlockStructure:
    """Ordered block-diagonal uncertainty description.

    `row_dim` x `col_dim` is the shape of Delta; the matrix M it closes the
    loop with is col_dim x row_dim.
    """

    blocks: Tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a block structure needs at least one block")
        if any(isinstance(b, RepeatedFullBlock) for b in blocks) and len(blocks) != 1:
            raise ValueError("a repeated full block must be the only block in the structure")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, *blocks):
        return cls(tuple(blocks))

    @property
    def row_dim(self):
        return sum(b.rows for b in self.blocks)

    @property
    def col_dim(self):
        return sum(b.cols for b in self.blocks)

    @property
    def is_repeated_full(self):
        return isinstance(self.blocks[0], RepeatedFullBlock)

    @property
    def repeated(self) -> RepeatedFullBlock:
        if not self.is_repeated_full:
            raise ValueError("structure has no repeated full block")
        return self.blocks[0]

    def row_slices(self):
        """Slices of u = Delta y (length row_dim), one per block."""
        return _slices(b.rows for b in self.blocks)

    def col_slices(self):
        """Slices of y (length col_dim), one per block."""
        return _slices(b.cols for b in self.blocks)

    def check_matrix(self, M):
        M = np.asarray(M)
        if M.shape != (self.col_dim, self.row_dim):
            raise ValueError(
                f"structure expects M of shape {(self.col_dim, self.row_dim)}, got {M.shape}"
            )

    def non_repeated(self):
        """The non-repeated relaxation: each repeated copy becomes its own full block."""
        if not self.is_repeated_full:
            return self
        b = self.repeated
        if b.m1 != b.n1:
            raise ValueError("non-repeated relaxation needs square blocks")
        return BlockStructure(tuple(FullBlock(b.m1) for _ in range(b.v)))

    def to_dict(self):
        out = []
        for b in self.blocks:
            if isinstance(b, RepeatedScalar):
                out.append({"type": "repeated_scalar", "v": b.v})
            elif isinstance(b, FullBlock):
                out.append({"type": "full", "dim": b.dim})
            else:
                d = {"type": "repeated_full", "v": b.v, "m1": b.m1}
                if b.n1 != b.m1:
                    d["n1"] = b.n1
                out.append(d)
        return {"blocks": out}

    @classmethod
    def from_dict(cls, d):
        if "blocks" not in d:
            d = {"blocks": [d]}
        blocks = []
        for item in d["blocks"]:
            kind = item.get("type")
            if kind not in _TYPE_NAMES:
                raise ValueError(f"unknown block type {kind!r}")
            args = {k: int(v) for k, v in item.items() if k != "type"}
            blocks.append(_TYPE_NAMES[kind](**args))
        return cls(tuple(blocks))


def _slices(sizes):
    out, start = [], 0
    for n in sizes:
        out.append(slice(start, start + n))
        start += n
    return out


@dataclass(frozen=True)
class Perturbation:
    """A structured Delta with its assembled block-diagonal matrix."""

    structure: BlockStructure
    block_values: Tuple[np.ndarray, ...]
    assembled: np.ndarray = field(repr=False)
    norm: float

    @classmethod
    def build(cls, structure, block_values):
        vals = []
        parts = []
        if len(block_values) != len(structure.blocks):
            raise ValueError("one value per structural block is required")
        for b, val in zip(structure.blocks, block_values):
            val = np.asarray(val, dtype=np.complex128)
            if isinstance(b, RepeatedScalar):
                val = val.reshape(())
                parts.append(val * np.eye(b.v))
            elif isinstance(b, FullBlock):
                if val.shape != (b.dim, b.dim):
                    raise ValueError(f"full block value must be {b.dim}x{b.dim}")
                parts.append(val)
            else:
                if val.shape != (b.m1, b.n1):
                    raise ValueError(f"repeated block value must be {b.m1}x{b.n1}")
                parts.append(np.kron(np.eye(b.v), val))
            vals.append(val)
        assembled = block_diag(*parts).astype(np.complex128)
        assembled.setflags(write=False)
        return cls(structure, tuple(vals), assembled, sigma_max(assembled))

    def scaled(self, c):
        """c * Delta, still in the same structure."""
        return Perturbation.build(self.structure, [c * v for v in self.block_values])
