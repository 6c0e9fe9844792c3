"""Reader for the standard FCIDUMP integral file format.

The file starts with a ``&FCI`` header carrying NORB/NELEC/MS2 and ends
it with ``&END`` (or ``/``); every following line is ``value i j k l``
with 1-based indices in chemist notation: ``i j 0 0`` is a one-electron
element h_ij, ``0 0 0 0`` is the core energy, anything else is the
two-electron integral (ij|kl).  Real integrals are expanded to their full
8-fold permutational symmetry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .fermion import FermionOp

__all__ = ["FcidumpData", "FcidumpError", "parse_fcidump"]


class FcidumpError(ValueError):
    """Malformed FCIDUMP content; the message carries the line number."""


@dataclass
class FcidumpData:
    """Parsed integrals plus the second-quantized operator expansion."""

    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_orbitals

    def fermion_ops(self, threshold: float = 1e-12) -> list[FermionOp]:
        """Spin-orbital ladder products of the electronic Hamiltonian.

        Uses mode = 2 * spatial + spin and the chemist-notation form
        sum_pq h_pq a^dag_p a_q
        + 1/2 sum_pqrs (pq|rs) a^dag_{p,s1} a^dag_{r,s2} a_{s,s2} a_{q,s1}.
        """
        ops: list[FermionOp] = []
        norb = self.n_orbitals
        for p in range(norb):
            for q in range(norb):
                if abs(self.one_body[p, q]) <= threshold:
                    continue
                for spin in (0, 1):
                    ops.append(
                        FermionOp.product(
                            complex(self.one_body[p, q]),
                            (2 * p + spin, True),
                            (2 * q + spin, False),
                        )
                    )
        for p in range(norb):
            for q in range(norb):
                for r in range(norb):
                    for s in range(norb):
                        val = self.two_body[p, q, r, s]
                        if abs(val) <= threshold:
                            continue
                        for s1 in (0, 1):
                            for s2 in (0, 1):
                                ops.append(
                                    FermionOp.product(
                                        0.5 * complex(val),
                                        (2 * p + s1, True),
                                        (2 * r + s2, True),
                                        (2 * s + s2, False),
                                        (2 * q + s1, False),
                                    )
                                )
        return ops


_HEADER_FIELD = re.compile(r"([A-Za-z0-9]+)\s*=\s*(-?\d+)")


def parse_fcidump(path) -> FcidumpData:
    """Parse an FCIDUMP file; raises :class:`FcidumpError` with line numbers."""
    with open(path, "r", encoding="ascii") as handle:
        lines = handle.readlines()

    header_fields: dict[str, int] = {}
    body_start = None
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if body_start is None:
            for key, value in _HEADER_FIELD.findall(stripped):
                header_fields.setdefault(key.upper(), int(value))
            if "&END" in stripped.upper() or stripped == "/" or stripped.endswith("/"):
                body_start = lineno
            continue

    if body_start is None:
        raise FcidumpError("missing &END (or /) header terminator")
    for required in ("NORB", "NELEC"):
        if required not in header_fields:
            raise FcidumpError(f"header is missing {required}")

    norb = header_fields["NORB"]
    nelec = header_fields["NELEC"]
    ms2 = header_fields.get("MS2", 0)
    if norb < 1:
        raise FcidumpError(f"invalid NORB={norb}")

    core = 0.0
    one_body = np.zeros((norb, norb))
    two_body = np.zeros((norb, norb, norb, norb))

    for lineno in range(body_start + 1, len(lines) + 1):
        stripped = lines[lineno - 1].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 5:
            raise FcidumpError(
                f"line {lineno}: expected 'value i j k l', got {stripped!r}"
            )
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {lineno}: {exc}") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FcidumpError(
                    f"line {lineno}: orbital index {idx} out of range 1..{norb}"
                )
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"line {lineno}: bad one-electron indices")
            one_body[i - 1, j - 1] = value
            one_body[j - 1, i - 1] = value
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"line {lineno}: bad two-electron indices")
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (p, q, r, s),
                (q, p, r, s),
                (p, q, s, r),
                (q, p, s, r),
                (r, s, p, q),
                (s, r, p, q),
                (r, s, q, p),
                (s, r, q, p),
            ):
                two_body[a, b, c, d] = value

    return FcidumpData(
        n_orbitals=norb,
        n_electrons=nelec,
        ms2=ms2,
        core_energy=core,
        one_body=one_body,
        two_body=two_body,
    )
