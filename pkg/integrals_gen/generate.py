"""One-shot FCIDUMP fixture generator for hydrogen chains in STO-3G.

Hydrogen-only systems need nothing beyond s-type contracted Gaussians, so
the restricted Hartree-Fock orbitals, the transformed integrals, and a
full-CI reference energy are computed here directly from the closed-form
s-orbital formulas (overlap/kinetic/nuclear/repulsion via the Boys
function).  Each emitted FCIDUMP gets a JSON sidecar recording the
geometry and the SCF/FCI reference energies.

Usage:
    python generate.py --out-dir ../src/mtqite/data/fcidump \
        --h2-distance 0.74 --h4-distances 0.60 0.70 0.80 0.90 1.00 1.10 1.20
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

GENERATOR_VERSION = "1.0"
ANGSTROM_TO_BOHR = 1.8897259886

# STO-3G hydrogen 1s: primitive exponents and contraction coefficients
# (coefficients apply to normalized primitives).
H_EXPONENTS = np.array([3.425250914, 0.6239137298, 0.1688554040])
H_COEFFS = np.array([0.1543289673, 0.5353281423, 0.4446345422])


@dataclass(frozen=True)
class GeometrySpec:
    """Nuclear geometry: element symbols with coordinates in Angstrom."""

    symbols: tuple[str, ...]
    coordinates: tuple[tuple[float, float, float], ...]
    basis: str = "STO-3G"
    charge: int = 0
    multiplicity: int = 1

    @classmethod
    def hydrogen_chain(cls, n_atoms: int, spacing: float) -> "GeometrySpec":
        if spacing <= 0:
            raise ValueError(f"degenerate geometry: spacing {spacing} must be positive")
        coords = tuple((0.0, 0.0, k * spacing) for k in range(n_atoms))
        return cls(symbols=("H",) * n_atoms, coordinates=coords)

    @property
    def n_electrons(self) -> int:
        return len(self.symbols) - self.charge


def boys_f0(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    big = t > 1e-12
    out[big] = 0.5 * np.sqrt(np.pi / t[big]) * erf(np.sqrt(t[big]))
    return out


def _primitive_norms(exponents):
    return (2.0 * exponents / np.pi) ** 0.75


def ao_integrals(geometry: GeometrySpec):
    """Contracted s-orbital AO integrals: overlap, kinetic, nuclear, ERI."""
    if any(sym != "H" for sym in geometry.symbols):
        raise ValueError("only hydrogen chains are supported")
    centers = np.array(geometry.coordinates) * ANGSTROM_TO_BOHR
    n_ao = len(centers)
    exps, coeffs = H_EXPONENTS, H_COEFFS * _primitive_norms(H_EXPONENTS)

    # every (atom, primitive) pair is one primitive basis function
    prim_center = np.repeat(np.arange(n_ao), len(exps))
    prim_exp = np.tile(exps, n_ao)
    prim_coeff = np.tile(coeffs, n_ao)
    n_prim = len(prim_exp)

    a = prim_exp[:, None]
    b = prim_exp[None, :]
    p = a + b
    mu = a * b / p
    diff = centers[prim_center][:, None, :] - centers[prim_center][None, :, :]
    r2 = np.sum(diff**2, axis=-1)
    kab = np.exp(-mu * r2)
    gauss_product_center = (
        a[..., None] * centers[prim_center][:, None, :]
        + b[..., None] * centers[prim_center][None, :, :]
    ) / p[..., None]

    overlap_prim = (np.pi / p) ** 1.5 * kab
    kinetic_prim = mu * (3.0 - 2.0 * mu * r2) * overlap_prim
    nuclear_prim = np.zeros((n_prim, n_prim))
    for nucleus in centers:
        pc2 = np.sum((gauss_product_center - nucleus) ** 2, axis=-1)
        nuclear_prim -= (2.0 * np.pi / p) * kab * boys_f0(p * pc2)

    cc = prim_coeff[:, None] * prim_coeff[None, :]
    contract = np.zeros((n_ao, n_prim))
    for ao in range(n_ao):
        contract[ao, prim_center == ao] = 1.0
    overlap = contract @ (cc * overlap_prim) @ contract.T
    kinetic = contract @ (cc * kinetic_prim) @ contract.T
    nuclear = contract @ (cc * nuclear_prim) @ contract.T

    # two-electron integrals in chemist notation (ab|cd)
    eri_prim = np.zeros((n_prim,) * 4)
    q = p  # same exponent table for the second electron pair
    for i, j in itertools.product(range(n_prim), repeat=2):
        pij = p[i, j]
        pij_center = gauss_product_center[i, j]
        pref_ij = kab[i, j]
        rho_denominator = pij + q
        rho = pij * q / rho_denominator
        pq2 = np.sum((pij_center[None, None, :] - gauss_product_center) ** 2, axis=-1)
        eri_prim[i, j] = (
            2.0
            * np.pi**2.5
            / (pij * q * np.sqrt(rho_denominator))
            * pref_ij
            * kab
            * boys_f0(rho * pq2)
        )
    eri = np.einsum(
        "ai,bj,ck,dl,ijkl->abcd",
        contract * prim_coeff[None, :],
        contract * prim_coeff[None, :],
        contract * prim_coeff[None, :],
        contract * prim_coeff[None, :],
        eri_prim,
        optimize=True,
    )

    e_nuc = 0.0
    for i in range(n_ao):
        for j in range(i):
            e_nuc += 1.0 / np.linalg.norm(centers[i] - centers[j])
    return overlap, kinetic + nuclear, eri, e_nuc


def restricted_hartree_fock(overlap, hcore, eri, n_electrons, max_iter=500, tol=1e-12):
    """Closed-shell SCF with symmetric orthogonalization and damping."""
    if n_electrons % 2:
        raise ValueError("restricted HF requires an even electron count")
    n_occ = n_electrons // 2
    vals, vecs = np.linalg.eigh(overlap)
    x = vecs @ np.diag(vals**-0.5) @ vecs.T
    density = np.zeros_like(overlap)
    energy = 0.0
    for iteration in range(max_iter):
        coulomb = np.einsum("pqrs,rs->pq", eri, density)
        exchange = np.einsum("prqs,rs->pq", eri, density)
        fock = hcore + coulomb - 0.5 * exchange
        new_energy = 0.5 * np.sum(density * (hcore + fock))
        _, c_prime = np.linalg.eigh(x.T @ fock @ x)
        mo = x @ c_prime
        new_density = 2.0 * mo[:, :n_occ] @ mo[:, :n_occ].T
        delta = np.max(np.abs(new_density - density))
        if iteration > 0 and delta > 1e-4:
            new_density = 0.5 * new_density + 0.5 * density  # damp oscillations
        converged = delta < tol and abs(new_energy - energy) < tol
        density, energy = new_density, new_energy
        if converged:
            return energy, mo
    raise RuntimeError(f"SCF did not converge within {max_iter} iterations")


def mo_integrals(hcore, eri, mo):
    h_mo = mo.T @ hcore @ mo
    eri_mo = np.einsum("pa,qb,rc,sd,pqrs->abcd", mo, mo, mo, mo, eri, optimize=True)
    return h_mo, eri_mo


def full_ci_energy(h_mo, eri_mo, n_electrons):
    """Lowest eigenvalue in the N-electron sector of the Fock space.

    Builds the second-quantized Hamiltonian densely from ladder-operator
    matrices over spin orbitals (mode = 2 * spatial + spin), one
    independent route against which downstream qubit-Hamiltonian code can
    be validated.
    """
    norb = h_mo.shape[0]
    n_modes = 2 * norb
    dim = 1 << n_modes

    def annihilator(mode):
        mat = np.zeros((dim, dim))
        for f in range(dim):
            if (f >> mode) & 1:
                sign = (-1) ** int(bin(f & ((1 << mode) - 1)).count("1"))
                mat[f ^ (1 << mode), f] = sign
        return mat

    ann = [annihilator(m) for m in range(n_modes)]
    ham = np.zeros((dim, dim))
    for pq in itertools.product(range(norb), repeat=2):
        p_orb, q_orb = pq
        if abs(h_mo[p_orb, q_orb]) < 1e-14:
            continue
        for spin in (0, 1):
            ham += h_mo[p_orb, q_orb] * ann[2 * p_orb + spin].T @ ann[2 * q_orb + spin]
    for p_orb, q_orb, r_orb, s_orb in itertools.product(range(norb), repeat=4):
        val = eri_mo[p_orb, q_orb, r_orb, s_orb]
        if abs(val) < 1e-14:
            continue
        for s1 in (0, 1):
            for s2 in (0, 1):
                ham += (
                    0.5
                    * val
                    * ann[2 * p_orb + s1].T
                    @ ann[2 * r_orb + s2].T
                    @ ann[2 * s_orb + s2]
                    @ ann[2 * q_orb + s1]
                )
    counts = np.array([int(f).bit_count() for f in range(dim)])
    sector = np.where(counts == n_electrons)[0]
    block = ham[np.ix_(sector, sector)]
    return float(np.linalg.eigvalsh(block)[0])


def write_fcidump(path, h_mo, eri_mo, e_nuc, n_electrons, ms2=0, threshold=1e-16):
    """Write the canonical 8-fold-symmetry-unique entries."""
    norb = h_mo.shape[0]
    with open(path, "w") as out:
        out.write(f" &FCI NORB={norb:4d},NELEC={n_electrons:3d},MS2={ms2:d},\n")
        out.write("  ORBSYM=" + "1," * norb + "\n")
        out.write("  ISYM=1,\n")
        out.write(" &END\n")
        for p in range(norb):
            for q in range(p + 1):
                for r in range(p + 1):
                    s_max = q if r == p else r
                    for s in range(s_max + 1):
                        val = eri_mo[p, q, r, s]
                        if abs(val) > threshold:
                            out.write(
                                f" {val:.16e} {p + 1:3d} {q + 1:3d} {r + 1:3d} {s + 1:3d}\n"
                            )
        for p in range(norb):
            for q in range(p + 1):
                if abs(h_mo[p, q]) > threshold:
                    out.write(f" {h_mo[p, q]:.16e} {p + 1:3d} {q + 1:3d}   0   0\n")
        out.write(f" {e_nuc:.16e}   0   0   0   0\n")


def emit_fcidump(geometry: GeometrySpec, out_path: Path) -> dict:
    """Full pipeline: integrals -> RHF -> MO transform -> files + sidecar."""
    overlap, hcore, eri, e_nuc = ao_integrals(geometry)
    e_scf_elec, mo = restricted_hartree_fock(overlap, hcore, eri, geometry.n_electrons)
    h_mo, eri_mo = mo_integrals(hcore, eri, mo)
    e_fci_elec = full_ci_energy(h_mo, eri_mo, geometry.n_electrons)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_fcidump(out_path, h_mo, eri_mo, e_nuc, geometry.n_electrons)
    metadata = {
        "generator": f"integrals_gen {GENERATOR_VERSION}",
        "basis": geometry.basis,
        "symbols": list(geometry.symbols),
        "coordinates_angstrom": [list(c) for c in geometry.coordinates],
        "charge": geometry.charge,
        "multiplicity": geometry.multiplicity,
        "n_electrons": geometry.n_electrons,
        "nuclear_repulsion": e_nuc,
        "scf_energy": e_scf_elec + e_nuc,
        "fci_energy": e_fci_elec + e_nuc,
    }
    sidecar = out_path.with_suffix(out_path.suffix + ".json")
    with open(sidecar, "w") as handle:
        json.dump(metadata, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return metadata


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, required=True)
    parser.add_argument(
        "--h2-distance", type=float, default=0.74,
        help="H2 bond length in Angstrom (0 disables the H2 fixture)",
    )
    parser.add_argument(
        "--h4-distances", type=float, nargs="*",
        default=[0.60, 0.70, 0.80, 0.90, 1.00, 1.10, 1.20],
        help="uniform H4 chain spacings in Angstrom",
    )
    args = parser.parse_args(argv)
    try:
        if args.h2_distance:
            geometry = GeometrySpec.hydrogen_chain(2, args.h2_distance)
            meta = emit_fcidump(geometry, args.out_dir / f"h2_{args.h2_distance:.2f}.fcidump")
            print(f"h2 d={args.h2_distance:.2f}: FCI {meta['fci_energy']:.10f} Ha")
        for spacing in args.h4_distances:
            geometry = GeometrySpec.hydrogen_chain(4, spacing)
            meta = emit_fcidump(geometry, args.out_dir / f"h4_{spacing:.2f}.fcidump")
            print(f"h4 d={spacing:.2f}: FCI {meta['fci_energy']:.10f} Ha")
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
