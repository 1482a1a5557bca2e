"""Seeded identity batteries: commutators, Q0 frame and null structure, dominant energy, Sobolev."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import null_frame_derivatives, stress_energy
from .nullform import (COMMUTED, VECTORFIELD_IDENTITIES, ZooField, commutator_residual_q0,
                       commutator_residual_vectorfields, commuted_equation_residual, equatorial_wave_map,
                       null_plane_pair, q0, q0_frame, q0_null_bound_ratio, random_samples,
                       zoo_gradient_pairs)
from .sobolev import sobolev_battery


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tol: float
    passed: bool
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name, value, tol, samples, below=True) -> CheckResult:
    ok = bool(np.isfinite(value) and (value < tol if below else value <= tol))
    return CheckResult(name, float(value), float(tol), ok, int(samples))


def commutator_checks(rng, fields: int = 10, points: int = 200, tol: float = 1e-9) -> list[CheckResult]:
    zoo = [ZooField.random(rng) for _ in range(2 * fields)]
    pts = [random_samples(rng, points) for _ in range(fields)]
    out = []
    for ident in VECTORFIELD_IDENTITIES:
        res = max(commutator_residual_vectorfields(ident, zoo[i], pts[i]) for i in range(fields))
        out.append(_check(f"commutator[{ident}]", res, tol, fields * points))
    for X in ("L", "Lb"):
        res = max(commutator_residual_q0(X, (zoo[2 * i], zoo[2 * i + 1]), pts[i]) for i in range(fields))
        out.append(_check(f"commutator[{X},Q0]", res, tol, fields * points))
    return out


def commuted_equation_checks(rng, waves: int = 4, points: int = 200, tol: float = 1e-9) -> list[CheckResult]:
    """Commuted wave-map equations on exact equatorial solutions."""
    out = []
    fields = [equatorial_wave_map(np.column_stack([rng.uniform(0.2, 1.0, 2), rng.normal(size=(2, 2)),
                                                   rng.uniform(0, 2 * np.pi, 2)]))
              for _ in range(waves)]
    pts = [random_samples(rng, points) for _ in range(waves)]
    for which in COMMUTED:
        for n in range(3):
            res = max(commuted_equation_residual(n, which, f, p) for f, p in zip(fields, pts))
            out.append(_check(f"commuted[{which},n={n}]", res, tol, waves * points))
    return out


def q0_checks(rng, count: int = 10_000, tol: float = 1e-12) -> list[CheckResult]:
    pair, coords = zoo_gradient_pairs(rng, 20, count // 20)
    frame = np.max(np.abs(q0(pair) - q0_frame(pair, coords)))
    bound = np.max(q0_null_bound_ratio(pair, coords))
    null = null_plane_pair(rng, count)
    scale = np.linalg.norm(null.dphi, axis=(-2, -1)) * np.linalg.norm(null.dpsi, axis=(-2, -1))
    vanish = np.max(np.linalg.norm(q0(null), axis=-1) / scale)
    return [
        _check("q0_frame_identity", frame, tol, count),
        _check("q0_null_bound_ratio", bound, 1.0 + 1e-12, count, below=False),
        _check("q0_null_plane_vanishing", vanish, tol, count),
    ]


def dominant_energy_check(rng, count: int = 100_000) -> CheckResult:
    """Count samples with T(X, Y) < 0 for X, Y in {L, Lb}; zero is the pass condition."""
    grads = rng.normal(size=(3, count, 3)) * 10 ** rng.uniform(-2, 2, size=(1, count, 1))
    coords = random_samples(rng, count)
    d = null_frame_derivatives(grads[0], grads[1], grads[2], coords)
    bad = 0
    for X, Y in (("L", "L"), ("L", "Lb"), ("Lb", "Lb")):
        bad += int(np.sum(stress_energy(d, X, Y) < 0))
    return _check("dominant_energy_violations", bad, 0, count, below=False)


def run_verify(seed: int = 0, sobolev: bool = True, sobolev_count: int = 1000) -> dict:
    """All batteries for one seed; ``checks`` entries carry pass/fail and the max residual."""
    rng = np.random.default_rng(seed)
    checks = commutator_checks(rng) + commuted_equation_checks(rng) + q0_checks(rng)
    checks.append(dominant_energy_check(rng))
    sob = sobolev_battery(seed=seed, count=sobolev_count) if sobolev else []
    return {
        "seed": seed,
        "checks": [c.to_dict() for c in checks],
        "sobolev": [{"which": s.which, "c_sob": s.c_sob, "max_refined": s.max_refined,
                     "max_rel_change": s.max_rel_change, "passed": s.passed} for s in sob],
        "passed": all(c.passed for c in checks) and all(s.passed for s in sob),
    }
