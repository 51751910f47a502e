"""Reference centre of pressure from four vertical wheel forces.

The plates are zeroed with the empty wheelchair on them, so zeroed forces
belong to the subject alone. Contact coordinates are wheelchair-frame
constants (the wheels are braked), which makes the CoP a weighted average
of the contact coordinates directly in wheelchair coordinates:

    AP = sum(F_i * x_i) / sum(F_i),  ML = sum(F_i * z_i) / sum(F_i)
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import (
    AllSamplesNegligible,
    EmptyRecord,
    EmptyWindow,
    NegligibleLoad,
    NonFiniteInput,
)

GRAVITY_M_S2 = 9.81

# Below this total vertical load the CoP quotient is numerically
# meaningless (roughly 1% of a light subject's weight).
FORCE_EPSILON_N = 10.0


@dataclass(frozen=True)
class ForceRecord:
    """Time series of the four vertical plate forces, one column per wheel."""

    times: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.forces, dtype=float)
        if t.ndim != 1 or f.shape != (t.shape[0], 4):
            raise ValueError("times must be (N,) and forces (N,4)")
        if t.size == 0:
            raise EmptyRecord("force record has no samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise NonFiniteInput("force record contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise ValueError("force record times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "forces", f)


@dataclass(frozen=True)
class ZeroOffset:
    """Per-plate force offsets measured with the empty wheelchair."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (4,) or not np.all(np.isfinite(v)):
            raise NonFiniteInput("zero offsets must be 4 finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class CopSample:
    """Centre of pressure at one instant (or averaged over a window)."""

    time: float
    ap: float
    ml: float
    total_force: float
    negative_force: bool = False
    n_excluded: int = 0


def compute_zero_offset(empty_record: ForceRecord) -> ZeroOffset:
    """Per-plate mean force over an empty-wheelchair record."""
    return ZeroOffset(empty_record.forces.mean(axis=0))


def _contact_xz(contacts) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(contacts, dtype=float)
    if c.shape == (4, 3):
        return c[:, 0], c[:, 2]
    if c.shape == (4, 2):
        return c[:, 0], c[:, 1]
    raise ValueError("contacts must be (4,3) wheelchair-frame points or (4,2) (AP, ML)")


def cop_instant(
    forces, offsets: ZeroOffset, contacts, time: float = 0.0
) -> CopSample:
    """CoP of one force sample after zeroing.

    Raises NegligibleLoad when the summed zeroed force is at or below the
    epsilon. Negative zeroed forces (sensor noise) stay in the quotient but
    set the ``negative_force`` flag.
    """
    f = np.asarray(forces, dtype=float)
    if f.shape != (4,) or not np.all(np.isfinite(f)):
        raise NonFiniteInput("forces must be 4 finite values")
    x, z = _contact_xz(contacts)
    zeroed = f - offsets.values
    total = zeroed.sum()
    if total <= FORCE_EPSILON_N:
        raise NegligibleLoad(
            f"total zeroed force {total:.3f} N is below {FORCE_EPSILON_N} N"
        )
    ap = float((zeroed * x).sum() / total)
    ml = float((zeroed * z).sum() / total)
    return CopSample(
        time=float(time),
        ap=ap,
        ml=ml,
        total_force=float(total),
        negative_force=bool(np.any(zeroed < 0.0)),
    )


def cop_average(
    record: ForceRecord, offsets: ZeroOffset, contacts, window: tuple
) -> CopSample:
    """Mean of per-sample CoP over the valid samples inside [t0, t1].

    Samples failing the load threshold are excluded and counted in
    ``n_excluded``.
    """
    t0, t1 = float(window[0]), float(window[1])
    sel = (record.times >= t0) & (record.times <= t1)
    if not np.any(sel):
        raise EmptyWindow(f"no force samples inside window [{t0}, {t1}]")
    x, z = _contact_xz(contacts)
    zeroed = record.forces[sel] - offsets.values
    totals = zeroed.sum(axis=1)
    valid = totals > FORCE_EPSILON_N
    n_excluded = int(np.count_nonzero(~valid))
    if not np.any(valid):
        raise AllSamplesNegligible(
            f"all {n_excluded} samples in the window fall below {FORCE_EPSILON_N} N"
        )
    ap = (zeroed[valid] @ x) / totals[valid]
    ml = (zeroed[valid] @ z) / totals[valid]
    return CopSample(
        time=0.5 * (t0 + t1),
        ap=float(ap.mean()),
        ml=float(ml.mean()),
        total_force=float(totals[valid].mean()),
        negative_force=bool(np.any(zeroed[valid] < 0.0)),
        n_excluded=n_excluded,
    )
