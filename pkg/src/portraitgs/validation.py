"""Input validation helpers.

Small checks used at module boundaries so shape/domain errors surface as
InvalidArgumentError with a readable message instead of a torch stack trace.
"""

import torch

from .exceptions import InvalidArgumentError


def check_shape(t: torch.Tensor, shape, name: str) -> torch.Tensor:
    """Check tensor shape; entries of `shape` that are None match anything."""
    if t.dim() != len(shape):
        raise InvalidArgumentError(f"{name}: expected rank {len(shape)}, got shape {tuple(t.shape)}")
    for i, want in enumerate(shape):
        if want is not None and t.shape[i] != want:
            raise InvalidArgumentError(f"{name}: expected shape {shape}, got {tuple(t.shape)}")
    return t


def check_finite(t: torch.Tensor, name: str) -> torch.Tensor:
    if not bool(torch.isfinite(t).all()):
        bad = torch.nonzero(~torch.isfinite(t))
        where = tuple(bad[0].tolist()) if bad.numel() else "?"
        raise InvalidArgumentError(f"{name}: non-finite value at index {where}")
    return t


def check_unit_range(t: torch.Tensor, name: str, tol: float = 0.0) -> torch.Tensor:
    lo = float(t.min()) if t.numel() else 0.0
    hi = float(t.max()) if t.numel() else 0.0
    if lo < -tol or hi > 1.0 + tol:
        raise InvalidArgumentError(f"{name}: values outside [0, 1] (min={lo:g}, max={hi:g})")
    return t


def check_same_shape(a: torch.Tensor, b: torch.Tensor, name_a: str, name_b: str):
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"shape mismatch: {name_a} is {tuple(a.shape)}, {name_b} is {tuple(b.shape)}"
        )


def as_tensor(x, dtype=None, name: str = "input") -> torch.Tensor:
    try:
        t = torch.as_tensor(x, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name}: cannot convert to tensor ({exc})") from exc
    return t
