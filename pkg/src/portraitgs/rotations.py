"""Rotation math: axis-angle, quaternions, and orthonormalization.

Quaternions use (w, x, y, z) ordering throughout. All functions are batched
over leading dimensions and differentiable (small-angle paths are series
expanded so gradients stay finite at zero rotation).
"""

import torch

_SMALL_ANGLE_SQ = 1e-12  # |theta| < 1e-6 switches Rodrigues to its series


def skew(v: torch.Tensor) -> torch.Tensor:
    """(..., 3) -> (..., 3, 3) cross-product matrix."""
    zero = torch.zeros_like(v[..., 0])
    return torch.stack(
        [
            torch.stack([zero, -v[..., 2], v[..., 1]], dim=-1),
            torch.stack([v[..., 2], zero, -v[..., 0]], dim=-1),
            torch.stack([-v[..., 1], v[..., 0], zero], dim=-1),
        ],
        dim=-2,
    )


def axis_angle_to_matrix(aa: torch.Tensor) -> torch.Tensor:
    """Rodrigues' formula, (..., 3) -> (..., 3, 3).

    Below |theta| = 1e-6 the sin(t)/t and (1-cos t)/t^2 factors use their
    Taylor series; the unused exact branch is fed a safe angle so autograd
    never sees a sqrt(0).
    """
    theta2 = (aa * aa).sum(-1)
    small = theta2 < _SMALL_ANGLE_SQ
    theta2_safe = torch.where(small, torch.ones_like(theta2), theta2)
    theta = theta2_safe.sqrt()
    a = torch.where(small, 1.0 - theta2 / 6.0, torch.sin(theta) / theta)
    b = torch.where(small, 0.5 - theta2 / 24.0, (1.0 - torch.cos(theta)) / theta2_safe)
    K = skew(aa)
    eye = torch.eye(3, dtype=aa.dtype, device=aa.device).expand(K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * (K @ K)


def quaternion_normalize(q: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    return q / q.norm(dim=-1, keepdim=True).clamp_min(eps)


def quaternion_multiply(q1: torch.Tensor, q2: torch.Tensor) -> torch.Tensor:
    """Hamilton product q1 * q2, both (..., 4) wxyz."""
    w1, x1, y1, z1 = q1.unbind(-1)
    w2, x2, y2, z2 = q2.unbind(-1)
    return torch.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        dim=-1,
    )


def quaternion_to_matrix(q: torch.Tensor) -> torch.Tensor:
    """Unit quaternion (..., 4) wxyz -> rotation matrix (..., 3, 3)."""
    w, x, y, z = quaternion_normalize(q).unbind(-1)
    row = torch.stack
    return torch.stack(
        [
            row([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], dim=-1),
            row([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], dim=-1),
            row([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], dim=-1),
        ],
        dim=-2,
    )


def _sqrt_positive(x: torch.Tensor) -> torch.Tensor:
    # sqrt(max(x, 0)) with a zero (not NaN) gradient at x <= 0
    pos = x > 0
    x_safe = torch.where(pos, x, torch.ones_like(x))
    return torch.where(pos, x_safe.sqrt(), torch.zeros_like(x))


def matrix_to_quaternion(m: torch.Tensor) -> torch.Tensor:
    """Rotation matrix (..., 3, 3) -> unit quaternion (..., 4) wxyz.

    Shepperd's candidate-selection method: all four candidates are formed,
    the one with the largest leading magnitude is picked, so the conversion
    is stable and differentiable away from the (measure-zero) ties.
    """
    m00, m01, m02 = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
    m10, m11, m12 = m[..., 1, 0], m[..., 1, 1], m[..., 1, 2]
    m20, m21, m22 = m[..., 2, 0], m[..., 2, 1], m[..., 2, 2]

    q_abs = _sqrt_positive(
        torch.stack(
            [
                1.0 + m00 + m11 + m22,
                1.0 + m00 - m11 - m22,
                1.0 - m00 + m11 - m22,
                1.0 - m00 - m11 + m22,
            ],
            dim=-1,
        )
    )

    # one candidate quaternion per row, scaled so its indexed component is q_abs^2
    cand = torch.stack(
        [
            torch.stack([q_abs[..., 0] ** 2, m21 - m12, m02 - m20, m10 - m01], dim=-1),
            torch.stack([m21 - m12, q_abs[..., 1] ** 2, m10 + m01, m02 + m20], dim=-1),
            torch.stack([m02 - m20, m10 + m01, q_abs[..., 2] ** 2, m12 + m21], dim=-1),
            torch.stack([m10 - m01, m20 + m02, m21 + m12, q_abs[..., 3] ** 2], dim=-1),
        ],
        dim=-2,
    )  # (..., 4, 4)

    denom = (2.0 * q_abs[..., None]).clamp_min(0.1)
    cand = cand / denom

    best = q_abs.argmax(dim=-1)
    one_hot = torch.nn.functional.one_hot(best, num_classes=4).to(dtype=m.dtype)
    q = (cand * one_hot[..., None]).sum(dim=-2)
    return quaternion_normalize(q)


def polar_orthonormalize(m: torch.Tensor, iters: int = 8) -> torch.Tensor:
    """Project (..., 3, 3) onto rotations via the Newton polar iteration.

    X <- (X + X^-T) / 2 converges quadratically for near-orthonormal input
    and, unlike an SVD route, has well-behaved gradients at exact rotations
    (where singular values coincide).
    """
    x = m
    for _ in range(iters):
        x = 0.5 * (x + torch.inverse(x).transpose(-1, -2))
    return x


def rigid_transform(points: torch.Tensor, rot: torch.Tensor, trans: torch.Tensor) -> torch.Tensor:
    """Apply R p + t over the last dimension; points (..., 3)."""
    return points @ rot.transpose(-1, -2) + trans
