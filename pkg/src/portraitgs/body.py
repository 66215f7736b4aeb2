"""Parametric skinned body model.

Template + blendshapes (shape / expression / pose-corrective), joint
regression, linear blend skinning over an axis-angle joint chain, and an
additive learnable vertex displacement applied to the skinned mesh. All
operations are pure and differentiable w.r.t. every continuous input.
"""

import threading
from dataclasses import dataclass, field
from typing import Optional

import torch

from .exceptions import InvalidArgumentError, InvariantViolationError
from .rotations import axis_angle_to_matrix, polar_orthonormalize
from .validation import check_finite, check_shape

_WEIGHT_ROW_TOL = 1e-12
_FRAME_ORTHO_TOL = 1e-6
_DEGENERATE_AREA_EPS = 1e-12

_degenerate_face_lock = threading.Lock()
_degenerate_face_count = 0


def degenerate_face_warnings() -> int:
    """Number of zero-area faces that fell back to identity frames so far."""
    return _degenerate_face_count


def _count_degenerate_faces(n: int):
    global _degenerate_face_count
    with _degenerate_face_lock:
        _degenerate_face_count += n


@dataclass
class BodyAsset:
    """Static model data: template mesh, bases, skinning weights, joint tree.

    Shapes: template_vertices (V,3), faces (F,3) long, uv_corners (F,3,2),
    shape_basis (V,3,Nb), expression_basis (V,3,Ne), pose_basis (V,3,Np),
    joint_regressor (J,V), skinning_weights (V,J), parent (J,) long with
    parent[0] == -1.
    """

    template_vertices: torch.Tensor
    faces: torch.Tensor
    uv_corners: torch.Tensor
    shape_basis: torch.Tensor
    expression_basis: torch.Tensor
    pose_basis: torch.Tensor
    joint_regressor: torch.Tensor
    skinning_weights: torch.Tensor
    parent: torch.Tensor

    @property
    def num_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def num_joints(self) -> int:
        return self.parent.shape[0]

    @property
    def num_shape(self) -> int:
        return self.shape_basis.shape[2]

    @property
    def num_expression(self) -> int:
        return self.expression_basis.shape[2]

    @property
    def num_pose_basis(self) -> int:
        return self.pose_basis.shape[2]

    @property
    def dtype(self) -> torch.dtype:
        return self.template_vertices.dtype

    def validate(self):
        v, f, j = self.num_vertices, self.num_faces, self.num_joints
        check_shape(self.template_vertices, (v, 3), "template_vertices")
        check_shape(self.faces, (f, 3), "faces")
        check_shape(self.uv_corners, (f, 3, 2), "uv_corners")
        check_shape(self.shape_basis, (v, 3, None), "shape_basis")
        check_shape(self.expression_basis, (v, 3, None), "expression_basis")
        check_shape(self.pose_basis, (v, 3, None), "pose_basis")
        check_shape(self.joint_regressor, (j, v), "joint_regressor")
        check_shape(self.skinning_weights, (v, j), "skinning_weights")
        if int(self.faces.max()) >= v or int(self.faces.min()) < 0:
            raise InvalidArgumentError("faces index out of range")
        if float(self.uv_corners.min()) < 0.0 or float(self.uv_corners.max()) > 1.0:
            raise InvalidArgumentError("uv_corners outside [0, 1]")
        if bool((self.skinning_weights < 0).any()):
            raise InvalidArgumentError("skinning weights must be nonnegative")
        row_sums = self.skinning_weights.sum(dim=1)
        if float((row_sums - 1.0).abs().max()) > _WEIGHT_ROW_TOL:
            raise InvariantViolationError(
                f"skinning weight rows must sum to 1 within {_WEIGHT_ROW_TOL:g} "
                f"(worst {float((row_sums - 1.0).abs().max()):.3e})"
            )
        if int(self.parent[0]) != -1:
            raise InvalidArgumentError("joint 0 must be the root (parent -1)")
        # tree rooted at 0, parents preceding children so FK runs in index order
        for k in range(1, j):
            if not 0 <= int(self.parent[k]) < k:
                raise InvalidArgumentError(f"joint {k}: parent must be an earlier joint")
        return self

    def to(self, dtype: torch.dtype) -> "BodyAsset":
        if dtype == self.dtype:
            return self
        cast = lambda t: t.to(dtype)
        return BodyAsset(
            template_vertices=cast(self.template_vertices),
            faces=self.faces,
            uv_corners=cast(self.uv_corners),
            shape_basis=cast(self.shape_basis),
            expression_basis=cast(self.expression_basis),
            pose_basis=cast(self.pose_basis),
            joint_regressor=cast(self.joint_regressor),
            skinning_weights=cast(self.skinning_weights),
            parent=self.parent,
        )


@dataclass
class PoseParams:
    """Per-frame articulation: shape beta (Nb,), axis-angle theta (J,3),
    expression psi (Ne,), optional root translation trans (3,)."""

    beta: torch.Tensor
    theta: torch.Tensor
    psi: torch.Tensor
    trans: Optional[torch.Tensor] = None

    @staticmethod
    def zeros(asset: BodyAsset, dtype: Optional[torch.dtype] = None) -> "PoseParams":
        dt = dtype or asset.dtype
        return PoseParams(
            beta=torch.zeros(asset.num_shape, dtype=dt),
            theta=torch.zeros(asset.num_joints, 3, dtype=dt),
            psi=torch.zeros(asset.num_expression, dtype=dt),
            trans=torch.zeros(3, dtype=dt),
        )

    def translation(self) -> torch.Tensor:
        if self.trans is None:
            return torch.zeros(3, dtype=self.theta.dtype, device=self.theta.device)
        return self.trans

    def clone(self) -> "PoseParams":
        return PoseParams(
            beta=self.beta.clone(),
            theta=self.theta.clone(),
            psi=self.psi.clone(),
            trans=None if self.trans is None else self.trans.clone(),
        )


@dataclass
class PosedMesh:
    """Skinned mesh with per-face tangent frames and blended vertex rotations."""

    vertices: torch.Tensor          # (V, 3)
    per_face_frame: torch.Tensor    # (F, 3, 3), columns = tangent, bitangent, normal
    per_vertex_rotation: torch.Tensor  # (V, 3, 3)
    degenerate_faces: int = field(default=0)


def pose_feature(theta: torch.Tensor) -> torch.Tensor:
    """Pose-corrective input: flattened (R(theta_j) - I) of non-root joints."""
    rots = axis_angle_to_matrix(theta[1:])
    eye = torch.eye(3, dtype=theta.dtype, device=theta.device)
    return (rots - eye).reshape(-1)


def rest_shape(asset: BodyAsset, p: PoseParams) -> torch.Tensor:
    """Template plus shape/expression/pose blendshape offsets, (V, 3)."""
    if p.beta.shape != (asset.num_shape,):
        raise InvalidArgumentError(
            f"beta has {tuple(p.beta.shape)} entries, asset expects {asset.num_shape}"
        )
    if p.psi.shape != (asset.num_expression,):
        raise InvalidArgumentError(
            f"psi has {tuple(p.psi.shape)} entries, asset expects {asset.num_expression}"
        )
    if p.theta.shape != (asset.num_joints, 3):
        raise InvalidArgumentError(
            f"theta has shape {tuple(p.theta.shape)}, asset expects ({asset.num_joints}, 3)"
        )
    check_finite(p.beta, "beta")
    check_finite(p.psi, "psi")
    check_finite(p.theta, "theta")
    out = asset.template_vertices
    out = out + torch.einsum("vdk,k->vd", asset.shape_basis, p.beta)
    out = out + torch.einsum("vdk,k->vd", asset.expression_basis, p.psi)
    if asset.num_pose_basis:
        feat = pose_feature(p.theta)
        if feat.shape[0] != asset.num_pose_basis:
            raise InvalidArgumentError(
                f"pose basis expects {asset.num_pose_basis} features, theta gives {feat.shape[0]}"
            )
        out = out + torch.einsum("vdk,k->vd", asset.pose_basis, feat)
    return out


def joints(asset: BodyAsset, rest_vertices: torch.Tensor) -> torch.Tensor:
    """Joint positions regressed from the rest vertices, (J, 3)."""
    check_shape(rest_vertices, (asset.num_vertices, 3), "rest_vertices")
    return asset.joint_regressor @ rest_vertices


def _forward_kinematics(joint_pos: torch.Tensor, theta: torch.Tensor, parent: torch.Tensor):
    """World joint transforms. Returns (rotations (J,3,3), translations (J,3))."""
    J = joint_pos.shape[0]
    local_rot = axis_angle_to_matrix(theta)
    rots = []
    trans = []
    for j in range(J):
        pj = int(parent[j])
        offset = joint_pos[j] - (joint_pos[pj] if pj >= 0 else torch.zeros_like(joint_pos[j]))
        if pj < 0:
            rots.append(local_rot[j])
            trans.append(offset)
        else:
            rots.append(rots[pj] @ local_rot[j])
            trans.append(rots[pj] @ offset + trans[pj])
    return torch.stack(rots), torch.stack(trans)


def lbs(
    rest_vertices: torch.Tensor,
    joint_pos: torch.Tensor,
    theta: torch.Tensor,
    weights: torch.Tensor,
    parent: torch.Tensor,
):
    """Linear blend skinning.

    Each joint's world transform G_j rotates about its own (posed-chain)
    joint location; vertex v maps through sum_j W[v,j] * G_j applied to its
    rest position. Returns (vertices (V,3), per-vertex rotations (V,3,3));
    the blended rotations are re-orthonormalized by polar projection.
    """
    row_sums = weights.sum(dim=1)
    if float((row_sums - 1.0).abs().max()) > _WEIGHT_ROW_TOL:
        raise InvariantViolationError("skinning weight rows must sum to 1")
    rot_w, trans_w = _forward_kinematics(joint_pos, theta, parent)
    # relative-to-rest translation: G_j maps x to R_j x + (t_j - R_j j_rest)
    rel_t = trans_w - torch.einsum("jab,jb->ja", rot_w, joint_pos)
    blend_rot = torch.einsum("vj,jab->vab", weights, rot_w)
    blend_t = weights @ rel_t
    verts = torch.einsum("vab,vb->va", blend_rot, rest_vertices) + blend_t
    per_vertex_rot = polar_orthonormalize(blend_rot)
    return verts, per_vertex_rot


def face_frames(vertices: torch.Tensor, faces: torch.Tensor):
    """Orthonormal tangent frames per face via Gram-Schmidt on posed edges.

    Columns are (tangent, bitangent, normal) with tangent = normalized first
    edge and normal = normalized edge cross product. Zero-area faces fall
    back to the identity frame and are counted.
    """
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    e1 = v1 - v0
    e2 = v2 - v0
    n_raw = torch.cross(e1, e2, dim=-1)
    area2 = (n_raw * n_raw).sum(-1)
    e1_len2 = (e1 * e1).sum(-1)
    degenerate = (area2 <= _DEGENERATE_AREA_EPS) | (e1_len2 <= _DEGENERATE_AREA_EPS)

    safe = lambda x, dim_vec: torch.where(degenerate[:, None], dim_vec, x)
    ex = torch.zeros_like(e1)
    ex[:, 0] = 1.0
    ez = torch.zeros_like(e1)
    ez[:, 2] = 1.0
    e1_safe = safe(e1, ex)
    n_safe = safe(n_raw, ez)
    tangent = e1_safe / e1_safe.norm(dim=-1, keepdim=True).clamp_min(1e-30)
    normal = n_safe / n_safe.norm(dim=-1, keepdim=True).clamp_min(1e-30)
    bitangent = torch.cross(normal, tangent, dim=-1)
    frames = torch.stack([tangent, bitangent, normal], dim=-1)

    n_bad = int(degenerate.sum())
    if n_bad:
        _count_degenerate_faces(n_bad)
        eye = torch.eye(3, dtype=vertices.dtype, device=vertices.device)
        frames = torch.where(degenerate[:, None, None], eye.expand_as(frames), frames)
    return frames, n_bad


def pose_mesh(
    asset: BodyAsset,
    p: PoseParams,
    displacement: Optional[torch.Tensor] = None,
) -> PosedMesh:
    """Full evaluation: blendshapes -> joints -> skinning -> + displacement.

    The learnable displacement is added to the *skinned* vertices; the root
    translation (if any) shifts everything rigidly and does not affect the
    tangent frames.
    """
    rest = rest_shape(asset, p)
    jp = joints(asset, rest)
    verts, vrot = lbs(rest, jp, p.theta, asset.skinning_weights, asset.parent)
    if displacement is not None:
        check_shape(displacement, (asset.num_vertices, 3), "displacement")
        verts = verts + displacement
    if p.trans is not None:
        verts = verts + p.trans
    frames, n_bad = face_frames(verts, asset.faces)
    return PosedMesh(vertices=verts, per_face_frame=frames, per_vertex_rotation=vrot, degenerate_faces=n_bad)
