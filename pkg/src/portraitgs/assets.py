"""Procedural desk-scale head+torso asset.

A surface of revolution (torso bulge, neck pinch, head bulge) on an
(n_around+1) x n_rows grid whose UV unwrap tiles the unit square exactly:
u = column / n_around, v = row / (n_rows - 1), seam column duplicated.
Five joints (pelvis, spine, neck, head, jaw), four shape and four
expression blendshapes, and a pose-corrective basis that is present but
zero. Everything is a smooth closed-form function of the grid, so the
asset is reproducible to the bit from its dimensions alone.
"""

import math

import torch

from .body import BodyAsset

HEAD_CENTER_Y = 0.54          # in profile coordinates, before recentering
TOTAL_HEIGHT = 0.70
NUM_JOINTS = 5
NUM_SHAPE = 4
NUM_EXPRESSION = 4

JOINT_NAMES = ("pelvis", "spine", "neck", "head", "jaw")
_JOINT_BAND_Y = (0.06, 0.25, 0.38, 0.50, 0.46)

# landmark anchors: (y in profile coords, azimuth in radians, name)
_LANDMARK_ANCHORS = (
    (0.545, 0.00, "nose"),
    (0.475, 0.00, "chin"),
    (0.600, 0.00, "forehead"),
    (0.585, +0.55, "brow_l"),
    (0.585, -0.55, "brow_r"),
    (0.565, +0.38, "eye_l"),
    (0.565, -0.38, "eye_r"),
    (0.520, +0.65, "cheek_l"),
    (0.520, -0.65, "cheek_r"),
    (0.505, +0.28, "mouth_l"),
    (0.505, -0.28, "mouth_r"),
    (0.495, 0.00, "lower_lip"),
)


def _smoothstep(t: torch.Tensor, lo: float, hi: float) -> torch.Tensor:
    s = ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _profile_radius(y: torch.Tensor) -> torch.Tensor:
    """Radius of the revolution surface as a function of height."""
    torso = 0.150 * torch.exp(-(((y - 0.13) / 0.16) ** 2))
    head = 0.105 * torch.exp(-(((y - HEAD_CENTER_Y) / 0.078) ** 2))
    base = 0.012
    r = base + torso + head
    # taper the crown nearly shut so the head reads as closed from the front
    taper = 1.0 - 0.97 * _smoothstep(y, 0.67, TOTAL_HEIGHT)
    return r * taper


def build_desk_asset(
    n_around: int = 50,
    n_rows: int = 40,
    dtype: torch.dtype = torch.float64,
) -> BodyAsset:
    """Build the head+torso asset. Default dims give V=2040, F=3900."""
    cols = n_around + 1
    iu = torch.arange(cols, dtype=dtype)
    jv = torch.arange(n_rows, dtype=dtype)
    u = iu / n_around                       # [0, 1], seam duplicated
    vpar = jv / (n_rows - 1)                # [0, 1] bottom -> top

    phi = 2.0 * math.pi * u                 # azimuth per column
    y = TOTAL_HEIGHT * vpar                 # height per row
    r = _profile_radius(y)

    # grid of positions: (row, col)
    sin_phi = torch.sin(phi)[None, :].expand(n_rows, cols)
    cos_phi = torch.cos(phi)[None, :].expand(n_rows, cols)
    rr = r[:, None].expand(n_rows, cols)
    yy = y[:, None].expand(n_rows, cols)
    px = rr * sin_phi
    pz = rr * cos_phi
    verts = torch.stack([px, yy, pz], dim=-1).reshape(-1, 3)

    # faces: two triangles per grid cell, outward winding
    faces = []
    uvs = []
    uv_u = u
    uv_v = vpar

    def vid(i, j):
        return j * cols + i

    for j in range(n_rows - 1):
        for i in range(n_around):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            uvs.append(((uv_u[i], uv_v[j]), (uv_u[i + 1], uv_v[j]), (uv_u[i + 1], uv_v[j + 1])))
            faces.append((a, c, d))
            uvs.append(((uv_u[i], uv_v[j]), (uv_u[i + 1], uv_v[j + 1]), (uv_u[i], uv_v[j + 1])))
    faces_t = torch.tensor(faces, dtype=torch.long)
    uv_corners = torch.tensor(uvs, dtype=dtype)

    vy = verts[:, 1]
    vx = verts[:, 0]
    vz = verts[:, 2]
    radial = torch.stack([vx, torch.zeros_like(vy), vz], dim=-1)
    v_r = radial.norm(dim=-1).clamp_min(1e-9)
    front = (vz / v_r).clamp(0.0, 1.0) ** 2       # 1 at the face center, 0 at the back
    w_headband = torch.exp(-(((vy - HEAD_CENTER_Y) / 0.09) ** 2))
    w_torsoband = torch.exp(-(((vy - 0.13) / 0.16) ** 2))

    def band(center, width):
        return torch.exp(-(((vy - center) / width) ** 2))

    # shape basis: global inflate, head size, torso width, height stretch
    S = torch.zeros(verts.shape[0], 3, NUM_SHAPE, dtype=dtype)
    S[:, :, 0] = 0.05 * radial
    S[:, 0, 1] = 0.08 * vx * w_headband
    S[:, 1, 1] = 0.08 * (vy - HEAD_CENTER_Y) * w_headband
    S[:, 2, 1] = 0.08 * vz * w_headband
    S[:, 0, 2] = 0.06 * vx * w_torsoband
    S[:, 2, 2] = 0.06 * vz * w_torsoband
    S[:, 1, 3] = 0.04 * (vy - 0.35)

    # expression basis: jaw open, cheek puff, brow raise, mouth widen
    E = torch.zeros(verts.shape[0], 3, NUM_EXPRESSION, dtype=dtype)
    g_mouth = band(0.492, 0.022)
    g_cheek = band(0.525, 0.03)
    g_brow = band(0.585, 0.022)
    E[:, 1, 0] = -0.020 * g_mouth * front
    E[:, 2, 0] = 0.004 * g_mouth * front
    side = torch.sin(torch.atan2(vx, vz)) ** 2
    puff = 0.015 * g_cheek * front * (0.3 + 0.7 * side)
    E[:, 0, 1] = puff * (vx / v_r)
    E[:, 2, 1] = puff * (vz / v_r)
    E[:, 1, 2] = 0.012 * g_brow * front
    E[:, 2, 2] = 0.004 * g_brow * front
    E[:, 0, 3] = 0.018 * torch.sin(torch.atan2(vx, vz)) * g_mouth * front

    # pose-corrective basis: present with the right width, zero content
    P = torch.zeros(verts.shape[0], 3, 9 * (NUM_JOINTS - 1), dtype=dtype)

    # joint regressor: normalized gaussian bands; jaw pulls from the lower front face
    reg = torch.zeros(NUM_JOINTS, verts.shape[0], dtype=dtype)
    for k, yj in enumerate(_JOINT_BAND_Y):
        w = band(yj, 0.03)
        if JOINT_NAMES[k] == "jaw":
            w = w * (front + 1e-4)
        reg[k] = w / w.sum()

    # skinning weights: smooth bands, jaw carved out of the head share
    s_pelvis = 1.0 - _smoothstep(vy, 0.10, 0.30)
    s_spine = _smoothstep(vy, 0.10, 0.30) * (1.0 - _smoothstep(vy, 0.30, 0.40))
    s_neck = _smoothstep(vy, 0.30, 0.40) * (1.0 - _smoothstep(vy, 0.42, 0.50))
    s_head = _smoothstep(vy, 0.42, 0.50)
    base_w = torch.stack([s_pelvis, s_spine, s_neck, s_head], dim=-1).clamp_min(0.0)
    base_w = base_w / base_w.sum(dim=-1, keepdim=True)
    jaw_frac = 0.85 * _smoothstep(vy, 0.40, 0.44) * (1.0 - _smoothstep(vy, 0.47, 0.52)) * front
    W = torch.zeros(verts.shape[0], NUM_JOINTS, dtype=dtype)
    W[:, :3] = base_w[:, :3]
    W[:, 3] = base_w[:, 3] * (1.0 - jaw_frac)
    W[:, 4] = base_w[:, 3] * jaw_frac
    W = W / W.sum(dim=-1, keepdim=True)

    # recenter so the head sits at the origin
    verts = verts.clone()
    verts[:, 1] -= HEAD_CENTER_Y

    parent = torch.tensor([-1, 0, 1, 2, 3], dtype=torch.long)
    asset = BodyAsset(
        template_vertices=verts,
        faces=faces_t,
        uv_corners=uv_corners,
        shape_basis=S,
        expression_basis=E,
        pose_basis=P,
        joint_regressor=reg,
        skinning_weights=W,
        parent=parent,
    )
    return asset.validate()


def desk_landmark_vertices(asset: BodyAsset) -> torch.Tensor:
    """Indices of the 12 face landmark vertices, nearest-vertex to fixed anchors."""
    verts = asset.template_vertices
    idx = []
    for y_anchor, az, _name in _LANDMARK_ANCHORS:
        y_target = y_anchor - HEAD_CENTER_Y
        r_target = float(_profile_radius(torch.tensor(y_anchor, dtype=verts.dtype)))
        target = torch.tensor(
            [r_target * math.sin(az), y_target, r_target * math.cos(az)], dtype=verts.dtype
        )
        d = (verts - target).norm(dim=-1)
        idx.append(int(d.argmin()))
    return torch.tensor(idx, dtype=torch.long)


def synthetic_pose_basis(asset: BodyAsset, seed: int = 0, magnitude: float = 0.002) -> torch.Tensor:
    """Smooth nonzero pose-corrective basis for exercising the B_P code path."""
    gen = torch.Generator().manual_seed(seed)
    v = asset.template_vertices
    n_feat = 9 * (asset.num_joints - 1)
    freqs = torch.randn(3, n_feat, generator=gen, dtype=v.dtype)
    phases = torch.rand(n_feat, generator=gen, dtype=v.dtype) * 2 * math.pi
    field = torch.sin(v @ freqs * 4.0 + phases)        # (V, n_feat)
    dirs = torch.randn(3, n_feat, generator=gen, dtype=v.dtype)
    dirs = dirs / dirs.norm(dim=0, keepdim=True)
    return magnitude * field[:, None, :] * dirs[None, :, :]
