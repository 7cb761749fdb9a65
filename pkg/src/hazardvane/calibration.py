"""Cross-frame extrinsic calibration from gaze + laser-range samples.

Two sensors with no visual overlap are aligned by having a seated observer
fixate reference points on a planar target while a forehead-mounted laser
range finder measures the distance to each point.  Every sample yields one
3D point in the gaze tracker frame (F); the same target points expressed in
the obstacle sensor frame (M) come from the target's known pose.  The rigid
transform F->M is then recovered by closed-form least squares (Kabsch) or by
ICP when correspondences are unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RigidTransform, orthonormalize, rotation_from_axis_angle


class TooFewPoints(ValueError):
    """Fewer samples/points than the estimator needs."""


class DegenerateConfiguration(ValueError):
    """Point configuration does not constrain the estimate (e.g. collinear)."""


class NonUnitDirection(ValueError):
    """Gaze direction is not unit length within tolerance."""


class NonPositiveDistance(ValueError):
    """Measured laser distance must be > 0."""


class BehindCamera(ValueError):
    """Recovered pose places target points behind the camera."""


@dataclass(frozen=True)
class GazeLaserSample:
    """One fixation: gaze ray in frame F plus the lasered distance to the target."""

    gaze_origin_F: np.ndarray
    gaze_dir_F: np.ndarray
    laser_distance: float
    target_point_id: str

    def __post_init__(self):
        o = np.asarray(self.gaze_origin_F, dtype=float).reshape(3)
        d = np.asarray(self.gaze_dir_F, dtype=float).reshape(3)
        object.__setattr__(self, "gaze_origin_F", o)
        object.__setattr__(self, "gaze_dir_F", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise NonUnitDirection(f"|gaze_dir| = {np.linalg.norm(d):.8f}, expected 1")
        if self.laser_distance <= 0:
            raise NonPositiveDistance(f"laser_distance = {self.laser_distance}")


@dataclass(frozen=True)
class PointPairSet:
    """Corresponding 3D points in frames F and M, aligned by id."""

    points_F: np.ndarray
    points_M: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        pf = np.asarray(self.points_F, dtype=float).reshape(-1, 3)
        pm = np.asarray(self.points_M, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points_F", pf)
        object.__setattr__(self, "points_M", pm)
        object.__setattr__(self, "ids", tuple(self.ids))
        if len(pf) != len(pm) or len(pf) != len(self.ids):
            raise ValueError("points_F, points_M and ids must have equal lengths")

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class RegistrationResult:
    transform_F_to_M: RigidTransform
    rms_residual: float
    per_point_residuals: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class IcpParams:
    max_iters: int = 50
    rms_change_tol: float = 1e-9


@dataclass(frozen=True)
class PlanarPoseResult:
    transform_target_to_cam: RigidTransform
    reproj_rms_px: float


def gaze_laser_to_point(s: GazeLaserSample) -> np.ndarray:
    """3D fixated point in frame F: origin + distance * direction."""
    return s.gaze_origin_F + s.laser_distance * s.gaze_dir_F


def _collinear(points: np.ndarray, rel_tol: float = 1e-9) -> bool:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[0] < 1e-15 or s[1] <= rel_tol * s[0]


def register_kabsch(pairs: PointPairSet) -> RegistrationResult:
    """Closed-form least-squares rigid transform F->M via SVD.

    Centroid-subtracted cross-covariance, det-corrected against reflections.
    """
    if len(pairs) < 3:
        raise TooFewPoints(f"need >= 3 point pairs, got {len(pairs)}")
    pf, pm = pairs.points_F, pairs.points_M
    if _collinear(pf):
        raise DegenerateConfiguration("source points are collinear")
    cf = pf.mean(axis=0)
    cm = pm.mean(axis=0)
    h = (pf - cf).T @ (pm - cm)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = cm - r @ cf
    transform = RigidTransform(r, t)
    residuals = np.linalg.norm((pf @ r.T + t) - pm, axis=1)
    rms = math.sqrt(float(np.mean(residuals**2)))
    return RegistrationResult(transform, rms, residuals, iterations=1, converged=True)


def register_icp(
    points_F,
    points_M,
    init: RigidTransform | None = None,
    params: IcpParams = IcpParams(),
) -> RegistrationResult:
    """Iterative closest point: alternate nearest-neighbor matching and Kabsch.

    Point sets are small here, so correspondence search is exact brute force.
    """
    pf = np.asarray(points_F, dtype=float).reshape(-1, 3)
    pm = np.asarray(points_M, dtype=float).reshape(-1, 3)
    if len(pf) < 3 or len(pm) < 3:
        raise TooFewPoints(f"need >= 3 points per cloud, got {len(pf)} and {len(pm)}")
    transform = init if init is not None else RigidTransform.identity()
    prev_rms = math.inf
    result = None
    for it in range(1, params.max_iters + 1):
        moved = pf @ transform.rotation.T + transform.translation
        d2 = ((moved[:, None, :] - pm[None, :, :]) ** 2).sum(axis=2)
        nearest = d2.argmin(axis=1)
        matched = PointPairSet(pf, pm[nearest], tuple(str(i) for i in range(len(pf))))
        step = register_kabsch(matched)
        transform = step.transform_F_to_M
        result = RegistrationResult(
            transform,
            step.rms_residual,
            step.per_point_residuals,
            iterations=it,
            converged=(
                step.rms_residual < params.rms_change_tol
                or abs(prev_rms - step.rms_residual) < params.rms_change_tol
            ),
        )
        if result.converged:
            break
        prev_rms = step.rms_residual
    return result


def run_calibration_procedure(
    samples: list[GazeLaserSample],
    target_pose_M: RigidTransform,
    target_points: dict[str, np.ndarray],
) -> RegistrationResult:
    """Full alignment procedure from fixation samples and target geometry.

    Frame-F points come from the gaze rays and laser distances; frame-M points
    from the target points pushed through the target's pose in M.  Pairs are
    matched by target point id, then solved in closed form.
    """
    if len(samples) < 3:
        raise TooFewPoints(f"need >= 3 samples, got {len(samples)}")
    distinct = {s.target_point_id for s in samples}
    if len(distinct) < 3:
        raise TooFewPoints(f"need >= 3 distinct target points, got {len(distinct)}")
    pf, pm, ids = [], [], []
    for s in samples:
        if s.target_point_id not in target_points:
            raise KeyError(f"sample references unknown target point id {s.target_point_id!r}")
        pf.append(gaze_laser_to_point(s))
        pm.append(target_pose_M.apply(target_points[s.target_point_id]))
        ids.append(s.target_point_id)
    return register_kabsch(PointPairSet(np.array(pf), np.array(pm), tuple(ids)))


def _normalization(points_2d: np.ndarray) -> np.ndarray:
    """Hartley similarity normalization: centroid to origin, mean distance sqrt(2)."""
    c = points_2d.mean(axis=0)
    dist = np.linalg.norm(points_2d - c, axis=1).mean()
    s = math.sqrt(2.0) / dist if dist > 1e-15 else 1.0
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _homography_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized direct linear transform, src (N,2) -> dst (N,2)."""
    ts, td = _normalization(src), _normalization(dst)
    src_h = (ts @ np.column_stack([src, np.ones(len(src))]).T).T
    dst_h = (td @ np.column_stack([dst, np.ones(len(dst))]).T).T
    rows = []
    for (x, y, w), (u, v, m) in zip(src_h, dst_h):
        rows.append([0, 0, 0, -m * x, -m * y, -m * w, v * x, v * y, v * w])
        rows.append([m * x, m * y, m * w, 0, 0, 0, -u * x, -u * y, -u * w])
    a = np.array(rows)
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-12 * sv[0]:
        raise DegenerateConfiguration("homography system is rank deficient")
    h = vt[-1].reshape(3, 3)
    return np.linalg.inv(td) @ h @ ts


def planar_target_pose(cam, image_pts, target_pts) -> PlanarPoseResult:
    """Pose of a planar target (target frame -> camera frame) from >= 4 points.

    Pixels are lifted to normalized camera coordinates (undistorting if the
    camera has distortion), a homography to the target plane is estimated with
    the normalized DLT, and the pose is read off its columns with an SVD
    orthonormalization.  Reports the reprojection RMS in pixels.
    """
    img = np.asarray(image_pts, dtype=float).reshape(-1, 2)
    tgt = np.asarray(target_pts, dtype=float).reshape(-1, 3)
    if len(img) != len(tgt):
        raise ValueError("image and target point counts differ")
    if len(tgt) < 4:
        raise TooFewPoints(f"need >= 4 points, got {len(tgt)}")

    # In-plane coordinates of the target points.
    centroid = tgt.mean(axis=0)
    centered = tgt - centroid
    _, sv, vt = np.linalg.svd(centered)
    if sv[1] <= 1e-9 * sv[0]:
        raise DegenerateConfiguration("target points are collinear")
    if sv[2] > 1e-6 * sv[0]:
        raise DegenerateConfiguration("target points are not coplanar")
    b1, b2 = vt[0], vt[1]
    normal = np.cross(b1, b2)
    plane_2d = centered @ np.column_stack([b1, b2])

    # Normalized (undistorted) image coordinates.
    norm_2d = np.empty_like(img)
    for i, uv in enumerate(img):
        ray = cam.backproject(uv)
        norm_2d[i] = ray.direction[:2] / ray.direction[2]

    h = _homography_dlt(plane_2d, norm_2d)
    h1, h2, h3 = h[:, 0], h[:, 1], h[:, 2]
    lam = 2.0 / (np.linalg.norm(h1) + np.linalg.norm(h2))
    # Sign ambiguity: pick the solution with the target in front of the camera.
    if lam * h3[2] < 0:
        lam = -lam
    r1, r2 = lam * h1, lam * h2
    r = orthonormalize(np.column_stack([r1, r2, np.cross(r1, r2)]))
    t = lam * h3

    # Plane frame -> target frame, then compose.
    plane_rot = np.vstack([b1, b2, normal])
    t_target_to_plane = RigidTransform(plane_rot, -plane_rot @ centroid)
    pose = RigidTransform(r, t).compose(t_target_to_plane)

    cam_pts = tgt @ pose.rotation.T + pose.translation
    if np.any(cam_pts[:, 2] <= 0):
        raise BehindCamera("recovered pose puts target points behind the camera")
    reproj = np.array([cam.project(p) for p in cam_pts])
    rms = math.sqrt(float(np.mean(np.sum((reproj - img) ** 2, axis=1))))
    return PlanarPoseResult(pose, rms)


def synthesize_samples(
    truth_F_to_M: RigidTransform,
    target_pose_M: RigidTransform,
    target_points: dict[str, np.ndarray],
    rng: np.random.Generator,
    gaze_sigma_rad: float = 0.0,
    distance_sigma_m: float = 0.0,
    gaze_origin_F=(0.0, 0.0, 0.0),
) -> list[GazeLaserSample]:
    """Generate fixation samples consistent with a known ground-truth transform.

    Used by the Monte-Carlo noise study and the synthetic-recovery tests.
    """
    t_M_to_F = truth_F_to_M.invert()
    origin = np.asarray(gaze_origin_F, dtype=float)
    samples = []
    for pid, p_target in target_points.items():
        p_m = target_pose_M.apply(p_target)
        p_f = t_M_to_F.apply(p_m)
        delta = p_f - origin
        dist = float(np.linalg.norm(delta))
        direction = delta / dist
        if gaze_sigma_rad > 0:
            angle = rng.normal(0.0, gaze_sigma_rad)
            perp = np.cross(direction, rng.normal(size=3))
            if np.linalg.norm(perp) < 1e-12:
                perp = np.cross(direction, [1.0, 0.0, 0.0])
            direction = rotation_from_axis_angle(perp, angle) @ direction
            direction = direction / np.linalg.norm(direction)
        if distance_sigma_m > 0:
            dist = max(1e-6, dist + float(rng.normal(0.0, distance_sigma_m)))
        samples.append(GazeLaserSample(origin, direction, dist, pid))
    return samples


def default_target_points(n: int, radius_m: float = 0.6) -> dict[str, np.ndarray]:
    """n reference points evenly spaced on a ring in the target plane (z=0).

    The ring keeps per-point leverage constant, so recovery error shrinks
    like 1/sqrt(n) as more fixations are collected.
    """
    pts = {}
    for i in range(n):
        a = 2.0 * math.pi * i / n
        pts[f"p{i:02d}"] = np.array([radius_m * math.cos(a), radius_m * math.sin(a), 0.0])
    return pts


def monte_carlo_study(
    truth_F_to_M: RigidTransform,
    target_pose_M: RigidTransform,
    sample_counts: list[int],
    trials: int,
    gaze_sigma_rad: float,
    distance_sigma_m: float,
    seed: int = 0,
) -> dict[int, dict[str, float]]:
    """Median/quantile recovery errors per sample count over repeated noisy runs."""
    from .geometry import rotation_geodesic_error

    out = {}
    for n in sample_counts:
        rot_errs, trans_errs = [], []
        for trial in range(trials):
            rng = np.random.default_rng([seed, n, trial])
            pts = default_target_points(n)
            samples = synthesize_samples(
                truth_F_to_M,
                target_pose_M,
                pts,
                rng,
                gaze_sigma_rad=gaze_sigma_rad,
                distance_sigma_m=distance_sigma_m,
            )
            res = run_calibration_procedure(samples, target_pose_M, pts)
            est = res.transform_F_to_M
            rot_errs.append(rotation_geodesic_error(est.rotation, truth_F_to_M.rotation))
            trans_errs.append(float(np.linalg.norm(est.translation - truth_F_to_M.translation)))
        rot = np.array(rot_errs)
        tr = np.array(trans_errs)
        out[n] = {
            "rotation_rad_p50": float(np.quantile(rot, 0.5)),
            "rotation_rad_p90": float(np.quantile(rot, 0.9)),
            "translation_m_p50": float(np.quantile(tr, 0.5)),
            "translation_m_p90": float(np.quantile(tr, 0.9)),
        }
    return out
