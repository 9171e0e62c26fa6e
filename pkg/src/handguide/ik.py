"""Minimal-change inverse kinematics for end-effector dragging.

The sphere-drag interaction needs the joint solution that moves the arm as
little as possible from where it is. A damped least-squares solver is run
from the current state plus a fixed set of auxiliary seeds (per-joint
reflections and a deterministic grid), every converged candidate is wrapped
to its smallest-change representative within the joint limits, and the
candidate with the smallest total joint change wins. Chains with six or more
joints track full pose; shorter chains track position only.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .geometry import RigidTransform, quat_to_matrix
from .guidance import GuidanceConfig, GuidanceUpdate
from .kinematics import JointState, KinematicChain

_GRID_FRACTIONS = (0.2, 0.5, 0.8)
_HALTON_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)
_LAMBDA_MIN = 1e-4
_LAMBDA_MAX = 1e6


def _rodrigues_batch(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotation matrices (B, 3, 3) about one fixed unit axis."""
    kx, ky, kz = axis
    K = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    s = np.sin(angles)[:, None, None]
    c = np.cos(angles)[:, None, None]
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _fk_batch(chain: KinematicChain, thetas: np.ndarray):
    """Tip positions/rotations and per-joint world frames for a seed batch."""
    B = thetas.shape[0]
    R = np.broadcast_to(np.eye(3), (B, 3, 3)).copy()
    p = np.zeros((B, 3))
    origins = []
    axes = []
    for j, joint in enumerate(chain.joints):
        Ro = quat_to_matrix(joint.origin.rotation)
        p = p + np.einsum("bij,j->bi", R, joint.origin.translation)
        R = R @ Ro
        origins.append(p.copy())
        axes.append(np.einsum("bij,j->bi", R, joint.axis))
        R = R @ _rodrigues_batch(joint.axis, thetas[:, j])
    Re = quat_to_matrix(chain.ee_offset.rotation)
    tip = p + np.einsum("bij,j->bi", R, chain.ee_offset.translation)
    R_tip = R @ Re
    return tip, R_tip, origins, axes


def _jacobian_batch(tip, origins, axes, orientation: bool) -> np.ndarray:
    B = tip.shape[0]
    n = len(origins)
    m = 6 if orientation else 3
    J = np.zeros((B, m, n))
    for j in range(n):
        J[:, :3, j] = np.cross(axes[j], tip - origins[j])
        if orientation:
            J[:, 3:, j] = axes[j]
    return J


def _rotation_error(R_target: np.ndarray, R_cur: np.ndarray) -> np.ndarray:
    """Axis-angle error vectors (B, 3) taking R_cur onto R_target."""
    R_err = R_target[None, :, :] @ np.transpose(R_cur, (0, 2, 1))
    vee = 0.5 * np.stack([
        R_err[:, 2, 1] - R_err[:, 1, 2],
        R_err[:, 0, 2] - R_err[:, 2, 0],
        R_err[:, 1, 0] - R_err[:, 0, 1],
    ], axis=1)
    sin_a = np.linalg.norm(vee, axis=1)
    cos_a = np.clip((np.trace(R_err, axis1=1, axis2=2) - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arctan2(sin_a, cos_a)
    out = np.where(sin_a[:, None] > 1e-9, vee / np.maximum(sin_a, 1e-300)[:, None], vee)
    out = out * angle[:, None]
    # near-pi rotations have a vanishing vee part; recover the axis from the
    # diagonal for those rows
    flip = (angle > np.pi - 1e-6) & (sin_a <= 1e-9)
    for i in np.nonzero(flip)[0]:
        d = np.clip((np.diagonal(R_err[i]) + 1.0) * 0.5, 0.0, None)
        axis = np.sqrt(d)
        k = int(np.argmax(axis))
        if axis[k] > 0:
            if R_err[i][(k + 1) % 3, k] + R_err[i][k, (k + 1) % 3] < 0:
                axis[(k + 1) % 3] *= -1.0
            if R_err[i][(k + 2) % 3, k] + R_err[i][k, (k + 2) % 3] < 0:
                axis[(k + 2) % 3] *= -1.0
        out[i] = axis / max(np.linalg.norm(axis), 1e-300) * angle[i]
    return out


def _errors(chain, thetas, target_pos, R_target, orientation: bool):
    tip, R_tip, origins, axes = _fk_batch(chain, thetas)
    e_pos = target_pos[None, :] - tip
    if orientation:
        e_rot = _rotation_error(R_target, R_tip)
        e = np.concatenate([e_pos, e_rot], axis=1)
        rot_norm = np.linalg.norm(e_rot, axis=1)
    else:
        e = e_pos
        rot_norm = np.zeros(len(thetas))
    return e, np.linalg.norm(e_pos, axis=1), rot_norm, tip, origins, axes


def _solve_batch(chain, seeds, target_pos, R_target, orientation, damping,
                 max_iterations, tol_pos, tol_rot):
    th = seeds.copy()
    B, n = th.shape
    m = 6 if orientation else 3
    lam = np.full(B, damping)
    e, pos_norm, rot_norm, tip, origins, axes = _errors(
        chain, th, target_pos, R_target, orientation)
    err = np.linalg.norm(e, axis=1)
    converged = (pos_norm <= tol_pos) & ((rot_norm <= tol_rot) | (not orientation))
    active = ~converged
    best_tip = tip.copy()
    best_pos = pos_norm.copy()

    for _ in range(max_iterations):
        if not active.any():
            break
        J = _jacobian_batch(tip, origins, axes, orientation)
        A = J @ np.transpose(J, (0, 2, 1))
        A[:, np.arange(m), np.arange(m)] += (lam ** 2)[:, None]
        step = np.einsum("bij,bi->bj", J, np.linalg.solve(A, e[:, :, None])[:, :, 0])
        th_try = th + step
        e_try, pos_try, rot_try, tip_try, origins_try, axes_try = _errors(
            chain, th_try, target_pos, R_target, orientation)
        err_try = np.linalg.norm(e_try, axis=1)

        improved = active & (err_try < err)
        lam = np.where(improved, np.maximum(lam * 0.7, _LAMBDA_MIN),
                       np.where(active, np.minimum(lam * 2.5, _LAMBDA_MAX), lam))
        upd = improved[:, None]
        th = np.where(upd, th_try, th)
        e = np.where(upd, e_try, e)
        err = np.where(improved, err_try, err)
        pos_norm = np.where(improved, pos_try, pos_norm)
        rot_norm = np.where(improved, rot_try, rot_norm)
        tip = np.where(upd, tip_try, tip)
        for j in range(n):
            origins[j] = np.where(upd, origins_try[j], origins[j])
            axes[j] = np.where(upd, axes_try[j], axes[j])

        track = improved & (pos_norm < best_pos)
        best_pos = np.where(track, pos_norm, best_pos)
        best_tip = np.where(track[:, None], tip, best_tip)

        converged = (pos_norm <= tol_pos) & ((rot_norm <= tol_rot) | (not orientation))
        stalled = active & ~improved & (lam >= _LAMBDA_MAX)
        active = active & ~converged & ~stalled

    return th, converged, best_tip, best_pos


def _build_seeds(chain: KinematicChain, th0: np.ndarray) -> np.ndarray:
    lo = np.array([j.lower for j in chain.joints])
    hi = np.array([j.upper for j in chain.joints])
    n = len(th0)
    seeds = [th0]
    for j in range(n):  # reflect one joint at a time about its range midpoint
        s = th0.copy()
        s[j] = lo[j] + hi[j] - th0[j]
        seeds.append(s)
    seeds.append(lo + hi - th0)
    if n <= 3:
        mesh = np.meshgrid(*[np.array(_GRID_FRACTIONS)] * n, indexing="ij")
        fracs = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        idx = np.arange(1, 17)
        fracs = np.stack([_halton(idx, _HALTON_BASES[j]) for j in range(n)], axis=1)
    for f in fracs:
        seeds.append(lo + f * (hi - lo))
    uniq = []
    for s in seeds:
        if not any(np.allclose(s, u, atol=1e-12) for u in uniq):
            uniq.append(s)
    return np.array(uniq)


def _halton(index: np.ndarray, base: int) -> np.ndarray:
    result = np.zeros(len(index), dtype=float)
    f = 1.0
    i = index.astype(float)
    while np.any(i > 0):
        f /= base
        result += f * (i % base)
        i = np.floor(i / base)
    return result


def _min_change_wrap(theta: np.ndarray, th0: np.ndarray, lo: np.ndarray,
                     hi: np.ndarray) -> Optional[np.ndarray]:
    """Per-joint 2*pi-equivalent representative in-limits, closest to th0."""
    out = theta.copy()
    two_pi = 2.0 * np.pi
    for j in range(len(theta)):
        kmin = int(np.ceil((lo[j] - theta[j]) / two_pi))
        kmax = int(np.floor((hi[j] - theta[j]) / two_pi))
        if kmin > kmax:
            return None
        reps = theta[j] + two_pi * np.arange(kmin, kmax + 1)
        out[j] = reps[np.argmin(np.abs(reps - th0[j]))]
    return out


def drag_end_effector(chain: KinematicChain, state: JointState,
                      target_pose: RigidTransform,
                      cfg: Optional[GuidanceConfig] = None, *,
                      damping: float = 0.05, max_iterations: int = 200,
                      rotation_tolerance: float = 1e-6,
                      orientation: Optional[bool] = None) -> GuidanceUpdate:
    """Joint state reaching the dragged end-effector pose with minimal total change.

    Unreachable targets never raise: the original state comes back with the
    residual set to the position error of the closest approach found.
    """
    tol_pos = cfg.propagation_tolerance if cfg is not None else 1e-6
    if orientation is None:
        orientation = chain.n_joints >= 6
    th0 = state.angles.copy()
    target_pos = target_pose.translation
    R_target = quat_to_matrix(target_pose.rotation)

    # already there: keep the state bitwise untouched
    _, pos0, rot0, tip0, _, _ = _errors(chain, th0[None, :], target_pos, R_target, orientation)
    if pos0[0] <= tol_pos and (not orientation or rot0[0] <= rotation_tolerance):
        return GuidanceUpdate(state, target_pos - tip0[0], ())

    lo = np.array([j.lower for j in chain.joints])
    hi = np.array([j.upper for j in chain.joints])
    seeds = _build_seeds(chain, th0)
    th, converged, best_tip, best_pos = _solve_batch(
        chain, seeds, target_pos, R_target, orientation, damping,
        max_iterations, tol_pos, rotation_tolerance)

    candidates = []
    for i in np.nonzero(converged)[0]:
        wrapped = _min_change_wrap(th[i], th0, lo, hi)
        if wrapped is None:
            continue
        e, pos_n, rot_n, tip, _, _ = _errors(
            chain, wrapped[None, :], target_pos, R_target, orientation)
        if pos_n[0] > tol_pos or (orientation and rot_n[0] > rotation_tolerance):
            continue
        candidates.append((np.abs(wrapped - th0).sum(), int(i), wrapped, tip[0]))

    if not candidates:
        i_best = int(np.argmin(best_pos))
        return GuidanceUpdate(state, target_pos - best_tip[i_best], ())

    candidates.sort(key=lambda c: (c[0], c[1]))
    _, _, theta_best, tip_best = candidates[0]
    touched = tuple(int(j) for j in np.nonzero(np.abs(theta_best - th0) > 1e-12)[0])
    return GuidanceUpdate(JointState(theta_best, state.timestamp),
                          target_pos - tip_best, touched)
