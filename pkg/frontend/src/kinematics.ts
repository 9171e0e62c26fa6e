// Client-side forward kinematics over the chain description the service
// sends. Joint angles always come from the service; this only turns them
// into link poses for rendering (quaternions are [w, x, y, z] like the wire
// format).

import type { ChainMsg, Quat, Vec3 } from "./protocol.js";

export interface LinkPose {
  pos: Vec3;
  quat: Quat;
}

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  // t = 2 * (qv x v); v' = v + w t + qv x t
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const half = angle / 2;
  const s = Math.sin(half);
  return [Math.cos(half), s * axis[0], s * axis[1], s * axis[2]];
}

function compose(aPos: Vec3, aQuat: Quat, bPos: Vec3, bQuat: Quat): LinkPose {
  const rotated = quatRotate(aQuat, bPos);
  return {
    pos: [aPos[0] + rotated[0], aPos[1] + rotated[1], aPos[2] + rotated[2]],
    quat: quatMultiply(aQuat, bQuat),
  };
}

/** World pose of every link (base first) plus the end-effector frame. */
export function linkPoses(chain: ChainMsg, angles: number[]): LinkPose[] {
  if (angles.length !== chain.joints.length) {
    throw new Error(
      `angles length ${angles.length} != joint count ${chain.joints.length}`,
    );
  }
  const poses: LinkPose[] = [{ pos: [0, 0, 0], quat: [1, 0, 0, 0] }];
  for (let j = 0; j < chain.joints.length; j++) {
    const joint = chain.joints[j];
    const atOrigin = compose(
      poses[j].pos, poses[j].quat, joint.origin_pos, joint.origin_quat);
    const spun = compose(
      atOrigin.pos, atOrigin.quat, [0, 0, 0], quatFromAxisAngle(joint.axis, angles[j]));
    poses.push(spun);
  }
  const tip = poses[poses.length - 1];
  poses.push(compose(
    tip.pos, tip.quat,
    chain.ee_offset_pos ?? [0, 0, 0],
    chain.ee_offset_quat ?? [1, 0, 0, 0]));
  return poses;
}

/** Centroid of one link's mesh vertices in world coordinates. */
export function linkCentroid(chain: ChainMsg, angles: number[], link: number): Vec3 {
  const mesh = chain.links[link]?.mesh;
  if (!mesh || mesh.vertices.length === 0) {
    return linkPoses(chain, angles)[link].pos;
  }
  const pose = linkPoses(chain, angles)[link];
  const acc: Vec3 = [0, 0, 0];
  for (const v of mesh.vertices) {
    const w = quatRotate(pose.quat, v);
    acc[0] += w[0] + pose.pos[0];
    acc[1] += w[1] + pose.pos[1];
    acc[2] += w[2] + pose.pos[2];
  }
  const n = mesh.vertices.length;
  return [acc[0] / n, acc[1] / n, acc[2] / n];
}
