import { describe, expect, it } from "vitest";
import { linkCentroid, linkPoses, quatFromAxisAngle, quatMultiply, quatRotate }
  from "../src/kinematics.js";
import type { ChainMsg } from "../src/protocol.js";

function closeTo(a: readonly number[], b: readonly number[], tol = 1e-12) {
  expect(a.length).toBe(b.length);
  for (let i = 0; i < a.length; i++) {
    expect(Math.abs(a[i] - b[i]), `component ${i}: ${a} vs ${b}`).toBeLessThan(tol);
  }
}

const PLANAR: ChainMsg = {
  type: "chain",
  name: "planar",
  links: [
    { name: "base", mesh: null },
    { name: "upper", mesh: { vertices: [[0, 0, 0], [1, 0, 0]], triangles: [] } },
    { name: "fore", mesh: null },
  ],
  joints: [
    { name: "j1", origin_pos: [0, 0, 0], origin_quat: [1, 0, 0, 0],
      axis: [0, 0, 1], lower: -3.2, upper: 3.2 },
    { name: "j2", origin_pos: [1, 0, 0], origin_quat: [1, 0, 0, 0],
      axis: [0, 0, 1], lower: -3.2, upper: 3.2 },
  ],
  ee_offset_pos: [0.7, 0, 0],
  ee_offset_quat: [1, 0, 0, 0],
  angles: [0, 0],
};

describe("quaternions", () => {
  it("rotates like axis-angle should", () => {
    const q = quatFromAxisAngle([0, 0, 1], Math.PI / 2);
    closeTo(quatRotate(q, [1, 0, 0]), [0, 1, 0], 1e-12);
  });

  it("multiplication composes rotations", () => {
    const qa = quatFromAxisAngle([0, 0, 1], 0.4);
    const qb = quatFromAxisAngle([0, 1, 0], -0.9);
    const v: [number, number, number] = [0.3, -0.2, 0.9];
    closeTo(quatRotate(quatMultiply(qa, qb), v), quatRotate(qa, quatRotate(qb, v)));
  });
});

describe("forward kinematics", () => {
  it("matches the closed-form planar tip position", () => {
    const cases: [number, number][] = [[0, 0], [Math.PI / 2, 0], [0.4, -0.9], [1.1, 2.0]];
    for (const [t1, t2] of cases) {
      const poses = linkPoses(PLANAR, [t1, t2]);
      const tip = poses[poses.length - 1].pos;
      closeTo(tip, [
        Math.cos(t1) + 0.7 * Math.cos(t1 + t2),
        Math.sin(t1) + 0.7 * Math.sin(t1 + t2),
        0,
      ], 1e-12);
    }
  });

  it("zero state stacks the fixed origins", () => {
    const poses = linkPoses(PLANAR, [0, 0]);
    closeTo(poses[0].pos, [0, 0, 0]);
    closeTo(poses[1].pos, [0, 0, 0]);
    closeTo(poses[2].pos, [1, 0, 0]);
    closeTo(poses[3].pos, [1.7, 0, 0]);
  });

  it("rejects angle-count mismatches", () => {
    expect(() => linkPoses(PLANAR, [0])).toThrow(/joint count/);
  });

  it("computes world link centroids", () => {
    closeTo(linkCentroid(PLANAR, [0, 0], 1), [0.5, 0, 0], 1e-12);
    closeTo(linkCentroid(PLANAR, [Math.PI / 2, 0], 1), [0, 0.5, 0], 1e-12);
  });
});
