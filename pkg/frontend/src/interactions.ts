// Pointer handling: press-and-hold near a link emits grasping hand samples
// (the hold-gesture stand-in); the 2D pointer is lifted to 3D on a plane
// through the grabbed link's centroid, perpendicular to the camera ray.

import * as THREE from "three";
import type { RobotScene } from "./scene.js";
import type { SessionClient } from "./session.js";
import type { ViewModel } from "./viewmodel.js";

const HAND_RATE_HZ = 30;

export class DragInteraction {
  private holdPlane: THREE.Plane | null = null;
  private lastSent = 0;
  private t0 = performance.now();

  constructor(
    private canvas: HTMLCanvasElement,
    private sceneView: RobotScene,
    private vm: ViewModel,
    private client: SessionClient,
  ) {
    canvas.addEventListener("pointerdown", (ev) => this.onDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.onMove(ev));
    canvas.addEventListener("pointerup", (ev) => this.onUp(ev));
    canvas.addEventListener("pointercancel", (ev) => this.onUp(ev));
  }

  private now(): number {
    return (performance.now() - this.t0) / 1000;
  }

  private ndc(ev: PointerEvent): THREE.Vector2 {
    const rect = this.canvas.getBoundingClientRect();
    return new THREE.Vector2(
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    );
  }

  private pointOnPlane(ev: PointerEvent): THREE.Vector3 | null {
    if (!this.holdPlane) return null;
    const ray = new THREE.Raycaster();
    ray.setFromCamera(this.ndc(ev), this.sceneView.camera);
    const out = new THREE.Vector3();
    return ray.ray.intersectPlane(this.holdPlane, out) ? out : null;
  }

  private onDown(ev: PointerEvent): void {
    if (this.vm.mode !== "link_guidance" || ev.button !== 0) return;
    const link = this.sceneView.pickLink(this.ndc(ev));
    if (link === null) return;
    const centroid = this.sceneView.linkWorldCentroid(this.vm, link);
    if (!centroid) return;
    ev.preventDefault();
    this.canvas.setPointerCapture(ev.pointerId);
    this.orbitEnabled(false);
    const normal = new THREE.Vector3();
    this.sceneView.camera.getWorldDirection(normal);
    // plane in display space through the grabbed link's displayed centroid
    this.holdPlane = new THREE.Plane().setFromNormalAndCoplanarPoint(
      normal, this.sceneView.displayFromWorld([centroid.x, centroid.y, centroid.z]));
    const p = this.pointOnPlane(ev);
    if (p) this.sendHand(p, true);
  }

  private onMove(ev: PointerEvent): void {
    if (!this.holdPlane) return;
    const t = this.now();
    if (t - this.lastSent < 1 / HAND_RATE_HZ) return;
    const p = this.pointOnPlane(ev);
    if (p) this.sendHand(p, true);
  }

  private onUp(ev: PointerEvent): void {
    if (!this.holdPlane) return;
    this.holdPlane = null;
    this.orbitEnabled(true);
    const p = new THREE.Vector3();
    this.sceneView.camera.getWorldDirection(p);
    this.client.send({
      type: "hand", t: this.now(),
      pos: [0, 0, 0], grasp: false,
    });
    this.canvas.releasePointerCapture(ev.pointerId);
    this.vm.clearTracer();
  }

  private sendHand(p: THREE.Vector3, grasp: boolean): void {
    const t = this.now();
    if (t <= this.lastSent) return; // keep timestamps strictly increasing
    this.lastSent = t;
    const pos = this.sceneView.worldFromDisplay(p); // undo display reposition/resize
    this.client.send({ type: "hand", t, pos, grasp });
    if (grasp) this.vm.pushTracerPoint(pos);
  }

  private orbitEnabled(on: boolean): void {
    this.sceneView.orbit.enabled = on;
  }
}

/** Stream end-effector sphere poses while it is being dragged/rotated. */
export function wireSphereDrag(sceneView: RobotScene, vm: ViewModel,
                               client: SessionClient): void {
  let last = 0;
  sceneView.eeControls.addEventListener("objectChange", () => {
    if (vm.mode !== "ee_drag") return;
    const now = performance.now();
    if (now - last < 1000 / HAND_RATE_HZ) return;
    last = now;
    const s = sceneView.eeSphere;
    client.send({
      type: "drag_ee",
      pose: {
        pos: sceneView.worldFromDisplay(s.position),
        quat: sceneView.sceneQuatFromDisplay(s.quaternion),
      },
    });
  });
}

/** Seed-cube pose as the register message expects it (position + z yaw). */
export function seedPoseOf(sceneView: RobotScene): { pos: [number, number, number]; yaw: number } {
  const pos = sceneView.worldFromDisplay(sceneView.seedCube.position);
  const q = sceneView.sceneQuatFromDisplay(sceneView.seedCube.quaternion);
  const [w, x, y, z] = q;
  const yaw = Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
  return { pos, yaw };
}
