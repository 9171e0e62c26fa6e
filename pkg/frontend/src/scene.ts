// three.js rendering of the chain: meshes posed from service-sent angles,
// highlight, active-zone wireframes, hand tracers, residual arrow, the
// draggable end-effector sphere and the registration seed cube.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { TransformControls } from "three/examples/jsm/controls/TransformControls.js";
import { linkPoses } from "./kinematics.js";
import type { ChainMsg, Vec3 } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";

const LINK_COLOR = 0x8898aa;
const HIGHLIGHT_COLOR = 0xf5c211; // held link turns yellow
const ZONE_COLOR = 0x4dd0a0;
const TRACER_COLOR = 0x64b5f6;

export class RobotScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  readonly orbit: OrbitControls;
  readonly eeSphere: THREE.Mesh;
  readonly seedCube: THREE.Object3D;
  readonly eeControls: TransformControls;
  readonly seedControls: TransformControls;

  /** Display-only pose/scale for the whole hologram (reposition/resize);
   *  never part of the kinematics or of outgoing coordinates. */
  readonly chainGroup = new THREE.Group();
  readonly chainControls: TransformControls;
  private linksGroup = new THREE.Group();
  private linkMeshes: (THREE.Mesh | null)[] = [];
  private zoneHolders: (THREE.Mesh | null)[] = [];
  private centroids: Vec3[] = [];
  private tracerGeometry = new THREE.BufferGeometry();
  private tracerLine: THREE.Line;
  private motionArrow: THREE.ArrowHelper;
  private residualArrow: THREE.ArrowHelper;
  private lastRevision = -1;

  constructor(canvas: HTMLCanvasElement) {
    this.scene.background = new THREE.Color(0x10141a);
    this.camera = new THREE.PerspectiveCamera(
      55, canvas.clientWidth / Math.max(canvas.clientHeight, 1), 0.01, 100);
    this.camera.position.set(2.2, -2.2, 1.6);
    this.camera.up.set(0, 0, 1);

    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);

    this.orbit = new OrbitControls(this.camera, canvas);
    this.orbit.target.set(0.4, 0, 0.6);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.4);
    sun.position.set(2, -3, 4);
    this.scene.add(sun);
    const grid = new THREE.GridHelper(6, 24, 0x2a3442, 0x1c232e);
    grid.rotation.x = Math.PI / 2;
    this.scene.add(grid);
    this.scene.add(new THREE.AxesHelper(0.4));
    this.chainGroup.add(this.linksGroup);
    this.scene.add(this.chainGroup);

    this.tracerLine = new THREE.Line(
      this.tracerGeometry,
      new THREE.LineBasicMaterial({ color: TRACER_COLOR }));
    this.tracerLine.frustumCulled = false;
    this.chainGroup.add(this.tracerLine);

    this.motionArrow = new THREE.ArrowHelper(
      new THREE.Vector3(1, 0, 0), new THREE.Vector3(), 0.12, TRACER_COLOR);
    this.motionArrow.visible = false;
    this.chainGroup.add(this.motionArrow);

    this.residualArrow = new THREE.ArrowHelper(
      new THREE.Vector3(0, 0, 1), new THREE.Vector3(), 0.1, 0xff6659);
    this.residualArrow.visible = false;
    this.chainGroup.add(this.residualArrow);

    this.eeSphere = new THREE.Mesh(
      new THREE.SphereGeometry(0.09, 24, 24),
      new THREE.MeshStandardMaterial({
        color: 0xff8a65, transparent: true, opacity: 0.45,
      }));
    this.eeSphere.visible = false;
    this.scene.add(this.eeSphere);

    this.seedCube = buildSeedCube();
    this.seedCube.visible = false;
    this.scene.add(this.seedCube);

    this.eeControls = new TransformControls(this.camera, canvas);
    this.eeControls.attach(this.eeSphere);
    this.eeControls.enabled = false;
    this.scene.add(this.eeControls.getHelper());

    this.seedControls = new TransformControls(this.camera, canvas);
    this.seedControls.attach(this.seedCube);
    this.seedControls.enabled = false;
    this.scene.add(this.seedControls.getHelper());

    this.chainControls = new TransformControls(this.camera, canvas);
    this.chainControls.attach(this.chainGroup);
    this.chainControls.enabled = false;
    this.scene.add(this.chainControls.getHelper());

    for (const tc of [this.eeControls, this.seedControls, this.chainControls]) {
      tc.addEventListener("dragging-changed", (event) => {
        this.orbit.enabled = !(event as unknown as { value: boolean }).value;
      });
    }
  }

  // -- display-transform mapping (reposition/resize is view-only sugar) ----

  /** Map a kinematic/scene-frame point into the displayed hologram frame. */
  displayFromWorld(v: Vec3): THREE.Vector3 {
    this.chainGroup.updateMatrixWorld();
    return new THREE.Vector3(...v).applyMatrix4(this.chainGroup.matrixWorld);
  }

  /** Undo the display transform: points picked on screen back to scene frame. */
  worldFromDisplay(v: THREE.Vector3): Vec3 {
    this.chainGroup.updateMatrixWorld();
    const out = v.clone().applyMatrix4(this.chainGroup.matrixWorld.clone().invert());
    return [out.x, out.y, out.z];
  }

  sceneQuatFromDisplay(q: THREE.Quaternion): [number, number, number, number] {
    const inv = this.chainGroup.quaternion.clone().invert().multiply(q);
    return [inv.w, inv.x, inv.y, inv.z];
  }

  displayQuatFromScene(q: [number, number, number, number]): THREE.Quaternion {
    return this.chainGroup.quaternion.clone()
      .multiply(new THREE.Quaternion(q[1], q[2], q[3], q[0]));
  }

  setChain(chain: ChainMsg): void {
    this.linksGroup.clear();
    this.linkMeshes = [];
    this.zoneHolders = [];
    this.centroids = [];
    for (const link of chain.links) {
      if (!link.mesh || link.mesh.vertices.length === 0) {
        this.linkMeshes.push(null);
        this.zoneHolders.push(null);
        this.centroids.push([0, 0, 0]);
        continue;
      }
      const geometry = new THREE.BufferGeometry();
      geometry.setAttribute("position", new THREE.Float32BufferAttribute(
        link.mesh.vertices.flat(), 3));
      geometry.setIndex(link.mesh.triangles.flat());
      geometry.computeVertexNormals();
      const mesh = new THREE.Mesh(geometry, new THREE.MeshStandardMaterial({
        color: LINK_COLOR, metalness: 0.2, roughness: 0.6, flatShading: true,
      }));
      this.linksGroup.add(mesh);
      this.linkMeshes.push(mesh);

      const n = link.mesh.vertices.length;
      const centroid: Vec3 = [0, 0, 0];
      for (const v of link.mesh.vertices) {
        centroid[0] += v[0] / n;
        centroid[1] += v[1] / n;
        centroid[2] += v[2] / n;
      }
      this.centroids.push(centroid);

      // wireframe copy scaled about the mesh centroid = the active zone
      const zoneGeometry = geometry.clone().translate(
        -centroid[0], -centroid[1], -centroid[2]);
      const zone = new THREE.Mesh(zoneGeometry, new THREE.MeshBasicMaterial({
        color: ZONE_COLOR, wireframe: true, transparent: true, opacity: 0.35,
      }));
      zone.visible = false;
      this.linksGroup.add(zone);
      this.zoneHolders.push(zone);
    }
  }

  /** World centroid of a link's mesh at the current pose. */
  linkWorldCentroid(vm: ViewModel, link: number): THREE.Vector3 | null {
    const chain = vm.chain;
    if (!chain || !chain.links[link]) return null;
    const pose = linkPoses(chain, vm.angles)[link];
    const c = this.centroids[link] ?? [0, 0, 0];
    const q = new THREE.Quaternion(pose.quat[1], pose.quat[2], pose.quat[3], pose.quat[0]);
    return new THREE.Vector3(...c).applyQuaternion(q).add(new THREE.Vector3(...pose.pos));
  }

  pickLink(ndc: THREE.Vector2): number | null {
    const ray = new THREE.Raycaster();
    ray.setFromCamera(ndc, this.camera);
    let best: { link: number; distance: number } | null = null;
    this.linkMeshes.forEach((mesh, link) => {
      if (!mesh) return;
      const hits = ray.intersectObject(mesh, false);
      if (hits.length && (!best || hits[0].distance < best.distance)) {
        best = { link, distance: hits[0].distance };
      }
    });
    return best ? (best as { link: number }).link : null;
  }

  update(vm: ViewModel, zoneScale: number, showZones: boolean, showTracer: boolean): void {
    if (vm.revision === this.lastRevision) return;
    this.lastRevision = vm.revision;
    const chain = vm.chain;
    if (!chain || vm.angles.length !== chain.joints.length) return;
    const poses = linkPoses(chain, vm.angles);
    for (let i = 0; i < chain.links.length; i++) {
      const mesh = this.linkMeshes[i];
      if (!mesh) continue;
      const pose = poses[i];
      mesh.position.set(...pose.pos);
      mesh.quaternion.set(pose.quat[1], pose.quat[2], pose.quat[3], pose.quat[0]);
      const material = mesh.material as THREE.MeshStandardMaterial;
      material.color.setHex(vm.highlight === i ? HIGHLIGHT_COLOR : LINK_COLOR);

      const zone = this.zoneHolders[i];
      if (zone) {
        zone.visible = showZones;
        if (showZones) {
          const c = new THREE.Vector3(...this.centroids[i]);
          zone.quaternion.copy(mesh.quaternion);
          zone.position.copy(mesh.position)
            .add(c.clone().applyQuaternion(mesh.quaternion));
          zone.scale.setScalar(zoneScale);
        }
      }
    }

    this.tracerLine.visible = showTracer && vm.tracer.length > 1;
    this.motionArrow.visible = this.tracerLine.visible;
    if (this.tracerLine.visible) {
      this.tracerGeometry.setAttribute("position",
        new THREE.Float32BufferAttribute(vm.tracer.flat(), 3));
      this.tracerGeometry.computeBoundingSphere();
      // arrow at the tracer head pointing along the latest hand motion
      const head = vm.tracer[vm.tracer.length - 1];
      const prev = vm.tracer[vm.tracer.length - 2];
      const dir = new THREE.Vector3(
        head[0] - prev[0], head[1] - prev[1], head[2] - prev[2]);
      if (dir.lengthSq() > 1e-10) {
        this.motionArrow.position.set(...head);
        this.motionArrow.setDirection(dir.normalize());
        this.motionArrow.setLength(0.12);
      } else {
        this.motionArrow.visible = false;
      }
    }

    const tip = poses[poses.length - 1];
    if (vm.residual && vm.target) {
      const length = Math.hypot(...vm.residual);
      this.residualArrow.visible = length > 1e-4;
      if (this.residualArrow.visible) {
        this.residualArrow.position.set(...tip.pos);
        this.residualArrow.setDirection(new THREE.Vector3(...vm.residual).normalize());
        this.residualArrow.setLength(Math.min(length, 0.5));
      }
    } else {
      this.residualArrow.visible = false;
    }
  }

  /** Place the drag sphere on the (displayed) end effector on mode entry. */
  snapSphereToTip(vm: ViewModel): void {
    const chain = vm.chain;
    if (!chain) return;
    const poses = linkPoses(chain, vm.angles);
    const tip = poses[poses.length - 1];
    this.eeSphere.position.copy(this.displayFromWorld(tip.pos));
    this.eeSphere.quaternion.copy(this.displayQuatFromScene(tip.quat));
  }

  resize(width: number, height: number): void {
    this.camera.aspect = width / Math.max(height, 1);
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(width, height, false);
  }

  render(): void {
    this.orbit.update();
    this.renderer.render(this.scene, this.camera);
  }
}

function buildSeedCube(): THREE.Object3D {
  const holder = new THREE.Group();
  const cube = new THREE.Mesh(
    new THREE.BoxGeometry(0.15, 0.15, 0.15),
    new THREE.MeshStandardMaterial({
      color: 0xba68c8, transparent: true, opacity: 0.7,
    }));
  holder.add(cube);
  // visualize the cube's z axis (the "points out of the robot front" hint)
  holder.add(new THREE.ArrowHelper(
    new THREE.Vector3(0, 0, 1), new THREE.Vector3(), 0.3, 0xE1BEE7));
  return holder;
}
