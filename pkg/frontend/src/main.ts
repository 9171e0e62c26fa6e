import { DragInteraction, seedPoseOf, wireSphereDrag } from "./interactions.js";
import { createMenu } from "./menu.js";
import { RobotScene } from "./scene.js";
import { SessionClient, sessionUrl } from "./session.js";
import { ViewModel } from "./viewmodel.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const menuRoot = document.getElementById("menu") as HTMLElement;

const vm = new ViewModel();
const sceneView = new RobotScene(canvas);

const client = new SessionClient(sessionUrl(location.search), {
  onMessage(msg) {
    const before = vm.chain;
    vm.apply(msg);
    if (msg.type === "chain" && vm.chain !== before && vm.chain) {
      sceneView.setChain(vm.chain);
      sceneView.snapSphereToTip(vm);
    }
    if (msg.type === "error") menu.toast(msg.msg);
    if (msg.type === "registration") {
      menu.setRegistration(
        `registration: ${msg.converged ? "converged" : "diverged"}, ` +
        `rms ${(msg.rms * 1000).toFixed(1)} mm`);
    }
    if (msg.type === "target") {
      const r = Math.hypot(...msg.residual);
      menu.setResidual(r > 1e-4 ? `residual ${(r * 1000).toFixed(1)} mm` : "");
    }
  },
  onStatus(status) {
    vm.connection = status;
    menu.setStatus(status === "open" ? "connected" : status, status === "open");
  },
  onProtocolError(error) {
    menu.toast(`bad message from service: ${error}`);
  },
});

const menu = createMenu(menuRoot, {
  onMode(mode) {
    if (client.send({ type: "mode", value: mode })) {
      vm.setMode(mode);
      sceneView.eeSphere.visible = mode === "ee_drag";
      sceneView.eeControls.enabled = mode === "ee_drag";
      if (mode === "ee_drag") sceneView.snapSphereToTip(vm);
    }
  },
  onMotionScale(k) {
    client.send({ type: "set_config", k });
  },
  onZoneScale(zone_scale) {
    client.send({ type: "set_config", zone_scale });
  },
  onShowZones() { vm.revision++; },
  onShowTracer() { vm.revision++; },
  onRecord(on, path) {
    client.send(path ? { type: "record", on, path } : { type: "record", on });
  },
  onReplay(path) {
    if (client.send({ type: "replay", path })) vm.setMode("replay");
  },
  onRegister(scenePath) {
    const seed = seedPoseOf(sceneView.seedCube);
    client.send({
      type: "register", scene_path: scenePath,
      seed: { pos: seed.pos, yaw: seed.yaw },
    });
  },
  onPlaceSeed(on) {
    sceneView.seedCube.visible = on;
    sceneView.seedControls.enabled = on;
  },
});

new DragInteraction(canvas, sceneView, vm, client);
wireSphereDrag(sceneView, vm, client);

function frame() {
  const rect = canvas.getBoundingClientRect();
  if (canvas.width !== rect.width || canvas.height !== rect.height) {
    sceneView.resize(rect.width, rect.height);
  }
  sceneView.update(vm, menu.zoneScale(), menu.showZones(), menu.showTracer());
  sceneView.render();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
