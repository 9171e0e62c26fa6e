// Single source of truth for everything rendered. All kinematic state comes
// from service messages; pointer interactions never write joint angles here.

import type { ChainMsg, Inbound, Mode, Pose, Vec3 } from "./protocol.js";

export interface RegistrationInfo {
  pose: Pose;
  rms: number;
  converged: boolean;
}

export type ConnectionStatus = "connecting" | "open" | "closed";

const TRACER_LIMIT = 300;

export class ViewModel {
  chain: ChainMsg | null = null;
  /** Broadcast controller state (what the robot is doing). */
  angles: number[] = [];
  stateT = -Infinity;
  /** Latest commanded target (what guidance asked for). */
  target: number[] | null = null;
  touched: number[] = [];
  residual: Vec3 | null = null;
  highlight: number | null = null;
  registration: RegistrationInfo | null = null;
  mode: Mode = "idle";
  connection: ConnectionStatus = "connecting";
  errors: string[] = [];
  /** Recent hand points for the tracer overlay (client-side only). */
  tracer: Vec3[] = [];
  revision = 0;

  /** Apply a service message; returns false for stale/no-op frames. */
  apply(msg: Inbound): boolean {
    switch (msg.type) {
      case "state":
        if (msg.t <= this.stateT) return false; // never render stale frames
        this.stateT = msg.t;
        this.angles = msg.angles;
        break;
      case "target":
        this.target = msg.angles;
        this.touched = msg.touched;
        this.residual = msg.residual;
        break;
      case "highlight":
        this.highlight = msg.link;
        break;
      case "registration":
        this.registration = {
          pose: msg.pose, rms: msg.rms, converged: msg.converged,
        };
        break;
      case "chain":
        this.chain = msg;
        this.angles = msg.angles;
        this.stateT = -Infinity;
        this.target = null;
        this.touched = [];
        this.highlight = null;
        this.tracer = [];
        break;
      case "error":
        this.errors.push(msg.msg);
        if (this.errors.length > 50) this.errors.shift();
        break;
    }
    this.revision++;
    return true;
  }

  setMode(mode: Mode): void {
    this.mode = mode;
    this.revision++;
  }

  pushTracerPoint(p: Vec3): void {
    this.tracer.push(p);
    if (this.tracer.length > TRACER_LIMIT) this.tracer.shift();
    this.revision++;
  }

  clearTracer(): void {
    this.tracer = [];
    this.revision++;
  }
}
