// Outbound messages must satisfy both the local zod schemas and the JSON
// schema file shipped inside the Python service package (the shared truth).

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import Ajv2020 from "ajv/dist/2020.js";
import { describe, expect, it } from "vitest";
import { parseInbound, validateOutbound, type Outbound } from "../src/protocol.js";

const schemaPath = fileURLToPath(
  new URL("../../src/handguide/protocol.schema.json", import.meta.url));
const serviceSchema = JSON.parse(readFileSync(schemaPath, "utf-8"));
const ajv = new Ajv2020({ strict: false });
const validateAgainstService = ajv.compile(serviceSchema);

const OUTBOUND_EXAMPLES: Outbound[] = [
  { type: "load_chain", path: "tests/fixtures/kr5_like/chain.json" },
  { type: "hand", t: 0.033, pos: [0.48, 0.0, 1.02], grasp: true },
  { type: "hand", t: 0.066, pos: [0.48, 0.0, 1.02], grasp: false },
  { type: "drag_ee", pose: { pos: [1.0, 0.2, 0.9], quat: [1, 0, 0, 0] } },
  { type: "register", scene_path: "scene.ply", seed: { pos: [0.9, -0.5, 0], yaw: 0.3 } },
  {
    type: "register",
    points: [[0, 0, 0], [1, 0, 0]],
    seed: { pos: [0, 0, 0], yaw: 0, crop_radius: 2.5 },
  },
  { type: "set_config", k: 2.0 },
  { type: "set_config", zone_scale: 1.8 },
  { type: "mode", value: "link_guidance" },
  { type: "record", on: true },
  { type: "record", on: false, path: "out.jsonl" },
  { type: "replay", path: "traj.jsonl" },
];

describe("outbound protocol", () => {
  it("accepts every UI-producible message locally", () => {
    for (const msg of OUTBOUND_EXAMPLES) {
      expect(validateOutbound(msg)).toEqual(msg);
    }
  });

  it("round-trips against the service schema file", () => {
    for (const msg of OUTBOUND_EXAMPLES) {
      const ok = validateAgainstService(JSON.parse(JSON.stringify(msg)));
      expect(ok, `service schema rejected ${JSON.stringify(msg)}: ` +
        JSON.stringify(validateAgainstService.errors)).toBe(true);
    }
  });

  it("rejects malformed messages before they reach the wire", () => {
    const bad = [
      { type: "hand", t: 0, pos: [0, 0], grasp: true },
      { type: "hand", t: 0, pos: [0, 0, 0] },
      { type: "mode", value: "fly" },
      { type: "register", seed: { pos: [0, 0, 0], yaw: 0 } },
      {
        type: "register", scene_path: "a.ply", points: [[0, 0, 0]],
        seed: { pos: [0, 0, 0], yaw: 0 },
      },
      { type: "set_config", k: -1 },
    ];
    for (const msg of bad) {
      expect(() => validateOutbound(msg as never), JSON.stringify(msg)).toThrow();
    }
  });
});

describe("inbound protocol", () => {
  it("parses every service message type", () => {
    const examples = [
      { type: "state", t: 0.01, angles: [0, 0.5] },
      { type: "target", t: 0.01, angles: [0.1], touched: [0], residual: [0, 0, 0] },
      { type: "highlight", link: 3 },
      { type: "highlight", link: null },
      {
        type: "registration", pose: { pos: [0, 0, 0], quat: [1, 0, 0, 0] },
        rms: 0.004, converged: true, inlier_fraction: 0.98,
      },
      {
        type: "chain", name: "x", angles: [0],
        links: [{ name: "base", mesh: null }],
        joints: [{
          name: "j1", origin_pos: [0, 0, 0], origin_quat: [1, 0, 0, 0],
          axis: [0, 0, 1], lower: -1, upper: 1,
        }],
        ee_offset_pos: [0, 0, 0], ee_offset_quat: [1, 0, 0, 0],
      },
      { type: "error", msg: "nope" },
    ];
    for (const msg of examples) {
      expect(parseInbound(JSON.stringify(msg)).type).toBe(msg.type);
      // and the shared schema agrees these are valid wire messages
      expect(validateAgainstService(msg)).toBe(true);
    }
  });

  it("rejects unknown or malformed frames", () => {
    expect(() => parseInbound("not json")).toThrow();
    expect(() => parseInbound('{"type": "junk"}')).toThrow();
    expect(() => parseInbound('{"type": "state", "t": 0}')).toThrow();
  });
});
