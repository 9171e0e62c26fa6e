// Wire protocol types, mirrored from the service's protocol.schema.json.
// Every message the UI sends is validated here before it reaches the socket;
// a test cross-checks these schemas against the service's JSON schema file.

import { z } from "zod";

export const vec3 = z.tuple([z.number(), z.number(), z.number()]);
export const quat = z.tuple([z.number(), z.number(), z.number(), z.number()]);
export const poseSchema = z.strictObject({ pos: vec3, quat: quat });

export type Vec3 = z.infer<typeof vec3>;
export type Quat = z.infer<typeof quat>;
export type Pose = z.infer<typeof poseSchema>;

// ---------------------------------------------------------------------------
// client -> service
// ---------------------------------------------------------------------------

export const loadChainMsg = z.strictObject({
  type: z.literal("load_chain"),
  path: z.string().min(1),
});

export const handMsg = z.strictObject({
  type: z.literal("hand"),
  t: z.number(),
  pos: vec3,
  grasp: z.boolean(),
});

export const dragEeMsg = z.strictObject({
  type: z.literal("drag_ee"),
  pose: poseSchema,
});

export const registerMsg = z
  .strictObject({
    type: z.literal("register"),
    scene_path: z.string().min(1).optional(),
    points: z.array(vec3).min(1).optional(),
    seed: z.strictObject({
      pos: vec3,
      yaw: z.number(),
      crop_radius: z.number().positive().optional(),
    }),
  })
  .refine((m) => (m.scene_path === undefined) !== (m.points === undefined), {
    message: "exactly one of scene_path or points",
  });

export const setConfigMsg = z.strictObject({
  type: z.literal("set_config"),
  k: z.number().positive().optional(),
  zone_scale: z.number().min(1).optional(),
});

export const modeValues = ["link_guidance", "ee_drag", "replay", "idle"] as const;
export const modeMsg = z.strictObject({
  type: z.literal("mode"),
  value: z.enum(modeValues),
});

export const recordMsg = z.strictObject({
  type: z.literal("record"),
  on: z.boolean(),
  path: z.string().min(1).optional(),
});

export const replayMsg = z.strictObject({
  type: z.literal("replay"),
  path: z.string().min(1),
});

export const outboundSchemas = {
  load_chain: loadChainMsg,
  hand: handMsg,
  drag_ee: dragEeMsg,
  register: registerMsg,
  set_config: setConfigMsg,
  mode: modeMsg,
  record: recordMsg,
  replay: replayMsg,
} as const;

export type Outbound =
  | z.infer<typeof loadChainMsg>
  | z.infer<typeof handMsg>
  | z.infer<typeof dragEeMsg>
  | z.infer<typeof registerMsg>
  | z.infer<typeof setConfigMsg>
  | z.infer<typeof modeMsg>
  | z.infer<typeof recordMsg>
  | z.infer<typeof replayMsg>;

export type Mode = (typeof modeValues)[number];

export function validateOutbound(msg: Outbound): Outbound {
  const schema = outboundSchemas[msg.type];
  if (!schema) throw new Error(`unknown outbound message type ${msg.type}`);
  return schema.parse(msg) as Outbound;
}

// ---------------------------------------------------------------------------
// service -> client
// ---------------------------------------------------------------------------

export const stateMsg = z.strictObject({
  type: z.literal("state"),
  t: z.number(),
  angles: z.array(z.number()).min(1),
});

export const targetMsg = z.strictObject({
  type: z.literal("target"),
  t: z.number(),
  angles: z.array(z.number()).min(1),
  touched: z.array(z.number().int().nonnegative()),
  residual: vec3,
});

export const highlightMsg = z.strictObject({
  type: z.literal("highlight"),
  link: z.number().int().nonnegative().nullable(),
});

export const registrationMsg = z.strictObject({
  type: z.literal("registration"),
  pose: poseSchema,
  rms: z.number().nonnegative(),
  converged: z.boolean(),
  inlier_fraction: z.number().min(0).max(1).optional(),
});

export const chainLinkSchema = z.strictObject({
  name: z.string(),
  mesh: z
    .strictObject({
      vertices: z.array(vec3),
      triangles: z.array(z.tuple([z.number().int(), z.number().int(), z.number().int()])),
    })
    .nullable(),
});

export const chainJointSchema = z.strictObject({
  name: z.string(),
  origin_pos: vec3,
  origin_quat: quat,
  axis: vec3,
  lower: z.number(),
  upper: z.number(),
});

export const chainMsg = z.strictObject({
  type: z.literal("chain"),
  name: z.string(),
  links: z.array(chainLinkSchema),
  joints: z.array(chainJointSchema),
  ee_offset_pos: vec3.optional(),
  ee_offset_quat: quat.optional(),
  angles: z.array(z.number()),
});

export const errorMsg = z.strictObject({
  type: z.literal("error"),
  msg: z.string(),
});

export const inboundSchema = z.discriminatedUnion("type", [
  stateMsg,
  targetMsg,
  highlightMsg,
  registrationMsg,
  chainMsg,
  errorMsg,
]);

export type Inbound = z.infer<typeof inboundSchema>;
export type ChainMsg = z.infer<typeof chainMsg>;
export type ChainLink = z.infer<typeof chainLinkSchema>;
export type ChainJoint = z.infer<typeof chainJointSchema>;

export function parseInbound(text: string): Inbound {
  return inboundSchema.parse(JSON.parse(text));
}
