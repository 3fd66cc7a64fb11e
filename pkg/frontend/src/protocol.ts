// Wire protocol spoken by the traymaze live server. All messages are JSON
// text frames with a `type` tag; numbers are SI units (meters, seconds,
// radians) in the tray frame.

export interface WallRect {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface Layout {
  width: number;
  height: number;
  walls: WallRect[];
  goal_center: [number, number];
  goal_radius: number;
  start_region: { center: [number, number]; radius: number };
  ball_radius: number;
}

export interface ScheduleInfo {
  total_interaction_steps: number;
  updates_per_block: number;
  block_size: number;
  eval_trials: number;
  step_cap: number;
  control_interval: number;
}

export interface HelloMsg {
  type: "hello";
  protocol_version: number;
  layout: Layout;
  control_axis: string;
  schedule: ScheduleInfo;
}

export interface StateMsg {
  type: "state";
  t_sim: number;
  ball: [number, number];
  vel: [number, number];
  tray: [number, number];
  step_index: number;
  phase: string;
  block: number;
  last_reward: number;
}

export interface EpisodeResultMsg {
  type: "episode_result";
  trial_id: number;
  reached: boolean;
  steps_used: number;
  score: number;
}

export interface ConfigMsg {
  type: "config";
  role: "control" | "observe";
  config: Record<string, unknown>;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  text: string;
}

export type ServerMessage =
  | HelloMsg
  | StateMsg
  | EpisodeResultMsg
  | ConfigMsg
  | ErrorMsg;

export interface CmdMsg {
  type: "cmd";
  tilt: number;
  client_time: number;
}

const KNOWN_TYPES = new Set([
  "hello",
  "state",
  "episode_result",
  "config",
  "error",
]);

/** Parse one inbound frame; unknown or malformed messages yield null. */
export function parseMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !KNOWN_TYPES.has(type)) return null;
  return data as ServerMessage;
}

export function makeCmd(tilt: number): CmdMsg {
  return {
    type: "cmd",
    tilt: Math.max(-1, Math.min(1, tilt)),
    client_time: Date.now() / 1000,
  };
}
