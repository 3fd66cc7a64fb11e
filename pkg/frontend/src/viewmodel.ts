// The single source of truth for rendering. Holds only server-confirmed
// state: the UI never advances the simulation locally, it only interpolates
// ball position between two received states for smooth drawing.

import type {
  EpisodeResultMsg,
  HelloMsg,
  ServerMessage,
  StateMsg,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";
export type InputMode = "mouse" | "keys";

const RESULT_HISTORY = 50;
const STALE_AFTER = 1.5; // s without a state message

export class ViewModel {
  hello: HelloMsg | null = null;
  state: StateMsg | null = null;
  prevState: StateMsg | null = null;
  episodeResults: EpisodeResultMsg[] = [];
  connection: ConnectionStatus = "connecting";
  role: "control" | "observe" | null = null;
  lastError: string | null = null;
  inputMode: InputMode = "mouse";
  thetaMax = 0.2;
  private stateAt = 0;
  private prevStateAt = 0;

  /** Apply one server message; `now` is a monotonic clock in seconds. */
  apply(msg: ServerMessage, now: number): void {
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        break;
      case "state":
        this.prevState = this.state;
        this.prevStateAt = this.stateAt;
        this.state = msg;
        this.stateAt = now;
        break;
      case "episode_result":
        this.episodeResults.push(msg);
        if (this.episodeResults.length > RESULT_HISTORY) {
          this.episodeResults.shift();
        }
        break;
      case "config": {
        this.role = msg.role;
        const phys = (msg.config as { physics?: { theta_max?: number } })
          .physics;
        if (phys && typeof phys.theta_max === "number") {
          this.thetaMax = phys.theta_max;
        }
        break;
      }
      case "error":
        this.lastError = `${msg.code}: ${msg.text}`;
        break;
    }
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
    if (status !== "open") {
      // a reconnect repopulates everything from the next hello + state
      this.role = null;
    }
  }

  meanScore(): number | null {
    if (this.episodeResults.length === 0) return null;
    const total = this.episodeResults.reduce((acc, r) => acc + r.score, 0);
    return total / this.episodeResults.length;
  }

  /** True when no state has arrived recently enough to trust. */
  isStale(now: number): boolean {
    return this.state === null || now - this.stateAt > STALE_AFTER;
  }

  /**
   * Ball position for drawing: renders one sample behind, interpolating
   * from the previous to the latest server state over their arrival span.
   * Display only; physics stays on the server.
   */
  displayBall(now: number): [number, number] | null {
    if (this.state === null) return null;
    const span = this.stateAt - this.prevStateAt;
    if (this.prevState === null || span <= 0) {
      return this.state.ball;
    }
    const f = Math.max(0, Math.min(1, (now - this.stateAt) / span));
    const a = this.prevState.ball;
    const b = this.state.ball;
    return [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f];
  }
}
