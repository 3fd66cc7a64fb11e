// Tilt input capture: pointer position or arrow-key ramp, both mapped to a
// normalized tilt command in [-1, 1].

export function clampTilt(t: number): number {
  return Math.max(-1, Math.min(1, t));
}

/**
 * Mouse mode: horizontal pointer offset from the canvas centre maps
 * linearly to tilt; the right edge is exactly +1, the left edge -1.
 */
export function pointerToTilt(
  clientX: number,
  rectLeft: number,
  rectWidth: number,
): number {
  const half = rectWidth / 2;
  if (half <= 0) return 0;
  return clampTilt((clientX - rectLeft - half) / half);
}

export const KEY_RAMP_RATE = 2.0; // tilt units per second while held

/**
 * Key mode: tilt ramps at a fixed rate while an arrow is held and decays
 * back to zero at the same rate when released.
 */
export class KeyRamp {
  tilt = 0;

  constructor(public rate: number = KEY_RAMP_RATE) {}

  update(dt: number, leftHeld: boolean, rightHeld: boolean): number {
    const dir = (rightHeld ? 1 : 0) - (leftHeld ? 1 : 0);
    const step = this.rate * dt;
    if (dir !== 0) {
      this.tilt += dir * step;
    } else if (Math.abs(this.tilt) <= step) {
      this.tilt = 0;
    } else {
      this.tilt -= Math.sign(this.tilt) * step;
    }
    this.tilt = clampTilt(this.tilt);
    return this.tilt;
  }

  reset(): void {
    this.tilt = 0;
  }
}

/** Tracks held arrow keys from keyboard events. */
export class ArrowKeys {
  left = false;
  right = false;

  handle(key: string, down: boolean): boolean {
    if (key === "ArrowLeft" || key === "a" || key === "A") {
      this.left = down;
      return true;
    }
    if (key === "ArrowRight" || key === "d" || key === "D") {
      this.right = down;
      return true;
    }
    return false;
  }

  clear(): void {
    this.left = false;
    this.right = false;
  }
}
