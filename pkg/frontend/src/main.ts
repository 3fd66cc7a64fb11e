// Entry point: wires the socket, the view model, input capture and the
// render loop. Commands go out at 30 Hz (well above the 5 Hz control
// cadence, so latest-wins sampling on the server never starves).

import { ArrowKeys, KeyRamp, clampTilt, pointerToTilt } from "./input.js";
import { makeCmd } from "./protocol.js";
import { render } from "./render.js";
import { SessionSocket } from "./net.js";
import { ViewModel } from "./viewmodel.js";

const COMMAND_HZ = 30;

function monotonic(): number {
  return performance.now() / 1000;
}

function main(): void {
  const canvas = document.getElementById("tray") as HTMLCanvasElement | null;
  if (!canvas) throw new Error("missing #tray canvas");
  const modeButton = document.getElementById("mode") as HTMLButtonElement | null;

  const view = new ViewModel();
  const keys = new ArrowKeys();
  const ramp = new KeyRamp();
  let pointerTilt = 0;
  let currentTilt = 0;
  let lastTick = monotonic();

  const proto = location.protocol === "https:" ? "wss" : "ws";
  const socket = new SessionSocket(
    `${proto}://${location.host}/`,
    (msg) => view.apply(msg, monotonic()),
    (status) => view.setConnection(status),
  );
  socket.start();

  canvas.addEventListener("pointermove", (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    pointerTilt = pointerToTilt(ev.clientX, rect.left, rect.width);
  });
  canvas.addEventListener("pointerleave", () => {
    pointerTilt = 0;
  });

  window.addEventListener("keydown", (ev: KeyboardEvent) => {
    if (keys.handle(ev.key, true)) ev.preventDefault();
    if (ev.key === "m" || ev.key === "M") toggleMode();
  });
  window.addEventListener("keyup", (ev: KeyboardEvent) => {
    if (keys.handle(ev.key, false)) ev.preventDefault();
  });
  window.addEventListener("blur", () => keys.clear());

  function toggleMode(): void {
    view.inputMode = view.inputMode === "mouse" ? "keys" : "mouse";
    ramp.reset();
    if (modeButton) modeButton.textContent = `input: ${view.inputMode} (M)`;
  }
  modeButton?.addEventListener("click", toggleMode);

  setInterval(() => {
    const now = monotonic();
    const dt = Math.min(now - lastTick, 0.25);
    lastTick = now;
    currentTilt =
      view.inputMode === "mouse"
        ? clampTilt(pointerTilt)
        : ramp.update(dt, keys.left, keys.right);
    if (view.role === "control") {
      socket.send(makeCmd(currentTilt));
    }
  }, 1000 / COMMAND_HZ);

  function frame(): void {
    render(view, canvas!, monotonic(), currentTilt);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
