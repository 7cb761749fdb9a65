import { panelToCameraPx, sceneScale } from "./layout";
import { renderBird, renderHud, renderScene } from "./render";
import { CockpitSocket } from "./socket";
import { CockpitViewModel } from "./viewmodel";

// Must match the service's scene camera and bird extent defaults.
const SCENE_CAM = { width: 640, height: 360 };
const BIRD_EXTENT_M = 60;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function wsUrl(sessionName: string): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const host = location.hostname || "127.0.0.1";
  const port = new URLSearchParams(location.search).get("port") ?? "8732";
  return `${proto}://${host}:${port}/session?name=${encodeURIComponent(sessionName)}`;
}

function main(): void {
  const hudCanvas = byId<HTMLCanvasElement>("hud");
  const birdCanvas = byId<HTMLCanvasElement>("bird");
  const sceneCanvas = byId<HTMLCanvasElement>("scene");
  const statusEl = byId<HTMLSpanElement>("status");
  const clockEl = byId<HTMLSpanElement>("clock");
  const consideredEl = byId<HTMLSpanElement>("considered");
  const scenarioSel = byId<HTMLSelectElement>("scenario");
  const seedInput = byId<HTMLInputElement>("seed");
  const speedSlider = byId<HTMLInputElement>("speed");
  const speedValue = byId<HTMLSpanElement>("speed-value");

  const sessionName = `cockpit-${Math.random().toString(36).slice(2, 10)}`;
  const socket = new CockpitSocket(wsUrl(sessionName), (url) => new WebSocket(url));
  const vm = new CockpitViewModel(socket);
  socket.onMessage = (msg) => vm.handleMessage(msg);
  socket.onStatus = (status) => vm.handleStatus(status);
  socket.connect();

  byId<HTMLButtonElement>("load").onclick = () => {
    const seed = seedInput.value === "" ? null : Number(seedInput.value);
    vm.load(scenarioSel.value, seed);
  };
  byId<HTMLButtonElement>("run").onclick = () => vm.setMode("run");
  byId<HTMLButtonElement>("pause").onclick = () => vm.setMode("pause");
  byId<HTMLButtonElement>("step").onclick = () => vm.step();

  speedSlider.oninput = () => {
    speedValue.textContent = `${speedSlider.value} m/s`;
  };
  speedSlider.onchange = () => vm.setSpeed(Number(speedSlider.value));
  byId<HTMLButtonElement>("speed-release").onclick = () => {
    vm.setSpeed(null);
    speedValue.textContent = "scripted";
  };

  const scale = sceneScale(SCENE_CAM.width, SCENE_CAM.height, sceneCanvas.width);
  sceneCanvas.onmousemove = (ev) => {
    const rect = sceneCanvas.getBoundingClientRect();
    const px = panelToCameraPx(ev.clientX - rect.left, ev.clientY - rect.top, scale);
    if (px[0] >= 0 && px[0] < SCENE_CAM.width && px[1] >= 0 && px[1] < SCENE_CAM.height) {
      vm.pointGaze(px);
    }
  };
  sceneCanvas.onmouseleave = () => vm.clearGaze();

  const hudCtx = hudCanvas.getContext("2d")!;
  const birdCtx = birdCanvas.getContext("2d")!;
  const sceneCtx = sceneCanvas.getContext("2d")!;

  function frame(): void {
    vm.flush(); // trailing-edge gaze throttle
    const state = vm.latest;
    renderHud(hudCtx, state);
    renderBird(birdCtx, state ? state.bird : [], BIRD_EXTENT_M);
    renderScene(sceneCtx, state ? state.scene : [], scale);

    statusEl.textContent = vm.status + (vm.lastError ? ` (${vm.lastError.error})` : "");
    statusEl.className = vm.status;
    if (state) {
      clockEl.textContent = `t=${state.t.toFixed(2)}s tick=${state.tick} ${state.mode}`;
      consideredEl.textContent = state.considered.length
        ? `seen: ${state.considered.join(", ")}`
        : "";
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
