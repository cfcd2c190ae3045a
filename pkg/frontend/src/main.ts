import { ApiClient } from "./api.js";
import { ViewerController } from "./controller.js";
import { fitCamera, type Camera } from "./projection.js";
import { renderScene } from "./render.js";
import { labelPanelLines } from "./state.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const slider = document.getElementById("distance") as HTMLInputElement;
const sliderValue = document.getElementById("distance-value")!;
const panel = document.getElementById("verdicts")!;
const toasts = document.getElementById("toasts")!;
const status = document.getElementById("status")!;

let camera: Camera = { yaw: 0.5, pitch: 0.4, zoom: 3, center: [0, 0, 0] };

function toast(message: string): void {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  toasts.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

const api = new ApiClient("");
const controller = new ViewerController(api, () => render(), { onToast: toast });

function render(): void {
  if (!controller.scene) return;
  const stats = renderScene(
    ctx,
    canvas.width,
    canvas.height,
    controller.scene,
    controller.state,
    camera,
  );
  const st = controller.state;
  status.textContent =
    `root=${st.root ?? "-"} target=${st.target ?? "-"} ` +
    `d=${st.suppressionDistance.toFixed(0)}mm nodes=${stats.nodesDrawn} ` +
    (st.path?.found && st.path.total_cost !== null
      ? `path=${st.path.total_cost.toFixed(1)}mm`
      : "");
  panel.innerHTML = "";
  for (const line of labelPanelLines(st.labelsVisible ? st.labels : null)) {
    const row = document.createElement("div");
    row.textContent = line;
    if (line.includes("ABSENT") || line.includes("POSITIVE")) row.className = "absent";
    panel.appendChild(row);
  }
}

async function startSession(occluded: boolean): Promise<void> {
  status.textContent = "building session (segmenting phantom)...";
  try {
    await controller.createPhantomSession({
      seed: 5,
      lvo_scenario: occluded ? { vessel: "MCA_L", fraction_start: 0.4 } : null,
    });
  } catch (err) {
    toast(err instanceof Error ? err.message : String(err));
    return;
  }
  const scene = controller.scene!;
  camera = fitCamera(scene.graph.nodes.map((n) => n.pos), canvas.width, canvas.height);
  const main = scene.graph.components[0];
  await controller.setRoot(main[0]);
  slider.max = "400";
  slider.value = "400";
  sliderValue.textContent = "400";
  controller.sliderChanged(400);
  render();
}

document.getElementById("new-intact")!.addEventListener("click", () => void startSession(false));
document.getElementById("new-occluded")!.addEventListener("click", () => void startSession(true));

slider.addEventListener("input", () => {
  sliderValue.textContent = slider.value;
  controller.sliderChanged(Number(slider.value));
});

document.getElementById("labels-toggle")!.addEventListener("change", () => {
  void controller.toggleLabels().then(render);
});

function clickMode(): "root" | "target" {
  const rootRadio = document.getElementById("mode-root") as HTMLInputElement;
  return rootRadio.checked ? "root" : "target";
}

canvas.addEventListener("click", (ev) => {
  const rect = canvas.getBoundingClientRect();
  void controller.clickAt(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    camera,
    canvas.width,
    canvas.height,
    clickMode(),
  );
});

let dragging = false;
let lastX = 0;
let lastY = 0;
canvas.addEventListener("mousedown", (ev) => {
  dragging = true;
  lastX = ev.clientX;
  lastY = ev.clientY;
});
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  camera.yaw += (ev.clientX - lastX) * 0.01;
  camera.pitch = Math.max(-1.4, Math.min(1.4, camera.pitch + (ev.clientY - lastY) * 0.01));
  lastX = ev.clientX;
  lastY = ev.clientY;
  render();
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  camera.zoom *= ev.deltaY < 0 ? 1.1 : 0.9;
  render();
});

status.textContent = "create a session to begin";
