/** Browser entry: wires the teach client, canvas renderer, charts, and the
 * feedback controls together. */

import { TeachClient } from "./client.js";
import { movingAverage, renderSeries } from "./charts.js";
import {
  Draw2D,
  ViewTransform,
  pickCandidate,
  renderMap,
  renderProposal,
} from "./render.js";
import { Feedback, SemanticChannel, SemanticSignal, ServerMessage } from "./protocol.js";
import {
  Gesture,
  ViewModel,
  applyServerMessage,
  consumePendingProposal,
  gestureToFeedback,
  initialViewModel,
} from "./viewmodel.js";

function canvasDraw(ctx: CanvasRenderingContext2D, width: number, height: number): Draw2D {
  return {
    clear: () => {
      ctx.fillStyle = "#eceff1";
      ctx.fillRect(0, 0, width, height);
    },
    rect: (x, y, w, h, fill) => {
      ctx.fillStyle = fill;
      ctx.fillRect(x, y, w, h);
    },
    circle: (x, y, r, fill) => {
      ctx.fillStyle = fill;
      ctx.beginPath();
      ctx.arc(x, y, r, 0, 2 * Math.PI);
      ctx.fill();
    },
    polyline: (points, stroke, width_, dashed) => {
      if (points.length < 2) return;
      ctx.strokeStyle = stroke;
      ctx.lineWidth = width_;
      ctx.setLineDash(dashed ? [4, 4] : []);
      ctx.beginPath();
      ctx.moveTo(points[0][0], points[0][1]);
      for (const [x, y] of points.slice(1)) ctx.lineTo(x, y);
      ctx.stroke();
      ctx.setLineDash([]);
    },
    text: (x, y, s, fill) => {
      ctx.fillStyle = fill;
      ctx.font = "11px sans-serif";
      ctx.fillText(s, x, y);
    },
  };
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let vm: ViewModel = initialViewModel();
let client: TeachClient | null = null;
let paused = false;

const mapCanvas = el<HTMLCanvasElement>("map");
const chartCanvas = el<HTMLCanvasElement>("charts");
const status = el<HTMLSpanElement>("status");
const stats = el<HTMLSpanElement>("stats");
const errorBanner = el<HTMLDivElement>("error");

const mapCtx = mapCanvas.getContext("2d")!;
const chartCtx = chartCanvas.getContext("2d")!;
let transform: ViewTransform = { scale: 40, height: mapCanvas.height };

function redraw(): void {
  const draw = canvasDraw(mapCtx, mapCanvas.width, mapCanvas.height);
  if (vm.map) {
    const worldW = vm.map.grid[0].length * vm.map.resolution;
    const worldH = vm.map.grid.length * vm.map.resolution;
    transform = {
      scale: Math.min(mapCanvas.width / worldW, mapCanvas.height / worldH),
      height: mapCanvas.height,
    };
    renderMap(draw, transform, vm.map);
  }
  if (vm.pose) {
    renderProposal(draw, transform, {
      pose: vm.pose,
      refPoint: vm.refPoint,
      candidates: vm.candidates,
      chosenIndex: vm.chosenIndex,
      preferenceAlternative: vm.preferenceAlternative,
    });
  }
  const chartDraw = canvasDraw(chartCtx, chartCanvas.width, chartCanvas.height);
  chartDraw.clear();
  renderSeries(
    chartDraw,
    { x: 0, y: 0, width: chartCanvas.width, height: chartCanvas.height / 2 - 4 },
    movingAverage(vm.charts.hingeLoss, 20),
    "#c62828",
    "hinge loss (smoothed latent proxy)",
  );
  renderSeries(
    chartDraw,
    {
      x: 0,
      y: chartCanvas.height / 2 + 4,
      width: chartCanvas.width,
      height: chartCanvas.height / 2 - 4,
    },
    vm.charts.cumulativeCorrections,
    "#283593",
    "cumulative corrections",
  );
  status.textContent = `${vm.connection} | ${vm.session ?? "-"} | ${
    vm.awaitingFeedback ? "awaiting feedback" : "advancing"
  }${paused ? " | paused" : ""}`;
  stats.textContent =
    `steps ${vm.stepCount} | corrections ${vm.correctionCount} | resets ${vm.resetCount}` +
    ` | weights ${vm.weightsDigest?.slice(0, 10) ?? "-"}`;
  errorBanner.textContent = vm.lastError ?? "";
  errorBanner.style.display = vm.lastError ? "block" : "none";
  setInputsEnabled(vm.awaitingFeedback && !paused);
}

function setInputsEnabled(enabled: boolean): void {
  for (const id of ["skip", "prefer-chosen", "prefer-alt", "semantic-send"]) {
    el<HTMLButtonElement>(id).disabled = !enabled;
  }
}

function submitGesture(gesture: Gesture): void {
  if (paused || !client) return;
  const feedback = gestureToFeedback(vm, gesture);
  if (feedback === null) return;
  const consumed = consumePendingProposal(vm);
  if (!consumed) return;
  if (client.sendFeedback(consumed.proposalId, feedback)) {
    vm = consumed.vm;
    redraw();
  }
}

function onServerMessage(msg: ServerMessage): void {
  vm = applyServerMessage(vm, msg);
  if (msg.kind === "export") {
    downloadCsv(msg.csv);
  }
  redraw();
}

function downloadCsv(csv: string): void {
  const blob = new Blob([csv], { type: "text/csv" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${vm.session ?? "session"}.csv`;
  a.click();
  URL.revokeObjectURL(a.href);
}

function semanticGesture(): Gesture {
  const read = (id: string): SemanticSignal =>
    (el<HTMLSelectElement>(id).value || "neutral") as SemanticSignal;
  const signals: Partial<Record<SemanticChannel, SemanticSignal>> = {
    doors: read("sem-doors"),
    stairs: read("sem-stairs"),
    chairs: read("sem-chairs"),
    path: read("sem-path"),
  };
  return { type: "semantic", signals };
}

async function start(): Promise<void> {
  const baseUrl = el<HTMLInputElement>("server-url").value.replace(/\/$/, "");
  const configText = el<HTMLTextAreaElement>("config").value;
  let config: unknown;
  try {
    config = JSON.parse(configText);
  } catch (e) {
    vm = { ...vm, lastError: `config is not valid JSON: ${e}` };
    redraw();
    return;
  }
  client = new TeachClient({
    baseUrl,
    socketFactory: (url) => new WebSocket(url) as unknown as never,
    onMessage: onServerMessage,
    onStatus: (s) => {
      vm = { ...vm, connection: s };
      redraw();
    },
    onBadMessage: (detail) => {
      vm = { ...vm, lastError: detail };
      redraw();
    },
  });
  try {
    const hello = await client.startSession(config);
    vm = applyServerMessage(initialViewModel(), hello);
    client.connect();
  } catch (e) {
    vm = { ...vm, lastError: String(e) };
  }
  redraw();
}

el<HTMLButtonElement>("start").addEventListener("click", () => void start());
el<HTMLButtonElement>("pause").addEventListener("click", () => {
  paused = !paused;
  el<HTMLButtonElement>("pause").textContent = paused ? "resume" : "pause";
  redraw();
});
el<HTMLButtonElement>("export").addEventListener("click", () => client?.requestExport());
el<HTMLButtonElement>("skip").addEventListener("click", () => submitGesture({ type: "skip" }));
el<HTMLButtonElement>("prefer-chosen").addEventListener("click", () =>
  submitGesture({ type: "preferChosen" }),
);
el<HTMLButtonElement>("prefer-alt").addEventListener("click", () =>
  submitGesture({ type: "preferAlternative" }),
);
el<HTMLButtonElement>("semantic-send").addEventListener("click", () =>
  submitGesture(semanticGesture()),
);
mapCanvas.addEventListener("click", (ev) => {
  const rect = mapCanvas.getBoundingClientRect();
  const index = pickCandidate(
    transform,
    vm.candidates,
    ev.clientX - rect.left,
    ev.clientY - rect.top,
  );
  if (index !== null) submitGesture({ type: "clickCandidate", index });
});

redraw();
