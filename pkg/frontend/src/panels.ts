// DOM wiring: profile upload/editor column, method and postprocess panels,
// analyze readout, error banner. All state lives in the AppStore.

import { Method, PostOp, Side } from "./api.js";
import { isFilled } from "./bitmask.js";
import { AppState, AppStore, SIDES, diagnoseTriplanar } from "./state.js";
import { MeshViewer } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function mountApp(store: AppStore): void {
  const viewer = new MeshViewer(el<HTMLCanvasElement>("viewport"));

  for (const side of SIDES) {
    const input = el<HTMLInputElement>(`upload-${side}`);
    input.addEventListener("change", async () => {
      const file = input.files?.[0];
      if (file) {
        const ok = await store.uploadScan(side, file, file.name);
        if (!ok) input.value = ""; // allow retry after a failed scan
      }
    });
    el<HTMLCanvasElement>(`editor-${side}`).addEventListener("click", (e) => {
      onEditorClick(store, side, e);
    });
    el<HTMLButtonElement>(`commit-${side}`).addEventListener("click", () => {
      void store.commitProfile(side);
    });
  }

  el<HTMLSelectElement>("method").addEventListener("change", () => renderMethodPanel(store.state));
  el<HTMLButtonElement>("reconstruct").addEventListener("click", () => {
    void store.reconstruct(...methodRequest(store.state));
  });
  el<HTMLButtonElement>("apply-post").addEventListener("click", () => {
    const [op, params] = postRequest();
    void store.applyPost(op, params);
  });
  el<HTMLInputElement>("extrude-depth").addEventListener("input", () => {
    el("extrude-depth-value").textContent = el<HTMLInputElement>("extrude-depth").value;
  });
  el<HTMLButtonElement>("download").addEventListener("click", async () => {
    const data = await store.downloadObj();
    if (!data) return;
    const blob = new Blob([data as BlobPart], { type: "model/obj" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `brickforge-stage${store.state.currentStage}.obj`;
    a.click();
    URL.revokeObjectURL(a.href);
  });

  store.subscribe((state) => {
    renderProfiles(store, state);
    renderMethodPanel(state);
    renderStages(store, state);
    renderAnalysis(state);
    renderError(state);
    viewer.setMesh(state.mesh);
    el<HTMLButtonElement>("download").disabled = state.currentStage == null || state.busy;
    document.body.classList.toggle("busy", state.busy);
  });
}

function onEditorClick(store: AppStore, side: Side, e: MouseEvent) {
  const slot = store.state.profiles[side];
  if (!slot) return;
  const canvas = e.currentTarget as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  const cell = cellSize(canvas, slot.mask.cols, slot.mask.rows);
  const col = Math.floor((e.clientX - rect.left) * (canvas.width / rect.width) / cell);
  const row = Math.floor((e.clientY - rect.top) * (canvas.height / rect.height) / cell);
  if (row >= 0 && row < slot.mask.rows && col >= 0 && col < slot.mask.cols) {
    store.editCell(side, row, col);
  }
}

function cellSize(canvas: HTMLCanvasElement, cols: number, rows: number): number {
  return Math.max(4, Math.floor(Math.min(canvas.width / cols, canvas.height / rows)));
}

function renderProfiles(store: AppStore, state: AppState) {
  for (const side of SIDES) {
    const slot = state.profiles[side];
    const canvas = el<HTMLCanvasElement>(`editor-${side}`);
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const status = el(`status-${side}`);
    const commit = el<HTMLButtonElement>(`commit-${side}`);
    if (!slot) {
      status.textContent = "no profile";
      commit.disabled = true;
      continue;
    }
    const { mask } = slot;
    const cell = cellSize(canvas, mask.cols, mask.rows);
    for (let r = 0; r < mask.rows; r++) {
      for (let c = 0; c < mask.cols; c++) {
        ctx.fillStyle = isFilled(mask, r, c) ? "#e8b34b" : "#1d2430";
        ctx.fillRect(c * cell, r * cell, cell - 1, cell - 1);
      }
    }
    const warn = slot.warnings.length ? ` — ${slot.warnings.join("; ")}` : "";
    status.textContent = `${mask.cols}×${mask.rows}${slot.dirty ? " (edited)" : ""}${warn}`;
    status.classList.toggle("warning", slot.warnings.length > 0);
    commit.disabled = !slot.dirty || state.busy;
  }
}

function methodRequest(state: AppState): [Method, Record<string, unknown>] {
  const method = el<HTMLSelectElement>("method").value as Method;
  if (method === "extrude") {
    return [
      "extrude",
      {
        side: el<HTMLSelectElement>("extrude-side").value,
        depth_cells: Number(el<HTMLInputElement>("extrude-depth").value),
      },
    ];
  }
  if (method === "lathe") {
    return [
      "lathe",
      {
        side: el<HTMLSelectElement>("lathe-side").value,
        axis: el<HTMLSelectElement>("lathe-axis").value,
        segments: Number(el<HTMLInputElement>("lathe-segments").value),
      },
    ];
  }
  const sides = SIDES.filter(
    (s) => state.profiles[s] && el<HTMLInputElement>(`tri-${s}`).checked,
  );
  return ["triplanar", { sides }];
}

function postRequest(): [PostOp, Record<string, unknown>] {
  const op = el<HTMLSelectElement>("post-op").value as PostOp;
  if (op === "smooth") return ["smooth", { iterations: Number(el<HTMLInputElement>("smooth-iterations").value) }];
  if (op === "lattice") return ["lattice", { thickness_mm: Number(el<HTMLInputElement>("lattice-thickness").value) }];
  if (op === "scale") return ["scale", { factor: Number(el<HTMLInputElement>("scale-factor").value) }];
  return [
    "merge",
    {
      kind: el<HTMLSelectElement>("merge-kind").value,
      center: ["x", "y", "z"].map((axis) => Number(el<HTMLInputElement>(`merge-${axis}`).value)),
      scale: Number(el<HTMLInputElement>("merge-size").value),
    },
  ];
}

function renderMethodPanel(state: AppState) {
  const method = el<HTMLSelectElement>("method").value;
  for (const name of ["extrude", "lathe", "triplanar"]) {
    el(`panel-${name}`).hidden = name !== method;
  }
  for (const op of ["smooth", "lattice", "scale", "merge"]) {
    el(`panel-post-${op}`).hidden = op !== el<HTMLSelectElement>("post-op").value;
  }
  const diag = el("triplanar-diagnostics");
  const problems = diagnoseTriplanar(state.profiles);
  diag.textContent = problems.join("\n");
  diag.hidden = problems.length === 0;
  el<HTMLButtonElement>("reconstruct").disabled =
    state.busy || Object.keys(state.profiles).length === 0;
  el<HTMLButtonElement>("apply-post").disabled = state.busy || state.currentStage == null;
}

function renderStages(store: AppStore, state: AppState) {
  const list = el("stages");
  list.innerHTML = "";
  for (const stage of state.stages) {
    const item = document.createElement("li");
    item.textContent = `${stage.id}. ${stage.op}`;
    if (stage.warnings.length) {
      item.title = stage.warnings.join("\n");
      item.classList.add("warning");
    }
    item.classList.toggle("active", stage.id === state.currentStage);
    item.addEventListener("click", () => void store.selectStage(stage.id));
    list.appendChild(item);
  }
}

function renderAnalysis(state: AppState) {
  const box = el("analysis");
  if (!state.analysis) {
    box.textContent = "—";
    return;
  }
  const a = state.analysis.analyze;
  const b = state.analysis.balance;
  const lines = [
    `volume ${a.volume_mm3.toFixed(1)} mm³`,
    `area ${a.surface_area_mm2.toFixed(1)} mm²`,
    `watertight ${a.watertight ? "yes" : "NO"}`,
    `shells ${a.shell_count}`,
  ];
  if (b) {
    lines.push(`stable ${b.stable ? "yes" : "NO"} (margin ${b.margin_mm.toFixed(2)} mm)`);
  }
  if (state.analysis.warnings.length) {
    lines.push(...state.analysis.warnings);
  }
  box.textContent = lines.join("\n");
}

function renderError(state: AppState) {
  const banner = el("error");
  if (!state.error) {
    banner.hidden = true;
    return;
  }
  banner.hidden = false;
  banner.textContent = `${state.error.stage}: ${state.error.code}: ${state.error.message}`;
}
