/** Application wiring: store, lanes canvas, inspect panel, feedback dialog. */

import { ApiClient } from "./api.js";
import { renderLanes } from "./lanes.js";
import { confirmationText, renderInspectPanel, renderTimeline } from "./panel.js";
import { Store } from "./state.js";
import { RESIDUAL_KINDS } from "./types.js";

const store = new Store(new ApiClient(""));

const badge = el("version-badge");
const banner = el("banner");
const canvas = el("lanes") as HTMLCanvasElement;
const inspect = el("inspect");
const timeline = el("timeline");
const draftBox = el("draft");

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

store.subscribe((state) => {
  badge.textContent = state.chart ? `model v${state.chart.version}` : "loading";
  badge.classList.toggle("busy", state.busy);

  banner.textContent = state.retryPrompt ?? state.banner ?? "";
  banner.className = state.retryPrompt ? "banner retry" : state.banner ? "banner error" : "banner";

  if (state.chart) {
    renderLanes(canvas, state.chart.scores, state.toggles, state.selectedWindow);
  }
  if (state.model) {
    renderTimeline(timeline, state.model, (version) => void store.rollback(version));
  }
  renderDraft(state);
});

function renderDraft(state: typeof store.state): void {
  draftBox.innerHTML = "";
  if (!state.draft) return;
  const { draft } = state;
  const info = document.createElement("p");
  info.textContent = `feedback draft: rows [${draft.start}, ${draft.end})`;
  draftBox.appendChild(info);

  const verdict = document.createElement("select");
  for (const option of ["normal", "anomalous"]) {
    const opt = document.createElement("option");
    opt.value = option;
    opt.textContent = option;
    opt.selected = draft.verdict === option;
    verdict.appendChild(opt);
  }
  verdict.addEventListener("change", () =>
    store.updateDraft({ verdict: verdict.value as "normal" | "anomalous" }),
  );
  draftBox.appendChild(verdict);

  if (draft.verdict === "anomalous") {
    const zeta = document.createElement("input");
    zeta.type = "number";
    zeta.step = "0.001";
    zeta.min = "0.001";
    zeta.max = "0.999";
    zeta.value = String(draft.zeta);
    zeta.addEventListener("change", () => store.updateDraft({ zeta: Number(zeta.value) }));
    draftBox.appendChild(zeta);
  }

  const note = document.createElement("input");
  note.type = "text";
  note.placeholder = "note";
  note.value = draft.note;
  note.addEventListener("change", () => store.updateDraft({ note: note.value }));
  draftBox.appendChild(note);

  const problem = store.draftError();
  if (problem) {
    const warning = document.createElement("p");
    warning.className = "hint error";
    warning.textContent = problem;
    draftBox.appendChild(warning);
  }

  const submit = document.createElement("button");
  submit.textContent = state.retryPrompt ? "retry against new version" : "submit";
  submit.disabled = problem !== null || state.busy;
  submit.addEventListener("click", () => {
    const ok = window.confirm(
      confirmationText(draft.start, draft.end, draft.verdict,
        draft.verdict === "anomalous" ? draft.zeta : null),
    );
    if (ok) void store.submitDraft();
  });
  draftBox.appendChild(submit);

  const cancel = document.createElement("button");
  cancel.textContent = "cancel";
  cancel.addEventListener("click", () => store.cancelDraft());
  draftBox.appendChild(cancel);
}

for (const kind of RESIDUAL_KINDS) {
  const box = document.getElementById(`toggle-${kind}`) as HTMLInputElement | null;
  box?.addEventListener("change", () => store.toggleResidual(kind));
}

(el("smoothing") as HTMLSelectElement).addEventListener("change", (event) => {
  void store.setSmoothing(Number((event.target as HTMLSelectElement).value));
});

canvas.addEventListener("click", async (event) => {
  const state = store.state;
  if (!state.chart || !state.model) return;
  const rect = canvas.getBoundingClientRect();
  const frac = (event.clientX - rect.left - 56) / (rect.width - 64);
  if (frac < 0 || frac > 1) return;
  const { from, to } = state.chart.scores;
  const row = Math.round(from + frac * (to - from));
  const nPred = state.model.n_pred;
  const start = Math.max(0, Math.min(row, state.model.frame_length - nPred));
  store.selectWindow(start);
  try {
    const win = await new ApiClient("").getWindow(start);
    renderInspectPanel(inspect, win);
  } catch {
    // row may not align to a window start; ignore
  }
  if (event.shiftKey) {
    store.beginDraft(start, start + nPred);
  }
});

el("new-draft").addEventListener("click", () => {
  const state = store.state;
  if (!state.model) return;
  const start = state.selectedWindow ?? 0;
  store.beginDraft(start, start + state.model.n_pred);
});

void store.load();
