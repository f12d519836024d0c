/**
 * DOM builders for the inspect panel, the feedback dialog and the version
 * timeline. Pure string/element construction; all numbers come from the
 * service responses.
 */

import type { ModelResponse, WindowResponse } from "./types.js";
import { RESIDUAL_KINDS } from "./types.js";

export function inspectSummary(window: WindowResponse, trainMaxConfGap = 1e-9): string {
  const dominant = window.dominant;
  if (dominant.value <= trainMaxConfGap) {
    return "no residual exceeds its training baseline in this window";
  }
  return (
    `something unusual on sensor ${dominant.sensor}: ` +
    `${dominant.residual} dominates at ${dominant.value.toPrecision(3)} ` +
    `(normalized against the training maximum)`
  );
}

export function renderInspectPanel(root: HTMLElement, win: WindowResponse): void {
  root.innerHTML = "";
  const heading = document.createElement("h3");
  heading.textContent = `window [${win.window_start}, ${win.window_start + win.n_pred}) · version ${win.version}`;
  root.appendChild(heading);

  const hint = document.createElement("p");
  hint.className = "hint";
  hint.textContent = inspectSummary(win);
  root.appendChild(hint);

  const table = document.createElement("table");
  const head = table.insertRow();
  head.insertCell().textContent = "sensor";
  for (const kind of RESIDUAL_KINDS) {
    head.insertCell().textContent = `${kind} (raw)`;
    head.insertCell().textContent = `${kind} (norm)`;
  }
  win.sensors.forEach((sensor, i) => {
    const row = table.insertRow();
    row.insertCell().textContent = sensor;
    for (const kind of RESIDUAL_KINDS) {
      row.insertCell().textContent = win[kind][i].toPrecision(3);
      row.insertCell().textContent = win.normalized[kind][i].toPrecision(3);
    }
    if (sensor === win.dominant.sensor) row.classList.add("dominant");
  });
  root.appendChild(table);

  const agg = document.createElement("p");
  agg.textContent = `aggregated score: ${win.aggregated.toPrecision(4)}`;
  root.appendChild(agg);
}

export function confirmationText(
  start: number,
  end: number,
  verdict: string,
  zeta: number | null,
): string {
  const zetaPart =
    verdict === "anomalous" ? ` with forgetting tolerance zeta = ${zeta}` : "";
  return (
    `Relabel rows [${start}, ${end}) as ${verdict.toUpperCase()}${zetaPart}. ` +
    (verdict === "anomalous"
      ? "This forgets matching representatives and cannot be merged back; "
      : "This widens the normality sets; ") +
    "a rollback snapshot is kept. Proceed?"
  );
}

export function renderTimeline(
  root: HTMLElement,
  model: ModelResponse,
  onRollback: (version: number) => void,
): void {
  root.innerHTML = "";
  const title = document.createElement("h3");
  title.textContent = `versions (active: ${model.version})`;
  root.appendChild(title);
  const list = document.createElement("ul");
  for (const version of model.versions) {
    const item = document.createElement("li");
    const record = model.journal.find(
      (r) => r.type === "feedback" && r.result_version === version,
    );
    const label = record?.event
      ? `v${version} · ${record.event.verdict} on [${record.event.window[0]}, ${record.event.window[1]})`
      : `v${version} · initial fit`;
    item.textContent = label + (version === model.version ? " (active)" : " ");
    if (version !== model.version) {
      const button = document.createElement("button");
      button.textContent = "roll back";
      button.addEventListener("click", () => onRollback(version));
      item.appendChild(button);
    }
    list.appendChild(item);
  }
  root.appendChild(list);
}
