/**
 * Client state container.
 *
 * Invariants enforced here rather than in the DOM layer:
 *  - a chart snapshot is one atomic (version, series) bundle, so the plot and
 *    the version badge can never mix model versions;
 *  - a feedback draft must span more than `delta` rows before it may be
 *    submitted (mirrors the service's 422 rule);
 *  - a stale-version rejection flips the store into a retry prompt that keeps
 *    the draft, refetches, and lets the operator confirm against the new
 *    version.
 *
 * All numbers displayed come from the service; nothing here recomputes
 * residual math (display decimation lives in decimate.ts).
 */

import { ApiClient, StaleVersionError } from "./api.js";
import type {
  ModelResponse,
  ResidualKind,
  ScoresResponse,
  Verdict,
} from "./types.js";

export interface ChartSnapshot {
  version: number;
  scores: ScoresResponse;
}

export interface FeedbackDraft {
  start: number;
  end: number;
  verdict: Verdict;
  zeta: number;
  note: string;
}

export interface ViewState {
  model: ModelResponse | null;
  chart: ChartSnapshot | null;
  visible: { from: number; to: number };
  smoothing: number;
  selectedWindow: number | null;
  toggles: Record<ResidualKind, boolean>;
  draft: FeedbackDraft | null;
  confirming: boolean;
  retryPrompt: string | null;
  banner: string | null;
  busy: boolean;
}

export type Listener = (state: ViewState) => void;

export function validateDraft(
  draft: { start: number; end: number; verdict: Verdict; zeta?: number },
  delta: number,
  frameLength: number,
): string | null {
  if (!Number.isInteger(draft.start) || !Number.isInteger(draft.end)) {
    return "window bounds must be integers";
  }
  if (draft.start < 0 || draft.end > frameLength) {
    return `window must lie inside [0, ${frameLength})`;
  }
  if (draft.end - draft.start <= delta) {
    return `window must span more than delta = ${delta} rows`;
  }
  if (draft.verdict === "anomalous") {
    const zeta = draft.zeta ?? NaN;
    if (!(zeta > 0 && zeta < 1)) {
      return "anomalous feedback needs zeta strictly between 0 and 1";
    }
  }
  return null;
}

export class Store {
  state: ViewState = {
    model: null,
    chart: null,
    visible: { from: 0, to: 0 },
    smoothing: 1,
    selectedWindow: null,
    toggles: { r_trans: true, r_bound: true, r_conf: true },
    draft: null,
    confirming: false,
    retryPrompt: null,
    banner: null,
    busy: false,
  };

  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /** Initial load: model card plus the full-range chart. */
  async load(): Promise<void> {
    this.patch({ busy: true, banner: null });
    try {
      const model = await this.api.getModel();
      const visible = { from: 0, to: model.frame_length };
      const scores = await this.api.getScores(
        visible.from,
        visible.to,
        this.state.smoothing,
      );
      this.patch({
        model,
        chart: { version: scores.version, scores },
        visible,
        busy: false,
      });
    } catch (error) {
      this.patch({ busy: false, banner: describe(error) });
    }
  }

  /** Refetch the chart for the current range under the active version. */
  async refresh(): Promise<void> {
    const { visible, smoothing } = this.state;
    this.patch({ busy: true });
    try {
      const [model, scores] = await Promise.all([
        this.api.getModel(),
        this.api.getScores(visible.from, visible.to, smoothing),
      ]);
      this.patch({
        model,
        chart: { version: scores.version, scores },
        busy: false,
        banner: null,
      });
    } catch (error) {
      this.patch({ busy: false, banner: describe(error) });
    }
  }

  async setRange(from: number, to: number): Promise<void> {
    this.patch({ visible: { from, to } });
    await this.refresh();
  }

  async setSmoothing(smoothing: number): Promise<void> {
    this.patch({ smoothing });
    await this.refresh();
  }

  /** Pure client-side filter; no refetch. */
  toggleResidual(kind: ResidualKind): void {
    this.patch({
      toggles: { ...this.state.toggles, [kind]: !this.state.toggles[kind] },
    });
  }

  selectWindow(start: number | null): void {
    this.patch({ selectedWindow: start });
  }

  beginDraft(start: number, end: number): void {
    this.patch({
      draft: { start, end, verdict: "normal", zeta: 0.99, note: "" },
      confirming: false,
      retryPrompt: null,
    });
  }

  updateDraft(partial: Partial<FeedbackDraft>): void {
    if (!this.state.draft) return;
    this.patch({ draft: { ...this.state.draft, ...partial } });
  }

  draftError(): string | null {
    const { draft, model } = this.state;
    if (!draft || !model) return "nothing to submit";
    return validateDraft(draft, model.hyper.delta, model.frame_length);
  }

  /** First submit step: show the exact bounds and verdict for confirmation. */
  requestConfirmation(): void {
    if (this.draftError() === null) {
      this.patch({ confirming: true });
    } else {
      this.patch({ banner: this.draftError() });
    }
  }

  cancelDraft(): void {
    this.patch({ draft: null, confirming: false, retryPrompt: null });
  }

  /**
   * Confirmed submit. On a stale version the draft is kept, the chart and
   * model are refetched, and the operator is prompted to retry against the
   * new version.
   */
  async submitDraft(): Promise<void> {
    const { draft, model } = this.state;
    if (!draft || !model) return;
    const problem = this.draftError();
    if (problem !== null) {
      this.patch({ banner: problem, confirming: false });
      return;
    }
    this.patch({ busy: true });
    try {
      await this.api.postFeedback({
        window: [draft.start, draft.end],
        verdict: draft.verdict,
        version: model.version,
        zeta: draft.verdict === "anomalous" ? draft.zeta : undefined,
        note: draft.note,
      });
      this.patch({ draft: null, confirming: false, retryPrompt: null });
      await this.refresh();
    } catch (error) {
      if (error instanceof StaleVersionError) {
        await this.refresh();
        this.patch({
          busy: false,
          confirming: false,
          retryPrompt:
            `the model moved to version ${this.state.model?.version}; ` +
            "review the refreshed chart and retry or cancel",
        });
      } else {
        this.patch({ busy: false, confirming: false, banner: describe(error) });
      }
    }
  }

  async rollback(version: number): Promise<void> {
    this.patch({ busy: true });
    try {
      await this.api.postRollback(version);
      await this.refresh();
    } catch (error) {
      this.patch({ busy: false, banner: describe(error) });
    }
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? `${error.name}: ${error.message}` : String(error);
}
