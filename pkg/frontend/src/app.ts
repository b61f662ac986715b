/**
 * Controller: wires the API client, view state, and renderer, and owns
 * the rerun poll loop. The browser entry point at the bottom mounts it
 * on #app when the script runs in a page.
 */

import { Api, ApiError } from "./api.js";
import { renderApp, type Handlers } from "./render.js";
import { ReviewState } from "./state.js";

const POLL_INTERVAL_MS = 400;

export class Controller {
  readonly state = new ReviewState();
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly api: Api,
    private readonly container: HTMLElement,
  ) {}

  private readonly handlers: Handlers = {
    onRetry: () => void this.openFile(this.state.fileId ?? ""),
    onRerun: () => void this.rerun(),
    onWeightInput: (weight) => {
      this.state.setPendingWeight(weight);
      this.render();
    },
    onSelect: (index) => {
      this.state.select(index);
      this.render();
    },
    onCycleSpeaker: (phraseId) => void this.cycleSpeaker(phraseId),
    onNextFlag: () => {
      this.state.nextFlag();
      this.render();
    },
    onPrevFlag: () => {
      this.state.prevFlag();
      this.render();
    },
  };

  render(): void {
    renderApp(this.container, this.state, this.handlers);
  }

  async openFile(fileId: string): Promise<void> {
    this.state.fileId = fileId;
    try {
      this.state.loadDoc(await this.api.getMerged(fileId));
      await this.refreshScore();
    } catch (err) {
      this.state.setError(err instanceof Error ? err.message : String(err));
    }
    this.render();
  }

  async refreshScore(): Promise<void> {
    if (!this.state.fileId) return;
    try {
      this.state.loadScore(await this.api.getScore(this.state.fileId));
    } catch (err) {
      // A file without a reference script has no score; that's not an error.
      if (err instanceof ApiError && err.status === 404) this.state.loadScore(null);
      else throw err;
    }
  }

  /** POST the staged config, then poll until the new job is DONE. */
  async rerun(): Promise<void> {
    const fileId = this.state.fileId;
    if (!fileId || !this.state.canRerun()) return;
    this.state.rerunInFlight = true;
    this.render();
    try {
      const response = await this.api.postRerun(fileId, {
        weight: this.state.pendingWeight,
        roles: this.state.pendingRoles,
      });
      await this.pollUntilDone(response.job_id);
      await this.openFile(fileId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.state.sliderError = err.detail;
      } else {
        this.state.setError(err instanceof Error ? err.message : String(err));
      }
    } finally {
      this.state.rerunInFlight = false;
      this.render();
    }
  }

  private async pollUntilDone(jobId: string): Promise<void> {
    for (;;) {
      const entries = await this.api.listFiles();
      const entry = entries.find((e) => e.job_id === jobId);
      if (entry && entry.state === "DONE") return;
      if (entry && entry.state === "FAILED") {
        throw new ApiError(500, entry.error ?? "rerun failed");
      }
      await new Promise((resolve) => {
        this.pollTimer = setTimeout(resolve, POLL_INTERVAL_MS);
      });
    }
  }

  /** Optimistic relabel with rollback when the server refuses. */
  async editLabel(phraseId: number, speaker: string): Promise<void> {
    const fileId = this.state.fileId;
    if (!fileId) return;
    const token = this.state.applyOptimistic(phraseId, "assigned_speaker", speaker);
    if (token === null) return;
    this.render();
    try {
      await this.api.postEdit(fileId, {
        phrase_id: phraseId,
        field: "assigned_speaker",
        new_value: speaker,
      });
      this.state.ackEdit(token);
      await this.refreshScore();
    } catch (err) {
      this.state.rollbackEdit(token);
      if (err instanceof ApiError && (err.status === 409 || err.status === 404)) {
        this.state.setError(`edit rejected: ${err.detail}`);
      } else {
        this.state.setError(err instanceof Error ? err.message : String(err));
      }
    }
    this.render();
  }

  async cycleSpeaker(phraseId: number): Promise<void> {
    const next = this.state.cycleSpeaker(phraseId);
    if (next !== null) await this.editLabel(phraseId, next);
  }

  dispose(): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
  }
}

async function boot(controller: Controller, api: Api): Promise<void> {
  const files = await api.listFiles();
  const first = files.find((f) => f.state === "DONE") ?? files[0];
  if (first) await controller.openFile(first.source_id);
}

function mount(): void {
  const container = document.getElementById("app");
  if (!container) return;
  const params = new URLSearchParams(window.location.search);
  const api = new Api(params.get("api") ?? "");
  const controller = new Controller(api, container);
  controller.render();
  void boot(controller, api).catch((err) => {
    controller.state.setError(err instanceof Error ? err.message : String(err));
    controller.render();
  });
}

// Browser-only bootstrap; tests import the classes directly.
declare global {
  interface Window {
    __diarfuseMounted?: boolean;
  }
}

if (typeof document !== "undefined" && typeof window !== "undefined" && !window.__diarfuseMounted) {
  if (document.getElementById("app")) {
    window.__diarfuseMounted = true;
    mount();
  }
}
