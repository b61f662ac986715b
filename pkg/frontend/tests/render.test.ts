// @vitest-environment happy-dom
import { beforeEach, describe, expect, it, vi } from "vitest";

import type { MergedDoc, ScoreDoc, WirePhrase } from "../src/api.js";
import { renderApp, type Handlers } from "../src/render.js";
import { ReviewState } from "../src/state.js";

function phrase(id: number, over: Partial<WirePhrase> = {}): WirePhrase {
  return {
    id,
    start: id * 2,
    end: id * 2 + 1.5,
    text: `phrase ${id}`,
    assigned_speaker: "spk0",
    distribution: { spk0: 0.75, spk1: 0.25 },
    overlap_ratios: { spk0: 0.6, spk1: 0.2 },
    llm_choice: null,
    confidence: 0.75,
    flagged: false,
    ...over,
  };
}

function doc(phrases: WirePhrase[]): MergedDoc {
  return {
    source_id: "visit001",
    job_id: "j0000000000000000",
    state: "DONE",
    flagged_count: phrases.filter((p) => p.flagged).length,
    config: {
      llm_weight: 0.45,
      roles: { spk0: "Doctor", spk1: "Patient" },
      flag_threshold: 0.6,
      llm_enabled: true,
    },
    phrases,
    edits: [],
  };
}

function handlerStubs(): Handlers {
  return {
    onRetry: vi.fn(),
    onRerun: vi.fn(),
    onWeightInput: vi.fn(),
    onSelect: vi.fn(),
    onCycleSpeaker: vi.fn(),
    onNextFlag: vi.fn(),
    onPrevFlag: vi.fn(),
  };
}

let container: HTMLElement;
let state: ReviewState;
let handlers: Handlers;

beforeEach(() => {
  document.body.innerHTML = "";
  container = document.createElement("div");
  document.body.appendChild(container);
  state = new ReviewState();
  handlers = handlerStubs();
});

function render(): void {
  renderApp(container, state, handlers);
}

describe("phrase list", () => {
  it("highlights every flagged phrase and counts them", () => {
    const phrases = Array.from({ length: 50 }, (_, i) =>
      phrase(i, { flagged: [7, 21, 40].includes(i) }),
    );
    state.loadDoc(doc(phrases));
    render();

    expect(container.querySelectorAll("li.phrase")).toHaveLength(50);
    const flagged = container.querySelectorAll("li.phrase.flagged");
    expect(flagged).toHaveLength(3);
    expect([...flagged].map((row) => (row as HTMLElement).dataset["phraseId"])).toEqual(
      ["7", "21", "40"],
    );
    expect(container.querySelector(".flag-counter")?.textContent).toBe("3");
  });

  it("renders confidence badges as whole percents", () => {
    state.loadDoc(doc([phrase(0, { confidence: 0.7115 }), phrase(1, { confidence: 1 })]));
    render();
    const badges = [...container.querySelectorAll(".badge")].map((b) => b.textContent);
    expect(badges).toEqual(["71%", "100%"]);
  });

  it("shows role labels, raw ids, and UNKNOWN as appropriate", () => {
    state.loadDoc(
      doc([
        phrase(0),
        phrase(1, { assigned_speaker: "spk9" }),
        phrase(2, { assigned_speaker: null }),
      ]),
    );
    render();
    const speakers = [...container.querySelectorAll(".speaker")].map((s) => s.textContent);
    expect(speakers).toEqual(["Doctor", "spk9", "UNKNOWN"]);
  });

  it("marks the selected row", () => {
    state.loadDoc(doc([phrase(0), phrase(1), phrase(2)]));
    state.select(2);
    render();
    const selected = container.querySelectorAll("li.phrase.selected");
    expect(selected).toHaveLength(1);
    expect((selected[0] as HTMLElement).dataset["phraseId"]).toBe("2");
  });

  it("marks rows with unacknowledged edits", () => {
    state.loadDoc(doc([phrase(0), phrase(1)]));
    state.applyOptimistic(1, "assigned_speaker", "spk1");
    render();
    const unsaved = container.querySelectorAll("li.phrase.unsaved");
    expect(unsaved).toHaveLength(1);
    expect((unsaved[0] as HTMLElement).dataset["phraseId"]).toBe("1");
  });

  it("selects a row on click", () => {
    state.loadDoc(doc([phrase(0), phrase(1)]));
    render();
    const rows = container.querySelectorAll("li.phrase");
    (rows[1] as HTMLElement).click();
    expect(handlers.onSelect).toHaveBeenCalledWith(1);
  });

  it("cycles the speaker on the s key only", () => {
    state.loadDoc(doc([phrase(3)]));
    render();
    const row = container.querySelector("li.phrase")!;
    row.dispatchEvent(new KeyboardEvent("keydown", { key: "s" }));
    expect(handlers.onCycleSpeaker).toHaveBeenCalledWith(3);
    row.dispatchEvent(new KeyboardEvent("keydown", { key: "x" }));
    expect(handlers.onCycleSpeaker).toHaveBeenCalledTimes(1);
  });
});

describe("empty states", () => {
  it("shows the empty-state message before any document loads", () => {
    render();
    expect(container.querySelector(".empty-state")?.textContent).toBe(
      "No phrases to review.",
    );
    expect(container.querySelector(".flag-counter")?.textContent).toBe("0");
    expect(container.querySelector(".file-title")?.textContent).toBe("no file");
  });

  it("shows the empty-state message for a document with no phrases", () => {
    state.loadDoc(doc([]));
    render();
    expect(container.querySelector(".empty-state")).not.toBeNull();
    expect(container.querySelector(".phrase-list")).toBeNull();
  });
});

describe("error banner", () => {
  it("is absent when there is no error", () => {
    state.loadDoc(doc([phrase(0)]));
    render();
    expect(container.querySelector(".error-banner")).toBeNull();
  });

  it("shows the message and retries on click", () => {
    state.setError("service unreachable: connect ECONNREFUSED");
    render();
    expect(container.querySelector(".error-message")?.textContent).toBe(
      "service unreachable: connect ECONNREFUSED",
    );
    (container.querySelector("button.retry") as HTMLElement).click();
    expect(handlers.onRetry).toHaveBeenCalledTimes(1);
  });
});

describe("controls", () => {
  it("disables rerun until a document is loaded", () => {
    render();
    expect((container.querySelector("button.rerun") as HTMLButtonElement).disabled).toBe(
      true,
    );
    state.loadDoc(doc([phrase(0)]));
    render();
    const button = container.querySelector("button.rerun") as HTMLButtonElement;
    expect(button.disabled).toBe(false);
    expect(button.textContent).toBe("Rerun");
  });

  it("disables rerun and changes the label while a rerun is in flight", () => {
    state.loadDoc(doc([phrase(0)]));
    state.rerunInFlight = true;
    render();
    const button = container.querySelector("button.rerun") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    expect(button.textContent).toBe("Rerunning…");
  });

  it("clicking rerun invokes the handler", () => {
    state.loadDoc(doc([phrase(0)]));
    render();
    (container.querySelector("button.rerun") as HTMLElement).click();
    expect(handlers.onRerun).toHaveBeenCalledTimes(1);
  });

  it("reflects the staged weight and reports slider input", () => {
    state.loadDoc(doc([phrase(0)]));
    render();
    const slider = container.querySelector("input.weight-slider") as HTMLInputElement;
    expect(slider.value).toBe("0.45");
    slider.value = "0";
    slider.dispatchEvent(new Event("input"));
    expect(handlers.onWeightInput).toHaveBeenCalledWith(0);
  });

  it("flags staged-but-unapplied config changes", () => {
    state.loadDoc(doc([phrase(0)]));
    render();
    expect(container.querySelector(".config-dirty")).toBeNull();
    state.setPendingWeight(0);
    render();
    expect(container.querySelector(".config-dirty")?.textContent).toBe(
      "unapplied changes",
    );
  });

  it("surfaces a slider error inline", () => {
    state.loadDoc(doc([phrase(0)]));
    state.sliderError = "weight 1.5 outside [0, 1]";
    render();
    expect(container.querySelector(".slider-error")?.textContent).toBe(
      "weight 1.5 outside [0, 1]",
    );
  });

  it("wires the flag navigation buttons", () => {
    state.loadDoc(doc([phrase(0, { flagged: true })]));
    render();
    (container.querySelector("button.next-flag") as HTMLElement).click();
    expect(handlers.onNextFlag).toHaveBeenCalledTimes(1);
    (container.querySelector("button.prev-flag") as HTMLElement).click();
    expect(handlers.onPrevFlag).toHaveBeenCalledTimes(1);
  });
});

describe("header", () => {
  it("shows score rates when a score is loaded", () => {
    const score: ScoreDoc = {
      source_id: "visit001",
      domain: "general",
      wer: 0.3,
      label_score: 0.875,
      mislabel_rate: 0.125,
      correct: 7,
      missed: 1,
      hallucinated: 1,
      replaced: 1,
    };
    state.loadDoc(doc([phrase(0)]));
    state.loadScore(score);
    render();
    expect(container.querySelector(".mislabel-rate")?.textContent).toBe("12.5%");
    expect(container.querySelector(".wer")?.textContent).toBe("30.0%");
  });

  it("shows placeholders without a score", () => {
    state.loadDoc(doc([phrase(0)]));
    render();
    expect(container.querySelector(".mislabel-rate")?.textContent).toBe("—");
    expect(container.querySelector(".wer")?.textContent).toBe("—");
  });
});
