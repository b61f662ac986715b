/**
 * DOM rendering for the review workspace. Pure functions of the view
 * state: each call rebuilds the workspace subtree, so everything on
 * screen is reconstructable from the last fetched documents.
 */

import { ReviewState, formatConfidence, formatRate, speakerColor } from "./state.js";

export interface Handlers {
  onRetry(): void;
  onRerun(): void;
  onWeightInput(weight: number): void;
  onSelect(index: number): void;
  onCycleSpeaker(phraseId: number): void;
  onNextFlag(): void;
  onPrevFlag(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderErrorBanner(doc: Document, state: ReviewState, handlers: Handlers): HTMLElement {
  const banner = el(doc, "div", "error-banner");
  banner.appendChild(el(doc, "span", "error-message", state.error ?? ""));
  const retry = el(doc, "button", "retry", "Retry");
  retry.addEventListener("click", () => handlers.onRetry());
  banner.appendChild(retry);
  return banner;
}

function renderControls(doc: Document, state: ReviewState, handlers: Handlers): HTMLElement {
  const controls = el(doc, "div", "controls");

  const label = el(doc, "label", "weight-label", "LLM weight ");
  const value = el(doc, "span", "weight-value", state.pendingWeight.toFixed(2));
  const slider = el(doc, "input", "weight-slider") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.05";
  slider.value = String(state.pendingWeight);
  slider.addEventListener("input", () => handlers.onWeightInput(Number(slider.value)));
  label.appendChild(slider);
  label.appendChild(value);
  controls.appendChild(label);

  if (state.sliderError) {
    controls.appendChild(el(doc, "span", "slider-error", state.sliderError));
  }
  if (state.configDirty()) {
    controls.appendChild(el(doc, "span", "config-dirty", "unapplied changes"));
  }

  const rerun = el(doc, "button", "rerun", state.rerunInFlight ? "Rerunning…" : "Rerun");
  rerun.disabled = !state.canRerun();
  rerun.addEventListener("click", () => handlers.onRerun());
  controls.appendChild(rerun);

  const prev = el(doc, "button", "prev-flag", "← flag");
  prev.addEventListener("click", () => handlers.onPrevFlag());
  const next = el(doc, "button", "next-flag", "flag →");
  next.addEventListener("click", () => handlers.onNextFlag());
  controls.appendChild(prev);
  controls.appendChild(next);
  return controls;
}

function renderHeader(doc: Document, state: ReviewState): HTMLElement {
  const header = el(doc, "header", "file-header");
  header.appendChild(el(doc, "h2", "file-title", state.fileId ?? "no file"));
  header.appendChild(el(doc, "span", "flag-counter", String(state.flaggedCount)));
  const mislabel = state.score ? state.score.mislabel_rate : null;
  const wer = state.score ? state.score.wer : null;
  header.appendChild(el(doc, "span", "mislabel-rate", formatRate(mislabel)));
  header.appendChild(el(doc, "span", "wer", formatRate(wer)));
  return header;
}

function renderPhraseList(doc: Document, state: ReviewState, handlers: Handlers): HTMLElement {
  const list = el(doc, "ol", "phrase-list");
  const speakers = state.speakers;
  const roles = state.doc?.config.roles ?? {};
  state.phrases.forEach((phrase, index) => {
    const classes = ["phrase"];
    if (phrase.flagged) classes.push("flagged");
    if (index === state.cursor) classes.push("selected");
    if (phrase.unsaved) classes.push("unsaved");
    const row = el(doc, "li", classes.join(" "));
    row.dataset["phraseId"] = String(phrase.id);
    row.tabIndex = 0;
    row.addEventListener("click", () => handlers.onSelect(index));
    row.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "s") handlers.onCycleSpeaker(phrase.id);
    });

    const speaker = el(
      doc,
      "span",
      "speaker",
      phrase.assigned_speaker === null
        ? "UNKNOWN"
        : roles[phrase.assigned_speaker] ?? phrase.assigned_speaker,
    );
    speaker.style.setProperty("color", speakerColor(phrase.assigned_speaker, speakers));
    row.appendChild(speaker);
    row.appendChild(el(doc, "span", "badge", formatConfidence(phrase.confidence)));
    row.appendChild(el(doc, "span", "text", phrase.text));
    list.appendChild(row);
  });
  return list;
}

export function renderApp(container: HTMLElement, state: ReviewState, handlers: Handlers): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const root = el(doc, "div", "workspace");

  if (state.error !== null) {
    root.appendChild(renderErrorBanner(doc, state, handlers));
  }
  root.appendChild(renderHeader(doc, state));
  root.appendChild(renderControls(doc, state, handlers));

  if (state.doc === null || state.phrases.length === 0) {
    root.appendChild(el(doc, "div", "empty-state", "No phrases to review."));
  } else {
    root.appendChild(renderPhraseList(doc, state, handlers));
  }
  container.appendChild(root);
}
