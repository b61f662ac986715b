/**
 * View state for the review workspace, kept free of DOM and network
 * concerns so every transition is unit-testable. The state holds the
 * selected file's merged document as served, an optimistic edit layer,
 * the staged (pending) rerun config, and the flag cursor.
 */

import type { MergedDoc, ScoreDoc, WirePhrase } from "./api.js";

/** 0.7115 -> "71%" */
export function formatConfidence(confidence: number): string {
  return `${Math.round(confidence * 100)}%`;
}

/** 0.2333 -> "23.3%"; null -> em dash placeholder. */
export function formatRate(rate: number | null): string {
  if (rate === null) return "—";
  return `${(rate * 100).toFixed(1)}%`;
}

const PALETTE = [
  "#2563eb", "#d97706", "#059669", "#dc2626", "#7c3aed", "#0891b2",
];

/** Stable color per speaker id: sorted order indexes the palette. */
export function speakerColor(speaker: string | null, allSpeakers: string[]): string {
  if (speaker === null) return "#6b7280";
  const index = [...allSpeakers].sort().indexOf(speaker);
  return PALETTE[(index >= 0 ? index : 0) % PALETTE.length]!;
}

export interface PhraseView extends WirePhrase {
  /** Optimistic value applied locally but not yet acknowledged. */
  unsaved: boolean;
}

export interface PendingEdit {
  phraseId: number;
  field: "assigned_speaker" | "text";
  previous: { value: string | null; flagged: boolean };
}

export class ReviewState {
  fileId: string | null = null;
  doc: MergedDoc | null = null;
  score: ScoreDoc | null = null;
  error: string | null = null;
  sliderError: string | null = null;

  /** Edit cursor: index into phrases, -1 when nothing is selected. */
  cursor = -1;

  /** Pending rerun config; staged only, applied when rerun is pressed. */
  pendingWeight = 0;
  pendingRoles: Record<string, string> = {};

  /** True from pressing rerun until the new job lands. */
  rerunInFlight = false;

  private phraseViews: PhraseView[] = [];
  private nextToken = 1;
  private pending = new Map<number, PendingEdit>();

  loadDoc(doc: MergedDoc): void {
    this.doc = doc;
    this.error = null;
    this.sliderError = null;
    this.phraseViews = doc.phrases.map((p) => ({ ...p, unsaved: false }));
    this.pending.clear();
    // Staged config resets to what the server actually used.
    this.pendingWeight = doc.config.llm_weight;
    this.pendingRoles = { ...doc.config.roles };
    if (this.cursor >= this.phraseViews.length) this.cursor = -1;
  }

  loadScore(score: ScoreDoc | null): void {
    this.score = score;
  }

  setError(message: string): void {
    this.error = message;
  }

  get phrases(): readonly PhraseView[] {
    return this.phraseViews;
  }

  get speakers(): string[] {
    const roles = this.doc ? Object.keys(this.doc.config.roles) : [];
    if (roles.length > 0) return roles.sort();
    const seen = new Set<string>();
    for (const p of this.phraseViews) {
      for (const s of Object.keys(p.distribution)) seen.add(s);
    }
    return [...seen].sort();
  }

  get flaggedCount(): number {
    return this.phraseViews.filter((p) => p.flagged).length;
  }

  // -- flag navigation ------------------------------------------------

  /** Move the cursor to the next flagged phrase, wrapping around. */
  nextFlag(): number {
    return this.seekFlag(1);
  }

  prevFlag(): number {
    return this.seekFlag(-1);
  }

  private seekFlag(step: 1 | -1): number {
    const n = this.phraseViews.length;
    if (n === 0) return this.cursor;
    for (let offset = 1; offset <= n; offset++) {
      const index = (((this.cursor + step * offset) % n) + n) % n;
      if (this.phraseViews[index]!.flagged) {
        this.cursor = index;
        return index;
      }
    }
    return this.cursor; // no flags anywhere
  }

  select(index: number): void {
    if (index >= -1 && index < this.phraseViews.length) this.cursor = index;
  }

  // -- pending config ---------------------------------------------------

  setPendingWeight(weight: number): void {
    this.pendingWeight = weight;
    this.sliderError = null;
  }

  setPendingRole(speaker: string, label: string): void {
    this.pendingRoles = { ...this.pendingRoles, [speaker]: label };
  }

  /** Staged changes exist that a rerun has not applied yet. */
  configDirty(): boolean {
    if (!this.doc) return false;
    if (this.pendingWeight !== this.doc.config.llm_weight) return true;
    const applied = this.doc.config.roles;
    const keys = new Set([...Object.keys(applied), ...Object.keys(this.pendingRoles)]);
    for (const key of keys) {
      if (applied[key] !== this.pendingRoles[key]) return true;
    }
    return false;
  }

  canRerun(): boolean {
    return this.doc !== null && !this.rerunInFlight;
  }

  // -- optimistic edits -------------------------------------------------

  /**
   * Apply an edit locally before the server answers. Returns a token;
   * `ackEdit` keeps the change (and clears the row's flag), while
   * `rollbackEdit` restores the previous value after a 409/404.
   */
  applyOptimistic(
    phraseId: number,
    field: "assigned_speaker" | "text",
    value: string,
  ): number | null {
    const view = this.phraseViews.find((p) => p.id === phraseId);
    if (!view) return null;
    const token = this.nextToken++;
    const previous =
      field === "assigned_speaker"
        ? { value: view.assigned_speaker, flagged: view.flagged }
        : { value: view.text, flagged: view.flagged };
    this.pending.set(token, { phraseId, field, previous });
    if (field === "assigned_speaker") view.assigned_speaker = value;
    else view.text = value;
    view.unsaved = true;
    return token;
  }

  /** Server accepted: the row is reviewed, so its flag clears. */
  ackEdit(token: number): void {
    const entry = this.pending.get(token);
    if (!entry) return;
    this.pending.delete(token);
    const view = this.phraseViews.find((p) => p.id === entry.phraseId);
    if (!view) return;
    if (!this.hasPendingFor(entry.phraseId)) view.unsaved = false;
    view.flagged = false;
  }

  rollbackEdit(token: number): void {
    const entry = this.pending.get(token);
    if (!entry) return;
    this.pending.delete(token);
    const view = this.phraseViews.find((p) => p.id === entry.phraseId);
    if (!view) return;
    if (entry.field === "assigned_speaker") view.assigned_speaker = entry.previous.value;
    else view.text = entry.previous.value ?? "";
    view.flagged = entry.previous.flagged;
    if (!this.hasPendingFor(entry.phraseId)) view.unsaved = false;
  }

  private hasPendingFor(phraseId: number): boolean {
    for (const entry of this.pending.values()) {
      if (entry.phraseId === phraseId) return true;
    }
    return false;
  }

  /**
   * Keyboard shortcut helper: the next speaker id after the current
   * assignment, cycling through the file's speakers in sorted order.
   */
  cycleSpeaker(phraseId: number): string | null {
    const speakers = this.speakers;
    if (speakers.length === 0) return null;
    const view = this.phraseViews.find((p) => p.id === phraseId);
    if (!view) return null;
    const current = view.assigned_speaker;
    const index = current === null ? -1 : speakers.indexOf(current);
    return speakers[(index + 1) % speakers.length]!;
  }
}
