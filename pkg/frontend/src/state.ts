/** Queue state: server items plus local edit buffers and selection. */

import type { Issue, QueueItem, StrategyInfo } from "./api.js";
import type { DialogueRecord } from "./api.js";
import { turnsEqual, turnsFromRecord, type TurnEdit } from "./schema.js";

export interface QueueItemView {
  id: string;
  scenario: string;
  issues: Issue[];
  duplicateScore: number;
  serverRecord: DialogueRecord;
  turns: TurnEdit[];
  dirty: boolean;
  inFlight: boolean;
}

export function viewFromItem(item: QueueItem): QueueItemView {
  return {
    id: item.id,
    scenario: item.scenario,
    issues: item.issues,
    duplicateScore: item.duplicate_score,
    serverRecord: item.dialogue,
    turns: turnsFromRecord(item.dialogue),
    dirty: false,
    inFlight: false,
  };
}

export class QueueStore {
  items: QueueItemView[] = [];
  strategies: StrategyInfo[] = [];
  selectedId: string | null = null;
  private listeners: Array<() => void> = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  strategyNames(): Set<string> {
    return new Set(this.strategies.map((s) => s.name));
  }

  setStrategies(strategies: StrategyInfo[]): void {
    this.strategies = strategies;
    this.notify();
  }

  setItems(items: QueueItem[]): void {
    const edits = new Map(this.items.map((view) => [view.id, view]));
    this.items = items.map((item) => {
      const existing = edits.get(item.id);
      if (existing && existing.dirty) return existing; // keep local edits across reloads
      return viewFromItem(item);
    });
    if (this.selectedId === null || !this.items.some((v) => v.id === this.selectedId)) {
      this.selectedId = this.items.length ? this.items[0]!.id : null;
    }
    this.notify();
  }

  view(id: string): QueueItemView | undefined {
    return this.items.find((v) => v.id === id);
  }

  selected(): QueueItemView | null {
    return this.selectedId ? this.view(this.selectedId) ?? null : null;
  }

  select(id: string): void {
    if (this.view(id)) {
      this.selectedId = id;
      this.notify();
    }
  }

  selectByOffset(delta: number): void {
    if (!this.items.length) return;
    const index = this.items.findIndex((v) => v.id === this.selectedId);
    const next = Math.min(this.items.length - 1, Math.max(0, index + delta));
    this.selectedId = this.items[next]!.id;
    this.notify();
  }

  private recomputeDirty(view: QueueItemView): void {
    view.dirty = !turnsEqual(view.turns, turnsFromRecord(view.serverRecord));
  }

  editTurnText(id: string, index: number, text: string): void {
    const view = this.view(id);
    const turn = view?.turns[index];
    if (!view || !turn) return;
    turn.text = text;
    this.recomputeDirty(view);
    this.notify();
  }

  editTurnStrategy(id: string, index: number, strategy: string): void {
    const view = this.view(id);
    const turn = view?.turns[index];
    if (!view || !turn || turn.speaker !== "AI") return;
    turn.strategy = strategy;
    this.recomputeDirty(view);
    this.notify();
  }

  removeTurn(id: string, index: number): void {
    const view = this.view(id);
    if (!view || index < 0 || index >= view.turns.length) return;
    view.turns.splice(index, 1);
    this.recomputeDirty(view);
    this.notify();
  }

  resetEdits(id: string): void {
    const view = this.view(id);
    if (!view) return;
    view.turns = turnsFromRecord(view.serverRecord);
    view.dirty = false;
    this.notify();
  }

  /** Claim the single in-flight decision slot for an item. */
  beginDecision(id: string): boolean {
    const view = this.view(id);
    if (!view || view.inFlight) return false;
    view.inFlight = true;
    this.notify();
    return true;
  }

  /** Optimistically drop an item; returns it (with its slot) so submit
   * failures can put it back where it was. */
  take(id: string): { view: QueueItemView; index: number } | undefined {
    const index = this.items.findIndex((v) => v.id === id);
    if (index < 0) return undefined;
    const [view] = this.items.splice(index, 1);
    if (this.selectedId === id) {
      const fallback = this.items[Math.min(index, this.items.length - 1)];
      this.selectedId = fallback ? fallback.id : null;
    }
    this.notify();
    return { view: view!, index };
  }

  reinstate(view: QueueItemView, index: number, issues?: Issue[]): void {
    view.inFlight = false;
    if (issues) view.issues = issues;
    this.items.splice(Math.min(index, this.items.length), 0, view);
    this.selectedId = view.id;
    this.notify();
  }
}
