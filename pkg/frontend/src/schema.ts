/** Client-side mirror of the server's record schema rules, so the UI never
 * submits a decision the server would reject on shape grounds. */

import type { DialogueRecord, TurnRecord } from "./api.js";

export interface TurnEdit {
  speaker: "User" | "AI";
  text: string;
  strategy: string | null; // full strategy name for AI turns
}

export interface EditIssue {
  /** Turn index the problem sits at, or null for record-level problems. */
  index: number | null;
  message: string;
}

export function turnsFromRecord(record: DialogueRecord): TurnEdit[] {
  return record.content.map((turn: TurnRecord) => {
    if ("User" in turn) {
      return { speaker: "User" as const, text: turn["User"] ?? "", strategy: null };
    }
    return {
      speaker: "AI" as const,
      text: turn["AI"] ?? "",
      strategy: turn["AI Strategy"] ?? null,
    };
  });
}

export function recordWithTurns(base: DialogueRecord, turns: TurnEdit[]): DialogueRecord {
  const content: TurnRecord[] = turns.map((turn) =>
    turn.speaker === "User"
      ? ({ User: turn.text } as TurnRecord)
      : ({ "AI Strategy": turn.strategy ?? "", AI: turn.text } as TurnRecord),
  );
  return { scene: base.scene, description: base.description, content, meta: base.meta };
}

export function turnsEqual(a: TurnEdit[], b: TurnEdit[]): boolean {
  if (a.length !== b.length) return false;
  return a.every((turn, i) => {
    const other = b[i]!;
    return (
      turn.speaker === other.speaker &&
      turn.text === other.text &&
      turn.strategy === other.strategy
    );
  });
}

/** Same rules the service enforces on a record's shape: non-empty content,
 * User speaks first, at least two turns, no empty texts, every assistant
 * turn labeled with a registered strategy. */
export function validateTurns(turns: TurnEdit[], strategyNames: Set<string>): EditIssue[] {
  const issues: EditIssue[] = [];
  if (turns.length === 0) {
    issues.push({ index: null, message: "dialogue has no turns" });
    return issues;
  }
  if (turns.length < 2) {
    issues.push({ index: null, message: "dialogue needs at least 2 turns" });
  }
  if (turns[0]!.speaker !== "User") {
    issues.push({ index: 0, message: "first turn must come from the User" });
  }
  turns.forEach((turn, i) => {
    if (!turn.text.trim()) {
      issues.push({ index: i, message: "turn text is empty" });
    }
    if (turn.speaker === "AI") {
      if (!turn.strategy) {
        issues.push({ index: i, message: "assistant turn needs a strategy" });
      } else if (!strategyNames.has(turn.strategy)) {
        issues.push({ index: i, message: `unknown strategy "${turn.strategy}"` });
      }
    }
  });
  return issues;
}

/** Parse "content[3]" style locations from server validator issues. */
export function turnIndexOfLocation(location: string): number | null {
  const match = /^content\[(\d+)\]$/.exec(location);
  return match ? Number(match[1]) : null;
}
