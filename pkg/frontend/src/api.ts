/** Typed client for the review service. The UI holds no authoritative state;
 * every mutation goes through these endpoints. */

export type TurnRecord = Record<string, string>;

export interface DialogueMeta {
  id: string;
  provenance: string;
  iteration: number;
}

export interface DialogueRecord {
  scene: string;
  description: string;
  content: TurnRecord[];
  meta?: DialogueMeta;
}

export interface Issue {
  code: string;
  severity: "Fatal" | "Correctable" | string;
  message: string;
  location: string;
}

export interface QueueItem {
  id: string;
  scenario: string;
  enqueued_seq: number;
  issues: Issue[];
  duplicate_score: number;
  dialogue: DialogueRecord;
}

export interface QueuePage {
  total: number;
  offset: number;
  items: QueueItem[];
}

export interface StrategyInfo {
  name: string;
  abbreviation: string;
  definition: string;
  example: string;
}

export interface Ratings {
  informativeness: number;
  understanding: number;
  helpfulness: number;
  consistency: number;
  coherence: number;
}

export type DecisionAction = "Approve" | "Reject" | "ApproveWithEdits";

export interface DecisionBody {
  action: DecisionAction;
  reviewer: string;
  edited?: DialogueRecord;
  reason?: string;
  ratings?: Ratings;
}

export interface DecisionResult {
  id: string;
  status: string;
}

export interface DialogueState {
  id: string;
  status: string;
  dialogue: DialogueRecord | null;
  decision: { action: string; reviewer: string } | null;
}

/** Non-2xx response; carries the status and decoded body for callers that
 * branch on 409/422. */
export class ApiError extends Error {
  constructor(
    public status: number,
    public body: { error?: string; issues?: Issue[] },
  ) {
    super(body.error ?? `HTTP ${status}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  let body: unknown = {};
  try {
    body = await response.json();
  } catch {
    body = {};
  }
  if (!response.ok) {
    throw new ApiError(response.status, body as { error?: string; issues?: Issue[] });
  }
  return body as T;
}

export class ReviewApi {
  constructor(private baseUrl = "") {}

  queue(limit?: number, scenario?: string): Promise<QueuePage> {
    const params = new URLSearchParams();
    if (limit !== undefined) params.set("limit", String(limit));
    if (scenario) params.set("scenario", scenario);
    const qs = params.toString();
    return request(`${this.baseUrl}/queue${qs ? `?${qs}` : ""}`);
  }

  async strategies(): Promise<StrategyInfo[]> {
    const body = await request<{ strategies: StrategyInfo[] }>(`${this.baseUrl}/strategies`);
    return body.strategies;
  }

  decide(id: string, body: DecisionBody): Promise<DecisionResult> {
    return request(`${this.baseUrl}/dialogues/${encodeURIComponent(id)}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  dialogueState(id: string): Promise<DialogueState> {
    return request(`${this.baseUrl}/dialogues/${encodeURIComponent(id)}`);
  }

  stats(): Promise<Record<string, unknown>> {
    return request(`${this.baseUrl}/stats`);
  }
}
