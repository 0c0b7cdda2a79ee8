/** DOM rendering and the decide workflow.
 *
 * The queue pane lists pending items oldest-first with issue badges; the
 * editor pane shows the selected dialogue with editable turn texts and a
 * strategy dropdown per assistant turn (options are exactly the registered
 * strategies fetched from the service). Submits are optimistic: the card
 * leaves the list immediately, returns on 422 with the server's issues
 * pinned to the offending turns, and on 409 the item state is refreshed
 * from the server instead of retrying.
 */

import { ApiError, ReviewApi } from "./api.js";
import type { DecisionAction, Issue, Ratings } from "./api.js";
import { installHotkeys } from "./hotkeys.js";
import {
  recordWithTurns,
  turnIndexOfLocation,
  validateTurns,
  type EditIssue,
} from "./schema.js";
import { QueueStore, type QueueItemView } from "./state.js";

const RATING_DIMENSIONS = [
  "informativeness",
  "understanding",
  "helpfulness",
  "consistency",
  "coherence",
] as const;

export interface App {
  store: QueueStore;
  reload(): Promise<void>;
  submit(id: string, action: DecisionAction): Promise<void>;
  root: HTMLElement;
}

interface Notice {
  kind: "error" | "info";
  text: string;
}

export function createApp(root: HTMLElement, api: ReviewApi, reviewer = "reviewer"): App {
  const store = new QueueStore();
  let notice: Notice | null = null;
  let editIssues: EditIssue[] = [];
  let editIssuesFor: string | null = null;

  root.innerHTML = `
    <div class="banner hidden" data-role="banner">
      <span data-role="banner-text"></span>
      <button type="button" data-role="banner-retry">Retry</button>
    </div>
    <div class="layout">
      <div class="queue-pane">
        <h1>Review queue</h1>
        <div data-role="queue"></div>
      </div>
      <div class="editor-pane" data-role="editor"></div>
    </div>
  `;
  const bannerEl = root.querySelector<HTMLElement>("[data-role=banner]")!;
  const bannerText = root.querySelector<HTMLElement>("[data-role=banner-text]")!;
  const queueEl = root.querySelector<HTMLElement>("[data-role=queue]")!;
  const editorEl = root.querySelector<HTMLElement>("[data-role=editor]")!;

  function setNotice(next: Notice | null): void {
    notice = next;
    renderBanner();
  }

  function renderBanner(): void {
    bannerEl.classList.toggle("hidden", notice === null);
    bannerEl.classList.toggle("error", notice?.kind === "error");
    bannerText.textContent = notice?.text ?? "";
  }

  async function reload(): Promise<void> {
    try {
      const [strategies, page] = await Promise.all([api.strategies(), api.queue()]);
      store.setStrategies(strategies);
      store.setItems(page.items);
      if (notice?.kind === "error") setNotice(null);
    } catch (err) {
      // no silent retry loop: surface the failure and wait for the human
      setNotice({ kind: "error", text: `Cannot reach the review service: ${String(err)}` });
    }
  }

  function issueBadge(issue: Issue): HTMLElement {
    const badge = document.createElement("span");
    badge.className = issue.severity === "Fatal" ? "badge fatal" : "badge";
    badge.textContent = issue.code;
    badge.title = issue.message;
    return badge;
  }

  function renderQueue(): void {
    queueEl.textContent = "";
    if (!store.items.length) {
      const empty = document.createElement("div");
      empty.className = "queue-empty";
      empty.textContent = "Queue empty - nothing waiting for review.";
      queueEl.appendChild(empty);
      return;
    }
    for (const view of store.items) {
      const card = document.createElement("div");
      card.className = "queue-card";
      card.dataset["id"] = view.id;
      if (view.id === store.selectedId) card.classList.add("selected");
      if (view.dirty) card.classList.add("dirty");

      const scenario = document.createElement("div");
      scenario.className = "scenario";
      scenario.textContent = view.scenario;
      card.appendChild(scenario);

      const id = document.createElement("div");
      id.className = "dialogue-id";
      id.textContent = view.id;
      card.appendChild(id);

      const badges = document.createElement("div");
      for (const issue of view.issues) badges.appendChild(issueBadge(issue));
      card.appendChild(badges);

      card.addEventListener("click", () => store.select(view.id));
      queueEl.appendChild(card);
    }
  }

  function issuesAtTurn(view: QueueItemView, index: number): Issue[] {
    return view.issues.filter((issue) => turnIndexOfLocation(issue.location) === index);
  }

  function renderTurn(view: QueueItemView, index: number): HTMLElement {
    const turn = view.turns[index]!;
    const row = document.createElement("div");
    row.className = turn.speaker === "AI" ? "turn ai" : "turn";
    row.dataset["index"] = String(index);

    const speaker = document.createElement("div");
    speaker.className = "speaker";
    speaker.textContent = turn.speaker === "AI" ? "Assistant" : "User";
    row.appendChild(speaker);

    const text = document.createElement("textarea");
    text.value = turn.text;
    text.addEventListener("input", () => {
      store.editTurnText(view.id, index, text.value);
    });
    row.appendChild(text);

    const side = document.createElement("div");
    if (turn.speaker === "AI") {
      const select = document.createElement("select");
      select.dataset["role"] = "strategy";
      for (const strategy of store.strategies) {
        const option = document.createElement("option");
        option.value = strategy.name;
        option.textContent = `${strategy.name} (${strategy.abbreviation})`;
        if (strategy.name === turn.strategy) option.selected = true;
        select.appendChild(option);
      }
      if (turn.strategy && !store.strategyNames().has(turn.strategy)) {
        const option = document.createElement("option");
        option.value = turn.strategy;
        option.textContent = `${turn.strategy} (unregistered)`;
        option.selected = true;
        select.appendChild(option);
      }
      select.addEventListener("change", () => {
        store.editTurnStrategy(view.id, index, select.value);
      });
      side.appendChild(select);
    }
    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "remove-turn";
    remove.textContent = "remove turn";
    remove.addEventListener("click", () => store.removeTurn(view.id, index));
    side.appendChild(remove);
    row.appendChild(side);

    const inline = [
      ...issuesAtTurn(view, index),
      ...(editIssuesFor === view.id
        ? editIssues
            .filter((issue) => issue.index === index)
            .map((issue) => ({
              code: "edit",
              severity: "Correctable",
              message: issue.message,
              location: `content[${index}]`,
            }))
        : []),
    ];
    if (inline.length) {
      const holder = document.createElement("div");
      holder.className = "turn-issues";
      for (const issue of inline) holder.appendChild(issueBadge(issue));
      row.appendChild(holder);
    }
    return row;
  }

  function collectRatings(): Ratings | undefined {
    const include = editorEl.querySelector<HTMLInputElement>("[data-role=include-ratings]");
    if (!include?.checked) return undefined;
    const ratings: Record<string, number> = {};
    for (const dim of RATING_DIMENSIONS) {
      const select = editorEl.querySelector<HTMLSelectElement>(`[data-rating=${dim}]`);
      ratings[dim] = select ? Number(select.value) : 0;
    }
    return ratings as unknown as Ratings;
  }

  function renderEditor(): void {
    editorEl.textContent = "";
    const view = store.selected();
    if (!view) {
      const empty = document.createElement("div");
      empty.className = "queue-empty";
      empty.textContent = store.items.length
        ? "Select an item to review."
        : "Nothing to review right now.";
      editorEl.appendChild(empty);
      return;
    }

    const title = document.createElement("h2");
    title.textContent = view.scenario;
    editorEl.appendChild(title);

    const description = document.createElement("div");
    description.className = "description";
    description.textContent = view.serverRecord.description;
    editorEl.appendChild(description);

    const recordIssues = [
      ...view.issues.filter((issue) => turnIndexOfLocation(issue.location) === null),
      ...(editIssuesFor === view.id
        ? editIssues
            .filter((issue) => issue.index === null)
            .map((issue) => ({
              code: "edit",
              severity: "Correctable",
              message: issue.message,
              location: "record",
            }))
        : []),
    ];
    if (recordIssues.length) {
      const holder = document.createElement("div");
      holder.className = "edit-errors";
      holder.dataset["role"] = "record-issues";
      for (const issue of recordIssues) {
        const line = document.createElement("div");
        line.textContent = `${issue.code}: ${issue.message}`;
        holder.appendChild(line);
      }
      editorEl.appendChild(holder);
    }

    const turns = document.createElement("div");
    turns.dataset["role"] = "turns";
    view.turns.forEach((_, index) => turns.appendChild(renderTurn(view, index)));
    editorEl.appendChild(turns);

    const ratings = document.createElement("div");
    ratings.className = "ratings";
    const include = document.createElement("label");
    const includeBox = document.createElement("input");
    includeBox.type = "checkbox";
    includeBox.dataset["role"] = "include-ratings";
    include.appendChild(includeBox);
    include.appendChild(document.createTextNode(" attach quality ratings"));
    ratings.appendChild(include);
    for (const dim of RATING_DIMENSIONS) {
      const label = document.createElement("label");
      label.textContent = dim;
      const select = document.createElement("select");
      select.dataset["rating"] = dim;
      for (const value of [0, 1, 2, 3]) {
        const option = document.createElement("option");
        option.value = String(value);
        option.textContent = String(value);
        if (value === 2) option.selected = true;
        select.appendChild(option);
      }
      label.appendChild(select);
      ratings.appendChild(label);
    }
    editorEl.appendChild(ratings);

    const actions = document.createElement("div");
    actions.className = "actions";

    const approve = document.createElement("button");
    approve.type = "button";
    approve.className = "approve";
    approve.dataset["role"] = "approve";
    approve.textContent = view.dirty ? "Approve with edits" : "Approve";
    approve.disabled = view.inFlight;
    approve.addEventListener("click", () => {
      void submit(view.id, view.dirty ? "ApproveWithEdits" : "Approve");
    });
    actions.appendChild(approve);

    const reject = document.createElement("button");
    reject.type = "button";
    reject.className = "reject";
    reject.dataset["role"] = "reject";
    reject.textContent = "Reject";
    reject.disabled = view.inFlight;
    reject.addEventListener("click", () => {
      void submit(view.id, "Reject");
    });
    actions.appendChild(reject);

    if (view.dirty) {
      const reset = document.createElement("button");
      reset.type = "button";
      reset.dataset["role"] = "reset";
      reset.textContent = "Discard edits";
      reset.addEventListener("click", () => {
        if (editIssuesFor === view.id) {
          editIssues = [];
          editIssuesFor = null;
        }
        store.resetEdits(view.id);
      });
      actions.appendChild(reset);
    }

    const reason = document.createElement("input");
    reason.type = "text";
    reason.className = "reason";
    reason.placeholder = "rejection reason (optional)";
    reason.dataset["role"] = "reason";
    actions.appendChild(reason);

    const hint = document.createElement("div");
    hint.className = "hint";
    hint.textContent = "hotkeys: j/k select · a approve · x reject";
    actions.appendChild(hint);

    editorEl.appendChild(actions);
  }

  async function submit(id: string, action: DecisionAction): Promise<void> {
    const view = store.view(id);
    if (!view) return;

    // pre-validate edits with the same schema rules the server applies
    if (action !== "Reject" && view.dirty) {
      const problems = validateTurns(view.turns, store.strategyNames());
      if (problems.length) {
        editIssues = problems;
        editIssuesFor = id;
        render();
        return;
      }
    }
    if (editIssuesFor === id) {
      editIssues = [];
      editIssuesFor = null;
    }

    if (!store.beginDecision(id)) return; // one in-flight decision per item
    const reasonInput = editorEl.querySelector<HTMLInputElement>("[data-role=reason]");
    const ratings = collectRatings();
    const body = {
      action,
      reviewer,
      ...(action === "ApproveWithEdits"
        ? { edited: recordWithTurns(view.serverRecord, view.turns) }
        : {}),
      ...(reasonInput?.value ? { reason: reasonInput.value } : {}),
      ...(ratings ? { ratings } : {}),
    };

    const taken = store.take(id); // optimistic removal
    try {
      await api.decide(id, body);
      setNotice(null);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // decided elsewhere: reconcile with the server's view of the item
        try {
          const state = await api.dialogueState(id);
          setNotice({ kind: "info", text: `Already decided elsewhere (now ${state.status}).` });
        } catch {
          setNotice({ kind: "info", text: "Already decided elsewhere." });
        }
      } else if (err instanceof ApiError && err.status === 422 && taken) {
        store.reinstate(taken.view, taken.index, err.body.issues ?? taken.view.issues);
        setNotice({ kind: "error", text: `Rejected by validation: ${err.message}` });
      } else if (taken) {
        store.reinstate(taken.view, taken.index);
        setNotice({ kind: "error", text: `Decision failed: ${String(err)}` });
      }
    }
    render();
  }

  function render(): void {
    renderBanner();
    renderQueue();
    renderEditor();
  }

  store.onChange(render);
  root.querySelector<HTMLButtonElement>("[data-role=banner-retry]")!.addEventListener(
    "click", () => void reload(),
  );
  installHotkeys(root.ownerDocument, {
    next: () => store.selectByOffset(1),
    previous: () => store.selectByOffset(-1),
    approve: () => {
      const view = store.selected();
      if (view) void submit(view.id, view.dirty ? "ApproveWithEdits" : "Approve");
    },
    reject: () => {
      const view = store.selected();
      if (view) void submit(view.id, "Reject");
    },
  });

  render();
  return { store, reload, submit, root };
}
