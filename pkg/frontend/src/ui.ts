/** DOM composition for the annotation loop.
 *
 * The app is stateless beyond the session id: every view change refetches
 * from the service, so a browser refresh lands back in the same place.  No
 * denotations are computed here; the UI renders exactly what the service
 * returns and the progress counter mirrors the service's surviving-class
 * count verbatim.
 */

import { Api, ApiError, Progress, SessionResult, WorldPayload } from "./api.js";
import { prettyOrCanon } from "./pretty.js";

export const ANSWER_DELIMITER = ";";

/** Split a delimited answer string into trimmed non-empty values. */
export function splitAnswers(text: string): string[] {
  return text
    .split(ANSWER_DELIMITER)
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}

export interface WorldView {
  table: HTMLTableElement;
}

/** Render one world table; selectable cells call onPick with the cell text.
 *
 * A malformed payload (missing or ragged fields) renders an error banner in
 * place of the table and returns null instead of throwing.
 */
export function renderWorld(
  container: HTMLElement,
  payload: unknown,
  onPick: (text: string) => void,
): WorldView | null {
  container.textContent = "";
  const world = payload as WorldPayload | null;
  const bad =
    !world ||
    !Array.isArray(world.columns) ||
    !Array.isArray(world.rows) ||
    world.columns.some((c) => typeof c !== "string") ||
    world.rows.some(
      (r) => !Array.isArray(r) || r.length !== world.columns.length,
    );
  if (bad) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = "Malformed world payload; reload or pick another world.";
    container.appendChild(banner);
    return null;
  }
  const table = document.createElement("table");
  table.className = "world-table";
  const thead = table.createTHead();
  const headRow = thead.insertRow();
  for (const name of world.columns) {
    const th = document.createElement("th");
    th.textContent = name;
    headRow.appendChild(th);
  }
  const tbody = table.createTBody();
  for (const row of world.rows) {
    const tr = tbody.insertRow();
    for (const cell of row) {
      const td = tr.insertCell();
      td.textContent = cell;
      td.className = "cell";
      td.addEventListener("click", () => onPick(cell));
    }
  }
  container.appendChild(table);
  return { table };
}

function el(tag: string, className: string, parent: HTMLElement): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  parent.appendChild(node);
  return node;
}

export class AnnotatorApp {
  readonly question: HTMLElement;
  readonly progress: HTMLElement;
  readonly banner: HTMLElement;
  readonly errorBanner: HTMLElement;
  readonly worldBox: HTMLElement;
  readonly answerBox: HTMLElement;
  readonly chips: HTMLElement;
  readonly input: HTMLInputElement;
  readonly submitButton: HTMLButtonElement;
  readonly inlineError: HTMLElement;
  readonly resultBox: HTMLElement;
  world: WorldPayload | null = null;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly client: Api,
    readonly sessionId: string,
  ) {
    root.textContent = "";
    this.question = el("h2", "question", root);
    this.progress = el("div", "progress", root);
    this.banner = el("div", "banner", root);
    this.errorBanner = el("div", "error-banner", root);
    this.worldBox = el("div", "world", root);
    this.answerBox = el("div", "answer-box", root);
    this.chips = el("div", "chips", this.answerBox);
    this.input = el("input", "answer-input", this.answerBox) as HTMLInputElement;
    this.input.placeholder = `answer${ANSWER_DELIMITER} another answer`;
    this.submitButton = el("button", "submit", this.answerBox) as HTMLButtonElement;
    this.submitButton.textContent = "Submit annotation";
    this.inlineError = el("div", "inline-error", this.answerBox);
    this.resultBox = el("div", "result", root);
    this.banner.hidden = true;
    this.errorBanner.hidden = true;
    this.inlineError.hidden = true;
    this.answerBox.hidden = true;
    this.input.addEventListener("input", () => this.renderChips());
    this.submitButton.addEventListener("click", () => {
      void submitAndAdvance(this);
    });
  }

  renderChips(): void {
    this.chips.textContent = "";
    for (const value of splitAnswers(this.input.value)) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.textContent = value;
      this.chips.appendChild(chip);
    }
  }

  renderProgress(p: Progress): void {
    this.progress.textContent =
      `${p.surviving} of ${p.initial} classes surviving · ` +
      `${p.annotated} of ${p.worlds_total} worlds annotated`;
    this.progress.dataset.surviving = String(p.surviving);
    this.progress.dataset.initial = String(p.initial);
    this.progress.dataset.annotated = String(p.annotated);
    this.progress.dataset.state = p.state;
  }

  pickCell(text: string): void {
    const current = this.input.value.trim();
    this.input.value = current
      ? `${current}${ANSWER_DELIMITER} ${text}`
      : text;
    this.renderChips();
  }

  private setBanner(kind: string, text: string): void {
    this.banner.hidden = false;
    this.banner.className = `banner banner-${kind}`;
    this.banner.textContent = text;
  }

  private renderResult(result: SessionResult): void {
    this.resultBox.textContent = "";
    if (!result.classes.length) return;
    const list = document.createElement("ul");
    list.className = "class-list";
    for (const cls of result.classes) {
      const item = document.createElement("li");
      item.textContent = `${prettyOrCanon(cls.representative)} (${cls.members} forms)`;
      item.title = cls.representative;
      list.appendChild(item);
    }
    this.resultBox.appendChild(list);
  }

  private schedulePoll(): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = setTimeout(() => {
      this.pollTimer = null;
      void this.refresh();
    }, 700);
  }

  /** Stop background polling; call when the view is torn down. */
  dispose(): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = null;
  }

  /** Refetch the session and render whatever state it is in. */
  async refresh(): Promise<void> {
    this.errorBanner.hidden = true;
    let view;
    try {
      view = await this.client.getSession(this.sessionId);
    } catch (e) {
      this.showError(e);
      return;
    }
    this.question.textContent = view.question;
    this.renderProgress(view);
    this.resultBox.textContent = "";
    if (view.error) {
      this.answerBox.hidden = true;
      this.setBanner("error", `Search failed: ${view.error}`);
      return;
    }
    if (view.state === "searching") {
      this.answerBox.hidden = true;
      this.setBanner("info", "Searching for consistent forms...");
      this.schedulePoll();
      return;
    }
    if (view.state === "awaiting-annotation") {
      await this.loadNextWorld();
      return;
    }
    this.answerBox.hidden = true;
    this.worldBox.textContent = "";
    if (view.state === "resolved") {
      this.setBanner("success", "Resolved: one equivalence class remains.");
    } else if (view.state === "all-pruned") {
      this.setBanner(
        "warn",
        "All classes were pruned; check the annotations or raise the tolerance.",
      );
    } else {
      this.setBanner("info", "No separating worlds remain; classes below.");
    }
    try {
      this.renderResult(await this.client.result(this.sessionId));
    } catch (e) {
      this.showError(e);
    }
  }

  private async loadNextWorld(): Promise<void> {
    let next;
    try {
      next = await this.client.nextWorld(this.sessionId, "greedy");
    } catch (e) {
      this.showError(e);
      return;
    }
    this.renderProgress(next);
    if (next.done || !next.world) {
      await this.refresh();
      return;
    }
    this.banner.hidden = true;
    this.world = next.world;
    this.answerBox.hidden = false;
    renderWorld(this.worldBox, next.world, (text) => this.pickCell(text));
  }

  showError(e: unknown): void {
    const message =
      e instanceof ApiError ? `${e.title}: ${e.detail}` : String(e);
    this.errorBanner.textContent = "";
    this.errorBanner.hidden = false;
    this.errorBanner.append(`${message} `);
    const retry = document.createElement("button");
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      void this.refresh();
    });
    this.errorBanner.appendChild(retry);
  }
}

/** Submit the typed answer for the current world, then advance the view.
 *
 * Rejected answers (422) and network failures surface inline and keep the
 * input so the annotator can correct and retry without retyping.
 */
export async function submitAndAdvance(app: AnnotatorApp): Promise<void> {
  app.inlineError.hidden = true;
  const values = splitAnswers(app.input.value);
  if (!values.length) {
    app.inlineError.hidden = false;
    app.inlineError.textContent = "Enter at least one answer.";
    return;
  }
  if (!app.world) {
    app.inlineError.hidden = false;
    app.inlineError.textContent = "No world is awaiting annotation.";
    return;
  }
  try {
    await app.client.annotate(app.sessionId, app.world.index, values);
  } catch (e) {
    app.inlineError.hidden = false;
    app.inlineError.textContent =
      e instanceof ApiError
        ? e.status === 422
          ? `Answer rejected: ${e.detail || e.title}`
          : `${e.title}${e.detail ? `: ${e.detail}` : ""}; input kept, retry when ready.`
        : String(e);
    return;
  }
  app.world = null;
  app.input.value = "";
  app.renderChips();
  await app.refresh();
}
