/** Entry point: hash routing between the landing form and a session view.
 *
 * The session id lives in the URL hash (#/s/<id>), so reloading the page
 * or sharing the link reproduces the same view from service state alone.
 */

import { Api, ApiError } from "./api.js";
import { AnnotatorApp } from "./ui.js";

const client = new Api("");

function renderLanding(root: HTMLElement): void {
  root.textContent = "";
  const title = document.createElement("h2");
  title.textContent = "Annotation sessions";
  root.appendChild(title);

  const openRow = document.createElement("div");
  openRow.className = "landing-row";
  const idInput = document.createElement("input");
  idInput.placeholder = "session id";
  const openButton = document.createElement("button");
  openButton.textContent = "Open";
  openButton.addEventListener("click", () => {
    const id = idInput.value.trim();
    if (id) location.hash = `#/s/${id}`;
  });
  openRow.append(idInput, openButton);
  root.appendChild(openRow);

  const hint = document.createElement("p");
  hint.textContent = "Or create a session from a JSON payload (question, answer, table, config):";
  root.appendChild(hint);

  const textarea = document.createElement("textarea");
  textarea.className = "create-json";
  textarea.rows = 10;
  textarea.value = JSON.stringify(
    {
      question: "what medal did finland get in 2002?",
      answer: ["gold"],
      table: {
        columns: ["Year", "Venue", "Medal"],
        rows: [
          ["2001", "Norway", "bronze"],
          ["2003", "Sweden", "silver"],
          ["2002", "Finland", "gold"],
        ],
      },
      config: { s_max: 3, k: 12, l: 3 },
    },
    null,
    2,
  );
  root.appendChild(textarea);

  const error = document.createElement("div");
  error.className = "error-banner";
  error.hidden = true;

  const createButton = document.createElement("button");
  createButton.textContent = "Create session";
  createButton.addEventListener("click", () => {
    error.hidden = true;
    void (async () => {
      let payload;
      try {
        payload = JSON.parse(textarea.value);
      } catch {
        error.hidden = false;
        error.textContent = "Payload is not valid JSON.";
        return;
      }
      try {
        const created = await client.createSession(payload);
        location.hash = `#/s/${created.id}`;
      } catch (e) {
        error.hidden = false;
        error.textContent =
          e instanceof ApiError ? `${e.title}: ${e.detail}` : String(e);
      }
    })();
  });
  root.appendChild(createButton);
  root.appendChild(error);
}

let current: AnnotatorApp | null = null;

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  current?.dispose();
  current = null;
  const match = location.hash.match(/^#\/s\/([A-Za-z0-9-]+)/);
  if (match) {
    current = new AnnotatorApp(root, client, match[1]);
    void current.refresh();
  } else {
    renderLanding(root);
  }
}

window.addEventListener("hashchange", boot);
boot();
