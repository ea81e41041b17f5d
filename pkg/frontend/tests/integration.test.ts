/** Live-service annotation loop.
 *
 * Spawns the real HTTP service, creates a session whose consistent forms
 * split into exactly three equivalence classes, and plays the annotator
 * through the actual DOM: read the suggested table, click the medal of the
 * Finland row, submit, repeat.  The session must resolve within three
 * annotations and the on-screen surviving-class counter must equal the
 * service's count at every step.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { AnnotatorApp, submitAndAdvance } from "../src/ui.js";

const PORT = 18300 + Math.floor(Math.random() * 1500);
const BASE = `http://127.0.0.1:${PORT}`;

const SERVICE = `
import sys
import uvicorn
from denotable.service import create_app

uvicorn.run(
    create_app(data_dir=sys.argv[1]),
    host="127.0.0.1",
    port=int(sys.argv[2]),
    log_level="warning",
)
`;

const SESSION = {
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
};

let proc: ChildProcess;
let dataDir: string;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/sessions/does-not-exist`);
      if (response.status === 404) return;
    } catch {
      // not listening yet
    }
    await sleep(250);
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "annotator-it-"));
  proc = spawn("python3", ["-c", SERVICE, dataDir, String(PORT)], {
    stdio: ["ignore", "inherit", "inherit"],
  });
  await waitForService();
});

afterAll(() => {
  proc?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

describe("annotation loop against a live service", () => {
  it("resolves a 3-class session in at most 3 annotations", async () => {
    const client = new Api(BASE);
    const created = await client.createSession(SESSION);
    expect(created.id).toMatch(/^[0-9a-f]{12}$/);

    let view = await client.getSession(created.id);
    const deadline = Date.now() + 60_000;
    while (view.state === "searching" && Date.now() < deadline) {
      await sleep(250);
      view = await client.getSession(created.id);
    }
    expect(view.error).toBeNull();
    expect(view.state).toBe("awaiting-annotation");
    expect(view.z_size).toBe(17);
    expect(view.initial).toBe(3);

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new AnnotatorApp(root, client, created.id);
    await app.refresh();

    async function expectCounterMatchesService(): Promise<number> {
      const direct = await client.getSession(created.id);
      expect(app.progress.dataset.surviving).toBe(String(direct.surviving));
      expect(app.progress.dataset.annotated).toBe(String(direct.annotated));
      return direct.surviving;
    }

    let annotations = 0;
    while ((await expectCounterMatchesService()) > 1) {
      expect(annotations).toBeLessThan(3);
      const rows = Array.from(app.worldBox.querySelectorAll("tbody tr"));
      expect(rows.length).toBe(3);
      const finland = rows.find(
        (row) => row.children[1].textContent === "Finland",
      );
      expect(finland).toBeDefined();
      (finland!.children[2] as HTMLElement).click();
      expect(app.input.value.length).toBeGreaterThan(0);
      await submitAndAdvance(app);
      expect(app.inlineError.hidden).toBe(true);
      annotations += 1;
    }

    expect(annotations).toBeLessThanOrEqual(3);
    const final = await client.getSession(created.id);
    expect(final.state).toBe("resolved");
    expect(final.surviving).toBe(1);
    expect(app.progress.dataset.surviving).toBe("1");
    expect(app.banner.hidden).toBe(false);
    expect(app.banner.className).toContain("banner-success");

    const result = await client.result(created.id);
    expect(result.classes).toHaveLength(1);
    expect(result.classes[0].representative).toContain("Venue");
    const survivors = app.resultBox.querySelectorAll("li");
    expect(survivors).toHaveLength(1);
    expect(survivors[0].textContent).toContain("R[Medal]");
  });

  it("stays on the same session after a page reload", async () => {
    const client = new Api(BASE);
    const created = await client.createSession(SESSION);
    let view = await client.getSession(created.id);
    const deadline = Date.now() + 60_000;
    while (view.state === "searching" && Date.now() < deadline) {
      await sleep(250);
      view = await client.getSession(created.id);
    }
    const first = new AnnotatorApp(document.createElement("div"), client, created.id);
    await first.refresh();
    const before = first.progress.dataset.surviving;

    // a fresh app over the same id rebuilds the identical view from the service
    const second = new AnnotatorApp(document.createElement("div"), client, created.id);
    await second.refresh();
    expect(second.progress.dataset.surviving).toBe(before);
    expect(second.question.textContent).toBe(SESSION.question);
    expect(second.worldBox.querySelector("table")).not.toBeNull();
  });
});
