import { afterEach, describe, expect, it, vi } from "vitest";

import type { Api, NextWorld, Progress, SessionView, WorldPayload } from "../src/api.js";
import { ApiError } from "../src/api.js";
import {
  AnnotatorApp,
  renderWorld,
  splitAnswers,
  submitAndAdvance,
} from "../src/ui.js";

const WORLD: WorldPayload = {
  index: 2,
  id: "w0002",
  columns: ["Year", "Venue", "Position", "Event"],
  rows: [
    ["2001", "Hungary", "2nd", "400m"],
    ["2002", "Finland", "1st", "400m"],
    ["2003", "Germany", "11th", "400m"],
    ["2004", "Thailand", "1st", "Relay"],
  ],
};

function progress(overrides: Partial<Progress> = {}): Progress {
  return {
    state: "awaiting-annotation",
    initial: 3,
    surviving: 3,
    annotated: 0,
    worlds_total: 12,
    ...overrides,
  };
}

function view(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "abc",
    question: "what medal did finland get in 2002?",
    answer: ["gold"],
    z_size: 17,
    annotations: {},
    error: null,
    ...progress(),
    ...overrides,
  };
}

function mockClient(overrides: Partial<Api> = {}): Api {
  return {
    base: "",
    createSession: vi.fn(),
    getSession: vi.fn().mockResolvedValue(view()),
    nextWorld: vi
      .fn()
      .mockResolvedValue({ ...progress(), world: WORLD } as NextWorld),
    annotate: vi.fn().mockResolvedValue(progress()),
    result: vi.fn().mockResolvedValue({ state: "resolved", all_pruned: false, classes: [] }),
    ...overrides,
  } as unknown as Api;
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

afterEach(() => {
  document.body.innerHTML = "";
});

describe("splitAnswers", () => {
  it("splits on the delimiter, trimming and dropping empties", () => {
    expect(splitAnswers("gold")).toEqual(["gold"]);
    expect(splitAnswers(" gold ;  silver;;")).toEqual(["gold", "silver"]);
    expect(splitAnswers("  ")).toEqual([]);
  });
});

describe("renderWorld", () => {
  it("echoes the table structure", () => {
    const root = mount();
    const rendered = renderWorld(root, WORLD, () => {});
    expect(rendered).not.toBeNull();
    expect(root.querySelectorAll("th")).toHaveLength(4);
    expect(root.querySelectorAll("td")).toHaveLength(16);
    expect(root.querySelectorAll("tbody tr")).toHaveLength(4);
  });

  it("reports cell text through onPick on click", () => {
    const root = mount();
    const picked: string[] = [];
    renderWorld(root, WORLD, (text) => picked.push(text));
    const cells = root.querySelectorAll("td");
    (cells[13] as HTMLElement).click();
    expect(picked).toEqual(["Thailand"]);
  });

  it("shows an error banner on a malformed payload without crashing", () => {
    const root = mount();
    const rendered = renderWorld(root, { index: 0, columns: ["A"] }, () => {});
    expect(rendered).toBeNull();
    expect(root.querySelector(".error-banner")).not.toBeNull();
    expect(root.querySelector("table")).toBeNull();
  });

  it("rejects ragged rows", () => {
    const payload = { ...WORLD, rows: [["2001", "Hungary"]] };
    const root = mount();
    expect(renderWorld(root, payload, () => {})).toBeNull();
    expect(root.querySelector(".error-banner")).not.toBeNull();
  });
});

describe("AnnotatorApp", () => {
  it("renders question, progress, and the suggested world", async () => {
    const client = mockClient();
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    expect(app.question.textContent).toContain("finland");
    expect(app.progress.textContent).toBe(
      "3 of 3 classes surviving · 0 of 12 worlds annotated",
    );
    expect(app.progress.dataset.surviving).toBe("3");
    expect(app.worldBox.querySelectorAll("td")).toHaveLength(16);
    expect(app.answerBox.hidden).toBe(false);
    expect(app.world?.index).toBe(2);
  });

  it("fills the answer input from cell clicks with a chip preview", async () => {
    const app = new AnnotatorApp(mount(), mockClient(), "abc");
    await app.refresh();
    const cells = app.worldBox.querySelectorAll("td");
    (cells[13] as HTMLElement).click();
    expect(app.input.value).toBe("Thailand");
    (cells[12] as HTMLElement).click();
    expect(app.input.value).toBe("Thailand; 2004");
    expect(app.chips.querySelectorAll(".chip")).toHaveLength(2);
    expect(app.chips.textContent).toBe("Thailand2004");
  });

  it("requires a non-empty answer before submitting", async () => {
    const client = mockClient();
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    app.input.value = " ; ";
    await submitAndAdvance(app);
    expect(app.inlineError.hidden).toBe(false);
    expect(client.annotate).not.toHaveBeenCalled();
  });

  it("surfaces a 422 inline and keeps the typed input", async () => {
    const client = mockClient({
      annotate: vi
        .fn()
        .mockRejectedValue(new ApiError(422, "unparseable answer", "answer must be non-empty strings")),
    });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    app.input.value = "gold";
    await submitAndAdvance(app);
    expect(app.inlineError.hidden).toBe(false);
    expect(app.inlineError.textContent).toContain("Answer rejected");
    expect(app.inlineError.textContent).toContain("non-empty");
    expect(app.input.value).toBe("gold");
    expect(app.world).not.toBeNull();
  });

  it("keeps input on network failure so retry loses nothing", async () => {
    const client = mockClient({
      annotate: vi
        .fn()
        .mockRejectedValue(new ApiError(0, "network failure", "connection refused")),
    });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    app.input.value = "gold; silver";
    await submitAndAdvance(app);
    expect(app.input.value).toBe("gold; silver");
    expect(app.inlineError.textContent).toContain("retry");
  });

  it("submits, clears the input, and advances with the service counters", async () => {
    const getSession = vi
      .fn()
      .mockResolvedValueOnce(view())
      .mockResolvedValueOnce(view({ surviving: 2, annotated: 1 }));
    const nextWorld = vi
      .fn()
      .mockResolvedValueOnce({ ...progress(), world: WORLD })
      .mockResolvedValue({ ...progress({ surviving: 2, annotated: 1 }), world: { ...WORLD, index: 5 } });
    const annotate = vi.fn().mockResolvedValue(progress({ surviving: 2, annotated: 1 }));
    const client = mockClient({ getSession, nextWorld, annotate });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    app.input.value = "gold";
    await submitAndAdvance(app);
    expect(annotate).toHaveBeenCalledWith("abc", 2, ["gold"]);
    expect(app.input.value).toBe("");
    expect(app.progress.dataset.surviving).toBe("2");
    expect(app.progress.dataset.annotated).toBe("1");
    expect(app.world?.index).toBe(5);
  });

  it("shows the resolved banner with pretty-printed survivors", async () => {
    const client = mockClient({
      getSession: vi.fn().mockResolvedValue(view({ state: "resolved", surviving: 1, annotated: 2 })),
      result: vi.fn().mockResolvedValue({
        state: "resolved",
        all_pruned: false,
        classes: [
          {
            representative:
              '(join (reverse Medal) (join Venue (entity "finland")))',
            members: 7,
          },
        ],
      }),
    });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    expect(app.banner.hidden).toBe(false);
    expect(app.banner.className).toContain("banner-success");
    expect(app.answerBox.hidden).toBe(true);
    const item = app.resultBox.querySelector("li");
    expect(item?.textContent).toBe("R[Medal].Venue.finland (7 forms)");
  });

  it("shows the all-pruned warning with no classes", async () => {
    const client = mockClient({
      getSession: vi
        .fn()
        .mockResolvedValue(view({ state: "all-pruned", surviving: 0, annotated: 2 })),
      result: vi
        .fn()
        .mockResolvedValue({ state: "all-pruned", all_pruned: true, classes: [] }),
    });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    expect(app.banner.className).toContain("banner-warn");
    expect(app.resultBox.querySelectorAll("li")).toHaveLength(0);
  });

  it("offers a retry when the session fetch fails", async () => {
    const getSession = vi
      .fn()
      .mockRejectedValueOnce(new ApiError(0, "network failure", "refused"))
      .mockResolvedValueOnce(view());
    const client = mockClient({ getSession });
    const app = new AnnotatorApp(mount(), client, "abc");
    await app.refresh();
    expect(app.errorBanner.hidden).toBe(false);
    const retry = app.errorBanner.querySelector("button.retry") as HTMLElement;
    retry.click();
    await vi.waitFor(() => expect(app.errorBanner.hidden).toBe(true));
    expect(getSession).toHaveBeenCalledTimes(2);
  });

  it("polls while the search is running, then settles", async () => {
    vi.useFakeTimers();
    try {
      const getSession = vi
        .fn()
        .mockResolvedValueOnce(view({ state: "searching", initial: 0, surviving: 0 }))
        .mockResolvedValueOnce(view());
      const app = new AnnotatorApp(mount(), mockClient({ getSession }), "abc");
      await app.refresh();
      expect(app.banner.textContent).toContain("Searching");
      await vi.advanceTimersByTimeAsync(800);
      expect(getSession).toHaveBeenCalledTimes(2);
      expect(app.answerBox.hidden).toBe(false);
      app.dispose();
    } finally {
      vi.useRealTimers();
    }
  });
});
