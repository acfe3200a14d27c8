import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError } from "../../src/api.js";
import type { DocumentResponse, EncodedOp } from "../../src/api.js";
import { mountDocEditor } from "../../src/docEditor.js";
import type { UiSchemaNode } from "../../src/schemaTree.js";

function type(
  path: string,
  name: string,
  kind: UiSchemaNode["kind"],
  multiplicity: UiSchemaNode["multiplicity"],
  children: UiSchemaNode[] = [],
): UiSchemaNode {
  return { path, name, kind, multiplicity, children, folded: false };
}

const schemaRoot = type("/", "collection", "composite", "one", [
  type("/Case", "Case", "composite", "many", [
    type("/Case/History", "History", "atomic", "one"),
    type("/Case/Sex", "Sex", "atomic", "optional"),
    type("/Case/Finding", "Finding", "atomic", "many"),
    type("/Case/Figure", "Figure", "resource-ref", "many"),
  ]),
]);

function freshDoc(): DocumentResponse {
  return {
    version: 3,
    document: {
      id: "case-001",
      origin: { plugin: "medpix", locator: "case-001" },
      root: {
        name: "collection",
        children: [
          {
            name: "Case",
            children: [
              { name: "History", text: "Presented with cough." },
              { name: "Finding", text: "first finding" },
              { name: "Finding", text: "second finding" },
              { name: "Figure", resource: "abc123" },
            ],
          },
        ],
      },
    },
  };
}

function textareaFor(root: HTMLElement, ipath: string): HTMLTextAreaElement {
  for (const area of root.querySelectorAll<HTMLTextAreaElement>("textarea[data-ipath]")) {
    if (area.dataset.ipath === ipath) return area;
  }
  throw new Error(`no field rendered for ${ipath}`);
}

function edit(area: HTMLTextAreaElement, text: string): void {
  area.value = text;
  area.dispatchEvent(new Event("input"));
}

describe("document editor", () => {
  let container: HTMLElement;

  beforeEach(() => {
    container = document.createElement("div");
    document.body.appendChild(container);
  });

  it("addresses repeated siblings by ordinal and singletons without one", () => {
    const editor = mountDocEditor(container, {
      doc: freshDoc(),
      schemaRoot,
      patch: vi.fn(),
      reload: vi.fn(),
    });
    expect(textareaFor(editor.root, "/Case/History")).toBeTruthy();
    expect(textareaFor(editor.root, "/Case/Finding[0]").value).toBe("first finding");
    expect(textareaFor(editor.root, "/Case/Finding[1]").value).toBe("second finding");
  });

  it("collects one set op per changed field and clears them after a save", async () => {
    const patch = vi.fn(async (_ops: EncodedOp[], _ifMatch: number) => ({ version: 4 }));
    const editor = mountDocEditor(container, { doc: freshDoc(), schemaRoot, patch, reload: vi.fn() });

    edit(textareaFor(editor.root, "/Case/History"), "Rewritten history.");
    edit(textareaFor(editor.root, "/Case/Finding[1]"), "changed finding");
    // an edit reverted back to the original is not dirty
    const first = textareaFor(editor.root, "/Case/Finding[0]");
    edit(first, "oops");
    edit(first, "first finding");

    expect(editor.dirtyOps()).toEqual([
      { op: "set", doc_id: "case-001", instance_path: "/Case/History", text: "Rewritten history." },
      { op: "set", doc_id: "case-001", instance_path: "/Case/Finding[1]", text: "changed finding" },
    ]);

    await editor.save();
    expect(patch).toHaveBeenCalledWith(expect.any(Array), 3); // If-Match = loaded version
    expect(editor.version()).toBe(4);
    expect(editor.dirtyOps()).toEqual([]);
    expect((editor.root.querySelector("button.save") as HTMLButtonElement).disabled).toBe(true);
  });

  it("offers inserts only where multiplicity allows them", () => {
    const editor = mountDocEditor(container, {
      doc: freshDoc(),
      schemaRoot,
      patch: vi.fn(),
      reload: vi.fn(),
    });
    const buttons = new Map<string, HTMLButtonElement>();
    for (const b of editor.root.querySelectorAll<HTMLButtonElement>("button.insert")) {
      buttons.set(b.dataset.typePath!, b);
    }
    expect(buttons.get("/Case/History")!.disabled).toBe(true); // exactly-one, present
    expect(buttons.get("/Case/Sex")!.disabled).toBe(false); // optional, absent
    expect(buttons.get("/Case/Finding")!.disabled).toBe(false); // many
    expect(buttons.has("/Case/Figure")).toBe(false); // not atomic: no text insert
  });

  it("sends a single insert op and reloads from the server copy", async () => {
    const patch = vi.fn(async (_ops: EncodedOp[], _ifMatch: number) => ({ version: 4 }));
    const reload = vi.fn();
    const editor = mountDocEditor(container, { doc: freshDoc(), schemaRoot, patch, reload });

    for (const b of editor.root.querySelectorAll<HTMLButtonElement>("button.insert")) {
      if (b.dataset.typePath === "/Case/Sex") b.click();
    }
    await vi.waitFor(() => expect(reload).toHaveBeenCalled());
    expect(patch).toHaveBeenCalledTimes(1);
    expect(patch.mock.calls[0][0]).toEqual([
      {
        op: "insert",
        doc_id: "case-001",
        parent: "/Case",
        type_path: "/Case/Sex",
        payload: { kind: "text", text: "" },
      },
    ]);
    expect(patch.mock.calls[0][1]).toBe(3);
  });

  it("keeps every edit in the form when a stale save conflicts, then retries with the newer version", async () => {
    let failNext = true;
    const patch = vi.fn(async (ops: EncodedOp[], ifMatch: number) => {
      if (failNext) {
        failNext = false;
        throw new ApiError(409, "version-conflict", "collection is at version 9", { version: 9 });
      }
      return { version: ifMatch + ops.length };
    });
    const editor = mountDocEditor(container, { doc: freshDoc(), schemaRoot, patch, reload: vi.fn() });

    edit(textareaFor(editor.root, "/Case/History"), "My careful rewrite.");
    await editor.save();

    expect(editor.conflictVisible()).toBe(true);
    expect(textareaFor(editor.root, "/Case/History").value).toBe("My careful rewrite."); // nothing lost
    expect(editor.dirtyOps()).toHaveLength(1);

    (editor.root.querySelector("button.retry") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(patch).toHaveBeenCalledTimes(2));
    expect(patch.mock.calls[1][1]).toBe(9); // retried against the observed server version
    await vi.waitFor(() => expect(editor.version()).toBe(10));
    expect(editor.conflictVisible()).toBe(false);
  });

  it("pins a 422 to the offending field", async () => {
    const patch = vi.fn(async () => {
      throw new ApiError(422, "op-failed", "value rejected", { op_index: 1 });
    });
    const editor = mountDocEditor(container, { doc: freshDoc(), schemaRoot, patch, reload: vi.fn() });

    edit(textareaFor(editor.root, "/Case/History"), "fine");
    edit(textareaFor(editor.root, "/Case/Finding[1]"), "broken");
    await editor.save();

    const flagged = textareaFor(editor.root, "/Case/Finding[1]")
      .parentElement!.querySelector(".field-error") as HTMLElement;
    expect(flagged.hidden).toBe(false);
    expect(flagged.textContent).toBe("value rejected");
    expect(editor.dirtyOps()).toHaveLength(2); // edits survive the rejection
  });
});
