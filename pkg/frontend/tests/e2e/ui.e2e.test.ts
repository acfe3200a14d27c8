// End-to-end: drives the UI modules in jsdom against a real service
// process, checking the four workflows that matter most — the group
// gesture, conflict handling without data loss, annotation coordinate
// round-tripping, and an export that the CLI validator accepts.

import { execFile, spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtemp, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import path from "node:path";
import { pathToFileURL } from "node:url";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient, createCollection } from "../../src/api.js";
import { mountAnnotationCanvas } from "../../src/annotate.js";
import { mountDocEditor } from "../../src/docEditor.js";
import type { DocEditor } from "../../src/docEditor.js";
import { mountExportWizard } from "../../src/exportWizard.js";
import { renderSchemaTree, toUiTree } from "../../src/schemaTree.js";

const execFileP = promisify(execFile);

// vitest runs with the frontend directory as cwd; the service fixture
// sits one level up in the repository
const repoRoot = path.resolve(process.cwd(), "..");
const fixtureBase = pathToFileURL(path.join(repoRoot, "fixtures", "medpix")).href + "/";

let server: ChildProcess;
let serverOut = "";
let base: string;
let storage: string;
let client: ServiceClient;

async function waitForService(url: string): Promise<void> {
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const res = await fetch(url);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service at ${url} never came up\n${serverOut}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
}

beforeAll(async () => {
  storage = await mkdtemp(path.join(tmpdir(), "ui-e2e-"));
  const port = 8900 + Math.floor(Math.random() * 900);
  base = `http://127.0.0.1:${port}`;
  server = spawn("loforge", ["serve", "--bind", `127.0.0.1:${port}`, "--storage", storage], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout?.on("data", (chunk) => (serverOut += chunk));
  server.stderr?.on("data", (chunk) => (serverOut += chunk));
  await waitForService(`${base}/collections`);

  const made = await createCollection(base);
  client = new ServiceClient(base, made.id);
  const imported = await fetch(`${base}/collections/${made.id}/import`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ plugin: "medpix", params: { base: fixtureBase } }),
  });
  expect(imported.ok).toBe(true);
});

afterAll(async () => {
  server?.kill("SIGTERM");
  await new Promise((resolve) => {
    const timer = setTimeout(() => {
      server?.kill("SIGKILL");
      resolve(null);
    }, 5_000);
    server?.once("exit", () => {
      clearTimeout(timer);
      resolve(null);
    });
  });
  await rm(storage, { recursive: true, force: true });
});

describe("schema tree against the live service", () => {
  it("creates a Personal Data composite from the multi-select group gesture", async () => {
    const res = await client.getSchema();
    let version = res.version;
    const tree = toUiTree(res.schema.root);

    const container = document.createElement("div");
    document.body.appendChild(container);
    const pending: Promise<unknown>[] = [];
    renderSchemaTree(container, tree, {
      emitOp: (op) => {
        pending.push(
          client.postSchemaOps([op], version).then((r) => {
            version = r.version;
          }),
        );
      },
      promptName: () => "Personal Data",
      confirm: () => true,
    });

    for (const wanted of ["/Case/Sex", "/Case/Age"]) {
      let hit = false;
      for (const li of container.querySelectorAll<HTMLElement>("li.tree-node")) {
        if (li.dataset.path !== wanted) continue;
        const pick = li.querySelector("input.pick") as HTMLInputElement;
        pick.checked = true;
        pick.dispatchEvent(new Event("change"));
        hit = true;
        break;
      }
      expect(hit).toBe(true);
    }
    (container.querySelector("button.group") as HTMLButtonElement).click();
    expect(pending).toHaveLength(1); // the whole gesture is a single op
    await Promise.all(pending);

    const after = await client.getSchema();
    expect(after.version).toBe(version);
    const caseNode = (after.schema.root.children ?? []).find((c) => c.name === "Case");
    const personal = (caseNode?.children ?? []).find((c) => c.name === "Personal Data");
    expect(personal?.kind).toBe("composite");
    expect((personal?.children ?? []).map((c) => c.name).sort()).toEqual(["Age", "Sex"]);
    container.remove();
  });
});

describe("concurrent document edits", () => {
  function openEditor(docId: string): Promise<DocEditor> {
    const slot = document.createElement("div");
    document.body.appendChild(slot);
    return (async () => {
      const [doc, schema] = await Promise.all([client.getDocument(docId), client.getSchema()]);
      return mountDocEditor(slot, {
        doc,
        schemaRoot: toUiTree(schema.schema.root),
        patch: (ops, ifMatch) => client.patchDocument(docId, ops, ifMatch),
        reload: () => undefined,
      });
    })();
  }

  function historyField(editor: DocEditor): HTMLTextAreaElement {
    for (const area of editor.root.querySelectorAll<HTMLTextAreaElement>("textarea[data-ipath]")) {
      if (area.dataset.ipath === "/Case/History") return area;
    }
    throw new Error("no /Case/History field rendered");
  }

  it("surfaces a stale save as a conflict and loses nothing", async () => {
    const editorA = await openEditor("case-002");
    const editorB = await openEditor("case-002"); // same starting version

    const fieldA = historyField(editorA);
    fieldA.value = "From editor A.";
    fieldA.dispatchEvent(new Event("input"));
    await editorA.save();
    expect(editorA.conflictVisible()).toBe(false);

    const fieldB = historyField(editorB);
    fieldB.value = "From editor B, stale.";
    fieldB.dispatchEvent(new Event("input"));
    await editorB.save();

    expect(editorB.conflictVisible()).toBe(true);
    expect(fieldB.value).toBe("From editor B, stale."); // edit retained in the form
    expect(editorB.dirtyOps()).toHaveLength(1);

    // the stale save must not have landed server-side
    const fresh = await client.getDocument("case-002");
    const caseInst = (fresh.document.root.children ?? [])[0];
    const history = (caseInst.children ?? []).find((ch) => ch.name === "History");
    expect(history?.text).toBe("From editor A.");
  });
});

describe("annotation round-trip", () => {
  it("stores a drawn rectangle whose coordinates survive zoom within one pixel", async () => {
    const resources = await client.listResources();
    const image = resources.resources.find(
      (r) => r.kind === "local-file" && r.media_type.startsWith("image/"),
    );
    expect(image).toBeDefined();

    // probe the real pixel size the way a browser would (jsdom cannot
    // decode images, so read the PNG header off the served bytes)
    const bytes = Buffer.from(
      await (await fetch(client.resourceContentUrl(image!.id))).arrayBuffer(),
    );
    expect(bytes.subarray(0, 8)).toEqual(Buffer.from("\x89PNG\r\n\x1a\n", "latin1"));
    const natural = { w: bytes.readUInt32BE(16), h: bytes.readUInt32BE(20) };
    const displayed = { w: 49, h: 37 }; // fractional zoom-out on purpose
    const posted: Promise<unknown>[] = [];

    const slot = document.createElement("div");
    document.body.appendChild(slot);
    const canvas = mountAnnotationCanvas(slot, {
      imageUrl: client.resourceContentUrl(image!.id),
      imageSize: natural,
      annotations: [],
      promptComment: () => "suspicious region",
      onCreate: (rect, comment) => {
        posted.push(
          client
            .getInfo()
            .then((info) =>
              client.postAnnotation(
                { resource_id: image!.id, ...rect, comment, author: "ui-e2e" },
                info.version,
              ),
            ),
        );
      },
    });
    canvas.root.getBoundingClientRect = () =>
      ({ left: 0, top: 0, width: displayed.w, height: displayed.h,
         right: displayed.w, bottom: displayed.h }) as DOMRect;

    const press = (kind: string, clientX: number, clientY: number) =>
      canvas.root.dispatchEvent(new MouseEvent(kind, { clientX, clientY, button: 0 }));
    const start = { x: 10, y: 7 };
    const end = { x: 41, y: 30 };
    press("mousedown", start.x, start.y);
    press("mousemove", 25, 20);
    press("mouseup", end.x, end.y);

    expect(posted).toHaveLength(1);
    await Promise.all(posted);

    // what the drag means in natural image pixels, by ideal (unrounded) math
    const sx = natural.w / displayed.w;
    const sy = natural.h / displayed.h;
    const intended = {
      x: start.x * sx,
      y: start.y * sy,
      w: (end.x - start.x) * sx,
      h: (end.y - start.y) * sy,
    };
    const listed = await client.listAnnotations(image!.id);
    expect(listed.annotations).toHaveLength(1);
    const got = listed.annotations[0];
    expect(Math.abs(got.x - intended.x)).toBeLessThanOrEqual(1);
    expect(Math.abs(got.y - intended.y)).toBeLessThanOrEqual(1);
    expect(Math.abs(got.w - intended.w)).toBeLessThanOrEqual(1);
    expect(Math.abs(got.h - intended.h)).toBeLessThanOrEqual(1);
    expect(got.comment).toBe("suspicious region");

    // re-projecting the stored rectangle onto the displayed size lands
    // within a pixel of where the drag happened
    expect(Math.abs(got.x / sx - start.x)).toBeLessThanOrEqual(1);
    expect(Math.abs((got.x + got.w) / sx - end.x)).toBeLessThanOrEqual(1);
    canvas.destroy();
  });
});

describe("export wizard", () => {
  it("disables submit for an empty explicit selection", async () => {
    const res = await client.getSchema();
    const slot = document.createElement("div");
    document.body.appendChild(slot);
    const wizard = mountExportWizard(slot, {
      schemaRoot: toUiTree(res.schema.root),
      start: (profile) => client.startExport(profile),
      poll: (jid) => client.getExportJob(jid),
      artifactUrl: (jid) => client.artifactUrl(jid),
    });

    expect(wizard.submitEnabled()).toBe(true); // everything mode
    const chosen = wizard.root.querySelector("input.scope-chosen") as HTMLInputElement;
    chosen.checked = true;
    chosen.dispatchEvent(new Event("change"));
    expect(wizard.submitEnabled()).toBe(false); // nothing ticked yet
    expect((wizard.root.querySelector("button.submit") as HTMLButtonElement).disabled).toBe(true);

    const firstPath = wizard.root.querySelector(".path-list input") as HTMLInputElement;
    firstPath.checked = true;
    firstPath.dispatchEvent(new Event("change"));
    expect(wizard.submitEnabled()).toBe(true);
    slot.remove();
  });

  it("produces an artifact the command-line validator accepts", async () => {
    const res = await client.getSchema();
    const slot = document.createElement("div");
    document.body.appendChild(slot);
    const wizard = mountExportWizard(slot, {
      schemaRoot: toUiTree(res.schema.root),
      start: (profile) => client.startExport(profile),
      poll: (jid) => client.getExportJob(jid),
      artifactUrl: (jid) => client.artifactUrl(jid),
      pollIntervalMs: 100,
    });

    const quizzes = wizard.root.querySelector("input.quizzes") as HTMLInputElement;
    quizzes.checked = true;
    expect(wizard.currentProfile()).toMatchObject({
      format: "imscp",
      detail: "full",
      include_quizzes: true,
      fixed_epoch: 0,
    });

    (wizard.root.querySelector("button.submit") as HTMLButtonElement).click();
    const job = await wizard.settled();
    expect(job?.state).toBe("done");

    const link = wizard.root.querySelector("a.download") as HTMLAnchorElement;
    expect(link.hidden).toBe(false);

    const artifact = await fetch(link.href);
    expect(artifact.ok).toBe(true);
    const zipPath = path.join(storage, "ui-export.zip");
    await writeFile(zipPath, Buffer.from(await artifact.arrayBuffer()));

    const { stdout } = await execFileP("loforge", ["validate", zipPath]);
    expect(stdout.toLowerCase()).toContain("ok");
    slot.remove();
  });
});

describe("operation log", () => {
  it("records every mutation the UI made", async () => {
    const log = await client.getLog();
    const info = await client.getInfo();
    expect(log.version).toBe(info.version);
    expect(log.text).toContain('"Personal Data"'); // the group gesture
    expect(log.text).toContain("From editor A."); // the successful save only
    expect(log.text).not.toContain("stale"); // the conflicted save never landed
    expect(log.text).toContain("suspicious region"); // the annotation
    const lines = log.text.split("\n").filter(Boolean);
    expect(lines.length).toBe(info.version); // one log line per committed op
  });
});
