// Single-page wiring: collection picker, then tabs for the schema tree
// editor, document editor, annotation canvas, export wizard, and the
// operation log. All state beyond what is on screen lives server-side;
// the page holds only the last seen collection version for If-Match.

import { ApiError, ServiceClient, createCollection, listCollections } from "./api.js";
import type { EncodedOp, ResourceWire } from "./api.js";
import { mountAnnotationCanvas } from "./annotate.js";
import { mountDocEditor } from "./docEditor.js";
import { mountExportWizard } from "./exportWizard.js";
import { renderSchemaTree, showNodeError, toUiTree } from "./schemaTree.js";
import type { UiSchemaNode } from "./schemaTree.js";

const TABS = ["schema", "documents", "annotate", "export", "log"] as const;
type Tab = (typeof TABS)[number];

// The path a failed operation should be blamed on when the server
// rejects it (422 with an op_index).
function opAnchorPath(op: EncodedOp): string | null {
  switch (op.op) {
    case "rename":
    case "remove":
    case "move":
      return op.path;
    case "merge":
      return op.source;
    case "group":
      return op.paths[0] ?? null;
    default:
      return null;
  }
}

class CollectionView {
  version = 0;
  private tree: UiSchemaNode | null = null;

  constructor(
    readonly client: ServiceClient,
    readonly pane: HTMLElement,
    readonly banner: HTMLElement,
  ) {}

  note(version: number): void {
    this.version = version;
    const badge = document.querySelector(".version-badge");
    if (badge) badge.textContent = `v${version}`;
  }

  showConflict(serverVersion: number | undefined): void {
    this.banner.textContent =
      `The collection changed on the server (you had v${this.version}` +
      (serverVersion !== undefined ? `, server has v${serverVersion}` : "") +
      `). The view below has been refreshed; redo your change if it still applies.`;
    this.banner.hidden = false;
  }

  clearConflict(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }

  // schema tab -------------------------------------------------------------
  async showSchema(): Promise<void> {
    const res = await this.client.getSchema();
    this.note(res.version);
    this.tree = toUiTree(res.schema.root, this.tree ?? undefined);
    renderSchemaTree(this.pane, this.tree, {
      emitOp: (op) => void this.applySchemaOp(op),
      promptName: (label, initial) => window.prompt(label, initial ?? "") ?? null,
      confirm: (message) => window.confirm(message),
    });
  }

  private async applySchemaOp(op: EncodedOp): Promise<void> {
    this.clearConflict();
    try {
      const res = await this.client.postSchemaOps([op], this.version);
      this.note(res.version);
      await this.showSchema();
    } catch (e) {
      if (e instanceof ApiError && e.isConflict) {
        const server = typeof e.body.version === "number" ? e.body.version : undefined;
        await this.showSchema();
        this.showConflict(server);
        return;
      }
      if (e instanceof ApiError && e.status === 422) {
        const anchor = opAnchorPath(op);
        if (anchor) {
          showNodeError(this.pane, anchor, e.message);
          return;
        }
      }
      throw e;
    }
  }

  // documents tab ----------------------------------------------------------
  async showDocuments(): Promise<void> {
    const listing = await this.client.listDocuments(1, 200);
    this.note(listing.version);
    this.pane.textContent = "";
    const picker = document.createElement("ul");
    picker.className = "doc-list";
    const editorSlot = document.createElement("div");
    editorSlot.className = "editor-slot";
    for (const doc of listing.documents) {
      const li = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = `${doc.id} — ${doc.title}`;
      link.addEventListener("click", (e) => {
        e.preventDefault();
        void this.openDocument(doc.id, editorSlot);
      });
      li.appendChild(link);
      picker.appendChild(li);
    }
    this.pane.append(picker, editorSlot);
  }

  private async openDocument(docId: string, slot: HTMLElement): Promise<void> {
    const [doc, schema] = await Promise.all([this.client.getDocument(docId), this.client.getSchema()]);
    this.note(doc.version);
    mountDocEditor(slot, {
      doc,
      schemaRoot: toUiTree(schema.schema.root),
      patch: async (ops, ifMatch) => {
        const res = await this.client.patchDocument(docId, ops, ifMatch);
        this.note(res.version);
        return res;
      },
      reload: () => void this.openDocument(docId, slot),
    });
  }

  // annotate tab -----------------------------------------------------------
  async showAnnotate(): Promise<void> {
    const res = await this.client.listResources();
    this.note(res.version);
    this.pane.textContent = "";
    const images = res.resources.filter(
      (r) => r.kind === "local-file" && r.media_type.startsWith("image/"),
    );
    if (images.length === 0) {
      this.pane.textContent = "No locally stored images to annotate.";
      return;
    }
    const picker = document.createElement("select");
    picker.className = "resource-picker";
    for (const r of images) {
      const option = document.createElement("option");
      option.value = r.id;
      option.textContent = `${r.id} (${r.media_type}, ${r.byte_size} bytes)`;
      picker.appendChild(option);
    }
    const slot = document.createElement("div");
    slot.className = "canvas-slot";
    picker.addEventListener("change", () => void this.openResource(images, picker.value, slot));
    this.pane.append(picker, slot);
    await this.openResource(images, images[0].id, slot);
  }

  private async openResource(images: ResourceWire[], resourceId: string, slot: HTMLElement): Promise<void> {
    const resource = images.find((r) => r.id === resourceId);
    if (!resource) return;
    const url = this.client.resourceContentUrl(resourceId);
    const [size, listed] = await Promise.all([naturalSize(url), this.client.listAnnotations(resourceId)]);
    this.note(listed.version);
    mountAnnotationCanvas(slot, {
      imageUrl: url,
      imageSize: size,
      annotations: listed.annotations,
      onCreate: (rect, comment) => void this.createAnnotation(resourceId, rect, comment, images, slot),
    });
  }

  private async createAnnotation(
    resourceId: string,
    rect: { x: number; y: number; w: number; h: number },
    comment: string,
    images: ResourceWire[],
    slot: HTMLElement,
  ): Promise<void> {
    const res = await this.client.postAnnotation({ resource_id: resourceId, ...rect, comment }, this.version);
    this.note(res.version);
    await this.openResource(images, resourceId, slot);
  }

  // export tab ---------------------------------------------------------------
  async showExport(): Promise<void> {
    const res = await this.client.getSchema();
    this.note(res.version);
    mountExportWizard(this.pane, {
      schemaRoot: toUiTree(res.schema.root),
      start: (profile) => this.client.startExport(profile),
      poll: (jobId) => this.client.getExportJob(jobId),
      artifactUrl: (jobId) => this.client.artifactUrl(jobId),
    });
  }

  // log tab --------------------------------------------------------------------
  async showLog(): Promise<void> {
    const res = await this.client.getLog();
    this.note(res.version);
    this.pane.textContent = "";
    const pre = document.createElement("pre");
    pre.className = "op-log";
    pre.textContent = res.text || "(no operations yet)";
    this.pane.appendChild(pre);
  }
}

function naturalSize(url: string): Promise<{ w: number; h: number }> {
  return new Promise((resolve, reject) => {
    const probe = new Image();
    probe.onload = () => resolve({ w: probe.naturalWidth, h: probe.naturalHeight });
    probe.onerror = () => reject(new Error(`could not load image ${url}`));
    probe.src = url;
  });
}

// ---------------------------------------------------------------------------
// top-level page

async function showPicker(main: HTMLElement): Promise<void> {
  main.textContent = "";
  const heading = document.createElement("h1");
  heading.textContent = "Collections";
  const list = document.createElement("ul");
  list.className = "collection-list";
  for (const info of await listCollections("")) {
    const li = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = `${info.id} — ${info.documents} documents, v${info.version}`;
    link.addEventListener("click", (e) => {
      e.preventDefault();
      void showCollection(main, info.id);
    });
    li.appendChild(link);
    list.appendChild(li);
  }
  const create = document.createElement("button");
  create.type = "button";
  create.textContent = "new collection";
  create.addEventListener("click", async () => {
    const made = await createCollection("");
    await showCollection(main, made.id);
  });
  main.append(heading, list, create);
}

async function showCollection(main: HTMLElement, collectionId: string): Promise<void> {
  main.textContent = "";

  const header = document.createElement("header");
  const back = document.createElement("a");
  back.href = "#";
  back.textContent = "← collections";
  back.addEventListener("click", (e) => {
    e.preventDefault();
    void showPicker(main);
  });
  const title = document.createElement("h1");
  title.textContent = collectionId;
  const badge = document.createElement("span");
  badge.className = "version-badge";
  header.append(back, title, badge);

  const nav = document.createElement("nav");
  nav.className = "tabs";
  const banner = document.createElement("div");
  banner.className = "conflict-banner";
  banner.hidden = true;
  const pane = document.createElement("section");
  pane.className = "tab-pane";
  main.append(header, nav, banner, pane);

  const view = new CollectionView(new ServiceClient("", collectionId), pane, banner);
  const show: Record<Tab, () => Promise<void>> = {
    schema: () => view.showSchema(),
    documents: () => view.showDocuments(),
    annotate: () => view.showAnnotate(),
    export: () => view.showExport(),
    log: () => view.showLog(),
  };

  for (const tab of TABS) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = tab;
    button.dataset.tab = tab;
    button.addEventListener("click", () => {
      view.clearConflict();
      nav.querySelectorAll("button").forEach((b) => b.classList.toggle("active", b === button));
      void show[tab]().catch((e) => {
        pane.textContent = e instanceof Error ? e.message : String(e);
      });
    });
    nav.appendChild(button);
  }
  (nav.querySelector("button[data-tab=schema]") as HTMLButtonElement).click();
}

export function boot(): void {
  const main = document.querySelector("main#app");
  if (!(main instanceof HTMLElement)) throw new Error("missing <main id=app> mount point");
  void showPicker(main);
}

if (typeof document !== "undefined" && document.querySelector("main#app")) {
  boot();
}
