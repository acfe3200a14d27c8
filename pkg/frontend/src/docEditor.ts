// Schema-driven document editor: walks the instance tree next to its
// element types, renders atomic fields as editable inputs, composite
// sections as collapsible blocks, and insert buttons that respect the
// declared multiplicity. Saves are optimistic (If-Match) and a stale
// save keeps every edit in place behind a conflict banner.

import { ApiError } from "./api.js";
import type { DocumentResponse, EncodedOp, InstanceWire } from "./api.js";
import { formatName } from "./schemaTree.js";
import type { UiSchemaNode } from "./schemaTree.js";

export interface DocEditorDeps {
  doc: DocumentResponse;
  schemaRoot: UiSchemaNode;
  patch(ops: EncodedOp[], ifMatch: number): Promise<{ version: number }>;
  reload(): void;
}

export interface DocEditor {
  root: HTMLElement;
  version(): number;
  dirtyOps(): EncodedOp[];
  save(): Promise<void>;
  conflictVisible(): boolean;
}

function joinInstancePath(parent: string, name: string, ordinal: number | null): string {
  let seg = "/" + formatName(name);
  if (ordinal !== null) seg += `[${ordinal}]`;
  return parent === "/" ? seg : parent + seg;
}

function schemaChild(node: UiSchemaNode, name: string): UiSchemaNode | undefined {
  return node.children.find((ch) => ch.name === name);
}

export function mountDocEditor(container: HTMLElement, deps: DocEditorDeps): DocEditor {
  const docId = deps.doc.document.id;
  let version = deps.doc.version;
  const original = new Map<string, string>();
  const edited = new Map<string, string>();

  const root = document.createElement("form");
  root.className = "doc-editor";
  root.addEventListener("submit", (e) => e.preventDefault());

  const banner = document.createElement("div");
  banner.className = "conflict-banner";
  banner.hidden = true;

  const errorLine = document.createElement("div");
  errorLine.className = "save-error";
  errorLine.hidden = true;

  const saveButton = document.createElement("button");
  saveButton.type = "button";
  saveButton.className = "save";
  saveButton.textContent = "save changes";
  saveButton.disabled = true;

  function refreshSaveState(): void {
    saveButton.disabled = dirtyOps().length === 0;
  }

  function fieldInput(ipath: string): HTMLTextAreaElement | null {
    for (const area of root.querySelectorAll<HTMLTextAreaElement>("textarea[data-ipath]")) {
      if (area.dataset.ipath === ipath) return area;
    }
    return null;
  }

  function renderAtomic(node: InstanceWire, ipath: string, type: UiSchemaNode): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    const caption = document.createElement("span");
    caption.className = "field-name";
    caption.textContent = type.name;
    const input = document.createElement("textarea");
    input.rows = 2;
    input.value = node.text ?? "";
    input.dataset.ipath = ipath;
    original.set(ipath, input.value);
    input.addEventListener("input", () => {
      edited.set(ipath, input.value);
      refreshSaveState();
    });
    const fieldError = document.createElement("span");
    fieldError.className = "field-error";
    fieldError.hidden = true;
    wrap.append(caption, input, fieldError);
    return wrap;
  }

  function renderLeafInfo(node: InstanceWire, type: UiSchemaNode): HTMLElement {
    const div = document.createElement("div");
    div.className = `leaf kind-${type.kind}`;
    if (node.resource !== undefined) div.textContent = `${type.name}: resource ${node.resource}`;
    else if (node.link !== undefined) div.textContent = `${type.name}: ${node.link.kind} → ${node.link.value}`;
    else if (node.quiz !== undefined) div.textContent = `${type.name}: quiz “${node.quiz.stem}”`;
    else div.textContent = type.name;
    return div;
  }

  function renderComposite(node: InstanceWire, ipath: string, type: UiSchemaNode): HTMLElement {
    const section = document.createElement("details");
    section.open = true;
    section.className = "section";
    const summary = document.createElement("summary");
    summary.textContent = type.name;
    section.appendChild(summary);

    const children = node.children ?? [];
    const counts = new Map<string, number>();
    for (const ch of children) counts.set(ch.name, (counts.get(ch.name) ?? 0) + 1);

    const seen = new Map<string, number>();
    for (const ch of children) {
      const childType = schemaChild(type, ch.name);
      if (!childType) continue; // never expected: document conforms to schema
      const nth = seen.get(ch.name) ?? 0;
      seen.set(ch.name, nth + 1);
      const ordinal = (counts.get(ch.name) ?? 0) > 1 ? nth : null;
      section.appendChild(renderInstance(ch, joinInstancePath(ipath, ch.name, ordinal), childType));
    }

    // one insert control per child type, honoring multiplicity
    for (const childType of type.children) {
      if (childType.kind !== "atomic") continue;
      const have = counts.get(childType.name) ?? 0;
      const canInsert = childType.multiplicity === "many" || have === 0;
      const button = document.createElement("button");
      button.type = "button";
      button.className = "insert";
      button.textContent = `+ ${childType.name}`;
      button.disabled = !canInsert;
      button.dataset.typePath = childType.path;
      button.addEventListener("click", () => {
        void insertField(ipath, childType.path);
      });
      section.appendChild(button);
    }
    return section;
  }

  function renderInstance(node: InstanceWire, ipath: string, type: UiSchemaNode): HTMLElement {
    if (type.kind === "atomic") return renderAtomic(node, ipath, type);
    if (type.kind === "composite") return renderComposite(node, ipath, type);
    return renderLeafInfo(node, type);
  }

  function dirtyOps(): EncodedOp[] {
    const ops: EncodedOp[] = [];
    for (const [ipath, text] of edited) {
      if (original.get(ipath) !== text) {
        ops.push({ op: "set", doc_id: docId, instance_path: ipath, text });
      }
    }
    return ops;
  }

  function showConflict(current: number): void {
    banner.textContent =
      `Someone else changed this collection (server is at version ${current}, ` +
      `you edited version ${version}). Your edits are still in the form. `;
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry";
    retry.textContent = "save anyway (retry with latest version)";
    retry.addEventListener("click", () => {
      version = current;
      banner.hidden = true;
      void save();
    });
    const discard = document.createElement("button");
    discard.type = "button";
    discard.className = "discard";
    discard.textContent = "discard my edits and reload";
    discard.addEventListener("click", () => deps.reload());
    banner.append(retry, discard);
    banner.hidden = false;
  }

  function showOpError(failed: EncodedOp | undefined, message: string): void {
    errorLine.textContent = message;
    errorLine.hidden = false;
    if (failed && failed.op === "set") {
      const input = fieldInput(failed.instance_path);
      const flag = input?.parentElement?.querySelector<HTMLElement>(".field-error");
      if (flag) {
        flag.textContent = message;
        flag.hidden = false;
      }
    }
  }

  async function save(): Promise<void> {
    const ops = dirtyOps();
    if (ops.length === 0) return;
    banner.hidden = true;
    errorLine.hidden = true;
    try {
      const result = await deps.patch(ops, version);
      version = result.version;
      for (const [ipath, text] of edited) original.set(ipath, text);
      edited.clear();
      refreshSaveState();
    } catch (e) {
      if (e instanceof ApiError && e.isConflict) {
        const current = typeof e.body.version === "number" ? e.body.version : version;
        showConflict(current);
        return; // edits stay in the inputs untouched
      }
      if (e instanceof ApiError && e.status === 422) {
        const index = typeof e.body.op_index === "number" ? e.body.op_index : -1;
        showOpError(ops[index], e.message);
        return;
      }
      throw e;
    }
  }

  async function insertField(parentIPath: string, typePath: string): Promise<void> {
    const op: EncodedOp = {
      op: "insert",
      doc_id: docId,
      parent: parentIPath,
      type_path: typePath,
      payload: { kind: "text", text: "" },
    };
    try {
      const result = await deps.patch([op], version);
      version = result.version;
      deps.reload(); // structure changed: re-render from the server copy
    } catch (e) {
      if (e instanceof ApiError && e.isConflict) {
        const current = typeof e.body.version === "number" ? e.body.version : version;
        showConflict(current);
        return;
      }
      if (e instanceof ApiError) {
        showOpError(undefined, e.message);
        return;
      }
      throw e;
    }
  }

  saveButton.addEventListener("click", () => void save());

  const title = document.createElement("h3");
  title.textContent = docId;
  root.append(title, banner, errorLine);
  root.appendChild(renderInstance(deps.doc.document.root, "/", deps.schemaRoot));
  root.appendChild(saveButton);
  container.textContent = "";
  container.appendChild(root);

  return {
    root,
    version: () => version,
    dirtyOps,
    save,
    conflictVisible: () => !banner.hidden,
  };
}
