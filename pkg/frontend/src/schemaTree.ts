// Schema tree editor: renders the element-type tree, keeps per-path
// fold state on the client only, and turns user gestures (rename,
// remove, merge, group, drag-to-move) into single encoded ops.

import type { EncodedOp, SchemaNodeWire } from "./api.js";

export interface UiSchemaNode {
  path: string;
  name: string;
  kind: SchemaNodeWire["kind"];
  multiplicity: SchemaNodeWire["multiplicity"];
  children: UiSchemaNode[];
  folded: boolean;
}

function needsQuoting(name: string): boolean {
  return /\s/.test(name) || /[,\[\]#]/.test(name);
}

export function formatName(name: string): string {
  return needsQuoting(name) ? `"${name}"` : name;
}

export function joinPath(parentPath: string, name: string): string {
  const seg = "/" + formatName(name);
  return parentPath === "/" ? seg : parentPath + seg;
}

export function parentPathOf(path: string): string {
  const cut = path.replace(/\/"[^"]*"$|\/[^/]*$/, "");
  return cut === "" ? "/" : cut;
}

// Build the view tree from the wire schema, carrying fold state over
// from the previous view tree by path. Fold state is never serialized.
export function toUiTree(root: SchemaNodeWire, previous?: UiSchemaNode): UiSchemaNode {
  const foldedPaths = new Set<string>();
  const collect = (node: UiSchemaNode): void => {
    if (node.folded) foldedPaths.add(node.path);
    node.children.forEach(collect);
  };
  if (previous) collect(previous);

  const convert = (node: SchemaNodeWire, path: string): UiSchemaNode => ({
    path,
    name: node.name,
    kind: node.kind,
    multiplicity: node.multiplicity,
    children: (node.children ?? []).map((ch) => convert(ch, joinPath(path, ch.name))),
    folded: foldedPaths.has(path),
  });
  return convert(root, "/");
}

export function findNode(tree: UiSchemaNode, path: string): UiSchemaNode | null {
  if (tree.path === path) return tree;
  for (const child of tree.children) {
    const hit = findNode(child, path);
    if (hit) return hit;
  }
  return null;
}

// ---------------------------------------------------------------------------
// gesture -> op mapping (pure, so it is testable without DOM events)

export function renameOp(node: UiSchemaNode, newName: string | null): EncodedOp | null {
  const trimmed = newName?.trim() ?? "";
  if (!trimmed || trimmed === node.name) return null; // blocked client-side
  return { op: "rename", path: node.path, new_name: trimmed };
}

export function removeOp(node: UiSchemaNode): EncodedOp {
  return { op: "remove", path: node.path };
}

export function groupOp(nodes: UiSchemaNode[], name: string | null): EncodedOp | null {
  const trimmed = name?.trim() ?? "";
  if (!trimmed || nodes.length === 0) return null;
  return { op: "group", paths: nodes.map((n) => n.path), new_name: trimmed };
}

export interface DropDecision {
  op: EncodedOp;
  confirmText?: string; // merge is destructive: always confirmed, naming both paths
}

// Dropping a node onto a composite moves it under that composite;
// dropping onto anything else proposes a merge of the two types.
export function dropDecision(source: UiSchemaNode, target: UiSchemaNode): DropDecision | null {
  if (source.path === target.path) return null;
  if (target.path.startsWith(source.path + "/")) return null; // target sits inside the source
  if (target.kind === "composite") {
    return { op: { op: "move", path: source.path, new_parent: target.path } };
  }
  return {
    op: { op: "merge", source: source.path, target: target.path },
    confirmText: `Merge ${source.path} into ${target.path}? Instances of both will share the target type.`,
  };
}

// ---------------------------------------------------------------------------
// rendering

export interface TreeHandlers {
  emitOp(op: EncodedOp): void;
  promptName(label: string, initial?: string): string | null;
  confirm(message: string): boolean;
}

function nodeLabel(node: UiSchemaNode): string {
  const mult = node.multiplicity === "one" ? "" : ` (${node.multiplicity})`;
  return `${node.name}${mult}`;
}

function renderNode(node: UiSchemaNode, handlers: TreeHandlers, selected: Set<string>): HTMLLIElement {
  const li = document.createElement("li");
  li.className = `tree-node kind-${node.kind}`;
  li.dataset.path = node.path;

  const row = document.createElement("div");
  row.className = "tree-row";
  row.draggable = node.path !== "/";

  if (node.kind === "composite" && node.children.length > 0) {
    const fold = document.createElement("button");
    fold.type = "button";
    fold.className = "fold";
    fold.textContent = node.folded ? "▸" : "▾";
    fold.addEventListener("click", () => {
      node.folded = !node.folded;
      fold.textContent = node.folded ? "▸" : "▾";
      const sub = li.querySelector(":scope > ul");
      if (sub) (sub as HTMLElement).hidden = node.folded;
    });
    row.appendChild(fold);
  }

  if (node.path !== "/") {
    const pick = document.createElement("input");
    pick.type = "checkbox";
    pick.className = "pick";
    pick.checked = selected.has(node.path);
    pick.addEventListener("change", () => {
      if (pick.checked) selected.add(node.path);
      else selected.delete(node.path);
    });
    row.appendChild(pick);
  }

  const label = document.createElement("span");
  label.className = `label kind-${node.kind}`;
  label.textContent = nodeLabel(node);
  label.title = `${node.path} — ${node.kind}, ${node.multiplicity}`;
  row.appendChild(label);

  if (node.path !== "/") {
    const rename = document.createElement("button");
    rename.type = "button";
    rename.className = "act rename";
    rename.textContent = "rename";
    rename.addEventListener("click", () => {
      const op = renameOp(node, handlers.promptName(`New name for ${node.path}`, node.name));
      if (op) handlers.emitOp(op);
    });
    row.appendChild(rename);

    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "act remove";
    remove.textContent = "remove";
    remove.addEventListener("click", () => {
      if (handlers.confirm(`Remove ${node.path} and all its instances?`)) {
        handlers.emitOp(removeOp(node));
      }
    });
    row.appendChild(remove);
  }

  const err = document.createElement("span");
  err.className = "node-error";
  err.hidden = true;
  row.appendChild(err);

  row.addEventListener("dragstart", (event) => {
    event.dataTransfer?.setData("text/plain", node.path);
    event.stopPropagation();
  });
  row.addEventListener("dragover", (event) => {
    event.preventDefault();
    row.classList.add("dragover");
  });
  row.addEventListener("dragleave", () => row.classList.remove("dragover"));
  row.addEventListener("drop", (event) => {
    event.preventDefault();
    event.stopPropagation();
    row.classList.remove("dragover");
    const sourcePath = event.dataTransfer?.getData("text/plain");
    if (!sourcePath) return;
    const tree = li.closest<HTMLElement>("[data-tree-root]");
    const rootNode = tree ? treeOf(tree) : null;
    const source = rootNode ? findNode(rootNode, sourcePath) : null;
    if (!source) return;
    const decision = dropDecision(source, node);
    if (!decision) return;
    if (decision.confirmText && !handlers.confirm(decision.confirmText)) return;
    handlers.emitOp(decision.op);
  });

  li.appendChild(row);

  if (node.children.length > 0) {
    const ul = document.createElement("ul");
    ul.hidden = node.folded;
    for (const child of node.children) ul.appendChild(renderNode(child, handlers, selected));
    li.appendChild(ul);
  }
  return li;
}

const treeState = new WeakMap<HTMLElement, UiSchemaNode>();

function treeOf(container: HTMLElement): UiSchemaNode | undefined {
  return treeState.get(container);
}

export function renderSchemaTree(container: HTMLElement, tree: UiSchemaNode, handlers: TreeHandlers): void {
  container.textContent = "";
  container.dataset.treeRoot = "1";
  treeState.set(container, tree);
  const selected = new Set<string>();

  const toolbar = document.createElement("div");
  toolbar.className = "tree-toolbar";
  const group = document.createElement("button");
  group.type = "button";
  group.className = "act group";
  group.textContent = "group selected…";
  group.addEventListener("click", () => {
    const nodes = [...selected]
      .map((p) => findNode(tree, p))
      .filter((n): n is UiSchemaNode => n !== null);
    const op = groupOp(nodes, handlers.promptName(`Group ${nodes.length} types as`));
    if (op) handlers.emitOp(op);
  });
  toolbar.appendChild(group);
  container.appendChild(toolbar);

  const ul = document.createElement("ul");
  ul.className = "schema-tree";
  ul.appendChild(renderNode(tree, handlers, selected));
  container.appendChild(ul);
}

// Surface a 422 payload at the node that caused it.
export function showNodeError(container: HTMLElement, path: string, message: string): void {
  for (const li of container.querySelectorAll<HTMLElement>("li.tree-node")) {
    if (li.dataset.path !== path) continue;
    const err = li.querySelector<HTMLElement>(":scope > .tree-row .node-error");
    if (err) {
      err.textContent = message;
      err.hidden = false;
    }
    return;
  }
}
