// Rectangle annotation overlay for image resources. The image is shown
// at whatever zoom the layout gives it; pointer coordinates are
// normalized back to natural image pixels before anything is stored,
// so a stored rectangle re-projects onto the display within a pixel.

import type { AnnotationWire } from "./api.js";

export interface RectPx {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface AnnotationCanvasOptions {
  imageUrl: string;
  imageSize: { w: number; h: number }; // natural pixels
  annotations: AnnotationWire[];
  onCreate(rect: RectPx, comment: string): void;
  promptComment?: () => string | null;
}

export interface AnnotationCanvas {
  root: HTMLElement;
  markerCount(): number;
  destroy(): void;
}

interface Point {
  x: number;
  y: number;
}

// client (CSS) coordinates -> natural image pixels, clamped to the image
function toImagePx(clientX: number, clientY: number, box: DOMRect, natural: { w: number; h: number }): Point {
  const scaleX = natural.w / box.width;
  const scaleY = natural.h / box.height;
  const x = Math.min(Math.max(clientX - box.left, 0), box.width) * scaleX;
  const y = Math.min(Math.max(clientY - box.top, 0), box.height) * scaleY;
  return { x, y };
}

export function dragToRect(start: Point, end: Point): RectPx | null {
  const x = Math.round(Math.min(start.x, end.x));
  const y = Math.round(Math.min(start.y, end.y));
  const w = Math.round(Math.abs(end.x - start.x));
  const h = Math.round(Math.abs(end.y - start.y));
  if (w < 1 || h < 1) return null; // zero-area drags carry no content
  return { x, y, w, h };
}

export function mountAnnotationCanvas(container: HTMLElement, opts: AnnotationCanvasOptions): AnnotationCanvas {
  const promptComment = opts.promptComment ?? (() => window.prompt("Annotation comment"));

  const root = document.createElement("div");
  root.className = "annotation-canvas";

  const image = document.createElement("img");
  image.src = opts.imageUrl;
  image.draggable = false;
  image.alt = "annotated resource";
  root.appendChild(image);

  const pct = (value: number, span: number) => `${(value / span) * 100}%`;

  for (const [i, ann] of opts.annotations.entries()) {
    const marker = document.createElement("div");
    marker.className = "marker";
    marker.dataset.annotation = ann.id;
    marker.style.left = pct(ann.x, opts.imageSize.w);
    marker.style.top = pct(ann.y, opts.imageSize.h);
    marker.style.width = pct(ann.w, opts.imageSize.w);
    marker.style.height = pct(ann.h, opts.imageSize.h);
    marker.title = ann.author ? `${ann.comment} (${ann.author})` : ann.comment;
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = String(i + 1);
    marker.appendChild(badge);
    root.appendChild(marker);
  }

  const rubber = document.createElement("div");
  rubber.className = "rubber-band";
  rubber.hidden = true;
  root.appendChild(rubber);

  let dragStart: Point | null = null; // in natural image pixels
  let dragStartCss: Point | null = null;

  function onMouseDown(event: MouseEvent): void {
    if (event.button !== 0) return;
    const box = root.getBoundingClientRect();
    dragStart = toImagePx(event.clientX, event.clientY, box, opts.imageSize);
    dragStartCss = { x: event.clientX - box.left, y: event.clientY - box.top };
    rubber.hidden = false;
    event.preventDefault();
  }

  function onMouseMove(event: MouseEvent): void {
    if (!dragStartCss) return;
    const box = root.getBoundingClientRect();
    const cur = { x: event.clientX - box.left, y: event.clientY - box.top };
    rubber.style.left = `${Math.min(dragStartCss.x, cur.x)}px`;
    rubber.style.top = `${Math.min(dragStartCss.y, cur.y)}px`;
    rubber.style.width = `${Math.abs(cur.x - dragStartCss.x)}px`;
    rubber.style.height = `${Math.abs(cur.y - dragStartCss.y)}px`;
  }

  function onMouseUp(event: MouseEvent): void {
    if (!dragStart) return;
    const box = root.getBoundingClientRect();
    const end = toImagePx(event.clientX, event.clientY, box, opts.imageSize);
    const rect = dragToRect(dragStart, end);
    dragStart = null;
    dragStartCss = null;
    rubber.hidden = true;
    rubber.style.width = "0px";
    rubber.style.height = "0px";
    if (!rect) return;
    const comment = promptComment()?.trim();
    if (!comment) return;
    opts.onCreate(rect, comment);
  }

  root.addEventListener("mousedown", onMouseDown);
  root.addEventListener("mousemove", onMouseMove);
  root.addEventListener("mouseup", onMouseUp);

  container.textContent = "";
  container.appendChild(root);

  return {
    root,
    markerCount: () => root.querySelectorAll(".marker").length,
    destroy() {
      root.removeEventListener("mousedown", onMouseDown);
      root.removeEventListener("mousemove", onMouseMove);
      root.removeEventListener("mouseup", onMouseUp);
      root.remove();
    },
  };
}
