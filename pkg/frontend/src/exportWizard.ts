// Export wizard: pick a format and detail level, choose element paths
// off the schema tree (or take everything), toggle quizzes, then start
// a server-side export job, poll it, and offer the artifact download.

import type { ExportJobWire, ExportProfileWire } from "./api.js";
import type { UiSchemaNode } from "./schemaTree.js";

export interface ExportWizardDeps {
  schemaRoot: UiSchemaNode;
  start(profile: ExportProfileWire): Promise<{ job: string; state: string }>;
  poll(jobId: string): Promise<ExportJobWire>;
  artifactUrl(jobId: string): string;
  pollIntervalMs?: number;
}

export interface ExportWizard {
  root: HTMLElement;
  submitEnabled(): boolean;
  currentProfile(): ExportProfileWire;
  /** resolves once the running job reaches done/failed (test hook) */
  settled(): Promise<ExportJobWire | null>;
}

function leafPaths(node: UiSchemaNode, out: string[] = []): string[] {
  if (node.path !== "/") out.push(node.path);
  for (const child of node.children) leafPaths(child, out);
  return out;
}

export function mountExportWizard(container: HTMLElement, deps: ExportWizardDeps): ExportWizard {
  const intervalMs = deps.pollIntervalMs ?? 400;
  const root = document.createElement("form");
  root.className = "export-wizard";
  root.addEventListener("submit", (e) => e.preventDefault());

  // format + detail + toggles -------------------------------------------
  const format = document.createElement("select");
  format.className = "format";
  for (const value of ["imscp", "scorm12"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value === "imscp" ? "IMS Content Package" : "SCORM 1.2";
    format.appendChild(option);
  }

  const detail = document.createElement("select");
  detail.className = "detail";
  for (const value of ["full", "summary"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    detail.appendChild(option);
  }

  const quizzes = document.createElement("input");
  quizzes.type = "checkbox";
  quizzes.className = "quizzes";

  const reproducible = document.createElement("input");
  reproducible.type = "checkbox";
  reproducible.className = "reproducible";
  reproducible.checked = true;

  // scope ----------------------------------------------------------------
  const everything = document.createElement("input");
  everything.type = "radio";
  everything.name = "scope";
  everything.className = "scope-everything";
  everything.checked = true;

  const chosen = document.createElement("input");
  chosen.type = "radio";
  chosen.name = "scope";
  chosen.className = "scope-chosen";

  const pathList = document.createElement("div");
  pathList.className = "path-list";
  pathList.hidden = true;
  const pathBoxes: HTMLInputElement[] = [];
  for (const path of leafPaths(deps.schemaRoot)) {
    const row = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = path;
    box.addEventListener("change", refresh);
    pathBoxes.push(box);
    const text = document.createElement("span");
    text.textContent = path;
    row.append(box, text);
    pathList.appendChild(row);
  }

  const submit = document.createElement("button");
  submit.type = "button";
  submit.className = "submit";
  submit.textContent = "export";

  const status = document.createElement("p");
  status.className = "status";

  const download = document.createElement("a");
  download.className = "download";
  download.hidden = true;
  download.textContent = "download package";

  function selectedPaths(): string[] {
    return pathBoxes.filter((b) => b.checked).map((b) => b.value);
  }

  function submitEnabled(): boolean {
    if (everything.checked) return detail.value !== "summary" || selectedPaths().length > 0;
    return selectedPaths().length > 0; // an empty explicit selection exports nothing
  }

  function refresh(): void {
    pathList.hidden = everything.checked;
    submit.disabled = !submitEnabled();
  }
  everything.addEventListener("change", refresh);
  chosen.addEventListener("change", refresh);
  detail.addEventListener("change", refresh);

  function currentProfile(): ExportProfileWire {
    const profile: ExportProfileWire = {
      format: format.value as ExportProfileWire["format"],
      detail: detail.value as ExportProfileWire["detail"],
      include_quizzes: quizzes.checked,
    };
    if (reproducible.checked) profile.fixed_epoch = 0;
    if (chosen.checked) profile.selection = selectedPaths();
    if (detail.value === "summary") profile.summary_paths = selectedPaths();
    return profile;
  }

  let settledPromise: Promise<ExportJobWire | null> = Promise.resolve(null);

  async function runJob(jobId: string): Promise<ExportJobWire> {
    for (;;) {
      const job = await deps.poll(jobId);
      status.textContent = `job ${jobId}: ${job.state}`;
      if (job.state === "done" || job.state === "failed") return job;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  submit.addEventListener("click", () => {
    if (!submitEnabled()) return;
    submit.disabled = true;
    download.hidden = true;
    settledPromise = (async () => {
      try {
        const started = await deps.start(currentProfile());
        status.textContent = `job ${started.job}: ${started.state}`;
        const job = await runJob(started.job);
        if (job.state === "done") {
          download.href = deps.artifactUrl(started.job);
          download.hidden = false;
          status.textContent = `job ${started.job}: done (${job.bytes ?? 0} bytes)`;
        } else {
          status.textContent = `job ${started.job}: failed — ${job.error ?? "unknown error"}`;
        }
        return job;
      } catch (e) {
        status.textContent = `export failed: ${e instanceof Error ? e.message : String(e)}`;
        return null;
      } finally {
        submit.disabled = !submitEnabled();
      }
    })();
  });

  const line = (label: string, ...controls: (HTMLElement | string)[]): HTMLElement => {
    const p = document.createElement("label");
    p.className = "wizard-line";
    const span = document.createElement("span");
    span.textContent = label;
    p.appendChild(span);
    p.append(...controls);
    return p;
  };

  root.append(
    line("format", format),
    line("detail", detail),
    line("include quizzes", quizzes),
    line("reproducible timestamps", reproducible),
    line("everything", everything),
    line("chosen paths only", chosen),
    pathList,
    submit,
    status,
    download,
  );
  refresh();

  container.textContent = "";
  container.appendChild(root);

  return { root, submitEnabled, currentProfile, settled: () => settledPromise };
}
