// Typed client for the curation service. Every state-changing request
// carries an If-Match version header; the compiler enforces it here so
// no mutation can be issued without one.

export interface SchemaNodeWire {
  name: string;
  kind: "atomic" | "composite" | "resource-ref" | "link" | "quiz";
  multiplicity: "one" | "optional" | "many";
  children?: SchemaNodeWire[];
}

export interface SchemaResponse {
  version: number;
  element_types: number;
  schema: { version: number; root: SchemaNodeWire };
}

export interface CollectionInfo {
  id: string;
  version: number;
  documents: number;
  resources: number;
  annotations?: number;
  element_types?: number;
}

export interface DocSummary {
  id: string;
  title: string;
}

export interface DocumentListing {
  version: number;
  total: number;
  page: number;
  pages: number;
  documents: DocSummary[];
}

export interface InstanceWire {
  name: string;
  text?: string;
  resource?: string;
  link?: { kind: string; value: string };
  quiz?: { stem: string; choices: string[]; correct_index: number; explanation: string };
  children?: InstanceWire[];
}

export interface DocumentResponse {
  version: number;
  document: { id: string; origin: { plugin: string; locator: string }; root: InstanceWire };
}

export interface ResourceWire {
  id: string;
  kind: "local-file" | "external-url";
  media_type: string;
  locator: string;
  byte_size: number;
}

export interface AnnotationWire {
  id: string;
  resource_id: string;
  x: number;
  y: number;
  w: number;
  h: number;
  comment: string;
  author: string;
}

export interface OutcomeWire {
  index: number;
  op: string;
  ok: boolean;
  error: string | null;
}

export interface OpsResponse {
  version: number;
  applied: number;
  outcomes: OutcomeWire[];
}

export interface ExportJobWire {
  job: string;
  state: "queued" | "running" | "done" | "failed";
  bytes?: number;
  error?: string;
  profile?: Record<string, unknown>;
}

export interface ExportProfileWire {
  format: "imscp" | "scorm12";
  selection?: string[];
  summary_paths?: string[];
  document_filter?: string[];
  detail?: "full" | "summary";
  include_quizzes?: boolean;
  fixed_epoch?: number;
  title?: string;
}

// One reshaping or editing operation, encoded the way POST …/schema/ops
// and PATCH …/documents accept them.
export type EncodedOp =
  | { op: "rename"; path: string; new_name: string }
  | { op: "remove"; path: string }
  | { op: "merge"; source: string; target: string; new_name?: string }
  | { op: "move"; path: string; new_parent: string; index?: number }
  | { op: "group"; paths: string[]; new_name: string }
  | { op: "set"; doc_id: string; instance_path: string; text: string }
  | { op: "link"; doc_id: string; parent: string; target: { kind: string; value: string } }
  | {
      op: "insert";
      doc_id: string;
      parent: string;
      type_path: string;
      payload: { kind: "text"; text: string };
    };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly rule: string,
    message: string,
    readonly body: Record<string, unknown>,
  ) {
    super(message);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function asApiError(res: Response): Promise<ApiError> {
  let body: Record<string, unknown> = {};
  try {
    body = (await res.json()) as Record<string, unknown>;
  } catch {
    // non-JSON error body; keep the empty object
  }
  const rule = typeof body.error === "string" ? body.error : `http-${res.status}`;
  const message = typeof body.message === "string" ? body.message : res.statusText;
  return new ApiError(res.status, rule, message, body);
}

export class ServiceClient {
  constructor(
    readonly base: string,
    readonly collectionId: string,
  ) {}

  private url(suffix: string): string {
    return `${this.base}/collections/${this.collectionId}${suffix}`;
  }

  private async send(
    method: string,
    suffix: string,
    opts: { json?: unknown; text?: string; ifMatch?: number } = {},
  ): Promise<unknown> {
    const headers: Record<string, string> = {};
    let body: string | undefined;
    if (opts.text !== undefined) {
      headers["Content-Type"] = "text/plain; charset=utf-8";
      body = opts.text;
    } else if (opts.json !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(opts.json);
    }
    if (opts.ifMatch !== undefined) headers["If-Match"] = String(opts.ifMatch);
    const res = await fetch(this.url(suffix), { method, headers, body });
    if (!res.ok) throw await asApiError(res);
    return res.json();
  }

  getInfo(): Promise<CollectionInfo> {
    return this.send("GET", "") as Promise<CollectionInfo>;
  }

  getSchema(): Promise<SchemaResponse> {
    return this.send("GET", "/schema") as Promise<SchemaResponse>;
  }

  postSchemaOps(ops: EncodedOp[], ifMatch: number): Promise<OpsResponse> {
    return this.send("POST", "/schema/ops", { json: { ops }, ifMatch }) as Promise<OpsResponse>;
  }

  postSchemaScript(script: string, ifMatch: number): Promise<OpsResponse> {
    return this.send("POST", "/schema/ops", { text: script, ifMatch }) as Promise<OpsResponse>;
  }

  listDocuments(page = 1, pageSize = 50): Promise<DocumentListing> {
    return this.send("GET", `/documents?page=${page}&page_size=${pageSize}`) as Promise<DocumentListing>;
  }

  getDocument(docId: string): Promise<DocumentResponse> {
    return this.send("GET", `/documents/${encodeURIComponent(docId)}`) as Promise<DocumentResponse>;
  }

  patchDocument(docId: string, ops: EncodedOp[], ifMatch: number): Promise<DocumentResponse & { applied: number }> {
    return this.send("PATCH", `/documents/${encodeURIComponent(docId)}`, {
      json: { ops },
      ifMatch,
    }) as Promise<DocumentResponse & { applied: number }>;
  }

  listResources(): Promise<{ version: number; resources: ResourceWire[] }> {
    return this.send("GET", "/resources") as Promise<{ version: number; resources: ResourceWire[] }>;
  }

  resourceContentUrl(resourceId: string): string {
    return this.url(`/resources/${encodeURIComponent(resourceId)}/content`);
  }

  listAnnotations(resourceId?: string): Promise<{ version: number; annotations: AnnotationWire[] }> {
    const query = resourceId ? `?resource=${encodeURIComponent(resourceId)}` : "";
    return this.send("GET", `/annotations${query}`) as Promise<{
      version: number;
      annotations: AnnotationWire[];
    }>;
  }

  postAnnotation(
    a: { resource_id: string; x: number; y: number; w: number; h: number; comment: string; author?: string },
    ifMatch: number,
  ): Promise<{ annotation: string; created: boolean; version: number }> {
    return this.send("POST", "/annotations", { json: a, ifMatch }) as Promise<{
      annotation: string;
      created: boolean;
      version: number;
    }>;
  }

  startExport(profile: ExportProfileWire): Promise<{ job: string; state: string }> {
    return this.send("POST", "/exports", { json: profile }) as Promise<{ job: string; state: string }>;
  }

  getExportJob(jobId: string): Promise<ExportJobWire> {
    return this.send("GET", `/exports/${jobId}`) as Promise<ExportJobWire>;
  }

  artifactUrl(jobId: string): string {
    return this.url(`/exports/${jobId}/artifact`);
  }

  async getLog(): Promise<{ text: string; version: number }> {
    const res = await fetch(this.url("/log"));
    if (!res.ok) throw await asApiError(res);
    return {
      text: await res.text(),
      version: Number(res.headers.get("X-Collection-Version") ?? "0"),
    };
  }
}

export async function listCollections(base: string): Promise<CollectionInfo[]> {
  const res = await fetch(`${base}/collections`);
  if (!res.ok) throw await asApiError(res);
  const body = (await res.json()) as { collections: CollectionInfo[] };
  return body.collections;
}

export async function createCollection(base: string, root?: string): Promise<{ id: string; version: number }> {
  const query = root ? `?root=${encodeURIComponent(root)}` : "";
  const res = await fetch(`${base}/collections${query}`, { method: "POST" });
  if (!res.ok) throw await asApiError(res);
  return res.json() as Promise<{ id: string; version: number }>;
}
