/**
 * Typed client for the review service. The UI never computes merge or
 * scoring math itself; every number displayed comes from these calls.
 */

export interface FileEntry {
  source_id: string;
  job_id: string;
  state: "QUEUED" | "RUNNING" | "DONE" | "FAILED";
  domain: string;
  wer: number | null;
  mislabel_rate: number | null;
  flagged_count: number | null;
  error?: string;
}

export interface WirePhrase {
  id: number;
  start: number;
  end: number;
  text: string;
  assigned_speaker: string | null;
  distribution: Record<string, number>;
  overlap_ratios: Record<string, number>;
  llm_choice: string | null;
  confidence: number;
  flagged: boolean;
}

export interface WireConfig {
  llm_weight: number;
  roles: Record<string, string>;
  flag_threshold: number;
  llm_enabled: boolean;
}

export interface EditRecord {
  edit_id: string;
  source_id: string;
  phrase_id: number;
  field: "assigned_speaker" | "text";
  old_value: string | null;
  new_value: string;
  editor: string;
  at: number;
}

export interface MergedDoc {
  source_id: string;
  job_id: string;
  state: string;
  flagged_count: number;
  config: WireConfig;
  phrases: WirePhrase[];
  edits: EditRecord[];
}

export interface ScoreDoc {
  source_id: string;
  domain: string;
  wer: number;
  label_score: number;
  mislabel_rate: number;
  correct: number;
  missed: number;
  hallucinated: number;
  replaced: number;
}

export interface EditRequest {
  phrase_id: number;
  field: "assigned_speaker" | "text";
  new_value: string;
  editor?: string;
}

export interface RerunRequest {
  weight?: number;
  roles?: Record<string, string>;
  flag_threshold?: number;
}

export interface RerunResponse {
  job_id: string;
  existing: boolean;
  /** HTTP status: 202 queued new work, 200 resolved to an existing job. */
  status: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${response.status}`;
}

export class Api {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response;
  }

  async listFiles(): Promise<FileEntry[]> {
    const response = await this.request("/files", { headers: this.headers(false) });
    return (await response.json()) as FileEntry[];
  }

  async getMerged(fileId: string): Promise<MergedDoc> {
    const response = await this.request(
      `/files/${encodeURIComponent(fileId)}/merged`,
      { headers: this.headers(false) },
    );
    return (await response.json()) as MergedDoc;
  }

  async getScore(fileId: string): Promise<ScoreDoc> {
    const response = await this.request(
      `/files/${encodeURIComponent(fileId)}/score`,
      { headers: this.headers(false) },
    );
    return (await response.json()) as ScoreDoc;
  }

  async postEdit(fileId: string, edit: EditRequest): Promise<EditRecord> {
    const response = await this.request(`/files/${encodeURIComponent(fileId)}/edits`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(edit),
    });
    return (await response.json()) as EditRecord;
  }

  async deleteEdit(fileId: string, editId: string): Promise<void> {
    await this.request(
      `/files/${encodeURIComponent(fileId)}/edits/${encodeURIComponent(editId)}`,
      { method: "DELETE", headers: this.headers(false) },
    );
  }

  async postRerun(fileId: string, rerun: RerunRequest): Promise<RerunResponse> {
    const response = await this.request(`/files/${encodeURIComponent(fileId)}/rerun`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(rerun),
    });
    const body = (await response.json()) as { job_id: string; existing: boolean };
    return { ...body, status: response.status };
  }
}
