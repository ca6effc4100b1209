/**
 * Typed client for the review API. All server state flows through here;
 * the UI never invents labels or mutates anything client-side.
 */

export interface TaxonomyNode {
  code: string;
  name: string;
  level: "primary" | "secondary" | "tertiary";
  parent: string | null;
  description: string;
}

export interface RunSummary {
  run_id: string;
  created_at: string;
  record_count: number;
}

export interface FailureSummary {
  sample_key: string;
  task_id: string;
  model_id: string;
  iteration: number;
  task_excerpt: string;
  label_path: string | null;
  primary: string | null;
  suggestion_rationale: string | null;
  confidence: number | null;
  review_count: number;
  disagreement: boolean;
  finalized: boolean;
}

export interface FailurePage {
  items: FailureSummary[];
  total: number;
  page: number;
  page_size: number;
}

export interface LabelState {
  label_path: string | null;
  provenance: string | null;
  confidence: number | null;
  version: number;
  review_count: number;
  reviewers: string[];
  disagreement: boolean;
  finalized: boolean;
}

export interface LabelEvent {
  version: number;
  label_path: string;
  reviewer_id: string;
  note: string | null;
  suggestions_revealed: boolean | null;
  created_at: string;
}

export interface RootCause {
  summary: string;
  explanation: string;
  placeholder: boolean;
}

export interface TestVerdict {
  test_id: string;
  verdict: string;
}

export interface SampleDetail {
  sample_key: string;
  task_id: string;
  model_id: string;
  iteration: number;
  task_excerpt: string;
  code: string;
  overall: string | null;
  per_test: TestVerdict[];
  diagnostics: string;
  stdout: string;
  metrics: Record<string, number | null> | null;
  suggestion_rationale: string | null;
  root_causes: RootCause[] | null;
  state: LabelState;
  history: LabelEvent[];
}

export interface Disagreement {
  sample_key: string;
  task_id: string;
  model_id: string;
  iteration: number;
  conflicting_paths: string[];
  reviewers: string[];
}

export interface LabelSubmission {
  label_path: string;
  reviewer_id: string;
  base_version: number;
  note?: string | null;
  suggestions_revealed?: boolean | null;
}

export interface FailureFilters {
  primary?: string;
  secondary?: string;
  model?: string;
  unreviewedOnly?: boolean;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class VersionConflictError extends ApiError {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async getTaxonomy(): Promise<TaxonomyNode[]> {
    return this.getJson("/taxonomy");
  }

  async listRuns(): Promise<RunSummary[]> {
    return this.getJson("/runs");
  }

  async listFailures(
    runId: string,
    filters: FailureFilters = {},
    page = 1,
    pageSize = 50,
  ): Promise<FailurePage> {
    const params = new URLSearchParams();
    if (filters.primary) params.set("primary", filters.primary);
    if (filters.secondary) params.set("secondary", filters.secondary);
    if (filters.model) params.set("model", filters.model);
    if (filters.unreviewedOnly) params.set("unreviewed_only", "true");
    params.set("page", String(page));
    params.set("page_size", String(pageSize));
    return this.getJson(`/runs/${encodeURIComponent(runId)}/failures?${params}`);
  }

  async getSample(sampleKey: string): Promise<SampleDetail> {
    return this.getJson(`/samples/${sampleKey}`);
  }

  async getLabelHistory(sampleKey: string): Promise<LabelEvent[]> {
    return this.getJson(`/samples/${sampleKey}/labels`);
  }

  async postLabel(
    sampleKey: string,
    submission: LabelSubmission,
    reviewerToken?: string,
  ): Promise<LabelState> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (reviewerToken) headers["X-Reviewer-Token"] = reviewerToken;
    const response = await this.fetchFn(`${this.baseUrl}/samples/${sampleKey}/labels`, {
      method: "POST",
      headers,
      body: JSON.stringify(submission),
    });
    return this.decode(response);
  }

  async getDisagreements(runId: string): Promise<Disagreement[]> {
    return this.getJson(`/runs/${encodeURIComponent(runId)}/disagreements`);
  }

  async getExport(runId: string): Promise<string> {
    const response = await this.fetchFn(
      `${this.baseUrl}/runs/${encodeURIComponent(runId)}/export`,
    );
    if (!response.ok) await this.raise(response);
    return response.text();
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    return this.decode(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    if (!response.ok) await this.raise(response);
    return (await response.json()) as T;
  }

  private async raise(response: Response): Promise<never> {
    let code = "http_error";
    let message = `HTTP ${response.status}`;
    try {
      const body = await response.json();
      if (body?.error) {
        code = body.error.code ?? code;
        message = body.error.message ?? message;
      }
    } catch {
      /* non-JSON error body; keep the generic message */
    }
    if (code === "version_conflict") {
      throw new VersionConflictError(response.status, code, message);
    }
    throw new ApiError(response.status, code, message);
  }
}
