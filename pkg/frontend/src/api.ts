/** Thin typed wrapper over the adjudication service's HTTP endpoints. */

export type Label = "spam" | "nonspam" | "unknown";

export interface SampleSpec {
  size: number;
  seed?: number;
  with_replacement?: boolean;
}

export interface Task {
  done: boolean;
  task_id?: string | null;
  doc_id?: string | null;
  topic?: string | null;
  page_url?: string | null;
}

export interface JudgmentBody {
  task_id: string;
  doc_id: string;
  assessor: string;
  label: Label;
  elapsed_ms: number;
  override?: boolean;
}

export interface Progress {
  judged: number;
  remaining: number;
  tallies: Record<string, number>;
  mean_elapsed_ms: number;
}

export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? (fetch.bind(globalThis) as FetchLike);
  }

  private async request<T>(
    path: string,
    init?: { method?: string; body?: unknown },
  ): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: init?.method ?? "GET",
      headers:
        init?.body !== undefined
          ? { "Content-Type": "application/json" }
          : undefined,
      body: init?.body !== undefined ? JSON.stringify(init.body) : undefined,
    });
    if (!response.ok) {
      throw new ApiError(response.status, `${init?.method ?? "GET"} ${path}`);
    }
    return (await response.json()) as T;
  }

  async createSession(spec: SampleSpec): Promise<string> {
    const body = await this.request<{ session_id: string }>("/api/session", {
      method: "POST",
      body: spec,
    });
    return body.session_id;
  }

  nextTask(sessionId: string, assessor: string): Promise<Task> {
    const query = encodeURIComponent(assessor);
    return this.request<Task>(
      `/api/session/${sessionId}/next?assessor=${query}`,
    );
  }

  async submitJudgment(body: JudgmentBody): Promise<void> {
    await this.request<{ ok: boolean }>("/api/judgment", {
      method: "POST",
      body,
    });
  }

  progress(sessionId: string): Promise<Progress> {
    return this.request<Progress>(`/api/session/${sessionId}/progress`);
  }

  pageUrl(task: Task): string | null {
    return task.page_url ? this.baseUrl + task.page_url : null;
  }
}
