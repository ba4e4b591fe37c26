/** Typed client for the annotation HTTP API (everything under /api/). */

export interface SpanRange {
  start: number;
  end: number;
  surface: string;
}

export interface ReviewInstance {
  instance_id: string;
  text: string;
  marked_text: string;
  e1: SpanRange;
  e2: SpanRange;
  auto_label: string;
  person_slot: "e1" | "e2";
  strategy: string;
  article: { wiki_id: string; title: string; person: string };
  labels: string[];
  error_flag: string;
}

export interface QueueResponse {
  total: number;
  done: number;
  remaining: number;
  instance?: ReviewInstance;
}

export interface Decision {
  instance_id: string;
  annotator: string;
  decision: string;
}

export interface DecisionAck extends Decision {
  timestamp: string;
  version: number;
}

export interface ProgressResponse {
  total: number;
  per_annotator: Record<string, number>;
  doubly_annotated: number;
}

export interface KappaResponse {
  kappa: number | null;
  observed_agreement?: number;
  expected_agreement?: number;
  n: number;
  annotators?: string[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`API ${status}: ${detail}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* body was not JSON; keep the status text */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  nextInstance(annotator: string): Promise<QueueResponse> {
    const query = new URLSearchParams({ annotator });
    return fetch(this.url(`/api/queue/next?${query}`)).then((r) =>
      parseOrThrow<QueueResponse>(r),
    );
  }

  submitDecision(decision: Decision): Promise<DecisionAck> {
    return fetch(this.url("/api/labels"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    }).then((r) => parseOrThrow<DecisionAck>(r));
  }

  progress(): Promise<ProgressResponse> {
    return fetch(this.url("/api/progress")).then((r) => parseOrThrow<ProgressResponse>(r));
  }

  kappa(): Promise<KappaResponse> {
    return fetch(this.url("/api/kappa")).then((r) => parseOrThrow<KappaResponse>(r));
  }

  async exportGold(): Promise<string> {
    const response = await fetch(this.url("/api/export?mode=gold"));
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    return response.text();
  }

  exportDisagreements(): Promise<Array<{ instance_id: string }>> {
    return fetch(this.url("/api/export?mode=disagreements")).then((r) =>
      parseOrThrow<Array<{ instance_id: string }>>(r),
    );
  }
}
