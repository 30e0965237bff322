/** Thin typed client for the annotation server's HTTP+JSON API. */

import type {
  ConsolidatedView,
  ContextGroupEntry,
  LeasedTask,
  LexicalGroupView,
  Payload,
  Schema,
  SearchResponse,
  TaskView,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(body)}`);
  }
}

/** Subset of fetch the client needs; tests inject a fake. */
export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    const parsed: unknown = text ? JSON.parse(text) : null;
    if (!response.ok) throw new ApiError(response.status, parsed);
    return parsed as T;
  }

  getJob(jobId: string): Promise<{ id: string; dataset_id: string; schema_id: string }> {
    return this.request('GET', `/jobs/${jobId}`);
  }

  nextTask(jobId: string): Promise<LeasedTask> {
    return this.request('POST', `/jobs/${jobId}/tasks/next`);
  }

  myTasks(jobId: string): Promise<{ tasks: TaskView[] }> {
    return this.request('GET', `/jobs/${jobId}/tasks/mine`);
  }

  leaseTask(taskId: string): Promise<{ task: TaskView }> {
    return this.request('POST', `/tasks/${taskId}/lease`);
  }

  getTask(taskId: string): Promise<LeasedTask> {
    return this.request('GET', `/tasks/${taskId}`);
  }

  submitTask(
    taskId: string,
    payloads: Payload[],
    acceptedPreannotations: string[],
    rejectedPreannotations: string[],
  ): Promise<{ task_id: string; event_ids: string[] }> {
    return this.request('POST', `/tasks/${taskId}/submit`, {
      payloads,
      accepted_preannotations: acceptedPreannotations,
      rejected_preannotations: rejectedPreannotations,
    });
  }

  getSchema(schemaId: string): Promise<Schema> {
    return this.request('GET', `/schemas/${schemaId}`);
  }

  exampleContext(datasetId: string, exampleId: string): Promise<{ group: ContextGroupEntry[] }> {
    return this.request('GET', `/datasets/${datasetId}/examples/${exampleId}/context`);
  }

  search(
    datasetId: string,
    query: string,
    options: { regex?: boolean; caseSensitive?: boolean; limit?: number; offset?: number } = {},
  ): Promise<SearchResponse> {
    const params = new URLSearchParams({
      q: query,
      regex: String(options.regex ?? true),
      case_sensitive: String(options.caseSensitive ?? false),
      limit: String(options.limit ?? 50),
      offset: String(options.offset ?? 0),
    });
    return this.request('GET', `/datasets/${datasetId}/search?${params}`);
  }

  reviewExample(jobId: string, exampleId: string, scope = 'all'): Promise<ConsolidatedView> {
    return this.request('GET', `/jobs/${jobId}/review/${exampleId}?scope=${scope}`);
  }

  acceptIdeal(
    idealId: string,
    jobId: string,
  ): Promise<{ judgment: { ideal_id: string; verdict: string }; transitive_rejections: string[] }> {
    return this.request('POST', `/ideals/${idealId}/accept`, { job_id: jobId });
  }

  rejectIdeal(idealId: string, jobId: string): Promise<{ judgment: { verdict: string } }> {
    return this.request('POST', `/ideals/${idealId}/reject`, { job_id: jobId });
  }

  batchAccept(jobId: string, threshold: number): Promise<{ accepted: number }> {
    return this.request('POST', `/jobs/${jobId}/batch-accept`, { threshold });
  }

  lexicalGroups(jobId: string, scope = 'all'): Promise<{ groups: LexicalGroupView[] }> {
    return this.request('GET', `/jobs/${jobId}/lexical-groups?scope=${scope}`);
  }

  reviewLexicalGroup(
    jobId: string,
    surface: string,
    tag: string,
    verdict: 'accepted' | 'rejected',
  ): Promise<{ judgments: number }> {
    return this.request('POST', `/jobs/${jobId}/lexical-groups/review`, {
      surface,
      tag,
      verdict,
      scope: 'all',
    });
  }
}
