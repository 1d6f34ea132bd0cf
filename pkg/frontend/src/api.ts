/** Thin fetch client for the session service wire API. */
import type {
  EpisodeDetail, EpisodesPage, InstancesPage, MeasurementDict,
  MetricsSnapshot, PendingQuery, SessionInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(`${status}: ${message}`);
  }
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.json() as Promise<T>;
  }

  listSessions(): Promise<{ sessions: SessionInfo[] }> {
    return this.request("/api/sessions");
  }

  pendingQueries(sid: string): Promise<{ queries: PendingQuery[] }> {
    return this.request(`/api/sessions/${sid}/queries`);
  }

  postMeasurement(sid: string, qid: string, m: MeasurementDict):
      Promise<{ accepted: boolean; query_id: string }> {
    return this.request(`/api/sessions/${sid}/queries/${qid}/measurement`,
                        { method: "POST", body: JSON.stringify(m) });
  }

  postProactive(sid: string, m: MeasurementDict):
      Promise<{ accepted: boolean }> {
    return this.request(`/api/sessions/${sid}/proactive`,
                        { method: "POST", body: JSON.stringify(m) });
  }

  episodes(sid: string, page = 0, pageSize = 20): Promise<EpisodesPage> {
    return this.request(
      `/api/sessions/${sid}/episodes?page=${page}&page_size=${pageSize}`);
  }

  episode(sid: string, eid: string): Promise<EpisodeDetail> {
    return this.request(`/api/sessions/${sid}/episodes/${eid}`);
  }

  metrics(sid: string): Promise<MetricsSnapshot> {
    return this.request(`/api/sessions/${sid}/metrics`);
  }

  instances(sid: string, page = 0, pageSize = 50): Promise<InstancesPage> {
    return this.request(
      `/api/sessions/${sid}/instances?page=${page}&page_size=${pageSize}`);
  }
}
