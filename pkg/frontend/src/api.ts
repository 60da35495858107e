/** Typed client for the arena server's REST API. The client never simulates
 * anything itself: every frame it shows comes from the server. */

export interface FrameView {
  width: number;
  height: number;
  cells: [number, number, string][]; // (x, y, color token)
  score: number;
  step: number;
  status: string;
}

export interface StepRecord {
  level: number;
  episode: number;
  step: number;
  observation: string;
  action: string;
  rationale: string | null;
  reasoning_chars: number;
  score_after: number;
  status_after: string;
  digest: number;
}

export interface EpisodeSummary {
  level: number;
  episode: number;
  outcome: string;
  steps: number;
  final_score: number;
}

export interface Replay {
  header: Record<string, unknown>;
  steps: StepRecord[];
  episodes: EpisodeSummary[];
  aborted: string | null;
}

export interface CatalogueEntry {
  trace_id: string;
  agent: string;
  game: string;
  seed: number;
  steps: number;
  wins: number;
  losses: number;
  aborted: boolean;
}

export interface SessionOpened {
  session_id: string;
  frame: FrameView;
}

export interface ApiErrorDetail {
  message: string;
  line?: number;
  col?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: ApiErrorDetail,
  ) {
    super(detail.message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ArenaApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let detail: ApiErrorDetail = { message: res.statusText };
      try {
        const body = await res.json();
        detail = typeof body.detail === "string" ? { message: body.detail } : body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async bundles(): Promise<string[]> {
    return (await this.request<{ bundles: string[] }>("/bundles")).bundles;
  }

  async bundleDescription(name: string): Promise<string> {
    const body = await this.request<{ description: string }>(
      `/bundles/${encodeURIComponent(name)}/description`,
    );
    return body.description;
  }

  async createSession(req: {
    bundle: string;
    level?: number;
    seed?: number;
    description?: string;
    layout?: string;
    owner?: string;
  }): Promise<SessionOpened> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  async postAction(sessionId: string, action: string): Promise<FrameView> {
    const body = await this.request<{ frame: FrameView }>(
      `/sessions/${encodeURIComponent(sessionId)}/action`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ action }),
      },
    );
    return body.frame;
  }

  async closeSession(sessionId: string): Promise<void> {
    await this.request(`/sessions/${encodeURIComponent(sessionId)}`, { method: "DELETE" });
  }

  async replays(filter?: { game?: string; agent?: string }): Promise<CatalogueEntry[]> {
    const params = new URLSearchParams();
    if (filter?.game) params.set("game", filter.game);
    if (filter?.agent) params.set("agent", filter.agent);
    const qs = params.toString();
    const body = await this.request<{ replays: CatalogueEntry[] }>(
      "/replays" + (qs ? `?${qs}` : ""),
    );
    return body.replays;
  }

  async replay(traceId: string): Promise<Replay> {
    return this.request(`/replays/${encodeURIComponent(traceId)}`);
  }

  async replayFrame(traceId: string, step: number): Promise<FrameView> {
    const body = await this.request<{ frame: FrameView }>(
      `/replays/${encodeURIComponent(traceId)}/frame/${step}`,
    );
    return body.frame;
  }

  /** ws:// URL for a session's live socket. */
  liveUrl(sessionId: string): string {
    return (
      this.baseUrl.replace(/^http/, "ws") + `/sessions/${encodeURIComponent(sessionId)}/live`
    );
  }
}
