// Typed client for the runtime's six /v1 endpoints.  The console talks to
// the service through this module only.

export interface PoseView {
  x: number;
  y: number;
  theta: number;
}

export interface StateView {
  turn_id: number;
  emoji: string;
  palette: string[];
  mode: { kind: string; rate_hz: number };
  action: { name: string; elapsed_s: number };
  pose: PoseView;
  led: { t: number; pixels: string[] };
}

export interface StreamFrame {
  t: number;
  turn_id: number;
  emoji: string;
  pixels: string[];
  pose: PoseView;
}

export interface RespondView {
  turn_id: number;
  emoji: string;
  motion: string;
  palette: string[];
  explanation: string;
  repaired: boolean;
  fell_back: boolean;
  violations: string[];
}

export interface FeedbackAck {
  ok: boolean;
  turn_id: number;
  score: number;
}

export interface HistoryRecord {
  turn_id: number;
  emoji: string;
  user_feedback: number | null;
  [key: string]: unknown;
}

export interface HistoryPage {
  total: number;
  offset: number;
  limit: number;
  records: HistoryRecord[];
}

export interface CatalogView {
  actions: { name: string; description: string; duration_s: number }[];
  affects: { name: string; valence: number; arousal: number }[];
  emoji: { glyph: string; name: string }[];
  strip_len: number;
  fps: number;
  palette_len: { min: number; max: number };
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class Api {
  constructor(readonly base: string) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) {
      let code = "E_HTTP";
      let message = `HTTP ${res.status}`;
      try {
        const body = await res.json();
        if (typeof body.error === "string") code = body.error;
        if (typeof body.message === "string") message = body.message;
      } catch {
        // non-JSON error body; keep the generic code
      }
      throw new ApiError(code, message, res.status);
    }
    return (await res.json()) as T;
  }

  respond(image: Blob | Uint8Array<ArrayBuffer>, sidecar?: string): Promise<RespondView> {
    const headers: Record<string, string> = {
      "Content-Type": "application/octet-stream",
    };
    if (sidecar) headers["X-Sidecar-Label"] = sidecar;
    return this.json<RespondView>("/v1/respond", {
      method: "POST",
      headers,
      body: image,
    });
  }

  state(): Promise<StateView> {
    return this.json<StateView>("/v1/state");
  }

  feedback(turnId: number, score: number): Promise<FeedbackAck> {
    return this.json<FeedbackAck>("/v1/feedback", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ turn_id: turnId, score }),
    });
  }

  history(offset = 0, limit = 50): Promise<HistoryPage> {
    return this.json<HistoryPage>(`/v1/history?offset=${offset}&limit=${limit}`);
  }

  catalogInfo(): Promise<CatalogView> {
    return this.json<CatalogView>("/v1/catalog");
  }

  streamUrl(frames?: number): string {
    const url = `${this.base}/v1/stream`;
    return frames === undefined ? url : `${url}?frames=${frames}`;
  }
}
