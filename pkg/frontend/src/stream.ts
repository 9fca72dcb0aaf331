import { StreamFrame } from "./api";

export type StreamStatus = "connecting" | "open" | "retrying" | "closed";

export interface StreamHandlers {
  onFrame: (frame: StreamFrame) => void;
  onStatus?: (status: StreamStatus) => void;
}

// Consumes /v1/stream server-sent events over fetch.  EventSource would hide
// the reconnect policy (and is missing from some embedders), so the framing
// is parsed by hand: "data: <json>" lines, blank line ends an event.
export class StreamClient {
  connects = 0;
  private stopped = false;
  private running = false;
  private controller: AbortController | null = null;

  constructor(
    private url: string,
    private handlers: StreamHandlers,
    private backoffBaseMs = 500,
    private backoffMaxMs = 8000,
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    this.setStatus("closed");
  }

  private setStatus(status: StreamStatus): void {
    this.handlers.onStatus?.(status);
  }

  private async loop(): Promise<void> {
    let attempt = 0;
    while (!this.stopped) {
      this.setStatus(attempt === 0 ? "connecting" : "retrying");
      try {
        const frames = await this.consume();
        if (frames > 0) attempt = 0;
      } catch {
        // connection refused, reset mid-stream, or bad payload; back off
      }
      if (this.stopped) break;
      const delay = Math.min(this.backoffBaseMs * 2 ** attempt, this.backoffMaxMs);
      attempt += 1;
      await sleep(delay);
    }
    this.running = false;
  }

  private async consume(): Promise<number> {
    this.controller = new AbortController();
    const res = await fetch(this.url, {
      signal: this.controller.signal,
      headers: { Accept: "text/event-stream" },
    });
    if (!res.ok || !res.body) throw new Error(`stream HTTP ${res.status}`);
    this.connects += 1;
    this.setStatus("open");
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let data = "";
    let seen = 0;
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).replace(/\r$/, "");
        buffer = buffer.slice(nl + 1);
        if (line.startsWith("data:")) {
          data += line.slice(5).trimStart();
        } else if (line === "" && data !== "") {
          this.handlers.onFrame(JSON.parse(data) as StreamFrame);
          seen += 1;
          data = "";
        }
      }
    }
    return seen;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
