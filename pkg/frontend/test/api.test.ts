import { IncomingMessage, Server, ServerResponse, createServer } from "node:http";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api, ApiError } from "../src/api";
import { close, listen, pngBytes } from "./util";

interface Seen {
  method: string;
  path: string;
  headers: NodeJS.Dict<string | string[]>;
  body: Buffer;
}

const seen: Seen[] = [];
let server: Server;
let api: Api;

function reply(res: ServerResponse, status: number, payload: unknown): void {
  res.writeHead(status, { "Content-Type": "application/json" });
  res.end(JSON.stringify(payload));
}

function route(req: IncomingMessage, res: ServerResponse, body: Buffer): void {
  const path = req.url ?? "";
  if (path === "/v1/respond") {
    if (req.headers["x-sidecar-label"] === "boredom") {
      reply(res, 400, { error: "E_BAD_LABEL", message: "unknown affect" });
      return;
    }
    reply(res, 200, {
      turn_id: 1,
      emoji: "\u{1F631}",
      motion: "tremble",
      palette: ["#FF4500", "#FF8C00", "#B22222"],
      explanation: "scripted",
      repaired: false,
      fell_back: false,
      violations: [],
    });
  } else if (path === "/v1/state") {
    reply(res, 200, { turn_id: 1, emoji: "\u{1F610}" });
  } else if (path === "/v1/feedback") {
    const parsed = JSON.parse(body.toString());
    if (parsed.turn_id === 99) {
      reply(res, 404, { error: "E_UNKNOWN_TURN", message: "no turn 99" });
      return;
    }
    reply(res, 200, { ok: true, turn_id: parsed.turn_id, score: parsed.score });
  } else if (path.startsWith("/v1/history")) {
    reply(res, 200, { total: 0, offset: 0, limit: 50, records: [] });
  } else if (path === "/v1/catalog") {
    reply(res, 200, { strip_len: 12, fps: 20 });
  } else {
    res.writeHead(404);
    res.end();
  }
}

beforeAll(async () => {
  server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      const body = Buffer.concat(chunks);
      seen.push({
        method: req.method ?? "",
        path: req.url ?? "",
        headers: req.headers,
        body,
      });
      route(req, res, body);
    });
  });
  api = new Api(await listen(server));
});

afterAll(async () => {
  await close(server);
});

describe("respond", () => {
  it("posts the raw image bytes with the sidecar header", async () => {
    const image = pngBytes();
    const view = await api.respond(image, "fear");
    expect(view.emoji).toBe("\u{1F631}");
    expect(view.palette).toEqual(["#FF4500", "#FF8C00", "#B22222"]);
    const last = seen[seen.length - 1];
    expect(last.method).toBe("POST");
    expect(last.body.length).toBe(image.length);
    expect(last.headers["x-sidecar-label"]).toBe("fear");
    expect(last.headers["content-type"]).toBe("application/octet-stream");
  });

  it("omits the header when no sidecar is given", async () => {
    await api.respond(pngBytes());
    expect(seen[seen.length - 1].headers["x-sidecar-label"]).toBeUndefined();
  });

  it("maps service errors to ApiError with the service code", async () => {
    await expect(api.respond(pngBytes(), "boredom")).rejects.toMatchObject({
      name: "ApiError",
      code: "E_BAD_LABEL",
      status: 400,
    });
  });
});

describe("other endpoints", () => {
  it("fetches state", async () => {
    expect((await api.state()).turn_id).toBe(1);
  });

  it("posts feedback and surfaces unknown turns", async () => {
    const ack = await api.feedback(3, -1);
    expect(ack).toEqual({ ok: true, turn_id: 3, score: -1 });
    await expect(api.feedback(99, 1)).rejects.toMatchObject({
      code: "E_UNKNOWN_TURN",
      status: 404,
    });
  });

  it("pages history through query parameters", async () => {
    await api.history(5, 7);
    expect(seen[seen.length - 1].path).toBe("/v1/history?offset=5&limit=7");
  });

  it("reads the catalog", async () => {
    expect((await api.catalogInfo()).strip_len).toBe(12);
  });

  it("builds stream URLs", () => {
    expect(api.streamUrl()).toBe(`${api.base}/v1/stream`);
    expect(api.streamUrl(3)).toBe(`${api.base}/v1/stream?frames=3`);
  });
});

describe("error shapes", () => {
  it("falls back to E_HTTP when the error body is not JSON", async () => {
    const broken = createServer((_req, res) => {
      res.writeHead(500, { "Content-Type": "text/plain" });
      res.end("boom");
    });
    const other = new Api(await listen(broken));
    try {
      await expect(other.state()).rejects.toMatchObject({ code: "E_HTTP", status: 500 });
    } finally {
      await close(broken);
    }
  });
});

describe("endpoint discipline", () => {
  it("talks to documented /v1 paths only", () => {
    const allowed = /^\/v1\/(respond|state|stream|feedback|history|catalog)(\?|$)/;
    for (const request of seen) {
      expect(request.path).toMatch(allowed);
    }
  });

  it("ApiError keeps code, message and status", () => {
    const err = new ApiError("E_X", "nope", 418);
    expect(err.message).toBe("nope");
    expect(err.code).toBe("E_X");
    expect(err.status).toBe(418);
  });
});
