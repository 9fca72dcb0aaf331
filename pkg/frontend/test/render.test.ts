import { describe, expect, it } from "vitest";

import { LedRing, OledFace, PoseTrace } from "../src/render";

function container(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

describe("LedRing", () => {
  it("builds one dot per pixel, twelve by default", () => {
    const el = container();
    new LedRing(el);
    expect(el.querySelectorAll(".led-dot")).toHaveLength(12);
  });

  it("applies received hex strings verbatim", () => {
    const ring = new LedRing(container(), 3);
    ring.render(["#FF4500", "#ff8c00", "#B22222"]);
    // mixed case survives untouched: no client-side color handling
    expect(ring.colors()).toEqual(["#FF4500", "#ff8c00", "#B22222"]);
  });

  it("darkens dots beyond a short frame", () => {
    const ring = new LedRing(container(), 4);
    ring.render(["#123456"]);
    expect(ring.colors()).toEqual(["#123456", "#000000", "#000000", "#000000"]);
  });

  it("resizes when the strip length changes", () => {
    const el = container();
    const ring = new LedRing(el, 12);
    ring.resize(6);
    expect(el.querySelectorAll(".led-dot")).toHaveLength(6);
    ring.render(["#0A0B0C", "#0D0E0F", "#102030", "#405060", "#708090", "#A0B0C0"]);
    expect(ring.colors()).toHaveLength(6);
  });

  it("puts pixel 0 at twelve o'clock", () => {
    const el = container();
    new LedRing(el, 12);
    const first = el.querySelectorAll<HTMLElement>(".led-dot")[0];
    expect(parseFloat(first.style.left)).toBeCloseTo(50);
    expect(parseFloat(first.style.top)).toBeCloseTo(8);
  });
});

describe("OledFace", () => {
  it("shows the emoji", () => {
    const el = container();
    const face = new OledFace(el);
    face.show("\u{1F628}");
    expect(el.textContent).toBe("\u{1F628}");
  });
});

interface Op {
  op: string;
  args: number[];
  alpha: number;
}

function fakeContext(): { ctx: CanvasRenderingContext2D; ops: Op[] } {
  const ops: Op[] = [];
  const ctx = {
    globalAlpha: 1,
    strokeStyle: "",
    fillStyle: "",
    lineWidth: 0,
    clearRect(...args: number[]) {
      ops.push({ op: "clearRect", args, alpha: this.globalAlpha });
    },
    beginPath() {
      ops.push({ op: "beginPath", args: [], alpha: this.globalAlpha });
    },
    moveTo(...args: number[]) {
      ops.push({ op: "moveTo", args, alpha: this.globalAlpha });
    },
    lineTo(...args: number[]) {
      ops.push({ op: "lineTo", args, alpha: this.globalAlpha });
    },
    stroke() {
      ops.push({ op: "stroke", args: [], alpha: this.globalAlpha });
    },
    arc(...args: number[]) {
      ops.push({ op: "arc", args, alpha: this.globalAlpha });
    },
    fill() {
      ops.push({ op: "fill", args: [], alpha: this.globalAlpha });
    },
  };
  return { ctx: ctx as unknown as CanvasRenderingContext2D, ops };
}

function traceWith(ctx: CanvasRenderingContext2D): PoseTrace {
  const canvas = document.createElement("canvas");
  canvas.width = 240;
  canvas.height = 240;
  (canvas as { getContext: unknown }).getContext = () => ctx;
  return new PoseTrace(canvas);
}

describe("PoseTrace", () => {
  it("projects forward motion upward from the canvas center", () => {
    const { ctx } = fakeContext();
    const trace = traceWith(ctx);
    expect(trace.project({ x: 0, y: 0, theta: 0 })).toEqual([120, 120]);
    expect(trace.project({ x: 0.8, y: 0, theta: 0 })).toEqual([120, 0]);
    expect(trace.project({ x: 0, y: 0.8, theta: 0 })).toEqual([0, 120]);
  });

  it("draws a stationary pose as one dot with a heading arrow", () => {
    const { ctx, ops } = fakeContext();
    const trace = traceWith(ctx);
    trace.push({ x: 0, y: 0, theta: 0 });
    trace.push({ x: 0, y: 0, theta: 0 });
    trace.draw();
    const arcs = ops.filter((o) => o.op === "arc");
    expect(arcs).toHaveLength(1);
    expect(arcs[0].args.slice(0, 2)).toEqual([120, 120]);
    const lines = ops.filter((o) => o.op === "lineTo");
    expect(lines).toHaveLength(1);
    expect(lines[0].args[0]).toBeCloseTo(120);
    expect(lines[0].args[1]).toBeCloseTo(108);
  });

  it("fades older segments", () => {
    const { ctx, ops } = fakeContext();
    const trace = traceWith(ctx);
    for (const x of [0, 0.1, 0.2, 0.3]) trace.push({ x, y: 0, theta: 0 });
    trace.draw();
    const segments = ops.filter((o) => o.op === "stroke").slice(0, 3);
    const alphas = segments.map((o) => o.alpha);
    expect(alphas).toEqual([2 / 4, 3 / 4, 4 / 4]);
  });

  it("keeps the dot fixed while the arrow turns for a spin in place", () => {
    const { ctx, ops } = fakeContext();
    const trace = traceWith(ctx);
    trace.push({ x: 0, y: 0, theta: 0 });
    trace.draw();
    const firstArrow = ops.filter((o) => o.op === "lineTo").pop()!;
    ops.length = 0;
    trace.push({ x: 0, y: 0, theta: Math.PI / 2 });
    trace.draw();
    const arc = ops.filter((o) => o.op === "arc").pop()!;
    const secondArrow = ops.filter((o) => o.op === "lineTo").pop()!;
    expect(arc.args.slice(0, 2)).toEqual([120, 120]);
    expect(secondArrow.args[0]).toBeCloseTo(108);
    expect(secondArrow.args[1]).toBeCloseTo(120);
    expect(secondArrow.args).not.toEqual(firstArrow.args);
  });

  it("caps the trail length", () => {
    const { ctx, ops } = fakeContext();
    const trace = traceWith(ctx);
    for (let i = 0; i < 300; i++) trace.push({ x: i * 0.001, y: 0, theta: 0 });
    trace.draw();
    // 239 trail segments plus the heading arrow
    expect(ops.filter((o) => o.op === "stroke")).toHaveLength(240);
  });

  it("clear() wipes the trail", () => {
    const { ctx, ops } = fakeContext();
    const trace = traceWith(ctx);
    trace.push({ x: 0.1, y: 0.2, theta: 1 });
    trace.clear();
    ops.length = 0;
    trace.draw();
    expect(ops.filter((o) => o.op === "arc")).toHaveLength(0);
  });

  it("survives a canvas without 2d support", () => {
    const canvas = document.createElement("canvas");
    (canvas as { getContext: unknown }).getContext = () => null;
    const trace = new PoseTrace(canvas);
    trace.push({ x: 0, y: 0, theta: 0 });
    trace.draw();
  });
});
