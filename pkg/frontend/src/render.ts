// The robot mock: LED ring, OLED face, and a top-down motion trace.
// Everything here draws exactly what the service sent; no affect logic and
// no color math on the client.

import { PoseView } from "./api";

export class LedRing {
  private dots: HTMLElement[] = [];

  constructor(private container: HTMLElement, stripLen = 12) {
    this.resize(stripLen);
  }

  // Pixel 0 sits at 12 o'clock; indices run clockwise around the casing.
  resize(stripLen: number): void {
    this.container.textContent = "";
    this.dots = [];
    for (let i = 0; i < stripLen; i++) {
      const dot = document.createElement("div");
      dot.className = "led-dot";
      const angle = (2 * Math.PI * i) / stripLen - Math.PI / 2;
      dot.style.left = `${50 + 42 * Math.cos(angle)}%`;
      dot.style.top = `${50 + 42 * Math.sin(angle)}%`;
      this.container.appendChild(dot);
      this.dots.push(dot);
    }
  }

  render(pixels: string[]): void {
    // Hex strings are applied untouched; data-color keeps the exact value
    // inspectable even after the style engine normalizes it.
    this.dots.forEach((dot, i) => {
      const hex = pixels[i] ?? "#000000";
      dot.style.backgroundColor = hex;
      dot.dataset.color = hex;
    });
  }

  colors(): string[] {
    return this.dots.map((dot) => dot.dataset.color ?? "");
  }
}

export class OledFace {
  constructor(private el: HTMLElement) {}

  show(emoji: string): void {
    this.el.textContent = emoji;
  }
}

interface TracePoint {
  x: number;
  y: number;
  theta: number;
}

const TRACE_CAP = 240;
const METERS_ACROSS = 1.6;

export class PoseTrace {
  private ctx: CanvasRenderingContext2D | null;
  private points: TracePoint[] = [];

  constructor(private canvas: HTMLCanvasElement) {
    this.ctx = canvas.getContext("2d");
  }

  push(pose: PoseView): void {
    const last = this.points[this.points.length - 1];
    if (last && last.x === pose.x && last.y === pose.y && last.theta === pose.theta) {
      return;
    }
    this.points.push({ x: pose.x, y: pose.y, theta: pose.theta });
    if (this.points.length > TRACE_CAP) this.points.shift();
  }

  clear(): void {
    this.points = [];
    this.draw();
  }

  // Top-down view: robot +x is up on screen, +y is left, theta CCW.
  project(p: TracePoint): [number, number] {
    const scale = this.canvas.width / METERS_ACROSS;
    return [
      this.canvas.width / 2 - p.y * scale,
      this.canvas.height / 2 - p.x * scale,
    ];
  }

  draw(): void {
    const ctx = this.ctx;
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const n = this.points.length;
    if (n === 0) return;
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#5ad1ff";
    for (let i = 1; i < n; i++) {
      const [x0, y0] = this.project(this.points[i - 1]);
      const [x1, y1] = this.project(this.points[i]);
      ctx.globalAlpha = (i + 1) / n;
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
    }
    const head = this.points[n - 1];
    const [cx, cy] = this.project(head);
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#e8f6ff";
    ctx.beginPath();
    ctx.arc(cx, cy, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = "#e8f6ff";
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx - Math.sin(head.theta) * 12, cy - Math.cos(head.theta) * 12);
    ctx.stroke();
  }
}
