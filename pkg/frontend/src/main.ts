import { Api, ApiError, StreamFrame } from "./api";
import { LedRing, OledFace, PoseTrace } from "./render";
import { StreamClient, StreamStatus } from "./stream";

function mustGet<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function defaultBase(): string {
  const proto = window.location.protocol;
  if (proto === "http:" || proto === "https:") return window.location.origin;
  return "http://127.0.0.1:8400";
}

function init(): void {
  const serviceInput = mustGet<HTMLInputElement>("service");
  const statusEl = mustGet("status");
  const video = mustGet<HTMLVideoElement>("video");
  const cameraBtn = mustGet<HTMLButtonElement>("start-camera");
  const sendBtn = mustGet<HTMLButtonElement>("send-frame");
  const autoCheck = mustGet<HTMLInputElement>("auto");
  const periodInput = mustGet<HTMLInputElement>("auto-period");
  const fileInput = mustGet<HTMLInputElement>("file");
  const sidecarSel = mustGet<HTMLSelectElement>("sidecar");
  const turnEl = mustGet("turn");
  const explanationEl = mustGet("explanation");
  const toasts = mustGet("toasts");

  const ring = new LedRing(mustGet("ring"));
  const face = new OledFace(mustGet("face"));
  const trace = new PoseTrace(mustGet<HTMLCanvasElement>("trace"));

  let api = new Api(defaultBase());
  serviceInput.value = api.base;
  let stream: StreamClient | null = null;
  let currentTurn: number | null = null;
  let cameraOn = false;
  let autoTimer: number | null = null;
  let latest: StreamFrame | null = null;
  let drawn: StreamFrame | null = null;

  function toast(text: string): void {
    const el = document.createElement("div");
    el.className = "toast";
    el.textContent = text;
    toasts.appendChild(el);
    setTimeout(() => el.remove(), 4000);
  }

  function fail(err: unknown): void {
    if (err instanceof ApiError) toast(`${err.code}: ${err.message}`);
    else toast(String(err));
  }

  function ensureStream(): void {
    if (stream) return;
    stream = new StreamClient(api.streamUrl(), {
      onFrame: (frame) => {
        latest = frame;
      },
      onStatus: (status: StreamStatus) => {
        statusEl.textContent = status;
        statusEl.className = `status ${status}`;
      },
    });
    stream.start();
  }

  // All visual updates land here, once per animation frame.
  function tick(): void {
    if (latest && latest !== drawn) {
      ring.render(latest.pixels);
      face.show(latest.emoji);
      trace.push(latest.pose);
      trace.draw();
      drawn = latest;
    }
    requestAnimationFrame(tick);
  }
  requestAnimationFrame(tick);

  async function boot(): Promise<void> {
    try {
      const cat = await api.catalogInfo();
      ring.resize(cat.strip_len);
      const state = await api.state();
      ring.render(state.led.pixels);
      face.show(state.emoji);
      trace.push(state.pose);
      trace.draw();
      statusEl.textContent = "connected";
    } catch (err) {
      statusEl.textContent = "unreachable";
      fail(err);
    }
  }

  async function send(image: Blob | Uint8Array<ArrayBuffer>): Promise<void> {
    sendBtn.disabled = true;
    try {
      const resp = await api.respond(image, sidecarSel.value || undefined);
      currentTurn = resp.turn_id;
      const note = resp.fell_back ? " (fallback)" : resp.repaired ? " (repaired)" : "";
      turnEl.textContent = `turn ${resp.turn_id}${note}`;
      face.show(resp.emoji);
      explanationEl.textContent = resp.explanation;
      ensureStream();
    } catch (err) {
      fail(err);
    } finally {
      sendBtn.disabled = !cameraOn;
    }
  }

  async function startCamera(): Promise<void> {
    if (!navigator.mediaDevices?.getUserMedia) {
      toast("no camera available here; use upload");
      return;
    }
    try {
      video.srcObject = await navigator.mediaDevices.getUserMedia({ video: true });
      cameraOn = true;
      sendBtn.disabled = false;
      video.classList.add("on");
    } catch (err) {
      fail(err);
    }
  }

  function grabFrame(): Promise<Blob> {
    const canvas = document.createElement("canvas");
    canvas.width = video.videoWidth || 640;
    canvas.height = video.videoHeight || 480;
    const ctx = canvas.getContext("2d");
    if (!ctx) return Promise.reject(new Error("no 2d context"));
    ctx.drawImage(video, 0, 0);
    return new Promise((resolve, reject) =>
      canvas.toBlob(
        (blob) => (blob ? resolve(blob) : reject(new Error("capture failed"))),
        "image/jpeg",
        0.9,
      ),
    );
  }

  async function sendFrame(): Promise<void> {
    try {
      await send(await grabFrame());
    } catch (err) {
      fail(err);
    }
  }

  function sendFeedback(score: number): void {
    if (currentTurn === null) {
      toast("no turn to rate yet");
      return;
    }
    api
      .feedback(currentTurn, score)
      .then((ack) => toast(`feedback ${ack.score} recorded for turn ${ack.turn_id}`))
      .catch(fail);
  }

  cameraBtn.addEventListener("click", () => void startCamera());
  sendBtn.addEventListener("click", () => void sendFrame());

  // Frames leave the page only on explicit action; auto mode is opt-in.
  autoCheck.addEventListener("change", () => {
    if (autoTimer !== null) {
      clearInterval(autoTimer);
      autoTimer = null;
    }
    if (!autoCheck.checked) return;
    if (!cameraOn) {
      autoCheck.checked = false;
      toast("start the camera first");
      return;
    }
    const period = Math.max(1, Number(periodInput.value) || 5);
    autoTimer = window.setInterval(() => void sendFrame(), period * 1000);
  });

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) void send(file);
    fileInput.value = "";
  });

  mustGet("fb-up").addEventListener("click", () => sendFeedback(1));
  mustGet("fb-mid").addEventListener("click", () => sendFeedback(0));
  mustGet("fb-down").addEventListener("click", () => sendFeedback(-1));

  serviceInput.addEventListener("change", () => {
    stream?.stop();
    stream = null;
    api = new Api(serviceInput.value.replace(/\/+$/, ""));
    currentTurn = null;
    latest = null;
    drawn = null;
    trace.clear();
    void boot();
  });

  void boot();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", init);
} else {
  init();
}
