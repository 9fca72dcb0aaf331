import { Server } from "node:http";
import { AddressInfo } from "node:net";

// 8x8 solid PNG, enough for the runtime's image decoder.
const PNG_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAgAAAAICAIAAABLbSncAAAAFElEQVR4nGOMWlDBgA0wYRUdtBIAJSUBgldViSsAAAAASUVORK5CYII=";

export function pngBytes(): Uint8Array<ArrayBuffer> {
  const raw = atob(PNG_B64);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

export function listen(server: Server): Promise<string> {
  return new Promise((resolve) => {
    server.listen(0, "127.0.0.1", () => {
      const { port } = server.address() as AddressInfo;
      resolve(`http://127.0.0.1:${port}`);
    });
  });
}

export function close(server: Server): Promise<void> {
  return new Promise((resolve) => server.close(() => resolve()));
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function until(
  cond: () => boolean | Promise<boolean>,
  timeoutMs = 10000,
): Promise<void> {
  const start = Date.now();
  while (!(await cond())) {
    if (Date.now() - start > timeoutMs) throw new Error("condition not met in time");
    await sleep(10);
  }
}
