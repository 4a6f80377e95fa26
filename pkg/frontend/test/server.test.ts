import * as fs from "fs";
import * as net from "net";
import * as os from "os";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { loadCheckpoint, saveCheckpoint } from "../src/checkpoint";
import { ModelConfig, PolicyValueModel } from "../src/model";
import { PolicyServer } from "../src/server";
import { encodeAction } from "../src/tables";

const TINY: ModelConfig = {
  n: 3,
  embedDim: 16,
  heads: 2,
  trunkLayers: 1,
  policyLayers: 1,
  valueLayers: 1,
  mlpHidden: 32,
};

let tmpDir: string;
let zeroCkpt: string;
let server: PolicyServer;
let port: number;

function connect(): Promise<net.Socket> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host: "127.0.0.1", port }, () => resolve(socket));
    socket.on("error", reject);
  });
}

function roundTrip(socket: net.Socket, lines: string[], expectCount: number): Promise<string[]> {
  return new Promise((resolve) => {
    const got: string[] = [];
    let buf = "";
    socket.on("data", (chunk) => {
      buf += chunk.toString();
      let at;
      while ((at = buf.indexOf("\n")) >= 0) {
        got.push(buf.slice(0, at));
        buf = buf.slice(at + 1);
        if (got.length === expectCount) resolve(got);
      }
    });
    socket.write(lines.join("\n") + "\n");
  });
}

const REQUEST = {
  id: 1,
  n: 3,
  tables: ["AA", "CC", "F0"],
  target: "8F",
  legal: [1, 2, 5, 10, 11, 14, 19, 20, 23, 28, 29, 32],
};

beforeAll(async () => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "policy-server-"));
  zeroCkpt = path.join(tmpDir, "zero.json");
  const zero = new PolicyValueModel(TINY, "zero");
  saveCheckpoint(zero, zeroCkpt);
  zero.dispose();
  server = new PolicyServer(zeroCkpt);
  port = await new Promise<number>((resolve) => server.listen(0, resolve));
});

afterAll(() => {
  server.close();
});

describe("protocol", () => {
  it("answers one line per request with matching ids", async () => {
    const socket = await connect();
    const first = { ...REQUEST, id: 7 };
    const second = { ...REQUEST, id: 9 };
    const replies = await roundTrip(socket, [JSON.stringify(first), JSON.stringify(second)], 2);
    socket.destroy();
    const parsed = replies.map((line) => JSON.parse(line));
    expect(parsed.map((p) => p.id)).toEqual([7, 9]);
    for (const reply of parsed) {
      expect(Object.keys(reply).sort()).toEqual(["id", "policy", "value"]);
      expect(reply.policy.length).toBe(REQUEST.legal.length);
      const total = reply.policy.reduce((acc: number, [, p]: [number, number]) => acc + p, 0);
      expect(total).toBeCloseTo(1.0, 5);
      expect(Math.abs(reply.value)).toBeLessThanOrEqual(1);
    }
  });

  it("zero checkpoint answers the uniform distribution", async () => {
    const socket = await connect();
    const [reply] = await roundTrip(socket, [JSON.stringify(REQUEST)], 1);
    socket.destroy();
    const parsed = JSON.parse(reply);
    for (const [idx, p] of parsed.policy) {
      expect(REQUEST.legal).toContain(idx);
      expect(p).toBeCloseTo(1 / REQUEST.legal.length, 6);
    }
    expect(parsed.value).toBe(0);
  });

  it("malformed lines produce error replies and keep the connection alive", async () => {
    const socket = await connect();
    const replies = await roundTrip(
      socket,
      ["{not json", JSON.stringify({ id: 4, nope: true }), JSON.stringify(REQUEST)],
      3
    );
    socket.destroy();
    expect(JSON.parse(replies[0]).error).toBeTruthy();
    expect(JSON.parse(replies[1]).error).toBeTruthy();
    expect(JSON.parse(replies[1]).id).toBe(4);
    expect(JSON.parse(replies[2]).policy).toBeTruthy();
  });

  it("out-of-range legal indices are rejected per request", async () => {
    const socket = await connect();
    const bad = { ...REQUEST, id: 12, legal: [1, 999] };
    const [reply] = await roundTrip(socket, [JSON.stringify(bad)], 1);
    socket.destroy();
    expect(JSON.parse(reply).error).toMatch(/legal index/);
  });

  it("micro-batch window groups same-shape requests transparently", async () => {
    const batched = new PolicyServer(zeroCkpt, 5);
    const bport = await new Promise<number>((resolve) => batched.listen(0, resolve));
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const s = net.createConnection({ host: "127.0.0.1", port: bport }, () => resolve(s));
      s.on("error", reject);
    });
    const requests = [1, 2, 3].map((id) => JSON.stringify({ ...REQUEST, id }));
    const replies = await roundTrip(socket, requests, 3);
    socket.destroy();
    batched.close();
    const ids = replies.map((r) => JSON.parse(r).id).sort();
    expect(ids).toEqual([1, 2, 3]);
    for (const line of replies) {
      const parsed = JSON.parse(line);
      for (const [, p] of parsed.policy) {
        expect(p).toBeCloseTo(1 / REQUEST.legal.length, 6);
      }
    }
  });

  it("reload swaps weights between requests", async () => {
    const socket = await connect();
    const [before] = await roundTrip(socket, [JSON.stringify({ ...REQUEST, id: 20 })], 1);
    // overwrite the checkpoint with trained-looking weights, then reload
    const random = new PolicyValueModel(TINY, "random", 99);
    saveCheckpoint(random, zeroCkpt);
    random.dispose();
    server.reload();
    const [after] = await roundTrip(socket, [JSON.stringify({ ...REQUEST, id: 21 })], 1);
    socket.destroy();
    const pBefore = JSON.parse(before).policy.map(([, p]: [number, number]) => p);
    const pAfter = JSON.parse(after).policy.map(([, p]: [number, number]) => p);
    expect(pAfter).not.toEqual(pBefore);
    // restore the zero checkpoint for any later tests
    const zero = new PolicyValueModel(TINY, "zero");
    saveCheckpoint(zero, zeroCkpt);
    zero.dispose();
    server.reload();
  });
});

describe("checkpoint round trip", () => {
  it("weights and config survive save/load", () => {
    const model = new PolicyValueModel(TINY, "random", 55);
    const file = path.join(tmpDir, "roundtrip.json");
    saveCheckpoint(model, file);
    const again = loadCheckpoint(file);
    expect(again.cfg).toEqual(model.cfg);
    for (const [name, variable] of model.vars) {
      const a = variable.dataSync();
      const b = again.vars.get(name)!.dataSync();
      expect(Array.from(b)).toEqual(Array.from(a));
    }
    model.dispose();
    again.dispose();
  });
});
