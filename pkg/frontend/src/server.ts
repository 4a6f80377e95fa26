/** Line-delimited JSON policy server.
 *
 * One request per line: {"id", "n", "tables", "target", "legal"}; one
 * response per request: {"id", "policy": [[index, prob], ...], "value"}.
 * Malformed lines get {"id", "error"} and the connection stays open.
 * SIGHUP reloads the checkpoint; in-flight requests finish on the old
 * weights.  An optional micro-batch window coalesces requests that arrive
 * within it, evaluating same-shape groups in one forward pass.
 */

import * as net from "net";
import * as readline from "readline";
import * as tf from "@tensorflow/tfjs";

import { loadCheckpoint } from "./checkpoint";
import { PolicyValueModel, buildSequence, sequencesToTensor } from "./model";
import { hexToBits } from "./tables";

export interface PolicyRequest {
  id: number;
  n: number;
  tables: string[];
  target: string;
  legal: number[];
}

export interface PolicyResponse {
  id: number;
  policy: [number, number][];
  value: number;
}

const NEG = -1e9;

export function answerBatch(model: PolicyValueModel, requests: PolicyRequest[]): PolicyResponse[] {
  const n = requests[0].n;
  const v = requests[0].tables.length;
  const flat = 4 * v * v;
  return tf.tidy(() => {
    const sequences = requests.map((r) =>
      buildSequence(r.tables.map((h) => hexToBits(h, n)), hexToBits(r.target, n))
    );
    const { policyLogits, value } = model.forward(sequencesToTensor(sequences));
    const logits = policyLogits.reshape([requests.length, flat]);
    const maskData = new Float32Array(requests.length * flat).fill(NEG);
    requests.forEach((r, bi) => {
      for (const idx of r.legal) {
        if (idx < 0 || idx >= flat) throw new Error(`legal index ${idx} outside 4*${v}*${v}`);
        maskData[bi * flat + idx] = 0;
      }
    });
    const probs = tf.softmax(tf.add(logits, tf.tensor2d(maskData, [requests.length, flat])), -1);
    const probData = probs.dataSync();
    const valueData = value.dataSync();
    return requests.map((r, bi) => ({
      id: r.id,
      policy: r.legal.map((idx) => [idx, probData[bi * flat + idx]] as [number, number]),
      value: valueData[bi],
    }));
  });
}

function validateRequest(raw: unknown): PolicyRequest {
  const r = raw as Partial<PolicyRequest>;
  if (
    typeof r !== "object" ||
    r === null ||
    typeof r.id !== "number" ||
    typeof r.n !== "number" ||
    !Array.isArray(r.tables) ||
    typeof r.target !== "string" ||
    !Array.isArray(r.legal) ||
    r.legal.length === 0
  ) {
    throw new Error("request needs id, n, tables, target, and a non-empty legal list");
  }
  return r as PolicyRequest;
}

export class PolicyServer {
  private model: PolicyValueModel;
  private server: net.Server | null = null;
  private pending: { request: PolicyRequest; reply: (line: string) => void }[] = [];
  private flushTimer: NodeJS.Timeout | null = null;

  constructor(
    private checkpointPath: string,
    private batchWindowMs = 0
  ) {
    this.model = loadCheckpoint(checkpointPath);
  }

  reload(): void {
    const fresh = loadCheckpoint(this.checkpointPath);
    const old = this.model;
    this.model = fresh;
    old.dispose();
  }

  handleLine(line: string, reply: (line: string) => void): void {
    let raw: unknown;
    let id: unknown = null;
    try {
      raw = JSON.parse(line);
      id = (raw as { id?: unknown }).id ?? null;
      const request = validateRequest(raw);
      if (this.batchWindowMs > 0) {
        this.pending.push({ request, reply });
        if (!this.flushTimer) {
          this.flushTimer = setTimeout(() => this.flush(), this.batchWindowMs);
        }
      } else {
        const [response] = answerBatch(this.model, [request]);
        reply(JSON.stringify(response));
      }
    } catch (err) {
      reply(JSON.stringify({ id, error: (err as Error).message }));
    }
  }

  private flush(): void {
    this.flushTimer = null;
    const queue = this.pending;
    this.pending = [];
    // group by shape so each group is one forward pass
    const groups = new Map<string, typeof queue>();
    for (const item of queue) {
      const key = `${item.request.n}:${item.request.tables.length}`;
      groups.set(key, [...(groups.get(key) ?? []), item]);
    }
    for (const [, items] of groups) {
      try {
        const responses = answerBatch(this.model, items.map((i) => i.request));
        items.forEach((item, i) => item.reply(JSON.stringify(responses[i])));
      } catch (err) {
        for (const item of items) {
          item.reply(JSON.stringify({ id: item.request.id, error: (err as Error).message }));
        }
      }
    }
  }

  listen(port: number, onReady?: (port: number) => void): void {
    this.server = net.createServer((socket) => {
      socket.setNoDelay(true);
      const lines = readline.createInterface({ input: socket });
      lines.on("line", (line) => {
        if (!line.trim()) return;
        this.handleLine(line, (out) => {
          if (!socket.destroyed) socket.write(out + "\n");
        });
      });
      socket.on("error", () => socket.destroy());
    });
    this.server.listen(port, "127.0.0.1", () => {
      const actual = (this.server!.address() as net.AddressInfo).port;
      onReady?.(actual);
    });
    process.on("SIGHUP", () => this.reload());
  }

  serveStdio(): void {
    const lines = readline.createInterface({ input: process.stdin });
    lines.on("line", (line) => {
      if (!line.trim()) return;
      this.handleLine(line, (out) => process.stdout.write(out + "\n"));
    });
    process.on("SIGHUP", () => this.reload());
  }

  close(): void {
    this.server?.close();
  }
}
