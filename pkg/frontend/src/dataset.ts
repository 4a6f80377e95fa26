/** Training-set access: cut shards, replay records, target distributions. */

import * as fs from "fs";
import * as path from "path";

import {
  ActionTriple,
  Bits,
  encodeAction,
  hexToBits,
  negate,
  permuteRows,
  replayTables,
} from "./tables";
import { mulberry32, randomPermutation } from "./rng";

export interface CutSample {
  n: number;
  target: string;
  actions: ActionTriple[];
}

export interface ReplayRecord {
  n: number;
  tables: string[];
  target: string;
  visits: [number, number][];
  q: number;
}

export function parseSample(line: string): CutSample {
  const raw = JSON.parse(line);
  return { n: raw.n, target: raw.target, actions: raw.actions };
}

/** Load every len{K}_shard{j}.jsonl under a directory, grouped by K. */
export function loadShards(dir: string): Map<number, CutSample[]> {
  const groups = new Map<number, CutSample[]>();
  for (const name of fs.readdirSync(dir).sort()) {
    const match = /^len(\d+)_shard\d+\.jsonl$/.exec(name);
    if (!match) continue;
    const length = Number(match[1]);
    const bucket = groups.get(length) ?? [];
    for (const line of fs.readFileSync(path.join(dir, name), "utf-8").split("\n")) {
      if (line.trim()) bucket.push(parseSample(line));
    }
    groups.set(length, bucket);
  }
  return groups;
}

/** Parse replay JSONL, skipping blank and partially written trailing lines. */
export function loadReplay(file: string): ReplayRecord[] {
  const records: ReplayRecord[] = [];
  for (const line of fs.readFileSync(file, "utf-8").split("\n")) {
    if (!line.trim()) continue;
    try {
      const raw = JSON.parse(line);
      if (raw.n && raw.tables && raw.target && raw.visits) {
        records.push(raw as ReplayRecord);
      }
    } catch {
      continue; // concurrent writer may leave a torn final line
    }
  }
  return records;
}

/** Normalized visit counts: the fine-tuning policy target. */
export function visitDistribution(record: ReplayRecord): Map<number, number> {
  const total = record.visits.reduce((acc, [, c]) => acc + c, 0);
  const dist = new Map<number, number>();
  for (const [idx, count] of record.visits) {
    dist.set(idx, count / total);
  }
  return dist;
}

/**
 * Supervision target after k teacher-forced actions: uniform over the
 * sample's remaining action-tensor entries whose parents both already exist
 * (p2 <= n + k), as flat indices into the 4*V*V tensor with V = n + m.
 */
export function targetDistribution(sample: CutSample, k: number): Map<number, number> {
  const m = sample.actions.length;
  if (k < 0 || k >= m) {
    throw new Error(`prefix ${k} outside 0..${m - 1}`);
  }
  const v = sample.n + m;
  const performed = new Set<number>();
  for (let i = 0; i < k; i++) {
    const [eps, p1, p2] = sample.actions[i];
    performed.add(encodeAction(eps, p1, p2, v));
  }
  const support: number[] = [];
  for (const [eps, p1, p2] of sample.actions) {
    const idx = encodeAction(eps, p1, p2, v);
    if (p2 <= sample.n + k && !performed.has(idx)) {
      support.push(idx);
    }
  }
  if (support.length === 0) {
    throw new Error(`sample has no valid action at prefix ${k}`);
  }
  const dist = new Map<number, number>();
  for (const idx of support) {
    dist.set(idx, 1 / support.length);
  }
  return dist;
}

export interface EncodedSample {
  nodeTables: Bits[];
  target: Bits;
}

/** Tables for the model, with the configured augmentations applied. */
export function encodeSample(
  sample: CutSample,
  rand: () => number,
  permuteProb: number,
  negateProb: number
): EncodedSample {
  let tables = replayTables(sample.n, sample.actions);
  let target = hexToBits(sample.target, sample.n);
  if (rand() < negateProb) {
    target = negate(target);
  }
  if (rand() < permuteProb) {
    const sigma = randomPermutation(1 << sample.n, rand);
    tables = tables.map((t) => permuteRows(t, sigma));
    target = permuteRows(target, sigma);
  }
  return { nodeTables: tables, target };
}

export function makeRand(seed: number): () => number {
  return mulberry32(seed);
}
