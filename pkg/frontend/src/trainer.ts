/** Supervised pre-training on cut shards and replay-driven fine-tuning. */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

import {
  CutSample,
  ReplayRecord,
  encodeSample,
  targetDistribution,
  visitDistribution,
} from "./dataset";
import { PolicyValueModel, buildSequence, sequencesToTensor } from "./model";
import { hexToBits } from "./tables";
import { mulberry32, shuffled } from "./rng";

const NEG = -1e9;

export interface TrainConfig {
  epochs: number;
  batchSize: number;
  lr: number;
  clipNorm: number;
  permuteProb: number;
  negateProb: number;
  seed: number;
  replayCapacity: number;
  valueTarget: "root-q" | "outcome";
  mseWeight: number;
}

export const DEFAULT_TRAIN: TrainConfig = {
  epochs: 5,
  batchSize: 32,
  lr: 1e-3,
  clipNorm: 1.0,
  permuteProb: 0.75,
  negateProb: 0.5,
  seed: 17,
  replayCapacity: 100000,
  valueTarget: "root-q",
  mseWeight: 1.0,
};

/** Cosine annealing with warm restarts (period doubles after each cycle). */
export function cosineRestartLr(step: number, base: number, cycleSteps: number): number {
  const floor = base * 0.01;
  let t = step;
  let period = Math.max(1, cycleSteps);
  while (t >= period) {
    t -= period;
    period *= 2;
  }
  return floor + 0.5 * (base - floor) * (1 + Math.cos((Math.PI * t) / period));
}

function applyGradients(optimizer: tf.Optimizer, grads: Record<string, tf.Tensor>): void {
  optimizer.applyGradients(grads as unknown as tf.NamedTensorMap);
}

function clipGradients(grads: Record<string, tf.Tensor>, clipNorm: number): Record<string, tf.Tensor> {
  const names = Object.keys(grads);
  const total = tf.tidy(() => {
    let acc = tf.scalar(0);
    for (const name of names) acc = tf.add(acc, tf.sum(tf.square(grads[name])));
    return Math.sqrt(acc.dataSync()[0]);
  });
  if (!(total > clipNorm)) return grads;
  const scale = clipNorm / total;
  const out: Record<string, tf.Tensor> = {};
  for (const name of names) {
    out[name] = tf.tidy(() => tf.mul(grads[name], scale));
    grads[name].dispose();
  }
  return out;
}

interface PretrainBatch {
  samples: CutSample[];
  length: number;
}

function batchPlan(groups: Map<number, CutSample[]>, batchSize: number, rand: () => number): PretrainBatch[] {
  const batches: PretrainBatch[] = [];
  for (const [length, samples] of groups) {
    const order = shuffled(samples, rand);
    for (let i = 0; i < order.length; i += batchSize) {
      batches.push({ samples: order.slice(i, i + batchSize), length });
    }
  }
  return shuffled(batches, rand);
}

/**
 * Teacher-forced loss over every prefix of every sample: cross-entropy
 * between the uniform remaining-action target and the model softmax over
 * the valid (built-parents, not-yet-performed) tensor entries.  Returns the
 * true KL alongside the cross-entropy used for gradients.
 */
export function pretrainLossTensors(
  model: PolicyValueModel,
  samples: CutSample[],
  rand: () => number,
  permuteProb: number,
  negateProb: number
): { ce: tf.Scalar; kl: number } {
  const m = samples[0].actions.length;
  const n = samples[0].n;
  const v = n + m;
  const flat = 4 * v * v;
  for (const s of samples) {
    if (s.actions.length !== m || s.n !== n) {
      throw new Error("pretrain batches must group samples of one length");
    }
  }
  const b = samples.length;
  const sequences = samples.map((s) => {
    const enc = encodeSample(s, rand, permuteProb, negateProb);
    return buildSequence(enc.nodeTables, enc.target);
  });

  const maskData = new Float32Array(b * m * flat).fill(NEG);
  const targetData = new Float32Array(b * m * flat);
  let entropy = 0;
  for (let bi = 0; bi < b; bi++) {
    const sample = samples[bi];
    const performed = new Set<number>();
    for (let k = 0; k < m; k++) {
      const base = (bi * m + k) * flat;
      const limit = n + k;
      for (let eps = 1; eps <= 4; eps++) {
        for (let p1 = 1; p1 < limit; p1++) {
          for (let p2 = p1 + 1; p2 <= limit; p2++) {
            const idx = (eps - 1) * v * v + (p1 - 1) * v + (p2 - 1);
            if (!performed.has(idx)) maskData[base + idx] = 0;
          }
        }
      }
      const dist = targetDistribution(sample, k);
      for (const [idx, p] of dist) {
        targetData[base + idx] = p;
      }
      entropy += Math.log(dist.size);
      const [eps, p1, p2] = sample.actions[k];
      performed.add((eps - 1) * v * v + (p1 - 1) * v + (p2 - 1));
    }
  }

  const seq = sequencesToTensor(sequences);
  const { policyLogits } = model.forward(seq);
  const logits = policyLogits.reshape([b, 1, flat]).tile([1, m, 1]);
  const mask = tf.tensor3d(maskData, [b, m, flat]);
  const target = tf.tensor3d(targetData, [b, m, flat]);
  const logProbs = tf.logSoftmax(tf.add(logits, mask), -1);
  const ce = tf.neg(tf.mean(tf.sum(tf.mul(target, logProbs), -1))) as tf.Scalar;
  const klValue = ce.dataSync()[0] - entropy / (b * m);
  return { ce, kl: klValue };
}

export interface PretrainResult {
  epochKl: number[];
  steps: number;
}

export function pretrain(
  model: PolicyValueModel,
  groups: Map<number, CutSample[]>,
  cfg: TrainConfig,
  onCheckpoint?: (epoch: number) => void,
  logPath?: string
): PretrainResult {
  const rand = mulberry32(cfg.seed);
  const optimizer = tf.train.adam(cfg.lr);
  const total = [...groups.values()].reduce((acc, g) => acc + g.length, 0);
  const stepsPerEpoch = Math.max(1, Math.ceil(total / cfg.batchSize));
  const epochKl: number[] = [];
  const logLines: string[] = ["epoch,step,kl,lr"];
  let step = 0;
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    let klSum = 0;
    let klCount = 0;
    for (const batch of batchPlan(groups, cfg.batchSize, rand)) {
      const lr = cosineRestartLr(step, cfg.lr, stepsPerEpoch);
      (optimizer as unknown as { learningRate: number }).learningRate = lr;
      let klHere = 0;
      const { value: loss, grads } = tf.variableGrads(() => {
        const { ce, kl } = pretrainLossTensors(
          model, batch.samples, rand, cfg.permuteProb, cfg.negateProb
        );
        klHere = kl;
        return ce;
      }, model.variableList());
      const lossValue = loss.dataSync()[0];
      loss.dispose();
      if (!Number.isFinite(lossValue)) {
        throw new Error(`non-finite loss at epoch ${epoch} step ${step}: ${lossValue}`);
      }
      const clipped = clipGradients(grads, cfg.clipNorm);
      applyGradients(optimizer, clipped);
      for (const g of Object.values(clipped)) g.dispose();
      klSum += klHere;
      klCount += 1;
      logLines.push(`${epoch},${step},${klHere.toFixed(6)},${lr.toExponential(3)}`);
      step += 1;
    }
    epochKl.push(klSum / Math.max(1, klCount));
    onCheckpoint?.(epoch);
  }
  optimizer.dispose();
  if (logPath) fs.writeFileSync(logPath, logLines.join("\n") + "\n");
  return { epochKl, steps: step };
}

/** FIFO-bounded replay buffer: newest records win when over capacity. */
export function boundReplay(records: ReplayRecord[], capacity: number): ReplayRecord[] {
  if (records.length <= capacity) return records;
  return records.slice(records.length - capacity);
}

/**
 * Episode grouping for outcome-mode value targets: records of one episode
 * appear consecutively with the same target and a growing node count, so a
 * non-increasing node count or a target change starts a new episode.  The
 * value target in outcome mode is the episode's final root score.
 */
export function episodeValueTargets(records: ReplayRecord[], mode: "root-q" | "outcome"): number[] {
  if (mode === "root-q") return records.map((r) => r.q);
  const targets = new Array<number>(records.length);
  let start = 0;
  for (let i = 1; i <= records.length; i++) {
    const boundary =
      i === records.length ||
      records[i].target !== records[start].target ||
      records[i].tables.length <= records[i - 1].tables.length;
    if (boundary) {
      const finalQ = records[i - 1].q;
      for (let j = start; j < i; j++) targets[j] = finalQ;
      start = i;
    }
  }
  return targets;
}

export interface FinetuneResult {
  steps: number;
  meanLoss: number;
  meanMse: number;
  meanKl: number;
}

export function finetune(
  model: PolicyValueModel,
  records: ReplayRecord[],
  cfg: TrainConfig
): FinetuneResult {
  const buffer = boundReplay(records, cfg.replayCapacity);
  if (buffer.length === 0) {
    return { steps: 0, meanLoss: 0, meanMse: 0, meanKl: 0 };
  }
  const valueTargets = episodeValueTargets(buffer, cfg.valueTarget);
  const rand = mulberry32(cfg.seed + 1);
  const optimizer = tf.train.adam(cfg.lr);
  const steps = Math.max(1, Math.ceil(buffer.length / cfg.batchSize));
  let lossSum = 0;
  let mseSum = 0;
  let klSum = 0;
  for (let step = 0; step < steps; step++) {
    // uniform draws from the buffer, then split by node count for batching
    const picked: number[] = [];
    for (let i = 0; i < cfg.batchSize; i++) {
      picked.push(Math.floor(rand() * buffer.length));
    }
    const byLen = new Map<number, number[]>();
    for (const idx of picked) {
      const len = buffer[idx].tables.length;
      byLen.set(len, [...(byLen.get(len) ?? []), idx]);
    }
    for (const [, indices] of byLen) {
      const batch = indices.map((i) => buffer[i]);
      const targets = indices.map((i) => valueTargets[i]);
      let mseHere = 0;
      let klHere = 0;
      const { value: loss, grads } = tf.variableGrads(() => {
        const out = finetuneLossTensors(model, batch, targets, cfg.mseWeight);
        mseHere = out.mse;
        klHere = out.kl;
        return out.loss;
      }, model.variableList());
      const lossValue = loss.dataSync()[0];
      loss.dispose();
      if (!Number.isFinite(lossValue)) {
        throw new Error(`non-finite fine-tune loss at step ${step}`);
      }
      const clipped = clipGradients(grads, cfg.clipNorm);
      applyGradients(optimizer, clipped);
      for (const g of Object.values(clipped)) g.dispose();
      lossSum += lossValue;
      mseSum += mseHere;
      klSum += klHere;
    }
  }
  optimizer.dispose();
  return {
    steps,
    meanLoss: lossSum / steps,
    meanMse: mseSum / steps,
    meanKl: klSum / steps,
  };
}

export function finetuneLossTensors(
  model: PolicyValueModel,
  batch: ReplayRecord[],
  valueTargets: number[],
  mseWeight: number
): { loss: tf.Scalar; mse: number; kl: number } {
  const n = batch[0].n;
  const v = batch[0].tables.length;
  const flat = 4 * v * v;
  const sequences = batch.map((r) =>
    buildSequence(r.tables.map((h) => hexToBits(h, n)), hexToBits(r.target, n))
  );
  const maskData = new Float32Array(batch.length * flat).fill(NEG);
  const targetData = new Float32Array(batch.length * flat);
  let entropy = 0;
  for (let bi = 0; bi < batch.length; bi++) {
    for (let eps = 0; eps < 4; eps++) {
      for (let p1 = 0; p1 < v; p1++) {
        for (let p2 = p1 + 1; p2 < v; p2++) {
          maskData[bi * flat + eps * v * v + p1 * v + p2] = 0;
        }
      }
    }
    const dist = visitDistribution(batch[bi]);
    for (const [idx, p] of dist) {
      if (idx < 0 || idx >= flat) {
        throw new Error(`visit index ${idx} outside the 4*${v}*${v} action tensor`);
      }
      targetData[bi * flat + idx] = p;
      entropy -= p * Math.log(p);
    }
  }
  const seq = sequencesToTensor(sequences);
  const { policyLogits, value } = model.forward(seq);
  const logits = policyLogits.reshape([batch.length, flat]);
  const mask = tf.tensor2d(maskData, [batch.length, flat]);
  const target = tf.tensor2d(targetData, [batch.length, flat]);
  const logProbs = tf.logSoftmax(tf.add(logits, mask), -1);
  const ce = tf.neg(tf.mean(tf.sum(tf.mul(target, logProbs), -1)));
  const wanted = tf.tensor1d(valueTargets);
  const mse = tf.mean(tf.square(tf.sub(value, wanted)));
  const loss = tf.add(tf.mul(mse, mseWeight), ce) as tf.Scalar;
  const mseValue = mse.dataSync()[0];
  const klValue = ce.dataSync()[0] - entropy / batch.length;
  return { loss, mse: mseValue, kl: klValue };
}
