/** Versioned single-file checkpoints: JSON header + base64 weights. */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

import { ModelConfig, PolicyValueModel } from "./model";

const FORMAT = 1;

interface CheckpointFile {
  format: number;
  config: ModelConfig;
  weights: Record<string, { shape: number[]; data: string }>;
}

export function saveCheckpoint(model: PolicyValueModel, path: string): void {
  const weights: CheckpointFile["weights"] = {};
  for (const [name, variable] of model.vars) {
    const data = variable.dataSync() as Float32Array;
    weights[name] = {
      shape: variable.shape.slice(),
      data: Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString("base64"),
    };
  }
  const payload: CheckpointFile = { format: FORMAT, config: model.cfg, weights };
  fs.writeFileSync(path, JSON.stringify(payload));
}

export function loadCheckpoint(path: string): PolicyValueModel {
  const raw = JSON.parse(fs.readFileSync(path, "utf-8")) as CheckpointFile;
  if (raw.format !== FORMAT) {
    throw new Error(`unsupported checkpoint format ${raw.format}`);
  }
  const model = new PolicyValueModel(raw.config, "zero");
  for (const [name, entry] of Object.entries(raw.weights)) {
    const variable = model.vars.get(name);
    if (!variable) throw new Error(`checkpoint weight ${name} has no matching variable`);
    const buf = Buffer.from(entry.data, "base64");
    const values = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
    variable.assign(tf.tensor(Array.from(values), entry.shape));
  }
  return model;
}
