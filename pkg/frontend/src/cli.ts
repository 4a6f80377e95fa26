/** Command-line entry points: init / pretrain / finetune / serve. */

import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { loadCheckpoint, saveCheckpoint } from "./checkpoint";
import { loadReplay, loadShards } from "./dataset";
import { ModelConfig, PolicyValueModel, TOY_CONFIG } from "./model";
import { PolicyServer } from "./server";
import { DEFAULT_TRAIN, finetune, pretrain } from "./trainer";

function parseFlags(argv: string[]): Map<string, string | string[]> {
  const flags = new Map<string, string | string[]>();
  for (let i = 0; i < argv.length; i++) {
    if (!argv[i].startsWith("--")) continue;
    const name = argv[i].slice(2);
    const values: string[] = [];
    while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      values.push(argv[++i]);
    }
    if (values.length === 0) flags.set(name, "true");
    else if (values.length === 1) flags.set(name, values[0]);
    else flags.set(name, values);
  }
  return flags;
}

function flagStr(flags: Map<string, string | string[]>, name: string, fallback?: string): string {
  const v = flags.get(name);
  if (v === undefined) {
    if (fallback === undefined) throw new Error(`missing --${name}`);
    return fallback;
  }
  return Array.isArray(v) ? v[0] : v;
}

function flagNum(flags: Map<string, string | string[]>, name: string, fallback: number): number {
  const v = flags.get(name);
  if (v === undefined) return fallback;
  return Number(Array.isArray(v) ? v[0] : v);
}

async function useBestBackend(): Promise<void> {
  try {
    require("@tensorflow/tfjs-backend-wasm");
    const wasmDir = path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm"));
    const { setWasmPaths } = require("@tensorflow/tfjs-backend-wasm");
    setWasmPaths(wasmDir + "/");
    await tf.setBackend("wasm");
  } catch {
    await tf.setBackend("cpu");
  }
  await tf.ready();
}

function modelConfig(flags: Map<string, string | string[]>): ModelConfig {
  return {
    n: flagNum(flags, "n", 3),
    embedDim: flagNum(flags, "embed-dim", TOY_CONFIG.embedDim),
    heads: flagNum(flags, "heads", TOY_CONFIG.heads),
    trunkLayers: flagNum(flags, "trunk-layers", TOY_CONFIG.trunkLayers),
    policyLayers: flagNum(flags, "policy-layers", TOY_CONFIG.policyLayers),
    valueLayers: flagNum(flags, "value-layers", TOY_CONFIG.valueLayers),
    mlpHidden: flagNum(flags, "mlp-hidden", TOY_CONFIG.mlpHidden),
  };
}

async function cmdInit(flags: Map<string, string | string[]>): Promise<number> {
  const out = flagStr(flags, "out");
  const zero = flags.has("zero");
  const model = new PolicyValueModel(
    modelConfig(flags),
    zero ? "zero" : "random",
    flagNum(flags, "seed", 12345)
  );
  saveCheckpoint(model, out);
  console.log(JSON.stringify({ command: "init", out, zero, n: model.cfg.n }));
  return 0;
}

async function cmdPretrain(flags: Map<string, string | string[]>): Promise<number> {
  const shardsDir = flagStr(flags, "shards");
  const out = flagStr(flags, "out");
  const init = flags.get("init");
  const groups = loadShards(shardsDir);
  if (groups.size === 0) {
    console.error(`no len*_shard*.jsonl files under ${shardsDir}`);
    return 1;
  }
  const first = [...groups.values()][0][0];
  const model = init
    ? loadCheckpoint(flagStr(flags, "init"))
    : new PolicyValueModel({ ...modelConfig(flags), n: first.n }, "random", flagNum(flags, "seed", 12345));
  const cfg = {
    ...DEFAULT_TRAIN,
    epochs: flagNum(flags, "epochs", DEFAULT_TRAIN.epochs),
    batchSize: flagNum(flags, "batch", DEFAULT_TRAIN.batchSize),
    lr: flagNum(flags, "lr", DEFAULT_TRAIN.lr),
    permuteProb: flagNum(flags, "permute-prob", DEFAULT_TRAIN.permuteProb),
    negateProb: flagNum(flags, "negate-prob", DEFAULT_TRAIN.negateProb),
    seed: flagNum(flags, "seed", DEFAULT_TRAIN.seed),
  };
  const logPath = flags.has("log") ? flagStr(flags, "log") : undefined;
  const result = pretrain(model, groups, cfg, () => saveCheckpoint(model, out), logPath);
  console.log(
    JSON.stringify({
      command: "pretrain",
      out,
      epochs: cfg.epochs,
      epoch_kl: result.epochKl.map((x) => Number(x.toFixed(6))),
      steps: result.steps,
    })
  );
  return 0;
}

async function cmdFinetune(flags: Map<string, string | string[]>): Promise<number> {
  const replayFlag = flags.get("replay");
  if (!replayFlag) throw new Error("missing --replay");
  const files = Array.isArray(replayFlag) ? replayFlag : [replayFlag];
  const model = loadCheckpoint(flagStr(flags, "ckpt"));
  const records = files.flatMap((f) => loadReplay(f));
  if (records.length === 0) {
    console.error("replay buffer is empty; nothing to do");
    return 0;
  }
  const cfg = {
    ...DEFAULT_TRAIN,
    epochs: 1,
    batchSize: flagNum(flags, "batch", DEFAULT_TRAIN.batchSize),
    lr: flagNum(flags, "lr", DEFAULT_TRAIN.lr),
    seed: flagNum(flags, "seed", DEFAULT_TRAIN.seed),
    replayCapacity: flagNum(flags, "capacity", DEFAULT_TRAIN.replayCapacity),
    valueTarget: (flagStr(flags, "value-target", "root-q") as "root-q" | "outcome"),
    mseWeight: flagNum(flags, "mse-weight", DEFAULT_TRAIN.mseWeight),
  };
  const result = finetune(model, records, cfg);
  saveCheckpoint(model, flagStr(flags, "out"));
  console.log(
    JSON.stringify({
      command: "finetune",
      records: records.length,
      steps: result.steps,
      mean_loss: Number(result.meanLoss.toFixed(6)),
      mean_mse: Number(result.meanMse.toFixed(6)),
      mean_kl: Number(result.meanKl.toFixed(6)),
      out: flagStr(flags, "out"),
    })
  );
  return 0;
}

async function cmdServe(flags: Map<string, string | string[]>): Promise<number> {
  const ckpt = flagStr(flags, "ckpt");
  const server = new PolicyServer(ckpt, flagNum(flags, "batch-window", 0));
  if (flags.has("stdio")) {
    server.serveStdio();
    return await new Promise<number>(() => undefined);
  }
  const port = flagNum(flags, "port", 0);
  server.listen(port, (actual) => {
    console.log(JSON.stringify({ command: "serve", listening: actual, ckpt }));
  });
  return await new Promise<number>(() => undefined);
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  const flags = parseFlags(rest);
  await useBestBackend();
  const table: Record<string, (f: Map<string, string | string[]>) => Promise<number>> = {
    init: cmdInit,
    pretrain: cmdPretrain,
    finetune: cmdFinetune,
    serve: cmdServe,
  };
  const handler = command ? table[command] : undefined;
  if (!handler) {
    console.error("usage: cli.js init|pretrain|finetune|serve [--flags]");
    process.exit(1);
  }
  try {
    process.exit(await handler(flags));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  }
}

main();
