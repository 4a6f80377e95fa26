/** Toy transformer producing action logits and a state value.
 *
 * Input tokens are raw truth-table 0/1 vectors: the target first, then every
 * node (inputs, then AND nodes in build order).  Two learnable positional
 * encodings distinguish the target token from node tokens; nothing encodes
 * sequence position, so ordering information flows only through the
 * attention mask: the target and the primary inputs form a fully visible
 * prefix while AND-node tokens attend causally.
 *
 * Policy scores come straight from the final self-attention logits of four
 * parallel policy branches (one per fanin-polarity pattern) over node
 * tokens, giving a 4*V*V tensor aligned with the engine's flat action
 * indices.  The value branch cross-attends the target token over the node
 * tokens and maps the result through a linear layer and tanh.
 */

import * as tf from "@tensorflow/tfjs";

export interface ModelConfig {
  n: number;
  embedDim: number;
  heads: number;
  trunkLayers: number;
  policyLayers: number;
  valueLayers: number;
  mlpHidden: number;
}

export const TOY_CONFIG: Omit<ModelConfig, "n"> = {
  embedDim: 64,
  heads: 4,
  trunkLayers: 2,
  policyLayers: 2,
  valueLayers: 2,
  mlpHidden: 128,
};

export interface ForwardResult {
  /** [B, 4, V, V] raw policy scores over node pairs. */
  policyLogits: tf.Tensor4D;
  /** [B] state values in [-1, 1]. */
  value: tf.Tensor1D;
}

const EPS = 1e-6;
const NEG = -1e9;

function rmsNorm(x: tf.Tensor, gain: tf.Tensor): tf.Tensor {
  const ms = tf.mean(tf.square(x), -1, true);
  return tf.mul(tf.div(x, tf.sqrt(tf.add(ms, EPS))), gain);
}

function silu(x: tf.Tensor): tf.Tensor {
  return tf.mul(x, tf.sigmoid(x));
}

export class PolicyValueModel {
  readonly cfg: ModelConfig;
  readonly vars = new Map<string, tf.Variable>();
  private maskCache = new Map<string, tf.Tensor>();
  private seedCounter = 0;

  constructor(cfg: ModelConfig, init: "zero" | "random" = "random", seed = 12345) {
    this.cfg = cfg;
    this.seedCounter = seed;
    const d = cfg.embedDim;
    const h = cfg.mlpHidden;
    const width = 1 << cfg.n;
    const make = (name: string, shape: number[], kind: "proj" | "gain" | "zero") => {
      let value: tf.Tensor;
      if (init === "zero" || kind === "zero") {
        value = tf.zeros(shape);
      } else if (kind === "gain") {
        value = tf.ones(shape);
      } else {
        value = tf.randomNormal(shape, 0, 0.02, "float32", this.seedCounter++);
      }
      // unnamed on the tf side so several models can coexist in one process
      this.vars.set(name, tf.variable(value, true));
    };

    make("embed/W", [width, d], "proj");
    make("embed/b", [d], "zero");
    make("pe/node", [d], "proj");
    make("pe/target", [d], "proj");
    const block = (prefix: string) => {
      make(`${prefix}/ln1`, [d], init === "zero" ? "zero" : "gain");
      for (const w of ["Wq", "Wk", "Wv", "Wo"]) make(`${prefix}/attn/${w}`, [d, d], "proj");
      make(`${prefix}/ln2`, [d], init === "zero" ? "zero" : "gain");
      make(`${prefix}/mlp/Wg`, [d, h], "proj");
      make(`${prefix}/mlp/Wu`, [d, h], "proj");
      make(`${prefix}/mlp/Wd`, [h, d], "proj");
    };
    for (let i = 0; i < cfg.trunkLayers; i++) block(`trunk${i}`);
    for (let m = 0; m < 4; m++) {
      for (let i = 0; i < cfg.policyLayers; i++) block(`policy${m}/layer${i}`);
      make(`policy${m}/final/ln`, [d], init === "zero" ? "zero" : "gain");
      make(`policy${m}/final/Wq`, [d, d], "proj");
      make(`policy${m}/final/Wk`, [d, d], "proj");
    }
    for (let i = 0; i < cfg.valueLayers; i++) block(`value/layer${i}`);
    make("value/cross/ln", [d], init === "zero" ? "zero" : "gain");
    for (const w of ["Wq", "Wk", "Wv"]) make(`value/cross/${w}`, [d, d], "proj");
    make("value/out/W", [d, 1], "proj");
    make("value/out/b", [1], "zero");
  }

  dispose(): void {
    for (const v of this.vars.values()) v.dispose();
    for (const m of this.maskCache.values()) m.dispose();
    this.vars.clear();
    this.maskCache.clear();
  }

  private v(name: string): tf.Variable {
    const found = this.vars.get(name);
    if (!found) throw new Error(`missing weight ${name}`);
    return found;
  }

  /** Additive [1, 1, T, T] mask: full prefix visibility, causal elsewhere. */
  private attentionMask(seqLen: number): tf.Tensor {
    const key = `${seqLen}`;
    const cached = this.maskCache.get(key);
    if (cached) return cached;
    const n = this.cfg.n;
    const data = new Float32Array(seqLen * seqLen);
    for (let q = 0; q < seqLen; q++) {
      const limit = Math.max(q, n);
      for (let j = 0; j < seqLen; j++) {
        data[q * seqLen + j] = j <= limit ? 0 : NEG;
      }
    }
    const mask = tf.keep(tf.tensor4d(data, [1, 1, seqLen, seqLen]));
    this.maskCache.set(key, mask);
    return mask;
  }

  private attention(x: tf.Tensor, prefix: string, mask: tf.Tensor): tf.Tensor {
    const { heads, embedDim } = this.cfg;
    const dh = embedDim / heads;
    const [b, t] = x.shape as number[];
    const project = (w: string) =>
      tf
        .matMul(x.reshape([b * t, embedDim]), this.v(`${prefix}/${w}`))
        .reshape([b, t, heads, dh])
        .transpose([0, 2, 1, 3]);
    const q = project("Wq");
    const k = project("Wk");
    const val = project("Wv");
    const scores = tf.add(tf.div(tf.matMul(q, k, false, true), Math.sqrt(dh)), mask);
    const ctx = tf
      .matMul(tf.softmax(scores), val)
      .transpose([0, 2, 1, 3])
      .reshape([b * t, embedDim]);
    return tf.matMul(ctx, this.v(`${prefix}/Wo`)).reshape([b, t, embedDim]);
  }

  private mlp(x: tf.Tensor, prefix: string): tf.Tensor {
    const [b, t, d] = x.shape as number[];
    const flat = x.reshape([b * t, d]);
    const gate = silu(tf.matMul(flat, this.v(`${prefix}/Wg`)));
    const up = tf.matMul(flat, this.v(`${prefix}/Wu`));
    return tf.matMul(tf.mul(gate, up), this.v(`${prefix}/Wd`)).reshape([b, t, d]);
  }

  private blockStack(x: tf.Tensor, prefix: string, layers: number, mask: tf.Tensor): tf.Tensor {
    let h = x;
    for (let i = 0; i < layers; i++) {
      const p = `${prefix}${i}`;
      h = tf.add(h, this.attention(rmsNorm(h, this.v(`${p}/ln1`)), `${p}/attn`, mask));
      h = tf.add(h, this.mlp(rmsNorm(h, this.v(`${p}/ln2`)), `${p}/mlp`));
    }
    return h;
  }

  /**
   * seq: [B, T, 2^n] with token 0 the target, tokens 1..V the node tables.
   * keyMask: optional [B, T] 0/1 marking real (non-padding) tokens.
   */
  forward(seq: tf.Tensor3D, keyMask?: tf.Tensor2D): ForwardResult {
    const { embedDim, n } = this.cfg;
    const [b, t, width] = seq.shape;
    if (width !== 1 << n) {
      throw new Error(`token width ${width} does not match 2^${n}`);
    }
    const nodes = t - 1;
    let mask = this.attentionMask(t);
    if (keyMask) {
      const pad = tf.mul(tf.sub(1, keyMask), NEG).reshape([b, 1, 1, t]);
      mask = tf.add(mask, pad);
    }

    let x = tf
      .matMul(seq.reshape([b * t, width]), this.v("embed/W"))
      .add(this.v("embed/b"))
      .reshape([b, t, embedDim]);
    const pe = tf.concat([
      this.v("pe/target").reshape([1, 1, embedDim]),
      this.v("pe/node").reshape([1, 1, embedDim]).tile([1, nodes, 1]),
    ], 1);
    x = tf.add(x, pe);

    const hidden = this.blockStack(x, "trunk", this.cfg.trunkLayers, mask);

    const branches: tf.Tensor[] = [];
    for (let m = 0; m < 4; m++) {
      let y = this.blockStack(hidden, `policy${m}/layer`, this.cfg.policyLayers, mask);
      y = rmsNorm(y, this.v(`policy${m}/final/ln`));
      const flat = y.reshape([b * t, embedDim]);
      const q = tf.matMul(flat, this.v(`policy${m}/final/Wq`)).reshape([b, t, embedDim]);
      const k = tf.matMul(flat, this.v(`policy${m}/final/Wk`)).reshape([b, t, embedDim]);
      // undamped bilinear readout: these scores are logits, not attention
      // weights, and the usual 1/sqrt(d) would slow their growth
      const scores = tf.matMul(q, k, false, true);
      // exclude the target token: node pairs only
      branches.push(scores.slice([0, 1, 1], [b, nodes, nodes]).reshape([b, 1, nodes, nodes]));
    }
    const policyLogits = tf.concat(branches, 1) as tf.Tensor4D;

    let z = this.blockStack(hidden, "value/layer", this.cfg.valueLayers, mask);
    z = rmsNorm(z, this.v("value/cross/ln"));
    const zq = tf
      .matMul(z.slice([0, 0, 0], [b, 1, embedDim]).reshape([b, embedDim]), this.v("value/cross/Wq"))
      .reshape([b, 1, embedDim]);
    const nodeH = z.slice([0, 1, 0], [b, nodes, embedDim]);
    const zk = tf
      .matMul(nodeH.reshape([b * nodes, embedDim]), this.v("value/cross/Wk"))
      .reshape([b, nodes, embedDim]);
    const zv = tf
      .matMul(nodeH.reshape([b * nodes, embedDim]), this.v("value/cross/Wv"))
      .reshape([b, nodes, embedDim]);
    let cross = tf.div(tf.matMul(zq, zk, false, true), Math.sqrt(embedDim)); // [B,1,V]
    if (keyMask) {
      const padNodes = tf
        .mul(tf.sub(1, keyMask.slice([0, 1], [b, nodes])), NEG)
        .reshape([b, 1, nodes]);
      cross = tf.add(cross, padNodes);
    }
    const ctx = tf.matMul(tf.softmax(cross), zv).reshape([b, embedDim]);
    const value = tf
      .tanh(tf.add(tf.matMul(ctx, this.v("value/out/W")), this.v("value/out/b")))
      .reshape([b]) as tf.Tensor1D;

    return { policyLogits, value };
  }

  variableList(): tf.Variable[] {
    return [...this.vars.values()];
  }
}

/** Token sequence for one state: target first, then node tables. */
export function buildSequence(nodeTables: number[][], target: number[]): number[][] {
  return [target, ...nodeTables];
}

export function sequencesToTensor(sequences: number[][][]): tf.Tensor3D {
  const b = sequences.length;
  const t = sequences[0].length;
  const w = sequences[0][0].length;
  const data = new Float32Array(b * t * w);
  let at = 0;
  for (const seq of sequences) {
    if (seq.length !== t) throw new Error("mixed sequence lengths in one batch");
    for (const token of seq) {
      data.set(token, at);
      at += w;
    }
  }
  return tf.tensor3d(data, [b, t, w]);
}
