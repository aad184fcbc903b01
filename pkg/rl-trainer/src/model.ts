/**
 * The coarse-scheduling agent: an LSTM encoder digests the node-feature
 * sequence into latent memory states, and an LSTM decoder with a
 * pointer-style attention head emits one stage id per node (a K-way
 * classification over nodes in level order). The first decoder memory state
 * is itself trainable.
 */

import * as tf from '@tensorflow/tfjs';

import { NUM_FEATURES } from './embedding.js';
import { Rng, mulberry32, sampleIndex } from './rng.js';

export interface ModelConfig {
  units: number; // LSTM cells per direction (encoder and decoder alike)
  numStages: number;
  features: number;
}

export interface Rollout {
  /** Sampled or greedy stage per node, [batch][time]. */
  actions: number[][];
  /** Sum over time of log p(action_t), shape [batch]; present only when
   * requested (it is the REINFORCE surrogate's differentiable part). */
  sumLogP?: tf.Tensor1D;
}

function glorot(rng: Rng, rows: number, cols: number): tf.Tensor2D {
  const lim = Math.sqrt(6 / (rows + cols));
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) data[i] = (rng() * 2 - 1) * lim;
  return tf.tensor2d(data, [rows, cols]);
}

function lstmBias(units: number): tf.Tensor1D {
  // gate order i, f, g, o; forget gate starts open
  const data = new Float32Array(4 * units);
  data.fill(1, units, 2 * units);
  return tf.tensor1d(data);
}

let instanceCounter = 0;

export class StageScheduler {
  readonly config: ModelConfig;
  /** Logical weight name -> variable (tf-side names carry an instance
   * prefix because the tf engine requires global uniqueness). */
  readonly vars: Record<string, tf.Variable> = {};

  constructor(config: ModelConfig, seed = 0) {
    this.config = config;
    const { units: H, features: F, numStages: K } = config;
    const rng = mulberry32(seed ^ 0x5eed);
    const prefix = `agent${instanceCounter++}`;
    const mk = (name: string, t: tf.Tensor) => {
      this.vars[name] = tf.variable(t, true, `${prefix}/${name}`);
    };
    mk('enc_Wx', glorot(rng, F, 4 * H));
    mk('enc_Wh', glorot(rng, H, 4 * H));
    mk('enc_b', lstmBias(H));
    mk('dec_Wx', glorot(rng, F + H, 4 * H));
    mk('dec_Wh', glorot(rng, H, 4 * H));
    mk('dec_b', lstmBias(H));
    mk('dec_h0', tf.zeros([1, H]));
    mk('dec_c0', tf.zeros([1, H]));
    mk('attn_W1', glorot(rng, H, H));
    mk('attn_W2', glorot(rng, H, H));
    mk('attn_b', tf.zeros([H]));
    mk('attn_v', glorot(rng, H, 1).reshape([H]) as tf.Tensor1D);
    mk('out_W', glorot(rng, 2 * H, K));
    mk('out_b', tf.zeros([K]));
  }

  trainableVariables(): tf.Variable[] {
    return Object.values(this.vars);
  }

  private lstmStep(
    x: tf.Tensor2D, h: tf.Tensor2D, c: tf.Tensor2D,
    Wx: tf.Variable, Wh: tf.Variable, b: tf.Variable,
  ): [tf.Tensor2D, tf.Tensor2D] {
    const H = this.config.units;
    const gates = x.matMul(Wx as unknown as tf.Tensor2D)
      .add(h.matMul(Wh as unknown as tf.Tensor2D))
      .add(b) as tf.Tensor2D;
    const [i, f, g, o] = tf.split(gates, 4, 1) as tf.Tensor2D[];
    const cNext = tf.sigmoid(f).mul(c).add(tf.sigmoid(i).mul(tf.tanh(g))) as tf.Tensor2D;
    const hNext = tf.sigmoid(o).mul(tf.tanh(cNext)) as tf.Tensor2D;
    return [hNext, cNext];
  }

  /**
   * Run the agent over a batch of equally sized feature sequences.
   *
   * @param feats   [batch, time, features]
   * @param mode    greedy argmax or seeded sampling from the stage softmax
   * @param rng     consumed only in sample mode
   * @param withLogProb collect the differentiable sum of chosen log-probs
   */
  rollout(
    feats: tf.Tensor3D,
    mode: 'greedy' | 'sample',
    rng?: Rng,
    withLogProb = false,
  ): Rollout {
    const [B, T] = feats.shape;
    const H = this.config.units;
    const v = this.vars;

    const steps = tf.unstack(feats, 1) as tf.Tensor2D[];
    let h = tf.zeros([B, H]) as tf.Tensor2D;
    let c = tf.zeros([B, H]) as tf.Tensor2D;
    const encStates: tf.Tensor2D[] = [];
    for (let t = 0; t < T; t++) {
      [h, c] = this.lstmStep(steps[t], h, c, v.enc_Wx, v.enc_Wh, v.enc_b);
      encStates.push(h);
    }
    const encStack = tf.stack(encStates, 1) as tf.Tensor3D; // [B,T,H]
    const encProj = encStack
      .reshape([B * T, H])
      .matMul(v.attn_W1 as unknown as tf.Tensor2D)
      .reshape([B, T, H])
      .add(v.attn_b) as tf.Tensor3D;

    // the encoder's final latent memory seeds the decoder cell state; the
    // decoder's first hidden memory is a trainable parameter
    let hDec = (v.dec_h0 as unknown as tf.Tensor2D).tile([B, 1]) as tf.Tensor2D;
    let cDec = c;
    let ctx = tf.zeros([B, H]) as tf.Tensor2D;
    const actions: number[][] = Array.from({ length: B }, () => []);
    let sumLogP = withLogProb ? (tf.zeros([B]) as tf.Tensor1D) : undefined;

    for (let t = 0; t < T; t++) {
      const input = tf.concat([steps[t], ctx], 1) as tf.Tensor2D;
      [hDec, cDec] = this.lstmStep(input, hDec, cDec, v.dec_Wx, v.dec_Wh, v.dec_b);
      const dProj = hDec.matMul(v.attn_W2 as unknown as tf.Tensor2D); // [B,H]
      const scores = tf.tanh(encProj.add(dProj.expandDims(1)))
        .mul(v.attn_v)
        .sum(2) as tf.Tensor2D; // [B,T]
      const alpha = tf.softmax(scores);
      ctx = alpha.expandDims(2).mul(encStack).sum(1) as tf.Tensor2D; // [B,H]
      const logits = tf.concat([hDec, ctx], 1)
        .matMul(v.out_W as unknown as tf.Tensor2D)
        .add(v.out_b) as tf.Tensor2D; // [B,K]

      let chosen: number[];
      if (mode === 'greedy') {
        chosen = Array.from(logits.argMax(1).dataSync());
      } else {
        const probs = tf.softmax(logits).dataSync() as Float32Array;
        const K = this.config.numStages;
        chosen = [];
        for (let b = 0; b < B; b++) {
          chosen.push(sampleIndex(probs.subarray(b * K, (b + 1) * K), rng!));
        }
      }
      for (let b = 0; b < B; b++) actions[b].push(chosen[b]);
      if (withLogProb) {
        const logp = tf.logSoftmax(logits);
        const mask = tf.oneHot(tf.tensor1d(chosen, 'int32'), this.config.numStages);
        sumLogP = sumLogP!.add(logp.mul(mask).sum(1)) as tf.Tensor1D;
      }
    }
    return { actions, sumLogP };
  }

  /** Greedy stages for a single graph's feature rows. */
  decodeGreedy(rows: Float32Array, numNodes: number): number[] {
    return tf.tidy(() => {
      const feats = tf.tensor3d(rows, [1, numNodes, this.config.features]);
      return this.rollout(feats, 'greedy').actions[0];
    });
  }

  dispose(): void {
    for (const variable of Object.values(this.vars)) variable.dispose();
  }
}

export function defaultConfig(numStages: number, units = 256): ModelConfig {
  return { units, numStages, features: NUM_FEATURES };
}
