/**
 * Imitation training: the agent samples stage sequences, the reward is the
 * cosine similarity against the exact-solver label, and the expected
 * shortfall E[1 - R] is driven down by policy gradient with an exponential
 * moving-average baseline. Held-out greedy cost is logged per epoch.
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { loadCheckpoint, saveCheckpoint } from './checkpoint.js';
import { GraphEmbedding, NUM_FEATURES, Normalization, embedGraph, normalizationFromGraphs } from './embedding.js';
import { Graph, readGraph } from './graph.js';
import { StageScheduler, defaultConfig } from './model.js';
import { cosineReward } from './reward.js';
import { mulberry32, shuffled } from './rng.js';
import { readSchedule } from './schedule.js';

export interface LabeledPair {
  name: string;
  graph: Graph;
  embedding: GraphEmbedding;
  /** Label stages over nodes in the embedding's node order. */
  target: number[];
}

export interface TrainOptions {
  lr: number;
  epochs: number;
  batch: number;
  seed: number;
  units: number;
  holdout: number;
  epsilon: number;
}

export const PAPER_DEFAULTS: TrainOptions = {
  lr: 1e-4,
  epochs: 300,
  batch: 128,
  seed: 0,
  units: 256,
  holdout: 0.1,
  epsilon: 1e-8,
};

export interface EpochStats {
  epoch: number;
  trainCost: number; // mean sampled (1 - R) seen during updates
  heldoutCost: number; // mean greedy (1 - R) on the held-out split
}

export interface TrainResult {
  curve: EpochStats[];
  normalization: Normalization;
  numStages: number;
  trainSize: number;
  heldoutSize: number;
}

interface ManifestEntry {
  graph: string;
  label: string;
}

export function loadCorpus(corpusDir: string): { numStages: number; entries: { name: string; graph: Graph; label: Map<number, number> }[] } {
  const manifest = JSON.parse(readFileSync(join(corpusDir, 'manifest.json'), 'utf-8'));
  if (manifest.format_version !== 1) {
    throw new Error(`unsupported manifest format_version: ${manifest.format_version}`);
  }
  const entries = (manifest.entries as ManifestEntry[]).map((e) => {
    const graph = readGraph(join(corpusDir, e.graph));
    const doc = readSchedule(join(corpusDir, e.label));
    if (doc.num_stages !== manifest.num_stages) {
      throw new Error(`label ${e.label} stage count ${doc.num_stages} != corpus ${manifest.num_stages}`);
    }
    const label = new Map<number, number>();
    for (const [k, s] of Object.entries(doc.assignment)) {
      const v = Number(k);
      if (v < 0 || v >= graph.nodes.length) throw new Error(`label ${e.label}: unknown node ${v}`);
      label.set(v, s);
    }
    if (label.size !== graph.nodes.length) throw new Error(`label ${e.label}: incomplete assignment`);
    return { name: e.graph, graph, label };
  });
  return { numStages: manifest.num_stages, entries };
}

function toPairs(
  entries: { name: string; graph: Graph; label: Map<number, number> }[],
  norm: Normalization,
): LabeledPair[] {
  return entries.map((e) => {
    const embedding = embedGraph(e.graph, norm);
    return {
      name: e.name,
      graph: e.graph,
      embedding,
      target: embedding.order.map((v) => e.label.get(v)!),
    };
  });
}

function batchTensor(pairs: LabeledPair[]): tf.Tensor3D {
  const T = pairs[0].embedding.order.length;
  const rows = new Float32Array(pairs.length * T * NUM_FEATURES);
  pairs.forEach((p, b) => rows.set(p.embedding.rows, b * T * NUM_FEATURES));
  return tf.tensor3d(rows, [pairs.length, T, NUM_FEATURES]);
}

/** Group pairs into equally sized-sequence batches (graphs of different node
 * counts never share a batch). */
function makeBatches(pairs: LabeledPair[], batchSize: number): LabeledPair[][] {
  const byLen = new Map<number, LabeledPair[]>();
  for (const p of pairs) {
    const T = p.embedding.order.length;
    if (!byLen.has(T)) byLen.set(T, []);
    byLen.get(T)!.push(p);
  }
  const batches: LabeledPair[][] = [];
  for (const bucket of byLen.values()) {
    for (let i = 0; i < bucket.length; i += batchSize) {
      batches.push(bucket.slice(i, i + batchSize));
    }
  }
  return batches;
}

export function greedyCost(model: StageScheduler, pairs: LabeledPair[], epsilon: number): number {
  if (!pairs.length) return 0;
  let total = 0;
  for (const batch of makeBatches(pairs, 256)) {
    const costs = tf.tidy(() => {
      const feats = batchTensor(batch);
      const { actions } = model.rollout(feats, 'greedy');
      return actions.map((pi, b) => 1 - cosineReward(pi, batch[b].target, epsilon));
    });
    for (const c of costs) total += c;
  }
  return total / pairs.length;
}

export async function trainAgent(
  corpusDir: string,
  outPath: string,
  opts: Partial<TrainOptions> = {},
): Promise<TrainResult> {
  const o: TrainOptions = { ...PAPER_DEFAULTS, ...opts };
  const { numStages, entries } = loadCorpus(corpusDir);
  if (!entries.length) throw new Error('corpus is empty');

  const rng = mulberry32(o.seed ^ 0x7ea1);
  const order = shuffled(entries, rng);
  const heldoutSize = Math.min(Math.max(1, Math.round(order.length * o.holdout)), order.length - 1);
  const heldEntries = order.slice(0, heldoutSize);
  const trainEntries = order.slice(heldoutSize);

  const norm = normalizationFromGraphs(trainEntries.map((e) => e.graph));
  const trainPairs = toPairs(trainEntries, norm);
  const heldPairs = toPairs(heldEntries, norm);

  const model = new StageScheduler(defaultConfig(numStages, o.units), o.seed);
  const optimizer = tf.train.adam(o.lr);
  let baseline = 0;
  let baselineReady = false;
  const curve: EpochStats[] = [];

  for (let epoch = 1; epoch <= o.epochs; epoch++) {
    let epochCost = 0;
    let seen = 0;
    for (const batch of makeBatches(shuffled(trainPairs, rng), o.batch)) {
      const costs: number[] = [];
      const { value, grads } = tf.variableGrads(() =>
        tf.tidy(() => {
          const feats = batchTensor(batch);
          const { actions, sumLogP } = model.rollout(feats, 'sample', rng, true);
          for (let b = 0; b < batch.length; b++) {
            costs.push(1 - cosineReward(actions[b], batch[b].target, o.epsilon));
          }
          const base = baselineReady ? baseline : costs.reduce((a, c) => a + c, 0) / costs.length;
          const adv = tf.tensor1d(costs.map((c) => c - base));
          return sumLogP!.mul(adv).mean().asScalar();
        }),
      model.trainableVariables());
      const loss = value.dataSync()[0];
      value.dispose();
      if (!Number.isFinite(loss)) {
        throw new Error(`training diverged: surrogate loss ${loss} at epoch ${epoch} after ${seen} samples`);
      }
      optimizer.applyGradients(Object.entries(grads).map(([name, tensor]) => ({ name, tensor })));
      tf.dispose(grads);
      const meanCost = costs.reduce((a, c) => a + c, 0) / costs.length;
      baseline = baselineReady ? 0.9 * baseline + 0.1 * meanCost : meanCost;
      baselineReady = true;
      epochCost += meanCost * batch.length;
      seen += batch.length;
      // keep the event loop responsive; wasm kernels run synchronously
      await new Promise((resolve) => setImmediate(resolve));
    }
    const heldoutCost = greedyCost(model, heldPairs, o.epsilon);
    curve.push({ epoch, trainCost: epochCost / Math.max(1, seen), heldoutCost });
  }

  saveCheckpoint(outPath, model, norm, {
    lr: o.lr, epochs: o.epochs, batch: o.batch, seed: o.seed, corpus: corpusDir,
  });
  model.dispose();
  return { curve, normalization: norm, numStages, trainSize: trainPairs.length, heldoutSize: heldPairs.length };
}

export function writeCurve(path: string, result: TrainResult): void {
  const lines = ['epoch,train_cost,heldout_cost'];
  for (const row of result.curve) {
    lines.push(`${row.epoch},${row.trainCost.toFixed(6)},${row.heldoutCost.toFixed(6)}`);
  }
  writeFileSync(path, lines.join('\n') + '\n', 'utf-8');
}

export interface EvalResult {
  meanCost: number;
  perInstance: { name: string; cost: number }[];
}

export function evalAgent(checkpointPath: string, corpusDir: string, epsilon = 1e-8): EvalResult {
  const { model, checkpoint } = loadCheckpoint(checkpointPath);
  const { numStages, entries } = loadCorpus(corpusDir);
  if (numStages !== checkpoint.config.numStages) {
    throw new Error(`corpus stage count ${numStages} != checkpoint ${checkpoint.config.numStages}`);
  }
  const pairs = toPairs(entries, checkpoint.normalization);
  const perInstance = pairs.map((p) => {
    const actions = model.decodeGreedy(p.embedding.rows, p.embedding.order.length);
    return { name: p.name, cost: 1 - cosineReward(actions, p.target, epsilon) };
  });
  model.dispose();
  const meanCost = perInstance.reduce((a, r) => a + r.cost, 0) / Math.max(1, perInstance.length);
  return { meanCost, perInstance };
}
