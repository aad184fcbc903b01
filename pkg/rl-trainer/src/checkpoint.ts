/**
 * Checkpoint container: a single JSON document holding the agent config,
 * the embedding normalization constants, the training provenance, and every
 * weight tensor as base64-encoded little-endian float32 data.
 */

import { readFileSync, writeFileSync } from 'node:fs';

import * as tf from '@tensorflow/tfjs';

import { Normalization } from './embedding.js';
import { ModelConfig, StageScheduler } from './model.js';

export const CHECKPOINT_VERSION = 1;

export interface TrainingInfo {
  lr: number;
  epochs: number;
  batch: number;
  seed: number;
  corpus: string;
}

export interface Checkpoint {
  format_version: number;
  config: ModelConfig;
  normalization: Normalization;
  training: TrainingInfo | null;
  weights: Record<string, { shape: number[]; data: string }>;
}

function encode(data: Float32Array): string {
  return Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString('base64');
}

function decode(text: string): Float32Array {
  const buf = Buffer.from(text, 'base64');
  return new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
}

export function saveCheckpoint(
  path: string,
  model: StageScheduler,
  normalization: Normalization,
  training: TrainingInfo | null,
): void {
  const weights: Checkpoint['weights'] = {};
  for (const [name, variable] of Object.entries(model.vars)) {
    weights[name] = {
      shape: variable.shape.slice(),
      data: encode(variable.dataSync() as Float32Array),
    };
  }
  const doc: Checkpoint = {
    format_version: CHECKPOINT_VERSION,
    config: model.config,
    normalization,
    training,
    weights,
  };
  writeFileSync(path, JSON.stringify(doc), 'utf-8');
}

export function loadCheckpoint(path: string): { model: StageScheduler; checkpoint: Checkpoint } {
  const doc = JSON.parse(readFileSync(path, 'utf-8')) as Checkpoint;
  if (doc.format_version !== CHECKPOINT_VERSION) {
    throw new Error(`incompatible checkpoint format_version: ${doc.format_version}`);
  }
  const model = new StageScheduler(doc.config);
  for (const [name, entry] of Object.entries(doc.weights)) {
    const variable = model.vars[name];
    if (!variable) throw new Error(`unknown weight in checkpoint: ${name}`);
    variable.assign(tf.tensor(decode(entry.data), entry.shape));
  }
  return { model, checkpoint: doc };
}
