/**
 * Inference: greedy-decode a stage per node, then run the projection repair
 * so the written schedule file always validates against the graph.
 */

import { loadCheckpoint } from './checkpoint.js';
import { embedGraph } from './embedding.js';
import { Graph, readGraph } from './graph.js';
import { repairSchedule, validateSchedule, writeSchedule } from './schedule.js';

export interface InferResult {
  stages: Map<number, number>;
  rawStages: Map<number, number>;
  repaired: boolean;
}

export function inferStages(checkpointPath: string, g: Graph, numStages: number): InferResult {
  const { model, checkpoint } = loadCheckpoint(checkpointPath);
  if (numStages !== checkpoint.config.numStages) {
    throw new Error(
      `requested ${numStages} stages but checkpoint was trained for ${checkpoint.config.numStages}`,
    );
  }
  const embedding = embedGraph(g, checkpoint.normalization);
  const actions = model.decodeGreedy(embedding.rows, embedding.order.length);
  model.dispose();
  const raw = new Map<number, number>();
  embedding.order.forEach((v, i) => raw.set(v, actions[i]));
  const stages = repairSchedule(g, numStages, raw);
  const violations = validateSchedule(g, numStages, stages);
  if (violations.length) {
    throw new Error(`internal error: repaired schedule still invalid (${violations[0].detail})`);
  }
  let repaired = false;
  for (const [v, s] of raw) if (stages.get(v) !== s) repaired = true;
  return { stages, rawStages: raw, repaired };
}

export function inferToFile(
  checkpointPath: string,
  graphPath: string,
  numStages: number,
  outPath: string,
): InferResult {
  const g = readGraph(graphPath);
  const result = inferStages(checkpointPath, g, numStages);
  writeSchedule(outPath, numStages, result.stages, 'rl', null);
  return result;
}
