/**
 * Graph embedding: one feature row per node in (ASAP level, id) order.
 * Features: own topological level, parent level (max over parents, 0 for
 * sources), a bucketed hash of the operator name, and the two byte
 * attributes. Coordinates divide by a corpus-wide level scale and byte
 * attributes are log-compressed then scaled; the constants live in the
 * checkpoint so inference reproduces training exactly.
 */

import { Graph, asapLevels, levelOrder } from './graph.js';

export const NUM_FEATURES = 5;
export const HASH_BUCKETS = 256;

export interface Normalization {
  coordDiv: number;
  paramDiv: number;
  outDiv: number;
}

/** FNV-1a over the UTF-16 code units, folded into HASH_BUCKETS ids. */
export function nameHash(name: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < name.length; i++) {
    h ^= name.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h % HASH_BUCKETS;
}

export interface GraphEmbedding {
  order: number[]; // node ids, (level, id) sorted; row i describes order[i]
  rows: Float32Array; // [order.length, NUM_FEATURES]
}

export function normalizationFromGraphs(graphs: Graph[]): Normalization {
  let maxLevel = 1;
  let maxParam = 1;
  let maxOut = 1;
  for (const g of graphs) {
    for (const lv of asapLevels(g)) maxLevel = Math.max(maxLevel, lv);
    for (const node of g.nodes) {
      maxParam = Math.max(maxParam, node.param_bytes);
      maxOut = Math.max(maxOut, node.out_bytes);
    }
  }
  return { coordDiv: maxLevel, paramDiv: Math.log1p(maxParam), outDiv: Math.log1p(maxOut) };
}

export function embedGraph(g: Graph, norm: Normalization): GraphEmbedding {
  const levels = asapLevels(g);
  const order = levelOrder(g);
  const rows = new Float32Array(order.length * NUM_FEATURES);
  order.forEach((v, i) => {
    let parentLevel = 0;
    for (const u of g.preds[v]) parentLevel = Math.max(parentLevel, levels[u]);
    const base = i * NUM_FEATURES;
    rows[base] = levels[v] / norm.coordDiv;
    rows[base + 1] = parentLevel / norm.coordDiv;
    rows[base + 2] = nameHash(g.nodes[v].name) / HASH_BUCKETS;
    rows[base + 3] = Math.log1p(g.nodes[v].param_bytes) / norm.paramDiv;
    rows[base + 4] = Math.log1p(g.nodes[v].out_bytes) / norm.outDiv;
  });
  return { order, rows };
}
