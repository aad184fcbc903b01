/**
 * Graph-file reading and the topological machinery the scheduler relies on.
 * The JSON schema is shared with the exact-scheduling toolkit: nodes carry
 * parameter bytes and output tensor bytes, edges are [src, dst] pairs over
 * dense integer ids.
 */

import { readFileSync } from 'node:fs';

export interface GraphNode {
  id: number;
  name: string;
  param_bytes: number;
  out_bytes: number;
}

export interface Graph {
  nodes: GraphNode[];
  edges: [number, number][];
  preds: number[][];
  succs: number[][];
}

export function parseGraph(text: string): Graph {
  const doc = JSON.parse(text);
  if (doc.format_version !== 1) {
    throw new Error(`unsupported graph format_version: ${doc.format_version}`);
  }
  const nodes: GraphNode[] = doc.nodes;
  const n = nodes.length;
  nodes.forEach((node, i) => {
    if (node.id !== i) throw new Error(`node ids must be dense, got ${node.id} at ${i}`);
    if (node.param_bytes < 0 || node.out_bytes < 0) throw new Error('negative attribute');
  });
  const preds: number[][] = Array.from({ length: n }, () => []);
  const succs: number[][] = Array.from({ length: n }, () => []);
  const edges: [number, number][] = [];
  for (const [src, dst] of doc.edges as [number, number][]) {
    if (src < 0 || src >= n || dst < 0 || dst >= n) throw new Error(`dangling edge (${src}, ${dst})`);
    edges.push([src, dst]);
    succs[src].push(dst);
    preds[dst].push(src);
  }
  return { nodes, edges, preds, succs };
}

export function readGraph(path: string): Graph {
  return parseGraph(readFileSync(path, 'utf-8'));
}

export function topoOrder(g: Graph): number[] {
  const n = g.nodes.length;
  const indeg = g.preds.map((p) => p.length);
  const ready: number[] = [];
  for (let v = 0; v < n; v++) if (indeg[v] === 0) ready.push(v);
  const order: number[] = [];
  while (ready.length) {
    const v = ready.pop()!;
    order.push(v);
    for (const w of g.succs[v]) {
      if (--indeg[w] === 0) ready.push(w);
    }
  }
  if (order.length !== n) throw new Error('cycle detected');
  return order;
}

/** ASAP level per node: 0 for sources, otherwise 1 + max over parents. */
export function asapLevels(g: Graph): number[] {
  const levels = new Array<number>(g.nodes.length).fill(0);
  for (const v of topoOrder(g)) {
    for (const u of g.preds[v]) {
      if (levels[u] + 1 > levels[v]) levels[v] = levels[u] + 1;
    }
  }
  return levels;
}

/** Node ids sorted by (ASAP level, id): the canonical sequence order for
 * embedding and decoding. */
export function levelOrder(g: Graph): number[] {
  const levels = asapLevels(g);
  return g.nodes
    .map((node) => node.id)
    .sort((a, b) => (levels[a] - levels[b]) || (a - b));
}
