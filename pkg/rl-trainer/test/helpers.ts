import { mkdtempSync, mkdirSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { Graph, parseGraph } from '../src/graph.js';

export function tmpDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function graphDoc(
  nodes: [string, number, number][],
  edges: [number, number][],
): string {
  return JSON.stringify({
    format_version: 1,
    nodes: nodes.map(([name, param, out], id) => ({ id, name, param_bytes: param, out_bytes: out })),
    edges,
  });
}

export function makeGraph(nodes: [string, number, number][], edges: [number, number][]): Graph {
  return parseGraph(graphDoc(nodes, edges));
}

export function chainDoc(params: number[]): string {
  return graphDoc(
    params.map((p, i) => [`n${i}`, p, 1] as [string, number, number]),
    params.slice(1).map((_, i) => [i, i + 1] as [number, number]),
  );
}

/** Two-branch fixture: concat joins two level-1 parents, so it sits at
 * ASAP level 2; depth is 6. */
export function branchyGraph(): Graph {
  return makeGraph(
    [
      ['start', 0, 0],
      ['conv0', 10, 4],
      ['pool0', 2, 4],
      ['relu1', 1, 8],
      ['concat', 1, 8],
      ['conv1', 12, 4],
      ['conv2', 9, 4],
      ['add', 1, 4],
      ['relu3', 1, 4],
      ['end', 0, 0],
    ],
    [[0, 1], [0, 2], [1, 3], [1, 4], [2, 4], [3, 5], [4, 6], [4, 7], [6, 7], [5, 7], [7, 8], [8, 9]],
  );
}

export interface CorpusPair {
  graph: string; // graph JSON text
  label: Record<number, number>;
}

/** Write a labeled corpus in the exact layout of the exporter tool. */
export function writeCorpus(dir: string, numStages: number, pairs: CorpusPair[]): void {
  mkdirSync(join(dir, 'graphs'), { recursive: true });
  mkdirSync(join(dir, 'labels'), { recursive: true });
  const entries = pairs.map((p, i) => {
    const g = `graphs/graph_${String(i).padStart(4, '0')}.json`;
    const l = `labels/label_${String(i).padStart(4, '0')}.json`;
    writeFileSync(join(dir, g), p.graph, 'utf-8');
    const assignment: Record<string, number> = {};
    for (const [k, v] of Object.entries(p.label)) assignment[k] = v;
    writeFileSync(
      join(dir, l),
      JSON.stringify({
        format_version: 1,
        num_stages: numStages,
        assignment,
        meta: { producer: 'exact', gamma: null },
      }),
      'utf-8',
    );
    return { graph: g, label: l, seed: i, num_nodes: JSON.parse(p.graph).nodes.length };
  });
  writeFileSync(
    join(dir, 'manifest.json'),
    JSON.stringify({ format_version: 1, num_stages: numStages, master_seed: 0, skipped: 0, entries }),
    'utf-8',
  );
}
