/**
 * Schedule-file I/O plus the projection repair applied to every emitted
 * schedule, mirroring the scheduling toolkit's semantics so the files always
 * validate: raise each node to its predecessors' stage in topological order,
 * then restore the non-empty-stage policy by compacting used stages and
 * splitting the fullest stage at its topological midpoint.
 */

import { readFileSync, writeFileSync } from 'node:fs';

import { Graph, asapLevels, topoOrder } from './graph.js';

export interface ScheduleDoc {
  format_version: number;
  num_stages: number;
  assignment: Record<string, number>;
  meta: { producer: string; gamma: number | null };
}

export function readSchedule(path: string): ScheduleDoc {
  const doc = JSON.parse(readFileSync(path, 'utf-8')) as ScheduleDoc;
  if (doc.format_version !== 1) {
    throw new Error(`unsupported schedule format_version: ${doc.format_version}`);
  }
  return doc;
}

export function writeSchedule(
  path: string,
  numStages: number,
  stages: Map<number, number>,
  producer: string,
  gamma: number | null = null,
): void {
  const assignment: Record<string, number> = {};
  for (const v of [...stages.keys()].sort((a, b) => a - b)) {
    assignment[String(v)] = stages.get(v)!;
  }
  const doc: ScheduleDoc = { format_version: 1, num_stages: numStages, assignment, meta: { producer, gamma } };
  writeFileSync(path, JSON.stringify(doc, null, 1), 'utf-8');
}

export interface Violation {
  kind: 'dependence' | 'empty_stage' | 'unassigned';
  detail: string;
}

export function validateSchedule(g: Graph, numStages: number, stages: Map<number, number>): Violation[] {
  const out: Violation[] = [];
  for (const node of g.nodes) {
    if (!stages.has(node.id)) out.push({ kind: 'unassigned', detail: `node ${node.id}` });
  }
  for (const [i, j] of g.edges) {
    const si = stages.get(i);
    const sj = stages.get(j);
    if (si !== undefined && sj !== undefined && si > sj) {
      out.push({ kind: 'dependence', detail: `edge (${i}, ${j}) stages (${si}, ${sj})` });
    }
  }
  const counts = new Array<number>(numStages).fill(0);
  for (const s of stages.values()) counts[s]++;
  counts.forEach((c, k) => {
    if (c === 0) out.push({ kind: 'empty_stage', detail: `stage ${k}` });
  });
  return out;
}

export function repairSchedule(g: Graph, numStages: number, raw: Map<number, number>): Map<number, number> {
  const n = g.nodes.length;
  if (numStages > n) throw new Error(`cannot fill ${numStages} stages with ${n} nodes`);
  const stages = new Map(raw);
  for (const v of topoOrder(g)) {
    for (const u of g.preds[v]) {
      if (stages.get(u)! > stages.get(v)!) stages.set(v, stages.get(u)!);
    }
  }

  const used = [...new Set(stages.values())].sort((a, b) => a - b);
  if (used.length === numStages && used.every((s, i) => s === i)) return stages;

  const remap = new Map(used.map((s, i) => [s, i]));
  for (const [v, s] of stages) stages.set(v, remap.get(s)!);
  let numUsed = used.length;
  const levels = asapLevels(g);
  while (numUsed < numStages) {
    const members: number[][] = Array.from({ length: numUsed }, () => []);
    for (const [v, s] of stages) members[s].push(v);
    let donor = 0;
    for (let k = 1; k < numUsed; k++) {
      if (members[k].length > members[donor].length) donor = k;
    }
    const sorted = members[donor].sort((a, b) => (levels[a] - levels[b]) || (a - b));
    const keep = Math.ceil(sorted.length / 2);
    const moved = new Set(sorted.slice(keep));
    for (const [v, s] of stages) {
      if (s > donor) stages.set(v, s + 1);
      else if (moved.has(v)) stages.set(v, donor + 1);
    }
    numUsed++;
  }
  return stages;
}
