import { describe, expect, it } from 'vitest';

import { HASH_BUCKETS, NUM_FEATURES, embedGraph, nameHash, normalizationFromGraphs } from '../src/embedding.js';
import { asapLevels } from '../src/graph.js';
import { branchyGraph, makeGraph } from './helpers.js';

describe('embedGraph', () => {
  it('emits the concat row with its own level 2 coordinate', () => {
    const g = branchyGraph();
    const norm = normalizationFromGraphs([g]);
    const emb = embedGraph(g, norm);
    const byName = new Map(g.nodes.map((n) => [n.name, n.id]));
    const row = emb.order.indexOf(byName.get('concat')!);
    expect(emb.rows[row * NUM_FEATURES]).toBeCloseTo(2 / norm.coordDiv, 6);
  });

  it('gives a lone source zero coordinates', () => {
    const g = makeGraph([['solo', 5, 5]], []);
    const emb = embedGraph(g, { coordDiv: 4, paramDiv: 10, outDiv: 10 });
    expect(emb.rows[0]).toBe(0); // own level
    expect(emb.rows[1]).toBe(0); // no-parent sentinel
  });

  it('reduces multiple parents with max', () => {
    const g = makeGraph(
      [['a', 1, 1], ['b', 1, 1], ['c', 1, 1], ['d', 1, 1], ['e', 1, 1]],
      [[0, 1], [0, 2], [2, 3], [1, 4], [3, 4]],
    );
    expect(asapLevels(g)).toEqual([0, 1, 1, 2, 3]);
    const norm = { coordDiv: 4, paramDiv: 10, outDiv: 10 };
    const emb = embedGraph(g, norm);
    const row = emb.order.indexOf(4);
    // parents of e: b at level 1, d at level 2 -> max is 2
    expect(emb.rows[row * NUM_FEATURES + 1]).toBeCloseTo(2 / 4, 6);
  });

  it('is deterministic and row-aligned with (level, id) order', () => {
    const g = branchyGraph();
    const norm = normalizationFromGraphs([g]);
    const a = embedGraph(g, norm);
    const b = embedGraph(g, norm);
    expect(a.order).toEqual(b.order);
    expect(Array.from(a.rows)).toEqual(Array.from(b.rows));
    expect(a.order.length).toBe(g.nodes.length);
  });

  it('keeps every feature in [0, 1] under corpus normalization', () => {
    const g = branchyGraph();
    const norm = normalizationFromGraphs([g]);
    const emb = embedGraph(g, norm);
    for (const x of emb.rows) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(1);
    }
  });
});

describe('nameHash', () => {
  it('is stable and bucketed', () => {
    expect(nameHash('conv_1')).toBe(nameHash('conv_1'));
    for (const name of ['conv', 'relu', 'bn_12', 'add_3', 'pool_9']) {
      const h = nameHash(name);
      expect(h).toBeGreaterThanOrEqual(0);
      expect(h).toBeLessThan(HASH_BUCKETS);
    }
    expect(nameHash('conv_1')).not.toBe(nameHash('relu_1'));
  });
});
