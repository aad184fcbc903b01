#!/usr/bin/env node
/** Command-line entry: train / infer / eval. */

import { writeFileSync } from 'node:fs';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { initBackend } from './backend.js';
import { inferToFile } from './infer.js';
import { PAPER_DEFAULTS, evalAgent, trainAgent, writeCurve } from './train.js';

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      'train',
      'train the coarse-scheduling agent on an exported labeled corpus',
      (y) =>
        y
          .option('corpus', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true })
          .option('lr', { type: 'number', default: PAPER_DEFAULTS.lr })
          .option('epochs', { type: 'number', default: PAPER_DEFAULTS.epochs })
          .option('batch', { type: 'number', default: PAPER_DEFAULTS.batch })
          .option('seed', { type: 'number', default: PAPER_DEFAULTS.seed })
          .option('units', { type: 'number', default: PAPER_DEFAULTS.units })
          .option('holdout', { type: 'number', default: PAPER_DEFAULTS.holdout })
          .option('curve', { type: 'string', describe: 'write per-epoch costs to this CSV' }),
      async (args) => {
        const backend = await initBackend();
        console.log(`backend: ${backend}`);
        const result = await trainAgent(args.corpus, args.out, {
          lr: args.lr, epochs: args.epochs, batch: args.batch,
          seed: args.seed, units: args.units, holdout: args.holdout,
        });
        if (args.curve) writeCurve(args.curve, result);
        const first = result.curve[0];
        const last = result.curve[result.curve.length - 1];
        console.log(
          `trained on ${result.trainSize} pairs (${result.heldoutSize} held out); ` +
          `heldout 1-R: epoch1 ${first.heldoutCost.toFixed(4)} -> final ${last.heldoutCost.toFixed(4)}`,
        );
      },
    )
    .command(
      'infer',
      'emit a coarse schedule file for a graph',
      (y) =>
        y
          .option('checkpoint', { type: 'string', demandOption: true })
          .option('graph', { type: 'string', demandOption: true })
          .option('stages', { type: 'number', demandOption: true })
          .option('out', { type: 'string', demandOption: true }),
      async (args) => {
        await initBackend();
        const result = inferToFile(args.checkpoint, args.graph, args.stages, args.out);
        console.log(`wrote ${args.out}${result.repaired ? ' (projection repair applied)' : ''}`);
      },
    )
    .command(
      'eval',
      'mean greedy (1 - R) of a checkpoint over a labeled corpus',
      (y) =>
        y
          .option('checkpoint', { type: 'string', demandOption: true })
          .option('corpus', { type: 'string', demandOption: true })
          .option('out', { type: 'string', describe: 'write the per-instance report JSON here' }),
      async (args) => {
        await initBackend();
        const result = evalAgent(args.checkpoint, args.corpus);
        if (args.out) writeFileSync(args.out, JSON.stringify(result, null, 1), 'utf-8');
        console.log(`mean heldout 1-R: ${result.meanCost.toFixed(4)} over ${result.perInstance.length} instances`);
      },
    )
    .demandCommand(1)
    .strict()
    .help()
    .parseAsync();
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : err);
  process.exit(1);
});
