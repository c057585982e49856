#!/usr/bin/env node
/** `sac-eval`: greedy rollouts of a checkpointed policy with table metrics. */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { loadCheckpoint } from './checkpoint.js'
import { formatAggregate } from './metrics.js'
import { evaluatePolicy } from './rollout.js'
import { makeClientFactory } from './train.js'

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option('checkpoint', { type: 'string', demandOption: true })
    .option('episodes', { type: 'number', default: 100 })
    .option('env', { type: 'string' })
    .option('spawn', { type: 'string' })
    .option('seed', { type: 'number', default: 10_000 })
    .option('scenario', { type: 'number', choices: [1, 2, 3] })
    .strict()
    .parse()

  const { agent, checkpoint } = loadCheckpoint(argv.checkpoint)
  console.error(`loaded checkpoint: step ${checkpoint.step}, ${checkpoint.episodes} episodes`)
  const client = await makeClientFactory(argv.env, argv.spawn)()
  const result = await evaluatePolicy(client, agent, {
    episodes: argv.episodes,
    baseSeed: argv.seed,
    scenario: argv.scenario,
  })
  client.close()
  console.log(formatAggregate(result))
  process.exit(0)
}

const isDirectRun = process.argv[1]?.endsWith('evaluate.js') || process.argv[1]?.endsWith('sac-eval')
if (isDirectRun) {
  main().catch((err) => {
    console.error(String(err))
    process.exit(1)
  })
}
