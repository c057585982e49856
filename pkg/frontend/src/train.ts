#!/usr/bin/env node
/** `sac-train`: train a policy against a protocol environment server. */

import { readFileSync } from 'node:fs'
import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { mergeConfig, type SacConfig } from './config.js'
import { EnvClient } from './protocol.js'
import { train, type ClientFactory } from './trainer.js'

export function makeClientFactory(env?: string, spawnCommand?: string): ClientFactory {
  if (env) return () => EnvClient.connect(env)
  if (spawnCommand) {
    const parts = spawnCommand.split(/\s+/).filter(Boolean)
    return async () => EnvClient.spawnServer(parts[0], parts.slice(1))
  }
  throw new Error('provide --env host:port or --spawn "command ..."')
}

export function loadConfigFile(path?: string): SacConfig {
  if (!path) return mergeConfig({})
  return mergeConfig(JSON.parse(readFileSync(path, 'utf-8')) as Partial<SacConfig>)
}

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option('env', { type: 'string', describe: 'environment server address host:port' })
    .option('spawn', { type: 'string', describe: 'command to spawn a stdio environment server' })
    .option('steps', { type: 'number', demandOption: true, describe: 'total environment steps' })
    .option('config', { type: 'string', describe: 'JSON file overriding agent defaults' })
    .option('seed', { type: 'number', default: 0 })
    .option('scenario', { type: 'number', choices: [1, 2, 3] })
    .option('checkpoint', { type: 'string', default: 'checkpoint.json' })
    .option('checkpoint-every', { type: 'number', default: 5000 })
    .option('record', { type: 'string', describe: 'write the session transcript (JSONL) here' })
    .option('log-every', { type: 'number', default: 1000 })
    .strict()
    .parse()

  const config = loadConfigFile(argv.config)
  const result = await train(makeClientFactory(argv.env, argv.spawn), config, {
    totalSteps: argv.steps,
    seed: argv.seed,
    scenario: argv.scenario,
    checkpointPath: argv.checkpoint,
    checkpointEvery: argv['checkpoint-every'],
    transcriptPath: argv.record,
    logEvery: argv['log-every'],
  })
  console.error(
    `done: ${result.steps} steps, ${result.episodes} episodes, replay ${result.replaySize}; ` +
      `checkpoint at ${argv.checkpoint}`,
  )
  process.exit(0)
}

const isDirectRun = process.argv[1]?.endsWith('train.js') || process.argv[1]?.endsWith('sac-train')
if (isDirectRun) {
  main().catch((err) => {
    console.error(String(err))
    process.exit(1)
  })
}
