/**
 * Training driver: collects transitions over the wire protocol, performs
 * periodic SAC update phases, decays the learning rate on an episode
 * schedule, and checkpoints the policy.
 */

import { writeFileSync } from 'node:fs'
import { saveCheckpoint } from './checkpoint.js'
import type { SacConfig } from './config.js'
import { workerCountFromState } from './metrics.js'
import { EnvClient } from './protocol.js'
import { ReplayBuffer } from './replay.js'
import { Rng } from './rng.js'
import { SacAgent } from './sac.js'

export interface TrainOptions {
  totalSteps: number
  seed: number
  scenario?: number
  checkpointPath?: string
  checkpointEvery?: number
  transcriptPath?: string
  logEvery?: number
  /** Reconnect attempts after a protocol failure before aborting. */
  retries?: number
  onLog?: (message: string) => void
}

export interface TrainResult {
  agent: SacAgent
  steps: number
  episodes: number
  episodeRewards: number[]
  replaySize: number
}

export type ClientFactory = () => Promise<EnvClient>

function randomAction(dim: number, rng: Rng): number[] {
  return Array.from({ length: dim }, () => rng.uniform(-1, 1))
}

export async function train(
  makeClient: ClientFactory,
  config: SacConfig,
  options: TrainOptions,
): Promise<TrainResult> {
  const log = options.onLog ?? ((message: string) => console.error(message))
  const retries = options.retries ?? 1
  const rng = new Rng(options.seed)
  let client = await makeClient()
  let state = await client.reset(options.seed, options.scenario)
  const stateDim = state.length
  const workerCount = workerCountFromState(stateDim)
  const actionDim = 3 * workerCount

  const agent = new SacAgent(stateDim, actionDim, config, options.seed)
  const replay = new ReplayBuffer(config.replaySize)
  const episodeRewards: number[] = []
  let episodeReward = 0
  let episodes = 0
  let attemptsLeft = retries

  const finishEpisode = () => {
    episodes += 1
    episodeRewards.push(episodeReward)
    episodeReward = 0
    if (episodes % config.lrDecayEpisodes === 0) {
      agent.setLearningRate(agent.learningRate * (1 - config.lrDecayRate))
      log(`episode ${episodes}: learning rate decayed to ${agent.learningRate}`)
    }
  }

  let step = 0
  while (step < options.totalSteps) {
    step += 1
    const action =
      step <= config.learningStarts
        ? randomAction(actionDim, rng)
        : Array.from(agent.act(Float32Array.from(state)))
    let reply
    try {
      reply = await client.step(action)
    } catch (err) {
      if (attemptsLeft <= 0) {
        if (options.checkpointPath) saveCheckpoint(options.checkpointPath, agent, step, episodes)
        throw new Error(`environment failed and retries are exhausted: ${String(err)}`)
      }
      attemptsLeft -= 1
      log(`environment failure (${String(err)}); reconnecting`)
      try {
        client.close()
      } catch {
        // already torn down
      }
      client = await makeClient()
      state = await client.reset(options.seed + episodes + 1, options.scenario)
      episodeReward = 0
      continue
    }
    replay.add({
      state: Float32Array.from(state),
      action: Float32Array.from(action),
      reward: reply.reward,
      nextState: Float32Array.from(reply.state),
      done: reply.done,
    })
    episodeReward += reply.reward
    if (reply.done) {
      finishEpisode()
      state = await client.reset(options.seed + episodes, options.scenario)
    } else {
      state = reply.state
    }

    if (step >= config.learningStarts && step % config.trainEvery === 0 && replay.size >= config.batchSize) {
      let criticLoss = 0
      for (let g = 0; g < config.gradientSteps; g++) {
        criticLoss = agent.update(replay.sample(config.batchSize, rng)).criticLoss
      }
      log(`step ${step}: trained ${config.gradientSteps} gradient steps, critic loss ${criticLoss.toFixed(4)}`)
    }
    if (options.checkpointPath && options.checkpointEvery && step % options.checkpointEvery === 0) {
      saveCheckpoint(options.checkpointPath, agent, step, episodes)
    }
    if (options.logEvery && step % options.logEvery === 0) {
      const recent = episodeRewards.slice(-20)
      const meanReward = recent.length ? recent.reduce((a, b) => a + b, 0) / recent.length : NaN
      log(`step ${step}/${options.totalSteps}: episodes ${episodes}, recent mean episode reward ${meanReward.toFixed(2)}`)
    }
  }

  if (options.checkpointPath) saveCheckpoint(options.checkpointPath, agent, step, episodes)
  if (options.transcriptPath) {
    writeFileSync(options.transcriptPath, client.transcript.map((e) => JSON.stringify(e)).join('\n') + '\n')
  }
  client.close()
  return { agent, steps: step, episodes, episodeRewards, replaySize: replay.size }
}
