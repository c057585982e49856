/** Greedy policy rollouts and random-baseline rollouts over the protocol. */

import { aggregate, EpisodeAccumulator, workerCountFromState, type Aggregate, type EpisodeMetrics } from './metrics.js'
import type { EnvClient } from './protocol.js'
import { Rng } from './rng.js'
import type { SacAgent } from './sac.js'

export interface RolloutOptions {
  episodes: number
  baseSeed: number
  scenario?: number
  maxSteps?: number
}

async function playEpisode(
  client: EnvClient,
  chooseAction: (state: number[]) => number[],
  seed: number,
  scenario: number | undefined,
  maxSteps: number,
): Promise<EpisodeMetrics> {
  let state = await client.reset(seed, scenario)
  const accumulator = new EpisodeAccumulator(workerCountFromState(state.length))
  for (let step = 0; step < maxSteps; step++) {
    const reply = await client.step(chooseAction(state))
    accumulator.addStep(reply)
    state = reply.state
    if (reply.done) break
  }
  return accumulator.finish()
}

/** Deterministic (mean-action) rollouts of a trained policy. */
export async function evaluatePolicy(client: EnvClient, agent: SacAgent, options: RolloutOptions): Promise<Aggregate> {
  const episodes: EpisodeMetrics[] = []
  for (let e = 0; e < options.episodes; e++) {
    episodes.push(
      await playEpisode(
        client,
        (state) => Array.from(agent.act(Float32Array.from(state), true)),
        options.baseSeed + e,
        options.scenario,
        options.maxSteps ?? 100,
      ),
    )
  }
  return aggregate(episodes)
}

/** Uniform-random action rollouts (the protocol-side random baseline). */
export async function evaluateRandom(client: EnvClient, options: RolloutOptions, rngSeed = 0): Promise<Aggregate> {
  const rng = new Rng(rngSeed)
  const episodes: EpisodeMetrics[] = []
  for (let e = 0; e < options.episodes; e++) {
    episodes.push(
      await playEpisode(
        client,
        (state) => Array.from({ length: 3 * workerCountFromState(state.length) }, () => rng.uniform(-1, 1)),
        options.baseSeed + e,
        options.scenario,
        options.maxSteps ?? 100,
      ),
    )
  }
  return aggregate(episodes)
}
