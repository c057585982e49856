/**
 * Self-describing JSON checkpoint container for trained policies.
 *
 * A checkpoint stores the full agent state (all network weights and the
 * entropy coefficient), the training step, the config and its hash; loading
 * refuses configs whose hash does not match, so resumed runs cannot silently
 * change architecture.
 */

import { readFileSync, writeFileSync } from 'node:fs'
import { configHash, mergeConfig, type SacConfig } from './config.js'
import { SacAgent } from './sac.js'

export interface Checkpoint {
  format: 'greenflag-sac-checkpoint'
  version: 1
  stateDim: number
  actionDim: number
  config: SacConfig
  configHash: string
  step: number
  episodes: number
  learningRate: number
  weights: Record<string, { shape: number[]; data: number[] }>
  evaluation?: Record<string, number>
}

export function saveCheckpoint(
  path: string,
  agent: SacAgent,
  step: number,
  episodes: number,
  evaluation?: Record<string, number>,
): Checkpoint {
  const checkpoint: Checkpoint = {
    format: 'greenflag-sac-checkpoint',
    version: 1,
    stateDim: agent.stateDim,
    actionDim: agent.actionDim,
    config: agent.config,
    configHash: configHash(agent.config),
    step,
    episodes,
    learningRate: agent.learningRate,
    weights: agent.exportWeights(),
    ...(evaluation ? { evaluation } : {}),
  }
  writeFileSync(path, JSON.stringify(checkpoint))
  return checkpoint
}

export function loadCheckpoint(path: string, expectedConfig?: SacConfig): { agent: SacAgent; checkpoint: Checkpoint } {
  const checkpoint = JSON.parse(readFileSync(path, 'utf-8')) as Checkpoint
  if (checkpoint.format !== 'greenflag-sac-checkpoint' || checkpoint.version !== 1) {
    throw new Error(`${path} is not a recognized checkpoint`)
  }
  const config = mergeConfig(checkpoint.config)
  if (configHash(config) !== checkpoint.configHash) {
    throw new Error('checkpoint config hash mismatch; the file was edited or is corrupt')
  }
  if (expectedConfig && configHash(expectedConfig) !== checkpoint.configHash) {
    throw new Error('checkpoint was trained with a different config; refusing to resume')
  }
  const agent = new SacAgent(checkpoint.stateDim, checkpoint.actionDim, config)
  agent.importWeights(checkpoint.weights)
  agent.setLearningRate(checkpoint.learningRate)
  return { agent, checkpoint }
}
