/** Training configuration with the published agent defaults. */

import { createHash } from 'node:crypto'

export interface SacConfig {
  /** Hidden layers per MLP and neurons per layer. */
  hiddenLayers: number
  hiddenUnits: number
  batchSize: number
  learningRate: number
  /** Step-decay schedule: multiply the rate by (1 - decayRate) every decayEpisodes episodes. */
  lrDecayEpisodes: number
  lrDecayRate: number
  /** Initial entropy coefficient; it is auto-tuned from this value. */
  entropyInit: number
  /** Run a training phase every this many environment steps... */
  trainEvery: number
  /** ...performing this many gradient steps per phase. */
  gradientSteps: number
  /** Steps collected before the first training phase. */
  learningStarts: number
  replaySize: number
  discount: number
  /** Polyak coefficient for target-network tracking. */
  tau: number
}

export const DEFAULT_CONFIG: SacConfig = {
  hiddenLayers: 8,
  hiddenUnits: 512,
  batchSize: 256,
  learningRate: 0.001,
  lrDecayEpisodes: 6000,
  lrDecayRate: 0.01,
  entropyInit: 0.8,
  trainEvery: 1000,
  gradientSteps: 1000,
  learningStarts: 100,
  replaySize: 2_000_000,
  discount: 0.99,
  tau: 0.005,
}

export function mergeConfig(overrides: Partial<SacConfig>): SacConfig {
  const config = { ...DEFAULT_CONFIG, ...overrides }
  for (const [key, value] of Object.entries(config)) {
    if (typeof value !== 'number' || !Number.isFinite(value) || value <= 0) {
      throw new Error(`config field ${key} must be a positive number, got ${value}`)
    }
  }
  if (config.discount > 1) throw new Error('discount must be <= 1')
  if (config.tau > 1) throw new Error('tau must be <= 1')
  return config
}

/** Stable hash of a config; checkpoints refuse to resume across mismatches. */
export function configHash(config: SacConfig): string {
  const canonical = JSON.stringify(Object.fromEntries(Object.entries(config).sort()))
  return createHash('sha256').update(canonical).digest('hex').slice(0, 16)
}
