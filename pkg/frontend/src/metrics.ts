/**
 * Episode metric aggregation from step-reply info dictionaries, matching the
 * six rows the batch experiment CLI reports.
 */

import type { StepReply } from './protocol.js'

export interface EpisodeMetrics {
  totalEnergy: number
  gridEnergy: number
  greenEnergy: number
  meanRoundDuration: number
  violationsPerWorker: number
  globalIterations: number
}

export const METRIC_LABELS: Array<[keyof EpisodeMetrics, string]> = [
  ['totalEnergy', 'Total Energy (J)'],
  ['gridEnergy', 'Grid Energy (J)'],
  ['greenEnergy', 'Green Energy (J)'],
  ['meanRoundDuration', 'Duration of Global Iteration (s)'],
  ['violationsPerWorker', 'Violations per Worker'],
  ['globalIterations', 'Global Iterations'],
]

export class EpisodeAccumulator {
  private total = 0
  private grid = 0
  private green = 0
  private durations: number[] = []
  private p1 = 0
  private rounds = 0

  constructor(private readonly workerCount: number) {}

  addStep(reply: StepReply): void {
    const info = reply.info as Record<string, number>
    this.total += info.total_energy ?? 0
    this.grid += info.grid_energy ?? 0
    this.green += info.green_energy ?? 0
    this.durations.push(info.duration ?? 0)
    this.p1 += info.p1_count ?? 0
    this.rounds += 1
  }

  finish(): EpisodeMetrics {
    const meanDuration = this.durations.length
      ? this.durations.reduce((a, b) => a + b, 0) / this.durations.length
      : 0
    return {
      totalEnergy: this.total,
      gridEnergy: this.grid,
      greenEnergy: this.green,
      meanRoundDuration: meanDuration,
      violationsPerWorker: this.p1 / this.workerCount,
      globalIterations: this.rounds,
    }
  }
}

export interface Aggregate {
  mean: EpisodeMetrics
  std: EpisodeMetrics
}

export function aggregate(episodes: EpisodeMetrics[]): Aggregate {
  const keys = METRIC_LABELS.map(([key]) => key)
  const mean = {} as EpisodeMetrics
  const std = {} as EpisodeMetrics
  for (const key of keys) {
    const values = episodes.map((m) => m[key])
    const mu = values.reduce((a, b) => a + b, 0) / values.length
    const variance = values.reduce((a, b) => a + (b - mu) ** 2, 0) / values.length
    mean[key] = mu
    std[key] = Math.sqrt(variance)
  }
  return { mean, std }
}

export function formatAggregate(agg: Aggregate): string {
  return METRIC_LABELS.map(
    ([key, label]) => `${label}: ${agg.mean[key].toFixed(2)} (+/- ${agg.std[key].toFixed(2)})`,
  ).join('\n')
}

/** Workers are one third of the action dimension, which is 3K by protocol. */
export function workerCountFromState(stateLength: number): number {
  const k = (stateLength - 2) / 8
  if (!Number.isInteger(k) || k < 1) throw new Error(`state length ${stateLength} is not 8K+2`)
  return k
}
