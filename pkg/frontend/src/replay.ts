/**
 * Ring-buffer experience replay.
 *
 * Rows are stored as Float32Arrays and allocated lazily, so a 2e6-capacity
 * buffer costs nothing until transitions actually arrive; once full, new
 * transitions overwrite the oldest.
 */

import { Rng } from './rng.js'

export interface Transition {
  state: Float32Array
  action: Float32Array
  reward: number
  nextState: Float32Array
  done: boolean
}

export interface TransitionBatch {
  states: Float32Array[]
  actions: Float32Array[]
  rewards: number[]
  nextStates: Float32Array[]
  dones: number[]
}

export class ReplayBuffer {
  private rows: Transition[] = []
  private writeIndex = 0

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity < 1) throw new Error('capacity must be a positive integer')
  }

  get size(): number {
    return this.rows.length
  }

  add(transition: Transition): void {
    if (this.rows.length < this.capacity) {
      this.rows.push(transition)
    } else {
      this.rows[this.writeIndex] = transition
    }
    this.writeIndex = (this.writeIndex + 1) % this.capacity
  }

  sample(batchSize: number, rng: Rng): TransitionBatch {
    if (this.size === 0) throw new Error('cannot sample from an empty buffer')
    const batch: TransitionBatch = { states: [], actions: [], rewards: [], nextStates: [], dones: [] }
    for (let i = 0; i < batchSize; i++) {
      const row = this.rows[rng.int(this.size)]
      batch.states.push(row.state)
      batch.actions.push(row.action)
      batch.rewards.push(row.reward)
      batch.nextStates.push(row.nextState)
      batch.dones.push(row.done ? 1 : 0)
    }
    return batch
  }
}
