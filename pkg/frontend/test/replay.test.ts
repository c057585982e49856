import { describe, expect, it } from 'vitest'
import { ReplayBuffer, type Transition } from '../src/replay.js'
import { Rng } from '../src/rng.js'

function transition(tag: number): Transition {
  return {
    state: Float32Array.from([tag, tag]),
    action: Float32Array.from([tag]),
    reward: -tag,
    nextState: Float32Array.from([tag + 1, tag + 1]),
    done: tag % 5 === 0,
  }
}

describe('ReplayBuffer', () => {
  it('grows until capacity and never beyond', () => {
    const buffer = new ReplayBuffer(100)
    for (let i = 0; i < 1000; i++) {
      buffer.add(transition(i))
      expect(buffer.size).toBeLessThanOrEqual(100)
    }
    expect(buffer.size).toBe(100)
  })

  it('overwrites the oldest rows once full', () => {
    const buffer = new ReplayBuffer(4)
    for (let i = 0; i < 6; i++) buffer.add(transition(i))
    const rng = new Rng(0)
    const seen = new Set<number>()
    for (let i = 0; i < 200; i++) seen.add(buffer.sample(1, rng).rewards[0])
    // rows 0 and 1 were overwritten by 4 and 5
    expect(seen.has(-0)).toBe(false)
    expect(seen.has(-1)).toBe(false)
    expect(seen.has(-4)).toBe(true)
    expect(seen.has(-5)).toBe(true)
  })

  it('samples deterministically under a seeded rng', () => {
    const buffer = new ReplayBuffer(50)
    for (let i = 0; i < 50; i++) buffer.add(transition(i))
    const a = buffer.sample(8, new Rng(7))
    const b = buffer.sample(8, new Rng(7))
    expect(a.rewards).toEqual(b.rewards)
  })

  it('refuses sampling when empty and bad capacities', () => {
    expect(() => new ReplayBuffer(0)).toThrow()
    expect(() => new ReplayBuffer(10).sample(1, new Rng(0))).toThrow()
  })

  it('keeps batch columns aligned', () => {
    const buffer = new ReplayBuffer(10)
    for (let i = 0; i < 10; i++) buffer.add(transition(i))
    const batch = buffer.sample(5, new Rng(3))
    for (let i = 0; i < 5; i++) {
      const tag = -batch.rewards[i]
      expect(batch.states[i][0]).toBe(tag)
      expect(batch.nextStates[i][0]).toBe(tag + 1)
      expect(batch.dones[i]).toBe(tag % 5 === 0 ? 1 : 0)
    }
  })
})
