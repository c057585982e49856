import * as tf from '@tensorflow/tfjs'
import { beforeAll, describe, expect, it } from 'vitest'
import { mergeConfig } from '../src/config.js'
import { ReplayBuffer } from '../src/replay.js'
import { Rng } from '../src/rng.js'
import { SacAgent } from '../src/sac.js'

const SMALL = mergeConfig({ hiddenLayers: 2, hiddenUnits: 24, batchSize: 16, replaySize: 500 })

function filledBuffer(stateDim: number, actionDim: number, n = 64): ReplayBuffer {
  const rng = new Rng(1)
  const buffer = new ReplayBuffer(500)
  for (let i = 0; i < n; i++) {
    buffer.add({
      state: Float32Array.from({ length: stateDim }, () => rng.uniform(0, 1)),
      action: Float32Array.from({ length: actionDim }, () => rng.uniform(-1, 1)),
      reward: -rng.uniform(0, 10),
      nextState: Float32Array.from({ length: stateDim }, () => rng.uniform(0, 1)),
      done: i % 11 === 0,
    })
  }
  return buffer
}

beforeAll(async () => {
  await tf.ready()
})

describe('SacAgent', () => {
  it('emits actions of dimension 3K inside [-1, 1]', () => {
    const agent = new SacAgent(10, 6, SMALL, 3)
    for (let i = 0; i < 20; i++) {
      const action = agent.act(Float32Array.from({ length: 10 }, () => Math.random()))
      expect(action).toHaveLength(6)
      for (const a of action) {
        expect(a).toBeGreaterThanOrEqual(-1)
        expect(a).toBeLessThanOrEqual(1)
      }
    }
    agent.dispose()
  })

  it('deterministic action is the squashed mean and is repeatable', () => {
    const agent = new SacAgent(8, 4, SMALL, 5)
    const state = Float32Array.from({ length: 8 }, (_, i) => i / 8)
    const a = Array.from(agent.act(state, true))
    const b = Array.from(agent.act(state, true))
    expect(a).toEqual(b)
    agent.dispose()
  })

  it('updates produce finite losses and auto-tunes alpha from 0.8', () => {
    const agent = new SacAgent(10, 4, SMALL, 7)
    const buffer = filledBuffer(10, 4)
    const rng = new Rng(2)
    let stats = agent.update(buffer.sample(16, rng))
    expect(stats.alpha).toBeCloseTo(0.8, 1)
    for (let i = 0; i < 10; i++) stats = agent.update(buffer.sample(16, rng))
    expect(Number.isFinite(stats.criticLoss)).toBe(true)
    expect(Number.isFinite(stats.actorLoss)).toBe(true)
    expect(Number.isFinite(stats.alphaLoss)).toBe(true)
    expect(stats.alpha).toBeGreaterThan(0)
    agent.dispose()
  })

  it('does not leak tensors at steady state', () => {
    const agent = new SacAgent(10, 4, SMALL, 9)
    const buffer = filledBuffer(10, 4)
    const rng = new Rng(3)
    agent.update(buffer.sample(16, rng)) // optimizer slot allocation
    const before = tf.memory().numTensors
    for (let i = 0; i < 4; i++) agent.update(buffer.sample(16, rng))
    expect(tf.memory().numTensors).toBe(before)
    agent.dispose()
  })

  it('target networks track the online critics by polyak averaging', () => {
    const agent = new SacAgent(6, 2, mergeConfig({ ...SMALL, tau: 0.5 }), 11)
    const buffer = filledBuffer(6, 2)
    const rng = new Rng(4)
    const targetBefore = agent.q1Target.getWeights().map((w) => w.dataSync().slice())
    for (let i = 0; i < 3; i++) agent.update(buffer.sample(16, rng))
    const online = agent.q1.getWeights().map((w) => w.dataSync())
    const targetAfter = agent.q1Target.getWeights().map((w) => w.dataSync())
    let movedTowardOnline = 0
    for (let layer = 0; layer < online.length; layer++) {
      for (let i = 0; i < online[layer].length; i++) {
        const before = Math.abs(targetBefore[layer][i] - online[layer][i])
        const after = Math.abs(targetAfter[layer][i] - online[layer][i])
        if (after < before) movedTowardOnline++
      }
    }
    expect(movedTowardOnline).toBeGreaterThan(0)
    agent.dispose()
  })

  it('round-trips weights through export/import', () => {
    const agent = new SacAgent(8, 4, SMALL, 13)
    const buffer = filledBuffer(8, 4)
    agent.update(buffer.sample(16, new Rng(5)))
    const exported = agent.exportWeights()
    const clone = new SacAgent(8, 4, SMALL, 99)
    clone.importWeights(exported)
    const state = Float32Array.from({ length: 8 }, (_, i) => i / 10)
    expect(Array.from(clone.act(state, true))).toEqual(Array.from(agent.act(state, true)))
    agent.dispose()
    clone.dispose()
  })

  it('learning-rate updates reach every optimizer', () => {
    const agent = new SacAgent(6, 2, SMALL, 15)
    agent.setLearningRate(0.5e-3)
    expect(agent.learningRate).toBe(0.5e-3)
    agent.dispose()
  })
})
