import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { describe, expect, it } from 'vitest'
import { loadCheckpoint, saveCheckpoint, type Checkpoint } from '../src/checkpoint.js'
import { mergeConfig } from '../src/config.js'
import { SacAgent } from '../src/sac.js'

const SMALL = mergeConfig({ hiddenLayers: 2, hiddenUnits: 16, batchSize: 8, replaySize: 100 })

describe('checkpoints', () => {
  it('round-trips a policy byte-for-byte in behavior', () => {
    const dir = mkdtempSync(join(tmpdir(), 'ckpt-'))
    const path = join(dir, 'policy.json')
    const agent = new SacAgent(10, 4, SMALL, 21)
    saveCheckpoint(path, agent, 1234, 56, { gridEnergy: 7.5 })
    const { agent: loaded, checkpoint } = loadCheckpoint(path)
    expect(checkpoint.step).toBe(1234)
    expect(checkpoint.episodes).toBe(56)
    expect(checkpoint.evaluation).toEqual({ gridEnergy: 7.5 })
    const state = Float32Array.from({ length: 10 }, (_, i) => i / 10)
    expect(Array.from(loaded.act(state, true))).toEqual(Array.from(agent.act(state, true)))
    agent.dispose()
    loaded.dispose()
  })

  it('rejects tampered files via the config hash', () => {
    const dir = mkdtempSync(join(tmpdir(), 'ckpt-'))
    const path = join(dir, 'policy.json')
    const agent = new SacAgent(6, 2, SMALL, 23)
    saveCheckpoint(path, agent, 10, 1)
    const doc = JSON.parse(readFileSync(path, 'utf-8')) as Checkpoint
    doc.config.batchSize = 999
    writeFileSync(path, JSON.stringify(doc))
    expect(() => loadCheckpoint(path)).toThrow(/hash mismatch/)
    agent.dispose()
  })

  it('refuses resuming under a different config', () => {
    const dir = mkdtempSync(join(tmpdir(), 'ckpt-'))
    const path = join(dir, 'policy.json')
    const agent = new SacAgent(6, 2, SMALL, 25)
    saveCheckpoint(path, agent, 10, 1)
    expect(() => loadCheckpoint(path, mergeConfig({ hiddenLayers: 3 }))).toThrow(/different config/)
    expect(() => loadCheckpoint(path, SMALL)).not.toThrow()
    agent.dispose()
  })

  it('rejects unrelated files', () => {
    const dir = mkdtempSync(join(tmpdir(), 'ckpt-'))
    const path = join(dir, 'other.json')
    writeFileSync(path, JSON.stringify({ hello: 1 }))
    expect(() => loadCheckpoint(path)).toThrow(/not a recognized checkpoint/)
  })
})
