/**
 * Soft Actor-Critic for continuous actions in [-1, 1]^d.
 *
 * Gaussian policy with tanh squashing, twin Q critics with Polyak-averaged
 * targets, and automatic entropy-coefficient tuning towards the standard
 * target entropy of -dim(action).
 */

import * as tf from '@tensorflow/tfjs'
import type { SacConfig } from './config.js'
import type { TransitionBatch } from './replay.js'

const LOG_STD_MIN = -20
const LOG_STD_MAX = 2

export interface UpdateStats {
  criticLoss: number
  actorLoss: number
  alphaLoss: number
  alpha: number
}

function mlp(
  inputDim: number,
  outputDim: number,
  config: SacConfig,
  seed: number,
  name: string,
): tf.LayersModel {
  const model = tf.sequential({ name })
  for (let layer = 0; layer < config.hiddenLayers; layer++) {
    model.add(
      tf.layers.dense({
        inputShape: layer === 0 ? [inputDim] : undefined,
        units: config.hiddenUnits,
        activation: 'relu',
        kernelInitializer: tf.initializers.glorotUniform({ seed: seed + layer }),
      }),
    )
  }
  model.add(
    tf.layers.dense({
      units: outputDim,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + config.hiddenLayers }),
    }),
  )
  return model
}

function toTensor(rows: Float32Array[], dim: number): tf.Tensor2D {
  const flat = new Float32Array(rows.length * dim)
  rows.forEach((row, i) => flat.set(row, i * dim))
  return tf.tensor2d(flat, [rows.length, dim])
}

function trainableVars(model: tf.LayersModel): tf.Variable[] {
  // LayerVariable wraps the core Variable in its `val` field.
  return model.trainableWeights.map((w) => (w as unknown as { val: tf.Variable }).val)
}

export class SacAgent {
  readonly actor: tf.LayersModel
  readonly q1: tf.LayersModel
  readonly q2: tf.LayersModel
  readonly q1Target: tf.LayersModel
  readonly q2Target: tf.LayersModel
  readonly logAlpha: tf.Variable
  private readonly targetEntropy: number
  private actorOptimizer: tf.Optimizer
  private criticOptimizer: tf.Optimizer
  private alphaOptimizer: tf.Optimizer
  private currentLr: number
  private noiseSeed: number

  constructor(
    readonly stateDim: number,
    readonly actionDim: number,
    readonly config: SacConfig,
    seed = 0,
  ) {
    // Actor emits mean and log-std per action dimension.
    this.actor = mlp(stateDim, 2 * actionDim, config, seed, 'actor')
    this.q1 = mlp(stateDim + actionDim, 1, config, seed + 100, 'q1')
    this.q2 = mlp(stateDim + actionDim, 1, config, seed + 200, 'q2')
    this.q1Target = mlp(stateDim + actionDim, 1, config, seed + 100, 'q1t')
    this.q2Target = mlp(stateDim + actionDim, 1, config, seed + 200, 'q2t')
    this.q1Target.setWeights(this.q1.getWeights())
    this.q2Target.setWeights(this.q2.getWeights())
    this.q1Target.trainable = false
    this.q2Target.trainable = false
    // Unnamed so several agents can coexist in one tfjs engine.
    this.logAlpha = tf.variable(tf.scalar(Math.log(config.entropyInit)), true)
    this.targetEntropy = -actionDim
    this.currentLr = config.learningRate
    this.actorOptimizer = tf.train.adam(this.currentLr)
    this.criticOptimizer = tf.train.adam(this.currentLr)
    this.alphaOptimizer = tf.train.adam(this.currentLr)
    this.noiseSeed = seed + 1
  }

  get learningRate(): number {
    return this.currentLr
  }

  setLearningRate(lr: number): void {
    this.currentLr = lr
    for (const optimizer of [this.actorOptimizer, this.criticOptimizer, this.alphaOptimizer]) {
      ;(optimizer as unknown as { learningRate: number }).learningRate = lr
    }
  }

  /** Squashed-gaussian sample plus its log-probability. */
  private sampleAction(states: tf.Tensor2D): { action: tf.Tensor2D; logProb: tf.Tensor2D } {
    const out = this.actor.apply(states) as tf.Tensor2D
    const [mean, logStdRaw] = tf.split(out, 2, 1)
    const logStd = tf.clipByValue(logStdRaw, LOG_STD_MIN, LOG_STD_MAX)
    const std = tf.exp(logStd)
    const noise = tf.randomNormal(mean.shape as [number, number], 0, 1, 'float32', this.noiseSeed++)
    const pre = tf.add(mean, tf.mul(std, noise))
    const action = tf.tanh(pre) as tf.Tensor2D
    // log N(pre; mean, std) - sum log(1 - tanh^2(pre))
    const gaussLogProb = tf.sum(
      tf.mul(-0.5, tf.add(tf.add(tf.square(noise), Math.log(2 * Math.PI)), tf.mul(2, logStd))),
      1,
      true,
    )
    const squashCorrection = tf.sum(tf.log(tf.add(tf.sub(1, tf.square(action)), 1e-6)), 1, true)
    const logProb = tf.sub(gaussLogProb, squashCorrection) as tf.Tensor2D
    return { action, logProb }
  }

  /** Action for one observation; the deterministic mode returns tanh(mean). */
  act(state: Float32Array | number[], deterministic = false): Float32Array {
    return tf.tidy(() => {
      const input = tf.tensor2d(Array.from(state), [1, this.stateDim])
      if (deterministic) {
        const out = this.actor.apply(input) as tf.Tensor2D
        const [mean] = tf.split(out, 2, 1)
        return tf.tanh(mean).dataSync() as Float32Array
      }
      return this.sampleAction(input).action.dataSync() as Float32Array
    })
  }

  private criticValue(model: tf.LayersModel, states: tf.Tensor2D, actions: tf.Tensor2D): tf.Tensor2D {
    return model.apply(tf.concat([states, actions], 1)) as tf.Tensor2D
  }

  /** One gradient step on critics, actor, and entropy coefficient. */
  update(batch: TransitionBatch): UpdateStats {
    const stats = tf.tidy(() => {
      const states = toTensor(batch.states, this.stateDim)
      const actions = toTensor(batch.actions, this.actionDim)
      const nextStates = toTensor(batch.nextStates, this.stateDim)
      const rewards = tf.tensor2d(batch.rewards, [batch.rewards.length, 1])
      const notDone = tf.sub(1, tf.tensor2d(batch.dones, [batch.dones.length, 1]))
      const alpha = tf.exp(this.logAlpha)

      const target = tf.tidy(() => {
        const next = this.sampleAction(nextStates)
        const q1n = this.criticValue(this.q1Target, nextStates, next.action)
        const q2n = this.criticValue(this.q2Target, nextStates, next.action)
        const minQ = tf.minimum(q1n, q2n)
        const softValue = tf.sub(minQ, tf.mul(alpha, next.logProb))
        return tf.add(rewards, tf.mul(tf.mul(this.config.discount, notDone), softValue))
      })

      const criticVars = [...trainableVars(this.q1), ...trainableVars(this.q2)]
      const criticGrads = tf.variableGrads(() => {
        const q1 = this.criticValue(this.q1, states, actions)
        const q2 = this.criticValue(this.q2, states, actions)
        return tf.add(tf.losses.meanSquaredError(target, q1), tf.losses.meanSquaredError(target, q2)) as tf.Scalar
      }, criticVars)
      this.criticOptimizer.applyGradients(criticGrads.grads)
      tf.dispose(criticGrads.grads)

      let actorLogProb: tf.Tensor2D | null = null
      const actorGrads = tf.variableGrads(() => {
        const fresh = this.sampleAction(states)
        actorLogProb = tf.keep(fresh.logProb)
        const q1 = this.criticValue(this.q1, states, fresh.action)
        const q2 = this.criticValue(this.q2, states, fresh.action)
        const minQ = tf.minimum(q1, q2)
        return tf.mean(tf.sub(tf.mul(alpha, fresh.logProb), minQ)) as tf.Scalar
      }, trainableVars(this.actor))
      this.actorOptimizer.applyGradients(actorGrads.grads)
      tf.dispose(actorGrads.grads)

      const alphaGrads = tf.variableGrads(() => {
        const entropyGap = tf.add(actorLogProb!, this.targetEntropy)
        return tf.mean(tf.mul(tf.neg(this.logAlpha), entropyGap)) as tf.Scalar
      }, [this.logAlpha])
      this.alphaOptimizer.applyGradients(alphaGrads.grads)
      tf.dispose(alphaGrads.grads)

      this.softUpdateTargets()

      const result = {
        criticLoss: criticGrads.value.dataSync()[0],
        actorLoss: actorGrads.value.dataSync()[0],
        alphaLoss: alphaGrads.value.dataSync()[0],
        alpha: tf.exp(this.logAlpha).dataSync()[0],
      }
      tf.dispose(actorLogProb!)
      return result
    })
    return stats
  }

  softUpdateTargets(): void {
    tf.tidy(() => {
      const tau = this.config.tau
      for (const [online, target] of [
        [this.q1, this.q1Target],
        [this.q2, this.q2Target],
      ] as const) {
        const mixed = online
          .getWeights()
          .map((w, i) => tf.add(tf.mul(w, tau), tf.mul(target.getWeights()[i], 1 - tau)))
        target.setWeights(mixed)
      }
    })
  }

  /** Flat named weight map for checkpointing. */
  exportWeights(): Record<string, { shape: number[]; data: number[] }> {
    const out: Record<string, { shape: number[]; data: number[] }> = {}
    const models: Array<[string, tf.LayersModel]> = [
      ['actor', this.actor],
      ['q1', this.q1],
      ['q2', this.q2],
      ['q1t', this.q1Target],
      ['q2t', this.q2Target],
    ]
    for (const [prefix, model] of models) {
      model.getWeights().forEach((w, i) => {
        out[`${prefix}/${i}`] = { shape: w.shape.slice(), data: Array.from(w.dataSync()) }
      })
    }
    out['logAlpha'] = { shape: [], data: Array.from(this.logAlpha.dataSync()) }
    return out
  }

  importWeights(weights: Record<string, { shape: number[]; data: number[] }>): void {
    const models: Array<[string, tf.LayersModel]> = [
      ['actor', this.actor],
      ['q1', this.q1],
      ['q2', this.q2],
      ['q1t', this.q1Target],
      ['q2t', this.q2Target],
    ]
    for (const [prefix, model] of models) {
      const restored = model.getWeights().map((current, i) => {
        const saved = weights[`${prefix}/${i}`]
        if (!saved) throw new Error(`checkpoint is missing weight ${prefix}/${i}`)
        if (JSON.stringify(saved.shape) !== JSON.stringify(current.shape)) {
          throw new Error(`weight ${prefix}/${i} has shape ${saved.shape}, expected ${current.shape}`)
        }
        return tf.tensor(saved.data, saved.shape as number[])
      })
      model.setWeights(restored)
      tf.dispose(restored)
    }
    const alpha = weights['logAlpha']
    if (!alpha) throw new Error('checkpoint is missing logAlpha')
    this.logAlpha.assign(tf.scalar(alpha.data[0]))
  }

  dispose(): void {
    for (const model of [this.actor, this.q1, this.q2, this.q1Target, this.q2Target]) {
      model.dispose()
    }
    this.logAlpha.dispose()
  }
}
