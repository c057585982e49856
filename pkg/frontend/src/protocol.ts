/**
 * Client for the environment wire protocol: line-delimited JSON over a local
 * TCP socket or the stdio of a spawned server process.
 *
 * Message schemas are validated on both directions with zod so a recorded
 * session doubles as a protocol-conformance artifact.
 */

import { spawn, type ChildProcess } from 'node:child_process'
import { createConnection, type Socket } from 'node:net'
import { z } from 'zod'

export const resetCommandSchema = z.object({
  cmd: z.literal('reset'),
  seed: z.number().int().nonnegative(),
  scenario: z.number().int().min(1).max(3).optional(),
})

export const stepCommandSchema = z.object({
  cmd: z.literal('step'),
  action: z.array(z.number().min(-1).max(1)),
})

export const closeCommandSchema = z.object({ cmd: z.literal('close') })

export const commandSchema = z.union([resetCommandSchema, stepCommandSchema, closeCommandSchema])

export const resetReplySchema = z.object({ state: z.array(z.number()) })

export const stepReplySchema = z.object({
  state: z.array(z.number()),
  reward: z.number(),
  done: z.boolean(),
  info: z.record(z.string(), z.unknown()),
})

export const errorReplySchema = z.object({ error: z.string() })

export const replySchema = z.union([resetReplySchema, stepReplySchema, errorReplySchema])

export type StepReply = z.infer<typeof stepReplySchema>

export interface TranscriptEntry {
  dir: 'send' | 'recv'
  line: string
}

/** Validate one recorded transcript entry; returns an error string or null. */
export function validateTranscriptEntry(entry: TranscriptEntry): string | null {
  let parsed: unknown
  try {
    parsed = JSON.parse(entry.line)
  } catch {
    return `not JSON: ${entry.line.slice(0, 80)}`
  }
  const schema = entry.dir === 'send' ? commandSchema : replySchema
  const result = schema.safeParse(parsed)
  return result.success ? null : result.error.message
}

/** Validate a whole recorded session; returns the list of violations. */
export function validateTranscript(entries: TranscriptEntry[]): string[] {
  const problems: string[] = []
  entries.forEach((entry, index) => {
    const problem = validateTranscriptEntry(entry)
    if (problem !== null) problems.push(`entry ${index} (${entry.dir}): ${problem}`)
  })
  return problems
}

interface Transport {
  write(line: string): void
  close(): void
}

/**
 * One live protocol session. Requests are strictly sequential: a new command
 * may only be sent after the previous reply arrived.
 */
export class EnvClient {
  private transport: Transport | null = null
  private buffer = ''
  private pending: { resolve: (line: string) => void; reject: (err: Error) => void } | null = null
  private closed = false
  readonly transcript: TranscriptEntry[] = []

  private constructor(private readonly record: boolean) {}

  /** Connect to a host:port env server. */
  static async connect(address: string, record = true): Promise<EnvClient> {
    const [host, portText] = address.split(':')
    const port = Number(portText)
    if (!host || !Number.isInteger(port)) throw new Error(`bad address ${address}; expected host:port`)
    const client = new EnvClient(record)
    await new Promise<void>((resolve, reject) => {
      const socket: Socket = createConnection({ host, port }, resolve)
      socket.on('error', (err) => (client.pending ? client.failPending(err) : reject(err)))
      socket.on('data', (chunk) => client.onData(chunk.toString('utf-8')))
      socket.on('close', () => client.onClosed())
      client.transport = {
        write: (line) => socket.write(line + '\n'),
        close: () => socket.end(),
      }
    })
    return client
  }

  /** Spawn a server process and talk over its stdio. */
  static spawnServer(command: string, args: string[], record = true): EnvClient {
    const client = new EnvClient(record)
    const child: ChildProcess = spawn(command, args, { stdio: ['pipe', 'pipe', 'inherit'] })
    child.stdout!.on('data', (chunk) => client.onData(chunk.toString('utf-8')))
    child.on('error', (err) => client.failPending(err))
    child.on('exit', () => client.onClosed())
    client.transport = {
      write: (line) => child.stdin!.write(line + '\n'),
      close: () => {
        child.stdin!.end()
        // The server exits on EOF; make sure a wedged process cannot leak.
        setTimeout(() => child.kill(), 2000).unref()
      },
    }
    return client
  }

  private onData(text: string): void {
    this.buffer += text
    let newline = this.buffer.indexOf('\n')
    while (newline >= 0) {
      const line = this.buffer.slice(0, newline).trim()
      this.buffer = this.buffer.slice(newline + 1)
      if (line.length > 0) this.deliver(line)
      newline = this.buffer.indexOf('\n')
    }
  }

  private deliver(line: string): void {
    if (this.record) this.transcript.push({ dir: 'recv', line })
    if (this.pending) {
      const { resolve } = this.pending
      this.pending = null
      resolve(line)
    }
  }

  private onClosed(): void {
    this.closed = true
    this.failPending(new Error('connection closed'))
  }

  private failPending(err: Error): void {
    if (this.pending) {
      const { reject } = this.pending
      this.pending = null
      reject(err)
    }
  }

  private async request(message: object): Promise<unknown> {
    if (!this.transport || this.closed) throw new Error('client is closed')
    if (this.pending) throw new Error('a request is already in flight')
    const line = JSON.stringify(message)
    if (this.record) this.transcript.push({ dir: 'send', line })
    const replyLine = await new Promise<string>((resolve, reject) => {
      this.pending = { resolve, reject }
      this.transport!.write(line)
    })
    const reply: unknown = JSON.parse(replyLine)
    const asError = errorReplySchema.safeParse(reply)
    if (asError.success) throw new Error(`environment error: ${asError.data.error}`)
    return reply
  }

  async reset(seed: number, scenario?: number): Promise<number[]> {
    const message = scenario === undefined ? { cmd: 'reset', seed } : { cmd: 'reset', seed, scenario }
    const reply = resetReplySchema.parse(await this.request(message))
    return reply.state
  }

  async step(action: number[]): Promise<StepReply> {
    return stepReplySchema.parse(await this.request({ cmd: 'step', action }))
  }

  /** Send close (no reply is expected) and tear the transport down. */
  close(): void {
    if (!this.transport || this.closed) return
    const line = JSON.stringify({ cmd: 'close' })
    if (this.record) this.transcript.push({ dir: 'send', line })
    this.transport.write(line)
    this.transport.close()
    this.closed = true
  }
}
