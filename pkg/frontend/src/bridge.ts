/**
 * Line-oriented JSON transport to a `tscbench.envserver` child process.
 *
 * The server answers strictly in request order, one JSON object per line,
 * so a FIFO of pending promises is all the correlation we need.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

export interface Reply {
  ok: boolean;
  error?: string;
  [key: string]: unknown;
}

interface Pending {
  resolve: (reply: Reply) => void;
  reject: (err: Error) => void;
}

export interface BridgeOptions {
  /** Python interpreter to launch. Defaults to "python3". */
  pythonBin?: string;
  /** Working directory for the child process. */
  cwd?: string;
}

export class Bridge {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private pending: Pending[] = [];
  private exited = false;
  private closing = false;

  constructor(options: BridgeOptions = {}) {
    const bin = options.pythonBin ?? "python3";
    this.proc = spawn(bin, ["-m", "tscbench.envserver"], {
      cwd: options.cwd,
      stdio: ["pipe", "pipe", "inherit"],
    });

    const lines = createInterface({ input: this.proc.stdout });
    lines.on("line", (line) => {
      const next = this.pending.shift();
      if (!next) return; // unsolicited output; nothing to pair it with
      try {
        next.resolve(JSON.parse(line) as Reply);
      } catch (err) {
        next.reject(new Error(`unparseable reply from bridge: ${line}`));
      }
    });

    this.proc.on("error", (err) => this.failAll(err));
    this.proc.on("exit", (code, signal) => {
      this.exited = true;
      if (!this.closing || this.pending.length > 0) {
        this.failAll(new Error(
          `bridge exited (code ${code}, signal ${signal}) with ` +
          `${this.pending.length} request(s) unanswered`));
      }
    });
  }

  get alive(): boolean {
    return !this.exited && !this.closing;
  }

  /** Send one request object and await its paired reply line. */
  request(payload: Record<string, unknown>): Promise<Reply> {
    if (!this.alive) {
      return Promise.reject(new Error("bridge is closed"));
    }
    return new Promise<Reply>((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.proc.stdin.write(JSON.stringify(payload) + "\n", (err) => {
        if (err) this.failAll(err);
      });
    });
  }

  /** Ask the server to shut down and wait for the process to go away. */
  async close(): Promise<void> {
    if (this.exited || this.closing) return;
    this.closing = true;
    const finished = new Promise<void>((resolve) => {
      if (this.exited) return resolve();
      this.proc.once("exit", () => resolve());
    });
    // bypass request(): closing is already set
    this.pending.push({ resolve: () => undefined, reject: () => undefined });
    this.proc.stdin.write(JSON.stringify({ op: "close" }) + "\n");
    await finished;
    this.exited = true;
  }

  private failAll(err: Error): void {
    for (const p of this.pending.splice(0)) p.reject(err);
  }
}
