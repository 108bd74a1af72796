/**
 * Gym-style client for the traffic-signal environment.
 *
 * Each environment owns one `python3 -m tscbench.envserver` child process and
 * talks to it over JSON lines; the Python package is the single source of
 * truth for simulation semantics, metrics, and seeding.
 *
 * @example
 * const env = await make("tscbench/MultiIntersection-v0", {
 *   configPath: "scenarios/1x1_fixedtime.yaml",
 *   seed: 0,
 * });
 * let obs = await env.reset();
 * for (;;) {
 *   const { observations, done } = await env.step({ I_1_1: 2 });
 *   obs = observations;
 *   if (done) break;
 * }
 * console.log(await env.metrics());
 * await env.close();
 */

import { resolve } from "node:path";

import { Bridge, type BridgeOptions, type Reply } from "./bridge.js";
import { box, discrete, type BoxSpace, type DiscreteSpace } from "./spaces.js";

export const ENV_ID = "tscbench/MultiIntersection-v0";

/** Observation vectors keyed by intersection id. */
export type Observations = Record<string, number[]>;
/** Phase choices keyed by intersection id. */
export type Actions = Record<string, number>;

export interface StepInfo {
  clock: number;
  spawned: number;
  finished: number;
  blocked_spawns: number;
}

export interface StepResult {
  observations: Observations;
  rewards: Record<string, number>;
  done: boolean;
  info: StepInfo;
}

export interface MakeOptions extends BridgeOptions {
  /** Experiment YAML naming the scenario; relative paths resolve from cwd. */
  configPath: string;
  /** Overrides the experiment file's seed when given. */
  seed?: number;
}

function unwrap(reply: Reply): Reply {
  if (!reply.ok) throw new Error(reply.error ?? "bridge reported an error");
  return reply;
}

export class TrafficSignalEnv {
  readonly envId = ENV_ID;
  readonly intersections: readonly string[];
  /** Per-intersection phase choice. */
  readonly actionSpaces: Readonly<Record<string, DiscreteSpace>>;
  /** Per-intersection observation vector shape. */
  readonly observationSpaces: Readonly<Record<string, BoxSpace>>;
  readonly actionInterval: number;
  readonly episodeSteps: number;

  private bridge: Bridge;
  private closed = false;

  private constructor(bridge: Bridge, description: Reply) {
    this.bridge = bridge;
    this.intersections = description.intersections as string[];
    this.actionInterval = description.action_interval as number;
    this.episodeSteps = description.episode_steps as number;
    const phases = description.phase_counts as Record<string, number>;
    const sizes = description.observation_sizes as Record<string, number>;
    const actions: Record<string, DiscreteSpace> = {};
    const observations: Record<string, BoxSpace> = {};
    for (const iid of this.intersections) {
      actions[iid] = discrete(phases[iid]!);
      observations[iid] = box(sizes[iid]!);
    }
    this.actionSpaces = actions;
    this.observationSpaces = observations;
  }

  static async create(options: MakeOptions): Promise<TrafficSignalEnv> {
    const bridge = new Bridge(options);
    const request: Record<string, unknown> = {
      op: "make",
      env: ENV_ID,
      config: resolve(options.configPath),
    };
    if (options.seed !== undefined) request.seed = options.seed;
    try {
      const description = unwrap(await bridge.request(request));
      return new TrafficSignalEnv(bridge, description);
    } catch (err) {
      await bridge.close();
      throw err;
    }
  }

  /** Start a fresh episode (seeded seed + episode index server-side). */
  async reset(): Promise<Observations> {
    this.assertOpen();
    const reply = unwrap(await this.bridge.request({ op: "reset" }));
    return reply.obs as Observations;
  }

  /**
   * Advance one decision interval. A bare number is accepted when the
   * network has a single signalized intersection.
   */
  async step(action: number | Actions): Promise<StepResult> {
    this.assertOpen();
    const actions = this.normalizeActions(action);
    const reply = unwrap(await this.bridge.request({ op: "step", actions }));
    return {
      observations: reply.obs as Observations,
      rewards: reply.rewards as Record<string, number>,
      done: reply.done as boolean,
      info: reply.info as StepInfo,
    };
  }

  /** Episode metrics so far (travel time, queue, delay, throughput, ...). */
  async metrics(): Promise<Record<string, number>> {
    this.assertOpen();
    const reply = unwrap(await this.bridge.request({ op: "metrics" }));
    return reply.metrics as Record<string, number>;
  }

  /** Shut the bridge down. Safe to call more than once. */
  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    await this.bridge.close();
  }

  private assertOpen(): void {
    if (this.closed || !this.bridge.alive) {
      throw new Error("environment is closed");
    }
  }

  private normalizeActions(action: number | Actions): Actions {
    if (typeof action === "number") {
      if (this.intersections.length !== 1) {
        throw new Error(
          `scalar action is ambiguous: ${this.intersections.length} ` +
          "intersections are controlled");
      }
      action = { [this.intersections[0]!]: action };
    }
    const given = Object.keys(action).sort();
    const wanted = [...this.intersections].sort();
    if (given.length !== wanted.length ||
        given.some((iid, k) => iid !== wanted[k])) {
      throw new Error(
        `actions must cover exactly [${wanted.join(", ")}], got ` +
        `[${given.join(", ")}]`);
    }
    for (const [iid, phase] of Object.entries(action)) {
      if (!this.actionSpaces[iid]!.contains(phase)) {
        throw new Error(
          `phase ${phase} is outside the ${this.actionSpaces[iid]!.n}-phase ` +
          `action space of ${iid}`);
      }
    }
    return action;
  }
}

/**
 * Gym-style factory. The only registered id is {@link ENV_ID}; anything else
 * throws without spawning a process.
 */
export async function make(
  id: string,
  options: MakeOptions,
): Promise<TrafficSignalEnv> {
  if (id !== ENV_ID) {
    throw new Error(`unknown environment id ${JSON.stringify(id)}; ` +
                    `this package registers ${ENV_ID}`);
  }
  return TrafficSignalEnv.create(options);
}
