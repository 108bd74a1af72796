/** Discrete space {0, 1, ..., n-1}, the action space of every signal. */
export interface DiscreteSpace {
  readonly type: "discrete";
  /** Number of valid values. */
  readonly n: number;
  /** True when x is an integer in [0, n). */
  contains(x: number): boolean;
  /** Uniform draw from the space. */
  sample(): number;
}

/** Fixed-length numeric vector; what an observation slot looks like. */
export interface BoxSpace {
  readonly type: "box";
  readonly size: number;
  contains(x: readonly number[]): boolean;
}

export type Space = DiscreteSpace | BoxSpace;

export function discrete(n: number): DiscreteSpace {
  if (!Number.isInteger(n) || n <= 0) {
    throw new Error(`discrete space needs a positive integer size, got ${n}`);
  }
  return {
    type: "discrete",
    n,
    contains: (x) => Number.isInteger(x) && x >= 0 && x < n,
    sample: () => Math.floor(Math.random() * n),
  };
}

export function box(size: number): BoxSpace {
  if (!Number.isInteger(size) || size <= 0) {
    throw new Error(`box space needs a positive integer size, got ${size}`);
  }
  return {
    type: "box",
    size,
    contains: (x) => x.length === size && x.every(Number.isFinite),
  };
}
