export { Bridge, type BridgeOptions, type Reply } from "./bridge.js";
export {
  box,
  discrete,
  type BoxSpace,
  type DiscreteSpace,
  type Space,
} from "./spaces.js";
export {
  ENV_ID,
  make,
  TrafficSignalEnv,
  type Actions,
  type MakeOptions,
  type Observations,
  type StepInfo,
  type StepResult,
} from "./env.js";
