import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.spec.ts"],
    // the parity spec shells out to the python runner for a full episode
    testTimeout: 120_000,
    hookTimeout: 30_000,
  },
});
