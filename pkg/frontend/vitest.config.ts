import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 30_000,
    // Contract tests each own a server process and a port; run files serially.
    fileParallelism: false,
  },
});
