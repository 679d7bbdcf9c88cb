import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 20000,
    hookTimeout: 60000,
    // the integration suite owns a single service instance on a fixed port
    fileParallelism: false,
  },
});
