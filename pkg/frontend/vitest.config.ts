import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the integration test boots the real service and drives a full review
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
