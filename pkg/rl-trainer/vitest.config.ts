import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    testTimeout: 1_200_000, // the training acceptance test runs minutes
    hookTimeout: 600_000,
    // tf variables and the wasm backend are process-global state
    pool: 'forks',
    poolOptions: { forks: { singleFork: true } },
  },
});
