// Plain object config: no vitest import, so the file also loads when the
// vitest binary comes from a global install.
export default {
  test: {
    include: ["tests/**/*.test.ts"],
    setupFiles: ["tests/setup-dom.ts"],
  },
};
