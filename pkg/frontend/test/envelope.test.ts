import { describe, expect, it } from "vitest";

import { localExtremaEnvelope } from "../src/envelope.js";

function damped(n: number, rate: number, freq: number): { t: number[]; v: number[] } {
  const t = Array.from({ length: n }, (_, i) => (40 * i) / (n - 1));
  const v = t.map((x) => Math.exp(-rate * x) * Math.cos(freq * x));
  return { t, v };
}

describe("localExtremaEnvelope", () => {
  it("tracks the decay of a damped cosine", () => {
    const { t, v } = damped(4001, 0.1, 3.0);
    const nodes = localExtremaEnvelope(t, v);
    expect(nodes.length).toBeGreaterThan(10);
    for (const n of nodes) {
      expect(Math.abs(n.value - Math.exp(-0.1 * n.t))).toBeLessThan(0.02);
    }
  });

  it("nodes sit exactly on the |signal| samples they interpolate", () => {
    const { t, v } = damped(801, 0.05, 2.0);
    const nodes = localExtremaEnvelope(t, v);
    for (const n of nodes) {
      const i = t.indexOf(n.t);
      expect(i).toBeGreaterThanOrEqual(0);
      expect(n.value).toBe(Math.abs(v[i]));
    }
  });

  it("decays monotonically for a uniformly damped signal", () => {
    const { t, v } = damped(2001, 0.08, 1.7);
    const nodes = localExtremaEnvelope(t, v);
    for (let i = 1; i < nodes.length; i++) {
      expect(nodes[i].value).toBeLessThanOrEqual(nodes[i - 1].value + 1e-12);
    }
  });

  it("validates its inputs", () => {
    expect(() => localExtremaEnvelope([0, 1], [1, 2])).toThrow(/3 samples/);
    expect(() => localExtremaEnvelope([0, 1, 2], [1, 2])).toThrow(/times/);
  });
});
