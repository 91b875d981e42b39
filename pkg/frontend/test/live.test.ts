// Contract tests against a running generation service. Enable with e.g.
//   LOGAN_API=http://127.0.0.1:8080 npm test
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";

const base = process.env.LOGAN_API;

describe.skipIf(!base)("live service contract", () => {
  const api = new ApiClient(base!);

  it("serves exactly the 12 class names", async () => {
    const classes = await api.classes();
    expect(classes.length).toBe(12);
    expect([...classes].sort()).toEqual(classes);
  });

  it("reports health with a checkpoint id", async () => {
    const health = await api.health();
    expect(health.status).toBe("ok");
    expect(health.checkpoint.length).toBeGreaterThan(0);
  });

  it("returns 64 images for a count=64 grid request", async () => {
    const resp = await api.generate("blue", 64, 7);
    expect(resp.images.length).toBe(64);
    expect(resp.seed_used).toBe(7);
    expect(resp.grid.length).toBeGreaterThan(0);
  });

  it("replays a seed byte-identically", async () => {
    const first = await api.generate("red", 16);
    const replay = await api.generate("red", 16, first.seed_used);
    expect(replay.images).toEqual(first.images);
    expect(replay.grid).toEqual(first.grid);
    const fresh = await api.generate("red", 16);
    expect(fresh.seed_used).not.toBe(first.seed_used);
  });

  it("rejects out-of-range counts with 400", async () => {
    await expect(api.generate("red", 0)).rejects.toMatchObject({ status: 400 });
    await expect(api.generate("red", 300)).rejects.toMatchObject({ status: 400 });
  });
});
