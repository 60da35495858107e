import { describe, expect, it } from "vitest";

import { ArenaApi, type CatalogueEntry } from "../src/api.js";
import { badgeLabel, groupByAgent, loadCatalogue } from "../src/catalogue.js";

function entry(partial: Partial<CatalogueEntry>): CatalogueEntry {
  return {
    trace_id: "x__toy__seed0",
    agent: "x",
    game: "toy",
    seed: 0,
    steps: 10,
    wins: 0,
    losses: 0,
    aborted: false,
    ...partial,
  };
}

describe("catalogue", () => {
  it("badge text is the server's episode outcome counts", () => {
    expect(badgeLabel(entry({ wins: 4, losses: 2 }))).toBe("4W / 2L");
  });

  it("groups traces per agent, agents sorted", () => {
    const groups = groupByAgent([
      entry({ agent: "zeta", trace_id: "zeta__toy__seed0" }),
      entry({ agent: "alpha", trace_id: "alpha__toy__seed0" }),
      entry({ agent: "alpha", trace_id: "alpha__toy__seed1", seed: 1 }),
    ]);
    expect(groups.map((g) => g.agent)).toEqual(["alpha", "zeta"]);
    expect(groups[0].entries).toHaveLength(2);
  });

  it("passes filters through as query parameters", async () => {
    const urls: string[] = [];
    const api = new ArenaApi("http://test", async (url) => {
      urls.push(url);
      return new Response(JSON.stringify({ replays: [] }), { status: 200 });
    });
    await loadCatalogue(api, { game: "bait", agent: "human" });
    expect(urls).toEqual(["http://test/replays?game=bait&agent=human"]);
  });
});
