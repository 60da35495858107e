/** Replay catalogue: one tab per trace with win/loss badges taken straight
 * from the server listing (the badge counts are the trace's episode outcome
 * counts; the client never recomputes them). */

import type { ArenaApi, CatalogueEntry } from "./api.js";

export interface CatalogueGroup {
  agent: string;
  entries: CatalogueEntry[];
}

export function badgeLabel(entry: CatalogueEntry): string {
  return `${entry.wins}W / ${entry.losses}L`;
}

export function groupByAgent(entries: CatalogueEntry[]): CatalogueGroup[] {
  const byAgent = new Map<string, CatalogueEntry[]>();
  for (const entry of entries) {
    const group = byAgent.get(entry.agent) ?? [];
    group.push(entry);
    byAgent.set(entry.agent, group);
  }
  return [...byAgent.entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([agent, group]) => ({ agent, entries: group }));
}

export async function loadCatalogue(
  api: ArenaApi,
  filter?: { game?: string; agent?: string },
): Promise<CatalogueGroup[]> {
  return groupByAgent(await api.replays(filter));
}
