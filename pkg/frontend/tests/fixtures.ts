/**
 * Access to the recorded service responses under tests/fixtures/.
 *
 * The bodies are stored byte-for-byte as the service produced them
 * (see scripts/record_ui_fixtures.py in the repository root), so tests
 * can assert that what the console displays is exactly what was sent.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const fixtureDir = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

interface IndexEntry {
  status: number;
  body: string;
}

const index: Record<string, IndexEntry> = JSON.parse(
  readFileSync(join(fixtureDir, "index.json"), "utf8"),
);

export function fixtureBytes(name: string): Buffer {
  const entry = index[name];
  if (!entry) throw new Error(`no recorded fixture named ${name}`);
  return readFileSync(join(fixtureDir, entry.body));
}

export function fixtureText(name: string): string {
  return fixtureBytes(name).toString("utf8");
}

export function fixtureStatus(name: string): number {
  const entry = index[name];
  if (!entry) throw new Error(`no recorded fixture named ${name}`);
  return entry.status;
}

/** The raw text of the first occurrence of a numeric field in the recorded bytes. */
export function rawField(name: string, key: string): string {
  const match = fixtureText(name).match(new RegExp(`"${key}"\\s*:\\s*(-?[0-9][0-9eE+.-]*)`));
  if (!match || match[1] === undefined) {
    throw new Error(`fixture ${name} has no numeric field ${key}`);
  }
  return match[1];
}
