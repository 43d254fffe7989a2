/** JSON-lines text manifest: one {kind, ordinal, text} object per line. */

import { readFileSync } from "node:fs";

export interface ManifestEntry {
  kind: 0 | 1; // 0 = description, 1 = comment
  ordinal: number;
  text: string;
}

export function parseManifest(raw: string): ManifestEntry[] {
  const entries: ManifestEntry[] = [];
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`manifest line ${i + 1}: not valid JSON`);
    }
    const rec = obj as Record<string, unknown>;
    if (rec.kind !== 0 && rec.kind !== 1) {
      throw new Error(`manifest line ${i + 1}: kind must be 0 or 1, got ${rec.kind}`);
    }
    if (typeof rec.ordinal !== "number" || !Number.isInteger(rec.ordinal) || rec.ordinal < 0) {
      throw new Error(`manifest line ${i + 1}: ordinal must be a non-negative integer`);
    }
    if (typeof rec.text !== "string") {
      throw new Error(`manifest line ${i + 1}: text must be a string`);
    }
    entries.push({ kind: rec.kind, ordinal: rec.ordinal, text: rec.text });
  }
  const seen = new Set<string>();
  for (const e of entries) {
    const key = `${e.kind}:${e.ordinal}`;
    if (seen.has(key)) {
      throw new Error(`duplicate manifest entry kind=${e.kind} ordinal=${e.ordinal}`);
    }
    seen.add(key);
  }
  return entries;
}

export function readManifest(path: string): ManifestEntry[] {
  return parseManifest(readFileSync(path, "utf-8"));
}
