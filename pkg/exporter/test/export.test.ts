import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, it, expect } from "vitest";

import { createHashEncoder } from "../src/encoders.js";
import { encodeEntries, exportEmbeddings, splitSentences } from "../src/export.js";
import { readEmbeddingFile } from "../src/interchange.js";
import { main } from "../src/cli.js";

const tmp = () => mkdtempSync(join(tmpdir(), "embed-export-"));

describe("splitSentences", () => {
  it("splits on terminators and newlines", () => {
    expect(splitSentences("Good start. Strong finish! Encore?\nDone")).toEqual([
      "Good start",
      "Strong finish",
      "Encore",
      "Done",
    ]);
  });

  it("drops empty fragments", () => {
    expect(splitSentences("...")).toEqual([]);
    expect(splitSentences("  ")).toEqual([]);
    expect(splitSentences("One..  Two.")).toEqual(["One", "Two"]);
  });
});

describe("encodeEntries", () => {
  const enc = createHashEncoder(64);

  it("passes single-sentence texts straight through", async () => {
    const records = await encodeEntries([{ kind: 0, ordinal: 0, text: "A calm record" }], enc);
    const [direct] = await enc.encode(["A calm record"]);
    expect(Array.from(records[0].vector)).toEqual(Array.from(direct));
  });

  it("mean of two identical sentences equals either one exactly", async () => {
    const records = await encodeEntries(
      [{ kind: 1, ordinal: 4, text: "Nice warm chorus. Nice warm chorus." }],
      enc,
    );
    const [single] = await enc.encode(["Nice warm chorus"]);
    expect(Array.from(records[0].vector)).toEqual(Array.from(single));
  });

  it("averages distinct sentences", async () => {
    const records = await encodeEntries(
      [{ kind: 0, ordinal: 1, text: "Soft verse. Loud chorus." }],
      enc,
    );
    const [a, b] = await enc.encode(["Soft verse", "Loud chorus"]);
    for (let d = 0; d < enc.dimension; d++) {
      expect(records[0].vector[d]).toBeCloseTo((a[d] + b[d]) / 2, 15);
    }
  });

  it("writes zeros and warns for empty text", async () => {
    const warnings: string[] = [];
    const records = await encodeEntries(
      [
        { kind: 0, ordinal: 2, text: "" },
        { kind: 1, ordinal: 5, text: "fine" },
      ],
      enc,
      (msg) => warnings.push(msg),
    );
    expect(records[0].vector.every((x) => x === 0)).toBe(true);
    expect(records[1].vector.some((x) => x !== 0)).toBe(true);
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toMatch(/kind=0 ordinal=2/);
  });
});

describe("exportEmbeddings", () => {
  const writeManifest = (dir: string, entries: object[]) => {
    const path = join(dir, "texts.jsonl");
    writeFileSync(path, entries.map((e) => JSON.stringify(e)).join("\n") + "\n");
    return path;
  };

  it("writes a file the interchange reader accepts, and reruns identically", async () => {
    const dir = tmp();
    const manifest = writeManifest(dir, [
      { kind: 0, ordinal: 0, text: "Bright record. Lots of horns." },
      { kind: 0, ordinal: 1, text: "calm" },
      { kind: 1, ordinal: 0, text: "good music" },
    ]);
    const out = join(dir, "vectors.bin");
    const enc = createHashEncoder(32);
    const result = await exportEmbeddings(manifest, enc, out);
    expect(result).toEqual({ entries: 3, dimension: 32 });

    const { dimension, records } = readEmbeddingFile(out);
    expect(dimension).toBe(32);
    expect(records.map((r) => [r.kind, r.ordinal])).toEqual([
      [0, 0],
      [0, 1],
      [1, 0],
    ]);

    const first = readFileSync(out);
    await exportEmbeddings(manifest, createHashEncoder(32), out);
    expect(readFileSync(out).equals(first)).toBe(true);
  });

  it("handles a 1000-entry manifest", async () => {
    const dir = tmp();
    const entries = Array.from({ length: 1000 }, (_, i) => ({
      kind: i % 2,
      ordinal: Math.floor(i / 2),
      text: `track number ${i} has a distinct mood. It resolves nicely.`,
    }));
    const manifest = writeManifest(dir, entries);
    const out = join(dir, "vectors.bin");
    await exportEmbeddings(manifest, createHashEncoder(16), out);
    const { dimension, records } = readEmbeddingFile(out);
    expect(dimension).toBe(16);
    expect(records).toHaveLength(1000);
  });
});

describe("cli main", () => {
  it("runs the hash path end to end", async () => {
    const dir = tmp();
    const manifest = join(dir, "texts.jsonl");
    writeFileSync(manifest, JSON.stringify({ kind: 0, ordinal: 0, text: "hello there" }) + "\n");
    const out = join(dir, "v.bin");
    const code = await main(["--input", manifest, "--output", out, "--dim", "8"]);
    expect(code).toBe(0);
    expect(readEmbeddingFile(out).dimension).toBe(8);
  });

  it("fails with exit 2 on bad arguments", async () => {
    expect(await main(["--input", "x"])).toBe(2);
    expect(await main(["--bogus"])).toBe(2);
    expect(await main(["--input", "a", "--output", "b", "--dim", "0"])).toBe(2);
  });

  it("fails with exit 1 when the manifest is missing", async () => {
    const dir = tmp();
    expect(await main(["--input", join(dir, "nope.jsonl"), "--output", join(dir, "v.bin")])).toBe(
      1,
    );
  });

  it("fails with exit 1 when the transformer encoder cannot load", async () => {
    const dir = tmp();
    const manifest = join(dir, "texts.jsonl");
    writeFileSync(manifest, JSON.stringify({ kind: 0, ordinal: 0, text: "hi" }) + "\n");
    const code = await main([
      "--input", manifest,
      "--output", join(dir, "v.bin"),
      "--encoder", "transformer",
      "--model", "definitely/not-available",
    ]);
    expect(code).toBe(1);
  });
});
