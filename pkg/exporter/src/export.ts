/** Turn a text manifest into an embedding interchange file.
 *
 * Each entry's text is split into sentences, every sentence is encoded, and
 * the per-sentence vectors are mean-aggregated into one vector per entry.
 * Empty texts produce a zero vector and a warning.
 */

import { ManifestEntry, readManifest } from "./manifest.js";
import { Encoder } from "./encoders.js";
import { EmbeddingRecord, writeEmbeddingFile } from "./interchange.js";

export function splitSentences(text: string): string[] {
  return text
    .split(/[.!?\n]+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

function meanVectors(vecs: Float64Array[], dimension: number): Float64Array {
  const out = new Float64Array(dimension);
  for (const v of vecs) {
    for (let d = 0; d < dimension; d++) out[d] += v[d];
  }
  for (let d = 0; d < dimension; d++) out[d] /= vecs.length;
  return out;
}

export async function encodeEntries(
  entries: ManifestEntry[],
  encoder: Encoder,
  warn: (msg: string) => void = (msg) => console.warn(msg),
): Promise<EmbeddingRecord[]> {
  const records: EmbeddingRecord[] = [];
  for (const entry of entries) {
    const sentences = splitSentences(entry.text);
    let vector: Float64Array;
    if (sentences.length === 0) {
      warn(`empty text for kind=${entry.kind} ordinal=${entry.ordinal}; writing zeros`);
      vector = new Float64Array(encoder.dimension);
    } else {
      const vecs = await encoder.encode(sentences);
      vector = vecs.length === 1 ? vecs[0] : meanVectors(vecs, encoder.dimension);
    }
    records.push({ kind: entry.kind, ordinal: entry.ordinal, vector });
  }
  return records;
}

export async function exportEmbeddings(
  manifestPath: string,
  encoder: Encoder,
  outputPath: string,
): Promise<{ entries: number; dimension: number }> {
  const entries = readManifest(manifestPath);
  const records = await encodeEntries(entries, encoder);
  writeEmbeddingFile(outputPath, encoder.dimension, records);
  return { entries: entries.length, dimension: encoder.dimension };
}
