/** Binary embedding interchange file, version 1.
 *
 * Little-endian throughout:
 *   header  : magic "LTHE" (4 bytes) | u32 version | u32 dimension | u64 count
 *   record  : u8 kind | u64 ordinal | dimension x f64
 *
 * Records are written sorted by (kind, ordinal) so identical inputs produce
 * byte-identical files.
 */

import { writeFileSync, readFileSync } from "node:fs";

export const MAGIC = "LTHE";
export const VERSION = 1;
export const HEADER_SIZE = 20;
export const RECORD_HEAD_SIZE = 9;

export interface EmbeddingRecord {
  kind: 0 | 1;
  ordinal: number;
  vector: Float64Array;
}

export function encodeEmbeddingFile(dimension: number, records: EmbeddingRecord[]): Buffer {
  if (!Number.isInteger(dimension) || dimension <= 0) {
    throw new Error(`dimension must be a positive integer, got ${dimension}`);
  }
  const sorted = [...records].sort((a, b) => a.kind - b.kind || a.ordinal - b.ordinal);
  const recordSize = RECORD_HEAD_SIZE + 8 * dimension;
  const buf = Buffer.alloc(HEADER_SIZE + recordSize * sorted.length);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(dimension, 8);
  buf.writeBigUInt64LE(BigInt(sorted.length), 12);
  let off = HEADER_SIZE;
  for (const rec of sorted) {
    if (rec.vector.length !== dimension) {
      throw new Error(
        `vector for kind=${rec.kind} ordinal=${rec.ordinal} has length ` +
          `${rec.vector.length}, expected ${dimension}`,
      );
    }
    for (const x of rec.vector) {
      if (!Number.isFinite(x)) {
        throw new Error(`non-finite value for kind=${rec.kind} ordinal=${rec.ordinal}`);
      }
    }
    buf.writeUInt8(rec.kind, off);
    buf.writeBigUInt64LE(BigInt(rec.ordinal), off + 1);
    for (let d = 0; d < dimension; d++) {
      buf.writeDoubleLE(rec.vector[d], off + RECORD_HEAD_SIZE + 8 * d);
    }
    off += recordSize;
  }
  return buf;
}

export function writeEmbeddingFile(
  path: string,
  dimension: number,
  records: EmbeddingRecord[],
): void {
  writeFileSync(path, encodeEmbeddingFile(dimension, records));
}

/** Parse an interchange buffer back into records (used by the tests). */
export function decodeEmbeddingFile(buf: Buffer): {
  dimension: number;
  records: EmbeddingRecord[];
} {
  if (buf.length < HEADER_SIZE) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 4) !== MAGIC) throw new Error("bad magic");
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const dimension = buf.readUInt32LE(8);
  const count = Number(buf.readBigUInt64LE(12));
  const recordSize = RECORD_HEAD_SIZE + 8 * dimension;
  if (buf.length !== HEADER_SIZE + count * recordSize) {
    throw new Error(`expected ${HEADER_SIZE + count * recordSize} bytes, got ${buf.length}`);
  }
  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    const off = HEADER_SIZE + i * recordSize;
    const kind = buf.readUInt8(off);
    if (kind !== 0 && kind !== 1) throw new Error(`unknown node kind ${kind}`);
    const ordinal = Number(buf.readBigUInt64LE(off + 1));
    const vector = new Float64Array(dimension);
    for (let d = 0; d < dimension; d++) {
      vector[d] = buf.readDoubleLE(off + RECORD_HEAD_SIZE + 8 * d);
    }
    records.push({ kind: kind as 0 | 1, ordinal, vector });
  }
  return { dimension, records };
}

export function readEmbeddingFile(path: string): {
  dimension: number;
  records: EmbeddingRecord[];
} {
  return decodeEmbeddingFile(readFileSync(path));
}
