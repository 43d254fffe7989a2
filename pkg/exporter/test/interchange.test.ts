import { describe, it, expect } from "vitest";

import {
  HEADER_SIZE,
  RECORD_HEAD_SIZE,
  decodeEmbeddingFile,
  encodeEmbeddingFile,
  EmbeddingRecord,
} from "../src/interchange.js";

const rec = (kind: 0 | 1, ordinal: number, values: number[]): EmbeddingRecord => ({
  kind,
  ordinal,
  vector: Float64Array.from(values),
});

describe("encodeEmbeddingFile", () => {
  it("lays out the header exactly", () => {
    const buf = encodeEmbeddingFile(2, [rec(0, 0, [1.5, -2.0]), rec(1, 7, [0, 3.25])]);
    expect(buf.toString("ascii", 0, 4)).toBe("LTHE");
    expect(buf.readUInt32LE(4)).toBe(1);
    expect(buf.readUInt32LE(8)).toBe(2);
    expect(buf.readBigUInt64LE(12)).toBe(2n);
    expect(buf.length).toBe(HEADER_SIZE + 2 * (RECORD_HEAD_SIZE + 16));
  });

  it("lays out records as kind byte, ordinal u64, then doubles", () => {
    const buf = encodeEmbeddingFile(2, [rec(1, 300, [1.5, -2.0])]);
    expect(buf.readUInt8(HEADER_SIZE)).toBe(1);
    expect(buf.readBigUInt64LE(HEADER_SIZE + 1)).toBe(300n);
    expect(buf.readDoubleLE(HEADER_SIZE + 9)).toBe(1.5);
    expect(buf.readDoubleLE(HEADER_SIZE + 17)).toBe(-2.0);
  });

  it("writes records sorted by (kind, ordinal) whatever the input order", () => {
    const records = [rec(1, 0, [1]), rec(0, 2, [2]), rec(0, 1, [3])];
    const shuffled = [records[2], records[0], records[1]];
    expect(encodeEmbeddingFile(1, records).equals(encodeEmbeddingFile(1, shuffled))).toBe(true);
    const { records: out } = decodeEmbeddingFile(encodeEmbeddingFile(1, shuffled));
    expect(out.map((r) => [r.kind, r.ordinal])).toEqual([
      [0, 1],
      [0, 2],
      [1, 0],
    ]);
  });

  it("round-trips every value bit-exactly", () => {
    const records = [
      rec(0, 0, [Math.PI, 1e-300, -1e300]),
      rec(0, 1, [0, -0, 2 ** -1074]),
      rec(1, 9, [1 / 3, 0.1, 123456.789]),
    ];
    const { dimension, records: out } = decodeEmbeddingFile(encodeEmbeddingFile(3, records));
    expect(dimension).toBe(3);
    expect(out).toHaveLength(3);
    for (let i = 0; i < records.length; i++) {
      expect(Array.from(out[i].vector)).toEqual(Array.from(records[i].vector));
    }
  });

  it("rejects non-finite values", () => {
    expect(() => encodeEmbeddingFile(1, [rec(0, 0, [NaN])])).toThrow(/non-finite/);
    expect(() => encodeEmbeddingFile(1, [rec(1, 2, [Infinity])])).toThrow(/kind=1 ordinal=2/);
  });

  it("rejects vectors of the wrong length", () => {
    expect(() => encodeEmbeddingFile(3, [rec(0, 0, [1, 2])])).toThrow(/expected 3/);
  });

  it("rejects bad dimensions", () => {
    expect(() => encodeEmbeddingFile(0, [])).toThrow(/dimension/);
    expect(() => encodeEmbeddingFile(2.5, [])).toThrow(/dimension/);
  });
});

describe("decodeEmbeddingFile", () => {
  it("rejects buffers with a wrong magic or version", () => {
    const good = encodeEmbeddingFile(1, [rec(0, 0, [1])]);
    const badMagic = Buffer.from(good);
    badMagic.write("XXXX", 0, "ascii");
    expect(() => decodeEmbeddingFile(badMagic)).toThrow(/bad magic/);
    const badVersion = Buffer.from(good);
    badVersion.writeUInt32LE(9, 4);
    expect(() => decodeEmbeddingFile(badVersion)).toThrow(/version 9/);
  });

  it("rejects truncated and oversized buffers", () => {
    const good = encodeEmbeddingFile(1, [rec(0, 0, [1])]);
    expect(() => decodeEmbeddingFile(good.subarray(0, 10))).toThrow(/truncated/);
    expect(() => decodeEmbeddingFile(good.subarray(0, good.length - 1))).toThrow(/bytes/);
    expect(() => decodeEmbeddingFile(Buffer.concat([good, Buffer.alloc(1)]))).toThrow(/bytes/);
  });

  it("rejects unknown record kinds", () => {
    const buf = encodeEmbeddingFile(1, [rec(0, 0, [1])]);
    buf.writeUInt8(7, HEADER_SIZE);
    expect(() => decodeEmbeddingFile(buf)).toThrow(/unknown node kind 7/);
  });
});
