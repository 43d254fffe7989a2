/** Sentence encoders: a deterministic hashed n-gram model (default, no
 * downloads) and an optional pre-trained transformer loaded at runtime.
 */

export interface Encoder {
  name: string;
  dimension: number;
  encode(sentences: string[]): Promise<Float64Array[]>;
}

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h;
}

function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
}

/** Signed feature hashing over word unigrams and bigrams, L2-normalized.
 *
 * Pure integer hashing plus a fixed accumulation order, so identical text
 * always yields bit-identical vectors.
 */
export function createHashEncoder(dimension: number): Encoder {
  if (!Number.isInteger(dimension) || dimension <= 0) {
    throw new Error(`encoder dimension must be a positive integer, got ${dimension}`);
  }
  const embedOne = (sentence: string): Float64Array => {
    const vec = new Float64Array(dimension);
    const tokens = tokenize(sentence);
    const features = [...tokens];
    for (let i = 0; i + 1 < tokens.length; i++) {
      features.push(`${tokens[i]}_${tokens[i + 1]}`);
    }
    for (const feat of features) {
      const h = fnv1a(feat);
      const sign = h & 0x80000000 ? -1 : 1;
      vec[h % dimension] += sign;
    }
    let norm = 0;
    for (const x of vec) norm += x * x;
    norm = Math.sqrt(norm);
    if (norm > 0) {
      for (let d = 0; d < dimension; d++) vec[d] /= norm;
    }
    return vec;
  };
  return {
    name: `hash-ngram-${dimension}`,
    dimension,
    encode: async (sentences) => sentences.map(embedOne),
  };
}

/** Pre-trained sentence transformer via @xenova/transformers (mean pooling,
 * normalized).  Any load problem — missing package, missing weights — aborts.
 */
export async function createTransformerEncoder(model: string): Promise<Encoder> {
  let pipe: (text: string, opts: object) => Promise<{ data: ArrayLike<number> }>;
  try {
    // Resolved at runtime only; the package is an optional install.
    const specifier = "@xenova/transformers";
    const mod = await import(specifier);
    pipe = await mod.pipeline("feature-extraction", model);
  } catch (err) {
    throw new Error(
      `failed to load transformer encoder "${model}": ${(err as Error).message}`,
    );
  }
  const run = async (sentence: string): Promise<Float64Array> => {
    const out = await pipe(sentence, { pooling: "mean", normalize: true });
    return Float64Array.from(out.data);
  };
  const probe = await run("dimension probe");
  return {
    name: `transformer:${model}`,
    dimension: probe.length,
    encode: async (sentences) => {
      const vecs: Float64Array[] = [];
      for (const s of sentences) vecs.push(await run(s));
      return vecs;
    },
  };
}
