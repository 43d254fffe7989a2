#!/usr/bin/env node
/** CLI: read a JSONL text manifest, encode every entry, write the binary
 * interchange file.
 *
 *   node dist/cli.js --input texts.jsonl --output vectors.bin
 *   node dist/cli.js --input texts.jsonl --output vectors.bin \
 *       --encoder transformer --model Xenova/all-MiniLM-L6-v2
 */

import { createHashEncoder, createTransformerEncoder, Encoder } from "./encoders.js";
import { exportEmbeddings } from "./export.js";

export interface CliOptions {
  input: string;
  output: string;
  encoder: "hash" | "transformer";
  dim: number;
  model: string;
}

const USAGE =
  "usage: embed-export --input <texts.jsonl> --output <vectors.bin> " +
  "[--encoder hash|transformer] [--dim N] [--model NAME]";

export function parseArgs(argv: string[]): CliOptions {
  const opts: CliOptions = {
    input: "",
    output: "",
    encoder: "hash",
    dim: 256,
    model: "Xenova/all-MiniLM-L6-v2",
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`${arg} needs a value\n${USAGE}`);
      return argv[++i];
    };
    switch (arg) {
      case "--input":
        opts.input = next();
        break;
      case "--output":
        opts.output = next();
        break;
      case "--encoder": {
        const val = next();
        if (val !== "hash" && val !== "transformer") {
          throw new Error(`--encoder must be hash or transformer, got ${val}`);
        }
        opts.encoder = val;
        break;
      }
      case "--dim":
        opts.dim = Number(next());
        break;
      case "--model":
        opts.model = next();
        break;
      default:
        throw new Error(`unknown argument ${arg}\n${USAGE}`);
    }
  }
  if (!opts.input || !opts.output) throw new Error(USAGE);
  if (!Number.isInteger(opts.dim) || opts.dim <= 0) {
    throw new Error(`--dim must be a positive integer, got ${opts.dim}`);
  }
  return opts;
}

export async function main(argv: string[]): Promise<number> {
  let opts: CliOptions;
  try {
    opts = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const encoder: Encoder =
      opts.encoder === "hash"
        ? createHashEncoder(opts.dim)
        : await createTransformerEncoder(opts.model);
    const { entries, dimension } = await exportEmbeddings(opts.input, encoder, opts.output);
    console.log(
      `wrote ${entries} vectors (dim ${dimension}, encoder ${encoder.name}) to ${opts.output}`,
    );
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === `file://${process.argv[1]}`;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
