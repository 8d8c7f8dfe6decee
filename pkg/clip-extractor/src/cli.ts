#!/usr/bin/env node
/**
 * clip-extract: run a CLIP vision encoder over every image in a run
 * manifest and write embedding/attention tensor files beside the images.
 *
 *   clip-extract --manifest M [--batch-size B] [--device D] [--model ID]
 *                [--backend hf|stub] [--normalize] [--grid 7]
 *
 * Exit codes: 0 success, 1 usage error, 2 data/model error.
 */

import process from "node:process";

import type { InferenceBackend } from "./backend.js";
import { StubBackend } from "./backends/stub.js";
import { DEFAULT_MODEL_ID, TransformersBackend } from "./backends/transformers.js";
import { runExtraction } from "./extractor.js";

interface CliArgs {
  manifest: string;
  batchSize: number;
  device?: string;
  model: string;
  backend: "hf" | "stub";
  normalize: boolean;
  grid: number;
}

const USAGE =
  "usage: clip-extract --manifest M [--batch-size B] [--device D] " +
  "[--model ID] [--backend hf|stub] [--normalize] [--grid 7]";

class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = {
    manifest: "",
    batchSize: 8,
    model: DEFAULT_MODEL_ID,
    backend: "hf",
    normalize: false,
    grid: 7,
  };
  const next = (i: number, flag: string): string => {
    if (i + 1 >= argv.length) throw new UsageError(`${flag} requires a value`);
    return argv[i + 1];
  };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--manifest":
        args.manifest = next(i, "--manifest");
        i++;
        break;
      case "--batch-size":
        args.batchSize = Number(next(i, "--batch-size"));
        i++;
        break;
      case "--device":
        args.device = next(i, "--device");
        i++;
        break;
      case "--model":
        args.model = next(i, "--model");
        i++;
        break;
      case "--backend": {
        const value = next(i, "--backend");
        if (value !== "hf" && value !== "stub") {
          throw new UsageError(`--backend must be hf or stub, got ${value}`);
        }
        args.backend = value;
        i++;
        break;
      }
      case "--normalize":
        args.normalize = true;
        break;
      case "--grid":
        args.grid = Number(next(i, "--grid"));
        i++;
        break;
      case "--help":
      case "-h":
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        throw new UsageError(`unknown argument ${argv[i]}`);
    }
  }
  if (!args.manifest) throw new UsageError("--manifest is required");
  if (!Number.isInteger(args.batchSize) || args.batchSize < 1) {
    throw new UsageError("--batch-size must be a positive integer");
  }
  if (!Number.isInteger(args.grid) || args.grid < 1) {
    throw new UsageError("--grid must be a positive integer");
  }
  return args;
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`clip-extract: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }

  try {
    const backend: InferenceBackend =
      args.backend === "stub"
        ? new StubBackend()
        : await TransformersBackend.create({ modelId: args.model, device: args.device });
    const summary = await runExtraction(
      {
        manifestPath: args.manifest,
        batchSize: args.batchSize,
        normalize: args.normalize,
        gridSize: args.grid,
      },
      backend,
    );
    console.log(
      `processed ${summary.images} images with backend ${backend.name}, ` +
        `wrote ${summary.tensorsWritten} tensors`,
    );
    for (const failure of summary.failures) {
      console.error(`warning: ${failure.image_key}/${failure.slot}: ${failure.error}`);
    }
    await backend.close?.();
    return 0;
  } catch (err) {
    console.error(`clip-extract: error: ${(err as Error).message}`);
    return 2;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
