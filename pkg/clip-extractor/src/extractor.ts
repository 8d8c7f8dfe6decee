/**
 * Extraction pipeline: run an encoder over every image referenced by a run
 * manifest (the original plus each augmentation per entry), write the
 * embedding and the class-token attention grid as tensor files beside the
 * images, and rewrite the manifest with the new paths.
 */

import path from "node:path";

import { clsAttentionGrid } from "./attention.js";
import { InferenceError } from "./backend.js";
import type { EncoderOutput, InferenceBackend } from "./backend.js";
import {
  loadManifest,
  resolveRef,
  saveManifestAtomic,
} from "./manifest.js";
import type { TensorRefs } from "./manifest.js";
import { writeTensor } from "./tensorfile.js";

export interface ExtractorConfig {
  manifestPath: string;
  batchSize: number;
  normalize: boolean;
  gridSize: number;
}

export interface ExtractionFailure {
  image_key: string;
  slot: string;
  error: string;
}

export interface ExtractionSummary {
  images: number;
  tensorsWritten: number;
  failures: ExtractionFailure[];
}

interface Job {
  imageKey: string;
  slot: string; // "original" or an augmentation name
  refs: TensorRefs;
  absImagePath: string;
}

/** Sibling tensor path: "GaussNoise/k.png" -> "GaussNoise/k.emb.stns". */
export function tensorPathFor(imagePath: string, kind: "emb" | "attn"): string {
  const ext = path.posix.extname(imagePath);
  const base = ext ? imagePath.slice(0, -ext.length) : imagePath;
  return `${base}.${kind}.stns`;
}

function l2Normalize(values: Float32Array): Float32Array {
  let sumSq = 0;
  for (const v of values) sumSq += v * v;
  const norm = Math.sqrt(sumSq);
  if (norm === 0) return values;
  return Float32Array.from(values, (v) => v / norm);
}

export async function runExtraction(
  config: ExtractorConfig,
  backend: InferenceBackend,
): Promise<ExtractionSummary> {
  if (config.batchSize < 1) {
    throw new InferenceError(`batch size must be >= 1, got ${config.batchSize}`);
  }
  const { manifest, dir } = await loadManifest(config.manifestPath);

  const jobs: Job[] = [];
  for (const entry of manifest.images) {
    const slots: Array<[string, TensorRefs]> = [
      ["original", entry.original],
      ...Object.entries(entry.augmentations).sort(([a], [b]) => a.localeCompare(b)),
    ];
    for (const [slot, refs] of slots) {
      jobs.push({
        imageKey: entry.image_key,
        slot,
        refs,
        absImagePath: resolveRef(dir, refs.image_path),
      });
    }
  }

  const summary: ExtractionSummary = {
    images: jobs.length,
    tensorsWritten: 0,
    failures: [],
  };

  for (let start = 0; start < jobs.length; start += config.batchSize) {
    const batch = jobs.slice(start, start + config.batchSize);
    let outputs: EncoderOutput[];
    try {
      outputs = await backend.encode(batch.map((j) => j.absImagePath));
    } catch (err) {
      // fall back to per-image encoding so one bad file cannot sink a batch
      outputs = [];
      for (const job of batch) {
        try {
          outputs.push((await backend.encode([job.absImagePath]))[0]);
        } catch (inner) {
          outputs.push(null as unknown as EncoderOutput);
          summary.failures.push({
            image_key: job.imageKey,
            slot: job.slot,
            error: (inner as Error).message,
          });
        }
      }
      void err;
    }

    for (let i = 0; i < batch.length; i++) {
      const job = batch[i];
      const output = outputs[i];
      if (!output) continue;
      try {
        const embedding = config.normalize ? l2Normalize(output.embedding) : output.embedding;
        const embRel = tensorPathFor(job.refs.image_path, "emb");
        await writeTensor(resolveRef(dir, embRel), embedding, [embedding.length]);
        job.refs.embedding_path = embRel;
        summary.tensorsWritten++;

        if (output.attention === null) {
          summary.failures.push({
            image_key: job.imageKey,
            slot: job.slot,
            error:
              "model provided no attention tensors (export lacks attention outputs); " +
              "embedding written, attention skipped",
          });
        } else {
          const { grid, gridSize } = clsAttentionGrid(output.attention, config.gridSize);
          const attnRel = tensorPathFor(job.refs.image_path, "attn");
          await writeTensor(resolveRef(dir, attnRel), grid, [gridSize, gridSize]);
          job.refs.attention_path = attnRel;
          summary.tensorsWritten++;
        }
      } catch (err) {
        summary.failures.push({
          image_key: job.imageKey,
          slot: job.slot,
          error: (err as Error).message,
        });
      }
    }
  }

  await saveManifestAtomic(manifest, config.manifestPath);
  return summary;
}
