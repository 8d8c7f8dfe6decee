/**
 * Deterministic synthetic backend for pipeline testing.
 *
 * NOT a learned encoder: outputs are pseudo-random but fully determined by
 * each image file's bytes, with the exact tensor shapes of CLIP ViT-B/32
 * (512-dim embedding; 12-head, 50x50 final-layer attention with softmax
 * rows). It lets the extraction, serialization and manifest plumbing run
 * end to end without model weights.
 */

import { createHash } from "node:crypto";
import { readFile } from "node:fs/promises";

import type { EncoderOutput, InferenceBackend } from "../backend.js";

export const STUB_EMBEDDING_DIM = 512;
export const STUB_HEADS = 12;
export const STUB_SEQ = 50; // 1 class token + 7x7 patches

/** mulberry32: tiny deterministic PRNG, seeded from a 32-bit integer. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function seedFromBytes(bytes: Buffer): number {
  return createHash("sha256").update(bytes).digest().readUInt32LE(0);
}

export class StubBackend implements InferenceBackend {
  readonly name = "stub";

  async encode(imagePaths: string[]): Promise<EncoderOutput[]> {
    return Promise.all(imagePaths.map((p) => this.encodeOne(p)));
  }

  private async encodeOne(imagePath: string): Promise<EncoderOutput> {
    const rand = mulberry32(seedFromBytes(await readFile(imagePath)));

    const embedding = new Float32Array(STUB_EMBEDDING_DIM);
    for (let i = 0; i < STUB_EMBEDDING_DIM; i++) {
      embedding[i] = rand() * 2 - 1;
    }

    const data = new Float32Array(STUB_HEADS * STUB_SEQ * STUB_SEQ);
    const logits = new Float64Array(STUB_SEQ);
    for (let h = 0; h < STUB_HEADS; h++) {
      for (let q = 0; q < STUB_SEQ; q++) {
        let maxLogit = -Infinity;
        for (let k = 0; k < STUB_SEQ; k++) {
          logits[k] = rand() * 4;
          if (logits[k] > maxLogit) maxLogit = logits[k];
        }
        let total = 0;
        for (let k = 0; k < STUB_SEQ; k++) {
          logits[k] = Math.exp(logits[k] - maxLogit);
          total += logits[k];
        }
        const base = (h * STUB_SEQ + q) * STUB_SEQ;
        for (let k = 0; k < STUB_SEQ; k++) {
          data[base + k] = logits[k] / total;
        }
      }
    }
    return {
      embedding,
      attention: { data, dims: [STUB_HEADS, STUB_SEQ, STUB_SEQ] },
    };
  }
}
