/** Inference backend contract: image files in, raw encoder outputs out. */

import type { RawAttention } from "./attention.js";

export class ModelLoadError extends Error {}
export class InferenceError extends Error {}

export interface EncoderOutput {
  /** Image embedding after the final projection (unnormalized). */
  embedding: Float32Array;
  /** Final-layer self-attention [heads, seq, seq], or null if the model
   *  cannot provide it. */
  attention: RawAttention | null;
}

export interface InferenceBackend {
  readonly name: string;
  /** Encode a batch of image files, preserving input order. */
  encode(imagePaths: string[]): Promise<EncoderOutput[]>;
  close?(): Promise<void>;
}

export interface BackendOptions {
  modelId: string;
  device?: string;
}
