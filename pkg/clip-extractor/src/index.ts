export { clsAttentionGrid, AttentionError, ROW_SUM_TOLERANCE } from "./attention.js";
export type { ClsAttentionResult, RawAttention } from "./attention.js";
export { InferenceError, ModelLoadError } from "./backend.js";
export type { BackendOptions, EncoderOutput, InferenceBackend } from "./backend.js";
export { StubBackend } from "./backends/stub.js";
export { DEFAULT_MODEL_ID, TransformersBackend } from "./backends/transformers.js";
export { runExtraction, tensorPathFor } from "./extractor.js";
export type { ExtractionSummary, ExtractorConfig } from "./extractor.js";
export {
  ManifestError,
  loadManifest,
  parseManifest,
  resolveRef,
  saveManifestAtomic,
} from "./manifest.js";
export type { ImageEntry, RunManifest, TensorRefs } from "./manifest.js";
export {
  BadMagicError,
  TensorFormatError,
  TruncatedPayloadError,
  UnsupportedDtypeError,
  UnsupportedVersionError,
  decodeTensor,
  encodeTensor,
  readTensor,
  writeTensor,
} from "./tensorfile.js";
export type { Tensor } from "./tensorfile.js";
