/**
 * Real inference backend built on @huggingface/transformers (ONNX runtime).
 *
 * The dependency is optional and loaded dynamically: install it with
 * `npm install @huggingface/transformers` to enable this backend. The
 * default model is the ViT-B/32 CLIP vision tower
 * ("Xenova/clip-vit-base-patch32"), whose projected image embeddings are
 * 512-dimensional.
 *
 * Attention maps require an ONNX export that emits attention tensors
 * (standard exports only emit embeddings). When the loaded model's outputs
 * carry no `attentions`, this backend reports embeddings and a clear error
 * for the attention slot rather than fabricating data.
 */

import { InferenceError, ModelLoadError } from "../backend.js";
import type { BackendOptions, EncoderOutput, InferenceBackend } from "../backend.js";
import type { RawAttention } from "../attention.js";

export const DEFAULT_MODEL_ID = "Xenova/clip-vit-base-patch32";

interface TensorLike {
  data: Float32Array | number[];
  dims: number[];
}

export class TransformersBackend implements InferenceBackend {
  readonly name = "hf";

  private constructor(
    private readonly processor: (images: unknown) => Promise<Record<string, unknown>>,
    private readonly model: (inputs: Record<string, unknown>) => Promise<Record<string, unknown>>,
    private readonly readImage: (path: string) => Promise<unknown>,
  ) {}

  static async create(options: BackendOptions): Promise<TransformersBackend> {
    let mod: Record<string, any>;
    try {
      mod = await import("@huggingface/transformers");
    } catch (err) {
      throw new ModelLoadError(
        "@huggingface/transformers is not installed; " +
          "run `npm install @huggingface/transformers` or use --backend stub " +
          `(${(err as Error).message})`,
      );
    }
    try {
      const processor = await mod.AutoProcessor.from_pretrained(options.modelId);
      const model = await mod.CLIPVisionModelWithProjection.from_pretrained(options.modelId, {
        dtype: "fp32",
        ...(options.device ? { device: options.device } : {}),
        output_attentions: true,
      });
      const readImage = (p: string) => mod.RawImage.read(p);
      return new TransformersBackend(
        (images) => processor(images),
        (inputs) => model(inputs),
        readImage,
      );
    } catch (err) {
      throw new ModelLoadError(`cannot load model ${options.modelId}: ${(err as Error).message}`);
    }
  }

  async encode(imagePaths: string[]): Promise<EncoderOutput[]> {
    const images = await Promise.all(imagePaths.map((p) => this.readImage(p)));
    const inputs = await this.processor(images);
    const output = await this.model(inputs);

    const embeds = output.image_embeds as TensorLike | undefined;
    if (!embeds || embeds.dims.length !== 2 || embeds.dims[0] !== imagePaths.length) {
      throw new InferenceError(
        `model output has no [batch, dim] image_embeds (got dims [${embeds?.dims}])`,
      );
    }
    const lastAttention = this.lastLayerAttention(output);

    const dim = embeds.dims[1];
    return imagePaths.map((_, i) => ({
      embedding: Float32Array.from(
        Array.prototype.slice.call(embeds.data, i * dim, (i + 1) * dim),
      ),
      attention: lastAttention ? sliceBatchItem(lastAttention, i) : null,
    }));
  }

  /** Final transformer layer's attention, if the export provides it. */
  private lastLayerAttention(output: Record<string, unknown>): TensorLike | null {
    const attentions = output.attentions as TensorLike[] | undefined;
    if (Array.isArray(attentions) && attentions.length > 0) {
      return attentions[attentions.length - 1];
    }
    // some exports name per-layer outputs attentions.0, attentions.1, ...
    const indexed = Object.keys(output)
      .filter((k) => /^attentions\.\d+$/.test(k))
      .sort((a, b) => Number(a.split(".")[1]) - Number(b.split(".")[1]));
    if (indexed.length > 0) {
      return output[indexed[indexed.length - 1]] as TensorLike;
    }
    return null;
  }
}

function sliceBatchItem(tensor: TensorLike, index: number): RawAttention {
  const dims = tensor.dims;
  if (dims.length !== 4) {
    throw new InferenceError(`expected [batch, heads, seq, seq] attention, got [${dims}]`);
  }
  const [, heads, seq] = dims;
  const stride = heads * seq * seq;
  return {
    data: Float32Array.from(
      Array.prototype.slice.call(tensor.data, index * stride, (index + 1) * stride),
    ),
    dims: [heads, seq, dims[3]],
  };
}
