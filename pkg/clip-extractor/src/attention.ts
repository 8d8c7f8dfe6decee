/**
 * Attention-map postprocessing.
 *
 * A vision transformer's final-layer self-attention has shape
 * [heads, seq, seq] where seq = 1 + gridSize^2 (the class token plus the
 * patch tokens). The spatial map we export is the class-token query row,
 * averaged across heads, with the class-self column dropped and the
 * remaining patch weights reshaped to gridSize x gridSize.
 *
 * Each softmax row must sum to 1; that is validated (within 1e-4) on the
 * full row, before the class-self entry is sliced off, so the exported
 * grid's total weight is at most 1.
 */

export class AttentionError extends Error {}

export interface RawAttention {
  /** Row-major data of shape dims. */
  data: Float32Array;
  /** [heads, seq, seq], optionally with a leading batch dim of 1. */
  dims: number[];
}

export const ROW_SUM_TOLERANCE = 1e-4;

export interface ClsAttentionResult {
  /** gridSize x gridSize patch weights, row-major. */
  grid: Float32Array;
  gridSize: number;
  /** Per-head sums of the full class-token row (diagnostics). */
  headRowSums: number[];
}

export function clsAttentionGrid(attention: RawAttention, gridSize = 7): ClsAttentionResult {
  let { data, dims } = attention;
  if (dims.length === 4 && dims[0] === 1) {
    dims = dims.slice(1);
  }
  if (dims.length !== 3 || dims[1] !== dims[2]) {
    throw new AttentionError(`expected [heads, seq, seq] attention, got [${dims}]`);
  }
  const [heads, seq] = dims;
  if (seq !== gridSize * gridSize + 1) {
    throw new AttentionError(
      `sequence length ${seq} does not match a ${gridSize}x${gridSize} patch grid (+1 class token)`,
    );
  }
  if (data.length !== heads * seq * seq) {
    throw new AttentionError(`data length ${data.length} does not match dims [${dims}]`);
  }

  const avgRow = new Float64Array(seq);
  const headRowSums: number[] = [];
  for (let h = 0; h < heads; h++) {
    const rowStart = h * seq * seq; // query row 0: the class token
    let sum = 0;
    for (let k = 0; k < seq; k++) {
      const w = data[rowStart + k];
      if (w < 0) {
        throw new AttentionError(`negative attention weight at head ${h}, key ${k}`);
      }
      sum += w;
      avgRow[k] += w;
    }
    if (Math.abs(sum - 1) > ROW_SUM_TOLERANCE) {
      throw new AttentionError(
        `head ${h} class-token row sums to ${sum.toFixed(6)}, expected 1 within ${ROW_SUM_TOLERANCE}`,
      );
    }
    headRowSums.push(sum);
  }

  const grid = new Float32Array(gridSize * gridSize);
  for (let k = 1; k < seq; k++) {
    grid[k - 1] = avgRow[k] / heads;
  }
  return { grid, gridSize, headRowSums };
}
