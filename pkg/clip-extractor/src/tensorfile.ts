/**
 * Binary tensor interchange format.
 *
 * Layout (all multi-byte fields little-endian):
 *
 *     offset  size       field
 *     0       4          magic "STNS"
 *     4       2          version, uint16 (currently 1)
 *     6       1          dtype, uint8 (1 = IEEE-754 float32 little-endian)
 *     7       1          ndim, uint8 (1 or 2)
 *     8       4 * ndim   dims, uint32 each
 *     ...     4 * prod   payload, row-major float32 values
 *
 * This is the wire contract with the analysis toolkit that consumes the
 * tensors; bytes are written explicitly little-endian regardless of host.
 */

import { readFile, writeFile } from "node:fs/promises";

export const MAGIC = "STNS";
export const VERSION = 1;
export const DTYPE_F32 = 1;

export class TensorFormatError extends Error {}
export class BadMagicError extends TensorFormatError {}
export class UnsupportedVersionError extends TensorFormatError {}
export class UnsupportedDtypeError extends TensorFormatError {}
export class TruncatedPayloadError extends TensorFormatError {}

export interface Tensor {
  values: Float32Array;
  dims: number[];
}

export function encodeTensor(values: ArrayLike<number>, dims: number[]): Buffer {
  if (dims.length !== 1 && dims.length !== 2) {
    throw new TensorFormatError(`only 1-D and 2-D tensors are supported, got ${dims.length}-D`);
  }
  const count = dims.reduce((a, b) => a * b, 1);
  if (count !== values.length) {
    throw new TensorFormatError(`dims [${dims}] require ${count} values, got ${values.length}`);
  }
  const buf = Buffer.alloc(8 + 4 * dims.length + 4 * count);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt16LE(VERSION, 4);
  buf.writeUInt8(DTYPE_F32, 6);
  buf.writeUInt8(dims.length, 7);
  dims.forEach((d, i) => buf.writeUInt32LE(d, 8 + 4 * i));
  const payloadOffset = 8 + 4 * dims.length;
  for (let i = 0; i < count; i++) {
    buf.writeFloatLE(values[i], payloadOffset + 4 * i);
  }
  return buf;
}

export function decodeTensor(buf: Buffer): Tensor {
  if (buf.length < 8 || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new BadMagicError("not a tensor file (bad magic)");
  }
  const version = buf.readUInt16LE(4);
  if (version !== VERSION) {
    throw new UnsupportedVersionError(`version ${version} not supported`);
  }
  const dtype = buf.readUInt8(6);
  if (dtype !== DTYPE_F32) {
    throw new UnsupportedDtypeError(`dtype code ${dtype} not supported`);
  }
  const ndim = buf.readUInt8(7);
  if (ndim !== 1 && ndim !== 2) {
    throw new TensorFormatError(`ndim ${ndim} not supported`);
  }
  if (buf.length < 8 + 4 * ndim) {
    throw new TruncatedPayloadError("header truncated");
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(buf.readUInt32LE(8 + 4 * i));
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const payloadOffset = 8 + 4 * ndim;
  if (buf.length !== payloadOffset + 4 * count) {
    throw new TruncatedPayloadError(
      `payload is ${buf.length - payloadOffset} bytes, dims [${dims}] require ${4 * count}`,
    );
  }
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = buf.readFloatLE(payloadOffset + 4 * i);
  }
  return { values, dims };
}

export async function writeTensor(
  path: string,
  values: ArrayLike<number>,
  dims: number[],
): Promise<void> {
  await writeFile(path, encodeTensor(values, dims));
}

export async function readTensor(path: string): Promise<Tensor> {
  return decodeTensor(await readFile(path));
}
