/**
 * NPY v1.0 interchange files (little-endian float32, C order) — the tensor
 * format shared with the Python toolkit. Feature/gradient stacks are rank 3
 * (F, D1, D2); heatmaps are rank 2.
 */

import * as fs from 'fs';

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export interface NpyArray {
  shape: number[];
  data: Float32Array;
}

export function writeNpy(path: string, shape: number[], data: Float32Array): void {
  const count = shape.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`shape ${JSON.stringify(shape)} does not match ${data.length} values`);
  }
  const shapeText = shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(', ')})`;
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const base = MAGIC.length + 2 + 2;
  const pad = (64 - ((base + header.length + 1) % 64)) % 64;
  header = header + ' '.repeat(pad) + '\n';

  const headerBuf = Buffer.from(header, 'latin1');
  const lenBuf = Buffer.alloc(2);
  lenBuf.writeUInt16LE(headerBuf.length, 0);
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  fs.writeFileSync(path, Buffer.concat([MAGIC, Buffer.from([1, 0]), lenBuf, headerBuf, payload]));
}

export function readNpy(path: string, expectedRank?: number): NpyArray {
  const raw = fs.readFileSync(path);
  if (raw.length < MAGIC.length || !raw.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error(`bad magic: ${path} is not an NPY file`);
  }
  if (raw[6] !== 1 || raw[7] !== 0) {
    throw new Error(`unsupported NPY version ${raw[6]}.${raw[7]}: expected 1.0`);
  }
  const hlen = raw.readUInt16LE(8);
  const header = raw.subarray(10, 10 + hlen).toString('latin1');
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (descr === undefined || fortran === undefined || shapeText === undefined) {
    throw new Error(`malformed NPY header in ${path}`);
  }
  if (descr !== '<f4') {
    throw new Error(`wrong dtype: expected little-endian float32 ('<f4'), got '${descr}'`);
  }
  if (fortran === 'True') {
    throw new Error('fortran order not supported: expected C-order data');
  }
  const shape = shapeText
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  if (expectedRank !== undefined && shape.length !== expectedRank) {
    throw new Error(`wrong rank: expected ${expectedRank}, got ${shape.length}`);
  }
  const count = shape.reduce((a, b) => a * b, 1);
  const start = 10 + hlen;
  if (raw.length < start + count * 4) {
    throw new Error(`truncated payload: expected ${count * 4} data bytes, got ${raw.length - start}`);
  }
  // copy so the Float32Array is aligned and independent of the file buffer
  const payload = Buffer.alloc(count * 4);
  raw.copy(payload, 0, start, start + count * 4);
  return { shape, data: new Float32Array(payload.buffer, 0, count) };
}
