/**
 * Per-sample tensor export: for every manifest sample, run the hooked model,
 * pick the gradient target class by policy (predicted score or true label),
 * and write `<id>_features.npy` / `<id>_gradients.npy` stacks plus an
 * `index.json` mapping sample id -> files. Inference only: model weights are
 * untouched. Files are written to a temp name and renamed into place.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { ManifestEntry } from './manifest';
import { writeNpy } from './npy';
import { readGrayPng } from './png';
import { TargetClassPolicy } from './config';
import { nhwcToStack } from './refnet';

export interface HookedModel {
  /** image -> NHWC [1, D, D, F] activations of the hooked layer */
  features(img: { width: number; height: number; pixels: Uint8Array }): tf.Tensor4D;
  /** NHWC activations -> class scores */
  scores(features: tf.Tensor4D): tf.Tensor1D;
  /** dScore_m/dActivations, NHWC */
  featureGradients(features: tf.Tensor4D, classIndex: number): tf.Tensor4D;
  classCount: number;
}

export interface ExportIndexEntry {
  features: string;
  gradients: string;
  label: string;
  targetClass: number;
}

export interface ExportResult {
  count: number;
  index: Record<string, ExportIndexEntry>;
}

function writeStackAtomic(outPath: string, stack: { shape: number[]; data: Float32Array }): void {
  const tmp = `${outPath}.tmp`;
  writeNpy(tmp, stack.shape, stack.data);
  fs.renameSync(tmp, outPath);
}

export function exportTensors(
  model: HookedModel,
  entries: ManifestEntry[],
  policy: TargetClassPolicy,
  baseDir: string,
  outDir: string,
  labelIndex?: Map<string, number>,
): ExportResult {
  fs.mkdirSync(outDir, { recursive: true });
  const labels = labelIndex ?? new Map([...new Set(entries.map((e) => e.label))].sort().map((l, i) => [l, i]));
  const index: Record<string, ExportIndexEntry> = {};

  for (const entry of entries) {
    const img = readGrayPng(path.join(baseDir, entry.path));
    const feats = model.features(img);
    let target: number;
    if (policy === 'true-label') {
      const idx = labels.get(entry.label);
      if (idx === undefined) throw new Error(`label ${entry.label} missing from label index`);
      target = idx;
    } else {
      const scores = model.scores(feats);
      target = scores.argMax().dataSync()[0];
      scores.dispose();
    }
    const grads = model.featureGradients(feats, target);

    const safeId = entry.id.replace(/[^A-Za-z0-9._-]/g, '_');
    const featsFile = `${safeId}_features.npy`;
    const gradsFile = `${safeId}_gradients.npy`;
    writeStackAtomic(path.join(outDir, featsFile), nhwcToStack(feats));
    writeStackAtomic(path.join(outDir, gradsFile), nhwcToStack(grads));
    feats.dispose();
    grads.dispose();
    index[entry.id] = { features: featsFile, gradients: gradsFile, label: entry.label, targetClass: target };
  }

  const tmp = path.join(outDir, 'index.json.tmp');
  fs.writeFileSync(tmp, JSON.stringify(index, null, 2) + '\n');
  fs.renameSync(tmp, path.join(outDir, 'index.json'));
  return { count: entries.length, index };
}
