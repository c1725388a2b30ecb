/**
 * Heatmap-guided masking, end to end: train two small CNNs, export their
 * feature/gradient stacks, have the toolkit turn those into per-sample
 * heatmaps and per-class cumulative heatmaps, fuse each class's two
 * cumulative maps into a keep/conceal mask, and emit the masked dataset.
 */

import * as fs from 'fs';
import * as path from 'path';

import { createSmallCnn, trainSmallCnn, SmallCnn } from './cnn';
import { exportTensors } from './export';
import { ManifestEntry } from './manifest';
import * as primary from './primary';

export interface MaskPipelineOptions {
  inputSize: number;
  method: 'gradcam' | 'hirescam';
  threshold?: number;
  seeds: [number, number];
  epochs: number;
  batchSize: number;
  learningRate: number;
}

export function labelIndexOf(entries: ManifestEntry[]): Map<string, number> {
  return new Map([...new Set(entries.map((e) => e.label))].sort().map((l, i) => [l, i]));
}

/** Train one CNN and produce per-class cumulative heatmaps under workDir/<name>. */
export function cumulativeHeatmapsFor(
  model: SmallCnn,
  name: string,
  trainEntries: ManifestEntry[],
  baseDir: string,
  workDir: string,
  method: 'gradcam' | 'hirescam',
  labelIndex: Map<string, number>,
): string {
  const exportDir = path.join(workDir, `${name}_tensors`);
  const heatmapDir = path.join(workDir, `${name}_heatmaps`);
  const modelDir = path.join(workDir, name);
  fs.mkdirSync(heatmapDir, { recursive: true });
  fs.mkdirSync(modelDir, { recursive: true });

  const { index } = exportTensors(model, trainEntries, 'true-label', baseDir, exportDir, labelIndex);

  const byClass = new Map<string, string[]>();
  for (const [id, entry] of Object.entries(index)) {
    const hm = path.join(heatmapDir, `${id.replace(/[^A-Za-z0-9._-]/g, '_')}.npy`);
    primary.explain(method, path.join(exportDir, entry.features), path.join(exportDir, entry.gradients), hm);
    const maps = byClass.get(entry.label) ?? [];
    maps.push(hm);
    byClass.set(entry.label, maps);
  }
  for (const [label, maps] of byClass) {
    primary.aggregate(maps, label, path.join(modelDir, `${label}.npy`));
  }
  return modelDir;
}

/** Full mask-generation pipeline; returns the masks directory. */
export function buildMasks(
  trainEntries: ManifestEntry[],
  baseDir: string,
  workDir: string,
  options: MaskPipelineOptions,
): string {
  const labelIndex = labelIndexOf(trainEntries);
  const modelDirs: string[] = [];
  options.seeds.forEach((seed, i) => {
    const model = createSmallCnn(seed, options.inputSize, labelIndex.size);
    trainSmallCnn(model, trainEntries, baseDir, labelIndex, {
      epochs: options.epochs,
      batchSize: options.batchSize,
      learningRate: options.learningRate,
      seed,
    });
    modelDirs.push(
      cumulativeHeatmapsFor(model, `cnn${i}`, trainEntries, baseDir, workDir, options.method, labelIndex),
    );
  });

  const masksDir = path.join(workDir, 'masks');
  fs.mkdirSync(masksDir, { recursive: true });
  for (const label of labelIndex.keys()) {
    primary.fuseMask(
      path.join(modelDirs[0], `${label}.npy`),
      path.join(modelDirs[1], `${label}.npy`),
      path.join(masksDir, `${label}.png`),
      {
        threshold: options.threshold,
        label,
        upsample: [options.inputSize, options.inputSize],
        sourceModels: ['cnn0', 'cnn1'],
      },
    );
  }
  return masksDir;
}
