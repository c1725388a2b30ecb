/**
 * Thin wrappers around the Python toolkit's CLI. The adapter and the
 * toolkit communicate exclusively through files (NPY tensors, JSONL
 * manifests, CSV labels, PNG images); these helpers just spawn the
 * commands that transform them.
 */

import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as path from 'path';

export interface Metrics {
  accuracy: number;
  precision: number;
  recall: number;
  f1: number;
}

const PYTHON = process.env.MALVIS_PYTHON ?? 'python3';

export function runPrimary(args: string[], check = true): { status: number; stdout: string; stderr: string } {
  try {
    const stdout = execFileSync(PYTHON, ['-m', 'malvis', ...args], { encoding: 'utf-8' });
    return { status: 0, stdout, stderr: '' };
  } catch (err) {
    const e = err as { status?: number; stdout?: string; stderr?: string };
    if (check) {
      throw new Error(`malvis ${args.join(' ')} failed (${e.status}): ${e.stderr ?? ''}`);
    }
    return { status: e.status ?? 1, stdout: e.stdout ?? '', stderr: e.stderr ?? '' };
  }
}

export function explain(method: 'gradcam' | 'hirescam', features: string, gradients: string, out: string): void {
  runPrimary(['explain', '--method', method, features, gradients, '-o', out]);
}

export function aggregate(heatmaps: string[], label: string, out: string): void {
  runPrimary(['aggregate', ...heatmaps, '--label', label, '-o', out]);
}

export function fuseMask(
  heatmapA: string,
  heatmapB: string,
  out: string,
  options: { threshold?: number; label?: string; upsample?: [number, number]; sourceModels?: string[] } = {},
): void {
  const args = ['fuse-mask', heatmapA, heatmapB, '-o', out];
  if (options.threshold !== undefined) args.push('--threshold', String(options.threshold));
  if (options.label) args.push('--label', options.label);
  if (options.upsample) args.push('--upsample', `${options.upsample[0]}x${options.upsample[1]}`);
  if (options.sourceModels) args.push('--source-models', options.sourceModels.join(','));
  runPrimary(args);
}

export function maskDataset(manifest: string, masksDir: string, outDir: string): void {
  runPrimary(['mask-dataset', manifest, masksDir, '-o', outDir]);
}

/** Score id->label predictions against ground truth via `malvis eval`. */
export function evalPredictions(
  ids: string[],
  truth: string[],
  preds: string[],
  workDir: string,
): Metrics {
  const csv = (labels: string[]) => 'id,label\n' + ids.map((id, i) => `${id},${labels[i]}`).join('\n') + '\n';
  const labelsPath = path.join(workDir, 'labels.csv');
  const predsPath = path.join(workDir, 'preds.csv');
  const metricsPath = path.join(workDir, 'metrics.json');
  fs.writeFileSync(labelsPath, csv(truth));
  fs.writeFileSync(predsPath, csv(preds));
  runPrimary(['eval', labelsPath, predsPath, '-o', metricsPath]);
  return JSON.parse(fs.readFileSync(metricsPath, 'utf-8')) as Metrics;
}
