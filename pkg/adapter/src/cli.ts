#!/usr/bin/env node
/**
 * Adapter CLI.
 *
 *   malvis-adapter export-tensors --arch refnet --weights DIR --manifest FILE --out DIR
 *                                 [--policy predicted|true-label] [--split train|val|test|all]
 *   malvis-adapter train-vit --manifest FILE --out METRICS_JSON
 *                            [--masked-manifest FILE] [--epochs N] [--batch N] [--lr X]
 *                            [--seed N] [--patch N] [--embed N] [--blocks N] [--heads N] [--mlp N]
 *
 * Exit codes: 0 success, 1 usage error, 2 data/runtime error.
 */

import * as fs from 'fs';
import * as path from 'path';

import { ARCHITECTURES, Architecture, TargetClassPolicy, resolveConfig } from './config';
import { exportTensors, HookedModel } from './export';
import { ManifestEntry, readManifest } from './manifest';
import * as primary from './primary';
import { loadSmallCnn } from './cnn';
import {
  disposeRefNet,
  loadRefNet,
  refnetFeatureGradients,
  refnetFeatures,
  refnetScores,
} from './refnet';
import { createVit, trainVit, vitPredict } from './vit';
import { labelIndexOf } from './pipeline';

class UsageError extends Error {}

function parseFlags(argv: string[], spec: Record<string, 'string' | 'number'>): Record<string, string | number> {
  const out: Record<string, string | number> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) throw new UsageError(`unexpected argument: ${arg}`);
    const name = arg.slice(2);
    if (!(name in spec)) throw new UsageError(`unknown flag: ${arg}`);
    const value = argv[++i];
    if (value === undefined) throw new UsageError(`flag ${arg} needs a value`);
    out[name] = spec[name] === 'number' ? Number(value) : value;
    if (spec[name] === 'number' && !Number.isFinite(out[name])) {
      throw new UsageError(`flag ${arg} needs a numeric value, got ${value}`);
    }
  }
  return out;
}

function requireFlag<T>(flags: Record<string, T>, name: string): T {
  if (!(name in flags)) throw new UsageError(`missing required flag --${name}`);
  return flags[name];
}

function entriesForSplit(entries: ManifestEntry[], split: string): ManifestEntry[] {
  if (split === 'all') return entries;
  return entries.filter((e) => e.split === split);
}

function hookedModel(arch: Architecture, weightsPath: string): { model: HookedModel; dispose: () => void } {
  if (arch === 'refnet') {
    const net = loadRefNet(weightsPath);
    return {
      model: {
        features: (img) => refnetFeatures(net, img),
        scores: (f) => refnetScores(net, f),
        featureGradients: (f, m) => refnetFeatureGradients(net, f, m),
        classCount: net.descriptor.class_count,
      },
      dispose: () => disposeRefNet(net),
    };
  }
  if (arch === 'smallcnn') {
    const model = loadSmallCnn(weightsPath);
    return { model, dispose: () => undefined };
  }
  const known = Object.keys(ARCHITECTURES).join(', ');
  throw new Error(
    `architecture ${arch} has no loadable weights in this environment (configured: ${known}); ` +
      'use refnet or smallcnn, or point at an exported weights directory',
  );
}

function cmdExportTensors(argv: string[]): number {
  const flags = parseFlags(argv, {
    arch: 'string',
    weights: 'string',
    manifest: 'string',
    out: 'string',
    policy: 'string',
    split: 'string',
  });
  const arch = requireFlag(flags, 'arch') as Architecture;
  const config = resolveConfig({
    architecture: arch,
    weightsPath: String(requireFlag(flags, 'weights')),
    classCount: 0,
  });
  const manifestPath = String(requireFlag(flags, 'manifest'));
  const outDir = String(requireFlag(flags, 'out'));
  const policy = (flags.policy ?? 'predicted') as TargetClassPolicy;
  if (policy !== 'predicted' && policy !== 'true-label') {
    throw new UsageError(`--policy must be predicted or true-label, got ${policy}`);
  }
  const split = String(flags.split ?? 'all');

  const entries = entriesForSplit(readManifest(manifestPath), split);
  const { model, dispose } = hookedModel(arch, config.weightsPath);
  try {
    const result = exportTensors(model, entries, policy, path.dirname(manifestPath), outDir);
    console.log(`exported ${result.count} samples to ${outDir}`);
  } finally {
    dispose();
  }
  return 0;
}

function cmdTrainVit(argv: string[]): number {
  const flags = parseFlags(argv, {
    manifest: 'string',
    out: 'string',
    epochs: 'number',
    batch: 'number',
    lr: 'number',
    seed: 'number',
    patch: 'number',
    embed: 'number',
    blocks: 'number',
    heads: 'number',
    mlp: 'number',
    'input-size': 'number',
  });
  const manifestPath = String(requireFlag(flags, 'manifest'));
  const outPath = String(requireFlag(flags, 'out'));
  const entries = readManifest(manifestPath);
  const baseDir = path.dirname(manifestPath);
  const train = entries.filter((e) => e.split === 'train' || e.split === 'val');
  const test = entries.filter((e) => e.split === 'test');
  if (train.length === 0) throw new Error('empty train split');
  if (test.length === 0) throw new Error('empty test split');

  const labelIndex = labelIndexOf(entries);
  const model = createVit({
    inputSize: Number(flags['input-size'] ?? 32),
    patchSize: Number(flags.patch ?? 8),
    embedDim: Number(flags.embed ?? 32),
    blocks: Number(flags.blocks ?? 2),
    heads: Number(flags.heads ?? 2),
    mlpDim: Number(flags.mlp ?? 64),
    classCount: labelIndex.size,
    seed: Number(flags.seed ?? 42),
  });
  const loss = trainVit(model, train, baseDir, labelIndex, {
    epochs: Number(flags.epochs ?? 30),
    batchSize: Number(flags.batch ?? 16),
    learningRate: Number(flags.lr ?? 3e-3),
  });

  const inverse = [...labelIndex.entries()].sort((a, b) => a[1] - b[1]).map(([l]) => l);
  const preds = vitPredict(model, test, baseDir, labelIndex).map((i) => inverse[i]);
  const workDir = fs.mkdtempSync(path.join(path.dirname(outPath) || '.', '.vit-eval-'));
  try {
    const metrics = primary.evalPredictions(test.map((e) => e.id), test.map((e) => e.label), preds, workDir);
    fs.writeFileSync(outPath, JSON.stringify(metrics) + '\n');
    console.log(`final loss ${loss.toFixed(4)}; test metrics written to ${outPath}`);
    console.log(JSON.stringify(metrics));
  } finally {
    fs.rmSync(workDir, { recursive: true, force: true });
  }
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case 'export-tensors':
        return cmdExportTensors(rest);
      case 'train-vit':
        return cmdTrainVit(rest);
      default:
        console.error('usage: malvis-adapter <export-tensors|train-vit> [flags]');
        return 1;
    }
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`malvis-adapter: usage error: ${err.message}`);
      return 1;
    }
    console.error(`malvis-adapter: error: ${(err as Error).message}`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
