/**
 * ViT masking experiments on the synthetic dataset: heatmap-guided masks
 * must not hurt the classifier (direction of effect: masked F1 >= unmasked
 * F1), training must be reproducible from a seed, and degenerate inputs
 * must fail cleanly. Everything downstream of the exported tensors flows
 * through the toolkit CLI (explain/aggregate/fuse-mask/mask-dataset/eval).
 */

import assert from 'node:assert/strict';
import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { test } from 'node:test';

import { main as cliMain } from '../src/cli';
import { readManifest, writeManifest } from '../src/manifest';
import { readGrayPng } from '../src/png';
import { buildMasks } from '../src/pipeline';
import { maskDataset } from '../src/primary';

const root = fs.mkdtempSync(path.join(os.tmpdir(), 'vit-test-'));
const imagesDir = path.join(root, 'images');
execFileSync('python3', [path.join(__dirname, '..', '..', 'scripts', 'gen_vit_dataset.py'), root]);

const manifestPath = path.join(imagesDir, 'manifest.jsonl');
const entries = readManifest(manifestPath);
const trainEntries = entries.filter((e) => e.split !== 'test');

// signal band rows per family, mirroring the dataset generator
const BANDS: Record<string, [number, number]> = { famA: [2, 12], famB: [12, 22], famC: [22, 32] };

const workDir = path.join(root, 'work');
fs.mkdirSync(workDir);
const masksDir = buildMasks(trainEntries, imagesDir, workDir, {
  inputSize: 32,
  method: 'hirescam',
  seeds: [5, 6],
  epochs: 30,
  batchSize: 16,
  learningRate: 0.01,
});
const maskedDir = path.join(root, 'masked');
maskDataset(manifestPath, masksDir, maskedDir);

function trainViaCli(dir: string, out: string, seed = 42): { f1: number } {
  const status = cliMain([
    'train-vit',
    '--manifest', path.join(dir, 'manifest.jsonl'),
    '--out', out,
    '--epochs', '6',
    '--batch', '16',
    '--lr', '0.003',
    '--seed', String(seed),
  ]);
  assert.equal(status, 0);
  return JSON.parse(fs.readFileSync(out, 'utf-8'));
}

test('heatmap-guided masks keep the discriminative band and drop most noise', () => {
  for (const [fam, [first, last]] of Object.entries(BANDS)) {
    const mask = readGrayPng(path.join(masksDir, `${fam}.png`));
    let keptBand = 0;
    let keptOutside = 0;
    for (let r = 0; r < 32; r++) {
      for (let c = 0; c < 32; c++) {
        const bit = mask.pixels[r * 32 + c] > 0 ? 1 : 0;
        if (r >= first && r < last) keptBand += bit;
        else keptOutside += bit;
      }
    }
    const bandFraction = keptBand / ((last - first) * 32);
    const outsideFraction = keptOutside / ((32 - (last - first)) * 32);
    assert.ok(bandFraction > 0.9, `${fam}: only ${bandFraction} of the signal band kept`);
    assert.ok(outsideFraction < 0.5, `${fam}: ${outsideFraction} of the noise kept`);
  }
});

test('direction of effect: ViT F1 on the masked dataset >= unmasked F1', () => {
  const plain = trainViaCli(imagesDir, path.join(root, 'metrics_plain.json'));
  const masked = trainViaCli(maskedDir, path.join(root, 'metrics_masked.json'));
  assert.ok(
    masked.f1 >= plain.f1,
    `masking hurt the classifier: masked F1 ${masked.f1} < unmasked F1 ${plain.f1}`,
  );
});

test('training twice with one seed produces identical metrics', () => {
  const a = path.join(root, 'det_a.json');
  const b = path.join(root, 'det_b.json');
  trainViaCli(maskedDir, a, 7);
  trainViaCli(maskedDir, b, 7);
  assert.equal(fs.readFileSync(a, 'utf-8'), fs.readFileSync(b, 'utf-8'));
});

test('an empty train split fails without partial artifacts', () => {
  const testOnly = entries.filter((e) => e.split === 'test');
  const brokenDir = path.join(root, 'broken');
  fs.mkdirSync(brokenDir, { recursive: true });
  writeManifest(path.join(brokenDir, 'manifest.jsonl'), testOnly);
  const out = path.join(brokenDir, 'metrics.json');
  const status = cliMain(['train-vit', '--manifest', path.join(brokenDir, 'manifest.jsonl'), '--out', out]);
  assert.equal(status, 2);
  assert.ok(!fs.existsSync(out), 'no metrics file may be written on failure');
});
