/**
 * Adapter parity: tensors exported from this TensorFlow.js re-implementation
 * of the reference network, fed through the toolkit's `explain` command,
 * must reproduce the toolkit's native heatmaps within 1e-4.
 */

import assert from 'node:assert/strict';
import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { test } from 'node:test';

import { readNpy, writeNpy } from '../src/npy';
import { readGrayPng } from '../src/png';
import {
  disposeRefNet,
  loadRefNet,
  nhwcToStack,
  refnetFeatureGradients,
  refnetFeatures,
  refnetScores,
} from '../src/refnet';
import { explain } from '../src/primary';

interface ListingEntry {
  image: string;
  target_class: number;
  scores: number[];
  features: string;
  gradients: string;
  gradcam: string;
  hirescam: string;
}

const fixtures = fs.mkdtempSync(path.join(os.tmpdir(), 'parity-fixtures-'));
execFileSync('python3', [path.join(__dirname, '..', '..', 'scripts', 'gen_parity_fixtures.py'), fixtures], {
  cwd: path.join(__dirname, '..', '..'),
});

function maxAbsDiff(a: Float32Array, b: Float32Array): number {
  assert.equal(a.length, b.length);
  let worst = 0;
  for (let i = 0; i < a.length; i++) worst = Math.max(worst, Math.abs(a[i] - b[i]));
  return worst;
}

for (const headKind of ['gap-linear', 'flatten-linear'] as const) {
  test(`re-implemented refnet (${headKind}) reproduces native heatmaps within 1e-4`, () => {
    const dir = path.join(fixtures, headKind);
    const listing = JSON.parse(fs.readFileSync(path.join(dir, 'listing.json'), 'utf-8')) as ListingEntry[];
    const net = loadRefNet(path.join(dir, 'weights'));
    const work = fs.mkdtempSync(path.join(os.tmpdir(), `parity-${headKind}-`));
    try {
      for (const entry of listing) {
        const img = readGrayPng(path.join(dir, entry.image));
        const feats = refnetFeatures(net, img);

        // framework forward agrees with the native implementation
        const scores = refnetScores(net, feats);
        const scoreDiff = entry.scores
          .map((s, i) => Math.abs(s - scores.dataSync()[i]))
          .reduce((a, b) => Math.max(a, b), 0);
        scores.dispose();
        assert.ok(scoreDiff < 1e-3, `scores drifted by ${scoreDiff}`);
        const nativeFeats = readNpy(path.join(dir, entry.features), 3);
        const featStack = nhwcToStack(feats);
        assert.ok(maxAbsDiff(featStack.data, nativeFeats.data) < 1e-4, 'features drifted');

        // export tensors through the interchange format
        const grads = refnetFeatureGradients(net, feats, entry.target_class);
        const gradStack = nhwcToStack(grads);
        const nativeGrads = readNpy(path.join(dir, entry.gradients), 3);
        assert.ok(maxAbsDiff(gradStack.data, nativeGrads.data) < 1e-5, 'gradients drifted');
        const featsPath = path.join(work, `${entry.image}.features.npy`);
        const gradsPath = path.join(work, `${entry.image}.gradients.npy`);
        writeNpy(featsPath, featStack.shape, featStack.data);
        writeNpy(gradsPath, gradStack.shape, gradStack.data);
        feats.dispose();
        grads.dispose();

        // toolkit CAM engine on exported tensors vs native heatmaps
        for (const method of ['gradcam', 'hirescam'] as const) {
          const out = path.join(work, `${entry.image}.${method}.npy`);
          explain(method, featsPath, gradsPath, out);
          const native = readNpy(path.join(dir, entry[method]), 2);
          const produced = readNpy(out, 2);
          const diff = maxAbsDiff(native.data, produced.data);
          assert.ok(diff < 1e-4, `${method} heatmap drifted by ${diff}`);
        }
      }
    } finally {
      disposeRefNet(net);
      fs.rmSync(work, { recursive: true, force: true });
    }
  });
}
