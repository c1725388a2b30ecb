/**
 * A small trainable CNN with the same trunk shape as the reference network
 * (conv3x3 1->4 + pool, conv3x3 4->8 + pool, global-average head). It is the
 * desk-scale stand-in for the fine-tuned backbones: train it on a dataset,
 * hook its last pooled conv layer, and export feature/gradient stacks for
 * the toolkit's CAM engine.
 *
 * Everything is deterministic: weights come from SplitMix64, batches from a
 * seeded shuffle, and the single-threaded CPU backend keeps arithmetic
 * reproducible run to run.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { HookedModel } from './export';
import { ManifestEntry } from './manifest';
import { readNpy, writeNpy } from './npy';
import { GrayImage, readGrayPng } from './png';
import { SplitMix64 } from './rng';

export interface SmallCnn extends HookedModel {
  inputSize: number;
  classCount: number;
  vars: {
    conv1K: tf.Variable<tf.Rank.R4>;
    conv1B: tf.Variable<tf.Rank.R1>;
    conv2K: tf.Variable<tf.Rank.R4>;
    conv2B: tf.Variable<tf.Rank.R1>;
    headW: tf.Variable<tf.Rank.R2>; // [M, 8]
    headB: tf.Variable<tf.Rank.R1>;
  };
}

function variable4d(rng: SplitMix64, shape: [number, number, number, number], scale: number) {
  const n = shape.reduce((a, b) => a * b, 1);
  return tf.variable(tf.tensor4d(rng.fill(n, -scale, scale), shape));
}

export function createSmallCnn(seed: number, inputSize: number, classCount: number): SmallCnn {
  const rng = new SplitMix64(seed);
  const vars = {
    conv1K: variable4d(rng, [3, 3, 1, 4], 0.3),
    conv1B: tf.variable(tf.tensor1d(rng.fill(4, -0.05, 0.05))),
    conv2K: variable4d(rng, [3, 3, 4, 8], 0.3),
    conv2B: tf.variable(tf.tensor1d(rng.fill(8, -0.05, 0.05))),
    headW: tf.variable(tf.tensor2d(rng.fill(classCount * 8, -0.3, 0.3), [classCount, 8])),
    headB: tf.variable(tf.tensor1d(rng.fill(classCount, -0.05, 0.05))),
  };

  const featuresOf = (x: tf.Tensor4D): tf.Tensor4D =>
    tf.tidy(() => {
      let h = tf.relu(tf.add(tf.conv2d(x, vars.conv1K as tf.Tensor4D, 1, 'same'), vars.conv1B));
      h = tf.maxPool(h as tf.Tensor4D, 2, 2, 'valid');
      h = tf.relu(tf.add(tf.conv2d(h as tf.Tensor4D, vars.conv2K as tf.Tensor4D, 1, 'same'), vars.conv2B));
      return tf.maxPool(h as tf.Tensor4D, 2, 2, 'valid');
    });

  const scoresOf = (feats: tf.Tensor4D): tf.Tensor2D =>
    tf.tidy(() => {
      const pooled = tf.mean(feats, [1, 2]) as tf.Tensor2D; // [B, 8]
      return tf.add(tf.matMul(pooled, vars.headW as tf.Tensor2D, false, true), vars.headB) as tf.Tensor2D;
    });

  const model: SmallCnn = {
    inputSize,
    classCount,
    vars,
    features(img: GrayImage): tf.Tensor4D {
      if (img.width !== inputSize || img.height !== inputSize) {
        throw new Error(`wrong input size: expected ${inputSize}x${inputSize}, got ${img.width}x${img.height}`);
      }
      return tf.tidy(() => {
        const x = tf
          .tensor4d(Float32Array.from(img.pixels), [1, inputSize, inputSize, 1])
          .div(255) as tf.Tensor4D;
        return featuresOf(x);
      });
    },
    scores(feats: tf.Tensor4D): tf.Tensor1D {
      return tf.tidy(() => scoresOf(feats).squeeze([0]) as tf.Tensor1D);
    },
    featureGradients(feats: tf.Tensor4D, classIndex: number): tf.Tensor4D {
      const scoreOf = (f: tf.Tensor) =>
        scoresOf(f as tf.Tensor4D).squeeze([0]).gather([classIndex]).squeeze() as tf.Scalar;
      return tf.tidy(() => tf.grad(scoreOf)(feats) as tf.Tensor4D);
    },
  };
  (model as SmallCnn & { __forward: (x: tf.Tensor4D) => tf.Tensor2D }).__forward = (x) =>
    scoresOf(featuresOf(x));
  return model;
}

function forwardBatch(model: SmallCnn, x: tf.Tensor4D): tf.Tensor2D {
  return (model as SmallCnn & { __forward: (x: tf.Tensor4D) => tf.Tensor2D }).__forward(x);
}

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
}

export function loadBatch(
  entries: ManifestEntry[],
  baseDir: string,
  inputSize: number,
  labelIndex: Map<string, number>,
): { x: tf.Tensor4D; y: tf.Tensor1D } {
  const n = entries.length;
  const xs = new Float32Array(n * inputSize * inputSize);
  const ys = new Int32Array(n);
  entries.forEach((e, i) => {
    const img = readGrayPng(path.join(baseDir, e.path));
    if (img.width !== inputSize || img.height !== inputSize) {
      throw new Error(`sample ${e.id}: expected ${inputSize}x${inputSize}, got ${img.width}x${img.height}`);
    }
    for (let p = 0; p < img.pixels.length; p++) xs[i * img.pixels.length + p] = img.pixels[p] / 255;
    const label = labelIndex.get(e.label);
    if (label === undefined) throw new Error(`unknown label ${e.label}`);
    ys[i] = label;
  });
  return {
    x: tf.tensor4d(xs, [n, inputSize, inputSize, 1]),
    y: tf.tensor1d(ys, 'int32'),
  };
}

export function trainSmallCnn(
  model: SmallCnn,
  entries: ManifestEntry[],
  baseDir: string,
  labelIndex: Map<string, number>,
  options: TrainOptions,
): number {
  const optimizer = tf.train.adam(options.learningRate);
  const rng = new SplitMix64(options.seed);
  const data = loadBatch(entries, baseDir, model.inputSize, labelIndex);
  let lastLoss = NaN;
  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = rng.shuffle(entries.map((_, i) => i));
    for (let start = 0; start < order.length; start += options.batchSize) {
      const idx = tf.tensor1d(order.slice(start, start + options.batchSize), 'int32');
      const x = tf.gather(data.x, idx);
      const y = tf.gather(data.y, idx);
      const loss = optimizer.minimize(
        () => {
          const logits = forwardBatch(model, x as tf.Tensor4D);
          return tf.losses.softmaxCrossEntropy(tf.oneHot(y as tf.Tensor1D, model.classCount), logits) as tf.Scalar;
        },
        true,
      ) as tf.Scalar;
      lastLoss = loss.dataSync()[0];
      loss.dispose();
      x.dispose();
      y.dispose();
      idx.dispose();
    }
  }
  data.x.dispose();
  data.y.dispose();
  optimizer.dispose();
  return lastLoss;
}

export function predict(model: SmallCnn, entries: ManifestEntry[], baseDir: string,
                        labelIndex: Map<string, number>): number[] {
  const { x, y } = loadBatch(entries, baseDir, model.inputSize, labelIndex);
  const preds = tf.tidy(() => forwardBatch(model, x).argMax(1));
  const out = Array.from(preds.dataSync());
  preds.dispose();
  x.dispose();
  y.dispose();
  return out;
}

export function saveSmallCnn(model: SmallCnn, dir: string): void {
  fs.mkdirSync(dir, { recursive: true });
  const dump = (name: string, v: tf.Variable) => {
    writeNpy(path.join(dir, `${name}.npy`), v.shape.slice(), v.dataSync() as Float32Array);
  };
  dump('conv1_k', model.vars.conv1K);
  dump('conv1_b', model.vars.conv1B);
  dump('conv2_k', model.vars.conv2K);
  dump('conv2_b', model.vars.conv2B);
  dump('head_w', model.vars.headW);
  dump('head_b', model.vars.headB);
  fs.writeFileSync(
    path.join(dir, 'smallcnn.json'),
    JSON.stringify({ input_size: model.inputSize, class_count: model.classCount }, null, 2) + '\n',
  );
}

export function loadSmallCnn(dir: string): SmallCnn {
  const desc = JSON.parse(fs.readFileSync(path.join(dir, 'smallcnn.json'), 'utf-8'));
  const model = createSmallCnn(0, desc.input_size, desc.class_count);
  const assign = (name: string, v: tf.Variable) => {
    const arr = readNpy(path.join(dir, `${name}.npy`));
    v.assign(tf.tensor(arr.data, arr.shape));
  };
  assign('conv1_k', model.vars.conv1K);
  assign('conv1_b', model.vars.conv1B);
  assign('conv2_k', model.vars.conv2K);
  assign('conv2_b', model.vars.conv2B);
  assign('head_w', model.vars.headW);
  assign('head_b', model.vars.headB);
  return model;
}
