/**
 * A scaled-down Vision Transformer trained from scratch: non-overlapping
 * patches, linear projection plus learned positional embeddings, a couple of
 * pre-norm transformer blocks (multi-head self-attention + MLP), mean
 * pooling over tokens and a linear classifier head.
 *
 * Built directly on core ops with explicit variables so initialization,
 * shuffling and therefore whole training runs are reproducible from a seed.
 */

import * as tf from '@tensorflow/tfjs';

import { loadBatch } from './cnn';
import { ManifestEntry } from './manifest';
import { SplitMix64 } from './rng';

export interface VitHyperparameters {
  inputSize: number;
  patchSize: number;
  embedDim: number;
  blocks: number;
  heads: number;
  mlpDim: number;
  classCount: number;
  seed: number;
}

interface BlockVars {
  ln1Gamma: tf.Variable;
  ln1Beta: tf.Variable;
  wq: tf.Variable;
  wk: tf.Variable;
  wv: tf.Variable;
  wo: tf.Variable;
  ln2Gamma: tf.Variable;
  ln2Beta: tf.Variable;
  mlpW1: tf.Variable;
  mlpB1: tf.Variable;
  mlpW2: tf.Variable;
  mlpB2: tf.Variable;
}

export interface VitModel {
  hp: VitHyperparameters;
  tokens: number;
  vars: {
    patchW: tf.Variable; // [patch*patch, E]
    patchB: tf.Variable;
    posEmb: tf.Variable; // [tokens, E]
    blocks: BlockVars[];
    lnGamma: tf.Variable;
    lnBeta: tf.Variable;
    headW: tf.Variable; // [E, M]
    headB: tf.Variable;
  };
  trainables: tf.Variable[];
}

function glorot(rng: SplitMix64, rows: number, cols: number): tf.Tensor2D {
  const scale = Math.sqrt(6 / (rows + cols));
  return tf.tensor2d(rng.fill(rows * cols, -scale, scale), [rows, cols]);
}

export function createVit(hp: VitHyperparameters): VitModel {
  if (hp.inputSize % hp.patchSize !== 0) {
    throw new Error(`input size ${hp.inputSize} not divisible by patch size ${hp.patchSize}`);
  }
  if (hp.embedDim % hp.heads !== 0) {
    throw new Error(`embed dim ${hp.embedDim} not divisible by ${hp.heads} heads`);
  }
  const rng = new SplitMix64(hp.seed);
  const grid = hp.inputSize / hp.patchSize;
  const tokens = grid * grid;
  const patchDim = hp.patchSize * hp.patchSize;
  const makeBlock = (): BlockVars => ({
    ln1Gamma: tf.variable(tf.ones([hp.embedDim])),
    ln1Beta: tf.variable(tf.zeros([hp.embedDim])),
    wq: tf.variable(glorot(rng, hp.embedDim, hp.embedDim)),
    wk: tf.variable(glorot(rng, hp.embedDim, hp.embedDim)),
    wv: tf.variable(glorot(rng, hp.embedDim, hp.embedDim)),
    wo: tf.variable(glorot(rng, hp.embedDim, hp.embedDim)),
    ln2Gamma: tf.variable(tf.ones([hp.embedDim])),
    ln2Beta: tf.variable(tf.zeros([hp.embedDim])),
    mlpW1: tf.variable(glorot(rng, hp.embedDim, hp.mlpDim)),
    mlpB1: tf.variable(tf.zeros([hp.mlpDim])),
    mlpW2: tf.variable(glorot(rng, hp.mlpDim, hp.embedDim)),
    mlpB2: tf.variable(tf.zeros([hp.embedDim])),
  });
  const vars = {
    patchW: tf.variable(glorot(rng, patchDim, hp.embedDim)),
    patchB: tf.variable(tf.zeros([hp.embedDim])),
    posEmb: tf.variable(tf.tensor2d(rng.fill(tokens * hp.embedDim, -0.02, 0.02), [tokens, hp.embedDim])),
    blocks: Array.from({ length: hp.blocks }, makeBlock),
    lnGamma: tf.variable(tf.ones([hp.embedDim])),
    lnBeta: tf.variable(tf.zeros([hp.embedDim])),
    headW: tf.variable(glorot(rng, hp.embedDim, hp.classCount)),
    headB: tf.variable(tf.zeros([hp.classCount])),
  };
  const trainables: tf.Variable[] = [
    vars.patchW, vars.patchB, vars.posEmb, vars.lnGamma, vars.lnBeta, vars.headW, vars.headB,
    ...vars.blocks.flatMap((b) => Object.values(b)),
  ];
  return { hp, tokens, vars, trainables };
}

/** Exact GELU via the error function (tfjs has no built-in gelu op). */
function gelu(x: tf.Tensor2D): tf.Tensor2D {
  return tf.mul(tf.mul(x, 0.5), tf.add(tf.erf(tf.div(x, Math.SQRT2)), 1)) as tf.Tensor2D;
}

function layerNorm(x: tf.Tensor, gamma: tf.Variable, beta: tf.Variable): tf.Tensor {
  const mean = tf.mean(x, -1, true);
  const centered = tf.sub(x, mean);
  const variance = tf.mean(tf.square(centered), -1, true);
  return tf.add(tf.mul(tf.div(centered, tf.sqrt(tf.add(variance, 1e-5))), gamma), beta);
}

function attention(model: VitModel, block: BlockVars, x: tf.Tensor3D): tf.Tensor3D {
  const { heads, embedDim } = model.hp;
  const headDim = embedDim / heads;
  const [b, n] = [x.shape[0], x.shape[1]];
  const split = (t: tf.Tensor) =>
    tf.transpose(tf.reshape(t, [b, n, heads, headDim]), [0, 2, 1, 3]); // [B, H, N, Dh]
  const q = split(tf.matMul(x.reshape([b * n, embedDim]), block.wq as tf.Tensor2D).reshape([b, n, embedDim]));
  const k = split(tf.matMul(x.reshape([b * n, embedDim]), block.wk as tf.Tensor2D).reshape([b, n, embedDim]));
  const v = split(tf.matMul(x.reshape([b * n, embedDim]), block.wv as tf.Tensor2D).reshape([b, n, embedDim]));
  const attn = tf.softmax(tf.div(tf.matMul(q, k, false, true), Math.sqrt(headDim)));
  const ctx = tf.transpose(tf.matMul(attn, v), [0, 2, 1, 3]).reshape([b * n, embedDim]);
  return tf.matMul(ctx, block.wo as tf.Tensor2D).reshape([b, n, embedDim]) as tf.Tensor3D;
}

/** images [B, S, S, 1] -> class logits [B, M] */
export function vitForward(model: VitModel, images: tf.Tensor4D): tf.Tensor2D {
  const { inputSize, patchSize, embedDim } = model.hp;
  const grid = inputSize / patchSize;
  const b = images.shape[0];
  return tf.tidy(() => {
    // [B, S, S] -> non-overlapping patches [B, grid*grid, patch*patch]
    const patches = tf
      .reshape(images, [b, grid, patchSize, grid, patchSize])
      .transpose([0, 1, 3, 2, 4])
      .reshape([b * model.tokens, patchSize * patchSize]);
    let x = tf
      .add(tf.matMul(patches, model.vars.patchW as tf.Tensor2D), model.vars.patchB)
      .reshape([b, model.tokens, embedDim])
      .add(model.vars.posEmb) as tf.Tensor3D;
    for (const block of model.vars.blocks) {
      const attnOut = attention(model, block, layerNorm(x, block.ln1Gamma, block.ln1Beta) as tf.Tensor3D);
      x = tf.add(x, attnOut) as tf.Tensor3D;
      const mlpIn = layerNorm(x, block.ln2Gamma, block.ln2Beta).reshape([b * model.tokens, embedDim]);
      const mlpOut = tf
        .matMul(gelu(tf.add(tf.matMul(mlpIn, block.mlpW1 as tf.Tensor2D), block.mlpB1) as tf.Tensor2D),
                block.mlpW2 as tf.Tensor2D)
        .add(block.mlpB2)
        .reshape([b, model.tokens, embedDim]);
      x = tf.add(x, mlpOut) as tf.Tensor3D;
    }
    const pooled = tf.mean(layerNorm(x, model.vars.lnGamma, model.vars.lnBeta), 1) as tf.Tensor2D;
    return tf.add(tf.matMul(pooled, model.vars.headW as tf.Tensor2D), model.vars.headB) as tf.Tensor2D;
  });
}

export interface VitTrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
}

export function trainVit(
  model: VitModel,
  entries: ManifestEntry[],
  baseDir: string,
  labelIndex: Map<string, number>,
  options: VitTrainOptions,
): number {
  if (entries.length === 0) throw new Error('empty train split');
  const optimizer = tf.train.adam(options.learningRate);
  const rng = new SplitMix64(model.hp.seed + 1);
  const data = loadBatch(entries, baseDir, model.hp.inputSize, labelIndex);
  let lastLoss = NaN;
  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = rng.shuffle(entries.map((_, i) => i));
    for (let start = 0; start < order.length; start += options.batchSize) {
      const idx = tf.tensor1d(order.slice(start, start + options.batchSize), 'int32');
      const x = tf.gather(data.x, idx);
      const y = tf.gather(data.y, idx);
      const loss = optimizer.minimize(
        () =>
          tf.losses.softmaxCrossEntropy(
            tf.oneHot(y as tf.Tensor1D, model.hp.classCount),
            vitForward(model, x as tf.Tensor4D),
          ) as tf.Scalar,
        true,
        model.trainables,
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

export function vitPredict(
  model: VitModel,
  entries: ManifestEntry[],
  baseDir: string,
  labelIndex: Map<string, number>,
): number[] {
  const { x, y } = loadBatch(entries, baseDir, model.hp.inputSize, labelIndex);
  const preds = tf.tidy(() => vitForward(model, x).argMax(1));
  const out = Array.from(preds.dataSync());
  preds.dispose();
  x.dispose();
  y.dispose();
  return out;
}
