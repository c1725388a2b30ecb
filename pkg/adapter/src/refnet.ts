/**
 * TensorFlow.js re-implementation of the toolkit's reference network, built
 * from its serialized weights (NPY arrays plus a JSON descriptor).
 *
 * The forward pass mirrors the original exactly: x/255, conv3x3 'same' +
 * ReLU + 2x2 max pool (twice), then a linear head over per-map means
 * ("gap-linear") or the flattened maps ("flatten-linear"). Gradients of a
 * class score with respect to the final feature maps come from tf.grad —
 * real framework autodiff, which is the point: exports from this model fed
 * to the toolkit's CAM engine must reproduce its native heatmaps.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { readNpy } from './npy';
import { GrayImage } from './png';

export type HeadKind = 'gap-linear' | 'flatten-linear';

export interface RefNetDescriptor {
  seed: number;
  head_kind: HeadKind;
  input_size: number;
  class_count: number;
  feature_maps: number;
  feature_size: number;
}

export interface TfRefNet {
  descriptor: RefNetDescriptor;
  conv1Kernel: tf.Tensor4D; // [3, 3, 1, 4]
  conv1Bias: tf.Tensor1D;
  conv2Kernel: tf.Tensor4D; // [3, 3, 4, 8]
  conv2Bias: tf.Tensor1D;
  headWeights: tf.Tensor2D; // [M, F] or [M, F*D*D]
  headBias: tf.Tensor1D;
}

/** (Cout, Cin, kh, kw) C-order weights -> tfjs [kh, kw, Cin, Cout] kernel. */
function toTfKernel(shape: number[], data: Float32Array): tf.Tensor4D {
  const t = tf.tensor4d(data, shape as [number, number, number, number]);
  const k = tf.transpose(t, [2, 3, 1, 0]) as tf.Tensor4D;
  t.dispose();
  return k;
}

export function loadRefNet(dir: string): TfRefNet {
  const descriptor = JSON.parse(
    fs.readFileSync(path.join(dir, 'refnet.json'), 'utf-8'),
  ) as RefNetDescriptor;
  const conv1 = readNpy(path.join(dir, 'conv1_w.npy'), 4);
  const conv2 = readNpy(path.join(dir, 'conv2_w.npy'), 4);
  const headW = readNpy(path.join(dir, 'head_w.npy'), 2);
  return {
    descriptor,
    conv1Kernel: toTfKernel(conv1.shape, conv1.data),
    conv1Bias: tf.tensor1d(readNpy(path.join(dir, 'conv1_b.npy'), 1).data),
    conv2Kernel: toTfKernel(conv2.shape, conv2.data),
    conv2Bias: tf.tensor1d(readNpy(path.join(dir, 'conv2_b.npy'), 1).data),
    headWeights: tf.tensor2d(headW.data, headW.shape as [number, number]),
    headBias: tf.tensor1d(readNpy(path.join(dir, 'head_b.npy'), 1).data),
  };
}

export function disposeRefNet(net: TfRefNet): void {
  net.conv1Kernel.dispose();
  net.conv1Bias.dispose();
  net.conv2Kernel.dispose();
  net.conv2Bias.dispose();
  net.headWeights.dispose();
  net.headBias.dispose();
}

/** Convolutional trunk: image -> NHWC feature maps [1, D, D, F]. */
export function refnetFeatures(net: TfRefNet, img: GrayImage): tf.Tensor4D {
  const { input_size: size } = net.descriptor;
  if (img.width !== size || img.height !== size) {
    throw new Error(`wrong input size: expected ${size}x${size}, got ${img.width}x${img.height}`);
  }
  return tf.tidy(() => {
    let x = tf.tensor4d(Float32Array.from(img.pixels), [1, size, size, 1]).div(255) as tf.Tensor4D;
    x = tf.relu(tf.add(tf.conv2d(x, net.conv1Kernel, 1, 'same'), net.conv1Bias)) as tf.Tensor4D;
    x = tf.maxPool(x, 2, 2, 'valid');
    x = tf.relu(tf.add(tf.conv2d(x, net.conv2Kernel, 1, 'same'), net.conv2Bias)) as tf.Tensor4D;
    return tf.maxPool(x, 2, 2, 'valid');
  });
}

/** Class scores from NHWC feature maps; flattening follows (F, D1, D2) C order. */
export function refnetScores(net: TfRefNet, features: tf.Tensor4D): tf.Tensor1D {
  return tf.tidy(() => {
    let pooled: tf.Tensor2D;
    if (net.descriptor.head_kind === 'gap-linear') {
      pooled = tf.mean(features, [1, 2]) as tf.Tensor2D; // [1, F]
    } else {
      pooled = tf.transpose(features, [0, 3, 1, 2]).reshape([1, -1]) as tf.Tensor2D;
    }
    return tf
      .add(tf.matMul(pooled, net.headWeights, false, true), net.headBias)
      .squeeze([0]) as tf.Tensor1D;
  });
}

/** dScore_m/dFeatures via autodiff, same NHWC shape as the features. */
export function refnetFeatureGradients(net: TfRefNet, features: tf.Tensor4D, classIndex: number): tf.Tensor4D {
  const m = classIndex;
  if (m < 0 || m >= net.descriptor.class_count) {
    throw new Error(`class index ${m} out of range for ${net.descriptor.class_count} classes`);
  }
  const scoreOf = (feats: tf.Tensor) =>
    refnetScores(net, feats as tf.Tensor4D).gather([m]).squeeze() as tf.Scalar;
  return tf.tidy(() => tf.grad(scoreOf)(features) as tf.Tensor4D);
}

/** NHWC [1, D, D, F] tensor -> C-order (F, D1, D2) stack for NPY export. */
export function nhwcToStack(t: tf.Tensor4D): { shape: number[]; data: Float32Array } {
  const out = tf.tidy(() => tf.transpose(t, [0, 3, 1, 2]).squeeze([0]));
  const data = out.dataSync() as Float32Array;
  const shape = out.shape.slice();
  out.dispose();
  return { shape, data: Float32Array.from(data) };
}
