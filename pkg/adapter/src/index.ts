export { readNpy, writeNpy, NpyArray } from './npy';
export { readGrayPng, writeGrayPng, GrayImage } from './png';
export { readManifest, writeManifest, ManifestEntry, Split } from './manifest';
export { SplitMix64 } from './rng';
export {
  AdapterConfig,
  Architecture,
  ARCHITECTURES,
  featureGridSize,
  resolveConfig,
  TargetClassPolicy,
} from './config';
export {
  loadRefNet,
  disposeRefNet,
  refnetFeatures,
  refnetScores,
  refnetFeatureGradients,
  nhwcToStack,
  TfRefNet,
} from './refnet';
export { exportTensors, HookedModel, ExportResult } from './export';
export {
  createSmallCnn,
  trainSmallCnn,
  predict,
  saveSmallCnn,
  loadSmallCnn,
  SmallCnn,
} from './cnn';
export { createVit, trainVit, vitForward, vitPredict, VitModel, VitHyperparameters } from './vit';
export { buildMasks, cumulativeHeatmapsFor, labelIndexOf } from './pipeline';
export * as primary from './primary';
