/**
 * Adapter configuration: which architecture, whose weights, which layer's
 * activations feed the CAM math.
 *
 * The architecture table ships the conventional defaults (input size and the
 * last convolutional feature producer for each supported backbone); both are
 * overridable per run. The stock ImageNet-style backbones reduce a 224x224
 * input by a factor of 32, giving 7x7 feature maps at the hooked layer.
 */

export type Architecture =
  | 'vgg16'
  | 'resnet50'
  | 'imcfn'
  | 'gibert'
  | 'efficientnetb0'
  | 'densenet121'
  | 'vit'
  | 'refnet'
  | 'smallcnn';

export type TargetClassPolicy = 'predicted' | 'true-label';

export interface AdapterConfig {
  architecture: Architecture;
  weightsPath: string;
  targetLayer?: string;
  inputSize?: number;
  classCount: number;
}

export interface ArchitectureDefaults {
  inputSize: number;
  targetLayer: string;
  /** spatial downsampling from input to the hooked layer */
  featureStride: number;
  featureMaps?: number;
}

export const ARCHITECTURES: Record<Architecture, ArchitectureDefaults> = {
  vgg16: { inputSize: 224, targetLayer: 'block5_conv3', featureStride: 32, featureMaps: 512 },
  resnet50: { inputSize: 224, targetLayer: 'conv5_block3_out', featureStride: 32, featureMaps: 2048 },
  imcfn: { inputSize: 224, targetLayer: 'block5_conv3', featureStride: 32, featureMaps: 512 },
  gibert: { inputSize: 224, targetLayer: 'conv_final', featureStride: 32 },
  efficientnetb0: { inputSize: 224, targetLayer: 'top_conv', featureStride: 32, featureMaps: 1280 },
  densenet121: { inputSize: 224, targetLayer: 'conv5_block16_concat', featureStride: 32, featureMaps: 1024 },
  vit: { inputSize: 224, targetLayer: 'patch_embedding', featureStride: 16 },
  // desk-scale models this adapter can actually instantiate
  refnet: { inputSize: 32, targetLayer: 'conv2_pool', featureStride: 4, featureMaps: 8 },
  smallcnn: { inputSize: 32, targetLayer: 'conv2_pool', featureStride: 4, featureMaps: 8 },
};

export function featureGridSize(arch: Architecture, inputSize?: number): number {
  const defaults = ARCHITECTURES[arch];
  const size = inputSize ?? defaults.inputSize;
  return Math.floor(size / defaults.featureStride);
}

export function resolveConfig(config: AdapterConfig): Required<AdapterConfig> {
  const defaults = ARCHITECTURES[config.architecture];
  if (!defaults) {
    const known = Object.keys(ARCHITECTURES).join(', ');
    throw new Error(`unknown architecture ${config.architecture}: expected one of ${known}`);
  }
  return {
    architecture: config.architecture,
    weightsPath: config.weightsPath,
    targetLayer: config.targetLayer ?? defaults.targetLayer,
    inputSize: config.inputSize ?? defaults.inputSize,
    classCount: config.classCount,
  };
}
