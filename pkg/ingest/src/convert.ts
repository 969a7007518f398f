/**
 * VGG16 weight conversion.
 *
 * Input: a directory holding `weights_manifest.json` plus one raw
 * little-endian float32 blob per tensor (the documented interchange
 * format exported offline from the published places365 weights; see
 * docs/vgg16_conversion.md in the main package).
 *
 * Output: a checkpoint archive the engine's `load_vgg16_backbone` accepts:
 * 13 convolution layers as `convX_Y/kernel` + `convX_Y/bias`, all frozen.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import { ZipWriter, crc32 } from './zipfile';

/** conv layer table: name, in channels, out channels (3x3 kernels). */
export const VGG16_LAYERS: Array<[string, number, number]> = [
  ['conv1_1', 3, 64], ['conv1_2', 64, 64],
  ['conv2_1', 64, 128], ['conv2_2', 128, 128],
  ['conv3_1', 128, 256], ['conv3_2', 256, 256], ['conv3_3', 256, 256],
  ['conv4_1', 256, 512], ['conv4_2', 512, 512], ['conv4_3', 512, 512],
  ['conv5_1', 512, 512], ['conv5_2', 512, 512], ['conv5_3', 512, 512],
];

export class ConversionError extends Error {}

interface TensorRef {
  file: string;
  shape: number[];
  dtype: string;
}

interface SourceLayer {
  name: string;
  kernel: TensorRef;
  bias: TensorRef;
}

interface SourceManifest {
  format: string;
  layers: SourceLayer[];
}

export interface LayerReport {
  name: string;
  kernel_shape: number[];
  bias_shape: number[];
  kernel_crc32: string;
  bias_crc32: string;
}

export interface ConversionReport {
  checkpoint: string;
  total_parameters: number;
  layers: LayerReport[];
}

function shapeEquals(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

function product(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function readTensor(root: string, layer: string, what: string,
                    ref: TensorRef, wantShape: number[]): Buffer {
  if (ref.dtype !== 'float32') {
    throw new ConversionError(`${layer}/${what}: dtype must be float32, got ${ref.dtype}`);
  }
  if (!shapeEquals(ref.shape, wantShape)) {
    throw new ConversionError(`${layer}/${what}: shape [${ref.shape}] != ` +
      `expected [${wantShape}]`);
  }
  const file = path.join(root, ref.file);
  if (!fs.existsSync(file)) {
    throw new ConversionError(`${layer}/${what}: missing blob ${ref.file}`);
  }
  const data = fs.readFileSync(file);
  if (data.length !== product(wantShape) * 4) {
    throw new ConversionError(`${layer}/${what}: blob holds ${data.length} bytes, ` +
      `expected ${product(wantShape) * 4}`);
  }
  return data;
}

export function convertBackbone(sourceDir: string, outCheckpoint: string): ConversionReport {
  const manifestPath = path.join(sourceDir, 'weights_manifest.json');
  if (!fs.existsSync(manifestPath)) {
    throw new ConversionError(`no weights_manifest.json under ${sourceDir}`);
  }
  const source: SourceManifest = JSON.parse(fs.readFileSync(manifestPath, 'utf-8'));
  const byName = new Map(source.layers.map((l) => [l.name, l]));

  const params: object[] = [];
  const blobs: Array<[string, Buffer]> = [];
  const report: LayerReport[] = [];
  let total = 0;
  let index = 0;

  for (const [name, cin, cout] of VGG16_LAYERS) {
    const layer = byName.get(name);
    if (!layer) {
      throw new ConversionError(`source is missing layer '${name}'`);
    }
    const kernelShape = [3, 3, cin, cout];
    const biasShape = [cout];
    const kernel = readTensor(sourceDir, name, 'kernel', layer.kernel, kernelShape);
    const bias = readTensor(sourceDir, name, 'bias', layer.bias, biasShape);
    for (const [what, shape, data] of [['kernel', kernelShape, kernel],
                                       ['bias', biasShape, bias]] as const) {
      const member = `arrays/${String(index).padStart(5, '0')}.bin`;
      index += 1;
      params.push({
        path: `${name}/${what}`,
        shape,
        dtype: 'float32',
        trainable: false,
        file: member,
      });
      blobs.push([member, data]);
      total += product(shape);
    }
    report.push({
      name,
      kernel_shape: kernelShape,
      bias_shape: biasShape,
      kernel_crc32: crc32(kernel).toString(16).padStart(8, '0'),
      bias_crc32: crc32(bias).toString(16).padStart(8, '0'),
    });
  }

  const manifest = {
    extra: {
      converted_by: 'avscene-ingest',
      model: 'vgg16_backbone',
      source_format: source.format ?? 'unknown',
    },
    format_version: 1,
    params,
    seed: null,
  };
  const zip = new ZipWriter();
  zip.add('manifest.json', Buffer.from(JSON.stringify(manifest, null, 1)));
  for (const [member, data] of blobs) {
    zip.add(member, data);
  }
  fs.mkdirSync(path.dirname(path.resolve(outCheckpoint)), { recursive: true });
  zip.writeTo(outCheckpoint);
  return { checkpoint: outCheckpoint, total_parameters: total, layers: report };
}
