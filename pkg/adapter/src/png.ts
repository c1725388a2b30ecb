/** 8-bit grayscale PNG io over pngjs, matching the toolkit's image format. */

import * as fs from 'fs';
import { PNG } from 'pngjs';

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major, one byte per pixel
}

export function readGrayPng(path: string): GrayImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const pixels = new Uint8Array(png.width * png.height);
  for (let i = 0; i < pixels.length; i++) {
    // pngjs expands everything to RGBA; gray images have R = G = B
    pixels[i] = png.data[i * 4];
  }
  return { width: png.width, height: png.height, pixels };
}

export function writeGrayPng(path: string, img: GrayImage): void {
  const png = new PNG({ width: img.width, height: img.height, colorType: 0 });
  for (let i = 0; i < img.pixels.length; i++) {
    const v = img.pixels[i];
    png.data[i * 4] = v;
    png.data[i * 4 + 1] = v;
    png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png, { colorType: 0 }));
}
