/** JSON Lines dataset manifests shared with the Python toolkit. */

import * as fs from 'fs';

export type Split = 'train' | 'val' | 'test';

export interface ManifestEntry {
  id: string;
  path: string;
  label: string;
  split: Split;
}

export function readManifest(path: string): ManifestEntry[] {
  const entries: ManifestEntry[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, 'utf-8').split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const obj = JSON.parse(line);
    const entry: ManifestEntry = {
      id: String(obj.id),
      path: String(obj.path),
      label: String(obj.label),
      split: (obj.split ?? 'train') as Split,
    };
    if (seen.has(entry.id)) throw new Error(`${path}:${i + 1}: duplicate manifest id ${entry.id}`);
    if (!['train', 'val', 'test'].includes(entry.split)) {
      throw new Error(`${path}:${i + 1}: bad split ${entry.split}`);
    }
    seen.add(entry.id);
    entries.push(entry);
  }
  return entries;
}

export function writeManifest(path: string, entries: ManifestEntry[]): void {
  fs.writeFileSync(path, entries.map((e) => JSON.stringify(e)).join('\n') + '\n');
}
