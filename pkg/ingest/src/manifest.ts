/**
 * Manifest rows in the exact schema the training engine loads:
 * `id,audio_path,frames_dir,label,city,location,split`.
 */
import * as fs from 'node:fs';

export const SCENE_CLASSES = [
  'airport',
  'shopping_mall',
  'metro_station',
  'pedestrian_street',
  'public_square',
  'street_traffic',
  'tram',
  'bus',
  'metro',
  'urban_park',
] as const;

export const MANIFEST_HEADER = ['id', 'audio_path', 'frames_dir', 'label', 'city',
  'location', 'split'] as const;

export interface ManifestRow {
  id: string;
  audio_path: string;
  frames_dir: string;
  label: string;
  city: string;
  location: string;
  split: 'train' | 'val';
}

export interface ParsedName {
  label: string;
  city: string;
  location: string;
  segment: string;
}

/**
 * Dataset filename convention: `<label>-<city>-<location>-<segment...>`,
 * where the label may contain underscores (e.g. street_traffic).
 */
export function parseClipName(baseName: string): ParsedName {
  const stem = baseName.replace(/\.[^.]+$/, '');
  const parts = stem.split('-');
  if (parts.length < 4) {
    throw new Error(`cannot parse clip name '${baseName}': expected ` +
      `<label>-<city>-<location>-<segment>`);
  }
  const [label, city, location, ...rest] = parts;
  if (!(SCENE_CLASSES as readonly string[]).includes(label)) {
    throw new Error(`unknown scene label '${label}' in '${baseName}'`);
  }
  return { label, city, location, segment: rest.join('-') };
}

/** Deterministic 70/30 split by id hash (djb2), stable across runs. */
export function hashSplit(id: string, trainFraction = 0.7): 'train' | 'val' {
  let h = 5381;
  for (let i = 0; i < id.length; i++) {
    h = ((h << 5) + h + id.charCodeAt(i)) >>> 0;
  }
  return (h % 1000) / 1000 < trainFraction ? 'train' : 'val';
}

export function writeManifest(path: string, rows: ManifestRow[]): void {
  const lines = [MANIFEST_HEADER.join(',')];
  for (const row of rows) {
    lines.push(MANIFEST_HEADER.map((k) => row[k]).join(','));
  }
  fs.writeFileSync(path, lines.join('\n') + '\n');
}
