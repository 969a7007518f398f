/**
 * Batch extraction: each 10-second video becomes 50 PNG frames plus one
 * stereo 44.1 kHz WAV, all named so the training engine's loader accepts
 * them directly. Completed clips are skipped on rerun; undecodable or
 * wrong-duration clips are logged into a failures report and the job
 * continues.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import { ManifestRow, hashSplit, parseClipName, writeManifest } from './manifest';
import { DEFAULT_TOOLCHAIN, Toolchain, ToolchainError, extractAudio,
  extractFrames, probeDuration } from './toolchain';

export interface IngestJob {
  inputRoot: string;
  outputRoot: string;
  fps: number;           // 5
  frameSize: number;     // 224
  resampleHz: number;    // 44100
  workers: number;
  clipSeconds: number;   // 10
  durationTolerance: number; // +-0.2 s
  toolchain: Toolchain;
  splitFile?: string;    // optional csv: id,split
}

export const DEFAULT_JOB: Omit<IngestJob, 'inputRoot' | 'outputRoot'> = {
  fps: 5,
  frameSize: 224,
  resampleHz: 44100,
  workers: 2,
  clipSeconds: 10,
  durationTolerance: 0.2,
  toolchain: DEFAULT_TOOLCHAIN,
};

export interface ClipFailure {
  video: string;
  reason: string;
}

export interface IngestResult {
  manifestPath: string;
  rows: ManifestRow[];
  processed: number;   // clips extracted in this run
  skipped: number;     // clips already complete
  failures: ClipFailure[];
}

const VIDEO_EXTENSIONS = new Set(['.mp4', '.mov', '.mkv', '.avi', '.webm', '.video.json']);

export function framesPerClip(job: Pick<IngestJob, 'fps' | 'clipSeconds'>): number {
  return job.fps * job.clipSeconds; // 5 * 10 = 50
}

function listVideos(root: string): string[] {
  const out: string[] = [];
  const walk = (dir: string) => {
    for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
      const p = path.join(dir, entry.name);
      if (entry.isDirectory()) {
        walk(p);
      } else if ([...VIDEO_EXTENSIONS].some((ext) => entry.name.endsWith(ext))) {
        out.push(p);
      }
    }
  };
  walk(root);
  return out.sort();
}

function loadSplitFile(file: string): Map<string, 'train' | 'val'> {
  const map = new Map<string, 'train' | 'val'>();
  const lines = fs.readFileSync(file, 'utf-8').trim().split(/\r?\n/);
  for (const line of lines) {
    const [id, split] = line.split(',').map((s) => s.trim());
    if (id === 'id') continue; // optional header
    if (split !== 'train' && split !== 'val') {
      throw new Error(`${file}: split for '${id}' must be train|val, got '${split}'`);
    }
    map.set(id, split);
  }
  return map;
}

function clipComplete(framesDir: string, wavPath: string, nFrames: number): boolean {
  if (!fs.existsSync(wavPath) || !fs.existsSync(framesDir)) return false;
  for (let i = 0; i < nFrames; i++) {
    const name = `frame_${String(i).padStart(3, '0')}.png`;
    if (!fs.existsSync(path.join(framesDir, name))) return false;
  }
  return true;
}

async function processClip(job: IngestJob, video: string,
                           nFrames: number): Promise<{ row: ManifestRow; skipped: boolean }> {
  const parsed = parseClipName(path.basename(video));
  const id = path.basename(video).replace(/\.[^.]+$/, '').replace(/\.video$/, '');
  const framesRel = path.join('frames', id);
  const wavRel = path.join('audio', `${id}.wav`);
  const framesDir = path.join(job.outputRoot, framesRel);
  const wavPath = path.join(job.outputRoot, wavRel);

  const row: ManifestRow = {
    id,
    audio_path: wavRel,
    frames_dir: framesRel,
    label: parsed.label,
    city: parsed.city,
    location: parsed.location,
    split: hashSplit(id),
  };

  if (clipComplete(framesDir, wavPath, nFrames)) {
    return { row, skipped: true };
  }

  const duration = await probeDuration(job.toolchain, video);
  if (Math.abs(duration - job.clipSeconds) > job.durationTolerance) {
    throw new ToolchainError(
      `duration ${duration.toFixed(2)} s outside ${job.clipSeconds} s ` +
      `+- ${job.durationTolerance} s`);
  }

  fs.mkdirSync(framesDir, { recursive: true });
  fs.mkdirSync(path.dirname(wavPath), { recursive: true });
  await extractFrames(job.toolchain, video, framesDir, job.fps, job.frameSize, nFrames);
  await extractAudio(job.toolchain, video, wavPath, job.resampleHz);

  const missing: string[] = [];
  for (let i = 0; i < nFrames; i++) {
    const name = `frame_${String(i).padStart(3, '0')}.png`;
    if (!fs.existsSync(path.join(framesDir, name))) missing.push(name);
  }
  if (missing.length > 0) {
    throw new ToolchainError(`decoder produced ${nFrames - missing.length}/` +
      `${nFrames} frames (first missing: ${missing[0]})`);
  }
  return { row, skipped: false };
}

export async function extractAv(job: IngestJob): Promise<IngestResult> {
  const videos = listVideos(job.inputRoot);
  if (videos.length === 0) {
    throw new Error(`no video files under ${job.inputRoot}`);
  }
  fs.mkdirSync(job.outputRoot, { recursive: true });
  const nFrames = framesPerClip(job);
  const splitMap = job.splitFile ? loadSplitFile(job.splitFile) : undefined;

  const rows: ManifestRow[] = [];
  const failures: ClipFailure[] = [];
  let processed = 0;
  let skipped = 0;

  let cursor = 0;
  const worker = async () => {
    while (cursor < videos.length) {
      const video = videos[cursor++];
      try {
        const { row, skipped: wasComplete } = await processClip(job, video, nFrames);
        if (splitMap) {
          const override = splitMap.get(row.id);
          if (override) row.split = override;
        }
        rows.push(row);
        if (wasComplete) skipped++;
        else processed++;
      } catch (err: any) {
        failures.push({ video, reason: String(err?.message ?? err) });
      }
    }
  };
  await Promise.all(Array.from({ length: Math.max(1, job.workers) }, worker));

  rows.sort((a, b) => a.id.localeCompare(b.id));
  const manifestPath = path.join(job.outputRoot, 'manifest.csv');
  writeManifest(manifestPath, rows);
  const failuresPath = path.join(job.outputRoot, 'failures.json');
  fs.writeFileSync(failuresPath, JSON.stringify(failures, null, 1) + '\n');
  return { manifestPath, rows, processed, skipped, failures };
}
