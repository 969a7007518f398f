/**
 * Media toolchain wrapper.
 *
 * All decoding goes through an external ffmpeg/ffprobe pair; the binaries
 * are injectable so environments without a system ffmpeg (or tests with a
 * stub renderer) can supply their own compatible command.
 */
import { execFile } from 'node:child_process';
import { promisify } from 'node:util';

const execFileP = promisify(execFile);

export interface Toolchain {
  ffmpeg: string;
  ffprobe: string;
}

export const DEFAULT_TOOLCHAIN: Toolchain = { ffmpeg: 'ffmpeg', ffprobe: 'ffprobe' };

export class ToolchainError extends Error {}

async function run(cmd: string, args: string[]): Promise<string> {
  try {
    const { stdout } = await execFileP(cmd, args, { maxBuffer: 16 * 1024 * 1024 });
    return stdout;
  } catch (err: any) {
    if (err?.code === 'ENOENT') {
      throw new ToolchainError(
        `media toolchain binary not found: ${cmd} (install ffmpeg or pass --ffmpeg/--ffprobe)`);
    }
    const stderr = typeof err?.stderr === 'string' ? err.stderr.slice(-400) : '';
    throw new ToolchainError(`${cmd} ${args[0] ?? ''} failed: ${stderr || err.message}`);
  }
}

/** Clip duration in seconds via ffprobe. */
export async function probeDuration(tc: Toolchain, video: string): Promise<number> {
  const out = await run(tc.ffprobe, [
    '-v', 'error',
    '-show_entries', 'format=duration',
    '-of', 'default=noprint_wrappers=1:nokey=1',
    video,
  ]);
  const seconds = parseFloat(out.trim());
  if (!isFinite(seconds)) {
    throw new ToolchainError(`ffprobe returned no duration for ${video}`);
  }
  return seconds;
}

/** 5 fps, 224x224 (aspect squashed), PNG frames frame_000.png .. frame_049.png. */
export async function extractFrames(tc: Toolchain, video: string, outDir: string,
                                    fps: number, size: number, count: number): Promise<void> {
  await run(tc.ffmpeg, [
    '-hide_banner', '-y',
    '-i', video,
    '-vf', `fps=${fps},scale=${size}:${size}`,
    '-frames:v', String(count),
    '-start_number', '0',
    `${outDir}/frame_%03d.png`,
  ]);
}

/** Stereo 16-bit PCM at 44.1 kHz. */
export async function extractAudio(tc: Toolchain, video: string, outWav: string,
                                   rateHz: number): Promise<void> {
  await run(tc.ffmpeg, [
    '-hide_banner', '-y',
    '-i', video,
    '-vn',
    '-ac', '2',
    '-ar', String(rateHz),
    '-c:a', 'pcm_s16le',
    outWav,
  ]);
}
