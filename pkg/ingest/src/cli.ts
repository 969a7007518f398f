#!/usr/bin/env node
/**
 * ingest --in <dir> --out <dir> [--workers N] [--ffmpeg BIN] [--ffprobe BIN]
 *        [--split-file CSV]
 * ingest convert-backbone --weights <dir> --out <checkpoint>
 */
import { DEFAULT_JOB, extractAv } from './extract';
import { convertBackbone } from './convert';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) {
      throw new Error(`unexpected argument '${arg}'`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith('--')) {
      throw new Error(`flag ${arg} needs a value`);
    }
    flags.set(arg.slice(2), value);
    i++;
  }
  return flags;
}

function usage(): never {
  console.error('usage: ingest --in <dir> --out <dir> [--workers N] ' +
    '[--ffmpeg BIN] [--ffprobe BIN] [--split-file CSV]\n' +
    '       ingest convert-backbone --weights <dir> --out <ckpt>');
  process.exit(2);
}

async function main(): Promise<void> {
  const argv = process.argv.slice(2);
  try {
    if (argv[0] === 'convert-backbone') {
      const flags = parseFlags(argv.slice(1));
      const weights = flags.get('weights');
      const out = flags.get('out');
      if (!weights || !out) usage();
      const report = convertBackbone(weights, out);
      console.log(JSON.stringify(report, null, 1));
      return;
    }

    const flags = parseFlags(argv);
    const inputRoot = flags.get('in');
    const outputRoot = flags.get('out');
    if (!inputRoot || !outputRoot) usage();
    const result = await extractAv({
      ...DEFAULT_JOB,
      inputRoot,
      outputRoot,
      workers: flags.has('workers') ? parseInt(flags.get('workers')!, 10)
                                    : DEFAULT_JOB.workers,
      toolchain: {
        ffmpeg: flags.get('ffmpeg') ?? DEFAULT_JOB.toolchain.ffmpeg,
        ffprobe: flags.get('ffprobe') ?? DEFAULT_JOB.toolchain.ffprobe,
      },
      splitFile: flags.get('split-file'),
    });
    console.log(JSON.stringify({
      manifest: result.manifestPath,
      clips: result.rows.length,
      processed: result.processed,
      skipped: result.skipped,
      failures: result.failures,
    }, null, 1));
    if (result.failures.length > 0) {
      process.exitCode = 3;
    }
  } catch (err: any) {
    console.error(`error: ${err?.message ?? err}`);
    process.exit(err?.name === 'ToolchainError' ? 3 : 2);
  }
}

main();
