/**
 * Minimal deterministic ZIP writer (stored entries only).
 *
 * The training engine's checkpoints are ordinary ZIP archives with a JSON
 * manifest plus raw little-endian arrays; entries here use a fixed DOS
 * timestamp (1980-01-01) and arrive in insertion order, so converting the
 * same weights twice produces byte-identical files.
 */
import * as fs from 'node:fs';

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(buf: Uint8Array, seed = 0): number {
  let c = ~seed >>> 0;
  for (let i = 0; i < buf.length; i++) {
    c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  }
  return ~c >>> 0;
}

interface Entry {
  name: string;
  data: Buffer;
  crc: number;
  offset: number;
}

const DOS_TIME = 0;          // 00:00:00
const DOS_DATE = (1 << 5) | 1; // 1980-01-01

export class ZipWriter {
  private entries: Entry[] = [];
  private chunks: Buffer[] = [];
  private offset = 0;

  add(name: string, data: Buffer): void {
    const nameBuf = Buffer.from(name, 'utf-8');
    const crc = crc32(data);
    const header = Buffer.alloc(30);
    header.writeUInt32LE(0x04034b50, 0);
    header.writeUInt16LE(20, 4);          // version needed
    header.writeUInt16LE(0, 6);           // flags
    header.writeUInt16LE(0, 8);           // method: stored
    header.writeUInt16LE(DOS_TIME, 10);
    header.writeUInt16LE(DOS_DATE, 12);
    header.writeUInt32LE(crc, 14);
    header.writeUInt32LE(data.length, 18);
    header.writeUInt32LE(data.length, 22);
    header.writeUInt16LE(nameBuf.length, 26);
    header.writeUInt16LE(0, 28);          // extra length
    this.entries.push({ name, data, crc, offset: this.offset });
    this.chunks.push(header, nameBuf, data);
    this.offset += header.length + nameBuf.length + data.length;
  }

  finish(): Buffer {
    const centralStart = this.offset;
    for (const e of this.entries) {
      const nameBuf = Buffer.from(e.name, 'utf-8');
      const rec = Buffer.alloc(46);
      rec.writeUInt32LE(0x02014b50, 0);
      rec.writeUInt16LE(20, 4);           // version made by
      rec.writeUInt16LE(20, 6);           // version needed
      rec.writeUInt16LE(0, 8);
      rec.writeUInt16LE(0, 10);           // stored
      rec.writeUInt16LE(DOS_TIME, 12);
      rec.writeUInt16LE(DOS_DATE, 14);
      rec.writeUInt32LE(e.crc, 16);
      rec.writeUInt32LE(e.data.length, 20);
      rec.writeUInt32LE(e.data.length, 24);
      rec.writeUInt16LE(nameBuf.length, 28);
      rec.writeUInt16LE(0, 30);           // extra
      rec.writeUInt16LE(0, 32);           // comment
      rec.writeUInt16LE(0, 34);           // disk
      rec.writeUInt16LE(0, 36);           // internal attrs
      rec.writeUInt32LE(0o644 << 16, 38); // external attrs
      rec.writeUInt32LE(e.offset, 42);
      this.chunks.push(rec, nameBuf);
      this.offset += rec.length + nameBuf.length;
    }
    const end = Buffer.alloc(22);
    end.writeUInt32LE(0x06054b50, 0);
    end.writeUInt16LE(0, 4);
    end.writeUInt16LE(0, 6);
    end.writeUInt16LE(this.entries.length, 8);
    end.writeUInt16LE(this.entries.length, 10);
    end.writeUInt32LE(this.offset - centralStart, 12);
    end.writeUInt32LE(centralStart, 16);
    end.writeUInt16LE(0, 20);
    this.chunks.push(end);
    return Buffer.concat(this.chunks);
  }

  writeTo(path: string): void {
    fs.writeFileSync(path, this.finish());
  }
}
