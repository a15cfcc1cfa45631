/**
 * Scene rasterizer and minimal PNG encoder (RGB8, filter 0, zlib via
 * node).  Text uses a procedural stroke font on a 4x6 glyph grid; the
 * goal is legible labels without a font dependency, not typography.
 */
import { deflateSync } from "zlib";
import { Scene } from "./scene";

type Stroke = [number, number][];

// glyph strokes on a grid x in 0..4, y in 0..6 (y down)
const GLYPHS: Record<string, Stroke[]> = {
  " ": [],
  "0": [[[0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 1], [3, 0], [1, 0], [0, 1]] as Stroke],
  "1": [[[1, 1], [2, 0], [2, 6]] as Stroke, [[1, 6], [3, 6]] as Stroke],
  "2": [[[0, 1], [1, 0], [3, 0], [4, 1], [4, 2], [0, 6], [4, 6]] as Stroke],
  "3": [[[0, 0], [4, 0], [2, 2], [4, 4], [4, 5], [3, 6], [1, 6], [0, 5]] as Stroke],
  "4": [[[3, 6], [3, 0], [0, 4], [4, 4]] as Stroke],
  "5": [[[4, 0], [0, 0], [0, 3], [3, 3], [4, 4], [4, 5], [3, 6], [0, 6]] as Stroke],
  "6": [[[4, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 4], [3, 3], [0, 3]] as Stroke],
  "7": [[[0, 0], [4, 0], [1, 6]] as Stroke],
  "8": [[[1, 0], [3, 0], [4, 1], [4, 2], [3, 3], [1, 3], [0, 4], [0, 5], [1, 6], [3, 6], [4, 5], [4, 4], [3, 3]] as Stroke,
        [[1, 3], [0, 2], [0, 1], [1, 0]] as Stroke],
  "9": [[[0, 6], [3, 6], [4, 5], [4, 1], [3, 0], [1, 0], [0, 1], [0, 2], [1, 3], [4, 3]] as Stroke],
  "-": [[[1, 3], [3, 3]] as Stroke],
  "+": [[[2, 1], [2, 5]] as Stroke, [[0, 3], [4, 3]] as Stroke],
  ".": [[[2, 6], [2, 5]] as Stroke],
  ",": [[[2, 6], [1, 7]] as Stroke],
  "(": [[[3, 0], [2, 1], [2, 5], [3, 6]] as Stroke],
  ")": [[[1, 0], [2, 1], [2, 5], [1, 6]] as Stroke],
  "/": [[[0, 6], [4, 0]] as Stroke],
  "^": [[[1, 2], [2, 0], [3, 2]] as Stroke],
  "=": [[[0, 2], [4, 2]] as Stroke, [[0, 4], [4, 4]] as Stroke],
  "_": [[[0, 6], [4, 6]] as Stroke],
  "[": [[[3, 0], [2, 0], [2, 6], [3, 6]] as Stroke],
  "]": [[[1, 0], [2, 0], [2, 6], [1, 6]] as Stroke],
};

const UPPER: Record<string, Stroke[]> = {
  A: [[[0, 6], [2, 0], [4, 6]] as Stroke, [[1, 4], [3, 4]] as Stroke],
  B: [[[0, 6], [0, 0], [3, 0], [4, 1], [4, 2], [3, 3], [0, 3]] as Stroke,
     [[3, 3], [4, 4], [4, 5], [3, 6], [0, 6]] as Stroke],
  C: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5]] as Stroke],
  D: [[[0, 0], [0, 6], [3, 6], [4, 5], [4, 1], [3, 0], [0, 0]] as Stroke],
  E: [[[4, 0], [0, 0], [0, 6], [4, 6]] as Stroke, [[0, 3], [3, 3]] as Stroke],
  F: [[[4, 0], [0, 0], [0, 6]] as Stroke, [[0, 3], [3, 3]] as Stroke],
  G: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 3], [2, 3]] as Stroke],
  H: [[[0, 0], [0, 6]] as Stroke, [[4, 0], [4, 6]] as Stroke, [[0, 3], [4, 3]] as Stroke],
  I: [[[1, 0], [3, 0]] as Stroke, [[2, 0], [2, 6]] as Stroke, [[1, 6], [3, 6]] as Stroke],
  J: [[[4, 0], [4, 5], [3, 6], [1, 6], [0, 5]] as Stroke],
  K: [[[0, 0], [0, 6]] as Stroke, [[4, 0], [0, 3], [4, 6]] as Stroke],
  L: [[[0, 0], [0, 6], [4, 6]] as Stroke],
  M: [[[0, 6], [0, 0], [2, 3], [4, 0], [4, 6]] as Stroke],
  N: [[[0, 6], [0, 0], [4, 6], [4, 0]] as Stroke],
  O: [[[0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 1], [3, 0], [1, 0], [0, 1]] as Stroke],
  P: [[[0, 6], [0, 0], [3, 0], [4, 1], [4, 2], [3, 3], [0, 3]] as Stroke],
  Q: [[[0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 1], [3, 0], [1, 0], [0, 1]] as Stroke,
     [[3, 5], [4, 6]] as Stroke],
  R: [[[0, 6], [0, 0], [3, 0], [4, 1], [4, 2], [3, 3], [0, 3]] as Stroke, [[2, 3], [4, 6]] as Stroke],
  S: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 2], [1, 3], [3, 3], [4, 4], [4, 5], [3, 6], [1, 6], [0, 5]] as Stroke],
  T: [[[0, 0], [4, 0]] as Stroke, [[2, 0], [2, 6]] as Stroke],
  U: [[[0, 0], [0, 5], [1, 6], [3, 6], [4, 5], [4, 0]] as Stroke],
  V: [[[0, 0], [2, 6], [4, 0]] as Stroke],
  W: [[[0, 0], [1, 6], [2, 3], [3, 6], [4, 0]] as Stroke],
  X: [[[0, 0], [4, 6]] as Stroke, [[4, 0], [0, 6]] as Stroke],
  Y: [[[0, 0], [2, 3], [4, 0]] as Stroke, [[2, 3], [2, 6]] as Stroke],
  Z: [[[0, 0], [4, 0], [0, 6], [4, 6]] as Stroke],
};

for (const [ch, strokes] of Object.entries(UPPER)) {
  GLYPHS[ch] = strokes;
  // lowercase: same shapes scaled into the x-height band y in 2..6
  GLYPHS[ch.toLowerCase()] = strokes.map((s) =>
    s.map(([x, y]) => [x, 2 + (y * 4) / 6] as [number, number]),
  );
}

const FALLBACK: Stroke[] = [
  [[0, 0], [4, 0], [4, 6], [0, 6], [0, 0]] as Stroke,
];

class Raster {
  data: Buffer;

  constructor(readonly width: number, readonly height: number) {
    this.data = Buffer.alloc(width * height * 3, 0xff);
  }

  set(x: number, y: number, rgb: [number, number, number]) {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const off = (yi * this.width + xi) * 3;
    this.data[off] = rgb[0];
    this.data[off + 1] = rgb[1];
    this.data[off + 2] = rgb[2];
  }

  line(x1: number, y1: number, x2: number, y2: number,
       rgb: [number, number, number], dash = false) {
    const len = Math.hypot(x2 - x1, y2 - y1);
    const steps = Math.max(1, Math.ceil(len * 1.5));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      if (dash && Math.floor((t * len) / 5) % 2 === 1) continue;
      const x = x1 + t * (x2 - x1);
      const y = y1 + t * (y2 - y1);
      this.set(x, y, rgb);
      this.set(x + 0.5, y, rgb);
      this.set(x, y + 0.5, rgb);
    }
  }

  text(x: number, y: number, s: string, size: number,
       rgb: [number, number, number], anchor: "start" | "middle" | "end") {
    const scale = size / 8;
    const advance = 6 * scale;
    const width = s.length * advance;
    let cx = anchor === "start" ? x : anchor === "end" ? x - width : x - width / 2;
    const top = y - 6 * scale; // y is the baseline
    for (const ch of s) {
      const strokes = GLYPHS[ch] ?? FALLBACK;
      for (const stroke of strokes) {
        for (let i = 1; i < stroke.length; i++) {
          this.line(
            cx + stroke[i - 1][0] * scale, top + stroke[i - 1][1] * scale,
            cx + stroke[i][0] * scale, top + stroke[i][1] * scale, rgb);
        }
      }
      cx += advance;
    }
  }
}

function hexColor(c: string): [number, number, number] {
  const h = c.replace("#", "");
  const full = h.length === 3 ? h.split("").map((d) => d + d).join("") : h;
  return [
    parseInt(full.slice(0, 2), 16),
    parseInt(full.slice(2, 4), 16),
    parseInt(full.slice(4, 6), 16),
  ];
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(payload.length);
  const body = Buffer.concat([Buffer.from(type, "ascii"), payload]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body));
  return Buffer.concat([head, body, crc]);
}

export function encodePng(raster: Raster): Buffer {
  const { width, height, data } = raster;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // RGB
  const raw = Buffer.alloc((width * 3 + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (width * 3 + 1)] = 0; // filter type 0
    data.copy(raw, y * (width * 3 + 1) + 1, y * width * 3, (y + 1) * width * 3);
  }
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw, { level: 9 })),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

export function sceneToPng(scene: Scene): Buffer {
  const r = new Raster(scene.width, scene.height);
  for (const s of [...scene.frame, ...scene.ticks]) {
    r.line(s.x1, s.y1, s.x2, s.y2, hexColor(s.color));
  }
  for (const p of scene.polylines) {
    const rgb = hexColor(p.color);
    for (let i = 1; i < p.points.length; i++) {
      r.line(p.points[i - 1].x, p.points[i - 1].y, p.points[i].x,
             p.points[i].y, rgb, p.kind === "guide");
    }
  }
  for (const t of scene.texts) {
    r.text(t.x, t.y, t.text, t.size, hexColor(t.color), t.anchor);
  }
  return encodePng(r);
}
