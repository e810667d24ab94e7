/** Shared test helpers: a seeded PRNG and a binary-frame builder. */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makeFrame(
  width: number,
  height: number,
  sequence: number,
  fill = 0x40
): ArrayBuffer {
  const buf = new ArrayBuffer(16 + width * height * 4);
  const view = new DataView(buf);
  view.setUint8(0, 0x46); // F
  view.setUint8(1, 0x52); // R
  view.setUint8(2, 0x4d); // M
  view.setUint8(3, 0x45); // E
  view.setUint32(4, width, true);
  view.setUint32(8, height, true);
  view.setUint32(12, sequence, true);
  new Uint8Array(buf, 16).fill(fill);
  return buf;
}
