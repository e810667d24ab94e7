/** Piecewise-linear transfer function model.
 *
 * A list of control points at strictly increasing positions in [0, 1], with
 * fixed endpoints at 0 and 1, rasterized to the 256-entry RGBA lookup table
 * the render service consumes.  Models are immutable: edits return new ones.
 */

export type Rgba = [number, number, number, number];

export interface ControlPoint {
  position: number;
  rgba: Rgba;
}

export const LUT_SIZE = 256;

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

function checkRgba(rgba: Rgba): void {
  if (rgba.length !== 4 || rgba.some((c) => !Number.isFinite(c) || c < 0 || c > 1)) {
    throw new Error(`rgba must be 4 finite values in [0,1], got ${JSON.stringify(rgba)}`);
  }
}

export class TfModel {
  readonly points: readonly ControlPoint[];

  constructor(points: readonly ControlPoint[]) {
    if (points.length < 2) {
      throw new Error("a transfer function needs at least 2 control points");
    }
    if (points[0].position !== 0 || points[points.length - 1].position !== 1) {
      throw new Error("control points must start at position 0 and end at 1");
    }
    for (let i = 0; i < points.length; i++) {
      const p = points[i];
      if (!Number.isFinite(p.position) || p.position < 0 || p.position > 1) {
        throw new Error(`position out of [0,1]: ${p.position}`);
      }
      if (i > 0 && p.position <= points[i - 1].position) {
        throw new Error("positions must be strictly increasing");
      }
      checkRgba(p.rgba);
    }
    this.points = points.map((p) => ({ position: p.position, rgba: [...p.rgba] as Rgba }));
  }

  /** White with alpha rising linearly from 0 to 1. */
  static ramp(): TfModel {
    return new TfModel([
      { position: 0, rgba: [1, 1, 1, 0] },
      { position: 1, rgba: [1, 1, 1, 1] },
    ]);
  }

  /** The same color and alpha everywhere. */
  static constant(rgba: Rgba): TfModel {
    return new TfModel([
      { position: 0, rgba },
      { position: 1, rgba },
    ]);
  }

  /** Insert a point; rejects positions already occupied or at the endpoints. */
  withPoint(position: number, rgba: Rgba): TfModel {
    const next = [...this.points, { position, rgba }];
    next.sort((a, b) => a.position - b.position);
    return new TfModel(next);
  }

  /** Move a point, clamping interior positions between its neighbors and
   * pinning the endpoints' positions. */
  withMovedPoint(index: number, position: number, rgba: Rgba): TfModel {
    if (index < 0 || index >= this.points.length) {
      throw new Error(`no control point ${index}`);
    }
    const next = this.points.map((p) => ({ position: p.position, rgba: p.rgba }));
    const last = this.points.length - 1;
    if (index === 0 || index === last) {
      position = index === 0 ? 0 : 1;
    } else {
      const eps = 1 / (4 * LUT_SIZE);
      const lo = this.points[index - 1].position + eps;
      const hi = this.points[index + 1].position - eps;
      position = Math.min(Math.max(position, lo), hi);
    }
    next[index] = { position, rgba };
    return new TfModel(next);
  }

  /** Remove an interior point; the endpoints always stay. */
  withoutPoint(index: number): TfModel {
    if (index <= 0 || index >= this.points.length - 1) {
      throw new Error("endpoints cannot be removed");
    }
    return new TfModel(this.points.filter((_, i) => i !== index));
  }

  /** Rasterize to LUT_SIZE RGBA rows: entry i samples the polyline at
   * position i/(LUT_SIZE-1).  Walks the segments once, filling each entry
   * range; entries landing exactly on a control point take its value. */
  rasterize(): number[][] {
    const n = LUT_SIZE - 1;
    const lut: number[][] = new Array(LUT_SIZE);
    for (let s = 0; s + 1 < this.points.length; s++) {
      const a = this.points[s];
      const b = this.points[s + 1];
      const first = Math.ceil(a.position * n);
      const last = Math.floor(b.position * n);
      for (let i = first; i <= last; i++) {
        const t = (i / n - a.position) / (b.position - a.position);
        lut[i] = a.rgba.map((c, k) => clamp01(c + (b.rgba[k] - c) * t));
      }
      // later segments overwrite shared boundary entries, so an entry at a
      // control point gets that point's exact rgba (t = 0), not a lerp tail
    }
    return lut;
  }
}
