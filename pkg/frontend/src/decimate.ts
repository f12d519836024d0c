/**
 * Min/max decimation for display: million-sample series reduce to one
 * (min, max) pair per pixel column, preserving every spike a full-resolution
 * plot would show.
 */

export interface Decimated {
  /** fractional source index at each column center, for axis mapping */
  x: number[];
  min: number[];
  max: number[];
}

export function decimate(values: number[], columns: number): Decimated {
  if (columns < 1) throw new Error(`columns must be >= 1, got ${columns}`);
  const n = values.length;
  if (n === 0) return { x: [], min: [], max: [] };
  if (n <= columns) {
    const idx = values.map((_, i) => i);
    return { x: idx, min: [...values], max: [...values] };
  }
  const x: number[] = [];
  const min: number[] = [];
  const max: number[] = [];
  for (let c = 0; c < columns; c++) {
    const start = Math.floor((c * n) / columns);
    const end = Math.max(start + 1, Math.floor(((c + 1) * n) / columns));
    let lo = values[start];
    let hi = values[start];
    for (let i = start + 1; i < end; i++) {
      if (values[i] < lo) lo = values[i];
      if (values[i] > hi) hi = values[i];
    }
    x.push((start + end - 1) / 2);
    min.push(lo);
    max.push(hi);
  }
  return { x, min, max };
}
